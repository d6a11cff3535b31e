//! Model selection over a family of classes by a train/test split of
//! uniformly sampled data.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{argmin_lowest, DeterministicPolicy, FnIdx, FunctionClass, LabeledDataset};
use crate::environment::{run_sampler, Environment};
use crate::error::{Error, Result};
use crate::evaluation::{simple_regret, RegretReport};
use crate::planning::uniform_plan;
use crate::regression::{
    least_squares, required_samples_uniform, squared_loss, CalibrationConstants, ConfidenceConfig,
};
use crate::rng::SamplerStreams;

/// Candidate classes over shared context and action spaces.
#[derive(Debug, Clone)]
pub struct ModelFamily {
    classes: Vec<FunctionClass>,
    true_index_hint: Option<usize>,
}

impl ModelFamily {
    pub fn new(classes: Vec<FunctionClass>, true_index_hint: Option<usize>) -> Result<Self> {
        let Some(first) = classes.first() else {
            return Err(Error::validation("model family", "needs at least one class"));
        };
        for (i, c) in classes.iter().enumerate().skip(1) {
            if c.contexts() != first.contexts() || c.actions() != first.actions() {
                return Err(Error::validation(
                    "model family",
                    format!("class {i} does not share the spaces of class 0"),
                ));
            }
            if c.range_bound() != first.range_bound() {
                return Err(Error::validation(
                    "model family",
                    format!("class {i} has a different range bound"),
                ));
            }
        }
        if let Some(i) = true_index_hint {
            if i >= classes.len() {
                return Err(Error::Index {
                    kind: "class",
                    index: i,
                    size: classes.len(),
                });
            }
        }
        Ok(Self {
            classes,
            true_index_hint,
        })
    }

    pub fn classes(&self) -> &[FunctionClass] {
        &self.classes
    }

    pub fn class(&self, i: usize) -> &FunctionClass {
        &self.classes[i]
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn true_index_hint(&self) -> Option<usize> {
        self.true_index_hint
    }

    /// The one-class family `{F_i}`, as used by the oracle told `i*`.
    pub fn single(&self, i: usize) -> Result<Self> {
        if i >= self.len() {
            return Err(Error::Index {
                kind: "class",
                index: i,
                size: self.len(),
            });
        }
        Self::new(vec![self.classes[i].clone()], Some(0))
    }
}

/// First `⌊T/2⌋` records train, the rest test.
pub fn split_dataset(data: &LabeledDataset) -> Result<(LabeledDataset, LabeledDataset)> {
    if data.len() < 2 {
        return Err(Error::validation(
            "model-selection split",
            format!("need at least 2 records, got {}", data.len()),
        ));
    }
    let (train, test) = data.records().split_at(data.len() / 2);
    Ok((
        LabeledDataset::from_records(train.to_vec()),
        LabeledDataset::from_records(test.to_vec()),
    ))
}

/// Least-squares fit of every class on `train`.
pub fn fit_all(family: &ModelFamily, train: &LabeledDataset) -> Vec<FnIdx> {
    family
        .classes
        .par_iter()
        .map(|c| least_squares(c, train.records()))
        .collect()
}

/// Test squared loss of each fitted model.
pub fn test_losses(family: &ModelFamily, fits: &[FnIdx], test: &LabeledDataset) -> Vec<f64> {
    family
        .classes
        .iter()
        .zip(fits)
        .map(|(c, &f)| squared_loss(c, f, test.records()))
        .collect()
}

/// `argmin_i` test loss, ties to the lowest index.
pub fn select_index(family: &ModelFamily, fits: &[FnIdx], test: &LabeledDataset) -> usize {
    argmin_lowest(&test_losses(family, fits, test))
}

/// `E_{x∼P, a∼Unif}[(f*(x,a) − f(x,a))²]`, computed exactly.
pub fn population_loss(class: &FunctionClass, f: FnIdx, env: &Environment) -> f64 {
    let na = env.n_actions();
    let table = class.table(f);
    env.dist()
        .probs()
        .iter()
        .enumerate()
        .map(|(x, &p)| {
            let row = &table[x * na..(x + 1) * na];
            let sq: f64 = row
                .iter()
                .enumerate()
                .map(|(a, v)| (env.mean(x, a) - v).powi(2))
                .sum();
            p * sq / na as f64
        })
        .sum()
}

/// `C ln(T max(M, |F_{i*}|) / δ) / T`.
pub fn loss_envelope(c: f64, t: usize, n_classes: usize, true_class_size: usize, delta: f64) -> f64 {
    let k = n_classes.max(true_class_size) as f64;
    c * (t as f64 * k / delta).ln() / t as f64
}

/// How the class index is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Selector {
    /// Argmin of held-out squared loss.
    TestLoss,
    /// Target accuracy known in advance: the largest class whose
    /// uniform-strategy sample requirement is met by `T`, fit on all `T`
    /// samples. Falls back to class 0 when none is affordable.
    EpsKnown {
        eps: f64,
        confidence: ConfidenceConfig,
        constants: CalibrationConstants,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModselReport {
    pub selected: usize,
    pub fits: Vec<FnIdx>,
    /// Empty for the ε-known selector.
    pub test_losses: Vec<f64>,
    /// Exact population loss of every fitted model.
    pub population_losses: Vec<f64>,
    pub regret: RegretReport,
    pub samples: usize,
}

impl ModselReport {
    pub fn selected_population_loss(&self) -> f64 {
        self.population_losses[self.selected]
    }
}

fn eps_known_index(
    family: &ModelFamily,
    t: usize,
    eps: f64,
    confidence: &ConfidenceConfig,
    constants: &CalibrationConstants,
) -> Result<usize> {
    let mut chosen = 0;
    for (i, c) in family.classes.iter().enumerate() {
        let need = required_samples_uniform(confidence, constants, c.len(), c.n_actions(), eps)?;
        if t as u64 >= need {
            chosen = i;
        }
    }
    Ok(chosen)
}

/// Uniform plan for `t` steps, split, per-class fits, selection, and the
/// greedy policy of the selected fit.
pub fn modsel_pipeline(
    family: &ModelFamily,
    env: &Environment,
    t: usize,
    streams: &mut SamplerStreams,
    selector: &Selector,
) -> Result<(DeterministicPolicy, usize, ModselReport)> {
    if t < 2 {
        return Err(Error::validation("model selection", format!("need T ≥ 2, got {t}")));
    }
    let first = family.class(0);
    env.check_compatible(first)?;
    let data = run_sampler(env, &uniform_plan(t)?, first, streams)?;

    let (selected, fits, losses) = match selector {
        Selector::TestLoss => {
            let (train, test) = split_dataset(&data)?;
            let fits = fit_all(family, &train);
            let losses = test_losses(family, &fits, &test);
            (argmin_lowest(&losses), fits, losses)
        }
        Selector::EpsKnown {
            eps,
            confidence,
            constants,
        } => {
            let i = eps_known_index(family, t, *eps, confidence, constants)?;
            (i, fit_all(family, &data), Vec::new())
        }
    };
    let population_losses = family
        .classes
        .iter()
        .zip(&fits)
        .map(|(c, &f)| population_loss(c, f, env))
        .collect();
    let policy = family.class(selected).greedy_policy(fits[selected]);
    let regret = simple_regret(&policy, env)?;
    Ok((
        policy,
        selected,
        ModselReport {
            selected,
            fits,
            test_losses: losses,
            population_losses,
            regret,
            samples: data.len(),
        },
    ))
}
