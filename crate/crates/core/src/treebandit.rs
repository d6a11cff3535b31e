//! Binary-tree structured bandit: the tree action set, the path-indexed
//! function class, adaptive tree descent, the leaf-sequence eluder
//! certificate, and the static-vs-adaptive gap experiment.
//!
//! Nodes are numbered level-major in heap order: node `k` has children
//! `2k + 1` and `2k + 2`; level `l` (1-based) holds nodes
//! `2^{l-1} − 1 .. 2^l − 1`. Function `j` is the path ending at leaf `j`.
//!
//! `f^(p)(a) = 1` at the path's leaf, `1 − 2ε` elsewhere on the path and
//! `1 − 12ε` off the path.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{
    ActionIdx, ActionSpace, ContextDist, ContextSpace, DeterministicPolicy, FnIdx, FunctionClass,
    LabeledDataset, Query, Sample,
};
use crate::eluder::{eps_dependent, EluderCertificate};
use crate::environment::{run_sampler, sample_reward, Environment, NoiseModel};
use crate::error::{Error, Result};
use crate::evaluation::{extract_eluder_policy, extract_greedy_policy, simple_regret};
use crate::planning::eluder_plan;
use crate::regression::ConfidenceConfig;
use crate::rng::{Purpose, Substreams};

/// Heights above this would need more than a million actions.
pub const MAX_HEIGHT: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeClassSpec {
    pub height: u32,
    pub eps: f64,
}

impl TreeClassSpec {
    /// Requires `2 ≤ height ≤ MAX_HEIGHT` and `0 < eps ≤ 1/6`, which keeps
    /// every value in `[−1, 1]` so `B = 1`.
    pub fn new(height: u32, eps: f64) -> Result<Self> {
        let spec = Self { height, eps };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=MAX_HEIGHT).contains(&self.height) {
            return Err(Error::validation(
                "tree spec",
                format!("height {} not in 2..={MAX_HEIGHT}", self.height),
            ));
        }
        if !(self.eps > 0.0 && self.eps <= 1.0 / 6.0) {
            return Err(Error::validation(
                "tree spec",
                format!("eps {} not in (0, 1/6]", self.eps),
            ));
        }
        Ok(())
    }

    pub fn n_nodes(&self) -> usize {
        (1usize << self.height) - 1
    }

    pub fn n_leaves(&self) -> usize {
        1usize << (self.height - 1)
    }

    pub fn first_leaf(&self) -> ActionIdx {
        self.n_leaves() - 1
    }

    /// Heap index of `a_{level, i}` (both 1-based).
    pub fn node(&self, level: u32, i: usize) -> ActionIdx {
        (1usize << (level - 1)) - 1 + (i - 1)
    }

    pub fn is_leaf(&self, a: ActionIdx) -> bool {
        a >= self.first_leaf() && a < self.n_nodes()
    }

    /// Root-to-leaf path of function `j`.
    pub fn path(&self, j: FnIdx) -> Vec<ActionIdx> {
        let mut node = self.first_leaf() + j;
        let mut path = vec![node];
        while node > 0 {
            node = (node - 1) / 2;
            path.push(node);
        }
        path.reverse();
        path
    }

    /// Node-level budget of the static lower bound: `⌊2^{L−5} / (9ε²)⌋`.
    pub fn static_failure_budget(&self) -> u64 {
        (2f64.powi(self.height as i32 - 5) / (9.0 * self.eps * self.eps)).floor() as u64
    }

    /// Adaptive success budget: `⌈2L ln(2L/ε) / ε²⌉`.
    pub fn adaptive_budget(&self) -> u64 {
        let l = self.height as f64;
        (2.0 * l * (2.0 * l / self.eps).ln() / (self.eps * self.eps)).ceil() as u64
    }

    /// Samples per node for a total budget: `⌊T / (2(L−1))⌋`, at least 1.
    pub fn samples_per_node(&self, budget: u64) -> usize {
        ((budget / (2 * (self.height as u64 - 1))) as usize).max(1)
    }
}

/// The tree action space with its function class (singleton context space).
#[derive(Debug, Clone)]
pub struct TreeClass {
    pub spec: TreeClassSpec,
    pub class: FunctionClass,
}

impl TreeClass {
    /// Leaf `(∅, a_{L,i})` queries in natural order.
    pub fn leaf_queries(&self) -> Vec<Query> {
        (0..self.spec.n_leaves())
            .map(|j| Query::new(0, self.spec.first_leaf() + j))
            .collect()
    }

    /// The optimal action of function `j`.
    pub fn leaf_of(&self, j: FnIdx) -> ActionIdx {
        self.spec.first_leaf() + j
    }
}

pub fn build_tree_class(spec: &TreeClassSpec) -> Result<TreeClass> {
    spec.validate()?;
    let n_nodes = spec.n_nodes();
    let on_path = 1.0 - 2.0 * spec.eps;
    let off_path = 1.0 - 12.0 * spec.eps;
    let mut values = Vec::with_capacity(spec.n_leaves() * n_nodes);
    for j in 0..spec.n_leaves() {
        let mut row = vec![off_path; n_nodes];
        for a in spec.path(j) {
            row[a] = on_path;
        }
        row[spec.first_leaf() + j] = 1.0;
        values.extend(row);
    }
    let names = (1..=spec.height)
        .flat_map(|l| (1..=(1usize << (l - 1))).map(move |i| format!("a{l},{i}")))
        .collect();
    let class = FunctionClass::new(
        ContextSpace::singleton(),
        ActionSpace::new(names)?,
        values,
        1.0,
    )?;
    Ok(TreeClass { spec: *spec, class })
}

/// Result of one adaptive descent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescentOutcome {
    pub leaf: ActionIdx,
    pub samples: usize,
}

fn check_tree_env(tree: &TreeClass, env: &Environment) -> Result<()> {
    env.check_compatible(&tree.class)
        .map_err(|_| Error::validation("adaptive tree sampling", "environment is not on a tree action set"))?;
    let matches = (0..tree.class.len()).any(|j| tree.class.table(j) == env.mean_table());
    if !matches {
        return Err(Error::validation(
            "adaptive tree sampling",
            "environment mean is not a member of the tree class",
        ));
    }
    Ok(())
}

/// Descends from the root for `L − 1` rounds, sampling each child `m` times
/// and moving to the child with the higher empirical mean (ties go left).
pub fn adaptive_tree_sampling<R: Rng + ?Sized>(
    tree: &TreeClass,
    env: &Environment,
    m: usize,
    rng: &mut R,
) -> Result<DescentOutcome> {
    check_tree_env(tree, env)?;
    if m == 0 {
        return Err(Error::validation("adaptive tree sampling", "need m ≥ 1"));
    }
    let mut node = 0;
    let mut samples = 0;
    for _ in 1..tree.spec.height {
        let (left, right) = (2 * node + 1, 2 * node + 2);
        let mut mean = |a: ActionIdx| {
            (0..m).map(|_| sample_reward(env, 0, a, rng)).sum::<f64>() / m as f64
        };
        let (l, r) = (mean(left), mean(right));
        samples += 2 * m;
        node = if r > l { right } else { left };
    }
    Ok(DescentOutcome {
        leaf: node,
        samples,
    })
}

/// Certifies `d_eluder(F_tree, ε) ≥ 2^{L−1} − 1` with the leaf sequence
/// `a_{L,1}, …, a_{L,2^{L−1}−1}`, replaying the brute-force dependence check
/// at every step.
pub fn tree_eluder_certificate(spec: &TreeClassSpec) -> Result<EluderCertificate> {
    tree_eluder_certificate_at(spec, spec.eps)
}

/// Same sequence, verified at tolerance `eps` (valid for any `eps < 12ε`).
pub fn tree_eluder_certificate_at(spec: &TreeClassSpec, eps: f64) -> Result<EluderCertificate> {
    let tree = build_tree_class(spec)?;
    let points: Vec<Query> = tree.leaf_queries()[..spec.n_leaves() - 1].to_vec();
    for n in 0..points.len() {
        if eps_dependent(&tree.class, points[n], &points[..n], eps) {
            return Err(Error::Consistency(format!(
                "leaf {} is {eps}-dependent on its {n} predecessors",
                n + 1
            )));
        }
    }
    Ok(EluderCertificate {
        verified_length: points.len(),
        points,
        epsilon: eps,
    })
}

/// Round-robin allocation of `budget` pulls over the leaves, remainder to
/// the lowest leaves.
pub fn round_robin_leaves(spec: &TreeClassSpec, budget: usize) -> Vec<ActionIdx> {
    (0..budget)
        .map(|i| spec.first_leaf() + i % spec.n_leaves())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    StaticUniformLeaves,
    StaticEluder,
    Adaptive,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [
        Strategy::StaticUniformLeaves,
        Strategy::StaticEluder,
        Strategy::Adaptive,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::StaticUniformLeaves => "static-uniform-leaves",
            Strategy::StaticEluder => "static-eluder",
            Strategy::Adaptive => "adaptive",
        }
    }
}

/// Sample budgets for the gap experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapBudgets {
    /// Budget of both static strategies.
    pub static_budget: u64,
    /// Budget of adaptive tree sampling.
    pub adaptive_budget: u64,
}

impl GapBudgets {
    /// Default budgets: failure threshold for static, success
    /// threshold for adaptive.
    pub fn from_spec(spec: &TreeClassSpec) -> Self {
        Self {
            static_budget: spec.static_failure_budget(),
            adaptive_budget: spec.adaptive_budget(),
        }
    }
}

/// Per-trial outcome of the gap experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapTrial {
    pub trial: u64,
    pub f_star: FnIdx,
    pub strategy: Strategy,
    pub budget: u64,
    pub samples_used: usize,
    pub simple_regret: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySummary {
    pub strategy: Strategy,
    pub budget: u64,
    pub trials: usize,
    pub success_rate: f64,
    pub mean_regret: f64,
    pub std_regret: f64,
}

/// Aggregate of the gap experiment. The average is over `f*` drawn uniformly
/// from the class, which is weaker than the worst-case `f*` of the lower
/// bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub height: u32,
    pub eps: f64,
    pub strategies: Vec<StrategySummary>,
    pub trials: Vec<GapTrial>,
}

impl GapReport {
    pub fn summary(&self, strategy: Strategy) -> Option<&StrategySummary> {
        self.strategies.iter().find(|s| s.strategy == strategy)
    }
}

/// Settings for [`gap_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct GapSettings {
    pub trials: usize,
    pub budgets: GapBudgets,
    pub noise: NoiseModel,
    /// β schedule of the static eluder strategy.
    pub confidence: ConfidenceConfig,
    pub strategies: Vec<Strategy>,
}

fn summarize(strategy: Strategy, budget: u64, eps: f64, regrets: &[f64]) -> StrategySummary {
    let n = regrets.len() as f64;
    let mean = regrets.iter().sum::<f64>() / n;
    let var = if regrets.len() > 1 {
        regrets.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    StrategySummary {
        strategy,
        budget,
        trials: regrets.len(),
        success_rate: regrets.iter().filter(|&&r| r <= eps).count() as f64 / n,
        mean_regret: mean,
        std_regret: var.sqrt(),
    }
}

fn run_gap_trial(
    tree: &TreeClass,
    settings: &GapSettings,
    streams: &Substreams,
    trial: u64,
) -> Result<Vec<GapTrial>> {
    let spec = &tree.spec;
    let class = &tree.class;
    let f_star = streams
        .rng(trial, Purpose::TrueFunction)
        .random_range(0..class.len());
    let env = Environment::from_class(
        class,
        f_star,
        ContextDist::point_mass(0, 1)?,
        settings.noise,
    )?;
    let mut out = Vec::with_capacity(settings.strategies.len());
    for &strategy in &settings.strategies {
        let (budget, used, regret) = match strategy {
            Strategy::StaticUniformLeaves => {
                let budget = settings.budgets.static_budget;
                let pulls = round_robin_leaves(spec, budget as usize);
                let mut rng = streams.rng(trial, Purpose::Rewards);
                let data = LabeledDataset::from_records(
                    pulls
                        .iter()
                        .map(|&a| Sample {
                            context: 0,
                            action: a,
                            reward: sample_reward(&env, 0, a, &mut rng),
                        })
                        .collect(),
                );
                let policy = extract_greedy_policy(class, &data)?;
                (budget, data.len(), simple_regret(&policy, &env)?.simple_regret)
            }
            Strategy::StaticEluder => {
                let budget = settings.budgets.static_budget as usize;
                if budget == 0 {
                    let policy = extract_greedy_policy(class, &LabeledDataset::new())?;
                    (0, 0, simple_regret(&policy, &env)?.simple_regret)
                } else {
                    let plan = eluder_plan(class, &vec![0; budget], budget, &settings.confidence)?;
                    let data = run_sampler(&env, &plan, class, &mut streams.sampler(trial))?;
                    let policy = extract_eluder_policy(class, &data, &settings.confidence)?;
                    (budget as u64, data.len(), simple_regret(&policy, &env)?.simple_regret)
                }
            }
            Strategy::Adaptive => {
                let budget = settings.budgets.adaptive_budget;
                let m = spec.samples_per_node(budget);
                let mut rng = streams.rng(trial, Purpose::Adaptive);
                let outcome = adaptive_tree_sampling(tree, &env, m, &mut rng)?;
                let policy = DeterministicPolicy::constant(outcome.leaf, 1);
                (budget, outcome.samples, simple_regret(&policy, &env)?.simple_regret)
            }
        };
        out.push(GapTrial {
            trial,
            f_star,
            strategy,
            budget,
            samples_used: used,
            simple_regret: regret,
        });
    }
    Ok(out)
}

/// Runs every requested strategy on `trials` independent draws of `f*`.
/// Trials run in parallel; results are ordered by trial.
pub fn gap_experiment(
    spec: &TreeClassSpec,
    settings: &GapSettings,
    streams: &Substreams,
) -> Result<GapReport> {
    if settings.trials == 0 {
        return Err(Error::validation("gap experiment", "need at least one trial"));
    }
    settings.noise.validate()?;
    let tree = build_tree_class(spec)?;
    let per_trial: Vec<Vec<GapTrial>> = (0..settings.trials as u64)
        .into_par_iter()
        .map(|trial| run_gap_trial(&tree, settings, streams, trial))
        .collect::<Result<_>>()?;
    let trials: Vec<GapTrial> = per_trial.into_iter().flatten().collect();
    let strategies = settings
        .strategies
        .iter()
        .map(|&s| {
            let regrets: Vec<f64> = trials
                .iter()
                .filter(|t| t.strategy == s)
                .map(|t| t.simple_regret)
                .collect();
            let budget = trials.iter().find(|t| t.strategy == s).map_or(0, |t| t.budget);
            summarize(s, budget, spec.eps, &regrets)
        })
        .collect();
    Ok(GapReport {
        height: spec.height,
        eps: spec.eps,
        strategies,
        trials,
    })
}
