//! Candidate policies from sampled data, and exact simple regret.

use serde::{Deserialize, Serialize};

use crate::domain::{
    argmax_lowest, ActionIdx, ContextIdx, DeterministicPolicy, FnIdx, FunctionClass,
    LabeledDataset, MixturePolicy, Query,
};
use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::norms::{mixture_value_on, optimal_value_on, policy_value_on, PairwiseNorms};
use crate::regression::{least_squares, ConfidenceConfig, LeastSquaresTracker};

/// Exact simple regret of a candidate policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegretReport {
    pub policy_value: f64,
    pub optimal_value: f64,
    pub simple_regret: f64,
}

/// Functions within data-norm distance `beta` of `center` on `data`.
pub fn confidence_ball(
    class: &FunctionClass,
    center: FnIdx,
    data: &[Query],
    beta: f64,
) -> Vec<FnIdx> {
    let norms = PairwiseNorms::from_dataset(class, data);
    ball_from_row(norms.row(center), beta)
}

fn ball_from_row(row: &[f64], beta: f64) -> Vec<FnIdx> {
    let b2 = beta * beta;
    row.iter()
        .enumerate()
        .filter(|(_, &sq)| sq <= b2)
        .map(|(f, _)| f)
        .collect()
}

/// `argmax_a max_{f ∈ ball} f(x, a)`, ties to the lowest action.
pub fn optimistic_action_in_ball(class: &FunctionClass, ball: &[FnIdx], x: ContextIdx) -> ActionIdx {
    let upper: Vec<f64> = (0..class.n_actions())
        .map(|a| {
            ball.iter()
                .map(|&f| class.value(f, x, a))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    argmax_lowest(&upper)
}

/// Optimistic action at `x` for the ball `{f : ‖f − f̂‖_D ≤ β}`.
pub fn optimistic_action(
    class: &FunctionClass,
    f_hat: FnIdx,
    data: &[Query],
    beta: f64,
    x: ContextIdx,
) -> Result<ActionIdx> {
    class.check_fn(f_hat)?;
    class.check_context(x)?;
    if !(beta >= 0.0) {
        return Err(Error::validation("optimism radius", format!("beta {beta} must be ≥ 0")));
    }
    Ok(optimistic_action_in_ball(
        class,
        &confidence_ball(class, f_hat, data, beta),
        x,
    ))
}

fn optimistic_policy(class: &FunctionClass, ball: &[FnIdx]) -> DeterministicPolicy {
    DeterministicPolicy::new(
        (0..class.n_contexts())
            .map(|x| optimistic_action_in_ball(class, ball, x))
            .collect(),
    )
}

/// Per-step ingredients of the optimistic mixture, exposed for diagnostics.
#[derive(Debug, Clone)]
pub struct OptimisticStep {
    pub t: usize,
    pub f_hat: FnIdx,
    pub beta: f64,
    pub ball: Vec<FnIdx>,
}

/// Replays the sampled prefixes `D̃_1 ⊂ D̃_2 ⊂ …`, calling `visit` with the
/// least-squares fit, the radius, the ball and the sampled pairwise norms of
/// each step.
pub fn walk_optimistic_steps<F>(
    class: &FunctionClass,
    sampled: &LabeledDataset,
    cfg: &ConfidenceConfig,
    mut visit: F,
) -> Result<()>
where
    F: FnMut(&OptimisticStep, &PairwiseNorms),
{
    cfg.validate()?;
    let mut tracker = LeastSquaresTracker::new(class.len());
    let mut norms = PairwiseNorms::zeros(class.len());
    for (i, s) in sampled.records().iter().enumerate() {
        let t = i + 1;
        let f_hat = tracker.argmin();
        let beta = cfg.radius(t, class.len());
        let step = OptimisticStep {
            t,
            f_hat,
            beta,
            ball: ball_from_row(norms.row(f_hat), beta),
        };
        visit(&step, &norms);
        tracker.push(class, s);
        norms.update(class, s.query());
    }
    Ok(())
}

/// `π̂_T = Uniform(π̃_1^opt, …, π̃_T^opt)` where `π̃_t^opt` is optimistic over
/// the β(t)-ball around the least-squares fit on `D̃_t`.
pub fn extract_eluder_policy(
    class: &FunctionClass,
    sampled: &LabeledDataset,
    cfg: &ConfidenceConfig,
) -> Result<MixturePolicy> {
    if sampled.is_empty() {
        return Err(Error::validation("sampled dataset", "empty"));
    }
    check_records(class, sampled)?;
    let mut members = Vec::with_capacity(sampled.len());
    walk_optimistic_steps(class, sampled, cfg, |step, _| {
        members.push(optimistic_policy(class, &step.ball));
    })?;
    MixturePolicy::new(members)
}

/// Greedy policy of the least-squares fit on the whole dataset.
pub fn extract_greedy_policy(class: &FunctionClass, sampled: &LabeledDataset) -> Result<DeterministicPolicy> {
    check_records(class, sampled)?;
    Ok(class.greedy_policy(least_squares(class, sampled.records())))
}

fn check_records(class: &FunctionClass, data: &LabeledDataset) -> Result<()> {
    for s in data.records() {
        class.check_context(s.context)?;
        class.check_action(s.action)?;
    }
    Ok(())
}

/// Borrowed view of either kind of candidate policy.
#[derive(Debug, Clone, Copy)]
pub enum CandidatePolicy<'a> {
    Deterministic(&'a DeterministicPolicy),
    Mixture(&'a MixturePolicy),
}

impl<'a> From<&'a DeterministicPolicy> for CandidatePolicy<'a> {
    fn from(p: &'a DeterministicPolicy) -> Self {
        CandidatePolicy::Deterministic(p)
    }
}

impl<'a> From<&'a MixturePolicy> for CandidatePolicy<'a> {
    fn from(p: &'a MixturePolicy) -> Self {
        CandidatePolicy::Mixture(p)
    }
}

/// Exact simple regret over the finite context distribution; no sampling.
pub fn simple_regret<'a>(policy: impl Into<CandidatePolicy<'a>>, env: &Environment) -> Result<RegretReport> {
    let table = env.mean_table();
    let na = env.n_actions();
    let dist = env.dist();
    let policy_value = match policy.into() {
        CandidatePolicy::Deterministic(p) => {
            p.validate(env.n_contexts(), na)?;
            policy_value_on(p, table, na, dist)
        }
        CandidatePolicy::Mixture(m) => {
            for p in m.members() {
                p.validate(env.n_contexts(), na)?;
            }
            mixture_value_on(m, table, na, dist)
        }
    };
    let optimal_value = optimal_value_on(table, na, dist);
    Ok(RegretReport {
        policy_value,
        optimal_value,
        simple_regret: optimal_value - policy_value,
    })
}
