//! Domain types shared by every module: registries for contexts and actions,
//! the dense function-class table, datasets with prefix access, and policies.
//!
//! Contexts, actions and functions are addressed by dense `usize` indices into
//! the ordered registries. All tables are dense.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ContextIdx = usize;
pub type ActionIdx = usize;
pub type FnIdx = usize;

/// Identifier of the single context of a structured (context-free) bandit.
pub const EMPTY_CONTEXT: &str = "∅";

fn check_registry(kind: &'static str, ids: &[String]) -> Result<()> {
    if ids.is_empty() {
        return Err(Error::validation(kind, "registry must be nonempty"));
    }
    let mut seen = std::collections::HashSet::with_capacity(ids.len());
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::validation(kind, format!("duplicate identifier {id:?}")));
        }
    }
    Ok(())
}

/// Ordered finite set of context identifiers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextSpace {
    ids: Vec<String>,
}

impl ContextSpace {
    pub fn new(ids: Vec<String>) -> Result<Self> {
        check_registry("context space", &ids)?;
        Ok(Self { ids })
    }

    /// Contexts named `x0, x1, ...`.
    pub fn numbered(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| format!("x{i}")).collect())
    }

    /// The structured-bandit space `{∅}`.
    pub fn singleton() -> Self {
        Self {
            ids: vec![EMPTY_CONTEXT.to_string()],
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn position(&self, id: &str) -> Option<ContextIdx> {
        self.ids.iter().position(|c| c == id)
    }
}

/// Ordered finite set of action identifiers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSpace {
    ids: Vec<String>,
}

impl ActionSpace {
    pub fn new(ids: Vec<String>) -> Result<Self> {
        check_registry("action space", &ids)?;
        Ok(Self { ids })
    }

    pub fn numbered(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| format!("a{i}")).collect())
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn position(&self, id: &str) -> Option<ActionIdx> {
        self.ids.iter().position(|c| c == id)
    }
}

/// A finite class of reward functions `f: X × A → ℝ` stored as a dense
/// `|F| × |X| × |A|` table, function-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionClass {
    contexts: ContextSpace,
    actions: ActionSpace,
    n_functions: usize,
    values: Vec<f64>,
    range_bound: f64,
}

impl FunctionClass {
    /// Builds a class from a function-major value table. Every value must be
    /// finite with `|v| ≤ range_bound`.
    pub fn new(
        contexts: ContextSpace,
        actions: ActionSpace,
        values: Vec<f64>,
        range_bound: f64,
    ) -> Result<Self> {
        if !(range_bound.is_finite() && range_bound >= 0.0) {
            return Err(Error::validation(
                "function class",
                format!("range bound {range_bound} must be finite and non-negative"),
            ));
        }
        let cell = contexts.len() * actions.len();
        if values.is_empty() || values.len() % cell != 0 {
            return Err(Error::validation(
                "function class",
                format!(
                    "table of {} values is not a positive multiple of |X|·|A| = {cell}",
                    values.len()
                ),
            ));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || v.abs() > range_bound)
        {
            return Err(Error::validation(
                "function class",
                format!(
                    "value {v} of function {} exceeds range bound {range_bound}",
                    i / cell
                ),
            ));
        }
        Ok(Self {
            n_functions: values.len() / cell,
            contexts,
            actions,
            values,
            range_bound,
        })
    }

    pub fn contexts(&self) -> &ContextSpace {
        &self.contexts
    }

    pub fn actions(&self) -> &ActionSpace {
        &self.actions
    }

    pub fn len(&self) -> usize {
        self.n_functions
    }

    pub fn is_empty(&self) -> bool {
        self.n_functions == 0
    }

    pub fn n_contexts(&self) -> usize {
        self.contexts.len()
    }

    pub fn n_actions(&self) -> usize {
        self.actions.len()
    }

    /// The range bound `B`.
    pub fn range_bound(&self) -> f64 {
        self.range_bound
    }

    /// Unchecked lookup of `f(x, a)`; panics on out-of-range indices.
    #[inline]
    pub fn value(&self, f: FnIdx, x: ContextIdx, a: ActionIdx) -> f64 {
        debug_assert!(f < self.n_functions && x < self.n_contexts() && a < self.n_actions());
        self.values[(f * self.contexts.len() + x) * self.actions.len() + a]
    }

    /// Checked lookup of `f(x, a)`.
    pub fn evaluate(&self, f: FnIdx, x: ContextIdx, a: ActionIdx) -> Result<f64> {
        self.check_fn(f)?;
        self.check_context(x)?;
        self.check_action(a)?;
        Ok(self.value(f, x, a))
    }

    /// The `|X| × |A|` value table of function `f`, context-major.
    #[inline]
    pub fn table(&self, f: FnIdx) -> &[f64] {
        let cell = self.contexts.len() * self.actions.len();
        &self.values[f * cell..(f + 1) * cell]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Greedy action of `f` at `x`, ties to the lowest action index.
    pub fn greedy_action(&self, f: FnIdx, x: ContextIdx) -> ActionIdx {
        let na = self.actions.len();
        argmax_lowest(&self.table(f)[x * na..(x + 1) * na])
    }

    /// Greedy deterministic policy of `f`.
    pub fn greedy_policy(&self, f: FnIdx) -> DeterministicPolicy {
        DeterministicPolicy::new(
            (0..self.n_contexts())
                .map(|x| self.greedy_action(f, x))
                .collect(),
        )
    }

    /// Largest `|f(z) − f'(z)|` over all pairs and points.
    pub fn diameter(&self) -> f64 {
        let cell = self.contexts.len() * self.actions.len();
        (0..cell)
            .map(|z| {
                let (lo, hi) = (0..self.n_functions).fold(
                    (f64::INFINITY, f64::NEG_INFINITY),
                    |(lo, hi), f| {
                        let v = self.values[f * cell + z];
                        (lo.min(v), hi.max(v))
                    },
                );
                hi - lo
            })
            .fold(0.0, f64::max)
    }

    /// Keeps only the listed functions, in the given order.
    pub fn subclass(&self, keep: &[FnIdx]) -> Result<Self> {
        let mut values = Vec::with_capacity(keep.len() * self.table(0).len());
        for &f in keep {
            self.check_fn(f)?;
            values.extend_from_slice(self.table(f));
        }
        Self::new(
            self.contexts.clone(),
            self.actions.clone(),
            values,
            self.range_bound,
        )
    }

    pub fn check_fn(&self, f: FnIdx) -> Result<()> {
        check_index("function", f, self.n_functions)
    }

    pub fn check_context(&self, x: ContextIdx) -> Result<()> {
        check_index("context", x, self.contexts.len())
    }

    pub fn check_action(&self, a: ActionIdx) -> Result<()> {
        check_index("action", a, self.actions.len())
    }
}

pub(crate) fn check_index(kind: &'static str, index: usize, size: usize) -> Result<()> {
    if index < size {
        Ok(())
    } else {
        Err(Error::Index { kind, index, size })
    }
}

/// Index of the first maximum; NaN never wins.
pub fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Index of the first minimum.
pub fn argmin_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = i;
        }
    }
    best
}

/// A `(context, action)` query point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Query {
    pub context: ContextIdx,
    pub action: ActionIdx,
}

impl Query {
    pub fn new(context: ContextIdx, action: ActionIdx) -> Self {
        Self { context, action }
    }
}

/// Ordered `(context, action)` records. `prefix(t)` is the first `t − 1`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UnlabeledDataset {
    records: Vec<Query>,
}

impl UnlabeledDataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_records(records: Vec<Query>) -> Self {
        Self { records }
    }

    pub fn push(&mut self, q: Query) {
        self.records.push(q);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[Query] {
        &self.records
    }

    /// The dataset seen at step `t` (1-based): records `1..t−1`.
    /// Panics unless `1 ≤ t ≤ len + 1`.
    pub fn prefix(&self, t: usize) -> &[Query] {
        assert!(
            t >= 1 && t <= self.records.len() + 1,
            "prefix step {t} outside 1..={}",
            self.records.len() + 1
        );
        &self.records[..t - 1]
    }
}

/// One observed interaction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub context: ContextIdx,
    pub action: ActionIdx,
    pub reward: f64,
}

impl Sample {
    pub fn query(&self) -> Query {
        Query::new(self.context, self.action)
    }
}

/// Ordered `(context, action, reward)` records with the same prefix
/// semantics as [`UnlabeledDataset`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledDataset {
    records: Vec<Sample>,
}

impl LabeledDataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_records(records: Vec<Sample>) -> Self {
        Self { records }
    }

    pub fn push(&mut self, s: Sample) {
        self.records.push(s);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[Sample] {
        &self.records
    }

    pub fn prefix(&self, t: usize) -> &[Sample] {
        assert!(
            t >= 1 && t <= self.records.len() + 1,
            "prefix step {t} outside 1..={}",
            self.records.len() + 1
        );
        &self.records[..t - 1]
    }

    pub fn queries(&self) -> impl Iterator<Item = Query> + '_ {
        self.records.iter().map(Sample::query)
    }

    /// Checks `|r| ≤ bound` for every reward.
    pub fn check_reward_bound(&self, bound: f64) -> Result<()> {
        match self.records.iter().position(|s| s.reward.abs() > bound) {
            None => Ok(()),
            Some(i) => Err(Error::validation(
                "dataset",
                format!(
                    "reward {} at record {} exceeds B + B̄ = {bound}",
                    self.records[i].reward,
                    i + 1
                ),
            )),
        }
    }
}

/// A total map from contexts to actions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DeterministicPolicy {
    actions: Vec<ActionIdx>,
}

impl DeterministicPolicy {
    pub fn new(actions: Vec<ActionIdx>) -> Self {
        Self { actions }
    }

    /// Plays `a` at every one of `n_contexts` contexts.
    pub fn constant(a: ActionIdx, n_contexts: usize) -> Self {
        Self::new(vec![a; n_contexts])
    }

    #[inline]
    pub fn action(&self, x: ContextIdx) -> ActionIdx {
        self.actions[x]
    }

    pub fn actions(&self) -> &[ActionIdx] {
        &self.actions
    }

    pub fn n_contexts(&self) -> usize {
        self.actions.len()
    }

    /// Checks totality over `n_contexts` and that every action is in range.
    pub fn validate(&self, n_contexts: usize, n_actions: usize) -> Result<()> {
        if self.actions.len() != n_contexts {
            return Err(Error::validation(
                "policy",
                format!(
                    "defined on {} contexts, expected {n_contexts}",
                    self.actions.len()
                ),
            ));
        }
        for &a in &self.actions {
            check_index("action", a, n_actions)?;
        }
        Ok(())
    }
}

/// Uniform mixture over deterministic members: at `x` the action is drawn
/// uniformly from `{member(x)}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MixturePolicy {
    members: Vec<DeterministicPolicy>,
}

impl MixturePolicy {
    pub fn new(members: Vec<DeterministicPolicy>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::validation("mixture policy", "no members"));
        }
        let n = members[0].n_contexts();
        if members.iter().any(|m| m.n_contexts() != n) {
            return Err(Error::validation(
                "mixture policy",
                "members disagree on the context space",
            ));
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[DeterministicPolicy] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Action probabilities at `x`.
    pub fn action_distribution(&self, x: ContextIdx, n_actions: usize) -> Vec<f64> {
        let mut probs = vec![0.0; n_actions];
        let w = 1.0 / self.members.len() as f64;
        for m in &self.members {
            probs[m.action(x)] += w;
        }
        probs
    }

    pub fn sample_action<R: Rng + ?Sized>(&self, x: ContextIdx, rng: &mut R) -> ActionIdx {
        self.members[rng.random_range(0..self.members.len())].action(x)
    }
}

impl From<DeterministicPolicy> for MixturePolicy {
    fn from(p: DeterministicPolicy) -> Self {
        Self { members: vec![p] }
    }
}

/// A finite categorical distribution over contexts.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextDist {
    probs: Vec<f64>,
    cdf: Vec<f64>,
}

/// Tolerance on `Σ P(x) = 1`.
pub const PROB_SUM_TOL: f64 = 1e-12;

impl ContextDist {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::validation("context distribution", "empty"));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::validation(
                "context distribution",
                format!("probability {p} is not a finite non-negative number"),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::validation(
                "context distribution",
                format!("probabilities sum to {total}, not 1"),
            ));
        }
        let mut acc = 0.0;
        let cdf = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(Self { probs, cdf })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::validation("context distribution", "empty"));
        }
        Self::new(vec![1.0 / n as f64; n])
    }

    pub fn point_mass(x: ContextIdx, n: usize) -> Result<Self> {
        check_index("context", x, n)?;
        let mut probs = vec![0.0; n];
        probs[x] = 1.0;
        Self::new(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Inverse-CDF draw over the ordered registry.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ContextIdx {
        let u: f64 = rng.random::<f64>() * self.cdf[self.cdf.len() - 1];
        // First cell whose CDF exceeds u; zero-mass cells are never chosen.
        let i = self.cdf.partition_point(|&c| c <= u);
        i.min(self.probs.len() - 1)
    }
}
