//! Data-norm geometry over a finite class and exact policy values.

use crate::domain::{
    ContextDist, DeterministicPolicy, FnIdx, FunctionClass, MixturePolicy, Query,
};
use crate::error::{Error, Result};

/// `‖f − f'‖_D = sqrt(Σ_{(x,a)∈D} (f(x,a) − f'(x,a))²)`; zero on an empty `D`.
pub fn data_norm(class: &FunctionClass, f: FnIdx, g: FnIdx, data: &[Query]) -> f64 {
    sq_data_norm(class, f, g, data).sqrt()
}

pub fn sq_data_norm(class: &FunctionClass, f: FnIdx, g: FnIdx, data: &[Query]) -> f64 {
    data.iter()
        .map(|q| {
            let d = class.value(f, q.context, q.action) - class.value(g, q.context, q.action);
            d * d
        })
        .sum()
}

/// Symmetric `|F| × |F|` matrix of squared data norms with zero diagonal,
/// maintained incrementally as the dataset grows.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseNorms {
    n: usize,
    sq: Vec<f64>,
    column: Vec<f64>,
    records: usize,
}

impl PairwiseNorms {
    /// The matrix for the empty dataset.
    pub fn zeros(n_functions: usize) -> Self {
        Self {
            n: n_functions,
            sq: vec![0.0; n_functions * n_functions],
            column: vec![0.0; n_functions],
            records: 0,
        }
    }

    /// Batch construction from a dataset.
    pub fn from_dataset(class: &FunctionClass, data: &[Query]) -> Self {
        let mut m = Self::zeros(class.len());
        for &q in data {
            m.update(class, q);
        }
        m
    }

    /// Folds one record in: `M'[f][f'] = M[f][f'] + (f(x,a) − f'(x,a))²`.
    pub fn update(&mut self, class: &FunctionClass, q: Query) {
        debug_assert_eq!(class.len(), self.n);
        for (f, v) in self.column.iter_mut().enumerate() {
            *v = class.value(f, q.context, q.action);
        }
        let n = self.n;
        for f in 0..n {
            let vf = self.column[f];
            let row = f * n;
            for g in (f + 1)..n {
                let d = vf - self.column[g];
                let d2 = d * d;
                self.sq[row + g] += d2;
                self.sq[g * n + f] += d2;
            }
        }
        self.records += 1;
    }

    #[inline]
    pub fn sq(&self, f: FnIdx, g: FnIdx) -> f64 {
        self.sq[f * self.n + g]
    }

    pub fn norm(&self, f: FnIdx, g: FnIdx) -> f64 {
        self.sq(f, g).sqrt()
    }

    /// Row `f` of squared norms.
    #[inline]
    pub fn row(&self, f: FnIdx) -> &[f64] {
        &self.sq[f * self.n..(f + 1) * self.n]
    }

    pub fn n_functions(&self) -> usize {
        self.n
    }

    /// Number of records folded in so far.
    pub fn records(&self) -> usize {
        self.records
    }
}

/// Standalone form of the incremental update: returns the matrix for
/// `D ∪ {q}` given the matrix for `D`.
pub fn pairwise_sq_norms_update(
    mut norms: PairwiseNorms,
    class: &FunctionClass,
    q: Query,
) -> PairwiseNorms {
    norms.update(class, q);
    norms
}

fn check_dist(class: &FunctionClass, dist: &ContextDist) -> Result<()> {
    if dist.len() != class.n_contexts() {
        return Err(Error::validation(
            "context distribution",
            format!(
                "has {} cells but the class has {} contexts",
                dist.len(),
                class.n_contexts()
            ),
        ));
    }
    Ok(())
}

/// Exact value `Σ_x P(x) r(x, π(x))` of a deterministic policy under a
/// context-major reward table with `n_actions` columns.
pub fn policy_value_on(
    policy: &DeterministicPolicy,
    table: &[f64],
    n_actions: usize,
    dist: &ContextDist,
) -> f64 {
    dist.probs()
        .iter()
        .enumerate()
        .map(|(x, p)| p * table[x * n_actions + policy.action(x)])
        .sum()
}

/// Exact value of a uniform mixture: the mean of its members' values.
pub fn mixture_value_on(
    mixture: &MixturePolicy,
    table: &[f64],
    n_actions: usize,
    dist: &ContextDist,
) -> f64 {
    let total: f64 = mixture
        .members()
        .iter()
        .map(|m| policy_value_on(m, table, n_actions, dist))
        .sum();
    total / mixture.len() as f64
}

/// Exact value `Σ_x P(x) max_a r(x, a)` of the optimal policy.
pub fn optimal_value_on(table: &[f64], n_actions: usize, dist: &ContextDist) -> f64 {
    dist.probs()
        .iter()
        .zip(table.chunks_exact(n_actions))
        .map(|(p, row)| p * row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .sum()
}

/// `(1/|members|) Σ_t Σ_x P(x) f*(x, π_t(x))`, computed exactly.
pub fn mixture_value(
    mixture: &MixturePolicy,
    class: &FunctionClass,
    f_star: FnIdx,
    dist: &ContextDist,
) -> Result<f64> {
    class.check_fn(f_star)?;
    check_dist(class, dist)?;
    for m in mixture.members() {
        m.validate(class.n_contexts(), class.n_actions())?;
    }
    Ok(mixture_value_on(
        mixture,
        class.table(f_star),
        class.n_actions(),
        dist,
    ))
}
