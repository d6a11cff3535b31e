//! ε-dependence, independent-sequence search and eluder-dimension lower
//! bounds for finite classes.
//!
//! A point `z` is ε-dependent on `z₁..zₙ` when every pair `(f, f')` with
//! `sqrt(Σᵢ (f(zᵢ) − f'(zᵢ))²) ≤ ε` also satisfies `f(z) − f'(z) ≤ ε`.
//! Dependence is monotone in the predecessor set: a point dependent on `S`
//! is dependent on every superset of `S`. The exact search uses this as its
//! pruning bound.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::domain::{FunctionClass, Query};
use crate::error::{Error, Result};

/// Largest domain the exact search accepts.
pub const EXACT_DOMAIN_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    Exact,
    Greedy,
}

/// An ε-independent sequence; its length lower-bounds the eluder dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EluderCertificate {
    pub points: Vec<Query>,
    pub epsilon: f64,
    pub verified_length: usize,
}

impl EluderCertificate {
    /// Replays [`eps_dependent`] along the sequence.
    pub fn verify(&self, class: &FunctionClass) -> bool {
        self.verified_length == self.points.len()
            && (0..self.points.len())
                .all(|i| !eps_dependent(class, self.points[i], &self.points[..i], self.epsilon))
    }
}

/// Brute force over all ordered pairs.
pub fn eps_dependent(class: &FunctionClass, z: Query, predecessors: &[Query], eps: f64) -> bool {
    let n = class.len();
    for f in 0..n {
        for g in 0..n {
            if f == g {
                continue;
            }
            let sq: f64 = predecessors
                .iter()
                .map(|q| {
                    let d = class.value(f, q.context, q.action) - class.value(g, q.context, q.action);
                    d * d
                })
                .sum();
            if sq.sqrt() <= eps
                && class.value(f, z.context, z.action) - class.value(g, z.context, z.action) > eps
            {
                return false;
            }
        }
    }
    true
}

/// Unordered pairs still within `ε` in data norm on the current sequence.
#[derive(Debug, Clone)]
struct PairFrontier {
    pairs: Vec<(u32, u32, f64)>,
}

impl PairFrontier {
    fn new(class: &FunctionClass) -> Self {
        let n = class.len() as u32;
        let pairs = (0..n)
            .flat_map(|f| ((f + 1)..n).map(move |g| (f, g, 0.0)))
            .collect();
        Self { pairs }
    }

    fn independent(&self, class: &FunctionClass, z: Query, eps: f64) -> bool {
        self.pairs.iter().any(|&(f, g, _)| {
            let d = class.value(f as usize, z.context, z.action)
                - class.value(g as usize, z.context, z.action);
            d.abs() > eps
        })
    }

    fn extend(&self, class: &FunctionClass, z: Query, eps: f64) -> Self {
        let pairs = self
            .pairs
            .iter()
            .filter_map(|&(f, g, sq)| {
                let d = class.value(f as usize, z.context, z.action)
                    - class.value(g as usize, z.context, z.action);
                let sq = sq + d * d;
                (sq.sqrt() <= eps).then_some((f, g, sq))
            })
            .collect();
        Self { pairs }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::validation("tolerance", format!("eps = {eps} must be positive")))
    }
}

/// Longest ε-independent sequence drawn from `domain`.
///
/// `Greedy` scans the domain once in order and keeps every point independent
/// of the points kept so far. `Exact` runs a branch-and-bound over subsets
/// (at most [`EXACT_DOMAIN_LIMIT`] points).
pub fn longest_independent_sequence(
    class: &FunctionClass,
    domain: &[Query],
    eps: f64,
    mode: SearchMode,
) -> Result<EluderCertificate> {
    check_eps(eps)?;
    let points = match mode {
        SearchMode::Greedy => greedy(class, domain, eps),
        SearchMode::Exact => {
            if domain.len() > EXACT_DOMAIN_LIMIT {
                return Err(Error::DomainTooLarge {
                    len: domain.len(),
                    limit: EXACT_DOMAIN_LIMIT,
                });
            }
            exact(class, domain, eps)
        }
    };
    Ok(EluderCertificate {
        verified_length: points.len(),
        points,
        epsilon: eps,
    })
}

fn greedy(class: &FunctionClass, domain: &[Query], eps: f64) -> Vec<Query> {
    let mut frontier = PairFrontier::new(class);
    let mut seq = Vec::new();
    for &z in domain {
        if frontier.independent(class, z, eps) {
            frontier = frontier.extend(class, z, eps);
            seq.push(z);
        }
    }
    seq
}

struct ExactSearch<'a> {
    class: &'a FunctionClass,
    domain: &'a [Query],
    eps: f64,
    visited: HashSet<u32>,
    best: Vec<usize>,
}

impl ExactSearch<'_> {
    fn run(&mut self, frontier: &PairFrontier, mask: u32, seq: &mut Vec<usize>) {
        if seq.len() > self.best.len() {
            self.best = seq.clone();
        }
        let candidates: Vec<usize> = (0..self.domain.len())
            .filter(|&i| mask & (1 << i) == 0)
            .filter(|&i| frontier.independent(self.class, self.domain[i], self.eps))
            .collect();
        if seq.len() + candidates.len() <= self.best.len() {
            return;
        }
        for i in candidates {
            let next = mask | (1 << i);
            if !self.visited.insert(next) {
                continue;
            }
            let child = frontier.extend(self.class, self.domain[i], self.eps);
            seq.push(i);
            self.run(&child, next, seq);
            seq.pop();
        }
    }
}

fn exact(class: &FunctionClass, domain: &[Query], eps: f64) -> Vec<Query> {
    let mut search = ExactSearch {
        class,
        domain,
        eps,
        visited: HashSet::new(),
        best: Vec::new(),
    };
    search.run(&PairFrontier::new(class), 0, &mut Vec::new());
    search.best.iter().map(|&i| domain[i]).collect()
}

/// Geometric grid `{ε·2^k}` up to the class diameter (always contains `ε`).
pub fn default_grid(class: &FunctionClass, eps: f64) -> Vec<f64> {
    let diameter = class.diameter();
    let mut grid = vec![eps];
    let mut e = eps * 2.0;
    while e <= diameter {
        grid.push(e);
        e *= 2.0;
    }
    grid
}

/// `max` over the grid of the longest independent sequence length: a lower
/// bound on `d_eluder(F, ε)` (exact on small domains in exact mode).
pub fn eluder_dimension_estimate(
    class: &FunctionClass,
    domain: &[Query],
    eps: f64,
    grid: &[f64],
    mode: SearchMode,
) -> Result<usize> {
    check_eps(eps)?;
    if grid.is_empty() {
        return Err(Error::validation("tolerance grid", "empty"));
    }
    if let Some(g) = grid.iter().find(|&&g| !(g >= eps)) {
        return Err(Error::validation(
            "tolerance grid",
            format!("value {g} is below eps = {eps}"),
        ));
    }
    grid.iter().try_fold(0, |best, &e| {
        Ok(best.max(longest_independent_sequence(class, domain, e, mode)?.verified_length))
    })
}

/// Every `(context, action)` pair of the class, context-major.
pub fn full_domain(class: &FunctionClass) -> Vec<Query> {
    (0..class.n_contexts())
        .flat_map(|x| (0..class.n_actions()).map(move |a| Query::new(x, a)))
        .collect()
}
