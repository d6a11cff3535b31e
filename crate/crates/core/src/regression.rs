//! Least squares over finite classes, the confidence radius
//! `β(δ, t) = C̄ (B + B̄) sqrt(ln(|F| t / δ))`, and solvers for the
//! sample-size inequalities.
//!
//! All logarithms are natural.

use serde::{Deserialize, Serialize};

use crate::domain::{argmin_lowest, FnIdx, FunctionClass, Sample};
use crate::error::{Error, Result};

/// Inputs of the confidence radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceConfig {
    /// Failure probability, in `(0, 1)`.
    pub delta: f64,
    /// Radius constant `C̄ > 0`.
    pub c_bar: f64,
    /// Range bound `B` of the function class.
    pub range_bound: f64,
    /// Noise bound `B̄`.
    pub noise_bound: f64,
}

impl ConfidenceConfig {
    pub fn new(delta: f64, c_bar: f64, range_bound: f64, noise_bound: f64) -> Result<Self> {
        let cfg = Self {
            delta,
            c_bar,
            range_bound,
            noise_bound,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::validation(
                "confidence config",
                format!("delta {} not in (0, 1)", self.delta),
            ));
        }
        if !(self.c_bar > 0.0 && self.c_bar.is_finite()) {
            return Err(Error::validation(
                "confidence config",
                format!("C̄ {} must be positive", self.c_bar),
            ));
        }
        for (name, v) in [("B", self.range_bound), ("B̄", self.noise_bound)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::validation(
                    "confidence config",
                    format!("{name} = {v} must be finite and non-negative"),
                ));
            }
        }
        Ok(())
    }

    /// `β(δ, t)` for a class of `class_size` functions.
    pub fn radius(&self, t: usize, class_size: usize) -> f64 {
        let arg = (class_size as f64) * (t as f64) / self.delta;
        self.c_bar * (self.range_bound + self.noise_bound) * arg.ln().max(0.0).sqrt()
    }
}

/// Universal constants of the sample-size bounds, exposed as knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationConstants {
    pub c_eluder: f64,
    pub c_uniform: f64,
    pub c_modsel: f64,
}

impl Default for CalibrationConstants {
    fn default() -> Self {
        Self {
            c_eluder: 1.0,
            c_uniform: 1.0,
            c_modsel: 1.0,
        }
    }
}

impl CalibrationConstants {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("c_eluder", self.c_eluder),
            ("c_uniform", self.c_uniform),
            ("c_modsel", self.c_modsel),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::validation(
                    "calibration constants",
                    format!("{name} = {v} must be positive"),
                ));
            }
        }
        Ok(())
    }
}

/// `β(δ, t) = C̄ (B + B̄) sqrt(ln(class_size · t / δ))`.
pub fn confidence_radius(cfg: &ConfidenceConfig, t: usize, class_size: usize) -> Result<f64> {
    cfg.validate()?;
    if t == 0 || class_size == 0 {
        return Err(Error::validation(
            "confidence radius",
            format!("t = {t} and |F| = {class_size} must both be ≥ 1"),
        ));
    }
    Ok(cfg.radius(t, class_size))
}

/// Empirical squared loss of `f` on `data`.
pub fn squared_loss(class: &FunctionClass, f: FnIdx, data: &[Sample]) -> f64 {
    data.iter()
        .map(|s| {
            let e = class.value(f, s.context, s.action) - s.reward;
            e * e
        })
        .sum()
}

/// Exact least squares by enumeration; ties go to the lowest index, so an
/// empty dataset yields function 0.
pub fn least_squares(class: &FunctionClass, data: &[Sample]) -> FnIdx {
    let mut tracker = LeastSquaresTracker::new(class.len());
    for s in data {
        tracker.push(class, s);
    }
    tracker.argmin()
}

/// Running per-function squared losses over a growing dataset.
#[derive(Debug, Clone)]
pub struct LeastSquaresTracker {
    losses: Vec<f64>,
}

impl LeastSquaresTracker {
    pub fn new(n_functions: usize) -> Self {
        Self {
            losses: vec![0.0; n_functions],
        }
    }

    pub fn push(&mut self, class: &FunctionClass, s: &Sample) {
        for (f, loss) in self.losses.iter_mut().enumerate() {
            let e = class.value(f, s.context, s.action) - s.reward;
            *loss += e * e;
        }
    }

    pub fn losses(&self) -> &[f64] {
        &self.losses
    }

    pub fn argmin(&self) -> FnIdx {
        argmin_lowest(&self.losses)
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(
            "target accuracy",
            format!("eps = {eps} must be positive"),
        ))
    }
}

/// Smallest integer `T ≥ c̃ max²(B, B̄) |A| ln(|F| / (ε δ)) / ε²` (at least 1).
pub fn required_samples_uniform(
    cfg: &ConfidenceConfig,
    consts: &CalibrationConstants,
    class_size: usize,
    n_actions: usize,
    eps: f64,
) -> Result<u64> {
    cfg.validate()?;
    consts.validate()?;
    check_eps(eps)?;
    let rhs = uniform_rhs(cfg, consts.c_uniform, class_size, n_actions, eps);
    Ok((rhs.ceil() as u64).max(1))
}

/// Right-hand side of the uniform-strategy sample-size bound, unrounded.
pub fn uniform_rhs(
    cfg: &ConfidenceConfig,
    c_uniform: f64,
    class_size: usize,
    n_actions: usize,
    eps: f64,
) -> f64 {
    let b = cfg.range_bound.max(cfg.noise_bound);
    let log = (class_size as f64 / (eps * cfg.delta)).ln().max(0.0);
    c_uniform * b * b * n_actions as f64 * log / (eps * eps)
}

/// Largest `T` the implicit solver will try.
pub const SOLVER_CAP: u64 = 1 << 40;

/// Solves `T ≥ c max²(B, B̄, 1) d(T) ln(|F| T / δ) / ε²` for the smallest
/// `T`, by doubling to a satisfying power of two and then bisecting.
/// `d_fn` maps a candidate `T` to an eluder-dimension estimate at scale `B/T`.
pub fn required_samples_eluder<D>(
    cfg: &ConfidenceConfig,
    consts: &CalibrationConstants,
    class_size: usize,
    d_fn: D,
    eps: f64,
) -> Result<u64>
where
    D: Fn(u64) -> f64,
{
    cfg.validate()?;
    consts.validate()?;
    check_eps(eps)?;
    let satisfied = |t: u64| {
        t as f64 >= eluder_rhs(cfg, consts.c_eluder, class_size, d_fn(t), t, eps)
    };

    let mut hi = 1u64;
    while !satisfied(hi) {
        if hi >= SOLVER_CAP {
            return Err(Error::Unsatisfiable { cap: SOLVER_CAP });
        }
        hi *= 2;
    }
    if hi == 1 {
        return Ok(1);
    }
    // Invariant: lo fails, hi satisfies.
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if satisfied(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Right-hand side of the eluder sample-size inequality at a given `T`.
pub fn eluder_rhs(
    cfg: &ConfidenceConfig,
    c_eluder: f64,
    class_size: usize,
    d: f64,
    t: u64,
    eps: f64,
) -> f64 {
    let b = cfg.range_bound.max(cfg.noise_bound).max(1.0);
    let log = (class_size as f64 * t as f64 / cfg.delta).ln().max(0.0);
    c_eluder * b * b * d * log / (eps * eps)
}
