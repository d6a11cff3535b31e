//! Seeded generators for the discretized-linear class and the nested
//! hypercube family.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{ActionSpace, ContextDist, ContextSpace, FnIdx, FunctionClass};
use crate::environment::{Environment, NoiseModel};
use crate::error::{Error, Result};
use crate::modsel::ModelFamily;

/// Linear rewards `f_α(x, a) = ⟨θ(α), φ(x, a)⟩` with unit-norm
/// `θ(α) = (cos α, sin α)` and `α` on an evenly spaced arc grid.
///
/// In every context two "contender" actions have features `m ± Δ_x/2`, where
/// `Δ_x` is chosen so that the contenders swap at a breakpoint `α_x`. The
/// breakpoints sit at geometrically spaced distances from the centre of the
/// grid, alternating sides; the remaining actions have features `−m ± Δ_x/2`
/// and are never greedy. Action slots are shuffled per context.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearFixtureSpec {
    pub n_contexts: usize,
    pub n_actions: usize,
    pub n_functions: usize,
    /// Centre angle of the grid.
    pub center: f64,
    /// The grid spans `center ± half_width`.
    pub half_width: f64,
    /// `‖m‖`, the shared component of the contender features.
    pub base: f64,
    /// `‖Δ_x‖`, the contrast between the two contenders.
    pub contrast: f64,
    /// Smallest and largest breakpoint distance from the true angle.
    pub min_break: f64,
    pub max_break: f64,
    pub seed: u64,
}

impl Default for LinearFixtureSpec {
    fn default() -> Self {
        Self {
            n_contexts: 20,
            n_actions: 4,
            n_functions: 256,
            center: std::f64::consts::FRAC_PI_4,
            half_width: 1.05,
            base: 0.1,
            contrast: 1.8,
            min_break: 0.001,
            max_break: 1.0,
            seed: 7,
        }
    }
}

/// A generated realizable instance: class, context distribution and `f*`.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub class: FunctionClass,
    pub dist: ContextDist,
    pub f_star: FnIdx,
}

impl Fixture {
    pub fn environment(&self, noise: NoiseModel) -> Result<Environment> {
        Environment::from_class(&self.class, self.f_star, self.dist.clone(), noise)
    }
}

impl LinearFixtureSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(Error::validation("linear fixture", reason));
        if self.n_contexts == 0 || self.n_actions < 2 || self.n_functions < 2 {
            return bad("need |X| ≥ 1, |A| ≥ 2 and |F| ≥ 2".into());
        }
        if self.base + self.contrast / 2.0 > 1.0 {
            return bad(format!(
                "base + contrast/2 = {} exceeds the range bound 1",
                self.base + self.contrast / 2.0
            ));
        }
        if !(self.half_width > 0.0 && self.base >= 0.0 && self.contrast > 0.0) {
            return bad("half_width and contrast must be positive".into());
        }
        if !(self.min_break > 0.0 && self.min_break <= self.max_break) {
            return bad("need 0 < min_break ≤ max_break".into());
        }
        Ok(())
    }

    pub fn angle(&self, j: FnIdx) -> f64 {
        let u = j as f64 / (self.n_functions - 1) as f64;
        self.center + self.half_width * (2.0 * u - 1.0)
    }

    /// The true function: the grid point nearest the centre.
    pub fn true_index(&self) -> FnIdx {
        self.n_functions / 2
    }

    /// Breakpoint angles `α_x`, alternating above and below the true angle.
    pub fn breakpoints(&self) -> Vec<f64> {
        let star = self.angle(self.true_index());
        let n = self.n_contexts;
        let ratio = if n > 1 {
            (self.max_break / self.min_break).powf(1.0 / (n - 1) as f64)
        } else {
            1.0
        };
        (0..n)
            .map(|k| {
                let d = self.min_break * ratio.powi(k as i32);
                if k % 2 == 0 {
                    star + d
                } else {
                    star - d
                }
            })
            .collect()
    }

    /// Context-major `|X| × |A|` table of 2-d features.
    pub fn features(&self) -> Vec<[f64; 2]> {
        let star = self.angle(self.true_index());
        let m = [self.base * star.cos(), self.base * star.sin()];
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut out = Vec::with_capacity(self.n_contexts * self.n_actions);
        for bx in self.breakpoints() {
            // ⟨θ(α), Δ⟩ = contrast · sin(α − α_x).
            let half = [-0.5 * self.contrast * bx.sin(), 0.5 * self.contrast * bx.cos()];
            let mut row: Vec<[f64; 2]> = (0..self.n_actions)
                .map(|a| {
                    let sign = if a % 2 == 0 { 1.0 } else { -1.0 };
                    let centre = if a < 2 { m } else { [-m[0], -m[1]] };
                    [centre[0] + sign * half[0], centre[1] + sign * half[1]]
                })
                .collect();
            row.shuffle(&mut rng);
            out.extend(row);
        }
        out
    }

    pub fn build(&self) -> Result<Fixture> {
        self.validate()?;
        let phi = self.features();
        let mut values = Vec::with_capacity(self.n_functions * phi.len());
        for j in 0..self.n_functions {
            let (s, c) = self.angle(j).sin_cos();
            values.extend(phi.iter().map(|p| c * p[0] + s * p[1]));
        }
        let class = FunctionClass::new(
            ContextSpace::numbered(self.n_contexts)?,
            ActionSpace::numbered(self.n_actions)?,
            values,
            1.0,
        )?;
        Ok(Fixture {
            class,
            dist: ContextDist::uniform(self.n_contexts)?,
            f_star: self.true_index(),
        })
    }
}

/// Sign-vector classes `f_s(x, a) = (κ / d) ⟨s, φ(x, a)⟩` with
/// `s ∈ {±1}^d` and `φ` entries `±1`. Class `i` frees the first `free[i]`
/// coordinates and pins the rest to `+1`, so the classes are nested and
/// class `i` is a prefix of the last one. Bit `k` of a function index set
/// means `s_k = −1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NestedFixtureSpec {
    pub n_contexts: usize,
    pub n_actions: usize,
    pub dim: usize,
    pub free: Vec<usize>,
    pub scale: f64,
    pub seed: u64,
}

impl Default for NestedFixtureSpec {
    fn default() -> Self {
        Self {
            n_contexts: 20,
            n_actions: 4,
            dim: 10,
            free: vec![2, 6, 10],
            scale: 0.7,
            seed: 11,
        }
    }
}

impl NestedFixtureSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(Error::validation("nested fixture", reason));
        if self.n_contexts == 0 || self.n_actions == 0 {
            return bad("empty spaces".into());
        }
        if self.dim == 0 || self.dim > 20 {
            return bad(format!("dim {} not in 1..=20", self.dim));
        }
        if self.free.is_empty()
            || self.free.windows(2).any(|w| w[0] >= w[1])
            || *self.free.last().unwrap() > self.dim
        {
            return bad("free counts must be strictly increasing and at most dim".into());
        }
        if !(self.scale > 0.0 && self.scale <= 1.0) {
            return bad(format!("scale {} not in (0, 1]", self.scale));
        }
        Ok(())
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        self.free.iter().map(|&k| 1usize << k).collect()
    }

    pub fn build(&self) -> Result<(ModelFamily, ContextDist)> {
        self.validate()?;
        let cells = self.n_contexts * self.n_actions;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let phi: Vec<i8> = (0..cells * self.dim)
            .map(|_| if rng.random::<bool>() { 1 } else { -1 })
            .collect();
        let largest = 1usize << self.free.last().unwrap();
        let w = self.scale / self.dim as f64;
        let mut values = Vec::with_capacity(largest * cells);
        for j in 0..largest {
            for cell in 0..cells {
                let dot: i32 = (0..self.dim)
                    .map(|k| {
                        let s = if (j >> k) & 1 == 1 { -1 } else { 1 };
                        s * phi[cell * self.dim + k] as i32
                    })
                    .sum();
                values.push(w * dot as f64);
            }
        }
        let full = FunctionClass::new(
            ContextSpace::numbered(self.n_contexts)?,
            ActionSpace::numbered(self.n_actions)?,
            values,
            1.0,
        )?;
        let classes = self
            .class_sizes()
            .into_iter()
            .map(|n| full.subclass(&(0..n).collect::<Vec<_>>()))
            .collect::<Result<Vec<_>>>()?;
        Ok((ModelFamily::new(classes, None)?, ContextDist::uniform(self.n_contexts)?))
    }

    /// Index of the smallest class containing function `j` of the largest.
    pub fn true_class_of(&self, j: FnIdx) -> usize {
        self.class_sizes()
            .iter()
            .position(|&n| j < n)
            .unwrap_or(self.free.len())
    }
}
