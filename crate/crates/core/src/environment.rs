//! Simulated contextual bandit environment and the sampler that deploys a
//! static plan.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::domain::{
    check_index, ActionIdx, ContextDist, ContextIdx, FnIdx, FunctionClass, LabeledDataset, Sample,
};
use crate::error::{Error, Result};
use crate::planning::{Plan, PlanAction, PlanCursor};
use crate::rng::SamplerStreams;

/// Zero-mean reward noise, in reward units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseModel {
    Zero,
    /// Uniform on `[−bound, bound]`.
    Uniform { bound: f64 },
    /// `N(0, σ²)` conditioned on `|ξ| ≤ bound`. Symmetric truncation keeps
    /// the mean exactly zero.
    TruncatedGaussian { sigma: f64, bound: f64 },
    /// Unbounded `N(0, σ²)`; for the tree experiments only.
    Gaussian { sigma: f64 },
}

impl Default for NoiseModel {
    /// σ = 1 truncated at 3σ.
    fn default() -> Self {
        NoiseModel::TruncatedGaussian {
            sigma: 1.0,
            bound: 3.0,
        }
    }
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(Error::validation("noise model", reason));
        match *self {
            NoiseModel::Zero => Ok(()),
            NoiseModel::Uniform { bound } if !(bound >= 0.0 && bound.is_finite()) => {
                bad(format!("bound {bound} must be finite and non-negative"))
            }
            NoiseModel::TruncatedGaussian { sigma, bound }
                if !(sigma > 0.0 && sigma <= 1.0 && bound > 0.0 && bound.is_finite()) =>
            {
                bad(format!("need 0 < σ ≤ 1 and bound > 0 (σ = {sigma}, bound = {bound})"))
            }
            NoiseModel::Gaussian { sigma } if !(sigma > 0.0 && sigma <= 1.0) => {
                bad(format!("need 0 < σ ≤ 1, got {sigma}"))
            }
            _ => Ok(()),
        }
    }

    /// `B̄`, or `None` for unbounded noise.
    pub fn bound(&self) -> Option<f64> {
        match *self {
            NoiseModel::Zero => Some(0.0),
            NoiseModel::Uniform { bound } | NoiseModel::TruncatedGaussian { bound, .. } => {
                Some(bound)
            }
            NoiseModel::Gaussian { .. } => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            NoiseModel::Zero => 0.0,
            NoiseModel::Uniform { bound } => {
                if bound == 0.0 {
                    0.0
                } else {
                    rng.random_range(-bound..=bound)
                }
            }
            NoiseModel::TruncatedGaussian { sigma, bound } => {
                let normal = Normal::new(0.0, sigma).expect("validated σ");
                loop {
                    let z = normal.sample(rng);
                    if z.abs() <= bound {
                        return z;
                    }
                }
            }
            NoiseModel::Gaussian { sigma } => Normal::new(0.0, sigma).expect("validated σ").sample(rng),
        }
    }
}

/// Context distribution, true mean reward table and noise.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    dist: ContextDist,
    /// `f*` as a context-major `|X| × |A|` table.
    mean: Vec<f64>,
    n_actions: usize,
    f_star: Option<FnIdx>,
    noise: NoiseModel,
}

impl Environment {
    /// Realizable environment with `f* = class[f_star]`.
    pub fn from_class(
        class: &FunctionClass,
        f_star: FnIdx,
        dist: ContextDist,
        noise: NoiseModel,
    ) -> Result<Self> {
        class.check_fn(f_star)?;
        let mut env = Self::from_table(class.table(f_star).to_vec(), class.n_actions(), dist, noise)?;
        env.f_star = Some(f_star);
        Ok(env)
    }

    /// Environment with an explicit mean-reward table.
    pub fn from_table(
        mean: Vec<f64>,
        n_actions: usize,
        dist: ContextDist,
        noise: NoiseModel,
    ) -> Result<Self> {
        noise.validate()?;
        if n_actions == 0 || mean.len() != dist.len() * n_actions {
            return Err(Error::validation(
                "environment",
                format!(
                    "mean table has {} cells, expected |X|·|A| = {}·{n_actions}",
                    mean.len(),
                    dist.len()
                ),
            ));
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("environment", "non-finite mean reward"));
        }
        Ok(Self {
            dist,
            mean,
            n_actions,
            f_star: None,
            noise,
        })
    }

    pub fn dist(&self) -> &ContextDist {
        &self.dist
    }

    pub fn mean_table(&self) -> &[f64] {
        &self.mean
    }

    #[inline]
    pub fn mean(&self, x: ContextIdx, a: ActionIdx) -> f64 {
        self.mean[x * self.n_actions + a]
    }

    pub fn n_contexts(&self) -> usize {
        self.dist.len()
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn f_star(&self) -> Option<FnIdx> {
        self.f_star
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    /// Replaces `f*` by another member of `class` (same spaces required).
    pub fn with_f_star(&self, class: &FunctionClass, f_star: FnIdx) -> Result<Self> {
        Self::from_class(class, f_star, self.dist.clone(), self.noise)
    }

    /// Checks that the environment lives on the class's spaces.
    pub fn check_compatible(&self, class: &FunctionClass) -> Result<()> {
        if class.n_contexts() != self.n_contexts() || class.n_actions() != self.n_actions {
            return Err(Error::validation(
                "environment",
                format!(
                    "spaces {}×{} do not match the class's {}×{}",
                    self.n_contexts(),
                    self.n_actions,
                    class.n_contexts(),
                    class.n_actions()
                ),
            ));
        }
        Ok(())
    }
}

/// `x̃ ∼ P` by inverse CDF over the ordered registry.
pub fn sample_context<R: Rng + ?Sized>(env: &Environment, rng: &mut R) -> ContextIdx {
    env.dist.sample(rng)
}

/// `f*(x, a) + ξ` with fresh noise.
pub fn sample_reward<R: Rng + ?Sized>(
    env: &Environment,
    x: ContextIdx,
    a: ActionIdx,
    rng: &mut R,
) -> f64 {
    env.mean(x, a) + env.noise.sample(rng)
}

/// Deploys `plan` for `plan.horizon()` steps.
///
/// Actions are chosen from `(t, x̃_t)` alone; rewards are never read while
/// choosing. Uniform plans draw the action from `streams.actions`.
pub fn run_sampler(
    env: &Environment,
    plan: &Plan,
    class: &FunctionClass,
    streams: &mut SamplerStreams,
) -> Result<LabeledDataset> {
    env.check_compatible(class)?;
    let mut cursor = PlanCursor::new(plan, class)?;
    let mut data = LabeledDataset::new();
    for _ in 0..plan.horizon() {
        let x = sample_context(env, &mut streams.contexts);
        let a = match cursor.action(x) {
            PlanAction::Play(a) => a,
            PlanAction::Randomize => streams.actions.random_range(0..env.n_actions),
        };
        let reward = sample_reward(env, x, a, &mut streams.rewards);
        data.push(Sample {
            context: x,
            action: a,
            reward,
        });
        cursor.advance();
    }
    Ok(data)
}

/// Rewards for a fixed query list (no plan involved).
pub fn sample_at<R: Rng + ?Sized>(
    env: &Environment,
    queries: impl IntoIterator<Item = (ContextIdx, ActionIdx)>,
    rng: &mut R,
) -> Result<LabeledDataset> {
    let mut data = LabeledDataset::new();
    for (x, a) in queries {
        check_index("context", x, env.n_contexts())?;
        check_index("action", a, env.n_actions)?;
        data.push(Sample {
            context: x,
            action: a,
            reward: sample_reward(env, x, a, rng),
        });
    }
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{ActionSpace, ContextSpace};
    use crate::planning::uniform_plan;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn class_2x3() -> FunctionClass {
        FunctionClass::new(
            ContextSpace::numbered(2).unwrap(),
            ActionSpace::numbered(3).unwrap(),
            vec![0.2, -0.4, 0.9, 0.0, 0.5, -1.0],
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn point_mass_and_singleton_contexts() {
        let class = class_2x3();
        let env = Environment::from_class(
            &class,
            0,
            ContextDist::point_mass(1, 2).unwrap(),
            NoiseModel::Zero,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..500).all(|_| sample_context(&env, &mut rng) == 1));
        let single = Environment::from_table(
            vec![0.0, 1.0],
            2,
            ContextDist::uniform(1).unwrap(),
            NoiseModel::Zero,
        )
        .unwrap();
        assert_eq!(sample_context(&single, &mut rng), 0);
    }

    #[test]
    fn context_frequencies_match_distribution() {
        let probs = vec![0.1, 0.25, 0.4, 0.25];
        let env = Environment::from_table(
            vec![0.0; 4],
            1,
            ContextDist::new(probs.clone()).unwrap(),
            NoiseModel::Zero,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[sample_context(&env, &mut rng)] += 1;
        }
        for (c, p) in counts.iter().zip(&probs) {
            assert!((*c as f64 / n as f64 - p).abs() < 0.02);
        }
    }

    #[test]
    fn zero_noise_returns_mean() {
        let class = class_2x3();
        let env =
            Environment::from_class(&class, 0, ContextDist::uniform(2).unwrap(), NoiseModel::Zero)
                .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert_eq!(sample_reward(&env, 1, 2, &mut rng), -1.0);
    }

    #[test]
    fn truncated_gaussian_mean_and_bound() {
        let class = class_2x3();
        let env = Environment::from_class(
            &class,
            0,
            ContextDist::uniform(2).unwrap(),
            NoiseModel::default(),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let mean: f64 = (0..n).map(|_| sample_reward(&env, 0, 2, &mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 0.9).abs() < 0.02);
    }

    #[test]
    fn bounded_noise_never_exceeds_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for noise in [
            NoiseModel::default(),
            NoiseModel::Uniform { bound: 0.5 },
            NoiseModel::TruncatedGaussian {
                sigma: 0.3,
                bound: 0.2,
            },
        ] {
            let b = noise.bound().unwrap();
            for _ in 0..1_000_000 {
                assert!(noise.sample(&mut rng).abs() <= b);
            }
        }
    }

    #[test]
    fn noise_validation() {
        assert!(NoiseModel::Gaussian { sigma: 1.5 }.validate().is_err());
        assert!(NoiseModel::TruncatedGaussian {
            sigma: 1.0,
            bound: 0.0
        }
        .validate()
        .is_err());
        assert!(NoiseModel::Uniform { bound: -1.0 }.validate().is_err());
        assert!(NoiseModel::default().validate().is_ok());
    }

    #[test]
    fn uniform_plan_action_frequencies() {
        let class = class_2x3();
        let env =
            Environment::from_class(&class, 0, ContextDist::uniform(2).unwrap(), NoiseModel::Zero)
                .unwrap();
        let n = 100_000;
        let data = run_sampler(&env, &uniform_plan(n).unwrap(), &class, &mut SamplerStreams::from_seed(5))
            .unwrap();
        assert_eq!(data.len(), n);
        let mut counts = [0usize; 3];
        for s in data.records() {
            counts[s.action] += 1;
        }
        for c in counts {
            assert!((c as f64 / n as f64 - 1.0 / 3.0).abs() < 0.02);
        }
    }

    #[test]
    fn mismatched_environment_is_rejected() {
        let class = class_2x3();
        let env = Environment::from_table(
            vec![0.0; 4],
            4,
            ContextDist::uniform(1).unwrap(),
            NoiseModel::Zero,
        )
        .unwrap();
        let plan = uniform_plan(3).unwrap();
        assert!(run_sampler(&env, &plan, &class, &mut SamplerStreams::from_seed(0)).is_err());
    }
}
