//! Sampler reproducibility, reward bounds and stream independence.

use banditplan::domain::ContextDist;
use banditplan::environment::{run_sampler, Environment, NoiseModel};
use banditplan::planning::{eluder_plan, uniform_plan};
use banditplan::regression::ConfidenceConfig;
use banditplan::rng::{Purpose, SamplerStreams, Substreams};
use proptest::prelude::*;
use rand::Rng;

use super::{check, Outcome};
use crate::common::*;

fn noise_strategy() -> impl Strategy<Value = NoiseModel> {
    prop_oneof![
        Just(NoiseModel::Zero),
        (0.0f64..2.0).prop_map(|bound| NoiseModel::Uniform { bound }),
        (0.1f64..=1.0, 0.1f64..3.0).prop_map(|(sigma, bound)| NoiseModel::TruncatedGaussian { sigma, bound }),
    ]
}

pub fn identical_inputs_give_identical_datasets() -> Outcome {
    check(
        (small_class(4, 4, 3), 0usize..64, noise_strategy(), any::<u64>(), 1usize..40, any::<bool>()),
        |(class, f, noise, seed, horizon, eluder)| {
            let f = f % class.len();
            let env = Environment::from_class(&class, f, ContextDist::uniform(class.n_contexts()).unwrap(), noise)
                .unwrap();
            let plan = if eluder {
                let cfg = ConfidenceConfig::new(0.1, 0.1, 1.0, noise.bound().unwrap()).unwrap();
                let mut rng = Substreams::new(seed).rng(0, Purpose::OfflineContexts);
                let ctx: Vec<usize> = (0..horizon).map(|_| rng.random_range(0..class.n_contexts())).collect();
                eluder_plan(&class, &ctx, horizon, &cfg).unwrap()
            } else {
                uniform_plan(horizon).unwrap()
            };
            let a = run_sampler(&env, &plan, &class, &mut SamplerStreams::from_seed(seed)).unwrap();
            let b = run_sampler(&env, &plan, &class, &mut SamplerStreams::from_seed(seed)).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(a.len(), horizon);
            // |r̃| ≤ B + B̄ for bounded noise.
            let bound = class.range_bound() + noise.bound().unwrap();
            prop_assert!(a.check_reward_bound(bound).is_ok());
            for s in a.records() {
                prop_assert!(s.reward.abs() <= bound);
                prop_assert!((s.reward - env.mean(s.context, s.action)).abs() <= noise.bound().unwrap());
            }
            Ok(())
        },
    )
}

/// Actions depend only on `(t, x̃_t)`: replacing the reward stream leaves
/// every context and action unchanged.
pub fn actions_never_depend_on_rewards() -> Outcome {
    check(
        (small_class(4, 4, 3), 0usize..64, any::<u64>(), any::<u64>(), 1usize..40, any::<bool>()),
        |(class, f, seed, other, horizon, eluder)| {
            let f = f % class.len();
            let noise = NoiseModel::Uniform { bound: 1.0 };
            let env = Environment::from_class(&class, f, ContextDist::uniform(class.n_contexts()).unwrap(), noise)
                .unwrap();
            let plan = if eluder {
                let cfg = ConfidenceConfig::new(0.1, 0.1, 1.0, 1.0).unwrap();
                eluder_plan(&class, &vec![0; horizon], horizon, &cfg).unwrap()
            } else {
                uniform_plan(horizon).unwrap()
            };
            let mut s1 = SamplerStreams::from_seed(seed);
            let mut s2 = SamplerStreams::from_seed(seed);
            s2.rewards = Substreams::new(other).rng(0, Purpose::Rewards);
            let a = run_sampler(&env, &plan, &class, &mut s1).unwrap();
            let b = run_sampler(&env, &plan, &class, &mut s2).unwrap();
            let qa: Vec<_> = a.queries().collect();
            let qb: Vec<_> = b.queries().collect();
            prop_assert_eq!(qa, qb);
            Ok(())
        },
    )
}

pub fn streams_are_independent_of_each_other() -> Outcome {
    check((any::<u64>(), 0u64..1_000_000), |(seed, trial)| {
        let subs = Substreams::new(seed);
        let draw = |p: Purpose| -> Vec<u64> {
            let mut r = subs.rng(trial, p);
            (0..4).map(|_| r.random()).collect()
        };
        let all: Vec<_> = Purpose::ALL.iter().map(|&p| draw(p)).collect();
        for i in 0..all.len() {
            for j in (i + 1)..all.len() {
                prop_assert_ne!(&all[i], &all[j]);
            }
            prop_assert_eq!(&all[i], &draw(Purpose::ALL[i]));
        }
        let mut next = subs.rng(trial + 1, Purpose::Rewards);
        let n: Vec<u64> = (0..4).map(|_| next.random()).collect();
        prop_assert_ne!(&n, &all[3]);
        Ok(())
    })
}

pub fn bounded_noise_stays_in_bounds() -> Outcome {
    check((noise_strategy(), any::<u64>()), |(noise, seed)| {
        let mut rng = Substreams::new(seed).rng(0, Purpose::Rewards);
        let b = noise.bound().unwrap();
        for _ in 0..50 {
            prop_assert!(noise.sample(&mut rng).abs() <= b);
        }
        Ok(())
    })
}
