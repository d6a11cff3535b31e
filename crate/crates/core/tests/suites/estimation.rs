//! Least squares, confidence radii, optimism, regret and model selection.

use banditplan::domain::{
    ContextDist, DeterministicPolicy, FunctionClass, LabeledDataset, MixturePolicy, Sample,
};
use banditplan::environment::{Environment, NoiseModel};
use banditplan::evaluation::{confidence_ball, optimistic_action, simple_regret};
use banditplan::modsel::{fit_all, select_index, split_dataset, test_losses, ModelFamily};
use banditplan::norms::sq_data_norm;
use banditplan::regression::{least_squares, squared_loss, ConfidenceConfig, LeastSquaresTracker};
use proptest::prelude::*;

use super::{check, Outcome};
use crate::common::*;

fn labeled(class: &FunctionClass) -> impl Strategy<Value = Vec<Sample>> {
    let (nx, na) = (class.n_contexts(), class.n_actions());
    prop::collection::vec(
        (0..nx, 0..na, -2.0f64..2.0).prop_map(|(context, action, reward)| Sample {
            context,
            action,
            reward,
        }),
        0..=15,
    )
}

fn class_and_samples(max_f: usize) -> impl Strategy<Value = (FunctionClass, Vec<Sample>)> {
    small_class(max_f, 3, 3).prop_flat_map(|c| {
        let s = labeled(&c);
        (Just(c), s)
    })
}

fn naive_loss(class: &FunctionClass, f: usize, data: &[Sample]) -> f64 {
    data.iter()
        .map(|s| (class.value(f, s.context, s.action) - s.reward).powi(2))
        .sum()
}

fn uniform_env(class: &FunctionClass, f: usize) -> Environment {
    Environment::from_class(class, f, ContextDist::uniform(class.n_contexts()).unwrap(), NoiseModel::Zero)
        .unwrap()
}

pub fn least_squares_is_an_exhaustive_minimizer() -> Outcome {
    check(class_and_samples(8), |(class, data)| {
        let f_hat = least_squares(&class, &data);
        let best = naive_loss(&class, f_hat, &data);
        for f in 0..class.len() {
            let l = naive_loss(&class, f, &data);
            prop_assert!(l >= best - 1e-9 * best.max(1.0), "f{} has loss {} < {}", f, l, best);
            prop_assert!(rel_close(squared_loss(&class, f, &data), l, 1e-12) || l == 0.0);
        }
        let mut tracker = LeastSquaresTracker::new(class.len());
        for s in &data {
            tracker.push(&class, s);
        }
        prop_assert_eq!(tracker.argmin(), f_hat);
        Ok(())
    })
}

pub fn confidence_radius_is_monotone() -> Outcome {
    check(
        (
            (1usize..10_000, 0usize..1000, 1usize..5000, 0usize..100),
            (0.0f64..3.0, 0.0f64..1.0, 0.0f64..3.0, 0.0f64..1.0),
            (0.01f64..0.5, 0.0f64..0.49, 0.01f64..4.0),
        ),
        |((t, dt, n, dn), (b, db, bb, dbb), (delta, ddelta, c))| {
            let base = ConfidenceConfig::new(delta, c, b, bb).unwrap();
            let r = base.radius(t, n);
            prop_assert!(r >= 0.0);
            prop_assert!(base.radius(t + dt, n) >= r);
            prop_assert!(base.radius(t, n + dn) >= r);
            let wider_b = ConfidenceConfig { range_bound: b + db, ..base };
            let wider_noise = ConfidenceConfig { noise_bound: bb + dbb, ..base };
            let looser = ConfidenceConfig { delta: delta + ddelta, ..base };
            prop_assert!(wider_b.radius(t, n) >= r);
            prop_assert!(wider_noise.radius(t, n) >= r);
            prop_assert!(looser.radius(t, n) <= r);
            Ok(())
        },
    )
}

/// Whenever `f*` lies in the ball, the optimistic value dominates the
/// optimal value in every context.
pub fn optimism_given_containment() -> Outcome {
    check(
        (class_and_data(8, 3, 4, 10), 0usize..64, 0usize..64, 0.0f64..3.0),
        |((class, data), star, center, beta)| {
            let (star, center) = (star % class.len(), center % class.len());
            let contained = sq_data_norm(&class, star, center, &data).sqrt() <= beta;
            let ball = confidence_ball(&class, center, &data, beta);
            prop_assert_eq!(ball.contains(&star), contained);
            if contained {
                for x in 0..class.n_contexts() {
                    let upper = (0..class.n_actions())
                        .map(|a| ball.iter().map(|&f| class.value(f, x, a)).fold(f64::NEG_INFINITY, f64::max))
                        .fold(f64::NEG_INFINITY, f64::max);
                    let best = (0..class.n_actions())
                        .map(|a| class.value(star, x, a))
                        .fold(f64::NEG_INFINITY, f64::max);
                    prop_assert!(upper >= best);
                    // The chosen action attains that optimistic value.
                    let a = optimistic_action(&class, center, &data, beta, x).unwrap();
                    let at_a = ball.iter().map(|&f| class.value(f, x, a)).fold(f64::NEG_INFINITY, f64::max);
                    prop_assert_eq!(at_a, upper);
                }
            }
            Ok(())
        },
    )
}

pub fn regret_is_nonnegative_and_shift_invariant() -> Outcome {
    check(
        (
            small_class(3, 4, 4),
            0usize..64,
            prop::collection::vec(prop::collection::vec(0usize..64, 4), 1..5),
            -5.0f64..5.0,
        ),
        |(class, f, acts, shift)| {
            let f = f % class.len();
            let (nx, na) = (class.n_contexts(), class.n_actions());
            let members: Vec<_> = acts
                .iter()
                .map(|m| DeterministicPolicy::new(m[..nx].iter().map(|a| a % na).collect()))
                .collect();
            let mix = MixturePolicy::new(members.clone()).unwrap();
            let env = uniform_env(&class, f);
            let shifted = Environment::from_table(
                class.table(f).iter().map(|v| v + shift).collect(),
                na,
                env.dist().clone(),
                NoiseModel::Zero,
            )
            .unwrap();
            let r = simple_regret(&mix, &env).unwrap();
            let s = simple_regret(&mix, &shifted).unwrap();
            prop_assert!(r.simple_regret >= -1e-9);
            prop_assert!((r.simple_regret - s.simple_regret).abs() <= 1e-9);
            prop_assert!((s.policy_value - r.policy_value - shift).abs() <= 1e-9);
            for m in &members {
                prop_assert!(simple_regret(m, &env).unwrap().simple_regret >= -1e-9);
            }
            let greedy = class.greedy_policy(f);
            prop_assert!(simple_regret(&greedy, &env).unwrap().simple_regret.abs() <= 1e-12);
            Ok(())
        },
    )
}

pub fn selection_is_an_exhaustive_argmin() -> Outcome {
    check(
        (
            tied_class(6, 3, 3),
            prop::collection::vec(1usize..7, 1..4),
            prop::collection::vec((0usize..3, 0usize..3, -4i32..=4), 2..20),
        ),
        |(class, sizes, rewards)| {
            let classes: Vec<_> = sizes
                .iter()
                .map(|&k| class.subclass(&(0..k.min(class.len())).collect::<Vec<_>>()).unwrap())
                .collect();
            let family = ModelFamily::new(classes, None).unwrap();
            let data = LabeledDataset::from_records(
                rewards
                    .iter()
                    .map(|&(x, a, r)| Sample {
                        context: x % class.n_contexts(),
                        action: a % class.n_actions(),
                        reward: r as f64 / 4.0,
                    })
                    .collect(),
            );
            let (train, test) = split_dataset(&data).unwrap();
            prop_assert_eq!(train.len(), data.len() / 2);
            prop_assert_eq!(train.len() + test.len(), data.len());
            let fits = fit_all(&family, &train);
            let losses = test_losses(&family, &fits, &test);
            let i = select_index(&family, &fits, &test);
            for (j, &l) in losses.iter().enumerate() {
                prop_assert!(l >= losses[i]);
                if j < i {
                    prop_assert!(l > losses[i]);
                }
                prop_assert_eq!(fits[j], least_squares(family.class(j), train.records()));
            }
            Ok(())
        },
    )
}
