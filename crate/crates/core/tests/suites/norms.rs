//! Data-norm geometry, datasets, policies and exact values.

use banditplan::domain::{
    argmax_lowest, argmin_lowest, ContextDist, DeterministicPolicy, MixturePolicy, Query,
    UnlabeledDataset,
};
use banditplan::norms::{
    data_norm, mixture_value, mixture_value_on, optimal_value_on, pairwise_sq_norms_update,
    policy_value_on, sq_data_norm, PairwiseNorms,
};
use proptest::prelude::*;

use super::{check, Outcome};
use crate::common::*;

fn dist_strategy(n: usize) -> impl Strategy<Value = ContextDist> {
    prop::collection::vec(0.01f64..1.0, n).prop_map(|w| {
        let s: f64 = w.iter().sum();
        ContextDist::new(w.iter().map(|v| v / s).collect()).unwrap()
    })
}

pub fn data_norm_is_a_pseudometric() -> Outcome {
    check(
        (class_and_data(6, 4, 4, 12), (0usize..64, 0usize..64, 0usize..64)),
        |((class, data), picks)| {
            let n = class.len();
            let (f, g, h) = (picks.0 % n, picks.1 % n, picks.2 % n);
            prop_assert_eq!(data_norm(&class, f, f, &data), 0.0);
            prop_assert_eq!(data_norm(&class, f, g, &data), data_norm(&class, g, f, &data));
            let lhs = data_norm(&class, f, h, &data);
            let rhs = data_norm(&class, f, g, &data) + data_norm(&class, g, h, &data);
            prop_assert!(lhs <= rhs + 1e-12, "triangle: {} > {}", lhs, rhs);
            prop_assert!(lhs >= 0.0);
            Ok(())
        },
    )
}

pub fn data_norm_grows_with_the_dataset() -> Outcome {
    check(
        (class_and_data(6, 4, 4, 12), (0usize..64, 0usize..64, 0usize..64, 0usize..64)),
        |((class, data), picks)| {
            let n = class.len();
            let (f, g) = (picks.0 % n, picks.1 % n);
            let z = Query::new(picks.2 % class.n_contexts(), picks.3 % class.n_actions());
            let mut ext = data.clone();
            ext.push(z);
            prop_assert!(data_norm(&class, f, g, &data) <= data_norm(&class, f, g, &ext));
            Ok(())
        },
    )
}

pub fn incremental_norms_match_batch() -> Outcome {
    check(class_and_data(8, 4, 4, 30), |(class, data)| {
        let mut inc = PairwiseNorms::zeros(class.len());
        for &q in &data {
            inc = pairwise_sq_norms_update(inc, &class, q);
        }
        let batch = PairwiseNorms::from_dataset(&class, &data);
        prop_assert_eq!(inc.records(), data.len());
        for f in 0..class.len() {
            for g in 0..class.len() {
                let want = naive_sq(&class, f, g, &data);
                prop_assert!(rel_close(inc.sq(f, g), want, 1e-9), "inc {} vs {}", inc.sq(f, g), want);
                prop_assert!(rel_close(batch.sq(f, g), want, 1e-9));
                prop_assert!(rel_close(sq_data_norm(&class, f, g, &data), want, 1e-9));
            }
            prop_assert_eq!(inc.sq(f, f), 0.0);
        }
        Ok(())
    })
}

pub fn mixture_value_is_the_mean_of_member_values() -> Outcome {
    let members = prop::collection::vec(prop::collection::vec(0usize..64, 5), 1..6);
    let setup = small_class(4, 5, 4).prop_flat_map(move |c| {
        let d = dist_strategy(c.n_contexts());
        (Just(c), d, members.clone(), 0usize..64)
    });
    check(setup, |(class, dist, members, f)| {
        let (nx, na) = (class.n_contexts(), class.n_actions());
        let f = f % class.len();
        let members: Vec<DeterministicPolicy> = members
            .iter()
            .map(|m| DeterministicPolicy::new(m[..nx].iter().map(|a| a % na).collect()))
            .collect();
        let mix = MixturePolicy::new(members.clone()).unwrap();
        let table = class.table(f);
        let mean = members
            .iter()
            .map(|m| (0..nx).map(|x| dist.probs()[x] * class.value(f, x, m.action(x))).sum::<f64>())
            .sum::<f64>()
            / members.len() as f64;
        prop_assert!((mixture_value_on(&mix, table, na, &dist) - mean).abs() <= 1e-12);
        prop_assert!((mixture_value(&mix, &class, f, &dist).unwrap() - mean).abs() <= 1e-12);
        for m in &members {
            prop_assert!(policy_value_on(m, table, na, &dist) <= optimal_value_on(table, na, &dist) + 1e-12);
        }
        Ok(())
    })
}

pub fn mixture_action_distribution_is_uniform() -> Outcome {
    check(
        (prop::collection::vec(prop::collection::vec(0usize..3, 4), 1..7), 0usize..4),
        |(members, x)| {
            let members: Vec<_> = members.into_iter().map(DeterministicPolicy::new).collect();
            let mix = MixturePolicy::new(members.clone()).unwrap();
            let dist = mix.action_distribution(x, 3);
            for (a, p) in dist.iter().enumerate() {
                let count = members.iter().filter(|m| m.action(x) == a).count();
                prop_assert!((p - count as f64 / members.len() as f64).abs() <= 1e-12);
            }
            Ok(())
        },
    )
}

pub fn argmax_and_argmin_pick_the_lowest_extremum() -> Outcome {
    check(prop::collection::vec(-3i32..=3, 1..12), |v| {
        let v: Vec<f64> = v.into_iter().map(f64::from).collect();
        let hi = argmax_lowest(&v);
        let lo = argmin_lowest(&v);
        for (i, &x) in v.iter().enumerate() {
            prop_assert!(x <= v[hi]);
            prop_assert!(x >= v[lo]);
            if i < hi {
                prop_assert!(x < v[hi]);
            }
            if i < lo {
                prop_assert!(x > v[lo]);
            }
        }
        Ok(())
    })
}

pub fn greedy_policy_is_an_exhaustive_argmax() -> Outcome {
    check(tied_class(4, 4, 5), |class| {
        for f in 0..class.len() {
            let pi = class.greedy_policy(f);
            for x in 0..class.n_contexts() {
                let a = pi.action(x);
                for b in 0..class.n_actions() {
                    prop_assert!(class.value(f, x, b) <= class.value(f, x, a));
                    if b < a {
                        prop_assert!(class.value(f, x, b) < class.value(f, x, a));
                    }
                }
            }
        }
        Ok(())
    })
}

pub fn prefix_holds_the_first_t_minus_one_records() -> Outcome {
    check(class_and_data(1, 4, 4, 20), |(_, data)| {
        let ds = UnlabeledDataset::from_records(data.clone());
        prop_assert!(ds.prefix(1).is_empty());
        for t in 1..=data.len() + 1 {
            prop_assert_eq!(ds.prefix(t), &data[..t - 1]);
        }
        Ok(())
    })
}

pub fn context_distributions_sum_to_one() -> Outcome {
    check((1usize..10).prop_flat_map(dist_strategy), |d| {
        let s: f64 = d.probs().iter().sum();
        prop_assert!((s - 1.0).abs() <= 1e-12);
        prop_assert!(d.probs().iter().all(|&p| p >= 0.0));
        Ok(())
    })
}
