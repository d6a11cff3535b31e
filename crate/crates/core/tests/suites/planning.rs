//! Uncertainty radius and the eluder planner.

use banditplan::domain::Query;
use banditplan::norms::PairwiseNorms;
use banditplan::planning::{
    eluder_plan, plan_policy_action, uncertainty_radius, Plan, PlanAction, PlanCursor, RadiusIndex,
};
use banditplan::regression::ConfidenceConfig;
use proptest::prelude::*;

use super::{check, Outcome};
use crate::common::*;

pub fn omega_matches_its_definition() -> Outcome {
    check(
        (class_and_data(6, 3, 3, 8), 0usize..8, 0usize..8, 0.0f64..2.0),
        |((class, data), x, a, r)| {
            let (x, a) = (x % class.n_contexts(), a % class.n_actions());
            let w = uncertainty_radius(&class, x, a, &data, r).unwrap();
            let want = naive_omega(&class, x, a, &data, r);
            prop_assert!((w - want).abs() <= 1e-12, "{} vs {}", w, want);
            Ok(())
        },
    )
}

pub fn omega_is_nonnegative_and_monotone_in_radius() -> Outcome {
    check(
        (class_and_data(6, 3, 3, 8), 0usize..8, 0usize..8, 0.0f64..2.0, 0.0f64..2.0),
        |((class, data), x, a, r1, dr)| {
            let (x, a) = (x % class.n_contexts(), a % class.n_actions());
            let w1 = uncertainty_radius(&class, x, a, &data, r1).unwrap();
            let w2 = uncertainty_radius(&class, x, a, &data, r1 + dr).unwrap();
            prop_assert!(w1 >= 0.0);
            prop_assert!(w1 <= w2);
            Ok(())
        },
    )
}

pub fn omega_shrinks_as_data_grows() -> Outcome {
    check(
        (class_and_data(6, 3, 3, 8), (0usize..8, 0usize..8), (0usize..8, 0usize..8), 0.0f64..2.0),
        |((class, data), (x, a), (zx, za), r)| {
            let (x, a) = (x % class.n_contexts(), a % class.n_actions());
            let mut ext = data.clone();
            ext.push(Query::new(zx % class.n_contexts(), za % class.n_actions()));
            let before = uncertainty_radius(&class, x, a, &data, r).unwrap();
            let after = uncertainty_radius(&class, x, a, &ext, r).unwrap();
            prop_assert!(after <= before);
            Ok(())
        },
    )
}

/// Ties in ω are common on a coarse value grid; the lowest action must win.
pub fn radius_argmax_is_exhaustive_with_lowest_ties() -> Outcome {
    let setup = tied_class(5, 3, 4).prop_flat_map(|c| {
        let q = queries(&c, 6);
        (Just(c), q)
    });
    check((setup, 0usize..8, 0.0f64..2.0), |((class, data), x, r)| {
        let x = x % class.n_contexts();
        let norms = PairwiseNorms::from_dataset(&class, &data);
        let (a, w) = RadiusIndex::new(&class).argmax_action(&class, &norms, x, r);
        let all: Vec<f64> = (0..class.n_actions())
            .map(|b| naive_omega(&class, x, b, &data, r))
            .collect();
        prop_assert!((w - all[a]).abs() <= 1e-12);
        for (b, &v) in all.iter().enumerate() {
            prop_assert!(v <= all[a] + 1e-12);
            if b < a {
                prop_assert!(v < all[a]);
            }
        }
        Ok(())
    })
}

pub fn planner_is_deterministic_and_replayable() -> Outcome {
    let setup = small_class(6, 3, 3).prop_flat_map(|c| {
        let x = prop::collection::vec(0..c.n_contexts(), 1..=12);
        (Just(c), x)
    });
    check((setup, 0.01f64..0.5), |((class, ctx), c_bar)| {
        let cfg = ConfidenceConfig::new(0.1, c_bar, 1.0, 1.0).unwrap();
        let t = ctx.len();
        let p1 = eluder_plan(&class, &ctx, t, &cfg).unwrap();
        let p2 = eluder_plan(&class, &ctx, t, &cfg).unwrap();
        prop_assert_eq!(&p1, &p2);
        prop_assert_eq!(p1.planner_dataset().len(), t);
        let back = Plan::from_toml(&p1.to_toml()).unwrap();
        prop_assert_eq!(&back, &p1);
        // π_t(x_t) recomputed from D_t is the recorded action, and π_t is total on X.
        let mut cursor = PlanCursor::new(&p1, &class).unwrap();
        for (i, q) in p1.planner_dataset().records().iter().enumerate() {
            let step = i + 1;
            prop_assert_eq!(
                plan_policy_action(&p1, &class, step, q.context).unwrap(),
                PlanAction::Play(q.action)
            );
            for x in 0..class.n_contexts() {
                let direct = plan_policy_action(&p1, &class, step, x).unwrap();
                prop_assert_eq!(cursor.action(x), direct);
            }
            cursor.advance();
        }
        Ok(())
    })
}
