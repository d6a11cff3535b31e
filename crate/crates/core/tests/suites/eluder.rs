//! ε-independence, eluder certificates and the tree class.

use banditplan::domain::{FunctionClass, Query};
use banditplan::eluder::{
    eluder_dimension_estimate, eps_dependent, full_domain, longest_independent_sequence,
    SearchMode,
};
use banditplan::treebandit::{build_tree_class, tree_eluder_certificate_at, TreeClassSpec};
use proptest::prelude::*;

use super::{check, Outcome};
use crate::common::*;

/// Dependence straight from the definition.
fn naive_dependent(class: &FunctionClass, z: Query, preds: &[Query], eps: f64) -> bool {
    for f in 0..class.len() {
        for g in 0..class.len() {
            let close = naive_sq(class, f, g, preds).sqrt() <= eps;
            let gap = (class.value(f, z.context, z.action) - class.value(g, z.context, z.action)).abs();
            if close && gap > eps {
                return false;
            }
        }
    }
    true
}

/// Longest independent sequence by enumerating every ordered sequence of
/// distinct domain points.
fn naive_longest(class: &FunctionClass, domain: &[Query], eps: f64) -> usize {
    fn go(class: &FunctionClass, domain: &[Query], eps: f64, seq: &mut Vec<Query>, used: &mut [bool]) -> usize {
        let mut best = seq.len();
        for i in 0..domain.len() {
            if used[i] || naive_dependent(class, domain[i], seq, eps) {
                continue;
            }
            used[i] = true;
            seq.push(domain[i]);
            best = best.max(go(class, domain, eps, seq, used));
            seq.pop();
            used[i] = false;
        }
        best
    }
    go(class, domain, eps, &mut Vec::new(), &mut vec![false; domain.len()])
}

pub fn dependence_matches_its_definition() -> Outcome {
    check(
        (class_and_data(6, 3, 3, 6), 0usize..8, 0usize..8, 0.01f64..1.5),
        |((class, data), zx, za, eps)| {
            let z = Query::new(zx % class.n_contexts(), za % class.n_actions());
            prop_assert_eq!(eps_dependent(&class, z, &data, eps), naive_dependent(&class, z, &data, eps));
            Ok(())
        },
    )
}

pub fn certificates_replay_and_greedy_never_beats_exact() -> Outcome {
    check((small_class(5, 2, 3), 0.01f64..1.0), |(class, eps)| {
        let domain = full_domain(&class);
        let greedy = longest_independent_sequence(&class, &domain, eps, SearchMode::Greedy).unwrap();
        let exact = longest_independent_sequence(&class, &domain, eps, SearchMode::Exact).unwrap();
        for cert in [&greedy, &exact] {
            prop_assert!(cert.verify(&class));
            prop_assert_eq!(cert.verified_length, cert.points.len());
            for i in 0..cert.points.len() {
                prop_assert!(!naive_dependent(&class, cert.points[i], &cert.points[..i], eps));
            }
        }
        prop_assert!(greedy.verified_length <= exact.verified_length);
        prop_assert_eq!(exact.verified_length, naive_longest(&class, &domain, eps));
        Ok(())
    })
}

/// With a shared grid `G`, the estimate at `ε` is the max over
/// `{g ∈ G : g ≥ ε}`, a set that shrinks as `ε` grows.
pub fn estimate_is_monotone_in_eps() -> Outcome {
    check(
        (
            small_class(5, 2, 3),
            0.01f64..1.0,
            0.0f64..1.0,
            prop::collection::vec(0.01f64..2.0, 1..6),
        ),
        |(class, e1, de, grid)| {
            let e2 = e1 + de;
            let domain = full_domain(&class);
            let above = |e: f64| -> Vec<f64> { grid.iter().copied().filter(|&g| g >= e).collect() };
            prop_assume!(!above(e2).is_empty());
            let d1 = eluder_dimension_estimate(&class, &domain, e1, &above(e1), SearchMode::Exact).unwrap();
            let d2 = eluder_dimension_estimate(&class, &domain, e2, &above(e2), SearchMode::Exact).unwrap();
            prop_assert!(d1 >= d2, "d({}) = {} < d({}) = {}", e1, d1, e2, d2);
            Ok(())
        },
    )
}

pub fn tree_functions_have_the_three_level_structure() -> Outcome {
    check((2u32..=8, 0.001f64..=(1.0 / 6.0)), |(height, eps)| {
        let spec = TreeClassSpec::new(height, eps).unwrap();
        let tree = build_tree_class(&spec).unwrap();
        prop_assert_eq!(tree.class.len(), spec.n_leaves());
        prop_assert_eq!(tree.class.n_actions(), spec.n_nodes());
        let levels = [1.0, 1.0 - 2.0 * eps, 1.0 - 12.0 * eps];
        for j in 0..tree.class.len() {
            let row = tree.class.table(j);
            prop_assert!(row.iter().all(|v| levels.contains(v) && v.abs() <= 1.0));
            let top: Vec<usize> = (0..row.len()).filter(|&a| row[a] == 1.0).collect();
            prop_assert_eq!(top.len(), 1);
            prop_assert!(spec.is_leaf(top[0]));
            prop_assert_eq!(top[0], tree.leaf_of(j));
            let on_path = row.iter().filter(|&&v| v >= 1.0 - 2.0 * eps).count();
            prop_assert_eq!(on_path, height as usize);
            let path = spec.path(j);
            prop_assert_eq!(path.len(), height as usize);
            prop_assert!(path.iter().all(|&a| row[a] >= 1.0 - 2.0 * eps));
        }
        Ok(())
    })
}

pub fn tree_certificate_holds_below_twelve_eps() -> Outcome {
    check(
        (2u32..=6, 0.001f64..=(1.0 / 6.0), 0.001f64..0.999),
        |(height, eps, frac)| {
            let spec = TreeClassSpec::new(height, eps).unwrap();
            let tol = frac * 12.0 * eps;
            let cert = tree_eluder_certificate_at(&spec, tol).unwrap();
            prop_assert_eq!(cert.verified_length, (1usize << (height - 1)) - 1);
            prop_assert!(cert.verify(&build_tree_class(&spec).unwrap().class));
            Ok(())
        },
    )
}
