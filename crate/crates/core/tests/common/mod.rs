#![allow(dead_code)]

use banditplan::domain::{ActionSpace, ContextSpace, FunctionClass, Query};
use proptest::prelude::*;

pub const CASES: u32 = 1000;

pub fn config() -> ProptestConfig {
    ProptestConfig {
        cases: CASES,
        ..ProptestConfig::default()
    }
}

pub fn class_from(nf: usize, nx: usize, na: usize, values: Vec<f64>) -> FunctionClass {
    FunctionClass::new(
        ContextSpace::numbered(nx).unwrap(),
        ActionSpace::numbered(na).unwrap(),
        values,
        1.0,
    )
    .unwrap_or_else(|e| panic!("bad generated class {nf}x{nx}x{na}: {e}"))
}

/// Small random classes with values in `[-1, 1]`.
pub fn small_class(max_f: usize, max_x: usize, max_a: usize) -> impl Strategy<Value = FunctionClass> {
    (1..=max_f, 1..=max_x, 1..=max_a).prop_flat_map(|(nf, nx, na)| {
        prop::collection::vec(-1.0f64..=1.0, nf * nx * na)
            .prop_map(move |v| class_from(nf, nx, na, v))
    })
}

/// Same, but values on a coarse grid so that ties are common.
pub fn tied_class(max_f: usize, max_x: usize, max_a: usize) -> impl Strategy<Value = FunctionClass> {
    (1..=max_f, 1..=max_x, 1..=max_a).prop_flat_map(|(nf, nx, na)| {
        prop::collection::vec(-4i32..=4, nf * nx * na).prop_map(move |v| {
            class_from(nf, nx, na, v.into_iter().map(|k| k as f64 / 4.0).collect())
        })
    })
}

pub fn queries(class: &FunctionClass, max_len: usize) -> impl Strategy<Value = Vec<Query>> {
    let (nx, na) = (class.n_contexts(), class.n_actions());
    prop::collection::vec((0..nx, 0..na).prop_map(|(x, a)| Query::new(x, a)), 0..=max_len)
}

/// A class together with a dataset on its domain.
pub fn class_and_data(
    max_f: usize,
    max_x: usize,
    max_a: usize,
    max_len: usize,
) -> impl Strategy<Value = (FunctionClass, Vec<Query>)> {
    small_class(max_f, max_x, max_a).prop_flat_map(move |c| {
        let q = queries(&c, max_len);
        (Just(c), q)
    })
}

pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// `‖f − g‖²_D` by direct summation.
pub fn naive_sq(class: &FunctionClass, f: usize, g: usize, data: &[Query]) -> f64 {
    let mut s = 0.0;
    for q in data {
        let d = class.value(f, q.context, q.action) - class.value(g, q.context, q.action);
        s += d * d;
    }
    s
}

/// `ω` from its definition: the largest `f(x,a) − f'(x,a)` over ordered
/// pairs within `radius` on `data`.
pub fn naive_omega(class: &FunctionClass, x: usize, a: usize, data: &[Query], radius: f64) -> f64 {
    let mut best = 0.0f64;
    for f in 0..class.len() {
        for g in 0..class.len() {
            if naive_sq(class, f, g, data).sqrt() <= radius {
                best = best.max(class.value(f, x, a) - class.value(g, x, a));
            }
        }
    }
    best
}
