#![allow(dead_code)]

use mvpois::{CommonShockParams, ComonotonicParams, Model, ThinningParams};
use proptest::prelude::*;

pub fn common_model(max_d: usize) -> impl Strategy<Value = Model> {
    (0.1f64..10.0, prop::collection::vec(0.1f64..10.0, 1..=max_d))
        .prop_map(|(t0, t)| CommonShockParams::new(t0, t).unwrap().into())
}

pub fn comonotonic_model(max_d: usize) -> impl Strategy<Value = Model> {
    (prop::collection::vec(0.1f64..15.0, 1..=max_d), 0.0f64..=1.0)
        .prop_map(|(l, th)| ComonotonicParams::new(l, th).unwrap().into())
}

pub fn thinning_model(max_d: usize, max_l: usize) -> impl Strategy<Value = Model> {
    (1..=max_l, 1..=max_d)
        .prop_flat_map(|(l, d)| {
            (
                prop::collection::vec(0.1f64..10.0, l),
                prop::collection::vec(prop::collection::vec(0.05f64..=1.0, l), d),
            )
        })
        .prop_map(|(t, p)| ThinningParams::new(t, p).unwrap().into())
}

pub fn any_model(max_d: usize) -> impl Strategy<Value = Model> {
    prop_oneof![common_model(max_d), comonotonic_model(max_d), thinning_model(max_d, 3)]
}

/// Poisson CDF by direct summation of the mass function.
pub fn poisson_cdf_direct(rate: f64, k: i64) -> f64 {
    if k < 0 {
        return 0.0;
    }
    let mut term = (-rate).exp();
    let mut s = term;
    for i in 1..=k {
        term *= rate / i as f64;
        s += term;
    }
    s.min(1.0)
}
