//! Agreement between independent evaluation routes and model reductions.

mod common;

use common::thinning_model;
use mvpois::extrema::*;
use mvpois::models::{common_from_comonotonic_equal_rates, thinning_from_common};
use mvpois::oracle::brute_force_extreme_cdf;
use mvpois::{CommonShockParams, ComonotonicParams, ExtremeQuery, Model, ThinningParams};
use proptest::prelude::*;

fn queries(x: u32) -> [ExtremeQuery; 2] {
    [ExtremeQuery::max(f64::from(x)), ExtremeQuery::min(f64::from(x))]
}

#[test]
fn comonotonic_forms_agree() {
    for theta in [0.1, 0.5, 0.9] {
        let p = ComonotonicParams::new(vec![6.0, 7.0, 8.0], theta).unwrap();
        for x in 0..=15 {
            for q in queries(x) {
                let a = comonotonic_extreme_cdf_nested(&p, &q).unwrap().value;
                let b = comonotonic_extreme_cdf_copula(&p, &q).unwrap().value;
                let c = comonotonic_extreme_cdf_integral(&p, &q).unwrap().value;
                assert!((a - b).abs() <= 1e-10 && (a - c).abs() <= 1e-10, "θ={theta} {q:?}: {a} {b} {c}");
            }
        }
    }
}

#[test]
fn thinning_single_background_forms_agree() {
    let p = ThinningParams::new(vec![15.3829], vec![vec![0.39], vec![0.4551], vec![0.5201]]).unwrap();
    for x in 0..=30 {
        for q in queries(x) {
            let a = thinning_extreme_cdf(&p, &q).unwrap().value;
            let b = thinning_l1_extreme_cdf(&p, &q).unwrap().value;
            assert!((a - b).abs() <= 1e-11, "{q:?}: {a} {b}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn thinning_reduces_to_common(t0 in 0.2f64..4.0, t in prop::collection::vec(0.2f64..4.0, 1..=3)) {
        let c = CommonShockParams::new(t0, t).unwrap();
        let th = thinning_from_common(&c);
        for x in 0..=20 {
            for q in queries(x) {
                let a = common_shock_extreme_cdf(&c, &q).unwrap().value;
                let b = thinning_extreme_cdf(&th, &q).unwrap().value;
                prop_assert!((a - b).abs() <= 1e-12, "{q:?}: {a} {b}");
            }
        }
    }

    #[test]
    fn equal_rate_comonotonic_reduces_to_common(lambda in 0.5f64..12.0, theta in 0.05f64..0.95, d in 1usize..=4) {
        let p = ComonotonicParams::new(vec![lambda; d], theta).unwrap();
        let c = common_from_comonotonic_equal_rates(&p).unwrap();
        for x in 0..=20 {
            for q in queries(x) {
                let a = comonotonic_extreme_cdf(&p, &q).unwrap().value;
                let b = common_shock_extreme_cdf(&c, &q).unwrap().value;
                prop_assert!((a - b).abs() <= 1e-12, "{q:?}: {a} {b}");
            }
        }
    }

    #[test]
    fn thinning_lattice_matches_enumeration(m in thinning_model(3, 3)) {
        let Model::Thinning(ref p) = m else { unreachable!() };
        // Keep the enumerated lattice small.
        prop_assume!(p.thetas().iter().sum::<f64>() <= 12.0);
        for x in 0..=12 {
            for q in queries(x) {
                let a = thinning_extreme_cdf(p, &q).unwrap().value;
                let b = brute_force_extreme_cdf(&m, &q, 1e-13).unwrap();
                prop_assert!((a - b).abs() <= 1e-10, "{q:?}: {a} {b}");
            }
        }
    }
}
