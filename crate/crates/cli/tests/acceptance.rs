//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any FAIL.
//!
//! Run with `cargo test --release -p mvpois-cli --test acceptance`.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::{any_model, poisson_cdf_direct};
use mvpois::extrema::*;
use mvpois::models::{common_from_comonotonic_equal_rates, thinning_from_common};
use mvpois::oracle::brute_force_extreme_cdf;
use mvpois::specfun::{ln_gamma, reg_gamma_p, reg_gamma_q, reg_inc_beta};
use mvpois::{CommonShockParams, ComonotonicParams, ExtremeKind, ExtremeQuery, Method, Model, ThinningParams};
use mvpois_cli::commands::monte_carlo;
use mvpois_cli::reproduce::{table1_cells, table1_models, table2_cells, table3_cells, ParamSet, RatioCell};
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::{Config, TestRunner};

const TAIL_EPS: f64 = 1e-12;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn queries(x: u32) -> [ExtremeQuery; 2] {
    [ExtremeQuery::max(f64::from(x)), ExtremeQuery::min(f64::from(x))]
}

fn value(m: &Model, q: &ExtremeQuery) -> f64 {
    extreme_cdf(m, q).unwrap().value
}

fn table1() -> Verdict {
    let start = Instant::now();
    let cells = table1_cells(ParamSet::Stated, TAIL_EPS).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let bad: Vec<_> = cells.iter().filter(|c| c.abs_diff() > 1e-4).collect();
    let worst = cells.iter().map(|c| c.abs_diff()).fold(0.0, f64::max);
    let mut by_config: Vec<(String, usize)> = Vec::new();
    for c in &bad {
        match by_config.iter_mut().find(|(l, _)| *l == c.config) {
            Some((_, n)) => *n += 1,
            None => by_config.push((c.config.clone(), 1)),
        }
    }
    let recon = table1_cells(ParamSet::Reconstructed, TAIL_EPS).unwrap();
    let recon_ok = recon.iter().filter(|c| c.abs_diff() <= 1e-4).count();
    let typo_ok = recon.iter().filter(|c| !c.exponent_typo && c.abs_diff() <= 1e-4).count();
    let typo_total = recon.iter().filter(|c| !c.exponent_typo).count();
    verdict(
        bad.is_empty() && secs <= 10.0 && cells.len() == 90,
        format!(
            "stated parameters: {}/{} within 1e-4, worst {worst:.2e}, {secs:.2}s; failing cells per column {by_config:?}; \
             [info] reconstructed parameters: {recon_ok}/{} overall, {typo_ok}/{typo_total} excluding printed exponent typos",
            cells.len() - bad.len(),
            cells.len(),
            recon.len(),
        ),
    )
}

fn worst_of(cells: &[&RatioCell]) -> String {
    cells
        .iter()
        .max_by(|a, b| a.abs_diff().total_cmp(&b.abs_diff()))
        .map(|c| format!("{} @ {} diff {:.2e}", c.row, c.param, c.abs_diff()))
        .unwrap_or_default()
}

fn table2() -> Verdict {
    let start = Instant::now();
    let cells = table2_cells().unwrap();
    let secs = start.elapsed().as_secs_f64();
    let within = cells.iter().filter(|c| c.abs_diff() <= 1e-3).count();
    let d200: Vec<_> = cells
        .iter()
        .filter(|c| c.row.starts_with("comonotonic") && c.param == 200.0)
        .collect();
    let integral = !d200.is_empty() && d200.iter().all(|c| c.method == Method::ComonotonicIntegral.as_str());
    let all: Vec<_> = cells.iter().collect();
    verdict(
        cells.len() == 15 && within == 15 && integral && secs <= 60.0,
        format!(
            "{within}/{} within 1e-3, worst {}, comonotonic d=200 via integral: {integral}, {secs:.2}s",
            cells.len(),
            worst_of(&all)
        ),
    )
}

fn table3() -> Verdict {
    let cells = table3_cells().unwrap();
    let quant: Vec<_> = cells.iter().filter(|c| !c.qualitative).collect();
    let mut failing: Vec<&str> = quant
        .iter()
        .filter(|c| c.abs_diff() > 2e-3)
        .map(|c| c.row.as_str())
        .collect();
    failing.dedup();
    let qual: Vec<f64> = cells.iter().filter(|c| c.qualitative).map(|c| c.ratio).collect();
    let increasing = qual.windows(2).all(|w| w[0] < w[1]);
    let toward_one = qual.iter().all(|&r| r <= 1.0) && qual.windows(2).all(|w| (1.0 - w[1]).abs() < (1.0 - w[0]).abs());
    let within = quant.iter().filter(|c| c.abs_diff() <= 2e-3).count();
    verdict(
        failing.is_empty() && !qual.is_empty() && increasing && toward_one,
        format!(
            "{within}/{} quantitative cells within 2e-3, worst {}, rows out of tolerance {failing:?}; \
             qualitative row {qual:.4?} increasing: {increasing}, approaching 1: {toward_one}",
            quant.len(),
            worst_of(&quant)
        ),
    )
}

fn cross_forms() -> Verdict {
    let mut worst_co = 0.0f64;
    for theta in [0.1, 0.5, 0.9] {
        let p = ComonotonicParams::new(vec![6.0, 7.0, 8.0], theta).unwrap();
        for x in 0..=15 {
            for q in queries(x) {
                let a = comonotonic_extreme_cdf_nested(&p, &q).unwrap().value;
                let b = comonotonic_extreme_cdf_copula(&p, &q).unwrap().value;
                let c = comonotonic_extreme_cdf_integral(&p, &q).unwrap().value;
                worst_co = worst_co.max((a - b).abs()).max((a - c).abs()).max((b - c).abs());
            }
        }
    }
    let mut worst_th = 0.0f64;
    let mut found = 0;
    for (_, m) in table1_models(ParamSet::Stated).unwrap() {
        let Model::Thinning(p) = m else { continue };
        if p.background_count() != 1 {
            continue;
        }
        found += 1;
        for x in 0..=30 {
            for q in queries(x) {
                let a = thinning_extreme_cdf(&p, &q).unwrap().value;
                let b = thinning_l1_extreme_cdf(&p, &q).unwrap().value;
                worst_th = worst_th.max((a - b).abs());
            }
        }
    }
    verdict(
        worst_co <= 1e-10 && worst_th <= 1e-11 && found > 0,
        format!("comonotonic forms max diff {worst_co:.2e} (≤1e-10); thinning general vs l=1 max diff {worst_th:.2e} (≤1e-11) over {found} set(s)"),
    )
}

fn reductions() -> Verdict {
    let mut runner = TestRunner::deterministic();
    let common = (0.1f64..10.0, prop::collection::vec(0.1f64..10.0, 1..=4));
    let como = (0.1f64..15.0, 0.0f64..=1.0, 1usize..=4);
    let mut worst_th = 0.0f64;
    let mut worst_co = 0.0f64;
    for _ in 0..3 {
        let (t0, t) = common.new_tree(&mut runner).unwrap().current();
        let c = CommonShockParams::new(t0, t).unwrap();
        let th = thinning_from_common(&c);
        let (lambda, theta, d) = como.new_tree(&mut runner).unwrap().current();
        let p = ComonotonicParams::new(vec![lambda; d], theta).unwrap();
        let pc = common_from_comonotonic_equal_rates(&p).unwrap();
        for x in 0..=20 {
            for q in queries(x) {
                let a = common_shock_extreme_cdf(&c, &q).unwrap().value;
                worst_th = worst_th.max((a - thinning_extreme_cdf(&th, &q).unwrap().value).abs());
                let b = comonotonic_extreme_cdf(&p, &q).unwrap().value;
                worst_co = worst_co.max((b - common_shock_extreme_cdf(&pc, &q).unwrap().value).abs());
            }
        }
    }
    verdict(
        worst_th <= 1e-12 && worst_co <= 1e-12,
        format!("thinning_from_common max diff {worst_th:.2e}; common_from_comonotonic_equal_rates max diff {worst_co:.2e} (≤1e-12, 3 sets each)"),
    )
}

fn oracles() -> Verdict {
    let small: Vec<Model> = vec![
        CommonShockParams::new(0.5, vec![0.5, 0.5]).unwrap().into(),
        CommonShockParams::new(1.0, vec![0.3, 0.7, 1.0]).unwrap().into(),
        CommonShockParams::new(0.2, vec![2.5]).unwrap().into(),
        ThinningParams::new(vec![1.0], vec![vec![1.0], vec![1.0]]).unwrap().into(),
        ThinningParams::new(vec![1.5, 1.2], vec![vec![0.3, 0.6], vec![0.7, 0.2], vec![0.5, 0.5]]).unwrap().into(),
        ThinningParams::new(vec![0.8, 1.0, 1.2], vec![vec![0.9, 0.1, 0.5], vec![0.2, 0.8, 0.5]]).unwrap().into(),
    ];
    let mut worst_bf = 0.0f64;
    for m in &small {
        for x in 0..=10 {
            for q in queries(x) {
                let r = extreme_cdf(m, &q).unwrap();
                let bf = brute_force_extreme_cdf(m, &q, 1e-13).unwrap();
                worst_bf = worst_bf.max((r.value - bf).abs() - r.trunc_bound);
            }
        }
    }
    let xs = [4.0, 7.0, 10.0, 13.0];
    let mut worst_z = 0.0f64;
    let mut misses = Vec::new();
    let mut sets = 0;
    for (i, (label, m)) in table1_models(ParamSet::Stated).unwrap().into_iter().enumerate() {
        sets += 1;
        for kind in [ExtremeKind::Max, ExtremeKind::Min] {
            let est = monte_carlo(&m, kind, &xs, 1_000_000, 1000 + i as u64, 16).unwrap();
            for (&x, e) in xs.iter().zip(&est) {
                let exact = value(&m, &ExtremeQuery::new(kind, x));
                let err = (e.estimate - exact).abs();
                let z = if e.std_err > 0.0 { err / e.std_err } else if err == 0.0 { 0.0 } else { f64::INFINITY };
                worst_z = worst_z.max(z);
                if z > 4.0 {
                    misses.push(format!("{label} {kind:?} x={x} z={z:.2}"));
                }
            }
        }
    }
    verdict(
        worst_bf <= 1e-10 && misses.is_empty(),
        format!(
            "brute force on 6 instances: max excess diff {worst_bf:.2e} (≤1e-10); Monte Carlo n=1e6 on {sets} sets: worst |z| {worst_z:.2} (≤4) {misses:?}"
        ),
    )
}

const PROPERTY_CASES: u32 = 128;

fn property_runner() -> TestRunner {
    TestRunner::new(Config {
        cases: PROPERTY_CASES,
        failure_persistence: None,
        rng_algorithm: proptest::test_runner::RngAlgorithm::ChaCha,
        ..Config::default()
    })
}

fn properties() -> Verdict {
    let f = |m: &Model, q: ExtremeQuery| value(m, &q);
    let mut failed = Vec::new();
    let mut record = |name: &str, r: Result<(), String>| {
        if let Err(e) = r {
            failed.push(format!("{name}: {e}"));
        }
    };
    record(
        "monotone",
        property_runner().run(&any_model(4), |m| {
            for kind in [ExtremeQuery::max, ExtremeQuery::min] {
                let mut prev = 0.0;
                for x in 0..30 {
                    let v = f(&m, kind(f64::from(x)));
                    prop_assert!(v >= prev - 1e-12);
                    prev = v;
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string()),
    );
    record(
        "limits",
        property_runner().run(&any_model(4), |m| {
            for kind in [ExtremeQuery::max, ExtremeQuery::min] {
                prop_assert_eq!(f(&m, kind(-1.0)), 0.0);
                prop_assert!((f(&m, kind(200.0)) - 1.0).abs() < 1e-10);
            }
            Ok(())
        })
        .map_err(|e| e.to_string()),
    );
    record(
        "min_ge_max",
        property_runner().run(&(any_model(4), 0u32..30), |(m, x)| {
            let x = f64::from(x);
            prop_assert!(f(&m, ExtremeQuery::min(x)) >= f(&m, ExtremeQuery::max(x)) - 1e-12);
            Ok(())
        })
        .map_err(|e| e.to_string()),
    );
    record(
        "d1_collapse",
        property_runner().run(&(any_model(1), 0i64..30), |(m, x)| {
            let g = poisson_cdf_direct(m.marginal_rates()[0], x);
            prop_assert!((f(&m, ExtremeQuery::max(x as f64)) - g).abs() < 1e-11);
            prop_assert!((f(&m, ExtremeQuery::min(x as f64)) - g).abs() < 1e-11);
            Ok(())
        })
        .map_err(|e| e.to_string()),
    );
    record(
        "floor",
        property_runner().run(&(any_model(4), 0u32..25, 0.0f64..0.999), |(m, x, frac)| {
            for kind in [ExtremeQuery::max, ExtremeQuery::min] {
                prop_assert_eq!(f(&m, kind(f64::from(x) + frac)), f(&m, kind(f64::from(x))));
            }
            Ok(())
        })
        .map_err(|e| e.to_string()),
    );
    verdict(
        failed.is_empty(),
        format!("5 properties × {PROPERTY_CASES} cases; failures {failed:?}"),
    )
}

const GRID_POINTS: u32 = 10_000;

fn special_functions() -> Verdict {
    let runner = || {
        TestRunner::new(Config {
            cases: GRID_POINTS,
            failure_persistence: None,
            rng_algorithm: proptest::test_runner::RngAlgorithm::ChaCha,
            ..Config::default()
        })
    };
    let mut failed = Vec::new();
    let complement = runner().run(&(0.1f64..100.0, 0.0f64..300.0), |(a, x)| {
        let e = (reg_gamma_p(a, x).unwrap().value + reg_gamma_q(a, x).unwrap().value - 1.0).abs();
        prop_assert!(e <= 1e-13, "a={a} x={x} {e:e}");
        Ok(())
    })
    .map_err(|e| e.to_string());
    let recurrence = runner().run(&(1u32..60, 0.0f64..120.0), |(a, x)| {
        let a = f64::from(a);
        let step = if x > 0.0 { (a * x.ln() - x - ln_gamma(a + 1.0).unwrap()).exp() } else { 0.0 };
        let e = (reg_gamma_q(a + 1.0, x).unwrap().value - reg_gamma_q(a, x).unwrap().value - step).abs();
        prop_assert!(e <= 1e-12, "a={a} x={x} {e:e}");
        Ok(())
    })
    .map_err(|e| e.to_string());
    let symmetry = runner().run(&(0.0f64..=1.0, 0.05f64..60.0, 0.05f64..60.0), |(x, a, b)| {
        let e = (reg_inc_beta(x, a, b).unwrap().value + reg_inc_beta(1.0 - x, b, a).unwrap().value - 1.0).abs();
        prop_assert!(e <= 1e-12, "x={x} a={a} b={b} {e:e}");
        Ok(())
    })
    .map_err(|e| e.to_string());
    for (name, r) in [("complement", complement), ("recurrence", recurrence), ("symmetry", symmetry)] {
        if let Err(e) = r {
            failed.push(format!("{name}: {e}"));
        }
    }
    verdict(
        failed.is_empty(),
        format!("gamma complement (≤1e-13), integer recurrence (≤1e-12), beta symmetry (≤1e-12) on {GRID_POINTS} points each; failures {failed:?}"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 8] = [
        ("table 1 reproduction", table1),
        ("table 2 reproduction", table2),
        ("table 3 reproduction", table3),
        ("cross-form identities", cross_forms),
        ("model-reduction identities", reductions),
        ("oracle suite", oracles),
        ("property suite", properties),
        ("special functions", special_functions),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = check();
        let status = if v.pass { "PASS" } else { "FAIL" };
        failures += usize::from(!v.pass);
        println!(
            "{status} criterion {} {name} ({:.1}s): {}",
            i + 1,
            start.elapsed().as_secs_f64(),
            v.detail
        );
    }
    println!("{}/{} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
