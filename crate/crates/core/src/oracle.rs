//! Independent reference engines: Monte Carlo estimation and exact
//! enumeration of small lattices.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::extrema::{
    check_tail_eps, for_each_lattice, thinning_conditional_cdf_nested, ExtremeKind, ExtremeQuery, LATTICE_LIMIT,
};
use crate::math;
use crate::models::{CommonShockParams, Model, Sampler, ThinningParams};
use crate::poisson::{floor_point, LogPoisson};

/// Smallest sample size accepted by [`mc_extreme_cdf`].
pub const MIN_MC_SAMPLES: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct McEstimate {
    pub estimate: f64,
    pub std_err: f64,
    pub n: u64,
    pub seed: u64,
    pub streams: u32,
}

impl McEstimate {
    pub fn from_hits(hits: u64, n: u64, seed: u64, streams: u32) -> Self {
        let p = hits as f64 / n as f64;
        Self {
            estimate: p,
            std_err: math::sqrt(p * (1.0 - p) / n as f64),
            n,
            seed,
            streams,
        }
    }
}

/// Number of draws assigned to `stream` when `n` draws are split over
/// `streams` substreams.
pub fn stream_share(n: u64, streams: u32, stream: u32) -> u64 {
    let s = u64::from(streams);
    n / s + u64::from(u64::from(stream) < n % s)
}

/// The generator for one substream: ChaCha8 keyed by `seed` with stream
/// number `stream`.
pub fn substream_rng(seed: u64, stream: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::from(stream));
    rng
}

fn validate_mc(n: u64, streams: u32) -> Result<()> {
    if n < MIN_MC_SAMPLES {
        return Err(invalid("n", format!("{n} draws is below the minimum {MIN_MC_SAMPLES}")));
    }
    if streams == 0 || u64::from(streams) > n {
        return Err(invalid("streams", format!("{streams} streams for {n} draws")));
    }
    Ok(())
}

/// Draw `count` vectors from substream `stream` and count, for each level in
/// `xs`, how many have the chosen extreme at or below it.
pub fn mc_stream_hits(
    model: &Model,
    kind: ExtremeKind,
    xs: &[f64],
    count: u64,
    seed: u64,
    stream: u32,
) -> Vec<u64> {
    let sampler = Sampler::new(model);
    let mut rng = substream_rng(seed, stream);
    let mut buf = Vec::with_capacity(model.dim());
    let mut hits = vec![0u64; xs.len()];
    for _ in 0..count {
        sampler.sample_into(&mut rng, &mut buf);
        let e = match kind {
            ExtremeKind::Max => buf.iter().copied().max(),
            ExtremeKind::Min => buf.iter().copied().min(),
        }
        .unwrap_or(0) as f64;
        for (h, &x) in hits.iter_mut().zip(xs) {
            *h += u64::from(e <= x);
        }
    }
    hits
}

/// Monte Carlo estimate of `P(extreme ≤ x)` from `n` draws split over
/// `streams` substreams. The result depends only on `(n, seed, streams)`.
pub fn mc_extreme_cdf(model: &Model, q: &ExtremeQuery, n: u64, seed: u64, streams: u32) -> Result<McEstimate> {
    validate_mc(n, streams)?;
    if q.x.is_nan() {
        return Err(invalid("x", "is NaN"));
    }
    let hits: u64 = (0..streams)
        .map(|s| mc_stream_hits(model, q.kind, &[q.x], stream_share(n, streams, s), seed, s)[0])
        .sum();
    Ok(McEstimate::from_hits(hits, n, seed, streams))
}

/// Check the arguments of a Monte Carlo run without drawing.
pub fn check_mc_args(n: u64, streams: u32) -> Result<()> {
    validate_mc(n, streams)
}

fn lattice_guard(bounds: &[u64]) -> Result<()> {
    let points: f64 = bounds.iter().map(|&b| b as f64 + 1.0).product();
    if points > LATTICE_LIMIT {
        return Err(Error::LatticeTooLarge {
            points,
            limit: LATTICE_LIMIT,
        });
    }
    Ok(())
}

fn lattice_eps_ok(lattice_eps: f64) -> Result<()> {
    check_tail_eps(lattice_eps).map_err(|_| invalid("lattice_eps", format!("{lattice_eps} must lie in (0, 1e-3]")))
}

/// Exact `P(extreme ≤ x)` by summing the joint mass of every independent
/// Poisson input over a lattice that leaves out at most `lattice_eps` mass.
pub fn brute_force_extreme_cdf(model: &Model, q: &ExtremeQuery, lattice_eps: f64) -> Result<f64> {
    match model {
        Model::Common(p) => brute_force_common(p, q, lattice_eps),
        Model::Thinning(p) => brute_force_thinning(p, q, lattice_eps),
        Model::Comonotonic(_) => Err(invalid(
            "model",
            "brute force covers the common-shock and thinning structures",
        )),
    }
}

fn brute_force_common(p: &CommonShockParams, q: &ExtremeQuery, lattice_eps: f64) -> Result<f64> {
    lattice_eps_ok(lattice_eps)?;
    let mut rates = vec![p.theta0()];
    rates.extend_from_slice(p.thetas());
    let dists: Vec<LogPoisson> = rates.iter().map(|&r| LogPoisson::new(r)).collect();
    let share = lattice_eps / rates.len() as f64;
    let bounds: Vec<u64> = dists.iter().map(|d| d.cap(share)).collect();
    lattice_guard(&bounds)?;
    let Some(x) = floor_point(q.x) else {
        return Err(invalid("x", "is NaN"));
    };
    let mut total = 0.0;
    for_each_lattice(&bounds, |y| {
        let comps = y[1..].iter().map(|&yi| (y[0] + yi) as i64);
        let hit = match q.kind {
            ExtremeKind::Max => comps.max().unwrap_or(0) <= x,
            ExtremeKind::Min => comps.min().unwrap_or(0) <= x,
        };
        if hit {
            let lp: f64 = dists.iter().zip(y).map(|(d, &v)| d.log_pmf(v as i64)).sum();
            total += math::exp(lp);
        }
    });
    Ok(total)
}

fn brute_force_thinning(p: &ThinningParams, q: &ExtremeQuery, lattice_eps: f64) -> Result<f64> {
    lattice_eps_ok(lattice_eps)?;
    let dists: Vec<LogPoisson> = p.thetas().iter().map(|&r| LogPoisson::new(r)).collect();
    let share = lattice_eps / dists.len() as f64;
    let bounds: Vec<u64> = dists.iter().map(|d| d.cap(share)).collect();
    lattice_guard(&bounds)?;
    let Some(x) = floor_point(q.x) else {
        return Err(invalid("x", "is NaN"));
    };
    if x < 0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    let mut failed = None;
    for_each_lattice(&bounds, |y| {
        if failed.is_some() {
            return;
        }
        let lp: f64 = dists.iter().zip(y).map(|(d, &v)| d.log_pmf(v as i64)).sum();
        // Product of P(X_j ≤ x | y) for the maximum, of P(X_j > x | y) for the minimum.
        let mut cond = 1.0;
        for j in 0..p.dim() {
            match thinning_conditional_cdf_nested(p, j, x, y) {
                Ok(c) => match q.kind {
                    ExtremeKind::Max => cond *= c,
                    ExtremeKind::Min => cond *= 1.0 - c,
                },
                Err(e) => failed = Some(e),
            }
        }
        let cond = match q.kind {
            ExtremeKind::Max => cond,
            ExtremeKind::Min => 1.0 - cond,
        };
        total += math::exp(lp) * cond;
    });
    match failed {
        Some(e) => Err(e),
        None => Ok(total),
    }
}
