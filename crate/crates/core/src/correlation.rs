//! Pairwise covariances, the average correlation coefficient, and the
//! attainable correlation range of two Poisson variables.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::extrema::check_tail_eps;
use crate::math;
use crate::models::{ComonotonicParams, Model, ThinningParams};
use crate::poisson::PoissonDist;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CorrelationReport {
    pub avg_rho: f64,
    /// Symmetric covariance matrix; the diagonal holds the marginal rates.
    pub pairwise_cov: Vec<Vec<f64>>,
    /// Upper bound on the total truncation error of the off-diagonal entries.
    pub trunc_bound: f64,
}

/// `ρ̄ = Σ_{i<j} cov_ij / Σ_{i<j} √(var_i var_j)` for a covariance matrix.
pub fn avg_corr_from_cov(cov: &[Vec<f64>]) -> f64 {
    let d = cov.len();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..d {
        for j in i + 1..d {
            num += cov[i][j];
            den += math::sqrt(cov[i][i] * cov[j][j]);
        }
    }
    num / den
}

/// Average correlation coefficient of `model`.
///
/// With `printed_formula` set, a thinning model uses
/// `Σ_{i<j} Σ_k p_i^k p_j^k / Σ_{i<j} √(Σ_k p_i^k Σ_k p_j^k)`, which drops the
/// background rates and agrees with the covariance form only when `l = 1`.
/// The reported matrix is the model covariance either way.
pub fn avg_corr(model: &Model, tail_eps: f64, printed_formula: bool) -> Result<CorrelationReport> {
    check_tail_eps(tail_eps)?;
    let d = model.dim();
    if d < 2 {
        return Err(invalid("dim", format!("average correlation needs d ≥ 2, got {d}")));
    }
    let rates = model.marginal_rates();
    let mut cov = vec![vec![0.0; d]; d];
    let mut trunc_bound = 0.0;
    for i in 0..d {
        cov[i][i] = rates[i];
        for j in i + 1..d {
            let c = match model {
                Model::Common(p) => p.theta0(),
                Model::Comonotonic(p) => {
                    let (c, bound) = comonotonic_cov(p, i, j, tail_eps)?;
                    trunc_bound += bound;
                    c
                }
                Model::Thinning(p) => thinning_cov(p, i, j),
            };
            cov[i][j] = c;
            cov[j][i] = c;
        }
    }
    let avg_rho = match model {
        Model::Thinning(p) if printed_formula => thinning_printed_avg(p),
        _ => avg_corr_from_cov(&cov),
    };
    Ok(CorrelationReport {
        avg_rho,
        pairwise_cov: cov,
        trunc_bound,
    })
}

/// `cov(X_i, X_j) = Σ_k θ_k p_i^k p_j^k`.
pub fn thinning_cov(params: &ThinningParams, i: usize, j: usize) -> f64 {
    let p = params.probs();
    params
        .thetas()
        .iter()
        .enumerate()
        .map(|(k, t)| t * p[i][k] * p[j][k])
        .sum()
}

fn thinning_printed_avg(params: &ThinningParams) -> f64 {
    let p = params.probs();
    let d = p.len();
    let row: Vec<f64> = p.iter().map(|r| r.iter().sum()).collect();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..d {
        for j in i + 1..d {
            num += p[i].iter().zip(&p[j]).map(|(a, b)| a * b).sum::<f64>();
            den += math::sqrt(row[i] * row[j]);
        }
    }
    num / den
}

/// Covariance of components `i` and `j` of a comonotonic model: the shocks
/// are the only shared part, and comonotonic Poisson pairs satisfy
/// `E[Z_i Z_j] = Σ_m Σ_n min{Ḡ_i(m), Ḡ_j(n)}`. Returns the value and a bound
/// on the neglected tail.
pub fn comonotonic_cov(params: &ComonotonicParams, i: usize, j: usize, tail_eps: f64) -> Result<(f64, f64)> {
    let (a, b) = (params.shock_rate(i), params.shock_rate(j));
    if a == 0.0 || b == 0.0 {
        return Ok((0.0, 0.0));
    }
    let (e, bound) = comonotone_moment(a, b, tail_eps)?;
    Ok((e - a * b, bound))
}

/// Survival values `Ḡ(0..n)` up to the first index at which the tail mass
/// drops to `tail`.
fn survival_table(d: &PoissonDist, tail: f64) -> Vec<f64> {
    let n = d.upper_cap(tail);
    (0..=n).map(|m| d.sf_at(m as i64).value).collect()
}

/// `E[Z² 1{Z > m}]` for `Z ~ P(rate)`.
fn upper_second_moment(d: &PoissonDist, m: u64) -> f64 {
    let r = d.rate();
    let m = m as i64;
    r * r * d.sf_at(m - 2).value + r * d.sf_at(m - 1).value
}

fn trunc_tail(eps: f64) -> f64 {
    (eps * eps).max(1e-300)
}

/// `E[Z_a Z_b]` under the comonotone coupling, with a truncation bound.
fn comonotone_moment(a: f64, b: f64, tail_eps: f64) -> Result<(f64, f64)> {
    let (da, db) = (PoissonDist::new(a)?, PoissonDist::new(b)?);
    let tail = trunc_tail(tail_eps);
    let sa = survival_table(&da, tail);
    let sb = survival_table(&db, tail);
    // suffix[n] = Σ_{n' ≥ n} sb[n'].
    let mut suffix = vec![0.0; sb.len() + 1];
    for n in (0..sb.len()).rev() {
        suffix[n] = suffix[n + 1] + sb[n];
    }
    let mut total = 0.0;
    let mut cnt = 0;
    for &s in &sa {
        while cnt < sb.len() && sb[cnt] >= s {
            cnt += 1;
        }
        total += s * cnt as f64 + suffix[cnt];
    }
    // The dropped region is covered by E[(Z_a − M)^+ Z_b] plus its mirror,
    // each bounded by Cauchy–Schwarz.
    let second = |d: &PoissonDist| d.rate() + d.rate() * d.rate();
    let bound = math::sqrt(upper_second_moment(&da, sa.len() as u64 - 1) * second(&db))
        + math::sqrt(upper_second_moment(&db, sb.len() as u64 - 1) * second(&da));
    Ok((total, bound))
}

/// `E[Z_a Z_b]` under the antithetic coupling, with a truncation bound.
fn antithetic_moment(a: f64, b: f64, tail_eps: f64) -> Result<(f64, f64)> {
    let (da, db) = (PoissonDist::new(a)?, PoissonDist::new(b)?);
    let tail = trunc_tail(tail_eps);
    let sa = survival_table(&da, tail);
    let gb: Vec<f64> = (0..=db.upper_cap(tail)).map(|n| db.cdf_at(n as i64).value).collect();
    // Σ_m Σ_n max{0, Ḡ_a(m) − G_b(n)}: for each m only a prefix of n counts.
    let mut prefix = vec![0.0; gb.len() + 1];
    for n in 0..gb.len() {
        prefix[n + 1] = prefix[n] + gb[n];
    }
    let mut total = 0.0;
    let mut cnt = gb.len();
    for &s in &sa {
        while cnt > 0 && gb[cnt - 1] >= s {
            cnt -= 1;
        }
        total += s * cnt as f64 - prefix[cnt];
    }
    // Terms past either cap need the other coordinate below its `tail`
    // lower quantile.
    let low = |d: &PoissonDist| d.quantile(tail).unwrap_or(0) as f64 + 1.0;
    let first_tail = |d: &PoissonDist, m: usize| d.rate() * d.sf_at(m as i64 - 1).value;
    let bound = first_tail(&da, sa.len()) * low(&db) + first_tail(&db, gb.len()) * low(&da);
    Ok((total, bound))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CorrBounds {
    pub rho_min: f64,
    pub rho_max: f64,
    /// Truncation bound on each correlation.
    pub trunc_bound: f64,
}

/// The range of correlations attainable by two Poisson variables with rates
/// `theta_i` and `theta_j`, reached by the antithetic and comonotone
/// couplings.
pub fn pair_corr_bounds(theta_i: f64, theta_j: f64, tail_eps: f64) -> Result<CorrBounds> {
    check_tail_eps(tail_eps)?;
    for (name, t) in [("theta_i", theta_i), ("theta_j", theta_j)] {
        if !(t.is_finite() && t > 0.0) {
            return Err(invalid(name, format!("{t} must be positive and finite")));
        }
    }
    let prod = theta_i * theta_j;
    let scale = math::sqrt(prod);
    let (hi, hi_bound) = comonotone_moment(theta_i, theta_j, tail_eps)?;
    let (lo, lo_bound) = antithetic_moment(theta_i, theta_j, tail_eps)?;
    Ok(CorrBounds {
        rho_min: ((lo - prod) / scale).min(0.0),
        rho_max: ((hi - prod) / scale).max(0.0),
        trunc_bound: hi_bound.max(lo_bound) / scale,
    })
}
