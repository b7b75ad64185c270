//! Exact CDFs of `max_j X_j` and `min_j X_j`.
//!
//! Every evaluator floors `x`, accumulates in log space and reports a
//! guaranteed bound on the mass dropped by truncating infinite sums.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::logspace::{log1m_exp, LogSum};
use crate::math;
use crate::models::{ComonotonicParams, CommonShockParams, Model, ThinningParams};
use crate::poisson::{floor_point, LogPoisson};
use crate::specfun::{self, RegularizedValue};

pub const DEFAULT_TAIL_EPS: f64 = 1e-12;
pub const MAX_TAIL_EPS: f64 = 1e-3;
/// Largest dimension accepted by the nested-sum comonotonic forms.
pub const NESTED_DIM_CAP: usize = 4;
/// Largest lattice the summation forms will enumerate.
pub const LATTICE_LIMIT: f64 = 1e8;
/// Lattice size above which the comonotonic dispatcher prefers the integral.
const NESTED_DISPATCH_BUDGET: f64 = 2e5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ExtremeKind {
    Max,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtremeQuery {
    pub kind: ExtremeKind,
    pub x: f64,
    pub tail_eps: f64,
}

impl ExtremeQuery {
    pub fn new(kind: ExtremeKind, x: f64) -> Self {
        Self {
            kind,
            x,
            tail_eps: DEFAULT_TAIL_EPS,
        }
    }

    pub fn max(x: f64) -> Self {
        Self::new(ExtremeKind::Max, x)
    }

    pub fn min(x: f64) -> Self {
        Self::new(ExtremeKind::Min, x)
    }

    pub fn with_tail_eps(mut self, tail_eps: f64) -> Result<Self> {
        check_tail_eps(tail_eps)?;
        self.tail_eps = tail_eps;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if self.x.is_nan() {
            return Err(invalid("x", "must not be NaN"));
        }
        check_tail_eps(self.tail_eps)
    }
}

pub fn check_tail_eps(tail_eps: f64) -> Result<()> {
    if tail_eps > 0.0 && tail_eps <= MAX_TAIL_EPS {
        Ok(())
    } else {
        Err(invalid("tail_eps", format!("{tail_eps} must lie in (0, {MAX_TAIL_EPS}]")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Method {
    CommonSum,
    ComonotonicNested,
    ComonotonicCopula,
    ComonotonicIntegral,
    ThinningLattice,
    ThinningBeta,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::CommonSum => "common_sum",
            Method::ComonotonicNested => "comonotonic_nested",
            Method::ComonotonicCopula => "comonotonic_copula",
            Method::ComonotonicIntegral => "comonotonic_integral",
            Method::ThinningLattice => "thinning_lattice",
            Method::ThinningBeta => "thinning_beta",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalResult {
    pub value: f64,
    pub log_value: f64,
    pub trunc_bound: f64,
    pub method: Method,
}

impl EvalResult {
    fn from_log(log_value: f64, trunc_bound: f64, method: Method) -> Self {
        let rv = RegularizedValue::from_log(log_value);
        Self {
            value: rv.value,
            log_value: rv.log_value,
            trunc_bound,
            method,
        }
    }

    fn zero(method: Method) -> Self {
        Self::from_log(f64::NEG_INFINITY, 0.0, method)
    }
}

/// Evaluate the extreme CDF of any model with the default form per structure.
pub fn extreme_cdf(model: &Model, q: &ExtremeQuery) -> Result<EvalResult> {
    match model {
        Model::Common(p) => common_shock_extreme_cdf(p, q),
        Model::Comonotonic(p) => comonotonic_extreme_cdf(p, q),
        Model::Thinning(p) => thinning_extreme_cdf(p, q),
    }
}

fn lattice_size(bounds: &[u64]) -> f64 {
    bounds.iter().map(|&b| b as f64 + 1.0).product()
}

fn check_lattice(bounds: &[u64]) -> Result<()> {
    let points = lattice_size(bounds);
    if points > LATTICE_LIMIT {
        Err(Error::LatticeTooLarge {
            points,
            limit: LATTICE_LIMIT,
        })
    } else {
        Ok(())
    }
}

/// Visit every point of `∏ [0, bounds_i]` in odometer order.
pub(crate) fn for_each_lattice(bounds: &[u64], mut f: impl FnMut(&[u64])) {
    let mut z = vec![0u64; bounds.len()];
    loop {
        f(&z);
        let mut i = 0;
        loop {
            if i == z.len() {
                return;
            }
            if z[i] < bounds[i] {
                z[i] += 1;
                break;
            }
            z[i] = 0;
            i += 1;
        }
    }
}

// ---------------------------------------------------------------------------
// Common shock
// ---------------------------------------------------------------------------

/// `P(max ≤ x)` and `P(min ≤ x)` for `X_j = Y_0 + Y_j`, conditioning on `Y_0`.
pub fn common_shock_extreme_cdf(params: &CommonShockParams, q: &ExtremeQuery) -> Result<EvalResult> {
    q.validate()?;
    let method = Method::CommonSum;
    let Some(k) = floor_point(q.x).filter(|&k| k >= 0) else {
        return Ok(if q.x > 0.0 {
            EvalResult::from_log(0.0, 0.0, method)
        } else {
            EvalResult::zero(method)
        });
    };
    let shock = LogPoisson::new(params.theta0());
    let idio: Vec<LogPoisson> = params.thetas().iter().map(|&t| LogPoisson::new(t)).collect();

    // Terms with Y_0 beyond the cap carry at most `tail_eps` in total.
    let cap = shock.cap(q.tail_eps) as i64;
    let (ymax, trunc) = if k > cap { (cap, shock.sf(cap)) } else { (k, 0.0) };

    let mut acc = LogSum::new();
    for y in 0..=ymax {
        let m = k - y;
        let inner = match q.kind {
            ExtremeKind::Max => idio.iter().map(|p| p.log_cdf(m)).sum::<f64>(),
            ExtremeKind::Min => log1m_exp(idio.iter().map(|p| p.log_sf(m)).sum::<f64>()),
        };
        acc.add(shock.log_pmf(y) + inner);
    }
    Ok(EvalResult::from_log(acc.ln(), trunc, method))
}

// ---------------------------------------------------------------------------
// Comonotonic shock
// ---------------------------------------------------------------------------

pub(crate) struct ComonoParts {
    pub(crate) idio: Vec<LogPoisson>,
    pub(crate) shock: Vec<LogPoisson>,
}

impl ComonoParts {
    pub(crate) fn new(p: &ComonotonicParams) -> Self {
        Self {
            idio: (0..p.dim()).map(|j| LogPoisson::new(p.idio_rate(j))).collect(),
            shock: (0..p.dim()).map(|j| LogPoisson::new(p.shock_rate(j))).collect(),
        }
    }
}

/// Table of `f(m)` for `m = 0..=n`, with `f(m < 0)` supplied by `neg`.
struct Table {
    values: Vec<f64>,
    neg: f64,
}

impl Table {
    fn build(n: i64, neg: f64, f: impl Fn(i64) -> f64) -> Self {
        Self {
            values: (0..=n.max(-1)).map(f).collect(),
            neg,
        }
    }

    #[inline]
    fn at(&self, m: i64) -> f64 {
        if m < 0 {
            self.neg
        } else {
            self.values[m as usize]
        }
    }
}

/// `ln [min_j G_j(z_j) − max_j G_j(z_j − 1)]₊` from log-CDF tables.
fn log_comono_mass(log_g: &[Table], z: &[u64]) -> f64 {
    let mut lo = 0.0_f64;
    let mut hi = f64::NEG_INFINITY;
    for (t, &zj) in log_g.iter().zip(z) {
        lo = lo.min(t.at(zj as i64));
        hi = hi.max(t.at(zj as i64 - 1));
    }
    if hi >= lo {
        f64::NEG_INFINITY
    } else {
        lo + log1m_exp(hi - lo)
    }
}

/// Joint pmf of the comonotonic shock vector `Z` at `z`.
pub fn comonotonic_mass(params: &ComonotonicParams, z: &[u64]) -> Result<f64> {
    if z.len() != params.dim() {
        return Err(invalid("z", format!("has length {}, expected {}", z.len(), params.dim())));
    }
    let parts = ComonoParts::new(params);
    let mut lo = 1.0_f64;
    let mut hi = 0.0_f64;
    for (s, &zj) in parts.shock.iter().zip(z) {
        lo = lo.min(math::exp(s.log_cdf(zj as i64)));
        hi = hi.max(math::exp(s.log_cdf(zj as i64 - 1)));
    }
    Ok((lo - hi).max(0.0))
}

fn check_nested_dim(params: &ComonotonicParams) -> Result<()> {
    if params.dim() > NESTED_DIM_CAP {
        Err(Error::DimensionTooLarge {
            dim: params.dim(),
            cap: NESTED_DIM_CAP,
        })
    } else {
        Ok(())
    }
}

fn nonneg_floor(q: &ExtremeQuery) -> Option<i64> {
    floor_point(q.x).filter(|&k| k >= 0)
}

fn below_support(q: &ExtremeQuery, method: Method) -> EvalResult {
    if q.x > 0.0 {
        EvalResult::from_log(0.0, 0.0, method)
    } else {
        EvalResult::zero(method)
    }
}

/// Nested sums conditioning on the idiosyncratic parts `Y`:
/// `Σ_z ∏ g_Y(x − z_j) · min_j G_Z(z_j)` for the maximum and
/// `Σ_y ∏ g_Y(y_j) · max_j G_Z(x − y_j)` for the minimum.
pub fn comonotonic_extreme_cdf_nested(params: &ComonotonicParams, q: &ExtremeQuery) -> Result<EvalResult> {
    q.validate()?;
    check_nested_dim(params)?;
    let method = Method::ComonotonicNested;
    let Some(k) = nonneg_floor(q) else {
        return Ok(below_support(q, method));
    };
    let parts = ComonoParts::new(params);
    let d = params.dim();
    let mut acc = LogSum::new();
    let trunc = match q.kind {
        ExtremeKind::Max => {
            let bounds = vec![k as u64; d];
            check_lattice(&bounds)?;
            let lg_y: Vec<Table> = parts.idio.iter().map(|p| Table::build(k, f64::NEG_INFINITY, |m| p.log_pmf(m))).collect();
            let lc_z: Vec<Table> = parts.shock.iter().map(|p| Table::build(k, f64::NEG_INFINITY, |m| p.log_cdf(m))).collect();
            for_each_lattice(&bounds, |z| {
                let mut t = 0.0;
                let mut mn = 0.0_f64;
                for j in 0..d {
                    t += lg_y[j].at(k - z[j] as i64);
                    mn = mn.min(lc_z[j].at(z[j] as i64));
                }
                acc.add(t + mn);
            });
            0.0
        }
        ExtremeKind::Min => {
            let tail = q.tail_eps / (2.0 * d as f64);
            let bounds: Vec<u64> = parts.idio.iter().map(|p| p.cap(tail)).collect();
            check_lattice(&bounds)?;
            let lg_y: Vec<Table> = parts
                .idio
                .iter()
                .zip(&bounds)
                .map(|(p, &b)| Table::build(b as i64, f64::NEG_INFINITY, |m| p.log_pmf(m)))
                .collect();
            let lc_z: Vec<Table> = parts.shock.iter().map(|p| Table::build(k, f64::NEG_INFINITY, |m| p.log_cdf(m))).collect();
            for_each_lattice(&bounds, |y| {
                let mut t = 0.0;
                let mut mx = f64::NEG_INFINITY;
                for j in 0..d {
                    t += lg_y[j].at(y[j] as i64);
                    mx = mx.max(lc_z[j].at(k - y[j] as i64));
                }
                acc.add(t + mx);
            });
            parts.idio.iter().zip(&bounds).map(|(p, &b)| p.sf(b as i64)).sum()
        }
    };
    Ok(EvalResult::from_log(acc.ln(), trunc, method))
}

/// Nested sums conditioning on the shock vector `Z` through its joint pmf:
/// `Σ_z ∏ G_Y(x − z_j) C(z)` for the maximum and
/// `1 − Σ_z ∏ Ḡ_Y(x − z_j) C(z)` for the minimum.
pub fn comonotonic_extreme_cdf_copula(params: &ComonotonicParams, q: &ExtremeQuery) -> Result<EvalResult> {
    q.validate()?;
    check_nested_dim(params)?;
    let method = Method::ComonotonicCopula;
    let Some(k) = nonneg_floor(q) else {
        return Ok(below_support(q, method));
    };
    let parts = ComonoParts::new(params);
    let d = params.dim();
    let mut acc = LogSum::new();
    match q.kind {
        ExtremeKind::Max => {
            let bounds = vec![k as u64; d];
            check_lattice(&bounds)?;
            let lc_y: Vec<Table> = parts.idio.iter().map(|p| Table::build(k, f64::NEG_INFINITY, |m| p.log_cdf(m))).collect();
            let lc_z: Vec<Table> = parts.shock.iter().map(|p| Table::build(k, f64::NEG_INFINITY, |m| p.log_cdf(m))).collect();
            for_each_lattice(&bounds, |z| {
                let lm = log_comono_mass(&lc_z, z);
                if lm == f64::NEG_INFINITY {
                    return;
                }
                let t: f64 = (0..d).map(|j| lc_y[j].at(k - z[j] as i64)).sum();
                acc.add(t + lm);
            });
            Ok(EvalResult::from_log(acc.ln(), 0.0, method))
        }
        ExtremeKind::Min => {
            let tail = q.tail_eps / (2.0 * d as f64);
            let bounds: Vec<u64> = parts.shock.iter().map(|p| p.cap(tail)).collect();
            check_lattice(&bounds)?;
            let ls_y: Vec<Table> = parts.idio.iter().map(|p| Table::build(k, 0.0, |m| p.log_sf(m))).collect();
            let lc_z: Vec<Table> = parts
                .shock
                .iter()
                .zip(&bounds)
                .map(|(p, &b)| Table::build(b as i64, f64::NEG_INFINITY, |m| p.log_cdf(m)))
                .collect();
            for_each_lattice(&bounds, |z| {
                let lm = log_comono_mass(&lc_z, z);
                if lm == f64::NEG_INFINITY {
                    return;
                }
                let t: f64 = (0..d).map(|j| ls_y[j].at(k - z[j] as i64)).sum();
                acc.add(t + lm);
            });
            let trunc = parts.shock.iter().zip(&bounds).map(|(p, &b)| p.sf(b as i64)).sum();
            Ok(EvalResult::from_log(log1m_exp(acc.ln()), trunc, method))
        }
    }
}

/// `ln ∫ f(u) du` over `u ∈ (e^lo, e^hi]` for a step integrand
/// `f(u) = exp(outer(Σ_j term(j, z_j(u))))` with `z_j(u) = G⁻¹_j(u)` the
/// quantiles of `shocks`. Quantiles above `k` are reported as `k + 1`. The
/// inner sum is updated one coordinate per breakpoint.
pub(crate) fn step_integral(
    shocks: &[LogPoisson],
    k: i64,
    lo: f64,
    hi: f64,
    term: impl Fn(usize, u64) -> f64,
    outer: impl Fn(f64) -> f64,
) -> f64 {
    let d = shocks.len();
    let mut z = vec![0u64; d];
    let mut breaks: Vec<(f64, usize)> = Vec::new();
    for (j, s) in shocks.iter().enumerate() {
        for m in 0..=k {
            let lv = s.log_cdf(m);
            if lv <= lo {
                z[j] += 1;
            } else if lv < hi {
                breaks.push((lv, j));
            }
            if lv >= 0.0 || lv >= hi {
                break;
            }
        }
    }
    breaks.sort_by(|a, b| a.0.total_cmp(&b.0));
    breaks.push((hi, usize::MAX));

    // Running Σ_j term(j, z_j) kept as a finite part plus a count of −∞ terms.
    let mut finite = 0.0;
    let mut dead = 0usize;
    let apply = |t: f64, sign: f64, finite: &mut f64, dead: &mut usize| {
        if t == f64::NEG_INFINITY {
            if sign > 0.0 {
                *dead += 1;
            } else {
                *dead -= 1;
            }
        } else {
            *finite += sign * t;
        }
    };
    let mut current: Vec<f64> = (0..d).map(|j| term(j, z[j])).collect();
    for &t in &current {
        apply(t, 1.0, &mut finite, &mut dead);
    }

    let mut acc = LogSum::new();
    let mut prev = lo;
    for &(b, j) in &breaks {
        if b > prev {
            let log_len = if prev == f64::NEG_INFINITY {
                b
            } else {
                b + log1m_exp(prev - b)
            };
            let inner = if dead > 0 { f64::NEG_INFINITY } else { finite };
            acc.add(log_len + outer(inner));
            prev = b;
        }
        if j != usize::MAX {
            z[j] += 1;
            apply(current[j], -1.0, &mut finite, &mut dead);
            current[j] = term(j, z[j]);
            apply(current[j], 1.0, &mut finite, &mut dead);
        }
    }
    acc.ln()
}

/// Conditioning on the common uniform `U`: the integrand
/// `∏_j G_Y(x − G⁻¹_Z(u))` is a step function whose jumps sit at the shock
/// CDF values `G_{Z_j}(z)`. For the maximum it vanishes once any
/// `G⁻¹_{Z_j}(u) > x`; for the minimum every factor `Ḡ_Y(x − z_j)` equals one
/// once all `z_j > x`. Summing over the steps below `x` is therefore exact.
pub fn comonotonic_extreme_cdf_integral(params: &ComonotonicParams, q: &ExtremeQuery) -> Result<EvalResult> {
    q.validate()?;
    let method = Method::ComonotonicIntegral;
    let Some(k) = nonneg_floor(q) else {
        return Ok(below_support(q, method));
    };
    let parts = ComonoParts::new(params);
    let ends = parts.shock.iter().map(|s| s.log_cdf(k));
    let log_value = match q.kind {
        ExtremeKind::Max => {
            let end = ends.fold(0.0, f64::min);
            step_integral(
                &parts.shock,
                k,
                f64::NEG_INFINITY,
                end,
                |j, z| parts.idio[j].log_cdf(k - z as i64),
                |s| s,
            )
        }
        ExtremeKind::Min => {
            let end = ends.fold(f64::NEG_INFINITY, f64::max);
            step_integral(
                &parts.shock,
                k,
                f64::NEG_INFINITY,
                end,
                |j, z| parts.idio[j].log_sf(k - z as i64),
                log1m_exp,
            )
        }
    };
    Ok(EvalResult::from_log(log_value, 0.0, method))
}

/// Comonotonic evaluator: nested sums while their lattice is small, the
/// breakpoint integral otherwise.
pub fn comonotonic_extreme_cdf(params: &ComonotonicParams, q: &ExtremeQuery) -> Result<EvalResult> {
    q.validate()?;
    if params.dim() <= NESTED_DIM_CAP {
        if let Some(k) = nonneg_floor(q) {
            let bounds: Vec<u64> = match q.kind {
                ExtremeKind::Max => vec![k as u64; params.dim()],
                ExtremeKind::Min => {
                    let tail = q.tail_eps / (2.0 * params.dim() as f64);
                    (0..params.dim()).map(|j| LogPoisson::new(params.idio_rate(j)).cap(tail)).collect()
                }
            };
            if lattice_size(&bounds) <= NESTED_DISPATCH_BUDGET {
                return comonotonic_extreme_cdf_nested(params, q);
            }
        }
    }
    comonotonic_extreme_cdf_integral(params, q)
}

// ---------------------------------------------------------------------------
// Thinning
// ---------------------------------------------------------------------------

/// `ln` binomial pmf for `i = 0..=min(n, kmax)`, built by the ratio recurrence.
fn log_binomial_row(n: u64, p: f64, kmax: usize, out: &mut Vec<f64>) {
    out.clear();
    let top = (n as usize).min(kmax);
    let lq = math::ln_1p(-p);
    let lodds = math::ln(p) - lq;
    let mut l = n as f64 * lq;
    out.push(l);
    for i in 0..top {
        l += math::ln((n - i as u64) as f64 / (i as f64 + 1.0)) + lodds;
        out.push(l);
    }
}

/// Scratch buffers for the conditional-CDF convolution.
#[derive(Default)]
struct ConvScratch {
    cur: Vec<f64>,
    next: Vec<f64>,
    row: Vec<f64>,
}

/// `P(Σ_k Bin(y_k, p_k) ≤ x)` by convolving the binomial pmfs on the cells
/// `0..=x`. Mass pushed above `x` never returns, so it is dropped.
fn conditional_cdf(probs: &[f64], x: usize, y: &[u64], s: &mut ConvScratch) -> f64 {
    let total: u64 = y.iter().sum();
    if total <= x as u64 {
        return 1.0;
    }
    s.cur.clear();
    s.cur.resize(x + 1, 0.0);
    s.cur[0] = 1.0;
    for (&n, &p) in y.iter().zip(probs) {
        if n == 0 || p <= 0.0 {
            continue;
        }
        if p >= 1.0 {
            let shift = n as usize;
            if shift > x {
                return 0.0;
            }
            for c in (0..=x).rev() {
                s.cur[c] = if c >= shift { s.cur[c - shift] } else { 0.0 };
            }
            continue;
        }
        log_binomial_row(n, p, x, &mut s.row);
        for v in s.row.iter_mut() {
            *v = math::exp(*v);
        }
        s.next.clear();
        s.next.resize(x + 1, 0.0);
        for (a, &ca) in s.cur.iter().enumerate() {
            if ca == 0.0 {
                continue;
            }
            for (i, &b) in s.row.iter().enumerate().take(x + 1 - a) {
                s.next[a + i] += ca * b;
            }
        }
        core::mem::swap(&mut s.cur, &mut s.next);
    }
    s.cur.iter().sum::<f64>().min(1.0)
}

fn check_thinning_args(params: &ThinningParams, j: usize, y: &[u64]) -> Result<()> {
    if j >= params.dim() {
        return Err(invalid("j", format!("{j} out of range for dimension {}", params.dim())));
    }
    if y.len() != params.background_count() {
        return Err(invalid(
            "y",
            format!("has length {}, expected {}", y.len(), params.background_count()),
        ));
    }
    Ok(())
}

/// `P(X_j ≤ x | Y = y)` for the thinning structure.
pub fn thinning_conditional_cdf(params: &ThinningParams, j: usize, x: i64, y: &[u64]) -> Result<f64> {
    check_thinning_args(params, j, y)?;
    if x < 0 {
        return Ok(0.0);
    }
    let total: u64 = y.iter().sum();
    let cells = (x as u64).min(total) as usize;
    Ok(conditional_cdf(&params.probs()[j], cells, y, &mut ConvScratch::default()))
}

/// Reference form of [`thinning_conditional_cdf`]: the explicit nested sum
/// over `s_1 + ⋯ + s_l ≤ x` of products of binomial pmfs.
pub fn thinning_conditional_cdf_nested(params: &ThinningParams, j: usize, x: i64, y: &[u64]) -> Result<f64> {
    check_thinning_args(params, j, y)?;
    if x < 0 {
        return Ok(0.0);
    }
    let probs = &params.probs()[j];
    let bounds: Vec<u64> = y.iter().map(|&n| n.min(x as u64)).collect();
    check_lattice(&bounds)?;
    let mut total = 0.0;
    for_each_lattice(&bounds, |s| {
        if s.iter().sum::<u64>() > x as u64 {
            return;
        }
        let mut term = 1.0;
        for ((&sk, &n), &p) in s.iter().zip(y).zip(probs) {
            term *= binomial_pmf(n, sk, p);
        }
        total += term;
    });
    Ok(total)
}

fn binomial_pmf(n: u64, i: u64, p: f64) -> f64 {
    if i > n {
        return 0.0;
    }
    if p <= 0.0 {
        return if i == 0 { 1.0 } else { 0.0 };
    }
    if p >= 1.0 {
        return if i == n { 1.0 } else { 0.0 };
    }
    let (nf, f) = (n as f64, i as f64);
    let lc = math::lgamma(nf + 1.0) - math::lgamma(f + 1.0) - math::lgamma(nf - f + 1.0);
    math::exp(lc + f * math::ln(p) + (nf - f) * math::ln_1p(-p))
}

/// Binomial pmf of `Bin(n, p)` on the cells `0..=cells`.
fn binomial_pmf_row(n: u64, p: f64, cells: usize, tmp: &mut Vec<f64>, out: &mut Vec<f64>) {
    out.clear();
    out.resize(cells + 1, 0.0);
    if n == 0 || p <= 0.0 {
        out[0] = 1.0;
        return;
    }
    if p >= 1.0 {
        if n <= cells as u64 {
            out[n as usize] = 1.0;
        }
        return;
    }
    log_binomial_row(n, p, cells, tmp);
    for (o, &l) in out.iter_mut().zip(tmp.iter()) {
        *o = math::exp(l);
    }
}

fn binomial_cdf_row(n: u64, p: f64, cells: usize, tmp: &mut Vec<f64>, out: &mut Vec<f64>) {
    binomial_pmf_row(n, p, cells, tmp, out);
    let mut acc = 0.0;
    for v in out.iter_mut() {
        acc += *v;
        *v = acc.min(1.0);
    }
}

/// Largest table of first-coordinate binomial CDF rows kept in memory.
const CDF_ROW_CACHE_LIMIT: f64 = 2e7;

/// Conditional CDFs `P(X_j ≤ x | Y = y)` for every component along the
/// odometer walk over `y`. The convolution of coordinates `1..l` is cached
/// per component and rebuilt only from the highest coordinate that changed;
/// coordinate 0 moves fastest and enters through a binomial CDF row.
struct ThinningSweep<'a> {
    probs: &'a [Vec<f64>],
    cells: usize,
    /// `levels[j][m]`: pmf of `Σ_{i ≥ m} Bin(y_i, p_j^i)` on `0..=cells`.
    levels: Vec<Vec<Vec<f64>>>,
    /// `first[j][n]`: CDF row of `Bin(n, p_j^0)`, when small enough to keep.
    first: Option<Vec<Vec<Vec<f64>>>>,
    prev: Option<Vec<u64>>,
    tmp: Vec<f64>,
    row: Vec<f64>,
}

impl<'a> ThinningSweep<'a> {
    fn new(probs: &'a [Vec<f64>], cells: usize, first_bound: u64) -> Self {
        let l = probs[0].len();
        let mut delta = vec![0.0; cells + 1];
        delta[0] = 1.0;
        let levels = vec![vec![delta; l + 1]; probs.len()];
        let size = probs.len() as f64 * (first_bound as f64 + 1.0) * (cells as f64 + 1.0);
        let mut tmp = Vec::new();
        let first = (size <= CDF_ROW_CACHE_LIMIT).then(|| {
            probs
                .iter()
                .map(|row| {
                    (0..=first_bound)
                        .map(|n| {
                            let mut out = Vec::new();
                            binomial_cdf_row(n, row[0], cells, &mut tmp, &mut out);
                            out
                        })
                        .collect()
                })
                .collect()
        });
        Self {
            probs,
            cells,
            levels,
            first,
            prev: None,
            tmp,
            row: Vec::new(),
        }
    }

    /// Bring the cached convolutions up to date for `y`.
    fn advance(&mut self, y: &[u64]) {
        let l = y.len();
        let top = match &self.prev {
            None => l,
            Some(p) => (0..l).rev().find(|&i| p[i] != y[i]).map_or(0, |h| h + 1),
        };
        for m in (1..top).rev() {
            for (j, probs) in self.probs.iter().enumerate() {
                binomial_pmf_row(y[m], probs[m], self.cells, &mut self.tmp, &mut self.row);
                let (lo, hi) = self.levels[j].split_at_mut(m + 1);
                let (src, dst) = (&hi[0], &mut lo[m]);
                for v in dst.iter_mut() {
                    *v = 0.0;
                }
                for (a, &ca) in src.iter().enumerate() {
                    if ca == 0.0 {
                        continue;
                    }
                    for (i, &b) in self.row.iter().enumerate().take(self.cells + 1 - a) {
                        dst[a + i] += ca * b;
                    }
                }
            }
        }
        match &mut self.prev {
            Some(p) => p.copy_from_slice(y),
            None => self.prev = Some(y.to_vec()),
        }
    }

    /// `P(X_j ≤ cells | Y = y)` after [`ThinningSweep::advance`].
    fn cdf(&mut self, j: usize, y0: u64) -> f64 {
        let rest = &self.levels[j][1];
        let row = match &self.first {
            Some(f) => &f[j][y0 as usize],
            None => {
                binomial_cdf_row(y0, self.probs[j][0], self.cells, &mut self.tmp, &mut self.row);
                &self.row
            }
        };
        let c = self.cells;
        rest.iter().enumerate().map(|(a, &ra)| ra * row[c - a]).sum::<f64>().min(1.0)
    }
}

/// Extreme CDFs for the thinning structure, summing over the background
/// counts `y` capped per component at the `1 − ε/(2l)` Poisson quantile.
pub fn thinning_extreme_cdf(params: &ThinningParams, q: &ExtremeQuery) -> Result<EvalResult> {
    q.validate()?;
    let method = Method::ThinningLattice;
    let Some(k) = nonneg_floor(q) else {
        return Ok(below_support(q, method));
    };
    let l = params.background_count();
    let bg: Vec<LogPoisson> = params.thetas().iter().map(|&t| LogPoisson::new(t)).collect();
    let tail = q.tail_eps / (2.0 * l as f64);
    let bounds: Vec<u64> = bg.iter().map(|p| p.cap(tail)).collect();
    check_lattice(&bounds)?;
    let lg: Vec<Table> = bg
        .iter()
        .zip(&bounds)
        .map(|(p, &b)| Table::build(b as i64, f64::NEG_INFINITY, |m| p.log_pmf(m)))
        .collect();
    let total_cap: u64 = bounds.iter().sum();
    let cells = (k as u64).min(total_cap) as usize;

    let mut sweep = ThinningSweep::new(params.probs(), cells, bounds[0]);
    let mut acc = LogSum::new();
    for_each_lattice(&bounds, |y| {
        let lw: f64 = y.iter().enumerate().map(|(i, &v)| lg[i].at(v as i64)).sum();
        if lw == f64::NEG_INFINITY {
            return;
        }
        // Below the level every component is certainly at most x.
        if y.iter().sum::<u64>() <= k as u64 {
            acc.add(lw);
            return;
        }
        sweep.advance(y);
        let d = params.dim();
        let inner = match q.kind {
            ExtremeKind::Max => {
                let mut s = 0.0;
                for j in 0..d {
                    s += math::ln(sweep.cdf(j, y[0]));
                    if s == f64::NEG_INFINITY {
                        break;
                    }
                }
                s
            }
            ExtremeKind::Min => {
                let mut s = 0.0;
                for j in 0..d {
                    s += math::ln_1p(-sweep.cdf(j, y[0]));
                }
                log1m_exp(s)
            }
        };
        acc.add(lw + inner);
    });
    let trunc: f64 = bg.iter().zip(&bounds).map(|(p, &b)| p.sf(b as i64)).sum();
    Ok(EvalResult::from_log(acc.ln(), trunc, method))
}

/// Single background count: `P(X_j ≤ x | Y = y) = I_{1−p_j}(y − x, x + 1)`,
/// so both CDFs are one-dimensional series in `y > x`.
pub fn thinning_l1_extreme_cdf(params: &ThinningParams, q: &ExtremeQuery) -> Result<EvalResult> {
    q.validate()?;
    if params.background_count() != 1 {
        return Err(invalid(
            "thetas",
            format!("the single-background form needs l = 1, got {}", params.background_count()),
        ));
    }
    let method = Method::ThinningBeta;
    let Some(k) = nonneg_floor(q) else {
        return Ok(below_support(q, method));
    };
    let y0 = LogPoisson::new(params.thetas()[0]);
    let cap = y0.cap(q.tail_eps) as i64;
    let probs: Vec<f64> = params.probs().iter().map(|r| r[0]).collect();
    let kf = k as f64;

    let mut acc = LogSum::new();
    acc.add(y0.log_cdf(k));
    for y in (k + 1)..=cap {
        let a = (y - k) as f64;
        let inner = match q.kind {
            ExtremeKind::Max => {
                let mut s = 0.0;
                for &p in &probs {
                    s += specfun::reg_inc_beta(1.0 - p, a, kf + 1.0)?.log_value;
                }
                s
            }
            ExtremeKind::Min => {
                let mut s = 0.0;
                for &p in &probs {
                    s += specfun::reg_inc_beta(p, kf + 1.0, a)?.log_value;
                }
                log1m_exp(s)
            }
        };
        acc.add(y0.log_pmf(y) + inner);
    }
    let trunc = if cap > k { y0.sf(cap) } else { y0.sf(k) };
    Ok(EvalResult::from_log(acc.ln(), trunc, method))
}
