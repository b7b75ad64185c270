//! Limiting approximations of the extreme CDFs and exact-vs-limit sweeps.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::extrema::{extreme_cdf, step_integral, EvalResult, ExtremeKind, ExtremeQuery};
use crate::logspace::{log1m_exp, log_add_exp};
use crate::math;
use crate::models::{marginal_cdf, CommonShockParams, ComonotonicParams, Model, ThinningParams};
use crate::poisson::{floor_point, LogPoisson};
use crate::specfun::RegularizedValue;

/// Default number of sequence terms inspected when estimating the
/// dimension-limit constants.
pub const DEFAULT_PROBE_DEPTH: usize = 10_000;

/// Gap below which two shock-CDF values count as the same level.
const LEVEL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ModelKind {
    Common,
    Comonotonic,
    Thinning,
}

impl ModelKind {
    pub fn of(model: &Model) -> Self {
        match model {
            Model::Common(_) => Self::Common,
            Model::Comonotonic(_) => Self::Comonotonic,
            Model::Thinning(_) => Self::Thinning,
        }
    }
}

/// Which parameter is sent to its limit. Indices are zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Limit {
    /// One marginal rate grows without bound.
    MarginalRateToInf(usize),
    /// The common shock rate grows without bound.
    ShockRateToInf,
    ThetaToZero,
    ThetaToOne,
    /// Every thinning probability of one component tends to one.
    ProbToOne(usize),
    /// Every thinning probability of one component tends to zero.
    ProbToZero(usize),
    DimToInf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Regime {
    pub model: ModelKind,
    pub limit: Limit,
    pub kind: ExtremeKind,
}

impl Regime {
    pub fn new(model: ModelKind, limit: Limit, kind: ExtremeKind) -> Self {
        Self { model, limit, kind }
    }

    /// Check that the limit exists for this structure and that any index
    /// fits a model of dimension `dim`.
    pub fn validate(&self, dim: usize) -> Result<()> {
        use Limit::*;
        let ok = matches!(
            (self.model, self.limit),
            (ModelKind::Common, MarginalRateToInf(_) | ShockRateToInf | DimToInf)
                | (ModelKind::Comonotonic, MarginalRateToInf(_) | ThetaToZero | ThetaToOne | DimToInf)
                | (ModelKind::Thinning, ProbToOne(_) | ProbToZero(_) | DimToInf)
        );
        if !ok {
            return Err(Error::InvalidRegime(format!(
                "{:?} is not a limit of the {:?} structure",
                self.limit, self.model
            )));
        }
        if let MarginalRateToInf(i) | ProbToOne(i) | ProbToZero(i) = self.limit {
            if i >= dim {
                return Err(Error::InvalidRegime(format!("component {i} out of range for dimension {dim}")));
            }
        }
        Ok(())
    }
}

/// A deterministic sequence of marginal rates `λ_1, λ_2, …`.
#[derive(Debug, Clone, PartialEq)]
pub enum RateSequence {
    /// `λ_j = a + b/j`.
    Harmonic { a: f64, b: f64 },
    /// `λ_j = a·j^p`.
    Power { a: f64, p: f64 },
    /// Explicit values, the last one repeated forever.
    List(Vec<f64>),
}

impl RateSequence {
    pub fn constant(a: f64) -> Result<Self> {
        Self::harmonic(a, 0.0)
    }

    pub fn harmonic(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a > 0.0 && a + b > 0.0) {
            return Err(invalid("rates", format!("{a} + {b}/j is not positive for every j")));
        }
        Ok(Self::Harmonic { a, b })
    }

    pub fn power(a: f64, p: f64) -> Result<Self> {
        if !(a.is_finite() && p.is_finite() && a > 0.0) {
            return Err(invalid("rates", format!("{a}*j^{p} needs a finite positive scale")));
        }
        Ok(Self::Power { a, p })
    }

    pub fn list(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(invalid("rates", "empty list"));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(invalid("rates", format!("{v} is not a positive finite rate")));
        }
        Ok(Self::List(values))
    }

    /// The `j`-th rate, one-based.
    pub fn rate(&self, j: usize) -> f64 {
        let j = j.max(1);
        match self {
            Self::Harmonic { a, b } => a + b / j as f64,
            Self::Power { a, p } => a * math::pow(j as f64, *p),
            Self::List(v) => v[(j - 1).min(v.len() - 1)],
        }
    }

    pub fn rates(&self, d: usize) -> Vec<f64> {
        (1..=d).map(|j| self.rate(j)).collect()
    }

    /// `lim_j λ_j`, possibly infinite.
    pub fn limit(&self) -> f64 {
        match self {
            Self::Harmonic { a, .. } => *a,
            Self::Power { p, .. } if *p > 0.0 => f64::INFINITY,
            Self::Power { a, p } if *p == 0.0 => *a,
            Self::Power { .. } => 0.0,
            Self::List(v) => v[v.len() - 1],
        }
    }
}

impl fmt::Display for RateSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Harmonic { a, b } if *b == 0.0 => write!(f, "{a}"),
            Self::Harmonic { a, b } if *b < 0.0 => write!(f, "{a}-{}/j", -b),
            Self::Harmonic { a, b } => write!(f, "{a}+{b}/j"),
            Self::Power { a, p } => write!(f, "{a}*j^{p}"),
            Self::List(v) => {
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{x}")?;
                }
                Ok(())
            }
        }
    }
}

/// Accepts `a`, `a+b/j`, `a-b/j`, `a*j^p`, or a comma-separated list.
impl FromStr for RateSequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let text: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = |reason: &str| Error::Parse {
            input: s.to_string(),
            reason: reason.to_string(),
        };
        let num = |t: &str| t.parse::<f64>().map_err(|_| bad("expected a number"));
        if text.is_empty() {
            return Err(bad("empty"));
        }
        if text.contains(',') {
            let values = text.split(',').map(num).collect::<Result<Vec<_>>>()?;
            return Self::list(values);
        }
        if let Some((a, p)) = text.split_once("*j^") {
            return Self::power(num(a)?, num(p)?);
        }
        if let Some(head) = text.strip_suffix("/j") {
            let bytes = head.as_bytes();
            let split = (1..bytes.len())
                .rev()
                .find(|&i| matches!(bytes[i], b'+' | b'-') && !matches!(bytes[i - 1], b'e' | b'E'))
                .ok_or_else(|| bad("expected a±b/j"))?;
            let a = num(&head[..split])?;
            let b = num(&head[split + 1..])?;
            let b = if bytes[split] == b'-' { -b } else { b };
            return Self::harmonic(a, b);
        }
        Self::constant(num(&text)?)
    }
}

fn cdf_log(rate: f64, x: f64) -> f64 {
    marginal_cdf(rate, x).log_value
}

fn eval_log(model: Model, kind: ExtremeKind, x: f64) -> Result<f64> {
    Ok(extreme_cdf(&model, &ExtremeQuery::new(kind, x))?.log_value)
}

fn drop_index<T: Clone>(v: &[T], i: usize) -> Vec<T> {
    v.iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .map(|(_, t)| t.clone())
        .collect()
}

fn need_two(dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(Error::InvalidRegime(
            "the minimum limit drops a component and needs dimension at least 2".into(),
        ));
    }
    Ok(())
}

/// The limiting value that the extreme CDF of `model` at `x` approaches in
/// `regime`, evaluated at the model's current parameters.
///
/// For a comonotonic model under [`Limit::DimToInf`] the rates are read as a
/// list whose last entry repeats; use [`comonotonic_dim_target`] for other
/// sequences.
pub fn asymptotic_target(model: &Model, regime: &Regime, x: f64) -> Result<RegularizedValue> {
    regime.validate(model.dim())?;
    if ModelKind::of(model) != regime.model {
        return Err(Error::InvalidRegime(format!(
            "regime is for the {:?} structure but the model is {}",
            regime.model,
            model.name()
        )));
    }
    if !x.is_finite() {
        return Err(invalid("x", "must be finite"));
    }
    let kind = regime.kind;
    let log = match (model, regime.limit) {
        (Model::Common(p), Limit::DimToInf) => return Ok(common_dim_target(p, x, kind)),
        (Model::Common(p), Limit::MarginalRateToInf(i)) => match kind {
            ExtremeKind::Max => {
                let t = p.thetas();
                cdf_log(p.theta0() + t[i], x)
                    + drop_index(t, i).iter().map(|&r| cdf_log(r, x)).sum::<f64>()
            }
            ExtremeKind::Min => {
                need_two(p.dim())?;
                let rest = CommonShockParams::new(p.theta0(), drop_index(p.thetas(), i))?;
                eval_log(rest.into(), kind, x)?
            }
        },
        (Model::Common(p), Limit::ShockRateToInf) => {
            let g0 = cdf_log(p.theta0(), x);
            if floor_point(x).is_none_or(|k| k < 0) {
                f64::NEG_INFINITY
            } else {
                match kind {
                    ExtremeKind::Max => g0 - p.thetas().iter().sum::<f64>(),
                    ExtremeKind::Min => {
                        let all_pos: f64 = p.thetas().iter().map(|t| log1m_exp(-t)).sum();
                        log1m_exp(all_pos) + g0
                    }
                }
            }
        }
        (Model::Comonotonic(p), Limit::MarginalRateToInf(i)) => match kind {
            ExtremeKind::Max => {
                let others: f64 = (0..p.dim())
                    .filter(|&j| j != i)
                    .map(|j| cdf_log(p.idio_rate(j), x))
                    .sum();
                cdf_log(p.lambdas()[i], x) + others
            }
            ExtremeKind::Min => {
                need_two(p.dim())?;
                let rest = ComonotonicParams::new(drop_index(p.lambdas(), i), p.theta())?;
                eval_log(rest.into(), kind, x)?
            }
        },
        (Model::Comonotonic(p), Limit::ThetaToZero) => {
            let idio = (0..p.dim()).map(|j| cdf_log(p.idio_rate(j), x));
            match kind {
                ExtremeKind::Max => idio.sum(),
                ExtremeKind::Min => log1m_exp(idio.map(|l| log1m_exp(l)).sum()),
            }
        }
        (Model::Comonotonic(p), Limit::ThetaToOne) => {
            let shock = (0..p.dim()).map(|j| cdf_log(p.shock_rate(j), x));
            match kind {
                ExtremeKind::Max => shock.fold(0.0, f64::min),
                ExtremeKind::Min => shock.fold(f64::NEG_INFINITY, f64::max),
            }
        }
        (Model::Comonotonic(p), Limit::DimToInf) => {
            let seq = RateSequence::list(p.lambdas().to_vec())?;
            return comonotonic_dim_target(&seq, p.theta(), p.dim(), x, kind, DEFAULT_PROBE_DEPTH);
        }
        (Model::Thinning(p), Limit::DimToInf) => return Ok(thinning_dim_target(p, x, kind)),
        (Model::Thinning(p), Limit::ProbToOne(i)) => match kind {
            ExtremeKind::Max => cdf_log(p.marginal_rates()[i], x),
            ExtremeKind::Min => {
                need_two(p.dim())?;
                let rest = ThinningParams::new(p.thetas().to_vec(), drop_index(p.probs(), i))?;
                eval_log(rest.into(), kind, x)?
            }
        },
        (Model::Thinning(p), Limit::ProbToZero(i)) => match kind {
            ExtremeKind::Max => {
                need_two(p.dim())?;
                let rest = ThinningParams::new(p.thetas().to_vec(), drop_index(p.probs(), i))?;
                eval_log(rest.into(), kind, x)?
            }
            ExtremeKind::Min => if x >= 0.0 { 0.0 } else { f64::NEG_INFINITY },
        },
        _ => unreachable!("regime validated above"),
    };
    Ok(RegularizedValue::from_log(log))
}

/// Common-shock limit as the dimension grows: the maximum behaves like
/// `e^{-θ₀} ∏ G_{θ_j}(x)` and the minimum tends to `G_{θ₀}(x)`.
pub fn common_dim_target(params: &CommonShockParams, x: f64, kind: ExtremeKind) -> RegularizedValue {
    let log = match kind {
        ExtremeKind::Max if x >= 0.0 => {
            -params.theta0() + params.thetas().iter().map(|&t| cdf_log(t, x)).sum::<f64>()
        }
        ExtremeKind::Max => f64::NEG_INFINITY,
        ExtremeKind::Min => cdf_log(params.theta0(), x),
    };
    RegularizedValue::from_log(log)
}

/// Thinning limit as the dimension grows: the maximum tends to the CDF of
/// the total background count and the minimum to one.
pub fn thinning_dim_target(params: &ThinningParams, x: f64, kind: ExtremeKind) -> RegularizedValue {
    match kind {
        ExtremeKind::Max => marginal_cdf(params.thetas().iter().sum(), x),
        ExtremeKind::Min if x >= 0.0 => RegularizedValue::ONE,
        ExtremeKind::Min => RegularizedValue::ZERO,
    }
}

/// Constants governing the comonotonic extremes as the dimension grows.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DimConstants {
    /// One plus the number of distinct levels `G_{θλ_j}(0)` below their
    /// limit.
    pub k_max: usize,
    /// The same count for the levels `G_{θλ_j}(x)` above their limit.
    pub k_min: usize,
    /// Multiplier of `∏_j G_{(1−θ)λ_j}(x)` in the maximum.
    pub c: f64,
    /// Additive excess of the minimum over `mk_tilde`.
    pub c_tilde: f64,
    /// `inf_j G_{θλ_j}(x)`.
    pub m1_tilde: f64,
    /// `lim_j G_{θλ_j}(x)`.
    pub mk_tilde: f64,
    /// False when levels away from the limit still appear in the second
    /// half of the probe, so the finite-chain shape may not hold.
    pub assumption_ok: bool,
}

fn shock_levels(rates: &[f64], theta: f64, x: i64) -> Vec<f64> {
    rates.iter().map(|&l| LogPoisson::new(theta * l).log_cdf(x)).collect()
}

fn chain(levels: &[f64], keep: impl Fn(f64) -> bool) -> (Vec<usize>, usize) {
    let idx: Vec<usize> = (0..levels.len()).filter(|&j| keep(levels[j])).collect();
    let distinct: BTreeSet<u64> = idx.iter().map(|&j| levels[j].to_bits()).collect();
    (idx, distinct.len() + 1)
}

/// Compute [`DimConstants`] for rates `λ_j = seq.rate(j)` with shock share
/// `theta` at level `x`, inspecting the first `probe_depth` terms.
pub fn comonotonic_dim_constants(
    seq: &RateSequence,
    theta: f64,
    x: f64,
    probe_depth: usize,
) -> Result<DimConstants> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(invalid("theta", format!("{theta} must lie in [0, 1]")));
    }
    if probe_depth == 0 {
        return Err(invalid("probe_depth", "must be positive"));
    }
    let Some(k) = floor_point(x).filter(|&k| k >= 0) else {
        return Err(invalid("x", format!("{x} must be non-negative and finite")));
    };
    let rates = seq.rates(probe_depth);
    let lim = seq.limit();
    let lim_level = |m: i64| {
        if lim.is_infinite() {
            f64::NEG_INFINITY
        } else {
            LogPoisson::new(theta * lim).log_cdf(m)
        }
    };
    let half = probe_depth / 2;

    let v = shock_levels(&rates, theta, 0);
    let v_inf = lim_level(0);
    let (max_chain, k_max) = chain(&v, |l| math::exp(l) < math::exp(v_inf) - LEVEL_TOL);
    let w = shock_levels(&rates, theta, k);
    let w_inf = lim_level(k);
    let (min_chain, k_min) = chain(&w, |l| math::exp(l) > math::exp(w_inf) + LEVEL_TOL);

    let shocks_of = |idx: &[usize]| idx.iter().map(|&j| LogPoisson::new(theta * rates[j])).collect::<Vec<_>>();
    let idio_of = |idx: &[usize]| idx.iter().map(|&j| LogPoisson::new((1.0 - theta) * rates[j])).collect::<Vec<_>>();

    let (shocks, idio) = (shocks_of(&max_chain), idio_of(&max_chain));
    let base: Vec<f64> = idio.iter().map(|y| y.log_cdf(k)).collect();
    let log_c = step_integral(
        &shocks,
        k,
        f64::NEG_INFINITY,
        v_inf,
        |j, z| idio[j].log_cdf(k - z as i64) - base[j],
        |s| s,
    );

    let (shocks, idio) = (shocks_of(&min_chain), idio_of(&min_chain));
    let log_c_tilde = step_integral(&shocks, k, w_inf, 0.0, |j, z| idio[j].log_sf(k - z as i64), log1m_exp);

    let m1 = w.iter().copied().fold(w_inf, f64::min);
    Ok(DimConstants {
        k_max,
        k_min,
        c: math::exp(log_c),
        c_tilde: math::exp(log_c_tilde),
        m1_tilde: math::exp(m1),
        mk_tilde: math::exp(w_inf),
        assumption_ok: max_chain.iter().chain(&min_chain).all(|&j| j < half),
    })
}

/// Comonotonic limit as the dimension grows, for the first `d` terms of
/// `seq`: the maximum behaves like `c ∏_j G_{(1−θ)λ_j}(x)` and the minimum
/// tends to `mk_tilde + c_tilde`.
pub fn comonotonic_dim_target(
    seq: &RateSequence,
    theta: f64,
    d: usize,
    x: f64,
    kind: ExtremeKind,
    probe_depth: usize,
) -> Result<RegularizedValue> {
    if floor_point(x).is_none_or(|k| k < 0) {
        if !x.is_finite() {
            return Err(invalid("x", "must be finite"));
        }
        return Ok(RegularizedValue::ZERO);
    }
    let consts = comonotonic_dim_constants(seq, theta, x, probe_depth.max(d))?;
    Ok(match kind {
        ExtremeKind::Max => {
            let prod: f64 = seq.rates(d).iter().map(|&l| cdf_log((1.0 - theta) * l, x)).sum();
            RegularizedValue::from_log(math::ln(consts.c) + prod)
        }
        ExtremeKind::Min => RegularizedValue::from_log(log_add_exp(
            math::ln(consts.mk_tilde),
            math::ln(consts.c_tilde),
        )),
    })
}

/// How a sweep value is turned into a model.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepTemplate {
    /// Replace one scalar of `base`.
    Scalar { base: Model, param: SweepParam },
    /// The sweep value is the dimension.
    Dim(DimFamily),
}

/// A scalar parameter of a base model. Indices are zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SweepParam {
    /// Common shock rate `θ₀`.
    ShockRate,
    /// Idiosyncratic rate `θ_i` of a common-shock model or marginal rate
    /// `λ_i` of a comonotonic model.
    Rate(usize),
    /// Shock share `θ` of a comonotonic model.
    Theta,
    /// All thinning probabilities of component `i`.
    ProbRow(usize),
}

/// A model family indexed by dimension.
#[derive(Debug, Clone, PartialEq)]
pub enum DimFamily {
    Common { theta0: f64, theta: f64 },
    Comonotonic { rates: RateSequence, theta: f64 },
    /// Every component uses the same probability row.
    Thinning { thetas: Vec<f64>, probs: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum RatioOrientation {
    ExactOverTarget,
    TargetOverExact,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepRow {
    pub param: f64,
    pub exact: EvalResult,
    pub target: RegularizedValue,
    pub ratio: f64,
}

impl SweepTemplate {
    /// The model at sweep value `v`.
    pub fn build(&self, v: f64) -> Result<Model> {
        match self {
            Self::Scalar { base, param } => scalar_model(base, *param, v),
            Self::Dim(fam) => {
                let d = dim_value(v)?;
                Ok(match fam {
                    DimFamily::Common { theta0, theta } => CommonShockParams::new(*theta0, vec![*theta; d])?.into(),
                    DimFamily::Comonotonic { rates, theta } => ComonotonicParams::new(rates.rates(d), *theta)?.into(),
                    DimFamily::Thinning { thetas, probs } => {
                        ThinningParams::new(thetas.clone(), vec![probs.clone(); d])?.into()
                    }
                })
            }
        }
    }

    fn model_kind(&self) -> ModelKind {
        match self {
            Self::Scalar { base, .. } => ModelKind::of(base),
            Self::Dim(DimFamily::Common { .. }) => ModelKind::Common,
            Self::Dim(DimFamily::Comonotonic { .. }) => ModelKind::Comonotonic,
            Self::Dim(DimFamily::Thinning { .. }) => ModelKind::Thinning,
        }
    }
}

fn dim_value(v: f64) -> Result<usize> {
    if !(v >= 1.0 && math::floor(v) == v && v <= 1e7) {
        return Err(invalid("d", format!("{v} is not a dimension")));
    }
    Ok(v as usize)
}

fn scalar_model(base: &Model, param: SweepParam, v: f64) -> Result<Model> {
    let slot = |len: usize, i: usize| {
        if i < len {
            Ok(i)
        } else {
            Err(invalid("param", format!("component {i} out of range for dimension {len}")))
        }
    };
    match (base, param) {
        (Model::Common(p), SweepParam::ShockRate) => Ok(CommonShockParams::new(v, p.thetas().to_vec())?.into()),
        (Model::Common(p), SweepParam::Rate(i)) => {
            let mut t = p.thetas().to_vec();
            let i = slot(t.len(), i)?;
            t[i] = v;
            Ok(CommonShockParams::new(p.theta0(), t)?.into())
        }
        (Model::Comonotonic(p), SweepParam::Rate(i)) => {
            let mut l = p.lambdas().to_vec();
            let i = slot(l.len(), i)?;
            l[i] = v;
            Ok(ComonotonicParams::new(l, p.theta())?.into())
        }
        (Model::Comonotonic(p), SweepParam::Theta) => Ok(ComonotonicParams::new(p.lambdas().to_vec(), v)?.into()),
        (Model::Thinning(p), SweepParam::ProbRow(i)) => {
            let mut probs = p.probs().to_vec();
            let i = slot(probs.len(), i)?;
            probs[i].iter_mut().for_each(|q| *q = v);
            Ok(ThinningParams::new(p.thetas().to_vec(), probs)?.into())
        }
        _ => Err(invalid("param", format!("{param:?} is not a parameter of the {} model", base.name()))),
    }
}

/// Exact extreme CDF against its limit over `sweep`. Ratios are formed from
/// the log values, so they stay accurate where both sides underflow.
pub fn ratio_sweep(
    template: &SweepTemplate,
    regime: &Regime,
    x: f64,
    sweep: &[f64],
    orientation: RatioOrientation,
) -> Result<Vec<SweepRow>> {
    if template.model_kind() != regime.model {
        return Err(Error::InvalidRegime(format!(
            "sweep builds {:?} models but the regime is for {:?}",
            template.model_kind(),
            regime.model
        )));
    }
    sweep
        .iter()
        .map(|&v| {
            let model = template.build(v)?;
            let exact = extreme_cdf(&model, &ExtremeQuery::new(regime.kind, x))?;
            let target = match template {
                SweepTemplate::Dim(DimFamily::Comonotonic { rates, theta }) => {
                    regime.validate(model.dim())?;
                    comonotonic_dim_target(rates, *theta, model.dim(), x, regime.kind, DEFAULT_PROBE_DEPTH)?
                }
                _ => asymptotic_target(&model, regime, x)?,
            };
            let log_ratio = match orientation {
                RatioOrientation::ExactOverTarget => exact.log_value - target.log_value,
                RatioOrientation::TargetOverExact => target.log_value - exact.log_value,
            };
            let ratio = if log_ratio.is_nan() { f64::NAN } else { math::exp(log_ratio) };
            Ok(SweepRow {
                param: v,
                exact,
                target,
                ratio,
            })
        })
        .collect()
}
