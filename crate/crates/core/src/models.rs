//! Parameter records, samplers and reductions between the three structures.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand_core::RngCore;
use rand_distr::{Binomial, Distribution};

use crate::error::{invalid, Result};
use crate::poisson::{open_uniform, sample_poisson, PoissonDist};
use crate::specfun::RegularizedValue;

fn check_rate(field: impl FnOnce() -> alloc::string::String, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field(), format!("{v} must be positive and finite")))
    }
}

/// Common shock: `X_j = Y_0 + Y_j` with `Y_0 ~ P(θ₀)`, `Y_j ~ P(θ_j)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "raw::Common"))]
pub struct CommonShockParams {
    theta0: f64,
    thetas: Vec<f64>,
}

impl CommonShockParams {
    pub fn new(theta0: f64, thetas: Vec<f64>) -> Result<Self> {
        check_rate(|| "theta0".into(), theta0)?;
        if thetas.is_empty() {
            return Err(invalid("thetas", "need at least one coordinate"));
        }
        for (j, &t) in thetas.iter().enumerate() {
            check_rate(|| format!("thetas[{j}]"), t)?;
        }
        Ok(Self { theta0, thetas })
    }

    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn dim(&self) -> usize {
        self.thetas.len()
    }

    pub fn marginal_rates(&self) -> Vec<f64> {
        self.thetas.iter().map(|t| self.theta0 + t).collect()
    }
}

/// Comonotonic shock: `X_j = Y_j + Z_j` with `Y_j ~ P((1-θ)λ_j)` independent
/// and `Z_j = G⁻¹_{θλ_j}(U)` driven by one uniform `U`.
///
/// The boundary weights `θ = 0` (independence) and `θ = 1` (pure
/// comonotonicity) are accepted.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "raw::Comonotonic"))]
pub struct ComonotonicParams {
    lambdas: Vec<f64>,
    theta: f64,
}

impl ComonotonicParams {
    pub fn new(lambdas: Vec<f64>, theta: f64) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(invalid("lambdas", "need at least one coordinate"));
        }
        for (j, &l) in lambdas.iter().enumerate() {
            check_rate(|| format!("lambdas[{j}]"), l)?;
        }
        if !(0.0..=1.0).contains(&theta) {
            return Err(invalid("theta", format!("{theta} must lie in [0, 1]")));
        }
        Ok(Self { lambdas, theta })
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn dim(&self) -> usize {
        self.lambdas.len()
    }

    pub fn marginal_rates(&self) -> Vec<f64> {
        self.lambdas.clone()
    }

    /// Rate of the comonotonic shock `Z_j`.
    pub fn shock_rate(&self, j: usize) -> f64 {
        self.theta * self.lambdas[j]
    }

    /// Rate of the idiosyncratic part `Y_j`.
    pub fn idio_rate(&self, j: usize) -> f64 {
        (1.0 - self.theta) * self.lambdas[j]
    }
}

/// Thinning dependence: `X_j = Σ_k Bin(Y_k, p_j^k)` with `Y_k ~ P(θ_k)`.
///
/// `probs` is row-major with `d` rows (coordinates) and `l` columns
/// (background counts).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "raw::Thinning"))]
pub struct ThinningParams {
    thetas: Vec<f64>,
    probs: Vec<Vec<f64>>,
}

impl ThinningParams {
    pub fn new(thetas: Vec<f64>, probs: Vec<Vec<f64>>) -> Result<Self> {
        let p = Self::new_relaxed(thetas, probs)?;
        for (j, row) in p.probs.iter().enumerate() {
            let rate: f64 = row.iter().zip(&p.thetas).map(|(a, b)| a * b).sum();
            if !(rate > 0.0) {
                return Err(invalid(format!("probs[{j}]"), "marginal rate is zero"));
            }
        }
        Ok(p)
    }

    /// Like [`ThinningParams::new`] but allows coordinates with zero
    /// marginal rate (identically zero components).
    pub fn new_relaxed(thetas: Vec<f64>, probs: Vec<Vec<f64>>) -> Result<Self> {
        if thetas.is_empty() {
            return Err(invalid("thetas", "need at least one background rate"));
        }
        for (k, &t) in thetas.iter().enumerate() {
            check_rate(|| format!("thetas[{k}]"), t)?;
        }
        if probs.is_empty() {
            return Err(invalid("probs", "need at least one coordinate"));
        }
        for (j, row) in probs.iter().enumerate() {
            if row.len() != thetas.len() {
                return Err(invalid(
                    format!("probs[{j}]"),
                    format!("has {} entries, expected {}", row.len(), thetas.len()),
                ));
            }
            for (k, &v) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(invalid(format!("probs[{j}][{k}]"), format!("{v} must lie in [0, 1]")));
                }
            }
        }
        Ok(Self { thetas, probs })
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn probs(&self) -> &[Vec<f64>] {
        &self.probs
    }

    pub fn dim(&self) -> usize {
        self.probs.len()
    }

    pub fn background_count(&self) -> usize {
        self.thetas.len()
    }

    pub fn marginal_rates(&self) -> Vec<f64> {
        self.probs
            .iter()
            .map(|row| row.iter().zip(&self.thetas).map(|(p, t)| p * t).sum())
            .collect()
    }
}

/// Any of the three structures, tagged by `model` in JSON.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "model", rename_all = "lowercase"))]
pub enum Model {
    Common(CommonShockParams),
    Comonotonic(ComonotonicParams),
    Thinning(ThinningParams),
}

impl Model {
    pub fn dim(&self) -> usize {
        match self {
            Model::Common(p) => p.dim(),
            Model::Comonotonic(p) => p.dim(),
            Model::Thinning(p) => p.dim(),
        }
    }

    pub fn marginal_rates(&self) -> Vec<f64> {
        match self {
            Model::Common(p) => p.marginal_rates(),
            Model::Comonotonic(p) => p.marginal_rates(),
            Model::Thinning(p) => p.marginal_rates(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Model::Common(_) => "common",
            Model::Comonotonic(_) => "comonotonic",
            Model::Thinning(_) => "thinning",
        }
    }
}

impl From<CommonShockParams> for Model {
    fn from(p: CommonShockParams) -> Self {
        Model::Common(p)
    }
}

impl From<ComonotonicParams> for Model {
    fn from(p: ComonotonicParams) -> Self {
        Model::Comonotonic(p)
    }
}

impl From<ThinningParams> for Model {
    fn from(p: ThinningParams) -> Self {
        Model::Thinning(p)
    }
}

/// One draw of the random vector.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SampleVector {
    pub values: Vec<u64>,
}

impl SampleVector {
    pub fn max(&self) -> u64 {
        self.values.iter().copied().max().unwrap_or(0)
    }

    pub fn min(&self) -> u64 {
        self.values.iter().copied().min().unwrap_or(0)
    }
}

/// Precomputed sampler. Comonotonic shocks are drawn by binary search in a
/// cached CDF table, which is exact at every atom.
#[derive(Debug, Clone)]
pub struct Sampler {
    inner: SamplerKind,
}

#[derive(Debug, Clone)]
enum SamplerKind {
    Common(CommonShockParams),
    Comonotonic {
        idio: Vec<f64>,
        tables: Vec<Vec<f64>>,
    },
    Thinning(ThinningParams),
}

/// CDF values `G(0), G(1), …` up to the first entry that rounds to one.
fn shock_table(rate: f64) -> Vec<f64> {
    let Ok(dist) = PoissonDist::new(rate) else {
        return vec![1.0];
    };
    let mut table = Vec::new();
    let mut k = 0i64;
    loop {
        let v = dist.cdf_at(k).value;
        table.push(v);
        if v >= 1.0 {
            return table;
        }
        k += 1;
    }
}

impl Sampler {
    pub fn new(model: &Model) -> Self {
        let inner = match model {
            Model::Common(p) => SamplerKind::Common(p.clone()),
            Model::Comonotonic(p) => SamplerKind::Comonotonic {
                idio: (0..p.dim()).map(|j| p.idio_rate(j)).collect(),
                tables: (0..p.dim()).map(|j| shock_table(p.shock_rate(j))).collect(),
            },
            Model::Thinning(p) => SamplerKind::Thinning(p.clone()),
        };
        Self { inner }
    }

    /// Draw one vector into `out`, which is resized to the dimension.
    pub fn sample_into<R: RngCore + ?Sized>(&self, rng: &mut R, out: &mut Vec<u64>) {
        out.clear();
        match &self.inner {
            SamplerKind::Common(p) => {
                let y0 = sample_poisson(p.theta0, rng);
                out.extend(p.thetas.iter().map(|&t| y0 + sample_poisson(t, rng)));
            }
            SamplerKind::Comonotonic { idio, tables } => {
                let u = open_uniform(rng);
                for (table, &rate) in tables.iter().zip(idio) {
                    let z = table.partition_point(|&g| g < u) as u64;
                    out.push(z + sample_poisson(rate, rng));
                }
            }
            SamplerKind::Thinning(p) => {
                out.resize(p.dim(), 0);
                for (k, &theta) in p.thetas.iter().enumerate() {
                    let y = sample_poisson(theta, rng);
                    for (j, row) in p.probs.iter().enumerate() {
                        out[j] += sample_binomial(y, row[k], rng);
                    }
                }
            }
        }
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> SampleVector {
        let mut values = Vec::new();
        self.sample_into(rng, &mut values);
        SampleVector { values }
    }
}

fn sample_binomial<R: RngCore + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    match Binomial::new(n, p) {
        Ok(b) => b.sample(rng),
        Err(_) => 0,
    }
}

pub fn sample_common_shock<R: RngCore + ?Sized>(params: &CommonShockParams, rng: &mut R) -> SampleVector {
    Sampler::new(&Model::Common(params.clone())).sample(rng)
}

pub fn sample_comonotonic<R: RngCore + ?Sized>(params: &ComonotonicParams, rng: &mut R) -> SampleVector {
    Sampler::new(&Model::Comonotonic(params.clone())).sample(rng)
}

pub fn sample_thinning<R: RngCore + ?Sized>(params: &ThinningParams, rng: &mut R) -> SampleVector {
    Sampler::new(&Model::Thinning(params.clone())).sample(rng)
}

/// Rewrite a common-shock vector as a thinning vector with `l = d + 1`
/// background counts: `Y_1..Y_d` each feed one coordinate and the last
/// count `Y_{d+1} = Y_0` feeds all of them.
pub fn thinning_from_common(params: &CommonShockParams) -> ThinningParams {
    let d = params.dim();
    let mut thetas = params.thetas.clone();
    thetas.push(params.theta0);
    let probs = (0..d)
        .map(|j| {
            let mut row = vec![0.0; d + 1];
            row[j] = 1.0;
            row[d] = 1.0;
            row
        })
        .collect();
    ThinningParams { thetas, probs }
}

/// Equal-rate comonotonic vectors are common-shock vectors with
/// `θ₀ = θλ` and `θ_j = (1-θ)λ`.
pub fn common_from_comonotonic_equal_rates(params: &ComonotonicParams) -> Result<CommonShockParams> {
    let lambda = params.lambdas[0];
    for (j, &l) in params.lambdas.iter().enumerate() {
        if (l - lambda).abs() > 1e-12 * lambda {
            return Err(invalid(format!("lambdas[{j}]"), format!("{l} differs from lambdas[0] = {lambda}")));
        }
    }
    if params.theta <= 0.0 || params.theta >= 1.0 {
        return Err(invalid(
            "theta",
            format!("{} must lie strictly inside (0, 1) for a common-shock reduction", params.theta),
        ));
    }
    CommonShockParams::new(params.theta * lambda, vec![(1.0 - params.theta) * lambda; params.dim()])
}

/// Marginal CDF `P(X_j ≤ x)` for any model.
pub(crate) fn marginal_cdf(rate: f64, x: f64) -> RegularizedValue {
    match PoissonDist::new(rate) {
        Ok(d) => d.cdf(x),
        Err(_) if x >= 0.0 => RegularizedValue::ONE,
        Err(_) => RegularizedValue::ZERO,
    }
}

#[cfg(feature = "serde")]
mod raw {
    use alloc::vec::Vec;

    use super::{CommonShockParams, ComonotonicParams, ThinningParams};
    use crate::error::Error;

    #[derive(serde::Deserialize)]
    #[serde(deny_unknown_fields)]
    pub(super) struct Common {
        theta0: f64,
        thetas: Vec<f64>,
    }

    #[derive(serde::Deserialize)]
    #[serde(deny_unknown_fields)]
    pub(super) struct Comonotonic {
        lambdas: Vec<f64>,
        theta: f64,
    }

    #[derive(serde::Deserialize)]
    #[serde(deny_unknown_fields)]
    pub(super) struct Thinning {
        thetas: Vec<f64>,
        probs: Vec<Vec<f64>>,
    }

    impl TryFrom<Common> for CommonShockParams {
        type Error = Error;
        fn try_from(r: Common) -> Result<Self, Error> {
            CommonShockParams::new(r.theta0, r.thetas)
        }
    }

    impl TryFrom<Comonotonic> for ComonotonicParams {
        type Error = Error;
        fn try_from(r: Comonotonic) -> Result<Self, Error> {
            ComonotonicParams::new(r.lambdas, r.theta)
        }
    }

    impl TryFrom<Thinning> for ThinningParams {
        type Error = Error;
        fn try_from(r: Thinning) -> Result<Self, Error> {
            ThinningParams::new(r.thetas, r.probs)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn table1_common() -> CommonShockParams {
        CommonShockParams::new(3.3804, vec![2.6196, 3.6196, 4.6196]).unwrap()
    }

    #[test]
    fn marginal_rates_per_model() {
        let m = table1_common().marginal_rates();
        for (a, b) in m.iter().zip([6.0, 7.0, 8.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        let t = ThinningParams::new(vec![8.2, 19.69], vec![vec![1.0, 0.0406], vec![1.0, 0.0406], vec![1.0, 0.0914]])
            .unwrap();
        let r = t.marginal_rates();
        assert!((r[0] - (8.2 + 19.69 * 0.0406)).abs() < 1e-12);
        assert!((r[2] - (8.2 + 19.69 * 0.0914)).abs() < 1e-12);
        let c = ComonotonicParams::new(vec![6.0, 7.0, 8.0], 0.5).unwrap();
        assert_eq!(c.marginal_rates(), vec![6.0, 7.0, 8.0]);
    }

    #[test]
    fn validation_names_fields() {
        let e = CommonShockParams::new(1.0, vec![1.0, -2.0]).unwrap_err();
        assert!(matches!(e, Error::InvalidParameter { ref field, .. } if field == "thetas[1]"));
        let e = ComonotonicParams::new(vec![1.0], 1.5).unwrap_err();
        assert!(matches!(e, Error::InvalidParameter { ref field, .. } if field == "theta"));
        let e = ThinningParams::new(vec![1.0, 2.0], vec![vec![0.5, 1.2]]).unwrap_err();
        assert!(matches!(e, Error::InvalidParameter { ref field, .. } if field == "probs[0][1]"));
        let e = ThinningParams::new(vec![1.0], vec![vec![0.0]]).unwrap_err();
        assert!(matches!(e, Error::InvalidParameter { ref field, .. } if field == "probs[0]"));
        assert!(ThinningParams::new_relaxed(vec![1.0], vec![vec![0.0]]).is_ok());
        assert!(CommonShockParams::new(0.0, vec![1.0]).is_err());
        assert!(CommonShockParams::new(1.0, vec![]).is_err());
    }

    #[test]
    fn reductions() {
        let c = CommonShockParams::new(1.0, vec![2.0, 3.0]).unwrap();
        let t = thinning_from_common(&c);
        assert_eq!(t.thetas(), &[2.0, 3.0, 1.0]);
        assert_eq!(t.probs(), &[vec![1.0, 0.0, 1.0], vec![0.0, 1.0, 1.0]]);
        let co = ComonotonicParams::new(vec![5.0; 3], 0.4).unwrap();
        let cs = common_from_comonotonic_equal_rates(&co).unwrap();
        assert!((cs.theta0() - 2.0).abs() < 1e-15);
        assert!(cs.thetas().iter().all(|&t| (t - 3.0).abs() < 1e-15));
        assert!(common_from_comonotonic_equal_rates(&ComonotonicParams::new(vec![5.0; 3], 0.0).unwrap()).is_err());
        assert!(common_from_comonotonic_equal_rates(&ComonotonicParams::new(vec![5.0; 3], 1.0).unwrap()).is_err());
        assert!(common_from_comonotonic_equal_rates(&ComonotonicParams::new(vec![5.0, 6.0], 0.5).unwrap()).is_err());
    }

    #[test]
    fn sampler_determinism_and_degenerate_cases() {
        let m: Model = table1_common().into();
        let s = Sampler::new(&m);
        let a = s.sample(&mut ChaCha8Rng::seed_from_u64(3));
        let b = s.sample(&mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let co = ComonotonicParams::new(vec![4.0; 3], 1.0).unwrap();
        for _ in 0..1000 {
            let v = sample_comonotonic(&co, &mut rng);
            assert!(v.values.iter().all(|&x| x == v.values[0]));
        }
        let th = ThinningParams::new(vec![6.0], vec![vec![1.0]; 4]).unwrap();
        for _ in 0..1000 {
            let v = sample_thinning(&th, &mut rng);
            assert!(v.values.iter().all(|&x| x == v.values[0]));
        }
        let zero = ThinningParams::new_relaxed(vec![6.0], vec![vec![0.0]; 2]).unwrap();
        for _ in 0..1000 {
            assert_eq!(sample_thinning(&zero, &mut rng).values, vec![0, 0]);
        }
    }

    fn mean_cov(model: &Model, n: usize, seed: u64) -> (Vec<f64>, f64) {
        let s = Sampler::new(model);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = model.dim();
        let mut sum = vec![0.0; d];
        let mut s01 = 0.0;
        let mut buf = Vec::new();
        for _ in 0..n {
            s.sample_into(&mut rng, &mut buf);
            for j in 0..d {
                sum[j] += buf[j] as f64;
            }
            s01 += buf[0] as f64 * buf[1] as f64;
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / n as f64).collect();
        (mean.clone(), s01 / n as f64 - mean[0] * mean[1])
    }

    #[test]
    fn sampler_moments_match_rates() {
        let n = 300_000;
        let c = table1_common();
        let (mean, cov) = mean_cov(&c.clone().into(), n, 17);
        for (m, r) in mean.iter().zip(c.marginal_rates()) {
            assert!((m - r).abs() < 4.0 * (r / n as f64).sqrt());
        }
        // Var of X0·X1 bounds the standard error of the covariance estimate.
        let se = ((6.0 * 7.0 + 2.0 * c.theta0().powi(2)) / n as f64).sqrt();
        assert!((cov - c.theta0()).abs() < 4.0 * se, "cov {cov}");

        let th = ThinningParams::new(vec![15.3829], vec![vec![0.39], vec![0.4551], vec![0.5201]]).unwrap();
        let (mean, cov) = mean_cov(&th.clone().into(), n, 19);
        for (m, r) in mean.iter().zip(th.marginal_rates()) {
            assert!((m - r).abs() < 4.0 * (r / n as f64).sqrt());
        }
        let want = 15.3829 * 0.39 * 0.4551;
        let r = th.marginal_rates();
        let se = ((r[0] * r[1] + 2.0 * want * want) / n as f64).sqrt();
        assert!((cov - want).abs() < 4.0 * se);
    }
}
