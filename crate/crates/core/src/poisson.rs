//! Univariate Poisson distribution: pmf, cdf, survival, quantile, sampling.

use alloc::format;
use alloc::vec::Vec;

use rand_core::RngCore;

use crate::error::{domain, invalid, Result};
use crate::math;
use crate::specfun::{self, RegularizedValue};

/// Poisson distribution with a strictly positive, finite rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonDist {
    rate: f64,
}

impl PoissonDist {
    pub fn new(rate: f64) -> Result<Self> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(invalid("rate", format!("{rate} must be positive and finite")));
        }
        Ok(Self { rate })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// `ln P(X = k)` for `k ≥ 0`.
    pub fn ln_pmf(&self, k: u64) -> f64 {
        let kf = k as f64;
        kf * math::ln(self.rate) - self.rate - math::lgamma(kf + 1.0)
    }

    pub fn pmf(&self, k: i64) -> Result<RegularizedValue> {
        if k < 0 {
            return Err(domain("pmf", format!("k = {k} must be non-negative")));
        }
        Ok(RegularizedValue::from_log(self.ln_pmf(k as u64)))
    }

    /// `P(X ≤ k)` at an integer point; zero for `k < 0`.
    pub fn cdf_at(&self, k: i64) -> RegularizedValue {
        if k < 0 {
            return RegularizedValue::ZERO;
        }
        reg_gamma_q_unchecked(k as f64 + 1.0, self.rate)
    }

    /// `P(X > k)` at an integer point; one for `k < 0`.
    pub fn sf_at(&self, k: i64) -> RegularizedValue {
        if k < 0 {
            return RegularizedValue::ONE;
        }
        reg_gamma_p_unchecked(k as f64 + 1.0, self.rate)
    }

    /// `P(X ≤ x)` for real `x`, using `⌊x⌋`.
    pub fn cdf(&self, x: f64) -> RegularizedValue {
        match floor_point(x) {
            Some(k) => self.cdf_at(k),
            None if x > 0.0 => RegularizedValue::ONE,
            None => RegularizedValue::ZERO,
        }
    }

    /// `P(X > x)` for real `x`, using `⌊x⌋`.
    pub fn sf(&self, x: f64) -> RegularizedValue {
        match floor_point(x) {
            Some(k) => self.sf_at(k),
            None if x > 0.0 => RegularizedValue::ZERO,
            None => RegularizedValue::ONE,
        }
    }

    /// Smallest `k` with `P(X ≤ k) ≥ u`.
    pub fn quantile(&self, u: f64) -> Result<u64> {
        if !(u > 0.0 && u <= 1.0) {
            return Err(domain("quantile", format!("u = {u} must lie in (0, 1]")));
        }
        let guess = self.rate + math::sqrt(self.rate) * normal_quantile(u.min(1.0 - 1e-16)) - 1.0;
        let mut k = if guess > 0.0 { math::floor(guess) as u64 } else { 0 };
        while k > 0 && self.cdf_at(k as i64 - 1).value >= u {
            k -= 1;
        }
        loop {
            let c = self.cdf_at(k as i64).value;
            if c >= u {
                return Ok(k);
            }
            if c == 1.0 {
                return Ok(k);
            }
            k += 1;
        }
    }

    /// Smallest `k` with `P(X > k) ≤ tail`, i.e. the cap that leaves at most
    /// `tail` mass to the right.
    pub fn upper_cap(&self, tail: f64) -> u64 {
        let guess = self.rate - math::sqrt(self.rate) * normal_quantile(tail.clamp(1e-300, 0.5));
        let mut k = math::floor(guess.max(0.0)) as u64;
        while k > 0 && self.sf_at(k as i64 - 1).value <= tail {
            k -= 1;
        }
        while self.sf_at(k as i64).value > tail {
            k += 1;
        }
        k
    }

    /// CDF table `G(0), …, G(kmax)`.
    pub fn cdf_table(&self, kmax: u64) -> Vec<RegularizedValue> {
        (0..=kmax).map(|k| self.cdf_at(k as i64)).collect()
    }

    /// Draw one variate.
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> u64 {
        sample_poisson(self.rate, rng)
    }
}

/// Poisson law that also admits rate zero (a point mass at 0), with
/// log-scale accessors defined on all integers.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LogPoisson {
    dist: Option<PoissonDist>,
}

impl LogPoisson {
    pub(crate) fn new(rate: f64) -> Self {
        Self {
            dist: PoissonDist::new(rate).ok(),
        }
    }

    pub(crate) fn log_pmf(&self, m: i64) -> f64 {
        match (&self.dist, m) {
            (_, m) if m < 0 => f64::NEG_INFINITY,
            (Some(d), m) => d.ln_pmf(m as u64),
            (None, 0) => 0.0,
            (None, _) => f64::NEG_INFINITY,
        }
    }

    pub(crate) fn log_cdf(&self, m: i64) -> f64 {
        match &self.dist {
            _ if m < 0 => f64::NEG_INFINITY,
            Some(d) => d.cdf_at(m).log_value,
            None => 0.0,
        }
    }

    pub(crate) fn log_sf(&self, m: i64) -> f64 {
        match &self.dist {
            _ if m < 0 => 0.0,
            Some(d) => d.sf_at(m).log_value,
            None => f64::NEG_INFINITY,
        }
    }

    pub(crate) fn sf(&self, m: i64) -> f64 {
        match &self.dist {
            _ if m < 0 => 1.0,
            Some(d) => d.sf_at(m).value,
            None => 0.0,
        }
    }

    /// Smallest cap with at most `tail` mass above it.
    pub(crate) fn cap(&self, tail: f64) -> u64 {
        self.dist.map_or(0, |d| d.upper_cap(tail))
    }
}

/// `⌊x⌋` as an integer, or `None` when `x` is non-finite or outside `i64`.
pub(crate) fn floor_point(x: f64) -> Option<i64> {
    if x.is_nan() {
        return None;
    }
    let f = math::floor(x);
    if f < -9.0e18 || f > 9.0e18 {
        None
    } else {
        Some(f as i64)
    }
}

pub(crate) fn reg_gamma_q_unchecked(a: f64, x: f64) -> RegularizedValue {
    specfun::reg_gamma_q(a, x).unwrap_or(RegularizedValue::ZERO)
}

pub(crate) fn reg_gamma_p_unchecked(a: f64, x: f64) -> RegularizedValue {
    specfun::reg_gamma_p(a, x).unwrap_or(RegularizedValue::ONE)
}

/// Acklam's rational approximation to the standard normal quantile
/// (relative error about `1e-9`), used only for initial guesses.
pub(crate) fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const LOW: f64 = 0.024_25;
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    if p < LOW {
        let q = math::sqrt(-2.0 * math::ln(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = math::sqrt(-2.0 * math::ln_1p(-p));
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// Uniform variate on the open interval `(0, 1)` from 53 random bits.
#[inline]
pub(crate) fn open_uniform<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Poisson variate: sequential inversion below rate 30, transformed
/// rejection (PTRS) above.
pub(crate) fn sample_poisson<R: RngCore + ?Sized>(rate: f64, rng: &mut R) -> u64 {
    if rate <= 0.0 {
        return 0;
    }
    if rate < 30.0 {
        let u = open_uniform(rng);
        let mut k = 0u64;
        let mut p = math::exp(-rate);
        let mut cum = p;
        while u > cum {
            k += 1;
            p *= rate / k as f64;
            if p == 0.0 {
                break;
            }
            cum += p;
        }
        return k;
    }
    let slam = math::sqrt(rate);
    let loglam = math::ln(rate);
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.024_83 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u = open_uniform(rng) - 0.5;
        let v = open_uniform(rng);
        let us = 0.5 - math::abs(u);
        let k = math::floor((2.0 * a / us + b) * u + rate + 0.43);
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = math::ln(v) + math::ln(inv_alpha) - math::ln(a / (us * us) + b);
        let rhs = -rate + k * loglam - math::lgamma(k + 1.0);
        if lhs <= rhs {
            return k as u64;
        }
    }
}
