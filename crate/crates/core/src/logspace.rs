//! Log-space accumulation helpers.

use crate::math;

/// `ln(e^a + e^b)` without overflow.
#[inline]
pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + math::ln_1p(math::exp(lo - hi))
}

/// `ln(1 - e^x)` for `x ≤ 0`.
#[inline]
pub(crate) fn log1m_exp(x: f64) -> f64 {
    if x >= 0.0 {
        return f64::NEG_INFINITY;
    }
    if x > -core::f64::consts::LN_2 {
        math::ln(-math::expm1(x))
    } else {
        math::ln_1p(-math::exp(x))
    }
}

/// Streaming log-sum-exp over positive terms given by their logarithms.
///
/// Keeps a running maximum and rescales the partial sum when a larger term
/// arrives, so sums of terms far below `1e-300` stay representable.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LogSum {
    max: f64,
    scaled: f64,
}

impl LogSum {
    pub(crate) fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }

    pub(crate) fn add(&mut self, log_term: f64) {
        if log_term == f64::NEG_INFINITY || log_term.is_nan() {
            return;
        }
        if log_term <= self.max {
            self.scaled += math::exp(log_term - self.max);
        } else {
            self.scaled = self.scaled * math::exp(self.max - log_term) + 1.0;
            self.max = log_term;
        }
    }

    pub(crate) fn ln(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + math::ln(self.scaled)
        }
    }
}

/// Convert a log-probability into a value clamped to `[0, 1]`.
#[inline]
pub(crate) fn prob_from_log(log_value: f64) -> f64 {
    math::exp(log_value).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logsum_matches_direct_sum() {
        let terms = [0.1_f64, 0.25, 1e-5, 0.3];
        let mut acc = LogSum::new();
        for t in terms {
            acc.add(t.ln());
        }
        let direct: f64 = terms.iter().sum();
        assert!((acc.ln().exp() - direct).abs() < 1e-15);
    }

    #[test]
    fn logsum_survives_underflow() {
        let mut acc = LogSum::new();
        acc.add(-2000.0);
        acc.add(-2000.0);
        assert!((acc.ln() - (-2000.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn log1m_exp_branches() {
        for x in [-1e-10_f64, -0.1, -0.69, -0.7, -5.0] {
            let want = (-x.exp_m1()).ln();
            let got = log1m_exp(x);
            assert!((got - want).abs() <= 1e-9 * want.abs().max(1e-300), "{x}");
        }
        let y = (-50f64).exp();
        assert!((log1m_exp(-50.0) / -y - 1.0).abs() < 1e-15);
        assert_eq!(log1m_exp(0.0), f64::NEG_INFINITY);
        assert!((log_add_exp(0.0, 0.0) - 2f64.ln()).abs() < 1e-15);
    }
}
