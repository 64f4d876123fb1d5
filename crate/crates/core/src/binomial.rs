//! Binomial and beta-binomial lower tails.

use crate::error::{Error, Result};
use crate::special::{binomial_lower_tail_cf, binomial_pmf};

/// Above this size the tail goes through the incomplete beta continued
/// fraction instead of summing point masses.
const DIRECT_SUM_MAX_T: u64 = 64;

/// The event `{S <= m}` for `S ~ Binomial(t, theta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailQuery {
    pub t: u64,
    pub m: u64,
    pub theta: f64,
}

impl TailQuery {
    pub fn new(t: u64, m: u64, theta: f64) -> Result<Self> {
        if t == 0 {
            return Err(Error::domain("t", 0.0, "positive integers"));
        }
        if m > t {
            return Err(Error::domain("m", m as f64, "0..=t"));
        }
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::domain("theta", theta, "[0, 1]"));
        }
        Ok(Self { t, m, theta })
    }

    /// Miss event of a majority vote: at most `(t - 1) / 2` successes out of an odd `t`.
    pub fn majority(t: u64, theta: f64) -> Result<Self> {
        crate::error::require_odd(t)?;
        Self::new(t, (t - 1) / 2, theta)
    }

    pub fn cdf(&self) -> f64 {
        let Self { t, m, theta } = *self;
        if m >= t || theta == 0.0 {
            return 1.0;
        }
        if theta == 1.0 {
            return 0.0;
        }
        let p = if t <= DIRECT_SUM_MAX_T {
            (0..=m).map(|k| binomial_pmf(k, t, theta)).sum()
        } else {
            binomial_lower_tail_cf(m, t, theta)
        };
        p.clamp(0.0, 1.0)
    }
}

/// `P(Binomial(t, theta) <= m)`.
pub fn binomial_cdf(t: u64, m: u64, theta: f64) -> Result<f64> {
    Ok(TailQuery::new(t, m, theta)?.cdf())
}

/// Lower and upper tails `(P(S <= m), P(S > m))` for `S ~ BetaBinomial(t, alpha, beta)`.
///
/// Point masses are built from their ratio recurrence in log space and
/// normalized by their own sum, so the normalizing beta function never
/// enters and the two tails add to one up to rounding.
pub fn beta_binomial_tails(t: u64, alpha: f64, beta: f64, m: u64) -> Result<(f64, f64)> {
    if !(alpha.is_finite() && alpha > 0.0 && beta.is_finite() && beta > 0.0) {
        return Err(Error::InvalidSpec(format!(
            "beta-binomial needs positive parameters, got alpha={alpha}, beta={beta}"
        )));
    }
    if m > t {
        return Err(Error::domain("m", m as f64, "0..=t"));
    }
    let n = t as usize;
    let mut log_w = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    log_w.push(acc);
    for k in 0..t {
        let kf = k as f64;
        let tf = t as f64;
        // w(k+1) / w(k) = (t-k)(k+alpha) / ((k+1)(t-k-1+beta))
        let ratio = ((tf - kf) * (kf + alpha)) / ((kf + 1.0) * (tf - kf - 1.0 + beta));
        acc += ratio.ln();
        log_w.push(acc);
    }
    let peak = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let split = m as usize + 1;
    let lower: f64 = log_w[..split].iter().map(|lw| (lw - peak).exp()).sum();
    let upper: f64 = log_w[split..].iter().map(|lw| (lw - peak).exp()).sum();
    let total = lower + upper;
    Ok((lower / total, upper / total))
}

/// `P(S <= m)` for `S ~ BetaBinomial(t, alpha, beta)`.
pub fn beta_binomial_cdf(t: u64, alpha: f64, beta: f64, m: u64) -> Result<f64> {
    beta_binomial_tails(t, alpha, beta, m).map(|(lower, _)| lower)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::ln_gamma;
    use proptest::prelude::*;

    // log-gamma summation, a route independent of Loader's point mass and the continued fraction
    fn lgamma_tail(t: u64, m: u64, theta: f64) -> f64 {
        let tf = t as f64;
        (0..=m)
            .map(|k| {
                let kf = k as f64;
                (ln_gamma(tf + 1.0) - ln_gamma(kf + 1.0) - ln_gamma(tf - kf + 1.0)
                    + kf * theta.ln()
                    + (tf - kf) * (-theta).ln_1p())
                .exp()
            })
            .sum()
    }

    #[test]
    fn examples() {
        assert!((binomial_cdf(5, 2, 0.5).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(binomial_cdf(3, 2, 1.0).unwrap(), 0.0);
        let direct = 0.1f64.powi(5) + 5.0 * 0.9 * 0.1f64.powi(4) + 10.0 * 0.81 * 0.001;
        assert!((direct - 0.00856).abs() < 1e-15);
        assert!((binomial_cdf(5, 2, 0.9).unwrap() - direct).abs() < 1e-15);
    }

    #[test]
    fn endpoints_and_domain() {
        assert_eq!(binomial_cdf(101, 0, 0.0).unwrap(), 1.0);
        assert_eq!(binomial_cdf(101, 100, 1.0).unwrap(), 0.0);
        assert_eq!(binomial_cdf(101, 101, 1.0).unwrap(), 1.0);
        assert_eq!(binomial_cdf(5, 6, 0.5).unwrap_err().category(), "domain-error");
        assert_eq!(binomial_cdf(5, 2, 1.5).unwrap_err().category(), "domain-error");
        assert_eq!(TailQuery::majority(4, 0.5).unwrap_err().category(), "odd-t-required");
    }

    #[test]
    fn continued_fraction_agrees_with_lgamma_sum() {
        for t in [65u64, 101, 500, 2001] {
            for theta in [0.01, 0.2, 0.45, 0.5, 0.55, 0.8, 0.99] {
                for m in [0, t / 4, (t - 1) / 2, 3 * t / 4, t - 1] {
                    let got = binomial_cdf(t, m, theta).unwrap();
                    let want = lgamma_tail(t, m, theta);
                    assert!((got - want).abs() < 1e-11, "t={t} theta={theta} m={m}: {got} vs {want}");
                }
            }
        }
    }

    #[test]
    fn large_t_against_pmf_summation() {
        // compensated summation of point masses as the reference
        let t = 100_000u64;
        for theta in [0.3, 0.499, 0.5, 0.501] {
            for m in [29_000u64, 49_800, 49_999, 50_200] {
                let mut sum = 0.0;
                let mut comp = 0.0;
                for k in 0..=m {
                    let y = binomial_pmf(k, t, theta) - comp;
                    let s = sum + y;
                    comp = (s - sum) - y;
                    sum = s;
                }
                let got = binomial_cdf(t, m, theta).unwrap();
                assert!((got - sum).abs() < 1e-13, "theta={theta} m={m}: {got} vs {sum}");
            }
        }
    }

    #[test]
    fn beta_binomial_examples() {
        assert!((beta_binomial_cdf(5, 1.0, 1.0, 2).unwrap() - 0.5).abs() < 1e-15);
        // pmf proportional to k + 1: (m+1)(m+2) / ((t+1)(t+2))
        assert!((beta_binomial_cdf(5, 2.0, 1.0, 2).unwrap() - 2.0 / 7.0).abs() < 1e-15);
        for (t, a, b) in [(1u64, 0.3, 2.0), (17, 2.0, 5.0), (400, 1.0, 3.0)] {
            assert_eq!(beta_binomial_cdf(t, a, b, t).unwrap(), 1.0);
        }
        assert!(beta_binomial_cdf(5, 1.0, 1.0, 6).is_err());
        assert!(beta_binomial_cdf(5, 0.0, 1.0, 2).is_err());
    }

    #[test]
    fn beta_binomial_uniform_case() {
        for t in [1u64, 7, 100, 1001] {
            for m in [0, t / 3, t / 2] {
                let got = beta_binomial_cdf(t, 1.0, 1.0, m).unwrap();
                let want = (m + 1) as f64 / (t + 1) as f64;
                assert!((got - want).abs() < 1e-13);
            }
        }
    }

    proptest! {
        #[test]
        fn nonincreasing_in_theta(t in 1u64..3000, frac in 0.0f64..1.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let m = ((t as f64) * frac) as u64;
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let p_lo = binomial_cdf(t, m, lo).unwrap();
            let p_hi = binomial_cdf(t, m, hi).unwrap();
            prop_assert!(p_hi <= p_lo + 1e-14);
        }

        #[test]
        fn nondecreasing_in_m(t in 1u64..3000, frac in 0.0f64..1.0, theta in 0.0f64..1.0) {
            let m = ((t as f64) * frac) as u64;
            let m2 = (m + 1).min(t);
            prop_assert!(binomial_cdf(t, m, theta).unwrap() <= binomial_cdf(t, m2, theta).unwrap() + 1e-14);
        }

        #[test]
        fn beta_binomial_complement(t in 1u64..3000, frac in 0.0f64..1.0, a in 0.05f64..20.0, b in 0.05f64..20.0) {
            let m = ((t as f64) * frac) as u64;
            let (lower, upper) = beta_binomial_tails(t, a, b, m).unwrap();
            prop_assert!((lower + upper - 1.0).abs() <= 1e-14);
        }
    }
}
