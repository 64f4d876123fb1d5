//! Special functions shared by the mixture, binomial and expansion code.
//!
//! The binomial point mass uses Loader's saddle-point form (`stirlerr` plus
//! `bd0`), which keeps full relative precision for large counts where the
//! naive `exp(lgamma ...)` route loses digits to cancellation.

use std::f64::consts::PI;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

const CF_MAX_ITER: usize = 10_000;
const CF_EPS: f64 = 1e-16;
const CF_TINY: f64 = 1e-300;

/// Standard normal density.
pub fn normal_pdf(z: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Standard normal distribution function, accurate in both tails.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function `I_x(a, b)` for `a, b > 0`, `x` in `[0, 1]`.
pub fn beta_reg(a: f64, b: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && b > 0.0);
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = a * x.ln() + b * (-x).ln_1p() - ln_beta(a, b);
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

/// `ln(n!) - ((n + 1/2) ln n - n + ln sqrt(2 pi))`, the Stirling series error.
pub(crate) fn stirlerr(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;

    if n <= 15.0 {
        if n == 0.0 {
            return 0.0;
        }
        // n! is exact in f64 up to 22!, so only the log rounds.
        let ln_fact = if n.fract() == 0.0 {
            (1..=n as u64).map(|k| k as f64).product::<f64>().ln()
        } else {
            ln_gamma(n + 1.0)
        };
        return ln_fact - (n + 0.5) * n.ln() + n - LN_SQRT_2PI;
    }
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// Deviance term `x ln(x / np) + np - x`, evaluated without cancellation.
pub(crate) fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let mut v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / f64::from(2 * j + 1);
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / np).ln() + np - x
    }
}

/// Binomial probability mass `P(Binomial(n, p) = k)`.
pub fn binomial_pmf(k: u64, n: u64, p: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    let q = 1.0 - p;
    if p == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if q == 0.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    let nf = n as f64;
    if k == 0 {
        return (nf * (-p).ln_1p()).exp();
    }
    if k == n {
        return (nf * p.ln()).exp();
    }
    let kf = k as f64;
    let lc = stirlerr(nf) - stirlerr(kf) - stirlerr(nf - kf) - bd0(kf, nf * p) - bd0(nf - kf, nf * q);
    let lf = (2.0 * PI).ln() + kf.ln() + (-kf / nf).ln_1p();
    (lc - 0.5 * lf).exp()
}

/// Lower tail `P(Binomial(n, p) <= m)` through the incomplete beta continued
/// fraction, with the prefactor written as a binomial point mass.
pub(crate) fn binomial_lower_tail_cf(m: u64, n: u64, p: f64) -> f64 {
    debug_assert!(m < n);
    // P(S <= m) = I_{1-p}(n - m, m + 1)
    let a = (n - m) as f64;
    let b = (m + 1) as f64;
    let x = 1.0 - p;
    let pmf_m = binomial_pmf(m, n, p);
    if x < (a + 1.0) / (a + b + 2.0) {
        // front / a = pmf(m) * p
        pmf_m * p * beta_cf(a, b, x)
    } else {
        // front / b = pmf(m) * p * (n - m) / (m + 1)
        1.0 - pmf_m * p * a / b * beta_cf(b, a, p)
    }
}

/// Bernoulli polynomial `B_1`.
pub fn bernoulli_b1(rho: f64) -> f64 {
    rho - 0.5
}

/// Bernoulli polynomial `B_2`.
pub fn bernoulli_b2(rho: f64) -> f64 {
    rho * rho - rho + 1.0 / 6.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ln_factorial_direct(n: u64) -> f64 {
        (1..=n).map(|k| (k as f64).ln()).sum()
    }

    #[test]
    fn normal_cdf_reference_points() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
        // upper tail must not cancel to zero
        assert!((normal_cdf(-10.0) / 7.619_853_024_160_527e-24 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stirlerr_matches_log_factorial() {
        for n in [1u64, 2, 7, 15, 16, 30, 36, 79, 81, 400, 501, 2000] {
            let direct = ln_factorial_direct(n) - (n as f64 + 0.5) * (n as f64).ln() + n as f64 - LN_SQRT_2PI;
            let tol = 1e-13 * (n as f64).max(1.0);
            assert!((stirlerr(n as f64) - direct).abs() < tol, "n = {n}");
        }
    }

    #[test]
    fn pmf_small_cases_exact() {
        assert!((binomial_pmf(2, 5, 0.5) - 10.0 / 32.0).abs() < 2e-15);
        assert!((binomial_pmf(0, 5, 0.9) - 1e-5).abs() < 1e-19);
        assert_eq!(binomial_pmf(6, 5, 0.3), 0.0);
        assert_eq!(binomial_pmf(3, 3, 1.0), 1.0);
    }

    #[test]
    fn pmf_sums_to_one_large_n() {
        let n = 20_000;
        let total: f64 = (0..=n).map(|k| binomial_pmf(k, n, 0.37)).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn beta_reg_closed_forms() {
        // Beta(3, 2): F(x) = 4x^3 - 3x^4
        for x in [0.1, 0.25, 0.5, 0.8, 0.99] {
            let exact = 4.0 * x * x * x - 3.0 * x * x * x * x;
            assert!((beta_reg(3.0, 2.0, x) - exact).abs() < 1e-14);
        }
        assert!((beta_reg(0.5, 0.5, 0.5) - 0.5).abs() < 1e-14);
        assert_eq!(beta_reg(2.0, 2.0, 0.0), 0.0);
        assert_eq!(beta_reg(2.0, 2.0, 1.0), 1.0);
    }

    #[test]
    fn bernoulli_polynomials() {
        assert_eq!(bernoulli_b1(0.5), 0.0);
        assert!((bernoulli_b2(0.5) + 1.0 / 12.0).abs() < 1e-16);
        assert!((bernoulli_b2(0.0) - 1.0 / 6.0).abs() < 1e-16);
    }
}
