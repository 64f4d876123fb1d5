//! Second-order Edgeworth expansion of the standardized binomial
//! distribution function, including the lattice terms.
//!
//! For `S ~ Binomial(t, θ)` and `G_t(z) = P(S <= tθ + √t σ z)`, the expansion is
//!
//! ```text
//! E_t(z) = Φ(z) − φ(z) [ κ₃/σ³ H₂/(6√t) + κ₄/σ⁴ H₃/(24t) + (κ₃/σ³)² H₅/(72t) ]
//!               − φ(z) [ B₁(ρ)/(√t σ) + κ₃/σ⁴ H₃ B₁(ρ)/(6t) + H₁ B₂(ρ)/(2tσ²) ]
//! ```
//!
//! where `ρ` is the fractional part of the lattice cutoff `tθ + √t σ z`.
//! The first bracket is the usual continuous correction, the second comes
//! from the jumps of the lattice distribution function.

use serde::{Deserialize, Serialize};

use crate::asymptotic::ChangeOfVariable;
use crate::binomial::TailQuery;
use crate::error::{require_odd, Error, Result};
use crate::mixtures::MixtureSpec;
use crate::quadrature::{integrate_with_breaks, QuadOptions};
use crate::special::{bernoulli_b1, bernoulli_b2, normal_cdf, normal_pdf};

/// Half-width of the `z` window scanned by [`sup_edgeworth_error`].
pub const SUP_Z_RANGE: f64 = 6.0;
pub const MIN_SUP_GRID: usize = 1000;

/// Probabilists' Hermite polynomial `H_k`, `k` in `1..=5`.
pub fn hermite(k: u32, z: f64) -> Result<f64> {
    if !(1..=5).contains(&k) {
        return Err(Error::domain("k", f64::from(k), "1..=5"));
    }
    Ok(hermite_poly(k, z))
}

pub(crate) fn hermite_poly(k: u32, z: f64) -> f64 {
    let z2 = z * z;
    match k {
        0 => 1.0,
        1 => z,
        2 => z2 - 1.0,
        3 => z * (z2 - 3.0),
        4 => z2 * (z2 - 6.0) + 3.0,
        5 => z * (z2 * (z2 - 10.0) + 15.0),
        _ => unreachable!("Hermite polynomials above degree 5 are not used"),
    }
}

fn sigma(theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::domain("theta", theta, "(0, 1)"));
    }
    Ok((theta * (1.0 - theta)).sqrt())
}

/// `(κ₃/σ³, κ₄/σ⁴)` of a Bernoulli(θ) summand.
pub fn standardized_cumulants(theta: f64) -> Result<(f64, f64)> {
    let s = sigma(theta)?;
    let var = s * s;
    Ok(((1.0 - 2.0 * theta) / s, (6.0 * theta * theta - 6.0 * theta + 1.0) / var))
}

fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// Fractional part of the lattice cutoff `tθ + √t σ z`, in `[0, 1)`.
pub fn rho_t(theta: f64, z: f64, t: u64) -> Result<f64> {
    let s = sigma(theta)?;
    let tf = t as f64;
    Ok(frac(tf * theta + tf.sqrt() * s * z))
}

/// Components of the expansion at one `(θ, t, z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeworthEval {
    pub z: f64,
    pub theta: f64,
    pub t: u64,
    pub rho: f64,
    /// `Φ(z)`
    pub gaussian: f64,
    /// the three `κ₃`/`κ₄` Hermite terms, sign included
    pub continuous_corrections: f64,
    /// the three `B₁`/`B₂` terms, sign included
    pub lattice_corrections: f64,
    /// the sum of the above; not clamped to `[0, 1]`
    pub total: f64,
}

impl EdgeworthEval {
    /// `E_t(z) − Φ(z)` without the cancellation of subtracting `gaussian` from `total`.
    pub fn corrections(&self) -> f64 {
        self.continuous_corrections + self.lattice_corrections
    }
}

/// Evaluates the expansion with an explicit lattice phase `rho` in `[0, 1]`.
///
/// `rho = 1` gives the left limit at a lattice jump.
pub fn edgeworth_with_rho(theta: f64, t: u64, z: f64, rho: f64) -> Result<EdgeworthEval> {
    if t == 0 {
        return Err(Error::domain("t", 0.0, "positive integers"));
    }
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::domain("rho", rho, "[0, 1]"));
    }
    let s = sigma(theta)?;
    let (k3, k4) = standardized_cumulants(theta)?;
    let tf = t as f64;
    let rt = tf.sqrt();
    let density = normal_pdf(z);
    let (h1, h2, h3, h5) = (hermite_poly(1, z), hermite_poly(2, z), hermite_poly(3, z), hermite_poly(5, z));
    let (b1, b2) = (bernoulli_b1(rho), bernoulli_b2(rho));

    let continuous = -density * (k3 * h2 / (6.0 * rt) + k4 * h3 / (24.0 * tf) + k3 * k3 * h5 / (72.0 * tf));
    // κ₃/σ⁴ = (κ₃/σ³) / σ
    let lattice = -density * (b1 / (rt * s) + (k3 / s) * h3 * b1 / (6.0 * tf) + h1 * b2 / (2.0 * tf * s * s));
    let gaussian = normal_cdf(z);
    Ok(EdgeworthEval {
        z,
        theta,
        t,
        rho,
        gaussian,
        continuous_corrections: continuous,
        lattice_corrections: lattice,
        total: gaussian + continuous + lattice,
    })
}

/// The expansion `E_t(z)` for `Binomial(t, θ)`.
pub fn edgeworth_cdf(theta: f64, t: u64, z: f64) -> Result<EdgeworthEval> {
    let rho = rho_t(theta, z, t)?;
    edgeworth_with_rho(theta, t, z, rho)
}

/// `G_t(z) = P(S <= tθ + √t σ z)`, the distribution the expansion approximates.
pub fn standardized_binomial_cdf(theta: f64, t: u64, z: f64) -> Result<f64> {
    let s = sigma(theta)?;
    let tf = t as f64;
    let cutoff = (tf * theta + tf.sqrt() * s * z).floor();
    Ok(if cutoff < 0.0 {
        0.0
    } else if cutoff >= tf {
        1.0
    } else {
        TailQuery::new(t, cutoff as u64, theta)?.cdf()
    })
}

/// `E_t(z) − Φ(z)` for odd `t` under the median substitution `z = z(θ; t)`.
///
/// There `κ₃/σ³ = 2z/√t`, `κ₄/σ⁴ = 4z²/t − 2`, `1/σ² = 4(z² + t)/t` and the
/// lattice phase is `1/2`, so `B₁` vanishes and `B₂ = −1/12`.
pub fn phi_t_median(z: f64, t: u64) -> Result<f64> {
    require_odd(t)?;
    let tf = t as f64;
    let z2 = z * z;
    let bracket = -(z / (3.0 * tf)) * hermite_poly(2, z) + (1.0 / (12.0 * tf)) * (1.0 - 2.0 * z2 / tf) * hermite_poly(3, z)
        - (4.0 * z2 / (72.0 * tf * tf)) * hermite_poly(5, z)
        + ((z2 + tf) / (6.0 * tf * tf)) * hermite_poly(1, z);
    Ok(normal_pdf(z) * bracket)
}

/// `sup_z |G_t(z) − E_t(z)|` over `|z| <= 6`.
///
/// The sup is taken over a uniform grid of `grid_size` points plus both
/// one-sided limits at every lattice jump of `G_t` inside the window; the
/// left limits use the phase limit `ρ → 1`.
pub fn sup_edgeworth_error(theta: f64, t: u64, grid_size: usize) -> Result<f64> {
    if grid_size < MIN_SUP_GRID {
        return Err(Error::domain("grid_size", grid_size as f64, ">= 1000"));
    }
    let s = sigma(theta)?;
    let tf = t as f64;
    let scale = tf.sqrt() * s;

    let mut sup: f64 = 0.0;
    for i in 0..grid_size {
        let z = -SUP_Z_RANGE + 2.0 * SUP_Z_RANGE * i as f64 / (grid_size - 1) as f64;
        let gap = standardized_binomial_cdf(theta, t, z)? - edgeworth_cdf(theta, t, z)?.total;
        sup = sup.max(gap.abs());
    }

    let k_lo = (tf * theta - SUP_Z_RANGE * scale).ceil().max(0.0) as u64;
    let k_hi = (tf * theta + SUP_Z_RANGE * scale).floor().min(tf) as u64;
    let mut below = if k_lo == 0 {
        0.0
    } else {
        TailQuery::new(t, k_lo - 1, theta)?.cdf()
    };
    for k in k_lo..=k_hi {
        let z = (k as f64 - tf * theta) / scale;
        let at = TailQuery::new(t, k, theta)?.cdf();
        let right = at - edgeworth_with_rho(theta, t, z, 0.0)?.total;
        let left = below - edgeworth_with_rho(theta, t, z, 1.0)?.total;
        sup = sup.max(right.abs()).max(left.abs());
        below = at;
    }
    Ok(sup)
}

/// `∫ t φ_t(z(θ; t)) dF(θ)` with `φ_t` from [`phi_t_median`].
pub fn lemma3_integral(spec: &MixtureSpec, t: u64) -> Result<f64> {
    require_odd(t)?;
    if !spec.twice_differentiable() {
        return Err(Error::NonSmoothMixture("higher-order term integral"));
    }
    let cov = ChangeOfVariable::new(t)?;
    let tf = t as f64;
    let integrand = |theta: f64| {
        let z = cov.z(theta).expect("quadrature nodes are interior");
        let phi = phi_t_median(z, t).expect("t checked odd");
        tf * phi * spec.density(theta).unwrap_or(0.0)
    };
    let opts = QuadOptions {
        abs_tol: 1e-13,
        rel_tol: 0.0,
        max_panels: 4000,
    };
    Ok(integrate_with_breaks(integrand, 0.0, 1.0, &[0.5], opts)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_examples() {
        assert_eq!(hermite(2, 1.0).unwrap(), 0.0);
        assert_eq!(hermite(5, 0.0).unwrap(), 0.0);
        assert_eq!(hermite(4, 2.0).unwrap(), -5.0);
        assert!(hermite(0, 1.0).is_err());
        assert!(hermite(6, 1.0).is_err());
    }

    #[test]
    fn hermite_recurrence() {
        for i in 0..=80 {
            let z = -4.0 + 0.1 * i as f64;
            for k in 1..=4u32 {
                let lhs = hermite_poly(k + 1, z);
                let rhs = z * hermite_poly(k, z) - f64::from(k) * hermite_poly(k - 1, z);
                assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0), "k={k} z={z}");
            }
        }
    }

    #[test]
    fn derivative_chain() {
        // d/dz [φ H_k] = −φ H_{k+1}
        let h = 1e-5;
        for i in 0..=80 {
            let z = -4.0 + 0.1 * i as f64;
            for k in 1..=4u32 {
                let g = |x: f64| normal_pdf(x) * hermite_poly(k, x);
                let fd = (g(z + h) - g(z - h)) / (2.0 * h);
                let exact = -normal_pdf(z) * hermite_poly(k + 1, z);
                assert!((fd - exact).abs() < 1e-8, "k={k} z={z}: {fd} vs {exact}");
            }
        }
    }

    #[test]
    fn cumulant_examples() {
        let (a, b) = standardized_cumulants(0.5).unwrap();
        assert_eq!(a, 0.0);
        assert!((b + 2.0).abs() < 1e-15);
        let (a, b) = standardized_cumulants(0.2).unwrap();
        assert!((a - 1.5).abs() < 1e-14);
        assert!((b - 0.25).abs() < 1e-14);
        for theta in [0.05, 0.3, 0.45] {
            let (a1, b1) = standardized_cumulants(theta).unwrap();
            let (a2, b2) = standardized_cumulants(1.0 - theta).unwrap();
            assert!((a1 + a2).abs() < 1e-14 && (b1 - b2).abs() < 1e-12);
        }
        assert!(standardized_cumulants(0.0).is_err());
        assert!(standardized_cumulants(1.0).is_err());
    }

    #[test]
    fn rho_examples() {
        // integer cutoff tθ = 3.5 + ... : here the cutoff itself is 3.5
        assert_eq!(rho_t(0.5, 0.0, 7).unwrap(), 0.5);
        assert_eq!(rho_t(0.25, 0.0, 4).unwrap(), 0.0);
        assert!((rho_t(0.25, 0.0, 2).unwrap() - 0.5).abs() < 1e-15);
        for t in [3u64, 11, 101, 1001] {
            let cov = ChangeOfVariable::new(t).unwrap();
            for i in 0..=20 {
                let z = -5.0 + 0.5 * i as f64;
                let theta = cov.theta(z);
                assert!((rho_t(theta, z, t).unwrap() - 0.5).abs() < 1e-9, "t={t} z={z}");
            }
        }
    }

    #[test]
    fn breakdown_sums_and_symmetry() {
        let e = edgeworth_cdf(0.5, 10_001, 0.0).unwrap();
        assert_eq!(e.gaussian, 0.5);
        assert!((e.total - (e.gaussian + e.continuous_corrections + e.lattice_corrections)).abs() <= 1e-15);
        // at θ = 1/2 the κ₃ terms vanish; what is left of the continuous part is the κ₄ term
        for z in [-2.0, -0.3, 0.0, 0.7, 3.0] {
            let e = edgeworth_with_rho(0.5, 101, z, 0.3).unwrap();
            let k4_only = -normal_pdf(z) * (-2.0) * hermite_poly(3, z) / (24.0 * 101.0);
            assert!((e.continuous_corrections - k4_only).abs() < 1e-16);
        }
    }

    #[test]
    fn bernoulli_b2_at_half() {
        assert!((bernoulli_b2(0.5) - (0.25 - 0.5 + 1.0 / 6.0)).abs() < 1e-16);
        assert!((bernoulli_b2(0.5) + 1.0 / 12.0).abs() < 1e-16);
    }

    #[test]
    fn close_to_binomial_at_moderate_t() {
        let (theta, t, z) = (0.3, 201u64, 0.7);
        let e = edgeworth_cdf(theta, t, z).unwrap();
        let truth = standardized_binomial_cdf(theta, t, z).unwrap();
        assert!((e.total - truth).abs() <= 5e-4, "{} vs {truth}", e.total);
    }

    #[test]
    fn phi_median_examples() {
        for t in [1u64, 3, 101] {
            assert_eq!(phi_t_median(0.0, t).unwrap(), 0.0);
        }
        assert!(phi_t_median(1.0, 101).unwrap().abs() <= 0.05);
        assert!(phi_t_median(1.0, 100).is_err());
    }

    #[test]
    fn phi_median_matches_full_assembly() {
        // full expansion with the median substitutions written out by hand
        for t in [11u64, 101, 1001] {
            let tf = t as f64;
            for i in 0..=100 {
                let z = -5.0 + 0.1 * i as f64;
                let k3 = 2.0 * z / tf.sqrt();
                let k4 = 4.0 * z * z / tf - 2.0;
                let inv_var = 4.0 * (z * z + tf) / tf;
                let cont = k3 * hermite_poly(2, z) / (6.0 * tf.sqrt())
                    + k4 * hermite_poly(3, z) / (24.0 * tf)
                    + k3 * k3 * hermite_poly(5, z) / (72.0 * tf);
                let latt = hermite_poly(1, z) * bernoulli_b2(0.5) * inv_var / (2.0 * tf);
                let oracle = -normal_pdf(z) * (cont + latt);
                let got = phi_t_median(z, t).unwrap();
                assert!((got - oracle).abs() < 1e-15, "t={t} z={z}");
            }
        }
    }

    #[test]
    fn sup_error_small_case() {
        let v = sup_edgeworth_error(0.5, 3, 1000).unwrap();
        assert!(v.is_finite() && v > 0.0);
        assert!(sup_edgeworth_error(0.5, 3, 10).is_err());
    }
}
