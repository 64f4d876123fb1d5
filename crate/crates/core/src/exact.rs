//! Exact miss probability of the running majority vote.
//!
//! For an exchangeable sequence with mixture `F`,
//! `1 - E[M_t] = ∫ P(Binomial(t, θ) <= (t-1)/2) dF(θ)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotic::majority_complement_asymptotic;
use crate::binomial::{beta_binomial_cdf, TailQuery};
use crate::error::{require_odd, Error, Result};
use crate::mixtures::{Family, MixtureSpec};
use crate::quadrature::{integrate_with_breaks, QuadOptions};

/// Quadrature settings for the exact path.
pub fn exact_quad_options() -> QuadOptions {
    QuadOptions {
        abs_tol: 1e-11,
        rel_tol: 0.0,
        max_panels: 4000,
    }
}

/// `1 - E[M_t]` for odd `t`.
///
/// Beta mixtures use the beta-binomial closed form, point mass mixtures a
/// finite weighted sum, everything else adaptive quadrature against the density.
pub fn majority_complement_exact(spec: &MixtureSpec, t: u64) -> Result<f64> {
    require_odd(t)?;
    let m = (t - 1) / 2;
    match spec.family() {
        Family::Beta { alpha, beta } => beta_binomial_cdf(t, *alpha, *beta, m),
        Family::PointMassMix { atoms } => {
            let mut total = 0.0;
            for a in atoms {
                total += a.weight * TailQuery::new(t, m, a.location)?.cdf();
            }
            Ok(total.clamp(0.0, 1.0))
        }
        Family::PolynomialCdf { .. } | Family::EmpiricalSmoothed { .. } => majority_complement_quadrature(spec, t),
    }
}

/// Quadrature route for `1 - E[M_t]`, available for every family with a density.
pub fn majority_complement_quadrature(spec: &MixtureSpec, t: u64) -> Result<f64> {
    require_odd(t)?;
    if matches!(spec.family(), Family::PointMassMix { .. }) {
        return Err(Error::NonSmoothMixture("quadrature against the density"));
    }
    let m = (t - 1) / 2;
    let integrand = |theta: f64| {
        let tail = TailQuery { t, m, theta }.cdf();
        // density is finite at interior nodes for every smooth family
        tail * spec.density(theta).unwrap_or(0.0)
    };
    let r = integrate_with_breaks(integrand, 0.0, 1.0, &[0.5], exact_quad_options())?;
    Ok(r.value.clamp(0.0, 1.0))
}

/// `t * (1 - E[M_t] - F(1/2))`, which tends to `F''(1/2) / 8`.
pub fn scaled_residual(spec: &MixtureSpec, t: u64) -> Result<f64> {
    require_odd(t)?;
    if !spec.twice_differentiable() {
        return Err(Error::NonSmoothMixture("scaled residual"));
    }
    let exact = majority_complement_exact(spec, t)?;
    Ok(t as f64 * (exact - spec.cdf(0.5)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveEntry {
    pub t: u64,
    pub exact: f64,
    pub asymptotic: f64,
    pub scaled_residual: f64,
}

/// Exact and first-order values of the miss probability over a set of odd `t`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MajorityCurve {
    pub entries: Vec<CurveEntry>,
}

impl MajorityCurve {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Builds a curve over `t_values`; duplicates are dropped and entries come
/// out sorted by `t`. Each `t` is evaluated independently, so the result
/// does not depend on scheduling.
pub fn build_curve(spec: &MixtureSpec, t_values: &[u64]) -> Result<MajorityCurve> {
    let mut ts = t_values.to_vec();
    ts.sort_unstable();
    ts.dedup();
    let entries = ts
        .par_iter()
        .map(|&t| curve_entry(spec, t).map_err(|e| e.at_t(t)))
        .collect::<Result<Vec<_>>>()?;
    Ok(MajorityCurve { entries })
}

fn curve_entry(spec: &MixtureSpec, t: u64) -> Result<CurveEntry> {
    require_odd(t)?;
    let exact = majority_complement_exact(spec, t)?;
    let asymptotic = majority_complement_asymptotic(spec, t)?;
    let at_half = spec.cdf(0.5)?;
    Ok(CurveEntry {
        t,
        exact,
        asymptotic,
        scaled_residual: t as f64 * (exact - at_half),
    })
}
