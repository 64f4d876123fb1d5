//! Browser bindings for the interactive demo page in `www/`.
//!
//! Every export returns a JSON string for the page to plot, or an error
//! message. The functions are plain Rust as well, so they are tested natively.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use majvote::edgeworth::{edgeworth_cdf, standardized_binomial_cdf, sup_edgeworth_error};
use majvote::ensemble::{c_coefficient, err_exact, err_star, minimal_t_with, EnsembleSpec, SizeMode, SizeOptions};
use majvote::exact::majority_complement_exact;
use majvote::special::normal_cdf;
use majvote::MixtureSpec;

const MAX_T: u32 = 20_001;
const CURVE_POINTS: usize = 240;
const Z_POINTS: usize = 601;

fn msg(e: majvote::Error) -> String {
    format!("{} ({})", e, e.category())
}

/// Odd sizes from 1 to `t_max`: all of them when there are few, otherwise
/// roughly log-spaced.
fn odd_grid(t_max: u64) -> Vec<u64> {
    if t_max <= 2 * CURVE_POINTS as u64 {
        return (1..=t_max).step_by(2).collect();
    }
    let top = (t_max as f64).ln();
    let mut ts: Vec<u64> = (0..CURVE_POINTS)
        .map(|k| {
            let t = (top * k as f64 / (CURVE_POINTS - 1) as f64).exp().round() as u64;
            (t | 1).min(t_max)
        })
        .collect();
    ts.dedup();
    ts
}

fn check_t(t: u32) -> Result<u64, String> {
    if t % 2 == 0 || t > MAX_T {
        return Err(format!("t must be odd and at most {MAX_T}, got {t}"));
    }
    Ok(u64::from(t))
}

/// Miss probability `1 - E[M_t]` of a Beta(alpha, beta) mixture for odd `t <= t_max`,
/// with the first-order approximation when the mixture is smooth enough.
#[wasm_bindgen]
pub fn majority_curve(alpha: f64, beta: f64, t_max: u32) -> Result<String, String> {
    let t_max = check_t(t_max)?;
    let spec = MixtureSpec::beta(alpha, beta).map_err(msg)?;
    let ts = odd_grid(t_max);
    let exact = ts
        .iter()
        .map(|&t| majority_complement_exact(&spec, t))
        .collect::<majvote::Result<Vec<f64>>>()
        .map_err(msg)?;
    let limit = spec.cdf(0.5).map_err(msg)?;
    let coefficient = spec.cdf_second_derivative(0.5).ok().map(|d| d / 8.0);
    let asymptotic: Value = match coefficient {
        Some(c) => ts.iter().map(|&t| limit + c / t as f64).collect::<Vec<_>>().into(),
        None => Value::Null,
    };
    Ok(json!({
        "t": ts,
        "exact": exact,
        "asymptotic": asymptotic,
        "limit": limit,
        "coefficient": coefficient,
    })
    .to_string())
}

/// Standardized binomial distribution function next to its normal and
/// second-order lattice Edgeworth approximations on `z` in `[-4, 4]`.
#[wasm_bindgen]
pub fn edgeworth_vs_binomial(theta: f64, t: u32) -> Result<String, String> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(format!("theta must lie in (0, 1), got {theta}"));
    }
    if t == 0 || t > MAX_T {
        return Err(format!("t must be between 1 and {MAX_T}, got {t}"));
    }
    let t = u64::from(t);
    let zs: Vec<f64> = (0..Z_POINTS)
        .map(|i| -4.0 + 8.0 * i as f64 / (Z_POINTS - 1) as f64)
        .collect();
    let mut binomial = Vec::with_capacity(Z_POINTS);
    let mut edgeworth = Vec::with_capacity(Z_POINTS);
    for &z in &zs {
        binomial.push(standardized_binomial_cdf(theta, t, z).map_err(msg)?);
        edgeworth.push(edgeworth_cdf(theta, t, z).map_err(msg)?.total);
    }
    let normal: Vec<f64> = zs.iter().map(|&z| normal_cdf(z)).collect();
    let sup = sup_edgeworth_error(theta, t, 2001).map_err(msg)?;
    Ok(json!({
        "z": zs,
        "binomial": binomial,
        "normal": normal,
        "edgeworth": edgeworth,
        "sup_error": sup,
    })
    .to_string())
}

/// Test error of a two-class ensemble with Beta vote mixtures, and the
/// smallest odd size within `epsilon` of its limit by both sizing rules.
#[wasm_bindgen]
pub fn ensemble_size(
    pi0: f64,
    g_alpha: f64,
    g_beta: f64,
    g_tilde_alpha: f64,
    g_tilde_beta: f64,
    epsilon: f64,
) -> Result<String, String> {
    let spec = EnsembleSpec::new(
        pi0,
        1.0 - pi0,
        MixtureSpec::beta(g_alpha, g_beta).map_err(msg)?,
        MixtureSpec::beta(g_tilde_alpha, g_tilde_beta).map_err(msg)?,
    )
    .map_err(msg)?;
    let opts = SizeOptions { t_max: u64::from(MAX_T) };
    let star = err_star(&spec).map_err(msg)?;
    let c = c_coefficient(&spec).ok();
    let asymptotic = minimal_t_with(&spec, epsilon, SizeMode::Asymptotic, &opts).ok().map(|r| r.t);
    let scan = minimal_t_with(&spec, epsilon, SizeMode::ExactScan, &opts);
    let (exact_t, scan_error) = match &scan {
        Ok(r) => (Some(r.t), None),
        Err(e) => (None, Some(msg(e.clone()))),
    };
    let horizon = exact_t.into_iter().chain(asymptotic).max().unwrap_or(101).clamp(101, u64::from(MAX_T) / 3);
    let ts = odd_grid((3 * horizon) | 1);
    let err = ts
        .iter()
        .map(|&t| err_exact(&spec, t))
        .collect::<majvote::Result<Vec<f64>>>()
        .map_err(msg)?;
    Ok(json!({
        "err_star": star,
        "c": c,
        "t_asymptotic": asymptotic,
        "t_exact": exact_t,
        "scan_error": scan_error,
        "t": ts,
        "err": err,
    })
    .to_string())
}
