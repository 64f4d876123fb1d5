//! De Finetti mixture distributions on `[0, 1]`.
//!
//! A [`MixtureSpec`] is the law of the latent success probability `Θ` of an
//! exchangeable Bernoulli sequence. Besides the distribution function it
//! exposes the density and the second derivative of the distribution
//! function, which drive the `1/t` coefficient of the majority-vote error.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{beta_reg, ln_beta, normal_cdf, normal_pdf};

/// Tolerance used when checking that a family is a proper distribution function.
const VALIDITY_TOL: f64 = 1e-12;
const VALIDATION_GRID: usize = 1001;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub weight: f64,
}

/// Wire form of a mixture; the `family` tag and field names are part of the
/// CLI contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Family {
    Beta { alpha: f64, beta: f64 },
    /// `F(x) = sum_k coefficients[k] * x^k` on `[0, 1]`.
    PolynomialCdf { coefficients: Vec<f64> },
    PointMassMix { atoms: Vec<Atom> },
    /// Average of Gaussian kernels truncated to `[0, 1]`.
    EmpiricalSmoothed { centers: Vec<f64>, bandwidth: f64 },
}

#[derive(Debug, Clone, PartialEq)]
struct KernelNorm {
    lower: f64,
    mass: f64,
}

/// A validated mixture distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Family", into = "Family")]
pub struct MixtureSpec {
    family: Family,
    kernels: Vec<KernelNorm>,
    ln_beta: f64,
}

impl From<MixtureSpec> for Family {
    fn from(spec: MixtureSpec) -> Self {
        spec.family
    }
}

impl TryFrom<Family> for MixtureSpec {
    type Error = Error;

    fn try_from(family: Family) -> Result<Self> {
        MixtureSpec::new(family)
    }
}

impl MixtureSpec {
    pub fn new(family: Family) -> Result<Self> {
        let mut spec = MixtureSpec {
            family,
            kernels: Vec::new(),
            ln_beta: 0.0,
        };
        match &mut spec.family {
            Family::Beta { alpha, beta } => {
                if !(alpha.is_finite() && *alpha > 0.0 && beta.is_finite() && *beta > 0.0) {
                    return Err(Error::InvalidSpec(format!(
                        "beta parameters must be positive and finite, got alpha={alpha}, beta={beta}"
                    )));
                }
                spec.ln_beta = ln_beta(*alpha, *beta);
            }
            Family::PolynomialCdf { coefficients } => {
                if coefficients.is_empty() || coefficients.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidSpec(
                        "polynomial coefficients must be a non-empty list of finite numbers".into(),
                    ));
                }
                let at0 = coefficients[0];
                let at1: f64 = coefficients.iter().sum();
                if at0.abs() > VALIDITY_TOL || (at1 - 1.0).abs() > VALIDITY_TOL {
                    return Err(Error::InvalidSpec(format!(
                        "polynomial CDF must satisfy F(0)=0 and F(1)=1, got F(0)={at0}, F(1)={at1}"
                    )));
                }
                for i in 0..VALIDATION_GRID {
                    let x = i as f64 / (VALIDATION_GRID - 1) as f64;
                    let d = horner_derivative(coefficients, x);
                    if d < -VALIDITY_TOL {
                        return Err(Error::InvalidSpec(format!(
                            "polynomial CDF has negative density {d} at x={x}"
                        )));
                    }
                }
            }
            Family::PointMassMix { atoms } => {
                if atoms.is_empty() {
                    return Err(Error::InvalidSpec("point mass mixture needs at least one atom".into()));
                }
                for a in atoms.iter() {
                    if !(0.0..=1.0).contains(&a.location) || !(a.weight.is_finite() && a.weight > 0.0) {
                        return Err(Error::InvalidSpec(format!(
                            "atom ({}, {}) needs a location in [0,1] and a positive weight",
                            a.location, a.weight
                        )));
                    }
                }
                let total: f64 = atoms.iter().map(|a| a.weight).sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidSpec(format!("atom weights sum to {total}, not 1")));
                }
            }
            Family::EmpiricalSmoothed { centers, bandwidth } => {
                if centers.is_empty() || centers.iter().any(|c| !(0.0..=1.0).contains(c)) {
                    return Err(Error::InvalidSpec(
                        "smoothed mixture needs at least one center, all inside [0,1]".into(),
                    ));
                }
                if !(bandwidth.is_finite() && *bandwidth > 0.0) {
                    return Err(Error::InvalidSpec(format!("bandwidth must be positive, got {bandwidth}")));
                }
                centers.sort_by(f64::total_cmp);
                let h = *bandwidth;
                spec.kernels = centers
                    .iter()
                    .map(|&c| {
                        let lower = normal_cdf(-c / h);
                        KernelNorm {
                            lower,
                            mass: normal_cdf((1.0 - c) / h) - lower,
                        }
                    })
                    .collect();
            }
        }
        Ok(spec)
    }

    pub fn beta(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(Family::Beta { alpha, beta })
    }

    pub fn polynomial_cdf(coefficients: Vec<f64>) -> Result<Self> {
        Self::new(Family::PolynomialCdf { coefficients })
    }

    pub fn point_mass_mix(atoms: &[(f64, f64)]) -> Result<Self> {
        Self::new(Family::PointMassMix {
            atoms: atoms
                .iter()
                .map(|&(location, weight)| Atom { location, weight })
                .collect(),
        })
    }

    pub fn empirical_smoothed(centers: Vec<f64>, bandwidth: f64) -> Result<Self> {
        Self::new(Family::EmpiricalSmoothed { centers, bandwidth })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        crate::error::decode_json(text)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// Whether `F''` exists and is continuous on all of `[0, 1]`.
    pub fn twice_differentiable(&self) -> bool {
        match &self.family {
            // x^(a-1) is C^1 at 0 only for a = 1 or a >= 2
            Family::Beta { alpha, beta } => {
                let smooth = |p: f64| p == 1.0 || p >= 2.0;
                smooth(*alpha) && smooth(*beta)
            }
            Family::PolynomialCdf { .. } | Family::EmpiricalSmoothed { .. } => true,
            Family::PointMassMix { .. } => false,
        }
    }

    /// Distribution function `F(x)`.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        check_unit(x)?;
        let v = match &self.family {
            Family::Beta { alpha, beta } => beta_reg(*alpha, *beta, x),
            Family::PolynomialCdf { coefficients } => horner(coefficients, x),
            Family::PointMassMix { atoms } => atoms
                .iter()
                .filter(|a| a.location <= x)
                .map(|a| a.weight)
                .sum(),
            Family::EmpiricalSmoothed { centers, bandwidth } => {
                let sum: f64 = centers
                    .iter()
                    .zip(&self.kernels)
                    .map(|(&c, k)| (normal_cdf((x - c) / bandwidth) - k.lower) / k.mass)
                    .sum();
                sum / centers.len() as f64
            }
        };
        Ok(v.clamp(0.0, 1.0))
    }

    /// Density `F'(x)`.
    pub fn density(&self, x: f64) -> Result<f64> {
        check_unit(x)?;
        match &self.family {
            Family::Beta { alpha, beta } => Ok(self.beta_density(*alpha, *beta, x)),
            Family::PolynomialCdf { coefficients } => Ok(horner_derivative(coefficients, x).max(0.0)),
            Family::PointMassMix { .. } => Err(Error::NonSmoothMixture("density")),
            Family::EmpiricalSmoothed { centers, bandwidth } => {
                let h = *bandwidth;
                let sum: f64 = centers
                    .iter()
                    .zip(&self.kernels)
                    .map(|(&c, k)| normal_pdf((x - c) / h) / (h * k.mass))
                    .sum();
                Ok(sum / centers.len() as f64)
            }
        }
    }

    /// Second derivative `F''(x)` on the open interval.
    pub fn cdf_second_derivative(&self, x: f64) -> Result<f64> {
        if !self.twice_differentiable() {
            return Err(Error::NonSmoothMixture("second derivative"));
        }
        if !(x > 0.0 && x < 1.0) {
            return Err(Error::domain("x", x, "(0, 1)"));
        }
        match &self.family {
            Family::Beta { alpha, beta } => {
                let f = self.beta_density(*alpha, *beta, x);
                let left = if *alpha == 1.0 { 0.0 } else { (alpha - 1.0) / x };
                let right = if *beta == 1.0 { 0.0 } else { (beta - 1.0) / (1.0 - x) };
                Ok(f * (left - right))
            }
            Family::PolynomialCdf { coefficients } => {
                let second: Vec<f64> = coefficients
                    .iter()
                    .enumerate()
                    .skip(2)
                    .map(|(k, c)| (k * (k - 1)) as f64 * c)
                    .collect();
                Ok(horner(&second, x))
            }
            Family::EmpiricalSmoothed { centers, bandwidth } => {
                let h = *bandwidth;
                let sum: f64 = centers
                    .iter()
                    .zip(&self.kernels)
                    .map(|(&c, k)| {
                        let u = (x - c) / h;
                        -u * normal_pdf(u) / (h * h * k.mass)
                    })
                    .sum();
                Ok(sum / centers.len() as f64)
            }
            Family::PointMassMix { .. } => unreachable!("rejected by the smoothness check"),
        }
    }

    /// Draws `Θ ~ F`. All randomness comes from the caller's generator.
    pub fn sample_theta<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.family {
            Family::Beta { alpha, beta } => rand_distr::Beta::new(*alpha, *beta)
                .expect("parameters validated on construction")
                .sample(rng),
            Family::PolynomialCdf { coefficients } => {
                let u: f64 = rng.random();
                invert_monotone(|x| horner(coefficients, x), u)
            }
            Family::PointMassMix { atoms } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for a in atoms {
                    acc += a.weight;
                    if u < acc {
                        return a.location;
                    }
                }
                atoms[atoms.len() - 1].location
            }
            Family::EmpiricalSmoothed { centers, bandwidth } => {
                let c = centers[rng.random_range(0..centers.len())];
                let kernel = Normal::new(c, *bandwidth).expect("bandwidth validated on construction");
                loop {
                    let x = kernel.sample(rng);
                    if (0.0..=1.0).contains(&x) {
                        return x;
                    }
                }
            }
        }
    }

    /// Law of `1 - Θ`.
    pub fn reflect(&self) -> MixtureSpec {
        let family = match &self.family {
            Family::Beta { alpha, beta } => Family::Beta {
                alpha: *beta,
                beta: *alpha,
            },
            Family::PolynomialCdf { coefficients } => Family::PolynomialCdf {
                coefficients: reflect_polynomial(coefficients),
            },
            Family::PointMassMix { atoms } => Family::PointMassMix {
                atoms: atoms
                    .iter()
                    .map(|a| Atom {
                        location: 1.0 - a.location,
                        weight: a.weight,
                    })
                    .collect(),
            },
            Family::EmpiricalSmoothed { centers, bandwidth } => Family::EmpiricalSmoothed {
                centers: centers.iter().map(|c| 1.0 - c).collect(),
                bandwidth: *bandwidth,
            },
        };
        MixtureSpec::new(family).expect("reflection of a valid mixture is valid")
    }

    /// Checks that the distribution function is nondecreasing and inside
    /// `[0, 1]` on a uniform grid with `points` nodes.
    pub fn check_grid(&self, points: usize) -> Result<()> {
        let mut prev = 0.0;
        for i in 0..points {
            let x = i as f64 / (points.max(2) - 1) as f64;
            let v = self.cdf(x)?;
            if !(0.0..=1.0).contains(&v) || v + VALIDITY_TOL < prev {
                return Err(Error::InvalidSpec(format!("distribution function not monotone at x={x}")));
            }
            prev = v;
        }
        Ok(())
    }

    fn beta_density(&self, alpha: f64, beta: f64, x: f64) -> f64 {
        let log_term = |p: f64, ln_v: f64| if p == 1.0 { 0.0 } else { (p - 1.0) * ln_v };
        (log_term(alpha, x.ln()) + log_term(beta, (-x).ln_1p()) - self.ln_beta).exp()
    }
}

fn check_unit(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::domain("x", x, "[0, 1]"))
    }
}

fn horner(coefficients: &[f64], x: f64) -> f64 {
    coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn horner_derivative(coefficients: &[f64], x: f64) -> f64 {
    coefficients
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (k, c)| acc * x + k as f64 * c)
}

// Coefficients of 1 - F(1 - x).
fn reflect_polynomial(coefficients: &[f64]) -> Vec<f64> {
    let n = coefficients.len();
    let mut shifted = vec![0.0; n];
    for (k, &c) in coefficients.iter().enumerate() {
        let mut binom = 1.0;
        for (j, slot) in shifted.iter_mut().enumerate().take(k + 1) {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            *slot += c * binom * sign;
            binom = binom * (k - j) as f64 / (j + 1) as f64;
        }
    }
    let mut out: Vec<f64> = shifted.iter().map(|d| -d).collect();
    out[0] += 1.0;
    out
}

fn invert_monotone<F: Fn(f64) -> f64>(f: F, u: f64) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
