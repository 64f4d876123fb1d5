//! First-order asymptotics of the miss probability and the change of
//! variables behind it.
//!
//! With `z(θ; t) = √t (1/2 − θ) / √(θ(1 − θ))` the binomial miss event turns
//! into a standardized ordinate. Its inverse `θ(z; t)` is smooth, decreasing,
//! and equal to `1/2` at `z = 0`; expanding `F(θ(z; t))` around `z = 0`
//! leaves a remainder `R(z; t)` with `t R(z; t) → F''(1/2) z² / 8`.

use crate::error::{require_odd, Error, Result};
use crate::mixtures::MixtureSpec;

/// `θ(z; t)` and its first two derivatives in `z` for a fixed vote count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChangeOfVariable {
    t: u64,
}

impl ChangeOfVariable {
    pub fn new(t: u64) -> Result<Self> {
        if t == 0 {
            return Err(Error::domain("t", 0.0, "positive integers"));
        }
        Ok(Self { t })
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    /// `1/2 − (z/2)/√(z² + t)`, evaluated without cancellation in the tails.
    pub fn theta(&self, z: f64) -> f64 {
        let t = self.t as f64;
        let s2 = z * z + t;
        let s = s2.sqrt();
        // 1/2 - z/(2s) = t / (2 s (s + z)) for z >= 0
        if z >= 0.0 {
            t / (2.0 * (s2 + s * z))
        } else {
            1.0 - t / (2.0 * (s2 - s * z))
        }
    }

    pub fn theta_prime(&self, z: f64) -> f64 {
        let t = self.t as f64;
        -(t / 2.0) / (t + z * z).powf(1.5)
    }

    pub fn theta_second(&self, z: f64) -> f64 {
        let t = self.t as f64;
        3.0 * t * z / (2.0 * (t + z * z).powf(2.5))
    }

    pub fn z(&self, theta: f64) -> Result<f64> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::domain("theta", theta, "(0, 1)"));
        }
        let t = self.t as f64;
        Ok(t.sqrt() * (0.5 - theta) / (theta * (1.0 - theta)).sqrt())
    }
}

pub fn z_of_theta(theta: f64, t: u64) -> Result<f64> {
    ChangeOfVariable::new(t)?.z(theta)
}

pub fn theta_of_z(z: f64, t: u64) -> Result<f64> {
    if !z.is_finite() {
        return Err(Error::domain("z", z, "finite reals"));
    }
    Ok(ChangeOfVariable::new(t)?.theta(z))
}

/// `(θ'(z; t), θ''(z; t))`.
pub fn theta_derivatives(z: f64, t: u64) -> Result<(f64, f64)> {
    let cov = ChangeOfVariable::new(t)?;
    Ok((cov.theta_prime(z), cov.theta_second(z)))
}

fn require_smooth(spec: &MixtureSpec, what: &'static str) -> Result<()> {
    if spec.twice_differentiable() {
        Ok(())
    } else {
        Err(Error::NonSmoothMixture(what))
    }
}

/// `R(z; t) = F(θ(z; t)) − F(1/2) − F'(1/2) θ'(0; t) z`.
pub fn taylor_remainder(spec: &MixtureSpec, z: f64, t: u64) -> Result<f64> {
    require_smooth(spec, "Taylor remainder")?;
    let cov = ChangeOfVariable::new(t)?;
    let theta = theta_of_z(z, t)?;
    let slope = spec.density(0.5)? * cov.theta_prime(0.0);
    Ok(spec.cdf(theta)? - spec.cdf(0.5)? - slope * z)
}

/// `max t |R(z; t)| / (1 + |z|³)` for one `t` over `z_grid`.
pub fn envelope_ratio(spec: &MixtureSpec, z_grid: &[f64], t: u64) -> Result<f64> {
    let tf = t as f64;
    z_grid.iter().try_fold(0.0_f64, |acc, &z| {
        let r = taylor_remainder(spec, z, t)?;
        Ok(acc.max(tf * r.abs() / (1.0 + z.abs().powi(3))))
    })
}

/// Largest value of `t |R(z; t)| / (1 + |z|³)` over the grid and all `t` in `t_list`.
pub fn lemma4_bound_check(spec: &MixtureSpec, z_grid: &[f64], t_list: &[u64]) -> Result<f64> {
    require_smooth(spec, "remainder envelope")?;
    t_list.iter().try_fold(0.0_f64, |acc, &t| {
        envelope_ratio(spec, z_grid, t).map(|r| acc.max(r))
    })
}

/// `F(1/2) + F''(1/2) / (8t)`.
pub fn majority_complement_asymptotic(spec: &MixtureSpec, t: u64) -> Result<f64> {
    require_odd(t)?;
    require_smooth(spec, "asymptotic miss probability")?;
    Ok(spec.cdf(0.5)? + spec.cdf_second_derivative(0.5)? / (8.0 * t as f64))
}
