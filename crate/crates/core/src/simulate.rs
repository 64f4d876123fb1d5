//! Monte Carlo draws of exchangeable vote sequences: first `Θ ~ F`, then
//! `t` conditionally independent Bernoulli(`Θ`) votes.
//!
//! Replicate `r` draws from its own ChaCha8 stream `(seed, r)`, so results do
//! not depend on how replicates are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::VoteMatrix;
use crate::error::{require_odd, Error, Result};
use crate::mixtures::MixtureSpec;

/// How the number of votes for class 1 is drawn in one replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountMethod {
    /// One binomial draw.
    #[default]
    Binomial,
    /// The sum of `t` Bernoulli draws.
    Bernoulli,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    /// Estimate of `1 − E[M_t]`.
    pub estimate: f64,
    pub std_error: f64,
    pub n_reps: u64,
    pub seed: u64,
    pub t: u64,
}

fn replicate_rng(seed: u64, r: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r);
    rng
}

fn draw_count<R: Rng + ?Sized>(spec: &MixtureSpec, t: u64, method: CountMethod, rng: &mut R) -> u64 {
    let theta = spec.sample_theta(rng);
    match method {
        CountMethod::Binomial => Binomial::new(t, theta)
            .expect("sampled theta lies in [0,1]")
            .sample(rng),
        CountMethod::Bernoulli => (0..t).filter(|_| rng.random_bool(theta)).count() as u64,
    }
}

/// Class-1 vote counts for `n_reps` replicates of `t` votes each.
pub fn simulate_counts(spec: &MixtureSpec, t: u64, n_reps: u64, seed: u64, method: CountMethod) -> Result<Vec<u64>> {
    if t == 0 {
        return Err(Error::domain("t", 0.0, "positive integers"));
    }
    Ok((0..n_reps)
        .into_par_iter()
        .map(|r| draw_count(spec, t, method, &mut replicate_rng(seed, r)))
        .collect())
}

pub fn simulate_majority(spec: &MixtureSpec, t: u64, n_reps: u64, seed: u64) -> Result<SimResult> {
    simulate_majority_with(spec, t, n_reps, seed, CountMethod::default())
}

/// Fraction of replicates in which at most `(t − 1)/2` of the `t` votes are 1.
pub fn simulate_majority_with(
    spec: &MixtureSpec,
    t: u64,
    n_reps: u64,
    seed: u64,
    method: CountMethod,
) -> Result<SimResult> {
    require_odd(t)?;
    if n_reps == 0 {
        return Err(Error::domain("n_reps", 0.0, "positive integers"));
    }
    let m = (t - 1) / 2;
    let misses: u64 = (0..n_reps)
        .into_par_iter()
        .map(|r| u64::from(draw_count(spec, t, method, &mut replicate_rng(seed, r)) <= m))
        .sum();
    let estimate = misses as f64 / n_reps as f64;
    Ok(SimResult {
        estimate,
        std_error: (estimate * (1.0 - estimate) / n_reps as f64).sqrt(),
        n_reps,
        seed,
        t,
    })
}

/// A vote matrix with `n_points` rows labelled `label`, each row `t_votes`
/// votes from one draw `Θ ~ spec`.
pub fn simulate_votes(spec: &MixtureSpec, label: u8, n_points: usize, t_votes: usize, seed: u64) -> Result<VoteMatrix> {
    let rows: Vec<Vec<u8>> = (0..n_points as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(seed, r);
            let theta = spec.sample_theta(&mut rng);
            (0..t_votes).map(|_| u8::from(rng.random_bool(theta))).collect()
        })
        .collect();
    VoteMatrix::new(vec![label; n_points], rows)
}
