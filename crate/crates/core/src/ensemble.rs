//! Two-class ensembles: test error as a function of the number of votes,
//! ensemble sizing, and mixture estimates from observed vote matrices.
//!
//! `g` is the law of the per-point probability of a wrong vote (a vote for
//! class 1) on class-0 points, `g_tilde` the law of the probability of a
//! correct vote on class-1 points. Then
//!
//! ```text
//! err_t = π₀ (1 − ∫ P(Bin(t, θ) <= (t−1)/2) dG) + π₁ ∫ P(Bin(t, θ) <= (t−1)/2) dG̃
//!       = err* + c/t + o(1/t)
//! err*  = π₀ (1 − G(1/2)) + π₁ G̃(1/2)
//! c     = (π₁ G̃''(1/2) − π₀ G''(1/2)) / 8
//! ```

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{require_odd, Error, Result};
use crate::exact::majority_complement_exact;
use crate::mixtures::MixtureSpec;

const PRIOR_TOL: f64 = 1e-12;
/// `|c|` below this is treated as zero by the first-order sizing rule.
pub const NEGLIGIBLE_C: f64 = 1e-12;
pub const DEFAULT_T_MAX: u64 = 100_000;
/// Relative slack when rounding `|c|/ε` up, so that ratios that are integers
/// up to rounding are not pushed to the next odd number.
const CEIL_SLACK: f64 = 1e-9;
const SCAN_BATCH: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawEnsembleSpec", into = "RawEnsembleSpec")]
pub struct EnsembleSpec {
    pi0: f64,
    pi1: f64,
    g: MixtureSpec,
    g_tilde: MixtureSpec,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEnsembleSpec {
    pi0: f64,
    pi1: f64,
    g: MixtureSpec,
    g_tilde: MixtureSpec,
}

impl TryFrom<RawEnsembleSpec> for EnsembleSpec {
    type Error = Error;

    fn try_from(raw: RawEnsembleSpec) -> Result<Self> {
        EnsembleSpec::new(raw.pi0, raw.pi1, raw.g, raw.g_tilde)
    }
}

impl From<EnsembleSpec> for RawEnsembleSpec {
    fn from(s: EnsembleSpec) -> Self {
        RawEnsembleSpec {
            pi0: s.pi0,
            pi1: s.pi1,
            g: s.g,
            g_tilde: s.g_tilde,
        }
    }
}

impl EnsembleSpec {
    pub fn new(pi0: f64, pi1: f64, g: MixtureSpec, g_tilde: MixtureSpec) -> Result<Self> {
        for p in [pi0, pi1] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidSpec(format!("class priors must lie in [0,1], got {p}")));
            }
        }
        if (pi0 + pi1 - 1.0).abs() > PRIOR_TOL {
            return Err(Error::InvalidSpec(format!(
                "class priors must sum to 1, got {pi0} + {pi1}"
            )));
        }
        Ok(Self { pi0, pi1, g, g_tilde })
    }

    pub fn pi0(&self) -> f64 {
        self.pi0
    }

    pub fn pi1(&self) -> f64 {
        self.pi1
    }

    pub fn g(&self) -> &MixtureSpec {
        &self.g
    }

    pub fn g_tilde(&self) -> &MixtureSpec {
        &self.g_tilde
    }

    pub fn from_json(text: &str) -> Result<Self> {
        crate::error::decode_json(text)
    }
}

/// `err_t` for odd `t`. A class with zero prior is not evaluated.
pub fn err_exact(spec: &EnsembleSpec, t: u64) -> Result<f64> {
    require_odd(t)?;
    let mut err = 0.0;
    if spec.pi0 > 0.0 {
        err += spec.pi0 * (1.0 - majority_complement_exact(&spec.g, t)?);
    }
    if spec.pi1 > 0.0 {
        err += spec.pi1 * majority_complement_exact(&spec.g_tilde, t)?;
    }
    Ok(err.clamp(0.0, 1.0))
}

/// `err* = π₀ (1 − G(1/2)) + π₁ G̃(1/2)`, the limit of `err_t`.
///
/// Only the distribution functions at `1/2` enter, so no smoothness is required.
pub fn err_star(spec: &EnsembleSpec) -> Result<f64> {
    Ok(spec.pi0 * (1.0 - spec.g.cdf(0.5)?) + spec.pi1 * spec.g_tilde.cdf(0.5)?)
}

/// `c = (π₁ G̃''(1/2) − π₀ G''(1/2)) / 8`. A class with zero prior is not evaluated.
pub fn c_coefficient(spec: &EnsembleSpec) -> Result<f64> {
    let mut c = 0.0;
    if spec.pi1 > 0.0 {
        c += spec.pi1 * spec.g_tilde.cdf_second_derivative(0.5)?;
    }
    if spec.pi0 > 0.0 {
        c -= spec.pi0 * spec.g.cdf_second_derivative(0.5)?;
    }
    Ok(c / 8.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeMode {
    ExactScan,
    Asymptotic,
}

impl FromStr for SizeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact_scan" => Ok(SizeMode::ExactScan),
            "asymptotic" => Ok(SizeMode::Asymptotic),
            other => Err(Error::Parse(format!(
                "unknown size mode '{other}', expected exact_scan or asymptotic"
            ))),
        }
    }
}

impl fmt::Display for SizeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SizeMode::ExactScan => "exact_scan",
            SizeMode::Asymptotic => "asymptotic",
        })
    }
}

/// Which condition decided the returned ensemble size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Binding {
    /// `|c| / t <= ε` at the smallest odd `t`.
    FirstOrderBound,
    /// `|c|` is negligible, so the first-order rule says nothing and `t = 1` is returned.
    NegligibleCoefficient,
    /// The first odd `t` inside the tolerance also passed the stability window.
    Tolerance,
    /// Some smaller `t` entered the tolerance but left it again within the window.
    StabilityWindow,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizeOptions {
    /// Largest `t` the exact scan tries as a candidate.
    pub t_max: u64,
}

impl Default for SizeOptions {
    fn default() -> Self {
        Self { t_max: DEFAULT_T_MAX }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeResult {
    pub t: u64,
    pub mode: SizeMode,
    pub binding: Binding,
    pub epsilon: f64,
    pub err_star: f64,
    /// `c` when it is defined for the mixtures; the exact scan does not need it.
    pub c: Option<f64>,
    /// `|err_t − err*|` at the returned `t`, exact scan only.
    pub gap: Option<f64>,
}

pub fn minimal_t(spec: &EnsembleSpec, epsilon: f64, mode: SizeMode) -> Result<SizeResult> {
    minimal_t_with(spec, epsilon, mode, &SizeOptions::default())
}

/// Smallest odd `t` meeting `|err_t − err*| <= ε`, either from the first-order
/// term (`|c|/t <= ε`) or by scanning the exact error with a window of three
/// consecutive odd sizes.
pub fn minimal_t_with(spec: &EnsembleSpec, epsilon: f64, mode: SizeMode, opts: &SizeOptions) -> Result<SizeResult> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::domain("epsilon", epsilon, "(0, inf)"));
    }
    let star = err_star(spec)?;
    match mode {
        SizeMode::Asymptotic => {
            let c = c_coefficient(spec)?;
            let (t, binding) = if c.abs() < NEGLIGIBLE_C {
                (1, Binding::NegligibleCoefficient)
            } else {
                (odd_ceiling(c.abs() / epsilon)?, Binding::FirstOrderBound)
            };
            Ok(SizeResult {
                t,
                mode,
                binding,
                epsilon,
                err_star: star,
                c: Some(c),
                gap: None,
            })
        }
        SizeMode::ExactScan => {
            let (t, binding, gap) = exact_scan(spec, star, epsilon, opts.t_max)?;
            Ok(SizeResult {
                t,
                mode,
                binding,
                epsilon,
                err_star: star,
                c: c_coefficient(spec).ok(),
                gap: Some(gap),
            })
        }
    }
}

fn odd_ceiling(ratio: f64) -> Result<u64> {
    if !(ratio.is_finite() && ratio < 1e15) {
        return Err(Error::domain("|c| / epsilon", ratio, "below 1e15"));
    }
    let t = (ratio * (1.0 - CEIL_SLACK)).ceil().max(1.0) as u64;
    Ok(if t % 2 == 0 { t + 1 } else { t })
}

fn exact_scan(spec: &EnsembleSpec, star: f64, epsilon: f64, t_max: u64) -> Result<(u64, Binding, f64)> {
    // gaps[i] belongs to t = 2i + 1
    let mut gaps: Vec<f64> = Vec::new();
    let mut best: Option<(u64, f64)> = None;
    let mut entered_early = false;
    let mut next = 0usize;
    loop {
        // each batch is evaluated in parallel and consumed in order
        let start = gaps.len() as u64;
        let batch: Vec<u64> = (start..start + SCAN_BATCH as u64).map(|i| 2 * i + 1).collect();
        let fresh = batch
            .par_iter()
            .map(|&t| err_exact(spec, t).map(|e| (e - star).abs()).map_err(|e| e.at_t(t)))
            .collect::<Result<Vec<_>>>()?;
        gaps.extend(fresh);

        while next + 2 < gaps.len() {
            let t = 2 * next as u64 + 1;
            if t > t_max {
                let (best_t, best_gap) = best.unwrap_or((1, gaps[0]));
                return Err(Error::TMaxExceeded { t_max, best_t, best_gap });
            }
            let gap = gaps[next];
            if best.is_none_or(|(_, g)| gap < g) {
                best = Some((t, gap));
            }
            if gap <= epsilon {
                if gaps[next + 1] <= epsilon && gaps[next + 2] <= epsilon {
                    let binding = if entered_early {
                        Binding::StabilityWindow
                    } else {
                        Binding::Tolerance
                    };
                    return Ok((t, binding, gap));
                }
                entered_early = true;
            }
            next += 1;
        }
    }
}

/// Binary votes for `n_points` test points, each with a class label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoteMatrix {
    labels: Vec<u8>,
    n_votes: usize,
    votes: Vec<u8>,
}

impl VoteMatrix {
    pub fn new(labels: Vec<u8>, rows: Vec<Vec<u8>>) -> Result<Self> {
        if labels.len() != rows.len() {
            return Err(Error::Parse(format!(
                "{} labels for {} vote rows",
                labels.len(),
                rows.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::Parse(format!("labels must be 0 or 1, got {bad}")));
        }
        let n_votes = rows.first().map_or(0, Vec::len);
        let mut votes = Vec::with_capacity(n_votes * rows.len());
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n_votes {
                return Err(Error::Parse(format!(
                    "row {} has {} votes, expected {n_votes}",
                    i + 1,
                    row.len()
                )));
            }
            if let Some(bad) = row.iter().find(|&&v| v > 1) {
                return Err(Error::Parse(format!("votes must be 0 or 1, got {bad} in row {}", i + 1)));
            }
            votes.extend(row);
        }
        Ok(Self { labels, n_votes, votes })
    }

    pub fn n_points(&self) -> usize {
        self.labels.len()
    }

    pub fn n_votes(&self) -> usize {
        self.n_votes
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.votes[i * self.n_votes..(i + 1) * self.n_votes]
    }

    /// Per-point share of votes for class 1.
    pub fn row_means(&self) -> Vec<f64> {
        (0..self.n_points())
            .map(|i| {
                let ones: u64 = self.row(i).iter().map(|&v| u64::from(v)).sum();
                ones as f64 / self.n_votes as f64
            })
            .collect()
    }

    /// Rows of `self` followed by the rows of `other`.
    pub fn stack(mut self, other: &VoteMatrix) -> Result<Self> {
        if self.n_points() > 0 && other.n_points() > 0 && self.n_votes != other.n_votes {
            return Err(Error::Parse(format!(
                "cannot stack {} votes per row onto {}",
                other.n_votes, self.n_votes
            )));
        }
        if self.n_points() == 0 {
            self.n_votes = other.n_votes;
        }
        self.labels.extend_from_slice(&other.labels);
        self.votes.extend_from_slice(&other.votes);
        Ok(self)
    }

    /// Reads CSV with header `label,v1,...,vT`.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.get(0).map(str::trim) != Some("label") {
            return Err(Error::Parse("first column of a vote matrix must be 'label'".into()));
        }
        let mut labels = Vec::new();
        let mut rows = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let record = record?;
            let mut cells = record.iter().map(|c| parse_bit(c, i + 2));
            labels.push(cells.next().ok_or_else(|| Error::Parse(format!("empty line {}", i + 2)))??);
            rows.push(cells.collect::<Result<Vec<_>>>()?);
        }
        Self::new(labels, rows)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec!["label".to_string()];
        header.extend((1..=self.n_votes).map(|j| format!("v{j}")));
        wtr.write_record(&header)?;
        for i in 0..self.n_points() {
            let mut rec = vec![self.labels[i].to_string()];
            rec.extend(self.row(i).iter().map(u8::to_string));
            wtr.write_record(&rec)?;
        }
        wtr.flush().map_err(|e| Error::Parse(e.to_string()))?;
        Ok(())
    }
}

fn parse_bit(cell: &str, line: usize) -> Result<u8> {
    match cell.trim() {
        "0" => Ok(0),
        "1" => Ok(1),
        other => Err(Error::Parse(format!("expected 0 or 1 on line {line}, got '{other}'"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateOptions {
    pub min_points_per_class: usize,
    pub min_votes: usize,
    pub bandwidth_floor: f64,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self {
            min_points_per_class: 30,
            min_votes: 10,
            bandwidth_floor: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassEstimate {
    pub mixture: MixtureSpec,
    pub n_points: usize,
    pub bandwidth: f64,
    /// Set when the rule-of-thumb bandwidth fell below the floor, e.g. for identical row means.
    pub bandwidth_floored: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureEstimate {
    pub g: ClassEstimate,
    pub g_tilde: ClassEstimate,
}

/// Normal-reference bandwidth `1.06 σ̂ n^(-1/5)`.
pub fn silverman_bandwidth(sample: &[f64]) -> f64 {
    let n = sample.len() as f64;
    if sample.len() < 2 {
        return 0.0;
    }
    let mean = sample.iter().sum::<f64>() / n;
    let var = sample.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    1.06 * var.sqrt() * n.powf(-0.2)
}

fn class_name(label: u8) -> &'static str {
    if label == 0 {
        "class 0 (g)"
    } else {
        "class 1 (g_tilde)"
    }
}

/// Smoothed empirical law of the row means of the points labelled `label`.
pub fn estimate_class(votes: &VoteMatrix, label: u8, opts: &EstimateOptions) -> Result<ClassEstimate> {
    if votes.n_votes() < opts.min_votes {
        return Err(Error::Estimation(format!(
            "need at least {} votes per point, got {}",
            opts.min_votes,
            votes.n_votes()
        )));
    }
    let means = votes.row_means();
    let mut centers: Vec<f64> = means
        .iter()
        .zip(votes.labels())
        .filter(|(_, &l)| l == label)
        .map(|(&m, _)| m)
        .collect();
    if centers.is_empty() {
        return Err(Error::Estimation(format!("{} has no points", class_name(label))));
    }
    if centers.len() < opts.min_points_per_class {
        return Err(Error::Estimation(format!(
            "{} has {} points, need at least {}",
            class_name(label),
            centers.len(),
            opts.min_points_per_class
        )));
    }
    // sorted first so the bandwidth does not depend on row order
    centers.sort_by(f64::total_cmp);
    let rule = silverman_bandwidth(&centers);
    let bandwidth_floored = !(rule >= opts.bandwidth_floor);
    let bandwidth = if bandwidth_floored { opts.bandwidth_floor } else { rule };
    let n_points = centers.len();
    Ok(ClassEstimate {
        mixture: MixtureSpec::empirical_smoothed(centers, bandwidth)?,
        n_points,
        bandwidth,
        bandwidth_floored,
    })
}

/// Estimates `(g, g_tilde)` from labelled votes; both classes must be present.
pub fn estimate_mixtures(votes: &VoteMatrix, opts: &EstimateOptions) -> Result<MixtureEstimate> {
    Ok(MixtureEstimate {
        g: estimate_class(votes, 0, opts)?,
        g_tilde: estimate_class(votes, 1, opts)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binomial::beta_binomial_cdf;

    fn beta(a: f64, b: f64) -> MixtureSpec {
        MixtureSpec::beta(a, b).unwrap()
    }

    fn skewed() -> EnsembleSpec {
        EnsembleSpec::new(0.5, 0.5, beta(1.0, 3.0), beta(3.0, 1.0)).unwrap()
    }

    #[test]
    fn spec_validation_and_json() {
        assert!(EnsembleSpec::new(0.5, 0.6, beta(1.0, 1.0), beta(1.0, 1.0)).is_err());
        assert!(EnsembleSpec::new(-0.1, 1.1, beta(1.0, 1.0), beta(1.0, 1.0)).is_err());
        let json = r#"{"pi0": 0.5, "pi1": 0.5,
            "g": {"family": "beta", "alpha": 1, "beta": 3},
            "g_tilde": {"family": "beta", "alpha": 3, "beta": 1}}"#;
        let s = EnsembleSpec::from_json(json).unwrap();
        assert_eq!(s, skewed());
        let back: EnsembleSpec = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
        let bad = r#"{"pi0": 0.3, "pi1": 0.3, "g": {"family": "beta", "alpha": 1, "beta": 1},
            "g_tilde": {"family": "beta", "alpha": 1, "beta": 1}}"#;
        assert_eq!(EnsembleSpec::from_json(bad).unwrap_err().category(), "invalid-spec");
        assert_eq!(EnsembleSpec::from_json("{\"pi0\": ").unwrap_err().category(), "parse-error");
    }

    #[test]
    fn err_exact_examples() {
        let perfect = EnsembleSpec::new(
            1.0,
            0.0,
            MixtureSpec::point_mass_mix(&[(0.0, 1.0)]).unwrap(),
            beta(1.0, 1.0),
        )
        .unwrap();
        for t in [1, 3, 101] {
            assert_eq!(err_exact(&perfect, t).unwrap(), 0.0);
        }

        let want = 0.5 * (1.0 - beta_binomial_cdf(5, 1.0, 3.0, 2).unwrap()) + 0.5 * beta_binomial_cdf(5, 3.0, 1.0, 2).unwrap();
        assert!((err_exact(&skewed(), 5).unwrap() - want).abs() < 1e-15);
        // the two halves are reflections of each other
        assert!((1.0 - beta_binomial_cdf(5, 1.0, 3.0, 2).unwrap() - beta_binomial_cdf(5, 3.0, 1.0, 2).unwrap()).abs() < 1e-15);

        let flat = EnsembleSpec::new(0.5, 0.5, beta(1.0, 1.0), beta(1.0, 1.0)).unwrap();
        for t in [1, 7, 501] {
            assert!((err_exact(&flat, t).unwrap() - 0.5).abs() < 1e-14);
        }
        assert_eq!(err_exact(&flat, 2).unwrap_err().category(), "odd-t-required");
    }

    #[test]
    fn err_star_examples() {
        assert!((err_star(&skewed()).unwrap() - 0.125).abs() < 1e-15);
        let one = EnsembleSpec::new(1.0, 0.0, beta(1.0, 1.0), beta(2.0, 2.0)).unwrap();
        assert!((err_star(&one).unwrap() - 0.5).abs() < 1e-15);
        let separated = EnsembleSpec::new(
            0.4,
            0.6,
            MixtureSpec::point_mass_mix(&[(0.1, 0.5), (0.3, 0.5)]).unwrap(),
            MixtureSpec::point_mass_mix(&[(0.8, 1.0)]).unwrap(),
        )
        .unwrap();
        assert_eq!(err_star(&separated).unwrap(), 0.0);
    }

    #[test]
    fn c_examples() {
        assert!((c_coefficient(&skewed()).unwrap() - 0.375).abs() < 1e-12);
        let flat = EnsembleSpec::new(0.5, 0.5, beta(1.0, 1.0), beta(1.0, 1.0)).unwrap();
        assert_eq!(c_coefficient(&flat).unwrap(), 0.0);
        // with π₀ = 0 the class-0 mixture does not enter, smooth or not
        let pm = MixtureSpec::point_mass_mix(&[(0.2, 1.0)]).unwrap();
        let only1 = EnsembleSpec::new(0.0, 1.0, pm.clone(), beta(3.0, 1.0)).unwrap();
        assert!((c_coefficient(&only1).unwrap() - 3.0 / 8.0).abs() < 1e-12);
        let rough = EnsembleSpec::new(0.5, 0.5, pm, beta(3.0, 1.0)).unwrap();
        assert_eq!(c_coefficient(&rough).unwrap_err().category(), "non-smooth-mixture");
    }

    #[test]
    fn sizing_examples() {
        let flat = EnsembleSpec::new(0.5, 0.5, beta(1.0, 1.0), beta(1.0, 1.0)).unwrap();
        for eps in [1e-6, 0.1, 3.0] {
            let r = minimal_t(&flat, eps, SizeMode::Asymptotic).unwrap();
            assert_eq!(r.t, 1);
            assert_eq!(r.binding, Binding::NegligibleCoefficient);
        }
        let r = minimal_t(&skewed(), 1e-3, SizeMode::Asymptotic).unwrap();
        assert_eq!(r.t, 375);
        assert_eq!(r.binding, Binding::FirstOrderBound);
        assert_eq!(minimal_t(&skewed(), 0.375 / 374.5, SizeMode::Asymptotic).unwrap().t, 375);
        assert_eq!(minimal_t(&skewed(), 0.375 / 376.0, SizeMode::Asymptotic).unwrap().t, 377);

        let r = minimal_t(&skewed(), 1e-3, SizeMode::ExactScan).unwrap();
        assert_eq!(r.t % 2, 1);
        assert!((201..=601).contains(&r.t), "t* = {}", r.t);
        for t in [r.t, r.t + 2, r.t + 4] {
            assert!((err_exact(&skewed(), t).unwrap() - 0.125).abs() <= 1e-3);
        }
        assert!((err_exact(&skewed(), r.t - 2).unwrap() - 0.125).abs() > 1e-3);

        assert_eq!(
            minimal_t(&skewed(), 0.0, SizeMode::Asymptotic).unwrap_err().category(),
            "domain-error"
        );
    }

    #[test]
    fn scan_exhaustion_reports_best() {
        let err = minimal_t_with(&skewed(), 1e-4, SizeMode::ExactScan, &SizeOptions { t_max: 99 }).unwrap_err();
        match err {
            Error::TMaxExceeded { t_max, best_t, best_gap } => {
                assert_eq!(t_max, 99);
                assert_eq!(best_t, 99);
                assert!(best_gap > 1e-4);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn slope_of_error_against_inverse_t() {
        let spec = skewed();
        let star = err_star(&spec).unwrap();
        let ts: Vec<f64> = (0..7).map(|i| 501.0 + 250.0 * i as f64).collect();
        let ys: Vec<f64> = ts.iter().map(|&t| err_exact(&spec, t as u64).unwrap() - star).collect();
        let xs: Vec<f64> = ts.iter().map(|t| 1.0 / t).collect();
        let n = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let slope = sxy / sxx;
        assert!((slope / 0.375 - 1.0).abs() < 0.03, "slope {slope}");
    }

    #[test]
    fn reflection_swaps_classes() {
        let specs = [
            EnsembleSpec::new(0.3, 0.7, beta(1.0, 3.0), beta(2.0, 1.0)).unwrap(),
            EnsembleSpec::new(
                0.6,
                0.4,
                MixtureSpec::polynomial_cdf(vec![0.0, 0.5, 0.5]).unwrap(),
                MixtureSpec::point_mass_mix(&[(0.7, 0.5), (0.45, 0.5)]).unwrap(),
            )
            .unwrap(),
        ];
        for s in &specs {
            let swapped = EnsembleSpec::new(s.pi1, s.pi0, s.g_tilde.reflect(), s.g.reflect()).unwrap();
            for t in [1u64, 5, 41, 301] {
                let a = err_exact(s, t).unwrap();
                let b = err_exact(&swapped, t).unwrap();
                assert!((a - b).abs() < 1e-10, "t={t}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn asymptotic_size_nonincreasing_in_epsilon() {
        let mut prev = u64::MAX;
        for i in 0..200 {
            let eps = 1e-5 * 1.07f64.powi(i);
            let t = minimal_t(&skewed(), eps, SizeMode::Asymptotic).unwrap().t;
            assert!(t <= prev);
            prev = t;
        }
    }

    fn matrix(labels: &[u8], rows: &[&[u8]]) -> VoteMatrix {
        VoteMatrix::new(labels.to_vec(), rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn vote_matrix_csv_roundtrip() {
        let m = matrix(&[0, 1, 0], &[&[0, 1, 1], &[1, 1, 1], &[0, 0, 0]]);
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap().lines().next().unwrap(), "label,v1,v2,v3");
        assert_eq!(VoteMatrix::read_csv(buf.as_slice()).unwrap(), m);
        assert!(VoteMatrix::read_csv("label,v1\n0,2\n".as_bytes()).is_err());
        assert!(VoteMatrix::read_csv("y,v1\n0,1\n".as_bytes()).is_err());
        assert!(VoteMatrix::read_csv("label,v1,v2\n0,1\n".as_bytes()).is_err());
    }

    #[test]
    fn all_zero_votes_give_a_single_center_at_zero() {
        let rows = vec![vec![0u8; 12]; 40];
        let m = VoteMatrix::new(vec![0; 40], rows).unwrap();
        let est = estimate_class(&m, 0, &EstimateOptions::default()).unwrap();
        assert!(est.bandwidth_floored);
        assert_eq!(est.bandwidth, 0.01);
        match est.mixture.family() {
            crate::mixtures::Family::EmpiricalSmoothed { centers, .. } => {
                assert!(centers.iter().all(|&c| c == 0.0));
            }
            other => panic!("unexpected {other:?}"),
        }
        let e = estimate_mixtures(&m, &EstimateOptions::default()).unwrap_err();
        assert_eq!(e.category(), "estimation-error");
        assert!(e.to_string().contains("class 1"));
    }

    #[test]
    fn estimation_floors() {
        let m = VoteMatrix::new(vec![0; 40], vec![vec![1u8; 5]; 40]).unwrap();
        assert!(estimate_class(&m, 0, &EstimateOptions::default()).is_err());
        let m = VoteMatrix::new(vec![0; 10], vec![vec![1u8; 20]; 10]).unwrap();
        assert!(estimate_class(&m, 0, &EstimateOptions::default()).is_err());
    }

    #[test]
    fn estimation_ignores_row_and_column_order() {
        // deterministic pseudo-random pattern
        let n = 60;
        let t = 15;
        let mut state = 12345u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 33) as u32
        };
        let labels: Vec<u8> = (0..n).map(|i| u8::from(i % 2 == 1)).collect();
        let rows: Vec<Vec<u8>> = (0..n).map(|_| (0..t).map(|_| (next() % 2) as u8).collect()).collect();
        let base = estimate_mixtures(
            &VoteMatrix::new(labels.clone(), rows.clone()).unwrap(),
            &EstimateOptions::default(),
        )
        .unwrap();

        let order: Vec<usize> = (0..n).rev().collect();
        let rows_p: Vec<Vec<u8>> = order
            .iter()
            .map(|&i| {
                let mut r = rows[i].clone();
                r.rotate_left(4);
                r.reverse();
                r
            })
            .collect();
        let labels_p: Vec<u8> = order.iter().map(|&i| labels[i]).collect();
        let perm = estimate_mixtures(&VoteMatrix::new(labels_p, rows_p).unwrap(), &EstimateOptions::default()).unwrap();
        assert_eq!(base, perm);
    }
}
