use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} = {value} is outside its domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    /// Majority vote is only defined without ties, so every vote count must be odd.
    #[error("t must be odd to avoid ties, got {0}")]
    EvenT(u64),

    #[error("{0} is not available for a mixture without a continuous second derivative")]
    NonSmoothMixture(&'static str),

    #[error("invalid mixture specification: {0}")]
    InvalidSpec(String),

    #[error("exact scan reached t_max = {t_max} without meeting the tolerance (best t = {best_t}, |err_t - err*| = {best_gap:e})")]
    TMaxExceeded { t_max: u64, best_t: u64, best_gap: f64 },

    #[error("cannot estimate mixture: {0}")]
    Estimation(String),

    #[error("quadrature did not reach tolerance {tolerance:e} (estimated error {estimate:e})")]
    Quadrature { tolerance: f64, estimate: f64 },

    #[error("at t = {t}: {source}")]
    AtT {
        t: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed input: {0}")]
    Parse(String),
}

impl Error {
    /// Stable, machine-readable category used by the CLI diagnostic stream.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Domain { .. } => "domain-error",
            Error::EvenT(_) => "odd-t-required",
            Error::NonSmoothMixture(_) => "non-smooth-mixture",
            Error::InvalidSpec(_) => "invalid-spec",
            Error::TMaxExceeded { .. } => "t-max-exceeded",
            Error::Estimation(_) => "estimation-error",
            Error::Quadrature { .. } => "quadrature-failure",
            Error::AtT { source, .. } => source.category(),
            Error::Parse(_) => "parse-error",
        }
    }

    pub(crate) fn domain(what: &'static str, value: f64, domain: &'static str) -> Self {
        Error::Domain {
            what,
            value,
            domain,
        }
    }

    /// Wraps the error with the vote count it occurred at.
    pub fn at_t(self, t: u64) -> Self {
        Error::AtT {
            t,
            source: Box::new(self),
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Rejects even vote counts (and zero).
/// Parses JSON text, then decodes it; syntax errors are `Parse`, shape and
/// validation errors `InvalidSpec`.
pub(crate) fn decode_json<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    serde_json::from_value(value).map_err(|e| {
        let msg = e.to_string();
        let prefix = "invalid mixture specification: ";
        Error::InvalidSpec(msg.strip_prefix(prefix).unwrap_or(&msg).to_string())
    })
}

pub fn require_odd(t: u64) -> Result<()> {
    if t % 2 == 1 {
        Ok(())
    } else {
        Err(Error::EvenT(t))
    }
}
