use std::str::FromStr;

use crate::error::CliError;

/// `start:stop:step`, inclusive of `stop` when it is on the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TRange {
    start: u64,
    stop: u64,
    step: u64,
}

impl TRange {
    pub fn values(&self) -> Vec<u64> {
        (self.start..=self.stop).step_by(self.step as usize).collect()
    }
}

impl FromStr for TRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [start, stop, step] = parts[..] else {
            return Err(format!("expected start:stop:step, got '{s}'"));
        };
        let num = |p: &str| p.trim().parse::<u64>().map_err(|_| format!("'{p}' is not a non-negative integer"));
        let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
        if step == 0 {
            return Err("step must be positive".into());
        }
        if start > stop {
            return Err(format!("start {start} is after stop {stop}"));
        }
        Ok(Self { start, stop, step })
    }
}

pub fn parse_list<T: FromStr>(s: &str, what: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            p.trim()
                .parse::<T>()
                .map_err(|_| CliError::Core(majvote::Error::Parse(format!("bad {what} value '{}'", p.trim()))))
        })
        .collect()
}
