//! Depolarization thresholds where the optimal measurement sequence changes.

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use super::maximize::{maximize_with, MaximizeOptions, SearchMode};
use super::search::bisect_log;
use crate::error::{Error, Result};
use crate::noise::NoiseParams;

/// An optimal strength below this (radians) counts as zero. The optimum can
/// approach zero continuously, so an exact-zero test would be fragile.
pub const ZERO_DEADBAND: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ThresholdCriterion {
    /// The best two-step protocol starts with a projective measurement.
    OptimalXi1Zero,
    /// The best three-step protocol makes its second measurement projective.
    OptimalXi2Zero,
    /// A protocol whose steps all certify randomness reaches `bits` in total.
    TotalReaches { bits: f64 },
}

impl ThresholdCriterion {
    pub fn default_steps(&self) -> usize {
        match self {
            ThresholdCriterion::OptimalXi1Zero => 2,
            ThresholdCriterion::OptimalXi2Zero | ThresholdCriterion::TotalReaches { .. } => 3,
        }
    }
}

impl fmt::Display for ThresholdCriterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThresholdCriterion::OptimalXi1Zero => write!(f, "xi1"),
            ThresholdCriterion::OptimalXi2Zero => write!(f, "xi2"),
            ThresholdCriterion::TotalReaches { bits } => write!(f, "bits:{bits}"),
        }
    }
}

impl FromStr for ThresholdCriterion {
    type Err = Error;

    /// `xi1`, `xi2` or `bits:<x>`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "xi1" => Ok(ThresholdCriterion::OptimalXi1Zero),
            "xi2" => Ok(ThresholdCriterion::OptimalXi2Zero),
            other => {
                let bits = other
                    .strip_prefix("bits:")
                    .and_then(|b| b.parse::<f64>().ok())
                    .filter(|b| b.is_finite() && *b > 0.0)
                    .ok_or_else(|| {
                        Error::InvalidArgument(format!(
                            "criterion must be xi1, xi2 or bits:<x> (got {other:?})"
                        ))
                    })?;
                Ok(ThresholdCriterion::TotalReaches { bits })
            }
        }
    }
}

impl Serialize for ThresholdCriterion {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdQuery {
    pub criterion: ThresholdCriterion,
    /// `(p_low, p_high)`.
    pub bracket: (f64, f64),
    pub rel_tol: f64,
    pub steps: usize,
    /// Dephasing weight held fixed during the search.
    pub c: f64,
}

impl ThresholdQuery {
    /// Bracket `[1e-10, 1e-1]`, relative tolerance `1e-3`, `c = 0`.
    pub fn new(criterion: ThresholdCriterion) -> Self {
        ThresholdQuery {
            criterion,
            bracket: (1e-10, 1e-1),
            rel_tol: 1e-3,
            steps: criterion.default_steps(),
            c: 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.bracket;
        if !(lo > 0.0 && lo < hi && hi <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "bracket must satisfy 0 < p_low < p_high <= 1 (got [{lo:e}, {hi:e}])"
            )));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "rel_tol must be positive (got {})",
                self.rel_tol
            )));
        }
        let min_steps = match self.criterion {
            ThresholdCriterion::OptimalXi1Zero => 2,
            ThresholdCriterion::OptimalXi2Zero => 3,
            ThresholdCriterion::TotalReaches { .. } => 1,
        };
        if self.steps < min_steps || self.steps > 3 {
            return Err(Error::InvalidArgument(format!(
                "criterion {} needs between {min_steps} and 3 steps (got {})",
                self.criterion, self.steps
            )));
        }
        NoiseParams::new(hi, self.c)?;
        Ok(())
    }

    /// Evaluates the criterion at depolarization `p`.
    pub fn holds_at(&self, p: f64) -> Result<bool> {
        let noise = NoiseParams::new(p, self.c)?;
        match self.criterion {
            ThresholdCriterion::OptimalXi1Zero => {
                let m = maximize_with(noise, self.steps, &MaximizeOptions::default())?;
                Ok(m.strengths[0] < ZERO_DEADBAND)
            }
            ThresholdCriterion::OptimalXi2Zero => {
                let m = maximize_with(noise, self.steps, &MaximizeOptions::default())?;
                Ok(m.strengths[1] < ZERO_DEADBAND)
            }
            ThresholdCriterion::TotalReaches { bits } => {
                let opts = MaximizeOptions {
                    mode: SearchMode::AllStepsActive,
                    ..Default::default()
                };
                let m = maximize_with(noise, self.steps, &opts)?;
                Ok(m.feasible && m.total_bits >= bits)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThresholdResult {
    pub criterion: ThresholdCriterion,
    pub p_thr: f64,
    pub iterations: usize,
    /// Final bracket in p.
    pub p_low: f64,
    pub p_high: f64,
}

/// Bisects `log₁₀ p` until the bracket's relative width is below `rel_tol`.
pub fn find_threshold(query: &ThresholdQuery) -> Result<ThresholdResult> {
    query.validate()?;
    let (lo, hi) = query.bracket;
    let b = bisect_log(|p| query.holds_at(p), lo, hi, query.rel_tol)?;
    Ok(ThresholdResult {
        criterion: query.criterion,
        p_thr: b.value,
        iterations: b.iterations,
        p_low: b.low,
        p_high: b.high,
    })
}
