use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{name} = {value} is outside [{min}, {max}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("operator is not Hermitian (max deviation {deviation:e})")]
    NonHermitian { deviation: f64 },

    #[error("invalid two-qubit state: {0}")]
    InvalidState(String),

    #[error("pure state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("outcome has probability {probability:e}; cannot condition on it")]
    DegenerateBranch { probability: f64 },

    #[error("beta = {beta} leaves no gap to the local bound; randomness cannot be certified")]
    Uncertifiable { beta: f64 },

    #[error("invalid noise parameters p = {p}, c = {c} (need p, c >= 0 and p + c <= 1)")]
    InvalidNoise { p: f64, c: f64 },

    #[error("visibilities V_Z = {v_z}, V_X = {v_x} are outside the depolarizing/dephasing model")]
    ModelViolation { v_z: f64, v_x: f64 },

    #[error("history {history} is not reachable at step {step} of a {steps}-step protocol")]
    UnreachableHistory {
        history: String,
        step: usize,
        steps: usize,
    },

    #[error("no counts recorded for step {step}, history '{history}', settings A{alice}/B{bob}")]
    InsufficientData {
        step: usize,
        history: String,
        alice: u8,
        bob: u8,
    },

    #[error("count table: {0}")]
    CountTable(String),

    #[error("count file row {row}: {message}")]
    CountFile { row: usize, message: String },

    #[error("bracket [{low:e}, {high:e}] does not straddle the criterion (both ends evaluate to {value})")]
    Bracketing { low: f64, high: f64, value: bool },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn range(name: &'static str, value: f64, min: f64, max: f64) -> Self {
        Error::OutOfRange {
            name,
            value,
            min,
            max,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

/// Checks `value` lies in `[min, max]`; NaN is rejected.
pub(crate) fn check_range(name: &'static str, value: f64, min: f64, max: f64) -> Result<f64> {
    if value >= min && value <= max {
        Ok(value)
    } else {
        Err(Error::range(name, value, min, max))
    }
}

/// Angles in `[0, π/4]`, allowing a few ulps of slack at the upper end so
/// values written as `0.7853981633974483` or computed as `PI / 4.0` pass.
pub(crate) fn check_angle(name: &'static str, value: f64) -> Result<f64> {
    const UPPER: f64 = std::f64::consts::FRAC_PI_4;
    if (0.0..=UPPER + 1e-12).contains(&value) {
        Ok(value.min(UPPER))
    } else {
        Err(Error::range(name, value, 0.0, UPPER))
    }
}
