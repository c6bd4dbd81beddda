use thiserror::Error;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("impulse response has {taps} taps but only {subcarriers} subcarriers")]
    CirTooLong { taps: usize, subcarriers: usize },

    #[error("tap variance {0} is negative or not finite")]
    BadVariance(f64),

    #[error("channel profile must have at least one tap")]
    EmptyProfile,

    #[error("BD channel has zero energy, matched filter undefined")]
    ZeroChannel,

    #[error("constellation is invalid: {0}")]
    BadConstellation(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("M-step normal equation has a zero denominator at subcarrier {0}")]
    SingularMStep(usize),

    #[error("threshold must be positive and finite, got {0}")]
    BadThreshold(f64),

    #[error("threshold grid is empty")]
    EmptyGrid,

    #[error("closed-form BER requires equal tap variances; use the Chiani approximation or Monte Carlo")]
    UnequalTapVariances,

    #[error("invalid parameter {name}: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("curves cannot be compared: {0}")]
    CurveMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
