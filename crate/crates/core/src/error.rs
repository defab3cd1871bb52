use thiserror::Error;

/// Errors raised by the thermometry library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid support [{y_min}, {y_max}]: need 0 < y_min < y_max, both finite")]
    InvalidSupport { y_min: f64, y_max: f64 },

    #[error("a grid needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),

    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite value {value} at index {index}")]
    NonFiniteValue { index: usize, value: f64 },

    #[error("invalid temperature {0}: must be positive and finite")]
    InvalidTemperature(f64),

    #[error("invalid {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("unknown model '{0}' (expected 'spin-gas' or 'oscillator')")]
    UnknownModel(String),

    #[error("outcome {outcome} outside 0..={max}")]
    OutcomeOutOfRange { outcome: u64, max: u64 },

    #[error("non-finite outcome {0}")]
    NonFiniteOutcome(f64),

    #[error("measurement record is empty")]
    EmptyRecord,

    #[error(
        "posterior underflowed to zero everywhere; the record is inconsistent with the support"
    )]
    DegeneratePosterior,

    #[error("model '{0}' provides no Fisher information")]
    NoFisherInformation(&'static str),

    #[error("Fisher information vanishes at y = {0}")]
    ZeroFisherInformation(f64),

    #[error("enumerating {outcomes} outcomes exceeds the cap of {cap}")]
    EnumerationTooLarge { outcomes: u64, cap: u64 },

    #[error("dropped outcome mass {0:e} exceeds 1e-12")]
    TailMassTooLarge(f64),

    #[error(
        "decomposition eps_opt = eps_p - K violated: eps_opt = {eps_opt}, eps_p - K = {decomposed}"
    )]
    DecompositionMismatch { eps_opt: f64, decomposed: f64 },

    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },

    #[error("eps_cr - eps_opt = {gap:e} is not positive at n = {n}; refusing to fit")]
    NonPositiveGap { n: u32, gap: f64 },

    #[error("least-squares system is singular")]
    SingularFit,

    #[error("fitted variance {0} <= 1/2: temperature inversion undefined")]
    InversionUndefined(f64),

    #[error("Gauss-Newton fit did not converge in {0} iterations")]
    FitDidNotConverge(usize),

    #[error("trace format error: {0}")]
    TraceFormat(String),
}

impl Error {
    /// Numerical failures, as opposed to invalid input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegeneratePosterior
                | Error::ZeroFisherInformation(_)
                | Error::TailMassTooLarge(_)
                | Error::DecompositionMismatch { .. }
                | Error::NonPositiveGap { .. }
                | Error::SingularFit
                | Error::InversionUndefined(_)
                | Error::FitDidNotConverge(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_temperature(y: f64) -> Result<f64> {
    if y.is_finite() && y > 0.0 {
        Ok(y)
    } else {
        Err(Error::InvalidTemperature(y))
    }
}
