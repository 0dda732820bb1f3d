use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter violates a documented domain restriction.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite value encountered{}", at_time(*.time))]
    NonFinite { time: Option<f64> },

    /// The nonlinear step-size guard `dt * max|xi| * (|a| max|v| + |b| max|v|^2) * safety <= 1` failed.
    #[error("time step {dt} too large for the nonlinear subproblem (guard value {guard:.3})")]
    StepTooLarge { dt: f64, guard: f64 },

    /// No root of the modulation function was found near the predicted phase.
    #[error("modulation root lost at t = {time} (predicted r = {predicted})")]
    RootLost { time: f64, predicted: f64 },

    #[error("phase ODE denominator degenerate ({value:e})")]
    DegenerateDenominator { value: f64 },
}

fn at_time(t: Option<f64>) -> String {
    match t {
        Some(t) => format!(" at t = {t}"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for failures that happen while running a simulation, as opposed
    /// to rejected inputs.
    pub fn is_runtime(&self) -> bool {
        matches!(
            self,
            Error::NonFinite { .. } | Error::RootLost { .. } | Error::DegenerateDenominator { .. }
        )
    }
}
