use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A state left the positive cone, or a component is not finite.
    #[error("domain error: component {component} = {value} is not a positive finite number")]
    Domain { component: usize, value: f64 },

    /// A log-state component exceeded the safe exponent bound.
    #[error("overflow: |z[{component}]| = {value} exceeds the safe exponent bound {bound}")]
    Overflow { component: usize, value: f64, bound: f64 },

    /// The scheme overflowed at a given step.
    #[error("step {step}: {source}")]
    StepFailed {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("dimension mismatch: expected {expected}, got {got} ({what})")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// Invalid parameter value (e.g. `J <= p`).
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Inconsistent policy or experiment configuration.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{len} is not divisible by coarsening factor {factor}")]
    Divisibility { len: usize, factor: usize },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
