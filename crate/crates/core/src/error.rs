use thiserror::Error;

/// Errors raised by the physics models and analysis pipelines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain where a formula is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A tabulated quantity was queried outside its valid interval.
    #[error("{quantity} requested at {value} outside valid range [{min}, {max}]")]
    Range {
        quantity: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    /// Invalid or inconsistent configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Coil or sphere placement is physically inconsistent.
    #[error("geometry error: {0}")]
    Geometry(String),

    /// A field evaluation hit a singular point.
    #[error("evaluation error: {0}")]
    Evaluation(String),

    /// An iterative solver stopped before meeting its tolerance.
    #[error("solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    Solver { iterations: usize, residual: f64 },

    /// A fit produced a non-physical or degenerate result.
    #[error("fit error: {0}")]
    Fit(String),

    /// Input data is insufficient or malformed.
    #[error("data error: {0}")]
    Data(String),

    /// The optimum sits on the search bracket edge or is not identifiable.
    #[error("bracket error: {0}")]
    Bracket(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
