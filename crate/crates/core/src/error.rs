use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument outside the domain of the function.
    #[error("{name} = {value} is outside the domain ({constraint})")]
    Domain {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    /// A series hit its term cap before reaching the requested tolerance.
    /// `best` is the partial sum and `bound` the remaining truncation bound.
    #[error("series did not reach tolerance after {terms} terms (value {best}, bound {bound:e})")]
    Accuracy { best: f64, bound: f64, terms: usize },

    /// A result left [0, 1] by more than the tolerance allows.
    #[error("value {value} leaves [0, 1] by more than the tolerance {abs_tol:e}")]
    OutOfRange { value: f64, abs_tol: f64 },

    #[error("quadrature did not converge (estimate {estimate}, error estimate {error:e})")]
    Quadrature { estimate: f64, error: f64 },

    #[error("unsupported parameter: {0}")]
    Unsupported(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub(crate) fn check_nonneg(name: &'static str, value: f64) -> Result<()> {
    if value >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value,
            constraint: "must be >= 0",
        })
    }
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value,
            constraint: "must be > 0",
        })
    }
}
