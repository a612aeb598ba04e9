use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack added to the clamp width so that a final rounding step never turns
/// an exact evaluation into an error when `abs_tol` is tiny.
const ROUNDING_SLACK: f64 = 8.0 * f64::EPSILON;

/// Truncation control shared by every series and quadrature in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    pub abs_tol: f64,
    pub max_terms: usize,
}

impl Default for Accuracy {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            max_terms: 200,
        }
    }
}

impl Accuracy {
    pub fn new(abs_tol: f64, max_terms: usize) -> Result<Self> {
        if abs_tol.is_nan() || abs_tol <= 0.0 || abs_tol.is_infinite() {
            return Err(Error::InvalidInput(format!(
                "abs_tol must be a positive finite number, got {abs_tol}"
            )));
        }
        if max_terms == 0 {
            return Err(Error::InvalidInput("max_terms must be at least 1".into()));
        }
        Ok(Self { abs_tol, max_terms })
    }

    pub fn with_tol(abs_tol: f64) -> Result<Self> {
        Self::new(abs_tol, Self::default().max_terms)
    }

    /// Clamp a computed probability into [0, 1].
    ///
    /// Excursions outside the unit interval wider than `abs_tol` point at a
    /// wrong truncation rather than rounding and are reported as errors.
    pub fn clamp(&self, value: f64) -> Result<Prob> {
        let width = self.abs_tol + ROUNDING_SLACK;
        if value.is_nan() || value < -width || value > 1.0 + width {
            return Err(Error::OutOfRange {
                value,
                abs_tol: self.abs_tol,
            });
        }
        Ok(Prob(value.clamp(0.0, 1.0)))
    }
}

/// A probability in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Prob(f64);

impl Prob {
    pub const ZERO: Prob = Prob(0.0);
    pub const ONE: Prob = Prob(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Prob(value))
        } else {
            Err(Error::InvalidInput(format!(
                "probability {value} is outside [0, 1]"
            )))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn complement(self) -> Prob {
        Prob(1.0 - self.0)
    }
}

impl From<Prob> for f64 {
    fn from(p: Prob) -> f64 {
        p.0
    }
}

/// A probability evaluated by a truncated series, with the bound on the
/// neglected remainder and the number of terms summed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Evaluation {
    pub prob: Prob,
    pub trunc_bound: f64,
    pub terms: usize,
}

impl Evaluation {
    pub(crate) fn exact(prob: Prob) -> Self {
        Self {
            prob,
            trunc_bound: 0.0,
            terms: 0,
        }
    }

    pub fn value(&self) -> f64 {
        self.prob.get()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_rejects_bad_parameters() {
        assert!(Accuracy::new(0.0, 10).is_err());
        assert!(Accuracy::new(-1e-9, 10).is_err());
        assert!(Accuracy::new(f64::NAN, 10).is_err());
        assert!(Accuracy::new(1e-9, 0).is_err());
        assert!(Accuracy::new(1e-9, 1).is_ok());
    }

    #[test]
    fn clamp_absorbs_noise_within_tolerance() {
        let acc = Accuracy::default();
        assert_eq!(acc.clamp(1.0 + 1e-13).unwrap().get(), 1.0);
        assert_eq!(acc.clamp(-1e-13).unwrap().get(), 0.0);
        assert_eq!(acc.clamp(0.25).unwrap().get(), 0.25);
    }

    #[test]
    fn clamp_flags_wide_excursions() {
        let acc = Accuracy::default();
        assert!(matches!(acc.clamp(1.0 + 1e-9), Err(Error::OutOfRange { .. })));
        assert!(matches!(acc.clamp(-1e-6), Err(Error::OutOfRange { .. })));
        assert!(acc.clamp(f64::NAN).is_err());
    }
}
