//! Partial sums with an explicit remainder bound.

use crate::error::{Error, Result};
use crate::types::Accuracy;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Partial {
    pub sum: f64,
    pub bound: f64,
    pub terms: usize,
}

/// Neumaier-compensated accumulator.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    pub fn new(start: f64) -> Self {
        Self {
            sum: start,
            carry: 0.0,
        }
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Sums `start + term(1) + term(2) + ...`.
///
/// `step(k)` returns the k-th term together with a bound on the absolute
/// value of everything after it. Summation stops at the first `k` whose bound
/// is within `acc.abs_tol`; hitting `acc.max_terms` first is an error that
/// carries the partial sum.
pub(crate) fn sum_with_bound<F>(acc: &Accuracy, start: f64, mut step: F) -> Result<Partial>
where
    F: FnMut(usize) -> (f64, f64),
{
    let mut sum = Compensated::new(start);
    let mut bound = f64::INFINITY;
    for k in 1..=acc.max_terms {
        let (term, rest) = step(k);
        sum.add(term);
        bound = rest;
        if rest <= acc.abs_tol {
            return Ok(Partial {
                sum: sum.total(),
                bound,
                terms: k,
            });
        }
    }
    Err(Error::Accuracy {
        best: sum.total(),
        bound,
        terms: acc.max_terms,
    })
}

/// Bound on `sum_{j >= 0} next * r_j` when the ratios between consecutive
/// terms never exceed `ratio`.
pub(crate) fn geometric_tail(next: f64, ratio: f64) -> f64 {
    if next == 0.0 {
        0.0
    } else if ratio < 1.0 {
        next / (1.0 - ratio)
    } else {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stops_once_bound_is_small() {
        let acc = Accuracy::new(1e-6, 100).unwrap();
        // sum of 2^-k
        let p = sum_with_bound(&acc, 0.0, |k| {
            let t = 0.5f64.powi(k as i32);
            (t, geometric_tail(t / 2.0, 0.5))
        })
        .unwrap();
        assert!((p.sum - 1.0).abs() <= p.bound);
        assert!(p.bound <= 1e-6);
        assert_eq!(p.terms, 20);
    }

    #[test]
    fn cap_reports_best_value() {
        let acc = Accuracy::new(1e-12, 5).unwrap();
        let err = sum_with_bound(&acc, 0.0, |k| (1.0 / k as f64, f64::INFINITY)).unwrap_err();
        match err {
            Error::Accuracy { best, terms, .. } => {
                assert_eq!(terms, 5);
                assert!((best - (1.0 + 0.5 + 1.0 / 3.0 + 0.25 + 0.2)).abs() < 1e-15);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn compensated_sum_recovers_small_addends() {
        let mut c = Compensated::new(1.0);
        for _ in 0..10 {
            c.add(1e-17);
        }
        c.add(-1.0);
        assert!((c.total() - 1e-16).abs() < 1e-30);
    }
}
