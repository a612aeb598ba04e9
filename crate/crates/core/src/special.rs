//! Elementary special functions used by the null distributions.
//!
//! `erf` and `erfc` come from the `libm` port of the FreeBSD/fdlibm routines,
//! which are accurate to within one unit in the last place; that is well
//! inside the 1e-12 needed here.

use std::f64::consts::{FRAC_2_PI, SQRT_2};

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// CDF of the Gamma law with shape 1/2 and rate `theta`: `erf(sqrt(theta x))`.
pub fn gamma_half_cdf(x: f64, theta: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        erf((theta * x).sqrt())
    }
}

/// Arcsine (Beta(1/2, 1/2)) CDF, `(2/pi) asin(sqrt(x))` on [0, 1].
pub fn arcsine_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        FRAC_2_PI * x.sqrt().asin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Maclaurin series `2/sqrt(pi) sum (-1)^n x^(2n+1) / (n! (2n+1))`.
    fn erf_series(x: f64) -> f64 {
        let mut term = x;
        let mut sum = x;
        for n in 1..200 {
            term *= -x * x / n as f64;
            let add = term / (2 * n + 1) as f64;
            sum += add;
            if add.abs() < 1e-18 {
                break;
            }
        }
        2.0 / PI.sqrt() * sum
    }

    #[test]
    fn erf_matches_series() {
        for i in 0..=30 {
            let x = -1.5 + 0.1 * i as f64;
            assert!((erf(x) - erf_series(x)).abs() < 1e-13, "x={x}");
        }
        assert!((erf(1.0) - 0.842_700_792_949_714_9).abs() < 1e-15);
        assert!((erfc(3.0) - 2.209_049_699_858_544e-5).abs() < 1e-18);
    }

    #[test]
    fn reference_cdfs() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((normal_cdf(1.959_963_984_540_054) - 0.975).abs() < 1e-13);
        assert!((arcsine_cdf(0.5) - 0.5).abs() < 1e-15);
        assert!((arcsine_cdf(0.25) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(arcsine_cdf(-1.0), 0.0);
        assert_eq!(arcsine_cdf(2.0), 1.0);
        // mean of Gamma(1/2, theta) is 1/(2 theta); check the CDF at a point
        assert!((gamma_half_cdf(1.0, 0.5) - erf(0.5f64.sqrt())).abs() < 1e-16);
        assert_eq!(gamma_half_cdf(0.0, 2.0), 0.0);
    }
}
