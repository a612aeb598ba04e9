//! Extrema of Brownian motion before the last zero `g` preceding an
//! independent exponential time `S ~ Exp(theta)`.
//!
//! `g` is `Gamma(1/2, theta)` and the path up to `g` is a Brownian bridge of
//! length `g`, so `sqrt(gamma) (M+, M-)` with `gamma ~ Gamma(1/2, theta)`
//! independent of the bridge has the law of `(max B, -min B)` over `[0, g]`.
//! On the local-time scale, excursions reaching level `x` before `g` arrive at
//! rate [`excursion_rate`], which turns the rescaled laws into hyperbolic
//! functions of `c = sqrt(2 theta)`.
//!
//! [`gamma_mix`] integrates an unscaled bridge law against the gamma density,
//! which is how the two scales are tied together numerically.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{check_nonneg, check_positive, Error, Result};
use crate::quadrature::{integrate, QuadratureSpec};
use crate::special::erfc;
use crate::types::Prob;

/// Killing rate `theta > 0` of the exponential time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ThetaParam(f64);

impl ThetaParam {
    pub fn new(theta: f64) -> Result<Self> {
        if theta > 0.0 && theta.is_finite() {
            Ok(Self(theta))
        } else {
            Err(Error::Domain {
                name: "theta",
                value: theta,
                constraint: "must be positive and finite",
            })
        }
    }

    pub fn theta(self) -> f64 {
        self.0
    }

    /// `c = sqrt(2 theta)`, the rate of the exponential local time at `S`.
    pub fn rate(self) -> f64 {
        (2.0 * self.0).sqrt()
    }
}

impl Default for ThetaParam {
    fn default() -> Self {
        Self(0.5)
    }
}

impl TryFrom<f64> for ThetaParam {
    type Error = Error;
    fn try_from(theta: f64) -> Result<Self> {
        Self::new(theta)
    }
}

impl From<ThetaParam> for f64 {
    fn from(tp: ThetaParam) -> f64 {
        tp.0
    }
}

/// A value of the local time at zero, accumulated up to `g`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LocalTimeLevel(f64);

impl LocalTimeLevel {
    pub fn new(t: f64) -> Result<Self> {
        check_nonneg("t", t)?;
        Ok(Self(t))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Mean number, per unit of local time, of excursions before `g` whose height
/// reaches `x`: `m(x) = c e^{-2xc} / (1 - e^{-2xc})`.
///
/// Diverges as `x -> 0`; `x = +inf` gives 0.
pub fn excursion_rate(x: f64, tp: ThetaParam) -> Result<f64> {
    check_positive("x", x)?;
    let c = tp.rate();
    Ok(c / (2.0 * x * c).exp_m1())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RescaledKind {
    /// `P(sqrt(gamma) M+ >= x) = e^{-2xc}`
    OnesidedTail,
    /// `P(sqrt(gamma) M <= x) = tanh(xc)`
    MaxCdf,
    /// `P(sqrt(gamma) m > x)`
    MinTail,
    /// `P(U <= x, V <= y) = 2 sinh(xc) sinh(yc) / sinh((x+y)c)`
    JointCdf,
    /// `P(U + V <= x) = coth(xc) - xc / sinh^2(xc)`
    SumCdf,
}

impl RescaledKind {
    pub const ALL: [RescaledKind; 5] = [
        RescaledKind::OnesidedTail,
        RescaledKind::MaxCdf,
        RescaledKind::MinTail,
        RescaledKind::JointCdf,
        RescaledKind::SumCdf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RescaledKind::OnesidedTail => "onesided_tail",
            RescaledKind::MaxCdf => "max_cdf",
            RescaledKind::MinTail => "min_tail",
            RescaledKind::JointCdf => "joint_cdf",
            RescaledKind::SumCdf => "sum_cdf",
        }
    }
}

/// `coth(u) - u / sinh^2(u)`, with the expansion `2u/3 - 4u^3/45` near zero.
fn sum_cdf_hyperbolic(u: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else if u.is_infinite() {
        1.0
    } else if u < 1e-3 {
        2.0 * u / 3.0 - 4.0 * u * u * u / 45.0
    } else {
        let q = (-2.0 * u).exp();
        let one_minus_q = -(-2.0 * u).exp_m1();
        (1.0 + q) / one_minus_q - 4.0 * u * q / (one_minus_q * one_minus_q)
    }
}

/// The rescaled laws in closed form, with `c = sqrt(2 theta)`.
///
/// `y` is the second coordinate and must be given exactly for
/// [`RescaledKind::JointCdf`]. At `x = 0` each law takes its limit value.
pub fn rescaled_law(kind: RescaledKind, x: f64, y: Option<f64>, tp: ThetaParam) -> Result<Prob> {
    check_nonneg("x", x)?;
    let c = tp.rate();
    // 1 - e^{-2 a c}, accurate for small a
    let one_minus_q = |a: f64| -(-2.0 * a * c).exp_m1();
    let value = match (kind, y) {
        (RescaledKind::JointCdf, None) => {
            return Err(Error::InvalidInput("joint_cdf needs a second argument".into()))
        }
        (RescaledKind::JointCdf, Some(y)) => {
            check_nonneg("y", y)?;
            if x == 0.0 || y == 0.0 {
                0.0
            } else {
                one_minus_q(x) * one_minus_q(y) / one_minus_q(x + y)
            }
        }
        (_, Some(_)) => {
            return Err(Error::InvalidInput(format!(
                "{} takes a single argument",
                kind.name()
            )))
        }
        (RescaledKind::OnesidedTail, None) => (-2.0 * x * c).exp(),
        (RescaledKind::MaxCdf, None) => (x * c).tanh(),
        (RescaledKind::MinTail, None) => {
            // 1 - 2c/(c + m) + c/(c + 2m) with m = c q / (1 - q)
            let q = (-2.0 * x * c).exp();
            2.0 * q * q / (1.0 + q)
        }
        (RescaledKind::SumCdf, None) => sum_cdf_hyperbolic(x * c),
    };
    Ok(Prob::new(value.clamp(0.0, 1.0)).unwrap())
}

/// `P(max <= x, -min <= y | L(g) = t) = exp(-t (m(x) + m(y)))`.
///
/// Infinite `x` or `y` drop the corresponding factor.
pub fn conditional_pair_cdf(x: f64, y: f64, lt: LocalTimeLevel, tp: ThetaParam) -> Result<Prob> {
    let mx = excursion_rate(x, tp)?;
    let my = excursion_rate(y, tp)?;
    let t = lt.get();
    if t == 0.0 {
        return Ok(Prob::ONE);
    }
    Ok(Prob::new((-t * (mx + my)).exp()).unwrap())
}

/// `P(U - V >= z) = 2c int_0^inf sinh^2(cu) / sinh^2(c(2u + z)) du` by quadrature.
pub fn rescaled_diff_tail(z: f64, tp: ThetaParam, q: &QuadratureSpec) -> Result<Prob> {
    check_nonneg("z", z)?;
    if z.is_infinite() {
        return Ok(Prob::ZERO);
    }
    let c = tp.rate();
    let integrand = |u: f64| {
        let a = c * u;
        let b = c * (2.0 * u + z);
        if b == 0.0 {
            return 0.25;
        }
        // sinh(a)/sinh(b) = e^{a-b} (1 - e^{-2a}) / (1 - e^{-2b}), with a <= b
        let ratio = (a - b).exp() * (-2.0 * a).exp_m1() / (-2.0 * b).exp_m1();
        ratio * ratio
    };
    // the integrand is at most e^{-2c(u+z)}, so 2c times the tail past U is
    // at most e^{-2c(U+z)}
    let upper = ((-q.tail_tol.ln()) / (2.0 * c) - z).max(0.0);
    let quad = integrate(integrand, 0.0, upper, q)?;
    Ok(Prob::new((2.0 * c * quad.value).clamp(0.0, 1.0)).unwrap())
}

/// `psi(t) = E(max over [0, g] | L(g) = t) = int_0^inf (1 - e^{-t m(x)}) dx`.
///
/// The range is cut where `t m(x)` falls to a level `eps`; past the cut the
/// integrand is replaced by `t m(x)`, whose integral is
/// `-(t/2) ln(1 - e^{-2Xc})`. The substitution error is below `eps^2 / (4c)`.
pub fn conditional_mean_extremum(
    lt: LocalTimeLevel,
    tp: ThetaParam,
    q: &QuadratureSpec,
) -> Result<f64> {
    let t = lt.get();
    if t == 0.0 {
        return Ok(0.0);
    }
    let c = tp.rate();
    let eps = (4.0 * c * q.tail_tol).sqrt();
    let cut = (c * t / eps).ln_1p() / (2.0 * c);
    let body = integrate(
        |x| {
            let m = c / (2.0 * x * c).exp_m1();
            -(-t * m).exp_m1()
        },
        0.0,
        cut,
        q,
    )?;
    let tail = -0.5 * t * (-(-2.0 * cut * c).exp()).ln_1p();
    Ok(body.value + tail)
}

/// `E psi(L)` and `E psi(L)^2` with `L ~ Exp(c)`, the law of the local time
/// at `g`. These are `E(U)` and `E(E(U | L)^2)`.
pub fn psi_moments(tp: ThetaParam, q: &QuadratureSpec) -> Result<(f64, f64)> {
    let c = tp.rate();
    // psi grows only logarithmically, so e^{-cT} controls the neglected tail
    let upper = ((-q.tail_tol.ln()) + 10.0) / c;
    let moment = |power: i32| -> Result<f64> {
        let mut failure = None;
        let quad = integrate(
            |t| {
                if failure.is_some() {
                    return 0.0;
                }
                match conditional_mean_extremum(LocalTimeLevel(t), tp, q) {
                    Ok(psi) => c * (-c * t).exp() * psi.powi(power),
                    Err(e) => {
                        failure = Some(e);
                        0.0
                    }
                }
            },
            0.0,
            upper,
            q,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(quad?.value)
    };
    Ok((moment(1)?, moment(2)?))
}

/// `cov(U, V) = var(psi(L))` by quadrature; equals `pi^2/12 - 3/4`.
///
/// Only `theta = 1/2` is supported, where the local time at `g` is `Exp(1)`.
pub fn covariance_rescaled(tp: ThetaParam, q: &QuadratureSpec) -> Result<f64> {
    if tp.theta() != 0.5 {
        return Err(Error::Unsupported(format!(
            "covariance_rescaled is derived for theta = 1/2 only, got {}",
            tp.theta()
        )));
    }
    let (first, second) = psi_moments(tp, q)?;
    Ok(second - first * first)
}

/// `cov(U, V)` from the bridge moments:
/// `E(gamma) E(M+ M-) - E(sqrt(gamma))^2 E(M+)^2`, with
/// `E(gamma) = 1/(2 theta)` and `E(sqrt(gamma)) = 1/sqrt(pi theta)`.
pub fn covariance_from_bridge_moments(tp: ThetaParam) -> f64 {
    let m = crate::distributions::extrema_moments();
    let theta = tp.theta();
    m.e_product / (2.0 * theta) - m.mean_mplus * m.mean_mplus / (PI * theta)
}

/// `E F(x / sqrt(gamma))` for `gamma ~ Gamma(1/2, theta)`:
///
/// `sqrt(theta/pi) int_0^inf F(x/sqrt(s)) s^{-1/2} e^{-theta s} ds`
///
/// computed after the substitution `s = v^2`, which removes the endpoint
/// singularity. `F` must be bounded by 1 in absolute value; the range is cut
/// at `V` with `erfc(sqrt(theta) V) <= tail_tol`.
pub fn gamma_mix<F>(mut unscaled: F, x: f64, tp: ThetaParam, q: &QuadratureSpec) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    check_nonneg("x", x)?;
    let theta = tp.theta();
    let mut w = 1.0;
    while erfc(w) > q.tail_tol {
        w += 0.25;
    }
    let upper = w / theta.sqrt();
    let mut failure = None;
    let quad = integrate(
        |v| {
            if failure.is_some() {
                return 0.0;
            }
            match unscaled(x / v) {
                Ok(f) => 2.0 * f * (-theta * v * v).exp(),
                Err(e) => {
                    failure = Some(e);
                    0.0
                }
            }
        },
        0.0,
        upper,
        q,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok((theta / PI).sqrt() * quad?.value)
}

/// Residual `gamma_mix(unscaled)(x) - rescaled(x)`; zero when the two laws
/// describe the same pair at the two scales.
pub fn gamma_mix_check<F, G>(
    unscaled: F,
    mut rescaled: G,
    x: f64,
    tp: ThetaParam,
    q: &QuadratureSpec,
) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
    G: FnMut(f64) -> Result<f64>,
{
    let mixed = gamma_mix(unscaled, x, tp, q)?;
    Ok(mixed - rescaled(x)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions as d;
    use crate::types::Accuracy;

    fn half() -> ThetaParam {
        ThetaParam::new(0.5).unwrap()
    }

    fn wide() -> Accuracy {
        Accuracy::new(1e-14, 100_000).unwrap()
    }

    #[test]
    fn theta_validation() {
        assert!(ThetaParam::new(0.0).is_err());
        assert!(ThetaParam::new(-1.0).is_err());
        assert!(ThetaParam::new(f64::INFINITY).is_err());
        assert_eq!(ThetaParam::new(2.0).unwrap().rate(), 2.0);
        assert_eq!(ThetaParam::default().rate(), 1.0);
        assert!(LocalTimeLevel::new(-0.1).is_err());
    }

    #[test]
    fn excursion_rate_values() {
        let m = excursion_rate(0.5, half()).unwrap();
        assert!((m - 1.0 / (std::f64::consts::E - 1.0)).abs() < 1e-15);
        assert_eq!(excursion_rate(f64::INFINITY, half()).unwrap(), 0.0);
        assert!(excursion_rate(50.0, half()).unwrap() < 1e-40);
        assert!(excursion_rate(0.0, half()).is_err());
        assert!(excursion_rate(-1.0, half()).is_err());
    }

    #[test]
    fn excursion_rate_closes_against_one_sided_tail() {
        for &theta in &[0.1, 0.5, 1.0, 3.0] {
            let tp = ThetaParam::new(theta).unwrap();
            let c = tp.rate();
            for &x in &[0.05, 0.3, 1.0, 2.5] {
                let m = excursion_rate(x, tp).unwrap();
                assert!((m / (c + m) - (-2.0 * x * c).exp()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rescaled_examples() {
        let tp = half();
        let v = rescaled_law(RescaledKind::MaxCdf, 1.0, None, tp).unwrap().get();
        assert!((v - 1f64.tanh()).abs() < 1e-15);
        let j = rescaled_law(RescaledKind::JointCdf, 1.0, Some(1.0), tp).unwrap().get();
        assert!((j - 1f64.tanh()).abs() < 1e-12);
        let v = rescaled_law(RescaledKind::MinTail, 0.5, None, tp).unwrap().get();
        // 1 - 2c/(c+m) + c/(c+2m) with m = 1/(e-1), c = 1
        let m = 1.0 / (std::f64::consts::E - 1.0);
        let oracle = 1.0 - 2.0 / (1.0 + m) + 1.0 / (1.0 + 2.0 * m);
        assert!((v - oracle).abs() < 1e-15);
        assert!((v - 0.197_876).abs() < 1e-6);
        let s = rescaled_law(RescaledKind::SumCdf, 1.0, None, tp).unwrap().get();
        let oracle = 1.0 / 1f64.tanh() - 1.0 / 1f64.sinh().powi(2);
        assert!((s - oracle).abs() < 1e-15);
        assert!((s - 0.588_973_7).abs() < 1e-7);
    }

    #[test]
    fn rescaled_boundaries_and_arguments() {
        let tp = half();
        let at0 = |k| rescaled_law(k, 0.0, None, tp).unwrap().get();
        assert_eq!(at0(RescaledKind::OnesidedTail), 1.0);
        assert_eq!(at0(RescaledKind::MaxCdf), 0.0);
        assert_eq!(at0(RescaledKind::MinTail), 1.0);
        assert_eq!(at0(RescaledKind::SumCdf), 0.0);
        assert_eq!(
            rescaled_law(RescaledKind::JointCdf, 0.0, Some(1.0), tp).unwrap().get(),
            0.0
        );
        assert!(rescaled_law(RescaledKind::JointCdf, 1.0, None, tp).is_err());
        assert!(rescaled_law(RescaledKind::MaxCdf, 1.0, Some(1.0), tp).is_err());
        assert!(rescaled_law(RescaledKind::MaxCdf, -1.0, None, tp).is_err());
        // the small-argument expansion of the sum law meets the closed form
        let u: f64 = 0.999e-3;
        let closed = 1.0 / u.tanh() - u / u.sinh().powi(2);
        assert!((sum_cdf_hyperbolic(u) - closed).abs() < 1e-12);
        assert!((sum_cdf_hyperbolic(500.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn joint_diagonal_matches_max() {
        for &theta in &[0.5, 1.0, 2.0] {
            let tp = ThetaParam::new(theta).unwrap();
            for i in 1..=20 {
                let x = 0.15 * i as f64;
                let j = rescaled_law(RescaledKind::JointCdf, x, Some(x), tp).unwrap().get();
                let m = rescaled_law(RescaledKind::MaxCdf, x, None, tp).unwrap().get();
                assert!((j - m).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn conditional_pair_examples() {
        let tp = half();
        let zero = LocalTimeLevel::new(0.0).unwrap();
        let one = LocalTimeLevel::new(1.0).unwrap();
        assert_eq!(conditional_pair_cdf(0.3, 0.4, zero, tp).unwrap().get(), 1.0);
        let v = conditional_pair_cdf(0.5, 0.5, one, tp).unwrap().get();
        let single = (-1.0 / (std::f64::consts::E - 1.0)).exp();
        assert!((v - single * single).abs() < 1e-15);
        assert!((v - 0.312_249_3).abs() < 1e-7);
        let inf = f64::INFINITY;
        assert_eq!(conditional_pair_cdf(inf, inf, one, tp).unwrap().get(), 1.0);
        assert!(conditional_pair_cdf(0.0, 1.0, one, tp).is_err());
    }

    #[test]
    fn conditional_pair_factorizes() {
        let inf = f64::INFINITY;
        for &theta in &[0.5, 2.0] {
            let tp = ThetaParam::new(theta).unwrap();
            for &t in &[0.1, 1.0, 4.0] {
                let lt = LocalTimeLevel::new(t).unwrap();
                for &(x, y) in &[(0.2, 0.9), (1.0, 0.5), (1.5, 1.5)] {
                    let joint = conditional_pair_cdf(x, y, lt, tp).unwrap().get();
                    let a = conditional_pair_cdf(x, inf, lt, tp).unwrap().get();
                    let b = conditional_pair_cdf(inf, y, lt, tp).unwrap().get();
                    assert!((joint - a * b).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn unconditioning_recovers_joint_law() {
        let q = QuadratureSpec::default();
        for &theta in &[0.5, 1.0, 2.0] {
            let tp = ThetaParam::new(theta).unwrap();
            let c = tp.rate();
            for &(x, y) in &[(0.3, 0.6), (1.0, 1.0), (0.8, 2.0)] {
                let upper = 60.0 / c;
                let mixed = integrate(
                    |t| {
                        let lt = LocalTimeLevel(t);
                        c * (-c * t).exp() * conditional_pair_cdf(x, y, lt, tp).unwrap().get()
                    },
                    0.0,
                    upper,
                    &q,
                )
                .unwrap()
                .value;
                let closed = rescaled_law(RescaledKind::JointCdf, x, Some(y), tp).unwrap().get();
                assert!((mixed - closed).abs() < 1e-9, "theta={theta} ({x},{y})");
            }
        }
    }

    #[test]
    fn diff_tail_quadrature() {
        let q = QuadratureSpec::default();
        let tp = half();
        let v = rescaled_diff_tail(0.0, tp, &q).unwrap().get();
        assert!((v - 0.5).abs() < 1e-9);
        assert!(rescaled_diff_tail(40.0, tp, &q).unwrap().get() < 1e-15);
        assert_eq!(rescaled_diff_tail(f64::INFINITY, tp, &q).unwrap().get(), 0.0);
        // route agreement with the series law mixed over gamma
        let acc = wide();
        for &z in &[0.2, 1.0] {
            let quad = rescaled_diff_tail(z, tp, &q).unwrap().get();
            let mixed = gamma_mix(|u| Ok(d::diff_tail(u, &acc)?.value()), z, tp, &q).unwrap();
            assert!((quad - mixed).abs() < 1e-6, "z={z}: {quad} vs {mixed}");
        }
    }

    #[test]
    fn psi_examples() {
        let q = QuadratureSpec::default();
        let tp = half();
        assert_eq!(conditional_mean_extremum(LocalTimeLevel(0.0), tp, &q).unwrap(), 0.0);
        let mut prev = 0.0;
        for i in 1..=30 {
            let psi = conditional_mean_extremum(LocalTimeLevel(0.25 * i as f64), tp, &q).unwrap();
            assert!(psi >= prev);
            prev = psi;
        }
        let (first, second) = psi_moments(tp, &q).unwrap();
        assert!((first - 0.5).abs() < 1e-6);
        assert!((second - (PI * PI / 12.0 - 0.5)).abs() < 1e-6);
    }

    #[test]
    fn psi_first_moment_is_mean_of_rescaled_max() {
        let q = QuadratureSpec::default();
        for &theta in &[0.25, 2.0] {
            let tp = ThetaParam::new(theta).unwrap();
            let (first, _) = psi_moments(tp, &q).unwrap();
            assert!((first - 0.5 / tp.rate()).abs() < 1e-6, "theta={theta}");
        }
    }

    #[test]
    fn covariance_routes_agree() {
        let q = QuadratureSpec::default();
        let tp = half();
        let psi_route = covariance_rescaled(tp, &q).unwrap();
        let constant = PI * PI / 12.0 - 0.75;
        assert!((psi_route - constant).abs() < 1e-6);
        assert!((covariance_from_bridge_moments(tp) - constant).abs() < 1e-15);
        assert!((psi_route - 0.072_467_0).abs() < 1e-6);
        assert!(matches!(
            covariance_rescaled(ThetaParam::new(1.0).unwrap(), &q),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn gamma_mix_examples() {
        let q = QuadratureSpec::default();
        let acc = wide();
        let r = gamma_mix_check(
            |u| Ok(d::ks_cdf(u, &acc)?.value()),
            |x| Ok((x * half().rate()).tanh()),
            1.0,
            half(),
            &q,
        )
        .unwrap();
        assert!(r.abs() < 1e-6);
        let tp = ThetaParam::new(1.0).unwrap();
        let r = gamma_mix_check(
            |u| Ok(d::one_sided_tail(u)?.get()),
            |x| Ok((-2.0 * x * tp.rate()).exp()),
            0.7,
            tp,
            &q,
        )
        .unwrap();
        assert!(r.abs() < 1e-6);
        let r = gamma_mix_check(|_| Ok(1.0), |_| Ok(1.0), 0.7, tp, &q).unwrap();
        assert!(r.abs() < 1e-13);
    }

    #[test]
    fn gamma_mix_propagates_errors() {
        let q = QuadratureSpec::default();
        let err = gamma_mix(
            |_| Err(Error::InvalidInput("boom".into())),
            1.0,
            half(),
            &q,
        )
        .unwrap_err();
        assert_eq!(err, Error::InvalidInput("boom".into()));
    }
}
