//! Closed-form laws of the extrema of a standard Brownian bridge `U` on [0, 1].
//!
//! With `M+ = max U`, `M- = -min U`, `M = max(M+, M-)`, `m = min(M+, M-)`,
//! `K = M+ + M-` and `Q = M+ / M-`:
//!
//! | function              | quantity              |
//! |-----------------------|-----------------------|
//! | [`one_sided_tail`]    | `P(M+ >= x)`          |
//! | [`ks_cdf`]            | `P(M <= z)`           |
//! | [`min_extremum_tail`] | `P(m > z)`            |
//! | [`joint_cdf`]         | `P(M+ <= z, M- <= w)` |
//! | [`kuiper_cdf`]        | `P(K <= x)`           |
//! | [`diff_tail`]         | `P(M+ - M- >= z)`     |
//! | [`quotient_cdf`]      | `P(Q <= z)`           |
//!
//! The theta-type series converge like `exp(-2 k^2 z^2)`, which is slow for
//! small arguments. Below [`DUAL_SWITCH`] the Kolmogorov, joint and Kuiper
//! series are evaluated through their Jacobi-transformed forms, which converge
//! like `exp(-pi^2 k^2 / (2 z^2))` instead.

use std::f64::consts::{PI, SQRT_2};

use serde::Serialize;

use crate::error::{check_nonneg, Error, Result};
use crate::series::{geometric_tail, sum_with_bound, Partial};
use crate::types::{Accuracy, Evaluation, Prob};

/// Arguments below this use the Jacobi-transformed series.
pub const DUAL_SWITCH: f64 = 1.0;

/// `sqrt(2 pi)`
const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

fn finish(acc: &Accuracy, p: Partial) -> Result<Evaluation> {
    Ok(Evaluation {
        prob: acc.clamp(p.sum)?,
        trunc_bound: p.bound,
        terms: p.terms,
    })
}

/// `P(M+ >= x) = exp(-2 x^2)`.
pub fn one_sided_tail(x: f64) -> Result<Prob> {
    check_nonneg("x", x)?;
    Ok(Prob::new((-2.0 * x * x).exp()).expect("exp of a nonpositive number"))
}

/// Jacobi form of the Kolmogorov law,
/// `sqrt(2 pi) / z * sum_{k>=1} exp(-(2k-1)^2 pi^2 / (8 z^2))`.
fn ks_cdf_dual(z: f64, acc: &Accuracy) -> Result<Partial> {
    let log_pref = SQRT_2PI.ln() - z.ln();
    let a = PI * PI / (8.0 * z * z);
    let term = |k: usize| {
        let odd = (2 * k - 1) as f64;
        (log_pref - a * odd * odd).exp()
    };
    sum_with_bound(acc, 0.0, |k| {
        let ratio = (-8.0 * a * (k + 1) as f64).exp();
        (term(k), geometric_tail(term(k + 1), ratio))
    })
}

/// `sum_{n>=1} (-1)^(n+1) exp(-2 n^2 z^2)` scaled by 2, the upper tail of `M`.
fn ks_tail_direct(z: f64, acc: &Accuracy) -> Result<Partial> {
    let z2 = z * z;
    sum_with_bound(acc, 0.0, |n| {
        let nf = n as f64;
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        let term = 2.0 * sign * (-2.0 * nf * nf * z2).exp();
        let next = 2.0 * (-2.0 * (nf + 1.0) * (nf + 1.0) * z2).exp();
        (term, next)
    })
}

/// Kolmogorov-Smirnov law, `P(M <= z) = sum_{n in Z} (-1)^n exp(-2 n^2 z^2)`.
///
/// `z = 0` returns 0, the limit value (`M > 0` almost surely).
pub fn ks_cdf(z: f64, acc: &Accuracy) -> Result<Evaluation> {
    check_nonneg("z", z)?;
    if z == 0.0 {
        return Ok(Evaluation::exact(Prob::ZERO));
    }
    if z.is_infinite() {
        return Ok(Evaluation::exact(Prob::ONE));
    }
    if z < DUAL_SWITCH {
        finish(acc, ks_cdf_dual(z, acc)?)
    } else {
        let tail = ks_tail_direct(z, acc)?;
        finish(
            acc,
            Partial {
                sum: 1.0 - tail.sum,
                ..tail
            },
        )
    }
}

/// Upper tail `P(M > z)`, summed directly so that small p-values keep
/// their relative precision.
pub fn ks_tail(z: f64, acc: &Accuracy) -> Result<Evaluation> {
    check_nonneg("z", z)?;
    if z == 0.0 {
        return Ok(Evaluation::exact(Prob::ONE));
    }
    if z.is_infinite() {
        return Ok(Evaluation::exact(Prob::ZERO));
    }
    if z < DUAL_SWITCH {
        let cdf = ks_cdf_dual(z, acc)?;
        finish(
            acc,
            Partial {
                sum: 1.0 - cdf.sum,
                ..cdf
            },
        )
    } else {
        finish(acc, ks_tail_direct(z, acc)?)
    }
}

/// Tail of the smaller extremum, `P(m > z) = 2 sum_{n>=2} (-1)^n exp(-2 n^2 z^2)`.
///
/// `z = 0` returns 1. Below [`DUAL_SWITCH`] the identity
/// `P(m > z) = P(M <= z) + 2 exp(-2 z^2) - 1` is used with the Jacobi form of
/// the Kolmogorov law.
pub fn min_extremum_tail(z: f64, acc: &Accuracy) -> Result<Evaluation> {
    check_nonneg("z", z)?;
    if z == 0.0 {
        return Ok(Evaluation::exact(Prob::ONE));
    }
    if z.is_infinite() {
        return Ok(Evaluation::exact(Prob::ZERO));
    }
    if z < DUAL_SWITCH {
        let cdf = ks_cdf_dual(z, acc)?;
        let sum = cdf.sum + 2.0 * (-2.0 * z * z).exp() - 1.0;
        return finish(acc, Partial { sum, ..cdf });
    }
    let z2 = z * z;
    let p = sum_with_bound(acc, 0.0, |k| {
        let n = (k + 1) as f64;
        let sign = if (k + 1) % 2 == 0 { 1.0 } else { -1.0 };
        let term = 2.0 * sign * (-2.0 * n * n * z2).exp();
        let next = 2.0 * (-2.0 * (n + 1.0) * (n + 1.0) * z2).exp();
        (term, next)
    })?;
    finish(acc, p)
}

/// Joint law `P(M+ <= z, M- <= w)`:
///
/// `sum_k exp(-2 k^2 (z+w)^2) - sum_k exp(-2 (k (z+w) + z)^2)`.
///
/// Returns 0 when either argument is 0. An infinite argument reduces to the
/// marginal `1 - exp(-2 x^2)` of the other.
pub fn joint_cdf(z: f64, w: f64, acc: &Accuracy) -> Result<Evaluation> {
    check_nonneg("z", z)?;
    check_nonneg("w", w)?;
    if z == 0.0 || w == 0.0 {
        return Ok(Evaluation::exact(Prob::ZERO));
    }
    match (z.is_infinite(), w.is_infinite()) {
        (true, true) => return Ok(Evaluation::exact(Prob::ONE)),
        (true, false) => return Ok(Evaluation::exact(one_sided_tail(w)?.complement())),
        (false, true) => return Ok(Evaluation::exact(one_sided_tail(z)?.complement())),
        (false, false) => {}
    }
    let s = z + w;
    let p = if s < 2.0 * DUAL_SWITCH {
        joint_dual(z, s, acc)?
    } else {
        joint_direct(z, w, s, acc)?
    };
    finish(acc, p)
}

fn joint_direct(z: f64, w: f64, s: f64, acc: &Accuracy) -> Result<Partial> {
    // |k-th folded term| <= 2 exp(-2 ((k-1) s + w)^2), since k s - z = (k-1) s + w.
    let envelope = |k: usize| {
        let u = (k - 1) as f64 * s + w;
        2.0 * (-2.0 * u * u).exp()
    };
    let start = 1.0 - (-2.0 * z * z).exp();
    sum_with_bound(acc, start, |k| {
        let ks = k as f64 * s;
        let term = 2.0 * (-2.0 * ks * ks).exp()
            - (-2.0 * (ks + z) * (ks + z)).exp()
            - (-2.0 * (ks - z) * (ks - z)).exp();
        let ratio = (-2.0 * s * ((2 * k + 1) as f64 * s + 2.0 * w)).exp();
        (term, geometric_tail(envelope(k + 1), ratio))
    })
}

/// Poisson-summed joint law,
/// `sqrt(2 pi) / s * sum_{j>=1} exp(-pi^2 j^2 / (2 s^2)) (1 - cos(2 pi j z / s))`.
fn joint_dual(z: f64, s: f64, acc: &Accuracy) -> Result<Partial> {
    let log_pref = SQRT_2PI.ln() - s.ln();
    let b = PI * PI / (2.0 * s * s);
    let phase = 2.0 * PI * z / s;
    sum_with_bound(acc, 0.0, |j| {
        let jf = j as f64;
        let term = (log_pref - b * jf * jf).exp() * (1.0 - (phase * jf).cos());
        let next = 2.0 * (log_pref - b * (jf + 1.0) * (jf + 1.0)).exp();
        let ratio = (-b * (2.0 * jf + 3.0)).exp();
        (term, geometric_tail(next, ratio))
    })
}

/// Jacobi form of the Kuiper law,
/// `sqrt(2 pi) pi^2 / x^3 * sum_{j>=1} j^2 exp(-pi^2 j^2 / (2 x^2))`.
fn kuiper_cdf_dual(x: f64, acc: &Accuracy) -> Result<Partial> {
    let log_pref = (SQRT_2PI * PI * PI).ln() - 3.0 * x.ln();
    let b = PI * PI / (2.0 * x * x);
    let term = |j: f64| (log_pref + 2.0 * j.ln() - b * j * j).exp();
    sum_with_bound(acc, 0.0, |j| {
        let jf = j as f64;
        let r = ((jf + 2.0) / (jf + 1.0)).powi(2) * (-b * (2.0 * jf + 3.0)).exp();
        (term(jf), geometric_tail(term(jf + 1.0), r))
    })
}

/// `-2 sum_{k>=1} (1 - 4 k^2 x^2) exp(-2 k^2 x^2)`, the upper tail of `K`.
fn kuiper_tail_direct(x: f64, acc: &Accuracy) -> Result<Partial> {
    let x2 = x * x;
    let magnitude = |k: f64| 2.0 * (4.0 * k * k * x2 - 1.0) * (-2.0 * k * k * x2).exp();
    sum_with_bound(acc, 0.0, |k| {
        let kf = k as f64;
        let next = magnitude(kf + 1.0);
        // term ratios decrease once k x > 1/2, which holds from k = 1 on here
        let ratio = magnitude(kf + 2.0) / next;
        (magnitude(kf), geometric_tail(next, ratio))
    })
}

/// Kuiper law, `P(M+ + M- <= x) = sum_{k in Z} (1 - 4 k^2 x^2) exp(-2 k^2 x^2)`.
///
/// `x = 0` returns 0.
pub fn kuiper_cdf(x: f64, acc: &Accuracy) -> Result<Evaluation> {
    check_nonneg("x", x)?;
    if x == 0.0 {
        return Ok(Evaluation::exact(Prob::ZERO));
    }
    if x.is_infinite() {
        return Ok(Evaluation::exact(Prob::ONE));
    }
    if x < DUAL_SWITCH {
        finish(acc, kuiper_cdf_dual(x, acc)?)
    } else {
        let tail = kuiper_tail_direct(x, acc)?;
        finish(
            acc,
            Partial {
                sum: 1.0 - tail.sum,
                ..tail
            },
        )
    }
}

/// Upper tail `P(M+ + M- > x)`.
pub fn kuiper_tail(x: f64, acc: &Accuracy) -> Result<Evaluation> {
    check_nonneg("x", x)?;
    if x == 0.0 {
        return Ok(Evaluation::exact(Prob::ONE));
    }
    if x.is_infinite() {
        return Ok(Evaluation::exact(Prob::ZERO));
    }
    if x < DUAL_SWITCH {
        let cdf = kuiper_cdf_dual(x, acc)?;
        finish(
            acc,
            Partial {
                sum: 1.0 - cdf.sum,
                ..cdf
            },
        )
    } else {
        finish(acc, kuiper_tail_direct(x, acc)?)
    }
}

/// Tail of the difference, `P(M+ - M- >= z) = sum_{k>=1} exp(-2 k^2 z^2) / (4 k^2 - 1)`.
///
/// `z = 0` returns exactly 1/2. Convergence is only polynomial as `z -> 0`,
/// so very small arguments need a larger `max_terms`.
pub fn diff_tail(z: f64, acc: &Accuracy) -> Result<Evaluation> {
    check_nonneg("z", z)?;
    if z == 0.0 {
        return Ok(Evaluation::exact(Prob::new(0.5).unwrap()));
    }
    if z.is_infinite() {
        return Ok(Evaluation::exact(Prob::ZERO));
    }
    let z2 = z * z;
    let term = |k: f64| (-2.0 * k * k * z2).exp() / (4.0 * k * k - 1.0);
    let p = sum_with_bound(acc, 0.0, |k| {
        let kf = k as f64;
        // sum_{j>k} 1/(4 j^2 - 1) = 1 / (2 (2k + 1))
        let telescoped = (-2.0 * (kf + 1.0) * (kf + 1.0) * z2).exp() / (2.0 * (2.0 * kf + 1.0));
        let next = term(kf + 1.0);
        let geometric = geometric_tail(next, term(kf + 2.0) / next);
        (term(kf), telescoped.min(geometric))
    })?;
    finish(acc, p)
}

/// Quotient law, `P(M+ / M- <= z) = (1 - p)(1 - pi p cot(pi p))` with `p = z / (z + 1)`.
///
/// This is the same expression as `(1/(z+1)) (1 - pi z cot(pi z/(z+1)) / (z+1))`.
/// The removable singularity at `z = 0` is handled by the expansion
/// `1 - a cot a = a^2/3 + a^4/45 + 2 a^6/945 + ...`.
pub fn quotient_cdf(z: f64) -> Result<Prob> {
    check_nonneg("z", z)?;
    if z.is_infinite() {
        return Ok(Prob::ONE);
    }
    let p = z / (z + 1.0);
    let a = PI * p;
    let one_minus_acot = if z < 1e-6 {
        let a2 = a * a;
        a2 / 3.0 + a2 * a2 / 45.0 + 2.0 * a2 * a2 * a2 / 945.0
    } else if p < 0.25 {
        1.0 - a * a.cos() / a.sin()
    } else {
        // cot(pi p) = tan(pi (1/2 - p)); exact zero at p = 1/2
        1.0 - a * (PI * (0.5 - p)).tan()
    };
    let value = (1.0 - p) * one_minus_acot;
    Ok(Prob::new(value.clamp(0.0, 1.0)).unwrap())
}

/// Moments of `(M+, M-)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtremaMoments {
    /// `E(M+) = E(M-) = sqrt(2 pi) / 4`
    pub mean_mplus: f64,
    /// `var(M+) = 1/2 - pi/8`
    pub var_mplus: f64,
    /// `E(M+ M-) = pi^2/12 - 1/2`
    pub e_product: f64,
    /// `cov(M+, M-) = pi^2/12 - 1/2 - pi/8`
    pub cov: f64,
    pub corr: f64,
}

pub fn extrema_moments() -> ExtremaMoments {
    let mean_mplus = SQRT_2 * PI.sqrt() / 4.0;
    let var_mplus = 0.5 - PI / 8.0;
    let e_product = PI * PI / 12.0 - 0.5;
    let cov = e_product - mean_mplus * mean_mplus;
    ExtremaMoments {
        mean_mplus,
        var_mplus,
        e_product,
        cov,
        corr: cov / var_mplus,
    }
}

/// The laws exposed by name, for command-line and tabulation use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Law {
    Ks,
    Kuiper,
    Min,
    Diff,
    Quotient,
    Joint,
    Onesided,
}

impl Law {
    pub const ALL: [Law; 7] = [
        Law::Ks,
        Law::Kuiper,
        Law::Min,
        Law::Diff,
        Law::Quotient,
        Law::Joint,
        Law::Onesided,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Law::Ks => "ks",
            Law::Kuiper => "kuiper",
            Law::Min => "min",
            Law::Diff => "diff",
            Law::Quotient => "quotient",
            Law::Joint => "joint",
            Law::Onesided => "onesided",
        }
    }

    pub fn arity(self) -> usize {
        if self == Law::Joint {
            2
        } else {
            1
        }
    }

    pub fn evaluate(self, args: &[f64], acc: &Accuracy) -> Result<Evaluation> {
        if args.len() != self.arity() {
            return Err(Error::InvalidInput(format!(
                "{} takes {} argument(s), got {}",
                self.name(),
                self.arity(),
                args.len()
            )));
        }
        let x = args[0];
        match self {
            Law::Ks => ks_cdf(x, acc),
            Law::Kuiper => kuiper_cdf(x, acc),
            Law::Min => min_extremum_tail(x, acc),
            Law::Diff => diff_tail(x, acc),
            Law::Quotient => quotient_cdf(x).map(Evaluation::exact),
            Law::Joint => joint_cdf(x, args[1], acc),
            Law::Onesided => one_sided_tail(x).map(Evaluation::exact),
        }
    }
}

impl std::str::FromStr for Law {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Law::ALL
            .into_iter()
            .find(|law| law.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown distribution '{s}'")))
    }
}
