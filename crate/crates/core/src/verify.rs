//! Verification suites: Monte Carlo against closed forms, and gamma-mixture
//! quadrature against the rescaled closed forms.

use std::f64::consts::PI;
use std::str::FromStr;

use serde::Serialize;

use crate::distributions as d;
use crate::error::{Error, Result};
use crate::laplace::{self, RescaledKind, ThetaParam};
use crate::mc::{self, Functional, McConfig, McEstimate};
use crate::quadrature::QuadratureSpec;
use crate::special::{arcsine_cdf, gamma_half_cdf};
use crate::types::Accuracy;

/// Allowance added to `3 stderr` in Monte Carlo comparisons, covering the
/// residual time-discretization bias.
pub const DISCRETIZATION_ALLOWANCE: f64 = 0.01;

/// Largest accepted gamma-mixture residual.
pub const LAPLACE_TOL: f64 = 1e-6;

/// In the joint-law check the second coordinate is this multiple of the first.
pub const JOINT_RATIO: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Suite {
    Extrema,
    Excursion,
    #[default]
    All,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "extrema" => Ok(Suite::Extrema),
            "excursion" => Ok(Suite::Excursion),
            "all" => Ok(Suite::All),
            _ => Err(Error::InvalidInput(format!(
                "unknown suite `{s}` (expected extrema, excursion or all)"
            ))),
        }
    }
}

/// Keys are declared alphabetically so the JSON output is sorted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McCheck {
    pub check: String,
    pub closed_form: f64,
    pub mc_mean: f64,
    pub pass: bool,
    pub stderr: f64,
}

impl McCheck {
    fn new(check: impl Into<String>, closed_form: f64, est: McEstimate) -> Self {
        let pass = (est.mean - closed_form).abs() <= 3.0 * est.stderr + DISCRETIZATION_ALLOWANCE;
        Self {
            check: check.into(),
            closed_form,
            mc_mean: est.mean,
            pass,
            stderr: est.stderr,
        }
    }
}

fn indicator_estimate<T>(items: &[T], event: impl Fn(&T) -> bool) -> Result<McEstimate> {
    let values: Vec<f64> = items.iter().map(|x| if event(x) { 1.0 } else { 0.0 }).collect();
    McEstimate::from_values(&values)
}

fn extrema_checks(config: &McConfig) -> Result<Vec<McCheck>> {
    let acc = Accuracy::default();
    let cases: Vec<(String, Functional, f64)> = vec![
        (
            "onesided_tail(0.5)".into(),
            Functional::OnesidedTail { x: 0.5 },
            d::one_sided_tail(0.5)?.get(),
        ),
        (
            "max_cdf(1)".into(),
            Functional::MaxCdf { z: 1.0 },
            d::ks_cdf(1.0, &acc)?.value(),
        ),
        (
            "min_tail(0.5)".into(),
            Functional::MinTail { z: 0.5 },
            d::min_extremum_tail(0.5, &acc)?.value(),
        ),
        (
            "joint_cdf(0.8,0.6)".into(),
            Functional::JointCdf { z: 0.8, w: 0.6 },
            d::joint_cdf(0.8, 0.6, &acc)?.value(),
        ),
        (
            "kuiper_cdf(1)".into(),
            Functional::KuiperCdf { x: 1.0 },
            d::kuiper_cdf(1.0, &acc)?.value(),
        ),
        (
            "diff_tail(0.5)".into(),
            Functional::DiffTail { z: 0.5 },
            d::diff_tail(0.5, &acc)?.value(),
        ),
        (
            "quotient_cdf(2)".into(),
            Functional::QuotientCdf { z: 2.0 },
            d::quotient_cdf(2.0)?.get(),
        ),
        (
            "product_moment".into(),
            Functional::ProductMoment,
            d::extrema_moments().e_product,
        ),
    ];
    let functionals: Vec<Functional> = cases.iter().map(|c| c.1).collect();
    let estimates = mc::estimate_many(&functionals, config)?;
    Ok(cases
        .into_iter()
        .zip(estimates)
        .map(|((name, _, closed), est)| McCheck::new(name, closed, est))
        .collect())
}

fn excursion_checks(config: &McConfig) -> Result<Vec<McCheck>> {
    let acc = Accuracy::default();
    let mut out = Vec::new();

    let zeros = mc::simulate_last_zeros(config)?;
    out.push(McCheck::new(
        "last_zero_cdf(0.25)",
        arcsine_cdf(0.25),
        indicator_estimate(&zeros, |&g| g <= 0.25)?,
    ));

    for theta in [0.5, 2.0] {
        let tp = ThetaParam::new(theta)?;
        let killed = mc::simulate_killed(tp, config)?;
        out.push(McCheck::new(
            format!("killed_g_cdf(1;theta={theta})"),
            gamma_half_cdf(1.0, theta),
            indicator_estimate(&killed, |k| k.0 <= 1.0)?,
        ));
        if theta == 0.5 {
            out.push(McCheck::new(
                "killed_pair_joint_cdf(1,0.5;theta=0.5)",
                laplace::rescaled_law(RescaledKind::JointCdf, 1.0, Some(0.5), tp)?.get(),
                indicator_estimate(&killed, |k| k.1 <= 1.0 && k.2 <= 0.5)?,
            ));
            out.push(McCheck::new(
                "killed_pair_max_cdf(1;theta=0.5)",
                laplace::rescaled_law(RescaledKind::MaxCdf, 1.0, None, tp)?.get(),
                indicator_estimate(&killed, |k| k.1.max(k.2) <= 1.0)?,
            ));
        }
    }

    let maxima = mc::sample_vervaat_maxima(config)?;
    out.push(McCheck::new(
        "vervaat_max_cdf(1)",
        d::kuiper_cdf(1.0, &acc)?.value(),
        indicator_estimate(&maxima, |&m| m <= 1.0)?,
    ));
    out.push(McCheck::new(
        "vervaat_max_mean",
        (PI / 2.0).sqrt(),
        McEstimate::from_values(&maxima)?,
    ));
    Ok(out)
}

/// Runs the Monte Carlo suites. Every check shares `config`; for the killed
/// Brownian motion `n_steps` is the number of steps per unit time.
pub fn mc_verify(config: &McConfig, suite: Suite) -> Result<Vec<McCheck>> {
    let mut out = Vec::new();
    if matches!(suite, Suite::Extrema | Suite::All) {
        out.extend(extrema_checks(config)?);
    }
    if matches!(suite, Suite::Excursion | Suite::All) {
        out.extend(excursion_checks(config)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LaplaceCheck {
    pub kind: String,
    pub pass: bool,
    pub residual: f64,
    pub x: f64,
}

/// `a:b:h` grid, inclusive of `b` up to rounding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub from: f64,
    pub to: f64,
    pub step: f64,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            from: 0.2,
            to: 3.0,
            step: 0.2,
        }
    }
}

impl Grid {
    pub fn new(from: f64, to: f64, step: f64) -> Result<Self> {
        if !(from.is_finite() && to.is_finite() && step.is_finite()) || step <= 0.0 || to < from {
            return Err(Error::InvalidInput(format!(
                "grid needs finite from <= to and step > 0, got {from}:{to}:{step}"
            )));
        }
        if (to - from) / step > 1e6 {
            return Err(Error::InvalidInput("grid has more than a million points".into()));
        }
        Ok(Self { from, to, step })
    }

    /// Points `from + i step`, rounded to 12 decimals so that `0.2:3:0.2`
    /// yields `0.6` and `3` rather than their binary neighbours.
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.to - self.from) / self.step + 1e-9).floor() as usize;
        (0..=count)
            .map(|i| {
                let x = self.from + i as f64 * self.step;
                format!("{x:.12}").parse().unwrap_or(x)
            })
            .collect()
    }
}

impl FromStr for Grid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::InvalidInput(format!("grid `{s}` is not of the form a:b:h")));
        }
        let mut v = [0.0; 3];
        for (slot, p) in v.iter_mut().zip(&parts) {
            *slot = p
                .trim()
                .parse()
                .map_err(|e| Error::InvalidInput(format!("bad grid value `{p}`: {e}")))?;
        }
        Grid::new(v[0], v[1], v[2])
    }
}

fn series_accuracy() -> Accuracy {
    // mixing evaluates the bridge laws at arguments down to x / V, far
    // below the usual range, so the term cap is raised
    Accuracy::new(1e-14, 100_000).expect("valid accuracy")
}

/// Gamma-mixture residual of one rescaled law at `x`.
pub fn laplace_residual(kind: RescaledKind, x: f64, tp: ThetaParam, q: &QuadratureSpec) -> Result<f64> {
    let acc = series_accuracy();
    let rescaled = |u: f64| -> Result<f64> {
        let y = (kind == RescaledKind::JointCdf).then_some(JOINT_RATIO * u);
        Ok(laplace::rescaled_law(kind, u, y, tp)?.get())
    };
    match kind {
        RescaledKind::OnesidedTail => {
            laplace::gamma_mix_check(|u| Ok(d::one_sided_tail(u)?.get()), rescaled, x, tp, q)
        }
        RescaledKind::MaxCdf => {
            laplace::gamma_mix_check(|u| Ok(d::ks_cdf(u, &acc)?.value()), rescaled, x, tp, q)
        }
        RescaledKind::MinTail => laplace::gamma_mix_check(
            |u| Ok(d::min_extremum_tail(u, &acc)?.value()),
            rescaled,
            x,
            tp,
            q,
        ),
        RescaledKind::JointCdf => laplace::gamma_mix_check(
            |u| Ok(d::joint_cdf(u, JOINT_RATIO * u, &acc)?.value()),
            rescaled,
            x,
            tp,
            q,
        ),
        RescaledKind::SumCdf => {
            laplace::gamma_mix_check(|u| Ok(d::kuiper_cdf(u, &acc)?.value()), rescaled, x, tp, q)
        }
    }
}

/// Residual between the quadrature form of the rescaled difference tail and
/// the gamma mixture of the bridge difference tail.
pub fn diff_route_residual(z: f64, tp: ThetaParam, q: &QuadratureSpec) -> Result<f64> {
    let acc = series_accuracy();
    let direct = laplace::rescaled_diff_tail(z, tp, q)?.get();
    let mixed = laplace::gamma_mix(|u| Ok(d::diff_tail(u, &acc)?.value()), z, tp, q)?;
    Ok(mixed - direct)
}

/// All five rescaled kinds plus the difference law on every grid point.
pub fn laplace_verify(tp: ThetaParam, grid: &Grid) -> Result<Vec<LaplaceCheck>> {
    let q = QuadratureSpec::default();
    let points = grid.points();
    let mut out = Vec::new();
    let mut push = |kind: &str, x: f64, residual: f64| {
        out.push(LaplaceCheck {
            kind: kind.to_string(),
            pass: residual.abs() < LAPLACE_TOL,
            residual,
            x,
        })
    };
    for kind in RescaledKind::ALL {
        for &x in &points {
            push(kind.name(), x, laplace_residual(kind, x, tp, &q)?);
        }
    }
    for &x in &points {
        push("diff_tail", x, diff_route_residual(x, tp, &q)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g: Grid = "0.2:3:0.2".parse().unwrap();
        let p = g.points();
        assert_eq!(p.len(), 15);
        assert_eq!(p[14], 3.0);
        assert_eq!(p[2], 0.6);
        assert_eq!("1:1:0.5".parse::<Grid>().unwrap().points(), vec![1.0]);
        for bad in ["1:2", "a:2:1", "2:1:0.1", "0:1:0", "0:1:-1"] {
            assert!(bad.parse::<Grid>().is_err(), "{bad}");
        }
    }

    #[test]
    fn laplace_verify_passes_on_small_grid() {
        let tp = ThetaParam::new(1.0).unwrap();
        let checks = laplace_verify(tp, &Grid::new(0.5, 1.5, 0.5).unwrap()).unwrap();
        assert_eq!(checks.len(), 18);
        assert!(checks.iter().all(|c| c.pass), "{checks:?}");
    }

    #[test]
    fn mc_verify_small_run_is_deterministic() {
        let config = McConfig::new(400, 64, 3);
        let a = mc_verify(&config.with_workers(1), Suite::All).unwrap();
        let b = mc_verify(&config.with_workers(3), Suite::All).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 8 + 7);
        assert!(mc_verify(&McConfig::new(1, 64, 3), Suite::Extrema).is_err());
    }

    #[test]
    fn suite_names() {
        assert_eq!("all".parse::<Suite>().unwrap(), Suite::All);
        assert!("both".parse::<Suite>().is_err());
    }
}
