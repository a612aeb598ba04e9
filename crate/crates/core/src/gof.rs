//! Kolmogorov-Smirnov, one-sided KS and Kuiper tests with asymptotic p-values.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::distributions::{kuiper_tail, ks_tail};
use crate::error::{Error, Result};
use crate::special::{arcsine_cdf, gamma_half_cdf, normal_cdf};
use crate::types::{Accuracy, Prob};

/// Below this many points the asymptotic p-values are flagged.
pub const DEFAULT_SMALL_N: usize = 20;

/// A nonempty sample sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
}

impl Sample {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("sample is empty".into()));
        }
        if let Some(i) = values.iter().position(|v| v.is_nan()) {
            return Err(Error::InvalidInput(format!("sample value {i} is NaN")));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Discrepancies {
    pub d_plus: f64,
    pub d_minus: f64,
    pub d: f64,
    pub v: f64,
}

/// One-sided and two-sided distances between the empirical CDF of `s` and
/// `null_cdf`. Null CDF values are clamped to `[0, 1]`.
pub fn ecdf_discrepancies<F: Fn(f64) -> f64>(s: &Sample, null_cdf: F) -> Discrepancies {
    let n = s.len() as f64;
    let mut d_plus = 0.0f64;
    let mut d_minus = 0.0f64;
    for (i, &x) in s.values.iter().enumerate() {
        let f = null_cdf(x).clamp(0.0, 1.0);
        d_plus = d_plus.max((i + 1) as f64 / n - f);
        d_minus = d_minus.max(f - i as f64 / n);
    }
    Discrepancies {
        d_plus,
        d_minus,
        d: d_plus.max(d_minus),
        v: d_plus + d_minus,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    Ks,
    KsPlus,
    Kuiper,
}

impl FromStr for TestKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ks" => Ok(TestKind::Ks),
            "ks-plus" | "ks_plus" => Ok(TestKind::KsPlus),
            "kuiper" => Ok(TestKind::Kuiper),
            _ => Err(Error::InvalidInput(format!(
                "unknown test `{s}` (expected ks, ks-plus or kuiper)"
            ))),
        }
    }
}

/// Field order is alphabetical so serialized reports have sorted keys.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GofReport {
    pub n: usize,
    pub p_value: Prob,
    pub small_n_warning: bool,
    pub stat_raw: f64,
    pub stat_scaled: f64,
    pub test: TestKind,
}

/// Null distributions available by name.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NullDist {
    Uniform,
    Normal { mu: f64, sigma: f64 },
    Exponential { rate: f64 },
    /// Gamma with shape 1/2 and rate `theta`.
    GammaHalf { theta: f64 },
    /// Beta(1/2, 1/2).
    Arcsine,
}

impl NullDist {
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            NullDist::Uniform => x.clamp(0.0, 1.0),
            NullDist::Normal { mu, sigma } => normal_cdf((x - mu) / sigma),
            NullDist::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            NullDist::GammaHalf { theta } => gamma_half_cdf(x, theta),
            NullDist::Arcsine => arcsine_cdf(x),
        }
    }
}

impl FromStr for NullDist {
    type Err = Error;

    /// `uniform`, `normal:mu,sigma`, `exp:rate`, `gamma-half:theta` or `arcsine`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, params) = s.split_once(':').unwrap_or((s, ""));
        let nums = |expected: usize| -> Result<Vec<f64>> {
            let parsed = if params.is_empty() {
                Vec::new()
            } else {
                params
                    .split(',')
                    .map(|p| p.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| Error::InvalidInput(format!("bad parameter in `{s}`: {e}")))?
            };
            if parsed.len() != expected {
                return Err(Error::InvalidInput(format!(
                    "`{name}` takes {expected} parameter(s), got {}",
                    parsed.len()
                )));
            }
            if parsed.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("non-finite parameter in `{s}`")));
            }
            Ok(parsed)
        };
        let positive = |what: &'static str, v: f64| {
            if v > 0.0 {
                Ok(v)
            } else {
                Err(Error::Domain {
                    name: what,
                    value: v,
                    constraint: "must be positive",
                })
            }
        };
        match name {
            "uniform" => nums(0).map(|_| NullDist::Uniform),
            "arcsine" => nums(0).map(|_| NullDist::Arcsine),
            "normal" => {
                let p = nums(2)?;
                Ok(NullDist::Normal {
                    mu: p[0],
                    sigma: positive("sigma", p[1])?,
                })
            }
            "exp" => Ok(NullDist::Exponential {
                rate: positive("rate", nums(1)?[0])?,
            }),
            "gamma-half" => Ok(NullDist::GammaHalf {
                theta: positive("theta", nums(1)?[0])?,
            }),
            _ => Err(Error::InvalidInput(format!(
                "unknown null distribution `{name}` (expected uniform, normal:mu,sigma, exp:rate, gamma-half:theta or arcsine)"
            ))),
        }
    }
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TestKind::Ks => "ks",
            TestKind::KsPlus => "ks-plus",
            TestKind::Kuiper => "kuiper",
        })
    }
}

/// Test options: series accuracy for the p-value and the small-sample flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GofOptions {
    pub accuracy: Accuracy,
    pub small_n: usize,
}

impl Default for GofOptions {
    fn default() -> Self {
        Self {
            accuracy: Accuracy::default(),
            small_n: DEFAULT_SMALL_N,
        }
    }
}

pub fn run_test<F: Fn(f64) -> f64>(
    kind: TestKind,
    s: &Sample,
    null_cdf: F,
    opts: &GofOptions,
) -> Result<GofReport> {
    let d = ecdf_discrepancies(s, null_cdf);
    let n = s.len();
    let root_n = (n as f64).sqrt();
    let (stat_raw, p_value) = match kind {
        TestKind::Ks => (d.d, ks_tail(root_n * d.d, &opts.accuracy)?.prob),
        TestKind::KsPlus => {
            let p = (-2.0 * n as f64 * d.d_plus * d.d_plus).exp();
            (d.d_plus, Prob::new(p.clamp(0.0, 1.0))?)
        }
        TestKind::Kuiper => (d.v, kuiper_tail(root_n * d.v, &opts.accuracy)?.prob),
    };
    Ok(GofReport {
        n,
        p_value,
        small_n_warning: n < opts.small_n,
        stat_raw,
        stat_scaled: root_n * stat_raw,
        test: kind,
    })
}

/// Two-sided KS test; p-value `1 - F_M(sqrt(n) D_n)`.
pub fn ks_test<F: Fn(f64) -> f64>(s: &Sample, null_cdf: F) -> Result<GofReport> {
    run_test(TestKind::Ks, s, null_cdf, &GofOptions::default())
}

/// One-sided KS test on `D_n+`; p-value `exp(-2 n D_n+^2)`.
pub fn ks_plus_test<F: Fn(f64) -> f64>(s: &Sample, null_cdf: F) -> Result<GofReport> {
    run_test(TestKind::KsPlus, s, null_cdf, &GofOptions::default())
}

/// Kuiper test; p-value `1 - F_K(sqrt(n) V_n)`.
pub fn kuiper_test<F: Fn(f64) -> f64>(s: &Sample, null_cdf: F) -> Result<GofReport> {
    run_test(TestKind::Kuiper, s, null_cdf, &GofOptions::default())
}
