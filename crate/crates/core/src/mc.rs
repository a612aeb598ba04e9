//! Monte Carlo oracles: Brownian bridges, Brownian motion killed at an
//! exponential time, last zeros, and the Vervaat transform.
//!
//! Paths live on a uniform grid. Extrema and last zeros between grid points
//! are either read off the grid ([`Refinement::Grid`]) or drawn from their
//! exact conditional laws given the two neighbouring grid values
//! ([`Refinement::Exact`]):
//!
//! * the maximum of a Brownian bridge from `a` to `b` over a step `h` is
//!   `(a + b + sqrt((a - b)^2 + 2 h E)) / 2` with `E ~ Exp(1)`,
//! * such a bridge with `ab > 0` touches zero with probability `exp(-2ab/h)`,
//! * the first zero of the time-reversed bridge solves
//!   `W(s) + (a/h) s = -b` with `tau = s h / (h + s)`, so `s` is inverse
//!   Gaussian with mean `|b| h / |a|` and shape `b^2` (Levy when `a = 0`).
//!
//! Grid extrema understate continuum extrema by roughly `0.58 / sqrt(n)`;
//! exact refinement removes that bias, up to the neglected dependence between
//! the maximum and the minimum inside the same grid step.

use rand::Rng;
use rand_distr::{Distribution, Exp, Exp1, InverseGaussian, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::laplace::ThetaParam;
use crate::rng::{PathRng, Streams};
use crate::series::Compensated;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PathKind {
    Bridge,
    BmKilled,
    Excursion,
}

/// A sampled path with its time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BridgePath {
    pub kind: PathKind,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl BridgePath {
    /// Builds a path on the uniform grid `i / n` of `[0, 1]`.
    pub fn on_unit_grid(kind: PathKind, values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidInput("a path needs at least two points".into()));
        }
        let n = (values.len() - 1) as f64;
        let times = (0..values.len()).map(|i| i as f64 / n).collect();
        Ok(Self {
            kind,
            times,
            values,
        })
    }

    pub fn n_steps(&self) -> usize {
        self.values.len() - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathExtrema {
    pub m_plus: f64,
    pub m_minus: f64,
    pub range: f64,
    pub argmin_time: f64,
}

impl PathExtrema {
    fn from_max_min(max: f64, min: f64, argmin_time: f64) -> Self {
        let m_plus = max;
        let m_minus = 0.0 - min;
        Self {
            m_plus,
            m_minus,
            range: m_plus + m_minus,
            argmin_time,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Refinement {
    /// Extrema and zeros are read off the grid (linear interpolation for zeros).
    Grid,
    /// Sub-grid extrema and zeros are drawn from their conditional laws.
    #[default]
    Exact,
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_paths: usize,
}

impl McEstimate {
    /// Mean and `sample std / sqrt(n)`, summed in index order with
    /// compensation so the result does not depend on how values were produced.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(Error::InvalidInput(format!(
                "an estimate needs at least 2 samples, got {n}"
            )));
        }
        let mut sum = Compensated::default();
        values.iter().for_each(|&v| sum.add(v));
        let mean = sum.total() / n as f64;
        let mut squares = Compensated::default();
        values.iter().for_each(|&v| squares.add((v - mean) * (v - mean)));
        let var = squares.total() / (n - 1) as f64;
        Ok(Self {
            mean,
            stderr: (var / n as f64).sqrt(),
            n_paths: n,
        })
    }
}

/// Path functionals whose expectations have closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "functional", rename_all = "snake_case")]
pub enum Functional {
    /// `1{M+ >= x}`
    OnesidedTail { x: f64 },
    /// `1{max(M+, M-) <= z}`
    MaxCdf { z: f64 },
    /// `1{min(M+, M-) > z}`
    MinTail { z: f64 },
    /// `1{M+ <= z, M- <= w}`
    JointCdf { z: f64, w: f64 },
    /// `1{M+ + M- <= x}`
    KuiperCdf { x: f64 },
    /// `1{M+ - M- >= z}`
    DiffTail { z: f64 },
    /// `1{M+ / M- <= z}`
    QuotientCdf { z: f64 },
    /// `M+ M-`
    ProductMoment,
}

impl Functional {
    pub fn evaluate(&self, e: &PathExtrema) -> f64 {
        let indicator = |b: bool| if b { 1.0 } else { 0.0 };
        match *self {
            Functional::OnesidedTail { x } => indicator(e.m_plus >= x),
            Functional::MaxCdf { z } => indicator(e.m_plus.max(e.m_minus) <= z),
            Functional::MinTail { z } => indicator(e.m_plus.min(e.m_minus) > z),
            Functional::JointCdf { z, w } => indicator(e.m_plus <= z && e.m_minus <= w),
            Functional::KuiperCdf { x } => indicator(e.range <= x),
            Functional::DiffTail { z } => indicator(e.m_plus - e.m_minus >= z),
            Functional::QuotientCdf { z } => indicator(e.m_plus <= z * e.m_minus),
            Functional::ProductMoment => e.m_plus * e.m_minus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
    /// Worker threads; `None` uses the ambient rayon pool.
    pub workers: Option<usize>,
    pub refinement: Refinement,
}

impl McConfig {
    pub fn new(n_paths: usize, n_steps: usize, seed: u64) -> Self {
        Self {
            n_paths,
            n_steps,
            seed,
            workers: None,
            refinement: Refinement::Exact,
        }
    }

    pub fn with_workers(self, workers: usize) -> Self {
        Self {
            workers: Some(workers),
            ..self
        }
    }

    pub fn with_refinement(self, refinement: Refinement) -> Self {
        Self { refinement, ..self }
    }

    fn validate(&self) -> Result<()> {
        if self.n_paths < 2 {
            return Err(Error::InvalidInput(format!(
                "n_paths must be at least 2, got {}",
                self.n_paths
            )));
        }
        check_steps(self.n_steps)?;
        if self.workers == Some(0) {
            return Err(Error::InvalidInput("workers must be at least 1".into()));
        }
        Ok(())
    }
}

// Family tags separating the experiments that share a user seed.
const FAMILY_BRIDGE: u64 = 1;
const FAMILY_KILLED: u64 = 2;
const FAMILY_LAST_ZERO: u64 = 3;
const FAMILY_VERVAAT: u64 = 4;

fn check_steps(n_steps: usize) -> Result<()> {
    if n_steps < 2 {
        Err(Error::InvalidInput(format!(
            "n_steps must be at least 2, got {n_steps}"
        )))
    } else {
        Ok(())
    }
}

/// Runs `job(index, rng, scratch)` for every index with its own stream and
/// returns the results in index order.
pub fn run_indexed<T, F>(
    n: usize,
    streams: Streams,
    workers: Option<usize>,
    job: F,
) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut PathRng, &mut Vec<f64>) -> T + Sync,
{
    let work = || {
        (0..n as u64)
            .into_par_iter()
            .map_init(Vec::new, |scratch, i| job(&mut streams.stream(i), scratch))
            .collect::<Vec<T>>()
    };
    match workers {
        None => Ok(work()),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Error::InvalidInput(format!("cannot start worker pool: {e}")))?;
            Ok(pool.install(work))
        }
    }
}

/// Fills `values` with a bridge on `n` steps: a Gaussian walk `W` with
/// variance `1/n` per step, pinned as `W[i] - (i/n) W[n]`.
fn fill_bridge<R: Rng + ?Sized>(n: usize, rng: &mut R, values: &mut Vec<f64>) {
    let scale = (1.0 / n as f64).sqrt();
    values.clear();
    values.push(0.0);
    let mut w = 0.0;
    for _ in 0..n {
        let z: f64 = StandardNormal.sample(rng);
        w += scale * z;
        values.push(w);
    }
    let end = w;
    for (i, v) in values.iter_mut().enumerate() {
        *v -= (i as f64 / n as f64) * end;
    }
    values[n] = 0.0;
}

pub fn sample_bridge_with(n_steps: usize, rng: &mut PathRng) -> Result<BridgePath> {
    check_steps(n_steps)?;
    let mut values = Vec::with_capacity(n_steps + 1);
    fill_bridge(n_steps, rng, &mut values);
    BridgePath::on_unit_grid(PathKind::Bridge, values)
}

/// A standard Brownian bridge on `n_steps` steps, deterministic in `seed`.
pub fn sample_bridge(n_steps: usize, seed: u64) -> Result<BridgePath> {
    sample_bridge_with(n_steps, &mut Streams::new(seed).family(FAMILY_BRIDGE).stream(0))
}

/// Grid extrema. The argmin is the earliest index attaining the minimum.
pub fn path_extrema(p: &BridgePath) -> PathExtrema {
    grid_extrema(&p.times, &p.values)
}

fn grid_extrema(times: &[f64], values: &[f64]) -> PathExtrema {
    let mut max = values[0];
    let mut min = values[0];
    let mut argmin = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > max {
            max = v;
        }
        if v < min {
            min = v;
            argmin = i;
        }
    }
    PathExtrema::from_max_min(max, min, times[argmin])
}

/// Sub-grid maximum of the bridge from `a` to `b` over a step `h`.
fn step_max<R: Rng + ?Sized>(a: f64, b: f64, h: f64, rng: &mut R) -> f64 {
    let e: f64 = Exp1.sample(rng);
    0.5 * (a + b + ((a - b) * (a - b) + 2.0 * h * e).sqrt())
}

fn step_min<R: Rng + ?Sized>(a: f64, b: f64, h: f64, rng: &mut R) -> f64 {
    let e: f64 = Exp1.sample(rng);
    0.5 * (a + b - ((a - b) * (a - b) + 2.0 * h * e).sqrt())
}

/// Continuum extrema of the piecewise-bridge interpolation of a grid path.
///
/// Per step the maximum and minimum are drawn independently; the argmin time
/// is the grid argmin.
fn refined_extrema_of<R: Rng + ?Sized>(times: &[f64], values: &[f64], rng: &mut R) -> PathExtrema {
    let grid = grid_extrema(times, values);
    let mut max = grid.m_plus;
    let mut min = -grid.m_minus;
    for i in 0..values.len() - 1 {
        let (a, b) = (values[i], values[i + 1]);
        let h = times[i + 1] - times[i];
        max = max.max(step_max(a, b, h, rng));
        min = min.min(step_min(a, b, h, rng));
    }
    PathExtrema::from_max_min(max, min, grid.argmin_time)
}

/// Extrema of the Brownian path interpolating `p`, drawn conditionally on
/// the grid values.
pub fn refined_extrema(p: &BridgePath, rng: &mut PathRng) -> PathExtrema {
    refined_extrema_of(&p.times, &p.values, rng)
}

fn bridge_extrema(n: usize, refinement: Refinement, rng: &mut PathRng, buf: &mut Vec<f64>) -> PathExtrema {
    fill_bridge(n, rng, buf);
    let h = 1.0 / n as f64;
    let mut max = 0.0f64;
    let mut min = 0.0f64;
    let mut argmin = 0;
    for (i, &v) in buf.iter().enumerate() {
        if v > max {
            max = v;
        }
        if v < min {
            min = v;
            argmin = i;
        }
    }
    if refinement == Refinement::Exact {
        for i in 0..n {
            let (a, b) = (buf[i], buf[i + 1]);
            max = max.max(step_max(a, b, h, rng));
            min = min.min(step_min(a, b, h, rng));
        }
    }
    PathExtrema::from_max_min(max, min, argmin as f64 * h)
}

/// Simulated extrema of `n_paths` bridges, path `i` drawn from stream `i`.
pub fn simulate_extrema(config: &McConfig) -> Result<Vec<PathExtrema>> {
    config.validate()?;
    let streams = Streams::new(config.seed).family(FAMILY_BRIDGE);
    let (n, refinement) = (config.n_steps, config.refinement);
    run_indexed(config.n_paths, streams, config.workers, |rng, buf| {
        bridge_extrema(n, refinement, rng, buf)
    })
}

/// Estimates several functionals on one shared set of paths.
pub fn estimate_many(functionals: &[Functional], config: &McConfig) -> Result<Vec<McEstimate>> {
    let extrema = simulate_extrema(config)?;
    functionals
        .iter()
        .map(|f| {
            let values: Vec<f64> = extrema.iter().map(|e| f.evaluate(e)).collect();
            McEstimate::from_values(&values)
        })
        .collect()
}

pub fn estimate(functional: Functional, config: &McConfig) -> Result<McEstimate> {
    Ok(estimate_many(&[functional], config)?[0])
}

/// Cyclic shift of a bridge at its (earliest) grid argmin, minus the minimum:
/// `e(t) = U((sigma + t) mod 1) - U(sigma)`.
pub fn vervaat_excursion(p: &BridgePath) -> Result<BridgePath> {
    if p.kind != PathKind::Bridge {
        return Err(Error::InvalidInput(
            "the Vervaat transform applies to bridges".into(),
        ));
    }
    let n = p.n_steps();
    let start = grid_extrema(&p.times, &p.values).argmin_time;
    let k = p.times.iter().position(|&t| t == start).unwrap_or(0) % n;
    let low = p.values[k];
    let values = (0..=n).map(|i| p.values[(k + i) % n] - low).collect();
    Ok(BridgePath {
        kind: PathKind::Excursion,
        times: p.times.clone(),
        values,
    })
}

/// Maximum of the continuum excursion obtained by shifting at the continuum
/// minimum: the sub-grid maximum of [`vervaat_excursion`] plus the depth of
/// the continuum minimum below the grid minimum.
pub fn vervaat_excursion_max(p: &BridgePath, rng: &mut PathRng) -> Result<f64> {
    let e = vervaat_excursion(p)?;
    let top = refined_extrema(&e, rng).m_plus;
    let grid_min = -path_extrema(p).m_minus;
    let mut min = grid_min;
    for i in 0..p.n_steps() {
        let h = p.times[i + 1] - p.times[i];
        min = min.min(step_min(p.values[i], p.values[i + 1], h, rng));
    }
    Ok(top + (grid_min - min))
}

/// `vervaat_excursion_max` for `n_paths` independent bridges.
pub fn sample_vervaat_maxima(config: &McConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let streams = Streams::new(config.seed).family(FAMILY_VERVAAT);
    let (n, refinement) = (config.n_steps, config.refinement);
    run_indexed(config.n_paths, streams, config.workers, |rng, _| {
        let p = sample_bridge_with(n, rng).expect("validated step count");
        match refinement {
            Refinement::Grid => path_extrema(&vervaat_excursion(&p).unwrap()).m_plus,
            Refinement::Exact => vervaat_excursion_max(&p, rng).unwrap(),
        }
    })
}

/// Last zero of a grid path by linear interpolation between grid points of
/// opposite sign. A grid value exactly 0 counts as a zero.
pub fn last_grid_zero(times: &[f64], values: &[f64]) -> f64 {
    for i in (0..values.len().saturating_sub(1)).rev() {
        let (a, b) = (values[i], values[i + 1]);
        if b == 0.0 {
            return times[i + 1];
        }
        if a * b < 0.0 {
            return times[i] + (times[i + 1] - times[i]) * a / (a - b);
        }
    }
    times[0]
}

/// Index `i` of the last step `[t_i, t_{i+1}]` containing a zero of the
/// interpolating Brownian path, with the zero's time.
fn last_zero_exact<R: Rng + ?Sized>(times: &[f64], values: &[f64], rng: &mut R) -> Option<(usize, f64)> {
    for i in (0..values.len() - 1).rev() {
        let (a, b) = (values[i], values[i + 1]);
        let h = times[i + 1] - times[i];
        if b == 0.0 {
            return Some((i, times[i + 1]));
        }
        let hits = a * b <= 0.0 || rng.random::<f64>() < (-2.0 * a * b / h).exp();
        if !hits {
            continue;
        }
        // reversed bridge starts at |b| and ends at a, measured on b's side
        let start = b.abs();
        let end = a * b.signum();
        let s = if end == 0.0 {
            let z: f64 = StandardNormal.sample(rng);
            start * start / (z * z)
        } else {
            let ig = InverseGaussian::new(start * h / end.abs(), start * start)
                .expect("positive inverse Gaussian parameters");
            ig.sample(rng)
        };
        let tau = if s.is_finite() { s * h / (h + s) } else { h };
        return Some((i, (times[i + 1] - tau).max(times[i])));
    }
    None
}

/// One draw of Brownian motion killed at `S ~ Exp(theta)`, with the last zero
/// `g` before `S` and the extrema over `[0, g]`.
#[derive(Debug, Clone, PartialEq)]
pub struct KilledSample {
    pub path: BridgePath,
    pub s_theta: f64,
    pub g: f64,
    /// `max B` over `[0, g]`
    pub max_before_g: f64,
    /// `-min B` over `[0, g]`
    pub neg_min_before_g: f64,
}

/// Brownian motion on a grid of mesh `1/n_steps_per_unit` up to `S`, plus the
/// final partial step ending at `S`.
pub fn sample_killed_bm_with(
    tp: ThetaParam,
    n_steps_per_unit: usize,
    refinement: Refinement,
    rng: &mut PathRng,
) -> Result<KilledSample> {
    if n_steps_per_unit == 0 {
        return Err(Error::InvalidInput("n_steps_per_unit must be positive".into()));
    }
    let s_theta: f64 = Exp::new(tp.theta()).expect("positive rate").sample(rng);
    let mesh = 1.0 / n_steps_per_unit as f64;
    let full = (s_theta / mesh).floor() as usize;
    let mut times: Vec<f64> = (0..=full).map(|i| i as f64 * mesh).collect();
    if s_theta > times[full] {
        times.push(s_theta);
    }
    let mut values = Vec::with_capacity(times.len());
    values.push(0.0);
    let mut b = 0.0;
    for w in times.windows(2) {
        let z: f64 = StandardNormal.sample(rng);
        b += (w[1] - w[0]).sqrt() * z;
        values.push(b);
    }

    let (g, max_before_g, neg_min_before_g) = match refinement {
        Refinement::Grid => {
            let g = last_grid_zero(&times, &values);
            let upto = times.iter().take_while(|&&t| t <= g).count();
            let e = grid_extrema(&times[..upto], &values[..upto]);
            (g, e.m_plus, e.m_minus)
        }
        Refinement::Exact => match last_zero_exact(&times, &values, rng) {
            None => (0.0, 0.0, 0.0),
            Some((j, g)) => {
                // steps before j are free bridges; [t_j, g] is a bridge from B(t_j) to 0
                let e = refined_extrema_of(&times[..=j], &values[..=j], rng);
                let a = values[j];
                let len = g - times[j];
                let top = step_max(a, 0.0, len, rng);
                let bottom = step_min(a, 0.0, len, rng);
                (g, e.m_plus.max(top), e.m_minus.max(-bottom))
            }
        },
    };
    Ok(KilledSample {
        path: BridgePath {
            kind: PathKind::BmKilled,
            times,
            values,
        },
        s_theta,
        g,
        max_before_g,
        neg_min_before_g,
    })
}

pub fn sample_killed_bm(tp: ThetaParam, n_steps_per_unit: usize, seed: u64) -> Result<KilledSample> {
    let mut rng = Streams::new(seed).family(FAMILY_KILLED).stream(0);
    sample_killed_bm_with(tp, n_steps_per_unit, Refinement::Exact, &mut rng)
}

/// `(g, max before g, -min before g)` for `config.n_paths` killed paths;
/// `config.n_steps` is the number of steps per unit time.
pub fn simulate_killed(tp: ThetaParam, config: &McConfig) -> Result<Vec<(f64, f64, f64)>> {
    config.validate()?;
    let streams = Streams::new(config.seed).family(FAMILY_KILLED);
    let (n, refinement) = (config.n_steps, config.refinement);
    run_indexed(config.n_paths, streams, config.workers, |rng, _| {
        let k = sample_killed_bm_with(tp, n, refinement, rng).expect("validated step count");
        (k.g, k.max_before_g, k.neg_min_before_g)
    })
}

fn last_zero_unit_bm_with(n_steps: usize, refinement: Refinement, rng: &mut PathRng, buf: &mut Vec<f64>) -> f64 {
    let scale = (1.0 / n_steps as f64).sqrt();
    buf.clear();
    buf.push(0.0);
    let mut b = 0.0;
    for _ in 0..n_steps {
        let z: f64 = StandardNormal.sample(rng);
        b += scale * z;
        buf.push(b);
    }
    let times: Vec<f64> = (0..=n_steps).map(|i| i as f64 / n_steps as f64).collect();
    match refinement {
        Refinement::Grid => last_grid_zero(&times, buf),
        Refinement::Exact => last_zero_exact(&times, buf, rng).map_or(0.0, |(_, g)| g),
    }
}

/// Last zero before time 1 of a Brownian motion sampled on `n_steps` steps.
pub fn last_zero_unit_bm(n_steps: usize, seed: u64) -> Result<f64> {
    check_steps(n_steps)?;
    let mut rng = Streams::new(seed).family(FAMILY_LAST_ZERO).stream(0);
    Ok(last_zero_unit_bm_with(n_steps, Refinement::Exact, &mut rng, &mut Vec::new()))
}

pub fn simulate_last_zeros(config: &McConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let streams = Streams::new(config.seed).family(FAMILY_LAST_ZERO);
    let (n, refinement) = (config.n_steps, config.refinement);
    run_indexed(config.n_paths, streams, config.workers, |rng, buf| {
        last_zero_unit_bm_with(n, refinement, rng, buf)
    })
}
