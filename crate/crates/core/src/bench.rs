//! Synthetic targets, datasets and benchmark sweeps.
//!
//! Sweep cells other than timings run on a rayon pool whose size is read
//! from `DMP_BENCH_THREADS` (all cores when unset). Timing cells always run
//! one after another on the calling thread.

use std::f64::consts::PI;
use std::io::Write;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::basis::{BasisFamily, BasisSet, DEFAULT_OVERLAP};
use crate::error::{DmpError, Result};
use crate::learn::{self, assemble_matrix, assemble_rhs_on, extract_forcing, ForcingForm, ForcingSamples, Gains};
use crate::linalg::{condition_number, Factorization};
use crate::phase::PhaseConfig;
use crate::quadrature::Quadrature;
use crate::regress::DemoSet;
use crate::trajectory::Trajectory;

/// Environment variable holding the worker count for parallel sweeps.
pub const THREADS_ENV: &str = "DMP_BENCH_THREADS";

/// Integration step of the limit-cycle dataset.
pub const LIMIT_CYCLE_DT: f64 = 1e-3;

/// Largest accepted distance of a limit-cycle endpoint from the origin.
pub const LIMIT_CYCLE_TOL: f64 = 0.02;

/// Synthetic curves with closed-form derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetKind {
    /// `t^2 cos(pi t)` on `[0, 1]`.
    HatEta,
    /// `(t, sin^2 t)` on `[0, pi]`.
    PlaneCurve,
    /// `(t^2 cos t, t sin t)` on `[0, 2 pi]`.
    SpiralCurve,
}

impl TargetKind {
    pub fn horizon(&self) -> f64 {
        match self {
            TargetKind::HatEta => 1.0,
            TargetKind::PlaneCurve => PI,
            TargetKind::SpiralCurve => 2.0 * PI,
        }
    }

    pub fn dims(&self) -> usize {
        match self {
            TargetKind::HatEta => 1,
            _ => 2,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            TargetKind::HatEta => "hat-eta",
            TargetKind::PlaneCurve => "plane-curve",
            TargetKind::SpiralCurve => "spiral-curve",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "hat-eta" | "hat_eta" => Ok(TargetKind::HatEta),
            "plane-curve" | "plane_curve" => Ok(TargetKind::PlaneCurve),
            "spiral-curve" | "spiral_curve" => Ok(TargetKind::SpiralCurve),
            other => Err(DmpError::invalid("target", format!("unknown target `{other}`"))),
        }
    }

    /// Position, velocity and acceleration at `t`.
    pub fn eval(&self, t: f64) -> [Vec<f64>; 3] {
        let (s, c) = t.sin_cos();
        match self {
            TargetKind::HatEta => {
                let (sp, cp) = (PI * t).sin_cos();
                [
                    vec![t * t * cp],
                    vec![2.0 * t * cp - PI * t * t * sp],
                    vec![2.0 * cp - 4.0 * PI * t * sp - PI * PI * t * t * cp],
                ]
            }
            TargetKind::PlaneCurve => [
                vec![t, s * s],
                vec![1.0, (2.0 * t).sin()],
                vec![0.0, 2.0 * (2.0 * t).cos()],
            ],
            TargetKind::SpiralCurve => [
                vec![t * t * c, t * s],
                vec![2.0 * t * c - t * t * s, s + t * c],
                vec![2.0 * c - 4.0 * t * s - t * t * c, 2.0 * c - t * s],
            ],
        }
    }
}

/// `n` uniform samples of a target with exact derivatives.
pub fn gen_target(kind: TargetKind, n: usize) -> Result<Trajectory> {
    if n < 4 {
        return Err(DmpError::TrajectoryTooShort { found: n, required: 4 });
    }
    let horizon = kind.horizon();
    let d = kind.dims();
    let times: Vec<f64> = (0..n)
        .map(|k| if k == n - 1 { horizon } else { horizon * k as f64 / (n - 1) as f64 })
        .collect();
    let mut x = DMatrix::zeros(n, d);
    let mut v = DMatrix::zeros(n, d);
    let mut a = DMatrix::zeros(n, d);
    for (k, &t) in times.iter().enumerate() {
        let [p, dp, ddp] = kind.eval(t);
        for j in 0..d {
            x[(k, j)] = p[j];
            v[(k, j)] = dp[j];
            a[(k, j)] = ddp[j];
        }
    }
    Trajectory::with_derivatives(times, x, Some(v), Some(a))
}

fn limit_cycle_field(x: &[f64; 2]) -> [f64; 2] {
    let (x1, x2) = (x[0], x[1]);
    [
        x1 * x1 * x1 + x2 * x2 * x1 - x1 - x2,
        x2 * x2 * x2 + x1 * x1 * x2 + x1 - x2,
    ]
}

/// RK4 solution of the planar system with an attracting origin, from
/// `start` over `[0, duration]` at step [`LIMIT_CYCLE_DT`].
pub fn limit_cycle_demo(start: [f64; 2], duration: f64) -> Result<Trajectory> {
    if !(duration.is_finite() && duration > 0.0) {
        return Err(DmpError::invalid("duration", format!("must be positive, got {duration}")));
    }
    let steps = ((duration / LIMIT_CYCLE_DT).round() as usize).max(3);
    let h = duration / steps as f64;
    let mut x = start;
    let mut positions = DMatrix::zeros(steps + 1, 2);
    let mut times = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        times.push(if k == steps { duration } else { k as f64 * h });
        positions[(k, 0)] = x[0];
        positions[(k, 1)] = x[1];
        let add = |a: &[f64; 2], b: &[f64; 2], w: f64| [a[0] + w * b[0], a[1] + w * b[1]];
        let k1 = limit_cycle_field(&x);
        let k2 = limit_cycle_field(&add(&x, &k1, 0.5 * h));
        let k3 = limit_cycle_field(&add(&x, &k2, 0.5 * h));
        let k4 = limit_cycle_field(&add(&x, &k3, h));
        for j in 0..2 {
            x[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
    }
    Trajectory::new(times, positions)
}

/// Generator for stream `stream` of `seed`: every demonstration gets its own
/// ChaCha8 stream so datasets can grow without changing earlier demos.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `m` limit-cycle demonstrations from seeded draws of the initial radius
/// in `(0.8, 1)`, angle in `[0, 2 pi)` and duration in `(5, 10)`.
///
/// Draws whose endpoint misses the origin by [`LIMIT_CYCLE_TOL`] or more
/// (radii close to 1 decay too slowly) are redrawn from the same stream.
pub fn gen_limit_cycle_dataset(m: usize, seed: u64) -> Result<DemoSet> {
    if m == 0 {
        return Err(DmpError::invalid("count", "at least one demonstration is required"));
    }
    let demos = (0..m)
        .into_par_iter()
        .map(|j| {
            let mut rng = stream_rng(seed, j as u64);
            loop {
                let rho = open_unit(&mut rng) * 0.2 + 0.8;
                let theta = rng.random::<f64>() * 2.0 * PI;
                let duration = open_unit(&mut rng) * 5.0 + 5.0;
                let demo = limit_cycle_demo([rho * theta.cos(), rho * theta.sin()], duration)?;
                if demo.last().norm() < LIMIT_CYCLE_TOL {
                    return Ok(demo);
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    DemoSet::new(demos)
}

fn open_unit(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Adds independent zero-mean Gaussian noise of the given variance to every
/// position sample (endpoints included). Derivatives are dropped.
pub fn add_noise(set: &DemoSet, variance: f64, seed: u64) -> Result<DemoSet> {
    if !(variance.is_finite() && variance > 0.0) {
        return Err(DmpError::invalid("variance", format!("must be positive, got {variance}")));
    }
    let normal = Normal::new(0.0, variance.sqrt()).map_err(|e| DmpError::invalid("variance", e.to_string()))?;
    let demos = set
        .demos()
        .iter()
        .enumerate()
        .map(|(j, demo)| {
            let mut rng = stream_rng(seed, j as u64);
            let mut x = demo.positions().clone();
            // Row-major draw order keeps the stream layout independent of storage.
            for k in 0..x.nrows() {
                for p in 0..x.ncols() {
                    x[(k, p)] += normal.sample(&mut rng);
                }
            }
            Trajectory::new(demo.times().to_vec(), x)
        })
        .collect::<Result<Vec<_>>>()?;
    DemoSet::new(demos)
}

/// Clamped cubic spline (zero end slopes) through `(knots, values)`.
#[derive(Debug, Clone)]
pub struct ClampedSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    second: Vec<f64>,
}

impl ClampedSpline {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let n = knots.len();
        if n < 2 || values.len() != n {
            return Err(DmpError::invalid("spline", "needs at least two knots and one value per knot"));
        }
        if let Some(i) = knots.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(DmpError::NonIncreasingTimes { index: i + 1 });
        }
        // Tridiagonal system for the second derivatives M_i with
        // S'(t_0) = S'(t_n) = 0.
        let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
        let mut a = DMatrix::zeros(n, n);
        let mut r = DVector::zeros(n);
        a[(0, 0)] = h[0] / 3.0;
        a[(0, 1)] = h[0] / 6.0;
        r[0] = (values[1] - values[0]) / h[0];
        for i in 1..n - 1 {
            a[(i, i - 1)] = h[i - 1] / 6.0;
            a[(i, i)] = (h[i - 1] + h[i]) / 3.0;
            a[(i, i + 1)] = h[i] / 6.0;
            r[i] = (values[i + 1] - values[i]) / h[i] - (values[i] - values[i - 1]) / h[i - 1];
        }
        a[(n - 1, n - 2)] = h[n - 2] / 6.0;
        a[(n - 1, n - 1)] = h[n - 2] / 3.0;
        r[n - 1] = -(values[n - 1] - values[n - 2]) / h[n - 2];
        let second = a
            .lu()
            .solve(&r)
            .ok_or(DmpError::Conditioning { cond: f64::INFINITY })?;
        Ok(ClampedSpline {
            knots,
            values,
            second: second.iter().copied().collect(),
        })
    }

    /// Value, slope and curvature at `t` (clamped to the knot range).
    pub fn eval(&self, t: f64) -> [f64; 3] {
        let n = self.knots.len();
        let t = t.clamp(self.knots[0], self.knots[n - 1]);
        let i = self.knots.partition_point(|k| *k <= t).clamp(1, n - 1) - 1;
        let (t0, t1) = (self.knots[i], self.knots[i + 1]);
        let h = t1 - t0;
        let (m0, m1) = (self.second[i], self.second[i + 1]);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (a, b) = ((t1 - t) / h, (t - t0) / h);
        let value = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let slope = (y1 - y0) / h - (3.0 * a * a - 1.0) / 6.0 * h * m0 + (3.0 * b * b - 1.0) / 6.0 * h * m1;
        let curvature = a * m0 + b * m1;
        [value, slope, curvature]
    }
}

/// Two planar curves on `[0, 1]` that coincide outside a middle window, for
/// the trajectory-update experiment.
#[derive(Debug, Clone)]
pub struct SplinePair {
    /// The larger curve, learned first.
    pub large: Trajectory,
    /// The smaller curve, differing only inside `window`.
    pub small: Trajectory,
    pub window: (f64, f64),
}

/// Clamped-spline arch and a copy with its middle pulled in by a `C^2`
/// bump `(1 - u^2)^3` supported on `window`.
pub fn gen_spline_pair(n: usize) -> Result<SplinePair> {
    if n < 4 {
        return Err(DmpError::TrajectoryTooShort { found: n, required: 4 });
    }
    let knots = vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0];
    let xs = ClampedSpline::new(knots.clone(), vec![0.0, 0.6, 1.6, 2.6, 3.5, 4.0])?;
    let ys = ClampedSpline::new(knots, vec![0.0, 1.4, 2.4, 2.4, 1.4, 0.0])?;
    let window = (0.25, 0.62);
    let (mid, half) = ((window.0 + window.1) / 2.0, (window.1 - window.0) / 2.0);
    let depth = 1.0;
    let bump = |t: f64| -> [f64; 3] {
        let u = (t - mid) / half;
        if u.abs() >= 1.0 {
            return [0.0; 3];
        }
        let q = 1.0 - u * u;
        [
            depth * q * q * q,
            depth * -6.0 * u * q * q / half,
            depth * (-6.0 * q * q + 24.0 * u * u * q) / (half * half),
        ]
    };
    let times: Vec<f64> = (0..n).map(|k| if k == n - 1 { 1.0 } else { k as f64 / (n - 1) as f64 }).collect();
    let build = |with_bump: bool| -> Result<Trajectory> {
        let mut x = DMatrix::zeros(n, 2);
        let mut v = DMatrix::zeros(n, 2);
        let mut a = DMatrix::zeros(n, 2);
        for (k, &t) in times.iter().enumerate() {
            let (px, py) = (xs.eval(t), ys.eval(t));
            let b = if with_bump { bump(t) } else { [0.0; 3] };
            for j in 0..3 {
                let m = [&mut x, &mut v, &mut a];
                m[j][(k, 0)] = px[j];
                m[j][(k, 1)] = py[j] - b[j];
            }
        }
        Trajectory::with_derivatives(times.clone(), x, Some(v), Some(a))
    };
    Ok(SplinePair {
        large: build(false)?,
        small: build(true)?,
        window,
    })
}

/// A basis family with or without bias terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisSpec {
    pub family: BasisFamily,
    pub biased: bool,
}

impl BasisSpec {
    pub fn new(family: BasisFamily, biased: bool) -> Self {
        BasisSpec { family, biased }
    }

    pub fn label(&self) -> String {
        if self.biased {
            format!("{}_biased", self.family.tag())
        } else {
            self.family.tag()
        }
    }

    /// Learned coefficients per dimension for `n + 1` basis functions.
    pub fn parameters(&self, n: usize) -> usize {
        if self.biased {
            2 * (n + 1)
        } else {
            n + 1
        }
    }

    pub fn basis(&self, n: usize, phase: &PhaseConfig, overlap: f64) -> Result<BasisSet> {
        BasisSet::new(self.family, n, phase, overlap, self.biased)
    }
}

/// Shared sweep parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepSettings {
    pub alpha: f64,
    pub overlap: f64,
    pub elastic: f64,
    pub seed: u64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings {
            alpha: 4.0,
            overlap: DEFAULT_OVERLAP,
            elastic: 150.0,
            seed: 0,
        }
    }
}

/// One cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub family: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub metric: String,
    pub value: f64,
}

/// Benchmark table with its metadata.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub name: String,
    pub alpha: f64,
    pub horizon: f64,
    pub overlap: f64,
    pub seed: u64,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn new(name: &str, settings: &SweepSettings, horizon: f64) -> Self {
        SweepReport {
            name: name.to_string(),
            alpha: settings.alpha,
            horizon,
            overlap: settings.overlap,
            seed: settings.seed,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, family: &str, n: usize, metric: &str, value: f64) {
        self.rows.push(SweepRow {
            family: family.to_string(),
            n,
            metric: metric.to_string(),
            value,
        });
    }

    /// First value recorded for `(family, n, metric)`.
    pub fn get(&self, family: &str, n: usize, metric: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.family == family && r.n == n && r.metric == metric)
            .map(|r| r.value)
    }

    /// CSV with header `family,N,metric,value,seed`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| DmpError::Io(e.to_string());
        w.write_record(["family", "N", "metric", "value", "seed"]).map_err(io)?;
        for r in &self.rows {
            w.write_record([
                r.family.clone(),
                r.n.to_string(),
                r.metric.clone(),
                format_value(r.value),
                self.seed.to_string(),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| DmpError::Io(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| DmpError::Io(e.to_string()))
    }
}

fn format_value(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v:?}")
    }
}

/// Runs `f` on a pool sized by [`THREADS_ENV`].
pub fn with_bench_pool<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    let threads = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .unwrap_or(0);
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

/// Least-squares fit of `forcing` (one dimension) and the `L^2` error of
/// the fitted forcing over the phase range, on the learning quadrature.
pub fn fit_error(basis: &BasisSet, forcing: &ForcingSamples, dim: usize) -> Result<f64> {
    let phase = *forcing.phase();
    let quad = learn::learning_quadrature(basis, forcing)?;
    let matrix = learn::assemble_matrix_on(basis, &quad)?;
    let rhs = assemble_rhs_on(basis, &quad, forcing)?;
    let coeffs = learn::solve_columns(basis, &phase, &matrix, &rhs.columns(dim, 1).into_owned())?;
    l2_error(basis, &quad, forcing, dim, &coeffs[0])
}

fn l2_error(basis: &BasisSet, quad: &Quadrature, forcing: &ForcingSamples, dim: usize, c: &DVector<f64>) -> Result<f64> {
    let mut row = vec![0.0; basis.row_len()];
    let mut total = 0.0;
    for (&s, &w) in quad.phases().iter().zip(quad.weights()) {
        basis.forcing_row_into(s, &mut row)?;
        let fit: f64 = row.iter().zip(c.iter()).map(|(r, c)| r * c).sum();
        let e = fit - forcing.interpolate(s, dim);
        total += w * e * e;
    }
    Ok(total.sqrt())
}

/// Classical forcing of a target with its horizon.
pub fn target_forcing(target: &Trajectory, settings: &SweepSettings) -> Result<ForcingSamples> {
    let phase = PhaseConfig::new(settings.alpha, 1.0, target.duration())?;
    let gains = Gains::uniform(settings.elastic, target.dims())?;
    extract_forcing(&target.shifted_to_zero(), &gains, &phase, ForcingForm::Classical)
}

/// `L^2` forcing error per family and `N` (metric `l2_error`), with the
/// parameter count (metric `parameters`).
pub fn run_error_sweep(
    specs: &[BasisSpec],
    n_values: &[usize],
    target: &Trajectory,
    settings: &SweepSettings,
) -> Result<SweepReport> {
    let forcing = target_forcing(target, settings)?;
    let phase = *forcing.phase();
    let cells: Vec<(BasisSpec, usize)> = specs.iter().flat_map(|s| n_values.iter().map(move |n| (*s, *n))).collect();
    let errors = with_bench_pool(|| {
        cells
            .par_iter()
            .map(|(spec, n)| {
                let basis = spec.basis(*n, &phase, settings.overlap)?;
                (0..forcing.dims())
                    .map(|p| fit_error(&basis, &forcing, p).map(|e| e * e))
                    .sum::<Result<f64>>()
                    .map(f64::sqrt)
            })
            .collect::<Vec<Result<f64>>>()
    });
    let mut report = SweepReport::new("error", settings, phase.horizon);
    for ((spec, n), err) in cells.iter().zip(errors) {
        report.push(&spec.label(), *n, "l2_error", err?);
        report.push(&spec.label(), *n, "parameters", spec.parameters(*n) as f64);
    }
    Ok(report)
}

/// Spectral condition number of `A` (metric `cond`); infinity when
/// singular.
pub fn run_condition_sweep(
    specs: &[BasisSpec],
    n_values: &[usize],
    horizon: f64,
    settings: &SweepSettings,
) -> Result<SweepReport> {
    let phase = PhaseConfig::new(settings.alpha, 1.0, horizon)?;
    let cells: Vec<(BasisSpec, usize)> = specs.iter().flat_map(|s| n_values.iter().map(move |n| (*s, *n))).collect();
    let conds = with_bench_pool(|| {
        cells
            .par_iter()
            .map(|(spec, n)| {
                let basis = spec.basis(*n, &phase, settings.overlap)?;
                let (a, _) = assemble_matrix(&basis, &phase)?;
                Ok(condition_number(&a))
            })
            .collect::<Vec<Result<f64>>>()
    });
    let mut report = SweepReport::new("condition", settings, horizon);
    for ((spec, n), c) in cells.iter().zip(conds) {
        report.push(&spec.label(), *n, "cond", c?);
    }
    Ok(report)
}

/// Structural and floating-point nonzero counts and bandwidth of `A`
/// (metrics `nnz`, `numeric_nnz`, `bandwidth`, `numeric_bandwidth`,
/// `size`).
pub fn run_sparsity(spec: BasisSpec, n: usize, horizon: f64, settings: &SweepSettings) -> Result<SweepReport> {
    let phase = PhaseConfig::new(settings.alpha, 1.0, horizon)?;
    let basis = spec.basis(n, &phase, settings.overlap)?;
    let sys = sparsity_system(&basis, &phase)?;
    let mut report = SweepReport::new("sparsity", settings, horizon);
    let label = spec.label();
    report.push(&label, n, "nnz", sys.structural_nnz as f64);
    report.push(&label, n, "numeric_nnz", sys.numeric_nnz() as f64);
    report.push(&label, n, "bandwidth", sys.bandwidth as f64);
    report.push(&label, n, "numeric_bandwidth", sys.numeric_bandwidth() as f64);
    report.push(&label, n, "size", sys.len() as f64);
    Ok(report)
}

/// Assembled system (with a zero right-hand side) for sparsity inspection.
pub fn sparsity_system(basis: &BasisSet, phase: &PhaseConfig) -> Result<learn::LinearSystem> {
    let phases = vec![1.0, phase.final_phase()];
    let forcing = ForcingSamples::new(*phase, phases, DMatrix::zeros(2, 1))?;
    learn::assemble_system(basis, &forcing, 0)
}

/// Timing protocol: `A` is assembled once per cell, then factored and
/// solved for `rhs_count` seeded right-hand sides after one warm-up solve.
/// Reports the mean (`mean_seconds`) and the median of group means
/// (`seconds`), plus whether the banded path was used (`banded`).
pub fn run_timing_sweep(
    specs: &[BasisSpec],
    n_values: &[usize],
    rhs_count: usize,
    horizon: f64,
    settings: &SweepSettings,
) -> Result<SweepReport> {
    if rhs_count == 0 {
        return Err(DmpError::invalid("rhs_count", "at least one right-hand side is required"));
    }
    let phase = PhaseConfig::new(settings.alpha, 1.0, horizon)?;
    let mut report = SweepReport::new("timing", settings, horizon);
    for spec in specs {
        for &n in n_values {
            let basis = spec.basis(n, &phase, settings.overlap)?;
            let (a, _) = assemble_matrix(&basis, &phase)?;
            let band = basis.bandwidth_on(phase.final_phase(), 1.0);
            let mut rng = stream_rng(settings.seed, n as u64);
            let normal = Normal::new(0.0, 1.0).expect("unit normal");
            let rhs: Vec<DVector<f64>> = (0..=rhs_count)
                .map(|_| DVector::from_fn(a.nrows(), |_, _| normal.sample(&mut rng)))
                .collect();
            let mut banded = false;
            let mut times = Vec::with_capacity(rhs_count);
            for (k, b) in rhs.iter().enumerate() {
                let start = Instant::now();
                let fact = Factorization::new(&a, band)?;
                let x = fact.solve(b);
                let elapsed = start.elapsed().as_secs_f64();
                std::hint::black_box(&x);
                banded = fact.is_banded();
                if k > 0 {
                    times.push(elapsed);
                }
            }
            let label = spec.label();
            report.push(&label, n, "seconds", median_of_means(&times));
            report.push(&label, n, "mean_seconds", times.iter().sum::<f64>() / times.len() as f64);
            report.push(&label, n, "banded", if banded { 1.0 } else { 0.0 });
        }
    }
    Ok(report)
}

/// Median of the means of consecutive groups of about `sqrt(n)` samples.
pub fn median_of_means(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return f64::NAN;
    }
    let groups = ((samples.len() as f64).sqrt().floor() as usize).max(1);
    let size = samples.len() / groups;
    let mut means: Vec<f64> = (0..groups)
        .map(|g| {
            let end = if g == groups - 1 { samples.len() } else { (g + 1) * size };
            let chunk = &samples[g * size..end];
            chunk.iter().sum::<f64>() / chunk.len() as f64
        })
        .collect();
    means.sort_by(f64::total_cmp);
    let m = means.len();
    if m % 2 == 1 {
        means[m / 2]
    } else {
        0.5 * (means[m / 2 - 1] + means[m / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_values() {
        let eta = gen_target(TargetKind::HatEta, 11).unwrap();
        assert_eq!(eta.first()[0], 0.0);
        assert!((eta.last()[0] + 1.0).abs() < 1e-15);
        let plane = gen_target(TargetKind::PlaneCurve, 11).unwrap();
        assert!((plane.last()[0] - PI).abs() < 1e-15);
        assert!(plane.last()[1].abs() < 1e-30);
        assert!(gen_target(TargetKind::SpiralCurve, 3).is_err());
    }

    #[test]
    fn analytic_derivatives() {
        let h = 1e-5;
        for kind in [TargetKind::HatEta, TargetKind::PlaneCurve, TargetKind::SpiralCurve] {
            for t in [0.3, 0.7, 0.95] {
                let [_, v, a] = kind.eval(t);
                let [xp, vp, _] = kind.eval(t + h);
                let [xm, vm, _] = kind.eval(t - h);
                for j in 0..kind.dims() {
                    assert!(((xp[j] - xm[j]) / (2.0 * h) - v[j]).abs() < 1e-8);
                    assert!(((vp[j] - vm[j]) / (2.0 * h) - a[j]).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn origin_is_fixed() {
        let demo = limit_cycle_demo([0.0, 0.0], 5.0).unwrap();
        assert!(demo.positions().iter().all(|x| *x == 0.0));
    }

    #[test]
    fn limit_cycle_matches_radial_solution() {
        // r' = r^3 - r, so r^2 = 1 / (1 + (1 / r0^2 - 1) e^{2t}).
        let r0: f64 = 0.9;
        let demo = limit_cycle_demo([r0, 0.0], 6.0).unwrap();
        let r2 = 1.0 / (1.0 + (1.0 / (r0 * r0) - 1.0) * (12.0f64).exp());
        assert!((demo.last().norm() - r2.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn dataset_is_seeded() {
        let a = gen_limit_cycle_dataset(4, 5).unwrap();
        let b = gen_limit_cycle_dataset(4, 5).unwrap();
        assert_eq!(a, b);
        for d in a.demos() {
            assert!(d.last().norm() < LIMIT_CYCLE_TOL);
            assert!(d.duration() > 5.0 && d.duration() < 10.0);
            let r0 = d.first().norm();
            assert!(r0 > 0.8 && r0 < 1.0);
        }
        // Prefixes are stable under growth of the dataset.
        let c = gen_limit_cycle_dataset(6, 5).unwrap();
        assert_eq!(&c.demos()[..4], a.demos());
    }

    #[test]
    fn noise_statistics() {
        let times: Vec<f64> = (0..500_000).map(|k| k as f64).collect();
        let flat = Trajectory::new(times, DMatrix::zeros(500_000, 2)).unwrap();
        let set = DemoSet::new(vec![flat]).unwrap();
        let noisy = add_noise(&set, 5e-5, 0).unwrap();
        let x = noisy.demos()[0].positions();
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let sigma = 5e-5f64.sqrt();
        assert!(mean.abs() < 4.0 * sigma / 1e3);
        assert!((var.sqrt() / sigma - 1.0).abs() < 0.01);
        assert_eq!(add_noise(&set, 5e-5, 0).unwrap(), noisy);
        assert!(add_noise(&set, 0.0, 0).is_err());
    }

    #[test]
    fn spline_interpolates_and_is_clamped() {
        let s = ClampedSpline::new(vec![0.0, 1.0, 3.0], vec![0.0, 2.0, 1.0]).unwrap();
        assert!((s.eval(1.0)[0] - 2.0).abs() < 1e-14);
        assert!(s.eval(0.0)[1].abs() < 1e-14);
        assert!(s.eval(3.0)[1].abs() < 1e-14);
        // Second derivative is continuous across the interior knot.
        let (l, r) = (s.eval(1.0 - 1e-9)[2], s.eval(1.0 + 1e-9)[2]);
        assert!((l - r).abs() < 1e-6);
    }

    #[test]
    fn spline_pair_shares_tails() {
        let pair = gen_spline_pair(1001).unwrap();
        let (t0, t1) = pair.window;
        for k in 0..pair.large.len() {
            let t = pair.large.times()[k];
            let same = pair.large.position(k) == pair.small.position(k);
            if t < t0 - 1e-9 || t > t1 + 1e-9 {
                assert!(same, "t = {t}");
            } else if t > t0 + 1e-3 && t < t1 - 1e-3 {
                assert!(!same, "t = {t}");
            }
        }
        assert!(pair.large.velocities().unwrap().row(0).amax() < 1e-14);
    }

    #[test]
    fn zero_target_has_zero_error() {
        let times: Vec<f64> = (0..101).map(|k| k as f64 / 100.0).collect();
        let flat = Trajectory::new(times, DMatrix::from_element(101, 1, 0.7)).unwrap();
        let specs: Vec<BasisSpec> = BasisFamily::all().into_iter().map(|f| BasisSpec::new(f, false)).collect();
        let report = run_error_sweep(&specs, &[5, 20], &flat, &SweepSettings::default()).unwrap();
        assert!(report.rows.iter().filter(|r| r.metric == "l2_error").all(|r| r.value == 0.0));
    }

    #[test]
    fn report_csv() {
        let mut report = SweepReport::new("x", &SweepSettings::default(), 1.0);
        report.push("mollifier", 10, "cond", 12.5);
        report.push("gaussian", 10, "cond", f64::INFINITY);
        let mut out = Vec::new();
        report.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text, "family,N,metric,value,seed\nmollifier,10,cond,12.5,0\ngaussian,10,cond,inf,0\n");
        assert_eq!(report.get("mollifier", 10, "cond"), Some(12.5));
    }

    #[test]
    fn medians() {
        assert_eq!(median_of_means(&[1.0, 1.0, 1.0, 5.0, 5.0, 5.0, 9.0, 9.0, 9.0]), 5.0);
        assert_eq!(median_of_means(&[2.0]), 2.0);
    }
}
