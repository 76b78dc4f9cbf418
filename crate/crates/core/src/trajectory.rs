//! Time-stamped d-dimensional samples with optional derivatives.

use nalgebra::{DMatrix, DVector};

use crate::error::{DmpError, Result};

/// Minimum number of samples: one-sided second derivatives at the
/// endpoints need four points.
pub const MIN_SAMPLES: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    /// One row per sample.
    positions: DMatrix<f64>,
    velocities: Option<DMatrix<f64>>,
    accelerations: Option<DMatrix<f64>>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, positions: DMatrix<f64>) -> Result<Self> {
        Self::with_derivatives(times, positions, None, None)
    }

    pub fn with_derivatives(
        times: Vec<f64>,
        positions: DMatrix<f64>,
        velocities: Option<DMatrix<f64>>,
        accelerations: Option<DMatrix<f64>>,
    ) -> Result<Self> {
        let n = times.len();
        if n < MIN_SAMPLES {
            return Err(DmpError::TrajectoryTooShort {
                found: n,
                required: MIN_SAMPLES,
            });
        }
        if positions.nrows() != n {
            return Err(DmpError::DimensionMismatch {
                expected: n,
                found: positions.nrows(),
            });
        }
        if positions.ncols() == 0 {
            return Err(DmpError::invalid("positions", "at least one dimension is required"));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(DmpError::NonFinite { what: "times" });
        }
        if let Some(i) = times.windows(2).position(|w| w[1] <= w[0]) {
            return Err(DmpError::NonIncreasingTimes { index: i + 1 });
        }
        if positions.iter().any(|x| !x.is_finite()) {
            return Err(DmpError::NonFinite { what: "positions" });
        }
        for (what, m) in [("velocities", &velocities), ("accelerations", &accelerations)] {
            if let Some(m) = m {
                if m.shape() != positions.shape() {
                    return Err(DmpError::DimensionMismatch {
                        expected: positions.len(),
                        found: m.len(),
                    });
                }
                if m.iter().any(|x| !x.is_finite()) {
                    return Err(DmpError::NonFinite { what });
                }
            }
        }
        Ok(Trajectory {
            times,
            positions,
            velocities,
            accelerations,
        })
    }

    /// Builds a trajectory from a sampled function of time.
    pub fn from_fn(times: Vec<f64>, dims: usize, f: impl Fn(f64) -> DVector<f64>) -> Result<Self> {
        let mut positions = DMatrix::zeros(times.len(), dims);
        for (k, &t) in times.iter().enumerate() {
            let x = f(t);
            if x.len() != dims {
                return Err(DmpError::DimensionMismatch {
                    expected: dims,
                    found: x.len(),
                });
            }
            positions.set_row(k, &x.transpose());
        }
        Self::new(times, positions)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.positions.ncols()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn positions(&self) -> &DMatrix<f64> {
        &self.positions
    }

    pub fn velocities(&self) -> Option<&DMatrix<f64>> {
        self.velocities.as_ref()
    }

    pub fn accelerations(&self) -> Option<&DMatrix<f64>> {
        self.accelerations.as_ref()
    }

    pub fn start_time(&self) -> f64 {
        self.times[0]
    }

    pub fn end_time(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    pub fn duration(&self) -> f64 {
        self.end_time() - self.start_time()
    }

    pub fn position(&self, k: usize) -> DVector<f64> {
        self.positions.row(k).transpose()
    }

    pub fn first(&self) -> DVector<f64> {
        self.position(0)
    }

    pub fn last(&self) -> DVector<f64> {
        self.position(self.len() - 1)
    }

    /// Largest distance between two samples.
    pub fn diameter(&self) -> f64 {
        let n = self.len();
        let mut best = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                best = best.max((self.positions.row(i) - self.positions.row(j)).norm());
            }
        }
        best
    }

    /// Position at time `t`, linear between samples and clamped outside.
    pub fn sample_at(&self, t: f64) -> DVector<f64> {
        let k = self.times.partition_point(|&ti| ti <= t);
        if k == 0 {
            return self.first();
        }
        if k == self.len() {
            return self.last();
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = (t - t0) / (t1 - t0);
        (self.positions.row(k - 1) * (1.0 - w) + self.positions.row(k) * w).transpose()
    }

    /// Copy with times shifted so the first sample sits at zero.
    pub fn shifted_to_zero(&self) -> Self {
        let t0 = self.times[0];
        Trajectory {
            times: self.times.iter().map(|t| t - t0).collect(),
            ..self.clone()
        }
    }

    /// Copy without derivative arrays.
    pub fn positions_only(&self) -> Self {
        Trajectory {
            times: self.times.clone(),
            positions: self.positions.clone(),
            velocities: None,
            accelerations: None,
        }
    }

    /// Applies `map` to every position sample; derivatives are dropped.
    pub fn map_positions(&self, map: impl Fn(DVector<f64>) -> DVector<f64>) -> Result<Self> {
        Self::from_fn_indexed(self.times.clone(), self.dims(), |k| map(self.position(k)))
    }

    fn from_fn_indexed(times: Vec<f64>, dims: usize, f: impl Fn(usize) -> DVector<f64>) -> Result<Self> {
        let mut positions = DMatrix::zeros(times.len(), dims);
        for k in 0..times.len() {
            positions.set_row(k, &f(k).transpose());
        }
        Self::new(times, positions)
    }

    /// Replaces the positions, keeping times; derivatives are dropped.
    pub fn with_positions(&self, positions: DMatrix<f64>) -> Result<Self> {
        Self::new(self.times.clone(), positions)
    }
}

/// Finite-difference weights for the `order`-th derivative at `x0` on the
/// given nodes (Fornberg's recursion).
fn fd_weights(x0: f64, nodes: &[f64], order: usize) -> Vec<f64> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

fn stencil(n: usize, k: usize, order: usize) -> std::ops::Range<usize> {
    // Three-point stencils are centered in the interior; at the ends the
    // second derivative needs four one-sided points for second order.
    if k == 0 {
        0..(if order == 1 { 3 } else { 4 })
    } else if k == n - 1 {
        (n - if order == 1 { 3 } else { 4 })..n
    } else {
        (k - 1)..(k + 2)
    }
}

fn derivative(times: &[f64], positions: &DMatrix<f64>, order: usize) -> DMatrix<f64> {
    let n = times.len();
    let mut out = DMatrix::zeros(n, positions.ncols());
    for k in 0..n {
        let range = stencil(n, k, order);
        let w = fd_weights(times[k], &times[range.clone()], order);
        // Weights sum to zero, so differencing against x_k keeps constants exact.
        for (wj, j) in w.iter().zip(range) {
            for p in 0..positions.ncols() {
                out[(k, p)] += wj * (positions[(j, p)] - positions[(k, p)]);
            }
        }
    }
    out
}

/// Fills in missing velocities and accelerations with second-order finite
/// differences (divided differences on non-uniform grids). Arrays already
/// present are kept untouched.
pub fn differentiate(traj: &Trajectory) -> Result<Trajectory> {
    if traj.len() < MIN_SAMPLES {
        return Err(DmpError::TrajectoryTooShort {
            found: traj.len(),
            required: MIN_SAMPLES,
        });
    }
    let velocities = match &traj.velocities {
        Some(v) => v.clone(),
        None => derivative(&traj.times, &traj.positions, 1),
    };
    let accelerations = match &traj.accelerations {
        Some(a) => a.clone(),
        None => derivative(&traj.times, &traj.positions, 2),
    };
    Ok(Trajectory {
        velocities: Some(velocities),
        accelerations: Some(accelerations),
        ..traj.clone()
    })
}
