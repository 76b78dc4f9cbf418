//! Regression of one forcing term over several demonstrations.
//!
//! Every demonstration is mapped by its own roto-dilatation onto the chord
//! from the zero vector to the all-ones vector and rescaled to `[0, T]`.
//! The aligned forcing terms then share a single normal-equations matrix.

use nalgebra::{DMatrix, DVector};

use crate::affine::{self, AffineMap};
use crate::basis::BasisSet;
use crate::error::{DmpError, Result};
use crate::learn::{self, assemble_matrix_on, assemble_rhs_on, extract_forcing, DmpModel, ForcingForm, Gains};
use crate::quadrature::Quadrature;
use crate::phase::PhaseConfig;
use crate::trajectory::Trajectory;

/// Demonstrations sharing a dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct DemoSet {
    demos: Vec<Trajectory>,
}

impl DemoSet {
    pub fn new(demos: Vec<Trajectory>) -> Result<Self> {
        let first = demos
            .first()
            .ok_or_else(|| DmpError::invalid("demos", "at least one demonstration is required"))?;
        let d = first.dims();
        if let Some(t) = demos.iter().find(|t| t.dims() != d) {
            return Err(DmpError::DimensionMismatch {
                expected: d,
                found: t.dims(),
            });
        }
        Ok(DemoSet { demos })
    }

    pub fn demos(&self) -> &[Trajectory] {
        &self.demos
    }

    pub fn len(&self) -> usize {
        self.demos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demos.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.demos[0].dims()
    }

    pub fn into_demos(self) -> Vec<Trajectory> {
        self.demos
    }
}

/// Demonstrations mapped onto the unit chord over `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedDemoSet {
    demos: Vec<Trajectory>,
    maps: Vec<AffineMap>,
    horizon: f64,
}

impl AlignedDemoSet {
    pub fn demos(&self) -> &[Trajectory] {
        &self.demos
    }

    pub fn maps(&self) -> &[AffineMap] {
        &self.maps
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.demos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demos.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.demos[0].dims()
    }
}

/// Aligns every demonstration to the chord `0 -> 1` over `[0, horizon]`.
/// Derivatives are dropped so they are recomputed from aligned positions.
pub fn align_demos(set: &DemoSet, horizon: f64) -> Result<AlignedDemoSet> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(DmpError::invalid("horizon", format!("must be positive, got {horizon}")));
    }
    let d = set.dims();
    let zero = DVector::zeros(d);
    let ones = DVector::from_element(d, 1.0);
    let mut demos = Vec::with_capacity(set.len());
    let mut maps = Vec::with_capacity(set.len());
    for (j, demo) in set.demos().iter().enumerate() {
        let x0 = demo.first();
        let g = demo.last();
        let map = match affine::rotodilatation(&x0, &g, &zero, &ones) {
            Ok(m) => m,
            Err(DmpError::NullTransform) => return Err(DmpError::Alignment { demo: j }),
            Err(e) => return Err(e),
        };
        let n = demo.len();
        let (t0, t1) = (demo.start_time(), demo.end_time());
        let mut times: Vec<f64> = demo.times().iter().map(|t| (t - t0) * horizon / (t1 - t0)).collect();
        times[0] = 0.0;
        times[n - 1] = horizon;
        let mut positions = DMatrix::zeros(n, d);
        for k in 0..n {
            let x = map.apply(&(demo.position(k) - &x0));
            positions.set_row(k, &x.transpose());
        }
        positions.set_row(0, &zero.transpose());
        positions.set_row(n - 1, &ones.transpose());
        demos.push(Trajectory::new(times, positions)?);
        maps.push(map);
    }
    Ok(AlignedDemoSet {
        demos,
        maps,
        horizon,
    })
}

/// Regression normal equations: `A = 2 M A_1` and `B = 2 sum_j B_j`, one
/// column of `B` per dimension, where `A_1`, `B_j` are the single-demo
/// integrals.
pub fn regression_system(
    aligned: &AlignedDemoSet,
    gains: &Gains,
    phase: &PhaseConfig,
    basis: &BasisSet,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if (phase.horizon - aligned.horizon()).abs() > 1e-12 * aligned.horizon() {
        return Err(DmpError::invalid(
            "horizon",
            format!("phase horizon {} differs from the aligned horizon {}", phase.horizon, aligned.horizon()),
        ));
    }
    let learn_phase = PhaseConfig { tau: 1.0, ..*phase };
    let samples = aligned.demos().iter().map(Trajectory::len).max().unwrap_or(0);
    let quad = Quadrature::for_data(&learn_phase, basis.len(), samples)?;
    let single = assemble_matrix_on(basis, &quad)?;
    let mut rhs = DMatrix::zeros(basis.row_len(), aligned.dims());
    for demo in aligned.demos() {
        let forcing = extract_forcing(demo, gains, &learn_phase, ForcingForm::Classical)?;
        rhs += assemble_rhs_on(basis, &quad, &forcing)? * 2.0;
    }
    let m = aligned.len() as f64;
    Ok((single * (2.0 * m), rhs))
}

/// One model for all aligned demonstrations. The learned endpoints are the
/// zero and all-ones vectors.
pub fn regress_weights(
    aligned: &AlignedDemoSet,
    gains: &Gains,
    phase: &PhaseConfig,
    basis: &BasisSet,
) -> Result<DmpModel> {
    let (matrix, rhs) = regression_system(aligned, gains, phase, basis)?;
    let learn_phase = PhaseConfig { tau: 1.0, ..*phase };
    let coeffs = learn::solve_columns(basis, &learn_phase, &matrix, &rhs)?;
    let d = aligned.dims();
    let n = basis.len();
    let weights = DMatrix::from_fn(d, n, |p, i| coeffs[p][i]);
    let biases = basis.biased().then(|| DMatrix::from_fn(d, n, |p, i| coeffs[p][n + i]));
    DmpModel::new(
        gains.clone(),
        *phase,
        basis.clone(),
        weights,
        biases,
        DVector::zeros(d),
        DVector::from_element(d, 1.0),
    )
}
