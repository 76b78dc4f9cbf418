//! Forcing-term extraction, integral least squares for the weights, and
//! partial re-learning of a trajectory segment.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::BasisSet;
use crate::error::{DmpError, Result};
use crate::linalg::{self, Factorization};
use crate::phase::PhaseConfig;
use crate::quadrature::Quadrature;
use crate::trajectory::{differentiate, Trajectory};

/// Diagonal elastic and damping gains, one entry per dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gains {
    elastic: Vec<f64>,
    damping: Vec<f64>,
}

impl Gains {
    pub fn new(elastic: Vec<f64>, damping: Vec<f64>) -> Result<Self> {
        if elastic.is_empty() {
            return Err(DmpError::invalid("gains", "at least one dimension is required"));
        }
        if elastic.len() != damping.len() {
            return Err(DmpError::DimensionMismatch {
                expected: elastic.len(),
                found: damping.len(),
            });
        }
        for (name, values) in [("elastic", &elastic), ("damping", &damping)] {
            if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(DmpError::invalid(name, "gains must be positive"));
            }
        }
        Ok(Gains { elastic, damping })
    }

    /// Critically damped gains, `D = 2 sqrt(K)` per component.
    pub fn critical(elastic: Vec<f64>) -> Result<Self> {
        let damping = elastic.iter().map(|k| 2.0 * k.sqrt()).collect();
        Self::new(elastic, damping)
    }

    /// The same critically damped scalar gain in every dimension.
    pub fn uniform(k: f64, dims: usize) -> Result<Self> {
        Self::critical(vec![k; dims])
    }

    pub fn dims(&self) -> usize {
        self.elastic.len()
    }

    pub fn elastic(&self) -> &[f64] {
        &self.elastic
    }

    pub fn damping(&self) -> &[f64] {
        &self.damping
    }

    /// True when both gain arrays are constant, i.e. `K` and `D` are scalar
    /// multiples of the identity.
    pub fn is_scalar(&self) -> bool {
        let same = |v: &[f64]| v.iter().all(|x| *x == v[0]);
        same(&self.elastic) && same(&self.damping)
    }

    pub fn elastic_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.elastic))
    }

    pub fn damping_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.damping))
    }
}

/// Which system the forcing term is extracted for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForcingForm {
    /// `tau v' = K (g - x) - D v + (g - x0) f`
    Original,
    /// `tau v' = K (g - x) - D v - K (g - x0) s + K f`
    Classical,
}

/// Forcing values sampled at the phases of a demonstration.
#[derive(Debug, Clone, PartialEq)]
pub struct ForcingSamples {
    phase: PhaseConfig,
    phases: Vec<f64>,
    /// `m x d`, one row per sample.
    values: DMatrix<f64>,
}

impl ForcingSamples {
    pub fn new(phase: PhaseConfig, phases: Vec<f64>, values: DMatrix<f64>) -> Result<Self> {
        phase.validate()?;
        if phases.len() < 2 {
            return Err(DmpError::invalid("phases", "at least two samples are needed"));
        }
        if phases.len() != values.nrows() {
            return Err(DmpError::DimensionMismatch {
                expected: phases.len(),
                found: values.nrows(),
            });
        }
        if let Some(k) = phases.windows(2).position(|w| !(w[1] < w[0])) {
            return Err(DmpError::NonIncreasingTimes { index: k + 1 });
        }
        if phases.iter().any(|s| !(s.is_finite() && *s > 0.0 && *s <= 1.0)) {
            return Err(DmpError::invalid("phases", "phases must lie in (0, 1]"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(DmpError::NonFinite { what: "forcing values" });
        }
        Ok(ForcingSamples {
            phase,
            phases,
            values,
        })
    }

    pub fn phase(&self) -> &PhaseConfig {
        &self.phase
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn dims(&self) -> usize {
        self.values.ncols()
    }

    /// Forcing of dimension `dim` at phase `s`, linear in `s` between
    /// samples and held constant beyond the first and last.
    pub fn interpolate(&self, s: f64, dim: usize) -> f64 {
        let p = &self.phases;
        let m = p.len();
        if s >= p[0] {
            return self.values[(0, dim)];
        }
        if s <= p[m - 1] {
            return self.values[(m - 1, dim)];
        }
        // First index whose phase is below s.
        let k = p.partition_point(|x| *x >= s);
        let (s_hi, s_lo) = (p[k - 1], p[k]);
        let u = (s - s_lo) / (s_hi - s_lo);
        self.values[(k, dim)] + u * (self.values[(k - 1, dim)] - self.values[(k, dim)])
    }
}

fn check_horizon(traj: &Trajectory, phase: &PhaseConfig) -> Result<()> {
    let d = traj.duration();
    if (d - phase.horizon).abs() > 1e-9 * phase.horizon.max(1.0) {
        return Err(DmpError::invalid(
            "horizon",
            format!("demonstration lasts {d} s but the phase horizon is {}", phase.horizon),
        ));
    }
    Ok(())
}

/// Forcing targets of a demonstration. Start and goal are its first and
/// last samples; times are shifted to start at zero and `tau = 1`.
pub fn extract_forcing(
    traj: &Trajectory,
    gains: &Gains,
    phase: &PhaseConfig,
    form: ForcingForm,
) -> Result<ForcingSamples> {
    phase.validate()?;
    if gains.dims() != traj.dims() {
        return Err(DmpError::DimensionMismatch {
            expected: traj.dims(),
            found: gains.dims(),
        });
    }
    check_horizon(traj, phase)?;
    let traj = differentiate(traj)?;
    let (x, v, a) = (
        traj.positions(),
        traj.velocities().expect("filled by differentiate"),
        traj.accelerations().expect("filled by differentiate"),
    );
    let x0 = traj.first();
    let g = traj.last();
    let d = traj.dims();
    if form == ForcingForm::Original {
        if let Some(p) = (0..d).find(|&p| g[p] == x0[p]) {
            return Err(DmpError::ZeroScale { component: p });
        }
    }
    let t0 = traj.start_time();
    let phases: Vec<f64> = traj
        .times()
        .iter()
        .map(|t| (-phase.alpha * (t - t0)).exp())
        .collect();
    let values = DMatrix::from_fn(traj.len(), d, |k, p| {
        let (k_p, d_p) = (gains.elastic()[p], gains.damping()[p]);
        match form {
            ForcingForm::Classical => {
                (a[(k, p)] + d_p * v[(k, p)]) / k_p - (g[p] - x[(k, p)]) + (g[p] - x0[p]) * phases[k]
            }
            ForcingForm::Original => {
                (a[(k, p)] - k_p * (g[p] - x[(k, p)]) + d_p * v[(k, p)]) / (g[p] - x0[p])
            }
        }
    });
    ForcingSamples::new(*phase, phases, values)
}

/// Normal equations `A w = b` for one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub matrix: DMatrix<f64>,
    pub rhs: DVector<f64>,
    /// Half-bandwidth implied by overlapping supports.
    pub bandwidth: usize,
    /// Entries that are nonzero by support overlap, whether or not they
    /// underflow in floating point.
    pub structural_nnz: usize,
}

impl LinearSystem {
    pub fn len(&self) -> usize {
        self.rhs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rhs.is_empty()
    }

    /// Entries that are nonzero in floating point.
    pub fn numeric_nnz(&self) -> usize {
        self.matrix.iter().filter(|v| **v != 0.0).count()
    }

    /// Largest `|i - j|` over nonzero floating-point entries.
    pub fn numeric_bandwidth(&self) -> usize {
        let n = self.matrix.nrows();
        let mut band = 0;
        for j in 0..n {
            for i in j..n {
                if self.matrix[(i, j)] != 0.0 {
                    band = band.max(i - j);
                }
            }
        }
        band
    }
}

/// Solution of a [`LinearSystem`] with its relative residual.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSolution {
    pub weights: DVector<f64>,
    pub residual: f64,
}

/// Calls `visit(s, weight, row, active)` for each quadrature node, where
/// `active` lists the nonzero entries of the regressor row.
fn for_each_row(
    basis: &BasisSet,
    quad: &Quadrature,
    mut visit: impl FnMut(f64, f64, &[f64], &[usize]),
) -> Result<()> {
    let mut row = vec![0.0; basis.row_len()];
    let mut active = Vec::with_capacity(row.len());
    for (&s, &w) in quad.phases().iter().zip(quad.weights()) {
        basis.forcing_row_into(s, &mut row)?;
        active.clear();
        active.extend(row.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, _)| i));
        visit(s, w, &row, &active);
    }
    Ok(())
}

fn structural_nnz(basis: &BasisSet, lo: f64, hi: f64) -> usize {
    let n = basis.len();
    let mut count = 0;
    for i in 0..n {
        for j in 0..n {
            if basis.support(i).overlaps_within(&basis.support(j), lo, hi) {
                count += 1;
            }
        }
    }
    if basis.biased() {
        4 * count
    } else {
        count
    }
}

/// Matrix `A = integral of row row^T ds` over the phase range, shared by
/// every dimension.
pub fn assemble_matrix(basis: &BasisSet, phase: &PhaseConfig) -> Result<(DMatrix<f64>, Quadrature)> {
    let quad = Quadrature::for_basis(phase, basis.len())?;
    let matrix = assemble_matrix_on(basis, &quad)?;
    Ok((matrix, quad))
}

/// `A` on an explicit quadrature rule.
pub fn assemble_matrix_on(basis: &BasisSet, quad: &Quadrature) -> Result<DMatrix<f64>> {
    let n = basis.row_len();
    let mut a = DMatrix::zeros(n, n);
    for_each_row(basis, quad, |_, w, row, active| {
        for (x, &j) in active.iter().enumerate() {
            let wj = w * row[j];
            for &i in &active[x..] {
                a[(i, j)] += wj * row[i];
            }
        }
    })?;
    for j in 0..n {
        for i in (j + 1)..n {
            a[(j, i)] = a[(i, j)];
        }
    }
    Ok(a)
}

/// Right-hand sides `b = integral of row f ds`, one column per dimension.
pub fn assemble_rhs_on(basis: &BasisSet, quad: &Quadrature, forcing: &ForcingSamples) -> Result<DMatrix<f64>> {
    let d = forcing.dims();
    let mut b = DMatrix::zeros(basis.row_len(), d);
    for_each_row(basis, quad, |s, w, row, active| {
        for p in 0..d {
            let f = w * forcing.interpolate(s, p);
            for &i in active {
                b[(i, p)] += f * row[i];
            }
        }
    })?;
    Ok(b)
}

/// Learning rule for `forcing`: dense enough that sampled noise is averaged
/// rather than aliased.
pub fn learning_quadrature(basis: &BasisSet, forcing: &ForcingSamples) -> Result<Quadrature> {
    Quadrature::for_data(forcing.phase(), basis.len(), forcing.phases().len())
}

/// Normal equations for dimension `dim` of `forcing`.
pub fn assemble_system(basis: &BasisSet, forcing: &ForcingSamples, dim: usize) -> Result<LinearSystem> {
    if dim >= forcing.dims() {
        return Err(DmpError::IndexOutOfRange {
            index: dim,
            len: forcing.dims(),
        });
    }
    let phase = forcing.phase();
    let quad = learning_quadrature(basis, forcing)?;
    let matrix = assemble_matrix_on(basis, &quad)?;
    let rhs = assemble_rhs_on(basis, &quad, forcing)?.column(dim).into_owned();
    Ok(system_from(basis, phase, matrix, rhs))
}

fn system_from(basis: &BasisSet, phase: &PhaseConfig, matrix: DMatrix<f64>, rhs: DVector<f64>) -> LinearSystem {
    let (lo, hi) = (phase.final_phase(), 1.0);
    LinearSystem {
        matrix,
        rhs,
        bandwidth: basis.bandwidth_on(lo, hi),
        structural_nnz: structural_nnz(basis, lo, hi),
    }
}

/// Cholesky solve of `sys`, banded when the band is narrow.
pub fn solve_weights(sys: &LinearSystem) -> Result<WeightSolution> {
    let fact = Factorization::new(&sys.matrix, sys.bandwidth)?;
    let weights = fact.solve(&sys.rhs);
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(DmpError::Conditioning {
            cond: linalg::condition_number(&sys.matrix),
        });
    }
    let residual = linalg::relative_residual(&sys.matrix, &weights, &sys.rhs);
    Ok(WeightSolution { weights, residual })
}

/// Spectral condition number of the system matrix.
pub fn condition_number(sys: &LinearSystem) -> f64 {
    linalg::condition_number(&sys.matrix)
}

/// A learned movement primitive.
#[derive(Debug, Clone, PartialEq)]
pub struct DmpModel {
    gains: Gains,
    phase: PhaseConfig,
    basis: BasisSet,
    /// `d x (N + 1)`.
    weights: DMatrix<f64>,
    /// `d x (N + 1)`, present exactly when the basis is biased.
    biases: Option<DMatrix<f64>>,
    learned_x0: DVector<f64>,
    learned_g: DVector<f64>,
}

impl DmpModel {
    pub fn new(
        gains: Gains,
        phase: PhaseConfig,
        basis: BasisSet,
        weights: DMatrix<f64>,
        biases: Option<DMatrix<f64>>,
        learned_x0: DVector<f64>,
        learned_g: DVector<f64>,
    ) -> Result<Self> {
        phase.validate()?;
        let d = gains.dims();
        for found in [weights.nrows(), learned_x0.len(), learned_g.len()] {
            if found != d {
                return Err(DmpError::DimensionMismatch { expected: d, found });
            }
        }
        if weights.ncols() != basis.len() {
            return Err(DmpError::DimensionMismatch {
                expected: basis.len(),
                found: weights.ncols(),
            });
        }
        match (&biases, basis.biased()) {
            (Some(b), true) => {
                if b.shape() != weights.shape() {
                    return Err(DmpError::DimensionMismatch {
                        expected: basis.len(),
                        found: b.ncols(),
                    });
                }
            }
            (None, false) => {}
            _ => return Err(DmpError::invalid("biases", "biases must be present exactly for biased bases")),
        }
        let finite = |m: &DMatrix<f64>| m.iter().all(|v| v.is_finite());
        if !finite(&weights) || !biases.as_ref().is_none_or(finite) {
            return Err(DmpError::NonFinite { what: "weights" });
        }
        if learned_x0.iter().chain(learned_g.iter()).any(|v| !v.is_finite()) {
            return Err(DmpError::NonFinite { what: "learned endpoints" });
        }
        Ok(DmpModel {
            gains,
            phase,
            basis,
            weights,
            biases,
            learned_x0,
            learned_g,
        })
    }

    pub fn dims(&self) -> usize {
        self.gains.dims()
    }

    pub fn gains(&self) -> &Gains {
        &self.gains
    }

    pub fn phase(&self) -> &PhaseConfig {
        &self.phase
    }

    pub fn basis(&self) -> &BasisSet {
        &self.basis
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn biases(&self) -> Option<&DMatrix<f64>> {
        self.biases.as_ref()
    }

    pub fn learned_x0(&self) -> &DVector<f64> {
        &self.learned_x0
    }

    pub fn learned_g(&self) -> &DVector<f64> {
        &self.learned_g
    }

    /// Weight and bias coefficients of dimension `p` stacked as `[w; b]`.
    pub fn coefficients(&self, p: usize) -> DVector<f64> {
        let w = self.weights.row(p).transpose();
        match &self.biases {
            Some(b) => {
                let mut c = DVector::zeros(2 * w.len());
                c.rows_mut(0, w.len()).copy_from(&w);
                c.rows_mut(w.len(), w.len()).copy_from(&b.row(p).transpose());
                c
            }
            None => w,
        }
    }

    fn from_coefficients(
        gains: Gains,
        phase: PhaseConfig,
        basis: BasisSet,
        coeffs: &[DVector<f64>],
        x0: DVector<f64>,
        g: DVector<f64>,
    ) -> Result<Self> {
        let n = basis.len();
        let d = coeffs.len();
        let weights = DMatrix::from_fn(d, n, |p, i| coeffs[p][i]);
        let biases = basis
            .biased()
            .then(|| DMatrix::from_fn(d, n, |p, i| coeffs[p][n + i]));
        DmpModel::new(gains, phase, basis, weights, biases, x0, g)
    }
}

/// Solves the shared matrix against every column of `rhs`.
pub(crate) fn solve_columns(
    basis: &BasisSet,
    phase: &PhaseConfig,
    matrix: &DMatrix<f64>,
    rhs: &DMatrix<f64>,
) -> Result<Vec<DVector<f64>>> {
    let band = basis.bandwidth_on(phase.final_phase(), 1.0);
    let fact = Factorization::new(matrix, band)?;
    rhs.column_iter()
        .map(|b| {
            let w = fact.solve(&b.into_owned());
            if w.iter().all(|v| v.is_finite()) {
                Ok(w)
            } else {
                Err(DmpError::Conditioning {
                    cond: linalg::condition_number(matrix),
                })
            }
        })
        .collect()
}

/// Learns a model from one demonstration with the classical forcing term.
pub fn learn_dmp(traj: &Trajectory, gains: &Gains, phase: &PhaseConfig, basis: &BasisSet) -> Result<DmpModel> {
    learn_dmp_with(traj, gains, phase, basis, ForcingForm::Classical)
}

/// Learns a model for the chosen forcing form.
pub fn learn_dmp_with(
    traj: &Trajectory,
    gains: &Gains,
    phase: &PhaseConfig,
    basis: &BasisSet,
    form: ForcingForm,
) -> Result<DmpModel> {
    let learn_phase = PhaseConfig { tau: 1.0, ..*phase };
    let forcing = extract_forcing(traj, gains, &learn_phase, form)?;
    let quad = learning_quadrature(basis, &forcing)?;
    let matrix = assemble_matrix_on(basis, &quad)?;
    let rhs = assemble_rhs_on(basis, &quad, &forcing)?;
    let coeffs = solve_columns(basis, &learn_phase, &matrix, &rhs)?;
    DmpModel::from_coefficients(gains.clone(), *phase, basis.clone(), &coeffs, traj.first(), traj.last())
}

/// Basis indices whose support meets the phase window of `[t0, t1]`.
pub fn update_indices(basis: &BasisSet, phase: &PhaseConfig, t0: f64, t1: f64) -> Result<Vec<usize>> {
    if !basis.family().is_compact() {
        return Err(DmpError::FullSupport {
            family: basis.family().tag(),
        });
    }
    if !(t0.is_finite() && t1.is_finite() && 0.0 <= t0 && t0 < t1 && t1 <= phase.horizon * (1.0 + 1e-12)) {
        return Err(DmpError::invalid(
            "segment",
            format!("[{t0}, {t1}] must be a nonempty subinterval of [0, {}]", phase.horizon),
        ));
    }
    let s0 = (-phase.alpha * t0).exp();
    let s1 = (-phase.alpha * t1).exp();
    Ok((0..basis.len())
        .filter(|&i| {
            let sup = basis.support(i);
            sup.lower <= s0 && sup.upper >= s1
        })
        .collect())
}

/// Relearns only the weights whose supports meet the segment `[t0, t1]`
/// (seconds from the start of the demonstration).
///
/// The subsystem is integrated over the union of the selected supports.
/// Weights outside the set keep their values and their contribution is
/// moved to the right-hand side, so an unchanged demonstration reproduces
/// the original weights.
pub fn update_segment(model: &DmpModel, new_traj: &Trajectory, t0: f64, t1: f64) -> Result<(DmpModel, Vec<usize>)> {
    let basis = model.basis();
    let phase = PhaseConfig { tau: 1.0, ..*model.phase() };
    let set = update_indices(basis, &phase, t0, t1)?;
    if set.is_empty() {
        return Ok((model.clone(), set));
    }
    if new_traj.dims() != model.dims() {
        return Err(DmpError::DimensionMismatch {
            expected: model.dims(),
            found: new_traj.dims(),
        });
    }
    let forcing = extract_forcing(new_traj, model.gains(), &phase, ForcingForm::Classical)?;

    let lo = set.iter().map(|&i| basis.support(i).lower).fold(f64::INFINITY, f64::min);
    let hi = set.iter().map(|&i| basis.support(i).upper).fold(f64::NEG_INFINITY, f64::max);
    let quad = learning_quadrature(basis, &forcing)?.restricted(lo, hi);

    let n = basis.len();
    let mut cols: Vec<usize> = set.clone();
    if basis.biased() {
        cols.extend(set.iter().map(|i| i + n));
    }
    let mut local = vec![usize::MAX; basis.row_len()];
    for (k, &c) in cols.iter().enumerate() {
        local[c] = k;
    }

    let d = model.dims();
    let coeffs: Vec<DVector<f64>> = (0..d).map(|p| model.coefficients(p)).collect();
    let m = cols.len();
    let mut a = DMatrix::zeros(m, m);
    let mut b = DMatrix::zeros(m, d);
    for_each_row(basis, &quad, |s, w, row, active| {
        for &i in active {
            let li = local[i];
            if li == usize::MAX {
                continue;
            }
            for &j in active {
                let lj = local[j];
                if lj != usize::MAX {
                    a[(li, lj)] += w * row[i] * row[j];
                }
            }
        }
        for p in 0..d {
            let fixed: f64 = active
                .iter()
                .filter(|&&j| local[j] == usize::MAX)
                .map(|&j| row[j] * coeffs[p][j])
                .sum();
            let target = forcing.interpolate(s, p) - fixed;
            for &i in active {
                if local[i] != usize::MAX {
                    b[(local[i], p)] += w * row[i] * target;
                }
            }
        }
    })?;

    let fact = Factorization::dense(&a)?;
    let mut updated = coeffs;
    for (p, c) in updated.iter_mut().enumerate() {
        let sol = fact.solve(&b.column(p).into_owned());
        for (k, &col) in cols.iter().enumerate() {
            c[col] = sol[k];
        }
    }
    let new_model = DmpModel::from_coefficients(
        model.gains().clone(),
        *model.phase(),
        basis.clone(),
        &updated,
        model.learned_x0().clone(),
        model.learned_g().clone(),
    )?;
    Ok((new_model, set))
}
