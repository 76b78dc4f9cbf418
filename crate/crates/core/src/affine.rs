//! Roto-dilatations between start-goal chords, general invertible maps and
//! gain conjugation.

use nalgebra::{DMatrix, DVector};

use crate::error::{DmpError, Result};
use crate::learn::Gains;

/// Below this norm of the component of `v` orthogonal to `u`, the two unit
/// vectors are treated as collinear.
const COLLINEAR_TOL: f64 = 1e-14;

fn unit(v: &DVector<f64>) -> Result<DVector<f64>> {
    let n = v.norm();
    if n == 0.0 || !n.is_finite() {
        return Err(DmpError::ZeroVector);
    }
    Ok(v / n)
}

/// Rotation taking the direction of `u` to the direction of `v`, acting as
/// the identity on the complement of their span.
///
/// Antiparallel inputs rotate by pi in the plane of `u` and the coordinate
/// axis least aligned with it. In one dimension the antiparallel case has no
/// rotation and returns the reflection `[-1]`.
pub fn rotation_between(u: &DVector<f64>, v: &DVector<f64>) -> Result<DMatrix<f64>> {
    if u.len() != v.len() {
        return Err(DmpError::DimensionMismatch {
            expected: u.len(),
            found: v.len(),
        });
    }
    let d = u.len();
    let u = unit(u)?;
    let v = unit(v)?;
    let c = u.dot(&v);
    let perp = &v - &u * c;
    let perp_norm = perp.norm();

    let (w, theta) = if perp_norm < COLLINEAR_TOL {
        if c > 0.0 {
            return Ok(DMatrix::identity(d, d));
        }
        if d == 1 {
            return Ok(DMatrix::from_element(1, 1, -1.0));
        }
        let j = (0..d)
            .min_by(|&a, &b| u[a].abs().total_cmp(&u[b].abs()))
            .expect("nonempty");
        let mut axis = DVector::zeros(d);
        axis[j] = 1.0;
        (axis - &u * u[j], std::f64::consts::PI)
    } else {
        (perp / perp_norm, perp_norm.atan2(c))
    };
    // A second projection keeps w orthogonal to u when v is nearly -u.
    let w = &w - &u * u.dot(&w);
    let w = &w / w.norm();

    let (sin, cos) = theta.sin_cos();
    let uu = &u * u.transpose();
    let ww = &w * w.transpose();
    let wu = &w * u.transpose();
    Ok(DMatrix::identity(d, d) + (uu + ww) * (cos - 1.0) + (&wu - wu.transpose()) * sin)
}

/// Roto-dilatation `S = a R`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    matrix: DMatrix<f64>,
    scale: f64,
    rotation: DMatrix<f64>,
}

impl AffineMap {
    pub fn identity(dims: usize) -> Self {
        AffineMap {
            matrix: DMatrix::identity(dims, dims),
            scale: 1.0,
            rotation: DMatrix::identity(dims, dims),
        }
    }

    /// Checks that `rotation` is orthogonal and `scale` positive.
    pub fn new(scale: f64, rotation: DMatrix<f64>) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(DmpError::invalid("scale", format!("must be positive, got {scale}")));
        }
        if !rotation.is_square() {
            return Err(DmpError::DimensionMismatch {
                expected: rotation.nrows(),
                found: rotation.ncols(),
            });
        }
        let d = rotation.nrows();
        let err = (rotation.transpose() * &rotation - DMatrix::<f64>::identity(d, d)).amax();
        if !(err <= 1e-10) {
            return Err(DmpError::invalid("rotation", format!("not orthogonal (error {err:e})")));
        }
        Ok(AffineMap {
            matrix: &rotation * scale,
            scale,
            rotation,
        })
    }

    pub fn dims(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn rotation(&self) -> &DMatrix<f64> {
        &self.rotation
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.matrix * x
    }

    /// `S^-1 = R^T / a`, by transposition.
    pub fn inverse(&self) -> AffineMap {
        let rotation = self.rotation.transpose();
        AffineMap {
            matrix: &rotation / self.scale,
            scale: 1.0 / self.scale,
            rotation,
        }
    }
}

/// Free-function form of [`AffineMap::inverse`].
pub fn inverse(map: &AffineMap) -> AffineMap {
    map.inverse()
}

/// Roto-dilatation taking the chord `g - x0` onto `gp - x0p`.
pub fn rotodilatation(
    x0: &DVector<f64>,
    g: &DVector<f64>,
    x0p: &DVector<f64>,
    gp: &DVector<f64>,
) -> Result<AffineMap> {
    let d = x0.len();
    for v in [g, x0p, gp] {
        if v.len() != d {
            return Err(DmpError::DimensionMismatch {
                expected: d,
                found: v.len(),
            });
        }
    }
    let chord = g - x0;
    let target = gp - x0p;
    let (n0, n1) = (chord.norm(), target.norm());
    if n0 == 0.0 || n1 == 0.0 {
        return Err(DmpError::NullTransform);
    }
    let rotation = rotation_between(&chord, &target)?;
    let scale = n1 / n0;
    Ok(AffineMap {
        matrix: &rotation * scale,
        scale,
        rotation,
    })
}

/// `(S K S^-1, S D S^-1)`. Scalar gains commute with every map and are
/// returned unchanged.
pub fn conjugate_gains(gains: &Gains, map: &AffineMap) -> (DMatrix<f64>, DMatrix<f64>) {
    let k = gains.elastic_matrix();
    let d = gains.damping_matrix();
    if gains.is_scalar() {
        return (k, d);
    }
    // a R K R^T / a
    let r = map.rotation();
    (r * k * r.transpose(), r * d * r.transpose())
}

/// An invertible linear map with its inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    matrix: DMatrix<f64>,
    inverse: DMatrix<f64>,
}

impl LinearMap {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(DmpError::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        let inverse = matrix
            .clone()
            .try_inverse()
            .filter(|m| m.iter().all(|v| v.is_finite()))
            .ok_or(DmpError::NullTransform)?;
        Ok(LinearMap { matrix, inverse })
    }

    /// `diag((gp - x0p) / (g - x0))`, componentwise.
    pub fn diagonal_scaling(
        x0: &DVector<f64>,
        g: &DVector<f64>,
        x0p: &DVector<f64>,
        gp: &DVector<f64>,
    ) -> Result<Self> {
        let chord = g - x0;
        if let Some(p) = chord.iter().position(|c| *c == 0.0) {
            return Err(DmpError::ZeroScale { component: p });
        }
        let diag = (gp - x0p).component_div(&chord);
        Self::new(DMatrix::from_diagonal(&diag))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    pub fn dims(&self) -> usize {
        self.matrix.nrows()
    }

    /// `S M S^-1`.
    pub fn conjugate(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        &self.matrix * m * &self.inverse
    }
}

impl From<&AffineMap> for LinearMap {
    fn from(map: &AffineMap) -> Self {
        LinearMap {
            matrix: map.matrix().clone(),
            inverse: map.inverse().matrix,
        }
    }
}
