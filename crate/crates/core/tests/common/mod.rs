#![allow(dead_code)]

use dmp_core::learn::learn_dmp;
use dmp_core::{BasisFamily, BasisSet, DmpModel, Gains, PhaseConfig, Trajectory};
use nalgebra::{DMatrix, DVector};

pub fn grid(n: usize, t0: f64, t1: f64) -> Vec<f64> {
    (0..n).map(|k| t0 + (t1 - t0) * k as f64 / (n - 1) as f64).collect()
}

/// Smooth 2D demo on `[0, 1]` with zero end velocities.
pub fn planar_demo() -> Trajectory {
    Trajectory::from_fn(grid(1001, 0.0, 1.0), 2, |t| {
        let u = t * t * (3.0 - 2.0 * t);
        DVector::from_vec(vec![u + 0.2 * (std::f64::consts::PI * u).sin(), 0.5 * u - 0.3 * (2.0 * std::f64::consts::PI * u).sin()])
    })
    .unwrap()
}

/// Smooth 3D demo on `[0, 1]`.
pub fn spatial_demo() -> Trajectory {
    Trajectory::from_fn(grid(1001, 0.0, 1.0), 3, |t| {
        let u = t * t * (3.0 - 2.0 * t);
        DVector::from_vec(vec![1.0 + u, -0.5 + 0.4 * (3.0 * u).sin(), 2.0 - u * u])
    })
    .unwrap()
}

pub fn learn(demo: &Trajectory, family: BasisFamily, n: usize, k: f64, alpha: f64) -> DmpModel {
    let phase = PhaseConfig::new(alpha, 1.0, demo.duration()).unwrap();
    let basis = BasisSet::new(family, n, &phase, 1.0, false).unwrap();
    learn_dmp(demo, &Gains::uniform(k, demo.dims()).unwrap(), &phase, &basis).unwrap()
}

/// `max |a - b| / max |b|`.
pub fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax() / b.amax()
}
