//! Composite Simpson quadrature over the phase range.
//!
//! Nodes are uniform in time and mapped through `s = exp(-alpha t)`, so the
//! rule integrates `F(s) ds` as `F(s(t)) alpha s(t) dt`. Because centers are
//! equispaced in time, every basis function sees the same number of nodes
//! however small its phase-space support becomes near `exp(-alpha T)`.

use crate::error::{DmpError, Result};
use crate::phase::PhaseConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    phases: Vec<f64>,
    weights: Vec<f64>,
}

/// Node count for a basis of `basis_len` functions: `max(10 (N + 1) + 1, 1001)`.
pub fn node_count(basis_len: usize) -> usize {
    (10 * basis_len + 1).max(1001)
}

/// Node count when fitting `samples` data points: the basis default, raised
/// to `2 samples - 1` so every data interval holds a full Simpson panel.
pub fn node_count_for(basis_len: usize, samples: usize) -> usize {
    node_count(basis_len).max(2 * samples.max(2) - 1)
}

impl Quadrature {
    /// Simpson rule with `nodes` (odd, at least 3) points over `[exp(-alpha T), 1]`.
    pub fn for_phase(phase: &PhaseConfig, nodes: usize) -> Result<Self> {
        phase.validate()?;
        if nodes < 3 || nodes.is_multiple_of(2) {
            return Err(DmpError::invalid("nodes", format!("Simpson needs an odd count >= 3, got {nodes}")));
        }
        let h = phase.horizon / (nodes - 1) as f64;
        let mut phases = Vec::with_capacity(nodes);
        let mut weights = Vec::with_capacity(nodes);
        for k in 0..nodes {
            let t = if k == nodes - 1 { phase.horizon } else { k as f64 * h };
            let s = (-phase.alpha * t).exp();
            let simpson = if k == 0 || k == nodes - 1 {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            phases.push(s);
            weights.push(simpson * h / 3.0 * phase.alpha * s);
        }
        Ok(Quadrature { phases, weights })
    }

    /// Default rule for a basis of `basis_len` functions.
    pub fn for_basis(phase: &PhaseConfig, basis_len: usize) -> Result<Self> {
        Self::for_phase(phase, node_count(basis_len))
    }

    /// Rule for fitting `samples` data points with `basis_len` functions.
    pub fn for_data(phase: &PhaseConfig, basis_len: usize, samples: usize) -> Result<Self> {
        Self::for_phase(phase, node_count_for(basis_len, samples))
    }

    /// Nodes inside `[lo, hi]`, keeping their weights. Exact restriction of
    /// the full rule for integrands that vanish outside the interval.
    pub fn restricted(&self, lo: f64, hi: f64) -> Quadrature {
        let (phases, weights) = self
            .phases
            .iter()
            .zip(&self.weights)
            .filter(|(s, _)| **s >= lo && **s <= hi)
            .map(|(s, w)| (*s, *w))
            .unzip();
        Quadrature { phases, weights }
    }

    /// Phase values of the nodes, decreasing from 1.
    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.phases.iter().zip(&self.weights).map(|(s, w)| w * f(*s)).sum()
    }
}
