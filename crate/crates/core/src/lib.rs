//! Dynamic movement primitives: learning, rollout, affine generalization
//! and regression over several demonstrations.

pub mod affine;
pub mod basis;
pub mod bench;
pub mod dmp;
pub mod error;
pub mod io;
pub mod learn;
pub mod linalg;
pub mod phase;
pub mod quadrature;
pub mod regress;
pub mod trajectory;

pub use affine::{AffineMap, LinearMap};
pub use basis::{BasisFamily, BasisSet, Support};
pub use dmp::{forcing_value, rollout, Formulation, Goal, RolloutOptions, RolloutState};
pub use error::{DmpError, Result};
pub use learn::{DmpModel, ForcingForm, ForcingSamples, Gains, LinearSystem, WeightSolution};
pub use regress::{align_demos, regress_weights, AlignedDemoSet, DemoSet};
pub use phase::{phase_at, PhaseConfig};
pub use trajectory::{differentiate, Trajectory};
