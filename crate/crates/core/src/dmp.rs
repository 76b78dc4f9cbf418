//! Rollout of the original, classical and extended systems with fixed-step
//! fourth-order Runge-Kutta.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::affine::{self, LinearMap};
use crate::error::{DmpError, Result};
use crate::learn::DmpModel;
use crate::trajectory::Trajectory;

/// Forcing term of `model` at phase `s`, one entry per dimension.
///
/// Below (or above) every support of a compact family the forcing is
/// exactly zero.
pub fn forcing_value(model: &DmpModel, s: f64) -> Result<DVector<f64>> {
    let basis = model.basis();
    let d = model.dims();
    let mut row = vec![0.0; basis.row_len()];
    match basis.forcing_row_into(s, &mut row) {
        Ok(()) => {}
        Err(DmpError::DegenerateCoverage { .. }) if outside_all_supports(model, s) => {
            return Ok(DVector::zeros(d));
        }
        Err(e) => return Err(e),
    }
    let row = DVector::from_vec(row);
    Ok(DVector::from_fn(d, |p, _| model.coefficients(p).dot(&row)))
}

fn outside_all_supports(model: &DmpModel, s: f64) -> bool {
    let basis = model.basis();
    (0..basis.len()).all(|i| {
        let sup = basis.support(i);
        s <= sup.lower || s >= sup.upper
    })
}

/// Goal position, fixed or as a function of time.
#[derive(Clone)]
pub enum Goal {
    Static(DVector<f64>),
    Moving(Arc<dyn Fn(f64) -> DVector<f64> + Send + Sync>),
}

impl Goal {
    pub fn at(&self, t: f64) -> DVector<f64> {
        match self {
            Goal::Static(g) => g.clone(),
            Goal::Moving(f) => f(t),
        }
    }

    /// Piecewise-linear goal through `(times[k], goals[k])`, held constant
    /// outside the sampled range.
    pub fn from_path(times: Vec<f64>, goals: Vec<DVector<f64>>) -> Result<Self> {
        if times.is_empty() || times.len() != goals.len() {
            return Err(DmpError::invalid("goal path", "needs matching, nonempty times and goals"));
        }
        if let Some(i) = times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(DmpError::NonIncreasingTimes { index: i + 1 });
        }
        let d = goals[0].len();
        if let Some(g) = goals.iter().find(|g| g.len() != d) {
            return Err(DmpError::DimensionMismatch {
                expected: d,
                found: g.len(),
            });
        }
        Ok(Goal::Moving(Arc::new(move |t| {
            let m = times.len();
            if t <= times[0] {
                return goals[0].clone();
            }
            if t >= times[m - 1] {
                return goals[m - 1].clone();
            }
            let k = times.partition_point(|x| *x <= t);
            let u = (t - times[k - 1]) / (times[k] - times[k - 1]);
            &goals[k - 1] + (&goals[k] - &goals[k - 1]) * u
        })))
    }
}

impl fmt::Debug for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Goal::Static(g) => f.debug_tuple("Static").field(&g.as_slice()).finish(),
            Goal::Moving(_) => f.write_str("Moving(..)"),
        }
    }
}

impl From<DVector<f64>> for Goal {
    fn from(g: DVector<f64>) -> Self {
        Goal::Static(g)
    }
}

/// Which second-order system is integrated.
#[derive(Debug, Clone, PartialEq)]
pub enum Formulation {
    /// `tau v' = K (g - x) - D v + (g - x0) * f(s)`
    Original,
    /// `tau v' = K (g - x) - D v - K (g - x0) s + K f(s)`
    Classical,
    /// Classical system conjugated by `S`: `K' = S K S^-1`, `D' = S D S^-1`,
    /// forcing `S f`. Without an explicit map, `S` is the roto-dilatation
    /// from the learned chord to the current one, recomputed every step for
    /// a moving goal.
    Extended(Option<LinearMap>),
}

/// Integration settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RolloutOptions {
    pub tau: f64,
    pub duration: f64,
    pub dt: f64,
}

impl RolloutOptions {
    /// `tau = 1`, twice the learned horizon, `T / 1000` steps.
    pub fn for_model(model: &DmpModel) -> Self {
        let t = model.phase().horizon;
        RolloutOptions {
            tau: 1.0,
            duration: 2.0 * t,
            dt: t / 1000.0,
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, value) in [("tau", self.tau), ("duration", self.duration), ("dt", self.dt)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(DmpError::invalid(name, format!("must be positive, got {value}")));
            }
        }
        Ok(())
    }

    /// Number of steps, `round(duration / dt)`, at least 3.
    pub fn steps(&self) -> usize {
        ((self.duration / self.dt).round() as usize).max(3)
    }
}

/// Instantaneous state of a rollout.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutState {
    pub position: DVector<f64>,
    /// Scaled velocity `v = tau dx/dt`.
    pub velocity: DVector<f64>,
    pub phase: f64,
    pub time: f64,
}

/// `tau v' = kp (g - x) - dp v - ks (g - x0) s + m f(s)`, frozen over a step.
struct Dynamics {
    goal: DVector<f64>,
    kp: DMatrix<f64>,
    dp: DMatrix<f64>,
    ks: DMatrix<f64>,
    m: DMatrix<f64>,
}

fn dynamics(model: &DmpModel, x0: &DVector<f64>, goal: DVector<f64>, form: &Formulation) -> Result<Dynamics> {
    let gains = model.gains();
    let k = gains.elastic_matrix();
    let d = gains.damping_matrix();
    let dims = model.dims();
    Ok(match form {
        Formulation::Original => {
            let m = DMatrix::from_diagonal(&(&goal - x0));
            Dynamics {
                goal,
                kp: k,
                dp: d,
                ks: DMatrix::zeros(dims, dims),
                m,
            }
        }
        Formulation::Classical => Dynamics {
            goal,
            kp: k.clone(),
            dp: d,
            ks: k.clone(),
            m: k,
        },
        Formulation::Extended(map) => {
            let (kp, dp, s) = match map {
                Some(map) => {
                    if map.dims() != dims {
                        return Err(DmpError::DimensionMismatch {
                            expected: dims,
                            found: map.dims(),
                        });
                    }
                    (map.conjugate(&k), map.conjugate(&d), map.matrix().clone())
                }
                None => {
                    let map = affine::rotodilatation(model.learned_x0(), model.learned_g(), x0, &goal)?;
                    let (kp, dp) = affine::conjugate_gains(gains, &map);
                    (kp, dp, map.matrix().clone())
                }
            };
            let m = &kp * s;
            Dynamics {
                goal,
                ks: kp.clone(),
                kp,
                dp,
                m,
            }
        }
    })
}

impl Dynamics {
    fn accel(&self, x0: &DVector<f64>, x: &DVector<f64>, v: &DVector<f64>, s: f64, f: &DVector<f64>) -> DVector<f64> {
        &self.kp * (&self.goal - x) - &self.dp * v - &self.ks * ((&self.goal - x0) * s) + &self.m * f
    }
}

/// Integrates the chosen system from `x0` at rest with `s(0) = 1`.
///
/// The returned trajectory holds positions, velocities `dx/dt` and
/// accelerations at every step, including the final state. A moving goal
/// is sampled at the start of each step.
pub fn rollout(
    model: &DmpModel,
    x0: &DVector<f64>,
    goal: &Goal,
    opts: &RolloutOptions,
    formulation: &Formulation,
) -> Result<Trajectory> {
    opts.validate()?;
    let dims = model.dims();
    if x0.len() != dims {
        return Err(DmpError::DimensionMismatch {
            expected: dims,
            found: x0.len(),
        });
    }
    let g0 = goal.at(0.0);
    if g0.len() != dims {
        return Err(DmpError::DimensionMismatch {
            expected: dims,
            found: g0.len(),
        });
    }
    if x0.iter().chain(g0.iter()).any(|v| !v.is_finite()) {
        return Err(DmpError::NonFinite { what: "rollout endpoints" });
    }

    let steps = opts.steps();
    let h = opts.duration / steps as f64;
    let tau = opts.tau;
    let alpha = model.phase().alpha;
    let phase_at = |t: f64| (-alpha * t / tau).exp();

    let mut positions = DMatrix::zeros(steps + 1, dims);
    let mut velocities = DMatrix::zeros(steps + 1, dims);
    let mut accelerations = DMatrix::zeros(steps + 1, dims);
    let mut times = Vec::with_capacity(steps + 1);

    let mut state = RolloutState {
        position: x0.clone(),
        velocity: DVector::zeros(dims),
        phase: 1.0,
        time: 0.0,
    };
    let mut sys = dynamics(model, x0, g0, formulation)?;
    let moving = matches!(goal, Goal::Moving(_));

    for k in 0..=steps {
        let t = k as f64 * h;
        if moving && k > 0 {
            sys = dynamics(model, x0, goal.at(t), formulation)?;
        }
        let f0 = forcing_value(model, phase_at(t))?;
        let (x, v) = (&state.position, &state.velocity);
        let a0 = sys.accel(x0, x, v, phase_at(t), &f0) / tau;
        times.push(t);
        positions.set_row(k, &x.transpose());
        velocities.set_row(k, &(v / tau).transpose());
        accelerations.set_row(k, &(&a0 / tau).transpose());
        if k == steps {
            break;
        }

        let s_mid = phase_at(t + 0.5 * h);
        let s_end = phase_at(t + h);
        let f_mid = forcing_value(model, s_mid)?;
        let f_end = forcing_value(model, s_end)?;
        let dx = |v: &DVector<f64>| v / tau;

        let k1x = dx(v);
        let k1v = a0;
        let x2 = x + &k1x * (0.5 * h);
        let v2 = v + &k1v * (0.5 * h);
        let k2x = dx(&v2);
        let k2v = sys.accel(x0, &x2, &v2, s_mid, &f_mid) / tau;
        let x3 = x + &k2x * (0.5 * h);
        let v3 = v + &k2v * (0.5 * h);
        let k3x = dx(&v3);
        let k3v = sys.accel(x0, &x3, &v3, s_mid, &f_mid) / tau;
        let x4 = x + &k3x * h;
        let v4 = v + &k3v * h;
        let k4x = dx(&v4);
        let k4v = sys.accel(x0, &x4, &v4, s_end, &f_end) / tau;

        let x_next = x + (k1x + &k2x * 2.0 + &k3x * 2.0 + k4x) * (h / 6.0);
        let v_next = v + (k1v + &k2v * 2.0 + &k3v * 2.0 + k4v) * (h / 6.0);
        if x_next.iter().chain(v_next.iter()).any(|z| !z.is_finite()) {
            return Err(DmpError::Divergence { time: t + h });
        }
        state = RolloutState {
            position: x_next,
            velocity: v_next,
            phase: s_end,
            time: t + h,
        };
    }
    Trajectory::with_derivatives(times, positions, Some(velocities), Some(accelerations))
}
