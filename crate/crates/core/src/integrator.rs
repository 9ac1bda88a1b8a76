//! The prediction-correction scheme
//!
//! ```text
//! q^1     = q^0 + h u^0 + h^2 f^0
//! q^{n+1} = P_{C(t^{n+1})}( 2 q^n - q^{n-1} + h^2 f^n ),
//! u^{n+1} = (q^{n+1} - q^n) / h,
//! ```
//!
//! with `f^n` the average of `f(s, q^n)` over `[t^n, t^{n+1}]`, plus the
//! contact-measure increments `u^n + h f^n - u^{n+1}` and their
//! Kuhn-Tucker multipliers.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::{ActiveSet, ConstraintSystem, Vector};
use crate::nnls::nnls;
use crate::projection::{project_point, TOL_KKT};

/// Relative tolerance for the multiplier fit `|sum l_i grad g_i + k| <= tol (1 + |k|)`.
pub const TOL_MULTIPLIER: f64 = 1e-8;

// 3-point Gauss-Legendre on [0, 1].
const GAUSS_NODES: [f64; 3] = [0.112_701_665_379_258_31, 0.5, 0.887_298_334_620_741_7];
const GAUSS_WEIGHTS: [f64; 3] = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];

type ForceFn = Arc<dyn Fn(f64, &Vector) -> Vector + Send + Sync>;
type EnvelopeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// External force `f(t, q)` with its Lipschitz constant and envelope `F(t)`.
#[derive(Clone)]
pub struct ForceField {
    f: ForceFn,
    envelope: EnvelopeFn,
    pub lipschitz_kl: f64,
    /// `sup_t F(t)`.
    pub sup_norm: f64,
}

impl fmt::Debug for ForceField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ForceField")
            .field("lipschitz_kl", &self.lipschitz_kl)
            .field("sup_norm", &self.sup_norm)
            .finish()
    }
}

impl ForceField {
    pub fn new<F, E>(f: F, lipschitz_kl: f64, envelope: E, sup_norm: f64) -> Self
    where
        F: Fn(f64, &Vector) -> Vector + Send + Sync + 'static,
        E: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self { f: Arc::new(f), envelope: Arc::new(envelope), lipschitz_kl, sup_norm }
    }

    pub fn constant(value: Vector) -> Self {
        let norm = value.norm();
        Self::new(move |_, _| value.clone(), 0.0, move |_| norm, norm)
    }

    pub fn zero(dim: usize) -> Self {
        Self::constant(Vector::zeros(dim))
    }

    pub fn eval(&self, t: f64, q: &Vector) -> Vector {
        (self.f)(t, q)
    }

    pub fn envelope(&self, t: f64) -> f64 {
        (self.envelope)(t)
    }

    /// `(1/h) int_{t0}^{t0+h} f(s, q) ds` by 3-point Gauss-Legendre.
    pub fn average(&self, t0: f64, h: f64, q: &Vector) -> Vector {
        let mut acc = Vector::zeros(q.len());
        for (x, w) in GAUSS_NODES.iter().zip(GAUSS_WEIGHTS) {
            acc.axpy(w, &self.eval(t0 + x * h, q), 1.0);
        }
        acc
    }

    /// `int_0^T F(t) dt` by composite Gauss-Legendre on 64 panels.
    pub fn envelope_integral(&self, horizon: f64) -> f64 {
        let panels = 64;
        let h = horizon / panels as f64;
        (0..panels)
            .map(|k| {
                let t0 = k as f64 * h;
                GAUSS_NODES.iter().zip(GAUSS_WEIGHTS).map(|(x, w)| w * self.envelope(t0 + x * h)).sum::<f64>() * h
            })
            .sum()
    }
}

/// Two consecutive positions of the scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeState {
    pub n: usize,
    pub t: f64,
    pub q_prev: Vector,
    pub q_curr: Vector,
    pub u_curr: Vector,
    /// Length of the step that produced `q_curr`.
    pub h: f64,
}

/// Multipliers fitted to one contact increment.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierFit {
    /// One entry per constraint, zero off the active set.
    pub lambda: Vec<f64>,
    pub residual: f64,
    /// `residual <= TOL_MULTIPLIER * (1 + |increment|)`.
    pub in_cone: bool,
}

/// Everything produced by one step besides the new state.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// `u^n + h f^n - u^{n+1}`.
    pub increment: Vector,
    /// `h f^n`.
    pub impulse: Vector,
    pub multipliers: MultiplierFit,
    pub active: ActiveSet,
    pub projection_distance: f64,
}

/// Grid values of a run. Index `k` refers to `t^k`; the per-step arrays
/// (`impulses`, `increments`, `multipliers`) hold at `k` the quantities of
/// the step ending at `t^k` and are zero at `k = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub h: f64,
    pub times: Vec<f64>,
    pub positions: Vec<Vector>,
    pub velocities: Vec<Vector>,
    pub impulses: Vec<Vector>,
    pub active: Vec<ActiveSet>,
    /// False when the final step was shortened to land on the horizon.
    pub uniform: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn steps(&self) -> usize {
        self.times.len().saturating_sub(1)
    }

    /// Piecewise-linear position at time `t`.
    pub fn position_at(&self, t: f64) -> Vector {
        let k = match self.times.iter().position(|&s| s > t) {
            Some(0) => return self.positions[0].clone(),
            Some(k) => k,
            None => return self.positions.last().expect("nonempty trajectory").clone(),
        };
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let s = (t - t0) / (t1 - t0);
        &self.positions[k - 1] * (1.0 - s) + &self.positions[k] * s
    }

    /// Piecewise-constant velocity: `u^{k}` on `[t^{k-1}, t^k)`.
    pub fn velocity_at(&self, t: f64) -> Vector {
        match self.times.iter().position(|&s| s > t) {
            Some(0) => self.velocities[0].clone(),
            Some(k) => self.velocities[k].clone(),
            None => self.velocities.last().expect("nonempty trajectory").clone(),
        }
    }
}

/// Increments of the discrete contact measure `k_h`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactMeasure {
    pub increments: Vec<Vector>,
    pub multipliers: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub cumulative_variation: f64,
}

impl ContactMeasure {
    /// `sum_k increment_k`.
    pub fn total(&self) -> Vector {
        let dim = self.increments.first().map_or(0, |v| v.len());
        self.increments.iter().fold(Vector::zeros(dim), |acc, k| acc + k)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub trajectory: Trajectory,
    pub contact: ContactMeasure,
}

fn first_violation(sys: &ConstraintSystem, t: f64, q: &Vector, strict: bool) -> Result<Option<(usize, f64)>> {
    let values = sys.values(t, q)?;
    Ok(values
        .iter()
        .enumerate()
        .filter(|(_, &v)| if strict { v <= 0.0 } else { v < 0.0 })
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, &v)| (sys.constraints[i].id, v)))
}

/// `(q^0, q^1) = (q0, q0 + h u0 + h^2 f^0)`.
pub fn initialize(sys: &ConstraintSystem, field: &ForceField, q0: &Vector, u0: &Vector, h: f64) -> Result<SchemeState> {
    if q0.len() != sys.dim {
        return Err(Error::Dimension { expected: sys.dim, got: q0.len() });
    }
    if u0.len() != sys.dim {
        return Err(Error::Dimension { expected: sys.dim, got: u0.len() });
    }
    if !(h > 0.0) {
        return Err(Error::Config(format!("step size must be positive, got {h}")));
    }
    if let Some((id, value)) = first_violation(sys, 0.0, q0, true)? {
        return Err(Error::InfeasibleStart { id, value });
    }
    let f0 = field.average(0.0, h, q0);
    let q1 = q0 + u0 * h + f0 * (h * h);
    if let Some((id, value)) = first_violation(sys, h, &q1, false)? {
        return Err(Error::StepSizeTooLarge { id, margin: -value });
    }
    Ok(SchemeState { n: 1, t: h, u_curr: (&q1 - q0) / h, q_prev: q0.clone(), q_curr: q1, h })
}

/// Nonnegative least-squares fit of `-increment = sum_i l_i grad g_i(t, q)`
/// over the constraints active at `(t, q)`.
pub fn extract_multipliers(increment: &Vector, sys: &ConstraintSystem, t: f64, q: &Vector) -> Result<MultiplierFit> {
    let active = sys.active_set(t, q, 0.0)?;
    let mut lambda = vec![0.0; sys.len()];
    let scale = 1.0 + increment.norm();
    if active.is_empty() {
        let residual = increment.norm();
        return Ok(MultiplierFit { lambda, residual, in_cone: residual <= TOL_MULTIPLIER * scale });
    }
    let cols = active
        .indices
        .iter()
        .map(|&i| sys.constraints[i].gradient(t, q))
        .collect::<Result<Vec<_>>>()?;
    let a = DMatrix::from_columns(&cols);
    let (x, residual) = nnls(&a, &(-increment));
    for (k, &i) in active.indices.iter().enumerate() {
        lambda[i] = x[k];
    }
    Ok(MultiplierFit { lambda, residual, in_cone: residual <= TOL_MULTIPLIER * scale })
}

/// Advances by a step of length `h` landing at `t_next`. When `h` equals
/// `state.h` the predictor is exactly `2 q^n - q^{n-1} + h^2 f^n`.
pub fn step_to(
    state: &SchemeState,
    sys: &ConstraintSystem,
    field: &ForceField,
    t_next: f64,
    h: f64,
) -> Result<(SchemeState, StepRecord)> {
    if !(h > 0.0) {
        return Err(Error::Config(format!("step length must be positive, got {h}")));
    }
    let f = field.average(state.t, h, &state.q_curr);
    let predicted = if h == state.h {
        &state.q_curr * 2.0 - &state.q_prev + &f * (h * h)
    } else {
        &state.q_curr + (&state.u_curr + &f * h) * h
    };
    let step = state.n;
    let proj = project_point(sys, t_next, &predicted)?;
    if !proj.certified {
        return Err(Error::LeftTube { step, distance: proj.distance, eta: sys.eta });
    }
    if !proj.converged {
        return Err(Error::ProjectionFailed { step, detail: format!("{} Newton iterations", proj.iterations) });
    }
    let gap = sys.feasibility_gap(t_next, &proj.point)?;
    if gap > TOL_KKT * (1.0 + predicted.norm()) {
        return Err(Error::ProjectionFailed { step, detail: format!("feasibility gap {gap:e}") });
    }
    let q_next = proj.point;
    let u_next = (&q_next - &state.q_curr) / h;
    let impulse = &f * h;
    let increment = &state.u_curr + &impulse - &u_next;
    let multipliers = extract_multipliers(&increment, sys, t_next, &q_next)?;
    let active = sys.active_set(t_next, &q_next, 0.0)?;
    let next = SchemeState {
        n: state.n + 1,
        t: t_next,
        q_prev: state.q_curr.clone(),
        q_curr: q_next,
        u_curr: u_next,
        h,
    };
    Ok((next, StepRecord { increment, impulse, multipliers, active, projection_distance: proj.distance }))
}

/// One step of the uniform scheme.
pub fn step(state: &SchemeState, sys: &ConstraintSystem, field: &ForceField) -> Result<(SchemeState, StepRecord)> {
    step_to(state, sys, field, (state.n + 1) as f64 * state.h, state.h)
}

/// Grid `0, h, 2h, ..., T`; the last step is shortened when `T / h` is
/// not an integer.
pub fn time_grid(h: f64, horizon: f64) -> (Vec<f64>, bool) {
    let ratio = horizon / h;
    let nearest = ratio.round();
    let (n, uniform) = if (ratio - nearest).abs() <= 1e-9 * ratio.max(1.0) {
        (nearest as usize, true)
    } else {
        (ratio.floor() as usize, false)
    };
    let mut times: Vec<f64> = (0..=n).map(|k| k as f64 * h).collect();
    if uniform {
        *times.last_mut().expect("n >= 0") = horizon;
    } else {
        times.push(horizon);
    }
    (times, uniform)
}

fn with_context(err: Error, state: &SchemeState) -> Error {
    Error::Step { step: state.n, t: state.t, q: state.q_curr.iter().copied().collect(), source: Box::new(err) }
}

/// Runs the scheme on `[0, T]`.
pub fn run(
    sys: &ConstraintSystem,
    field: &ForceField,
    q0: &Vector,
    u0: &Vector,
    h: f64,
    horizon: f64,
) -> Result<RunOutput> {
    if !(h > 0.0 && horizon > h) {
        return Err(Error::Config(format!("need 0 < h < T, got h={h}, T={horizon}")));
    }
    let (times, uniform) = time_grid(h, horizon);
    let dim = sys.dim;
    let mut state = initialize(sys, field, q0, u0, h)?;
    let n_points = times.len();

    let mut positions = Vec::with_capacity(n_points);
    let mut velocities = Vec::with_capacity(n_points);
    let mut impulses = Vec::with_capacity(n_points);
    let mut active = Vec::with_capacity(n_points);
    let mut increments = Vec::with_capacity(n_points);
    let mut multipliers = Vec::with_capacity(n_points);
    let mut residuals = Vec::with_capacity(n_points);

    positions.push(q0.clone());
    velocities.push(u0.clone());
    impulses.push(Vector::zeros(dim));
    active.push(sys.active_set(0.0, q0, 0.0)?);
    increments.push(Vector::zeros(dim));
    multipliers.push(vec![0.0; sys.len()]);
    residuals.push(0.0);

    // The initial step is not projected; its increment is u0 + h f0 - u1.
    let f0 = field.average(0.0, h, q0);
    let impulse0 = f0 * h;
    let inc0 = u0 + &impulse0 - &state.u_curr;
    let fit0 = extract_multipliers(&inc0, sys, times[1], &state.q_curr)?;
    positions.push(state.q_curr.clone());
    velocities.push(state.u_curr.clone());
    impulses.push(impulse0);
    active.push(sys.active_set(times[1], &state.q_curr, 0.0)?);
    increments.push(inc0);
    residuals.push(fit0.residual);
    multipliers.push(fit0.lambda);
    state.t = times[1];

    for k in 2..n_points {
        let t_next = times[k];
        let h_k = if !uniform && k == n_points - 1 { t_next - times[k - 1] } else { h };
        let (next, record) = step_to(&state, sys, field, t_next, h_k).map_err(|e| with_context(e, &state))?;
        positions.push(next.q_curr.clone());
        velocities.push(next.u_curr.clone());
        impulses.push(record.impulse);
        active.push(record.active);
        increments.push(record.increment);
        residuals.push(record.multipliers.residual);
        multipliers.push(record.multipliers.lambda);
        state = next;
    }

    let cumulative_variation = increments.iter().map(|k| k.norm()).sum();
    Ok(RunOutput {
        trajectory: Trajectory { h, times, positions, velocities, impulses, active, uniform },
        contact: ContactMeasure { increments, multipliers, residuals, cumulative_variation },
    })
}
