//! Moving admissible sets `C(t) = { q : g_i(t, q) >= 0 }` and the
//! certificates attached to them: active sets, normal cones, admissible
//! velocity polyhedra, the prox-regularity constant, the reverse triangle
//! constant and "good directions".

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linprog::{self, LpOutcome};
use crate::qp;

pub type Vector = DVector<f64>;

type ScalarFn = Arc<dyn Fn(f64, &Vector) -> f64 + Send + Sync>;
type VectorFn = Arc<dyn Fn(f64, &Vector) -> Vector + Send + Sync>;
type MatrixFn = Arc<dyn Fn(f64, &Vector) -> DMatrix<f64> + Send + Sync>;

/// Below this a reverse-triangle minimum or a good-direction margin is
/// treated as zero.
pub const TOL_SINGULAR: f64 = 1e-6;

/// Default cap on the prox-regularity constant of affine constraints.
pub const DEFAULT_ETA_MAX: f64 = 1e6;

const SIMPLEX_GRID_POINTS: usize = 21;
const SIMPLEX_GRID_MAX_ROWS: usize = 4;
const SIMPLEX_RANDOM_DRAWS: usize = 1 << 14;

/// Numerical threshold deciding `g_i = 0`.
pub fn activity_tolerance(q: &Vector) -> f64 {
    1e-8 * (1.0 + q.norm())
}

/// One smooth constraint `g(t, q) >= 0`.
#[derive(Clone)]
pub struct ConstraintFunction {
    /// 1-based label used in messages; reassigned by [`ConstraintSystem::new`].
    pub id: usize,
    value: ScalarFn,
    gradient: VectorFn,
    dt: Option<ScalarFn>,
    hessian: Option<MatrixFn>,
    /// Bound on `|D^2_q g|` over the working neighborhood.
    pub hessian_bound: f64,
    /// Bound on `|d^2_t g| + |d_t grad_q g|`.
    pub dt_bounds: f64,
}

impl fmt::Debug for ConstraintFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConstraintFunction")
            .field("id", &self.id)
            .field("hessian_bound", &self.hessian_bound)
            .field("dt_bounds", &self.dt_bounds)
            .field("moving", &self.dt.is_some())
            .finish()
    }
}

impl ConstraintFunction {
    pub fn new<V, G>(value: V, gradient: G) -> Self
    where
        V: Fn(f64, &Vector) -> f64 + Send + Sync + 'static,
        G: Fn(f64, &Vector) -> Vector + Send + Sync + 'static,
    {
        Self {
            id: 0,
            value: Arc::new(value),
            gradient: Arc::new(gradient),
            dt: None,
            hessian: None,
            hessian_bound: 0.0,
            dt_bounds: 0.0,
        }
    }

    /// Time derivative `d_t g`. Constraints without one are static.
    pub fn with_time_derivative<D>(mut self, dt: D) -> Self
    where
        D: Fn(f64, &Vector) -> f64 + Send + Sync + 'static,
    {
        self.dt = Some(Arc::new(dt));
        self
    }

    /// Analytic Hessian in `q`; otherwise it is differenced from the gradient.
    pub fn with_hessian<H>(mut self, hessian: H) -> Self
    where
        H: Fn(f64, &Vector) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.hessian = Some(Arc::new(hessian));
        self
    }

    pub fn with_bounds(mut self, hessian_bound: f64, dt_bounds: f64) -> Self {
        self.hessian_bound = hessian_bound;
        self.dt_bounds = dt_bounds;
        self
    }

    /// `g(t, q) = <normal, q> + offset + speed * t`.
    pub fn half_space(normal: Vector, offset: f64, speed: f64) -> Self {
        let dim = normal.len();
        let n_val = normal.clone();
        let n_grad = normal;
        let mut g = Self::new(
            move |t, q: &Vector| n_val.dot(q) + offset + speed * t,
            move |_, _| n_grad.clone(),
        )
        .with_hessian(move |_, _| DMatrix::zeros(dim, dim));
        if speed != 0.0 {
            g = g.with_time_derivative(move |_, _| speed);
        }
        g
    }

    /// `g(q) = |q - center|^2 - radius^2`: the exterior of a closed ball.
    pub fn ball_exterior(center: Vector, radius: f64) -> Self {
        let dim = center.len();
        let c_val = center.clone();
        let c_grad = center;
        Self::new(
            move |_, q: &Vector| (q - &c_val).norm_squared() - radius * radius,
            move |_, q: &Vector| 2.0 * (q - &c_grad),
        )
        .with_hessian(move |_, _| DMatrix::identity(dim, dim) * 2.0)
        .with_bounds(2.0, 0.0)
    }

    pub fn is_moving(&self) -> bool {
        self.dt.is_some()
    }

    fn check(&self, t: f64, x: f64, what: &str) -> Result<f64> {
        if x.is_finite() {
            Ok(x)
        } else {
            Err(Error::ConstraintEvaluation { id: self.id, t, what: format!("{what} = {x}") })
        }
    }

    pub fn value(&self, t: f64, q: &Vector) -> Result<f64> {
        self.check(t, (self.value)(t, q), "value")
    }

    pub fn gradient(&self, t: f64, q: &Vector) -> Result<Vector> {
        let g = (self.gradient)(t, q);
        if g.len() != q.len() {
            return Err(Error::Dimension { expected: q.len(), got: g.len() });
        }
        if g.iter().all(|x| x.is_finite()) {
            Ok(g)
        } else {
            Err(Error::ConstraintEvaluation { id: self.id, t, what: "non-finite gradient".into() })
        }
    }

    pub fn time_derivative(&self, t: f64, q: &Vector) -> Result<f64> {
        match &self.dt {
            Some(dt) => self.check(t, dt(t, q), "time derivative"),
            None => Ok(0.0),
        }
    }

    pub fn hessian(&self, t: f64, q: &Vector) -> Result<DMatrix<f64>> {
        if let Some(h) = &self.hessian {
            return Ok(h(t, q));
        }
        let d = q.len();
        let step = 1e-6 * (1.0 + q.norm());
        let mut h = DMatrix::zeros(d, d);
        for j in 0..d {
            let mut qp = q.clone();
            let mut qm = q.clone();
            qp[j] += step;
            qm[j] -= step;
            let col = (self.gradient(t, &qp)? - self.gradient(t, &qm)?) / (2.0 * step);
            h.set_column(j, &col);
        }
        Ok((&h + h.transpose()) * 0.5)
    }
}

/// Regularity constants a scenario asserts for its constraint system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularityConstants {
    pub alpha: f64,
    pub beta: f64,
    pub hess_bound: f64,
    pub kappa: f64,
    pub lipschitz_c0: f64,
}

/// The admissible set `C(t)` as an intersection of smooth constraints.
#[derive(Clone, Debug)]
pub struct ConstraintSystem {
    pub dim: usize,
    pub constraints: Vec<ConstraintFunction>,
    pub alpha: f64,
    pub beta: f64,
    pub hess_bound: f64,
    pub kappa: f64,
    pub lipschitz_c0: f64,
    pub eta: f64,
    pub eta_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActiveSet {
    /// Positions into `ConstraintSystem::constraints`, ascending.
    pub indices: Vec<usize>,
    pub rho: f64,
}

impl ActiveSet {
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn bitmask(&self) -> u64 {
        self.indices.iter().filter(|&&i| i < 64).fold(0, |m, &i| m | (1 << i))
    }
}

#[derive(Debug, Clone)]
pub struct NormalConeGenerators {
    /// `-grad_q g_i(t, q)` for each active constraint.
    pub generators: Vec<Vector>,
    pub t: f64,
    pub q: Vector,
}

impl NormalConeGenerators {
    /// The cone element `sum_i weights_i * generator_i`.
    pub fn combine(&self, weights: &[f64]) -> Vector {
        let mut v = Vector::zeros(self.q.len());
        for (g, w) in self.generators.iter().zip(weights) {
            v.axpy(*w, g, 1.0);
        }
        v
    }
}

/// `{ u : offsets_i + <normals_i, u> >= 0 }`.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityPolyhedron {
    pub normals: Vec<Vector>,
    pub offsets: Vec<f64>,
    pub t: f64,
    pub q: Vector,
}

impl VelocityPolyhedron {
    /// A polyhedron not tied to a point of the state space.
    pub fn from_rows(normals: Vec<Vector>, offsets: Vec<f64>) -> Self {
        assert_eq!(normals.len(), offsets.len());
        let dim = normals.first().map_or(0, |n| n.len());
        Self { normals, offsets, t: 0.0, q: Vector::zeros(dim) }
    }

    pub fn rows(&self) -> usize {
        self.normals.len()
    }

    /// Smallest row slack `offsets_i + <normals_i, u>` (infinite with no rows).
    pub fn min_slack(&self, u: &Vector) -> f64 {
        self.normals
            .iter()
            .zip(&self.offsets)
            .map(|(n, b)| b + n.dot(u))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, u: &Vector, tol: f64) -> bool {
        self.min_slack(u) >= -tol
    }
}

/// Constants derived from a good-direction certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityEstimate {
    pub delta: f64,
    pub direction: Vector,
    pub radius_r: f64,
    pub tau: f64,
    pub kappa0: f64,
    pub nu_min: f64,
}

impl AdmissibilityEstimate {
    pub fn new(delta: f64, direction: Vector, radius_r: f64, tau: f64, c0: f64, eta: f64) -> Self {
        let kappa0 = c0 / delta + 1.0;
        let nu_min = f64::min(
            eta * delta / (2.0 * kappa0 + 2.0 * c0 + delta).powi(2),
            radius_r / (2.0 * (c0 + delta + 2.0 * kappa0)),
        );
        Self { delta, direction, radius_r, tau, kappa0, nu_min }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DirectionCertificate {
    Certified(AdmissibilityEstimate),
    /// No direction with margin above [`TOL_SINGULAR`]; carries the best margin found.
    Failed { best_delta: f64 },
}

impl DirectionCertificate {
    pub fn estimate(&self) -> Option<&AdmissibilityEstimate> {
        match self {
            Self::Certified(e) => Some(e),
            Self::Failed { .. } => None,
        }
    }
}

impl ConstraintSystem {
    pub fn new(
        dim: usize,
        mut constraints: Vec<ConstraintFunction>,
        constants: RegularityConstants,
    ) -> Result<Self> {
        let RegularityConstants { alpha, beta, hess_bound, kappa, lipschitz_c0 } = constants;
        if dim == 0 {
            return Err(Error::InvalidConstants("dimension must be at least 1".into()));
        }
        if !(kappa > 0.0) {
            return Err(Error::InvalidConstants(format!("kappa must be positive, got {kappa}")));
        }
        if !(lipschitz_c0 >= 0.0) {
            return Err(Error::InvalidConstants(format!("c0 must be nonnegative, got {lipschitz_c0}")));
        }
        if !(beta >= alpha) {
            return Err(Error::InvalidConstants(format!("beta {beta} < alpha {alpha}")));
        }
        if lipschitz_c0 != 0.0 && constraints.iter().all(|g| !g.is_moving()) {
            return Err(Error::InvalidConstants("static system must have c0 = 0".into()));
        }
        for (i, g) in constraints.iter_mut().enumerate() {
            g.id = i + 1;
        }
        let mut sys = Self {
            dim,
            constraints,
            alpha,
            beta,
            hess_bound,
            kappa,
            lipschitz_c0,
            eta: 0.0,
            eta_max: DEFAULT_ETA_MAX,
        };
        sys.eta = sys.prox_constant()?;
        Ok(sys)
    }

    /// Replace the prox-regularity constant derived from `alpha / M`.
    pub fn with_eta(mut self, eta: f64) -> Result<Self> {
        if !(eta > 0.0) {
            return Err(Error::InvalidConstants(format!("eta must be positive, got {eta}")));
        }
        self.eta = eta;
        Ok(self)
    }

    pub fn with_eta_max(mut self, eta_max: f64) -> Result<Self> {
        self.eta_max = eta_max;
        self.eta = self.prox_constant()?;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn is_static(&self) -> bool {
        self.constraints.iter().all(|g| !g.is_moving())
    }

    fn check_dim(&self, q: &Vector) -> Result<()> {
        if q.len() == self.dim {
            Ok(())
        } else {
            Err(Error::Dimension { expected: self.dim, got: q.len() })
        }
    }

    pub fn values(&self, t: f64, q: &Vector) -> Result<Vec<f64>> {
        self.check_dim(q)?;
        self.constraints.iter().map(|g| g.value(t, q)).collect()
    }

    /// `max_i (-g_i(t, q))_+`.
    pub fn feasibility_gap(&self, t: f64, q: &Vector) -> Result<f64> {
        Ok(self.values(t, q)?.into_iter().fold(0.0, |m, v| m.max(-v)))
    }

    /// Constraints with `g_i(t, q) <= max(rho, tol_act)`.
    pub fn active_set(&self, t: f64, q: &Vector, rho: f64) -> Result<ActiveSet> {
        let threshold = rho.max(activity_tolerance(q));
        let values = self.values(t, q)?;
        let indices = values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v <= threshold)
            .map(|(i, _)| i)
            .collect();
        Ok(ActiveSet { indices, rho })
    }

    pub fn normal_cone(&self, t: f64, q: &Vector) -> Result<NormalConeGenerators> {
        let active = self.active_set(t, q, 0.0)?;
        let generators = active
            .indices
            .iter()
            .map(|&i| self.constraints[i].gradient(t, q).map(|g| -g))
            .collect::<Result<_>>()?;
        Ok(NormalConeGenerators { generators, t, q: q.clone() })
    }

    /// Admissible velocities `{ u : d_t g_i + <grad_q g_i, u> >= 0, i active }`.
    pub fn velocity_polyhedron(&self, t: f64, q: &Vector) -> Result<VelocityPolyhedron> {
        let active = self.active_set(t, q, 0.0)?;
        let mut normals = Vec::with_capacity(active.indices.len());
        let mut offsets = Vec::with_capacity(active.indices.len());
        for &i in &active.indices {
            let g = &self.constraints[i];
            normals.push(g.gradient(t, q)?);
            offsets.push(g.time_derivative(t, q)?);
        }
        Ok(VelocityPolyhedron { normals, offsets, t, q: q.clone() })
    }

    /// `alpha / M`, capped at `eta_max` when `M = 0` (affine constraints).
    pub fn prox_constant(&self) -> Result<f64> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::InvalidConstants(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.hess_bound >= 0.0) || !self.hess_bound.is_finite() {
            return Err(Error::InvalidConstants(format!(
                "Hessian bound must be nonnegative, got {}",
                self.hess_bound
            )));
        }
        if self.hess_bound == 0.0 {
            return Ok(self.eta_max);
        }
        Ok((self.alpha / self.hess_bound).min(self.eta_max))
    }

    fn unit_gradients(&self, t: f64, q: &Vector, rho: f64) -> Result<Vec<Vector>> {
        let active = self.active_set(t, q, rho)?;
        active
            .indices
            .iter()
            .map(|&i| {
                let g = self.constraints[i].gradient(t, q)?;
                let n = g.norm();
                if n == 0.0 {
                    Err(Error::ConstraintEvaluation {
                        id: self.constraints[i].id,
                        t,
                        what: "vanishing gradient on the boundary".into(),
                    })
                } else {
                    Ok(g / n)
                }
            })
            .collect()
    }

    /// Smallest `gamma` with `sum l_i |n_i| <= gamma |sum l_i n_i|` over the
    /// constraints active at level `rho`; infinite when the gradients are
    /// positively dependent.
    pub fn reverse_triangle_constant(&self, t: f64, q: &Vector, rho: f64) -> Result<f64> {
        let units = self.unit_gradients(t, q, rho)?;
        Ok(reverse_triangle_from_units(&units))
    }

    /// Direction making an angle of at least `delta` with every proximal
    /// normal at `(t, q)`.
    pub fn good_direction(&self, t: f64, q: &Vector, rho: f64) -> Result<DirectionCertificate> {
        let units = self.unit_gradients(t, q, rho)?;
        let radius_r = self.kappa;
        let tau = if self.lipschitz_c0 > 0.0 { self.kappa / self.lipschitz_c0 } else { f64::INFINITY };
        if units.is_empty() {
            let mut e = Vector::zeros(self.dim);
            e[0] = 1.0;
            return Ok(DirectionCertificate::Certified(AdmissibilityEstimate::new(
                1.0,
                e,
                radius_r,
                tau,
                self.lipschitz_c0,
                self.eta,
            )));
        }
        match good_direction_from_units(&units) {
            Some((direction, delta)) => Ok(DirectionCertificate::Certified(AdmissibilityEstimate::new(
                delta,
                direction,
                radius_r,
                tau,
                self.lipschitz_c0,
                self.eta,
            ))),
            None => {
                let best_delta = lp_margin(&units).map_or(0.0, |(_, d)| d);
                Ok(DirectionCertificate::Failed { best_delta })
            }
        }
    }

    /// `<v, y - x> - |v| |x - y|^2 / (2 eta)`; nonpositive when the
    /// hypomonotone inequality holds for this sample.
    pub fn hypomonotonicity_residual(&self, x: &Vector, y: &Vector, v: &Vector) -> f64 {
        let v_norm = v.norm();
        if v_norm == 0.0 {
            return 0.0;
        }
        let diff = y - x;
        v.dot(&diff) - v_norm * diff.norm_squared() / (2.0 * self.eta)
    }
}

fn simplex_objective(units: &[Vector], mu: &[f64]) -> Vector {
    let mut w = Vector::zeros(units[0].len());
    for (n, m) in units.iter().zip(mu) {
        w.axpy(*m, n, 1.0);
    }
    w
}

/// Pairwise exact line search on `|sum mu_i n_i|^2` over the unit simplex.
fn simplex_descent(units: &[Vector], mu: &mut [f64]) {
    let p = units.len();
    let mut w = simplex_objective(units, mu);
    for _ in 0..500 {
        let before = w.norm_squared();
        for i in 0..p {
            for j in 0..p {
                if i == j {
                    continue;
                }
                let d = &units[i] - &units[j];
                let dd = d.norm_squared();
                if dd == 0.0 {
                    continue;
                }
                let s = (-w.dot(&d) / dd).clamp(-mu[i], mu[j]);
                if s != 0.0 {
                    mu[i] += s;
                    mu[j] -= s;
                    w.axpy(s, &d, 1.0);
                }
            }
        }
        if before - w.norm_squared() <= 1e-16 * before.max(1e-300) {
            break;
        }
    }
}

fn compositions(parts: usize, total: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if parts == 1 {
        prefix.push(total);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for k in 0..=total {
        prefix.push(k);
        compositions(parts - 1, total - k, prefix, out);
        prefix.pop();
    }
}

pub(crate) fn reverse_triangle_from_units(units: &[Vector]) -> f64 {
    match units.len() {
        0 | 1 => return 1.0,
        _ => {}
    }
    let p = units.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut consider = |mu: Vec<f64>| {
        let val = simplex_objective(units, &mu).norm();
        if best.as_ref().is_none_or(|(b, _)| val < *b) {
            best = Some((val, mu));
        }
    };
    if p <= SIMPLEX_GRID_MAX_ROWS {
        let steps = SIMPLEX_GRID_POINTS - 1;
        let mut all = Vec::new();
        compositions(p, steps, &mut Vec::new(), &mut all);
        for c in all {
            consider(c.iter().map(|&k| k as f64 / steps as f64).collect());
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..SIMPLEX_RANDOM_DRAWS {
            let e: Vec<f64> = (0..p).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
            let s: f64 = e.iter().sum();
            consider(e.iter().map(|x| x / s).collect());
        }
    }
    let (_, mut mu) = best.expect("nonempty simplex sample");
    simplex_descent(units, &mut mu);
    let min = simplex_objective(units, &mu).norm();
    if min < TOL_SINGULAR {
        f64::INFINITY
    } else {
        1.0 / min
    }
}

/// Linear program over the box `|u|_inf <= 1`: maximize `delta` with
/// `<u, -n_i> >= delta` for unit normals `n_i`. Returns `(u, delta)`.
fn lp_margin(units: &[Vector]) -> Option<(Vector, f64)> {
    let d = units[0].len();
    // u = w - 1 with w in [0, 2]^d; variables (w, delta) >= 0.
    let mut a = Vec::with_capacity(units.len() + d);
    let mut b = Vec::with_capacity(units.len() + d);
    for n in units {
        let mut row: Vec<f64> = n.iter().copied().collect();
        row.push(1.0);
        a.push(row);
        b.push(n.sum());
    }
    for j in 0..d {
        let mut row = vec![0.0; d + 1];
        row[j] = 1.0;
        a.push(row);
        b.push(2.0);
    }
    let mut c = vec![0.0; d + 1];
    c[d] = 1.0;
    match linprog::maximize(&c, &a, &b) {
        LpOutcome::Optimal { x, value } => {
            let u = Vector::from_iterator(d, x[..d].iter().map(|w| w - 1.0));
            Some((u, value))
        }
        _ => None,
    }
}

/// Certified unit direction and Euclidean margin, or `None` when the LP
/// margin does not exceed [`TOL_SINGULAR`].
pub(crate) fn good_direction_from_units(units: &[Vector]) -> Option<(Vector, f64)> {
    let (u_lp, delta_lp) = lp_margin(units)?;
    if delta_lp <= TOL_SINGULAR {
        return None;
    }
    // Euclidean refinement: the minimum-norm u with <u, -n_i> >= 1 gives the
    // largest margin 1/|u| over the unit sphere.
    let poly = VelocityPolyhedron::from_rows(units.iter().map(|n| -n).collect(), vec![-1.0; units.len()]);
    let origin = Vector::zeros(units[0].len());
    if let Ok(sol) = qp::project(&poly.normals, &poly.offsets, &origin) {
        let norm = sol.point.norm();
        if norm > 0.0 && poly.contains(&sol.point, 1e-9) {
            return Some((&sol.point / norm, 1.0 / norm));
        }
    }
    let norm = u_lp.norm();
    let delta = units.iter().map(|n| -n.dot(&u_lp)).fold(f64::INFINITY, f64::min) / norm;
    Some((u_lp / norm, delta))
}
