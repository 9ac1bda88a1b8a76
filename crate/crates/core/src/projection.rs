//! Projection of points onto `C(t)` and of velocities onto admissible
//! velocity polyhedra.
//!
//! Points are projected by a damped semismooth Newton method on the
//! Fischer-Burmeister reformulation of the KKT system
//!
//! ```text
//! y - x - sum_i l_i grad g_i(y) = 0,    phi(l_i, g_i(y)) = 0,
//! phi(a, b) = a + b - sqrt(a^2 + b^2),
//! ```
//!
//! started from `(x, 0)` and, if that fails, from the point reached by
//! cyclic single-constraint Newton corrections.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{ConstraintSystem, Vector, VelocityPolyhedron};
use crate::nnls::nnls;
use crate::qp;

pub const TOL_KKT: f64 = 1e-9;
pub const MAX_NEWTON_ITER: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub point: Vector,
    /// One multiplier per constraint (point projection) or per row
    /// (velocity projection).
    pub multipliers: Vec<f64>,
    pub distance: f64,
    /// KKT conditions verified at `tol_kkt * (1 + |x|)`.
    pub converged: bool,
    /// The distance is below the prox-regularity constant, so the
    /// projection is the unique nearest point.
    pub certified: bool,
    pub iterations: usize,
}

struct Kkt {
    values: Vec<f64>,
    grads: Vec<Vector>,
}

impl Kkt {
    fn eval(sys: &ConstraintSystem, t: f64, y: &Vector) -> Result<Self> {
        let values = sys.values(t, y)?;
        let grads = sys.constraints.iter().map(|g| g.gradient(t, y)).collect::<Result<_>>()?;
        Ok(Self { values, grads })
    }
}

fn fischer_burmeister(a: f64, b: f64) -> f64 {
    a + b - a.hypot(b)
}

fn residual(kkt: &Kkt, x: &Vector, y: &Vector, lambda: &[f64]) -> DVector<f64> {
    let d = x.len();
    let p = lambda.len();
    let mut f = DVector::zeros(d + p);
    let mut stat = y - x;
    for (g, l) in kkt.grads.iter().zip(lambda) {
        stat.axpy(-l, g, 1.0);
    }
    f.rows_mut(0, d).copy_from(&stat);
    for i in 0..p {
        f[d + i] = fischer_burmeister(lambda[i], kkt.values[i]);
    }
    f
}

struct NewtonOutcome {
    point: Vector,
    lambda: Vec<f64>,
    iterations: usize,
}

fn newton(sys: &ConstraintSystem, t: f64, x: &Vector, y0: Vector, l0: Vec<f64>) -> Result<NewtonOutcome> {
    let d = x.len();
    let p = sys.len();
    let stop = 1e-15 * (1.0 + x.norm());
    let mut y = y0;
    let mut lambda = l0;
    let mut kkt = Kkt::eval(sys, t, &y)?;
    let mut f = residual(&kkt, x, &y, &lambda);
    let mut iterations = 0;
    while iterations < MAX_NEWTON_ITER {
        let merit = f.norm_squared();
        if merit.sqrt() <= stop {
            break;
        }
        iterations += 1;
        let mut jac = DMatrix::zeros(d + p, d + p);
        let mut top = DMatrix::identity(d, d);
        for i in 0..p {
            if lambda[i] != 0.0 {
                top -= sys.constraints[i].hessian(t, &y)? * lambda[i];
            }
        }
        jac.view_mut((0, 0), (d, d)).copy_from(&top);
        for i in 0..p {
            let g = &kkt.grads[i];
            for r in 0..d {
                jac[(r, d + i)] = -g[r];
            }
            let (a, b) = (lambda[i], kkt.values[i]);
            let norm = a.hypot(b);
            let (da, db) = if norm > 0.0 {
                (1.0 - a / norm, 1.0 - b / norm)
            } else {
                (1.0 - std::f64::consts::FRAC_1_SQRT_2, 1.0 - std::f64::consts::FRAC_1_SQRT_2)
            };
            for c in 0..d {
                jac[(d + i, c)] = db * g[c];
            }
            jac[(d + i, d + i)] = da;
        }
        let rhs = -&f;
        let step = match jac.clone().lu().solve(&rhs) {
            Some(s) if s.iter().all(|v| v.is_finite()) => s,
            _ => match jac.svd(true, true).solve(&rhs, 1e-14) {
                Ok(s) => s,
                Err(_) => break,
            },
        };

        let mut alpha = 1.0;
        let mut accepted = false;
        while alpha > 1e-12 {
            let y_try = &y + step.rows(0, d) * alpha;
            let l_try: Vec<f64> = (0..p).map(|i| lambda[i] + alpha * step[d + i]).collect();
            let Ok(kkt_try) = Kkt::eval(sys, t, &y_try) else {
                alpha *= 0.5;
                continue;
            };
            let f_try = residual(&kkt_try, x, &y_try, &l_try);
            if f_try.norm_squared() <= (1.0 - 2e-4 * alpha) * merit {
                y = y_try;
                lambda = l_try;
                kkt = kkt_try;
                f = f_try;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok(NewtonOutcome { point: y, lambda, iterations })
}

/// Cyclic Newton corrections onto each violated constraint in turn. A step
/// that overshoots into `g > 0` is cut back to the root along the step.
fn successive_seed(sys: &ConstraintSystem, t: f64, x: &Vector) -> Result<Vector> {
    let mut y = x.clone();
    for _ in 0..50 {
        let mut violated = false;
        for g in &sys.constraints {
            for _ in 0..30 {
                let v = g.value(t, &y)?;
                if v >= 0.0 {
                    break;
                }
                violated = true;
                let grad = g.gradient(t, &y)?;
                let nn = grad.norm_squared();
                if nn == 0.0 {
                    break;
                }
                let step = &grad * (-v / nn);
                let full = &y + &step;
                if g.value(t, &full)? <= 0.0 {
                    y = full;
                    continue;
                }
                let (mut lo, mut hi) = (0.0, 1.0);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if g.value(t, &(&y + &step * mid))? < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo <= f64::EPSILON {
                        break;
                    }
                }
                y += &step * hi;
            }
        }
        if !violated {
            break;
        }
    }
    Ok(y)
}

/// Checks the KKT invariants and returns clamped multipliers if they hold.
fn verify_kkt(sys: &ConstraintSystem, t: f64, x: &Vector, y: &Vector, lambda: &[f64]) -> Result<Option<Vec<f64>>> {
    let tol = TOL_KKT * (1.0 + x.norm());
    let kkt = Kkt::eval(sys, t, y)?;
    if kkt.values.iter().any(|&v| v < -tol) || lambda.iter().any(|&l| l < -tol) {
        return Ok(None);
    }
    let clamped: Vec<f64> = lambda.iter().map(|&l| l.max(0.0)).collect();
    if clamped.iter().zip(&kkt.values).any(|(l, v)| (l * v).abs() > tol) {
        return Ok(None);
    }
    let mut stat = y - x;
    for (g, l) in kkt.grads.iter().zip(&clamped) {
        stat.axpy(-l, g, 1.0);
    }
    Ok((stat.norm() <= tol).then_some(clamped))
}

/// Nearest point of `C(t)` to `x`.
///
/// The result is `certified` when the distance is below `sys.eta`; beyond
/// that the projection may be multivalued and the local solution found is
/// returned as is.
pub fn project_point(sys: &ConstraintSystem, t: f64, x: &Vector) -> Result<ProjectionResult> {
    let p = sys.len();
    if sys.values(t, x)?.iter().all(|&v| v >= 0.0) {
        return Ok(ProjectionResult {
            point: x.clone(),
            multipliers: vec![0.0; p],
            distance: 0.0,
            converged: true,
            certified: true,
            iterations: 0,
        });
    }

    let finish = |out: NewtonOutcome, lambda: Vec<f64>, converged: bool, extra: usize| {
        let distance = (&out.point - x).norm();
        ProjectionResult {
            certified: distance < sys.eta,
            point: out.point,
            multipliers: lambda,
            distance,
            converged,
            iterations: out.iterations + extra,
        }
    };

    let first = newton(sys, t, x, x.clone(), vec![0.0; p])?;
    if let Some(lambda) = verify_kkt(sys, t, x, &first.point, &first.lambda)? {
        return Ok(finish(first, lambda, true, 0));
    }

    let seed = successive_seed(sys, t, x)?;
    let kkt = Kkt::eval(sys, t, &seed)?;
    let cols: Vec<Vector> = kkt.grads.clone();
    let a = DMatrix::from_columns(&cols);
    let (l0, _) = nnls(&a, &(&seed - x));
    let second = newton(sys, t, x, seed, l0.iter().copied().collect())?;
    if let Some(lambda) = verify_kkt(sys, t, x, &second.point, &second.lambda)? {
        let extra = first.iterations;
        return Ok(finish(second, lambda, true, extra));
    }

    let merit = |o: &NewtonOutcome| -> f64 {
        Kkt::eval(sys, t, &o.point).map_or(f64::INFINITY, |k| residual(&k, x, &o.point, &o.lambda).norm())
    };
    let best = if merit(&second) <= merit(&first) { second } else { first };
    let lambda = best.lambda.iter().map(|l| l.max(0.0)).collect();
    Ok(finish(best, lambda, false, 0))
}

/// Euclidean projection onto a velocity polyhedron.
pub fn project_velocity(poly: &VelocityPolyhedron, u: &Vector) -> Result<ProjectionResult> {
    let sol = qp::project(&poly.normals, &poly.offsets, u)
        .map_err(|_| Error::InfeasibleCone { t: poly.t, q: poly.q.iter().copied().collect() })?;
    Ok(ProjectionResult {
        distance: (&sol.point - u).norm(),
        point: sol.point,
        multipliers: sol.multipliers,
        converged: sol.converged,
        certified: true,
        iterations: sol.iterations,
    })
}
