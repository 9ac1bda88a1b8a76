//! Slow, independent reference solvers used only by the tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use sweep2::{ConstraintSystem, VelocityPolyhedron};

pub type Vector = DVector<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Grid,
    ActiveSetEnumeration,
    Analytic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub value: Vector,
    pub method: Method,
    pub resolution: f64,
}

fn feasible(sys: &ConstraintSystem, t: f64, x: &Vector) -> bool {
    sys.constraints.iter().all(|c| c.value(t, x).map_or(false, |g| g >= 0.0))
}

/// Last feasible point on the segment from feasible `p` towards infeasible `x`.
fn bisect(sys: &ConstraintSystem, t: f64, p: &Vector, x: &Vector, tol: f64) -> Vector {
    let (mut inside, mut outside) = (p.clone(), x.clone());
    while (&outside - &inside).norm() > tol {
        let mid = (&inside + &outside) * 0.5;
        if feasible(sys, t, &mid) {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    inside
}

fn grid_points(center: &[f64], spacing: f64, half_width: i64) -> Vec<Vector> {
    let d = center.len();
    let side = (2 * half_width + 1) as usize;
    (0..side.pow(d as u32))
        .map(|mut idx| {
            let mut coords = Vec::with_capacity(d);
            for c in center {
                let k = (idx % side) as i64 - half_width;
                idx /= side;
                coords.push(c + k as f64 * spacing);
            }
            Vector::from_vec(coords)
        })
        .collect()
}

/// Nearest point of `C(t)` within the box `[lo, hi]^d` (d <= 2): a coarse
/// grid, then windows shrinking by 4 around the best boundary point found
/// by bisecting from each feasible grid point towards `x`; each window
/// follows the best point until it stops improving.
pub fn grid_project(
    sys: &ConstraintSystem,
    t: f64,
    x: &Vector,
    resolution: f64,
    lo: f64,
    hi: f64,
) -> Result<OracleResult, String> {
    let d = x.len();
    assert!(d <= 2, "grid oracle is limited to d <= 2");
    if feasible(sys, t, x) {
        return Ok(OracleResult { value: x.clone(), method: Method::Grid, resolution: 0.0 });
    }
    let n: i64 = if d == 1 { 2000 } else { 120 };
    let mut spacing = (hi - lo) / n as f64;
    let mid = vec![(lo + hi) / 2.0; d];
    let coarse = grid_points(&mid, spacing, n / 2);
    let mut best = coarse
        .iter()
        .filter(|p| feasible(sys, t, p))
        .min_by(|a, b| (*a - x).norm().total_cmp(&(*b - x).norm()))
        .cloned()
        .ok_or_else(|| "no feasible grid point in the box".to_string())?;
    best = bisect(sys, t, &best, x, spacing * 1e-3);
    while spacing > resolution {
        spacing /= 4.0;
        // re-center until the window stops improving, so the search can
        // travel along flat stretches of the boundary
        loop {
            let center: Vec<f64> = best.iter().copied().collect();
            let before = (&best - x).norm();
            for p in grid_points(&center, spacing, 4) {
                if !feasible(sys, t, &p) {
                    continue;
                }
                let b = bisect(sys, t, &p, x, spacing * 1e-3);
                if (&b - x).norm() < (&best - x).norm() {
                    best = b;
                }
            }
            if (&best - x).norm() >= before - 1e-3 * spacing {
                break;
            }
        }
    }
    Ok(OracleResult { value: best, method: Method::Grid, resolution })
}

type Q = BigRational;

fn q(x: f64) -> Q {
    BigRational::from_float(x).expect("finite input")
}

/// Solves `a x = b` exactly; `None` when `a` is singular.
fn solve_exact(mut a: Vec<Vec<Q>>, mut b: Vec<Q>) -> Option<Vec<Q>> {
    let k = b.len();
    for col in 0..k {
        let pivot = (col..k).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        for r in col + 1..k {
            if a[r][col].is_zero() {
                continue;
            }
            let f = &a[r][col] / &a[col][col];
            for c in col..k {
                let delta = &f * &a[col][c];
                a[r][c] -= delta;
            }
            let delta = &f * &b[col];
            b[r] -= delta;
        }
    }
    let mut x = vec![Q::zero(); k];
    for r in (0..k).rev() {
        let mut acc = b[r].clone();
        for c in r + 1..k {
            acc -= &a[r][c] * &x[c];
        }
        x[r] = acc / &a[r][r];
    }
    Some(x)
}

/// Projection of `u` onto the tight set of `rows`, in exact arithmetic, if
/// it satisfies the optimality conditions exactly.
fn exact_kkt_point(poly: &VelocityPolyhedron, u: &Vector, rows: &[usize]) -> Option<Vector> {
    let d = u.len();
    let n: Vec<Vec<Q>> = poly.normals.iter().map(|r| r.iter().map(|&x| q(x)).collect()).collect();
    let b: Vec<Q> = poly.offsets.iter().map(|&x| q(x)).collect();
    let uq: Vec<Q> = u.iter().map(|&x| q(x)).collect();
    let dot = |a: &[Q], c: &[Q]| a.iter().zip(c).fold(Q::zero(), |s, (x, y)| s + x * y);
    let gram = rows.iter().map(|&i| rows.iter().map(|&j| dot(&n[i], &n[j])).collect()).collect();
    let rhs = rows.iter().map(|&i| -(&b[i] + dot(&n[i], &uq))).collect();
    let lambda = solve_exact(gram, rhs)?;
    if lambda.iter().any(|l| l.is_negative()) {
        return None;
    }
    let mut v = uq;
    for (&i, l) in rows.iter().zip(&lambda) {
        for c in 0..d {
            v[c] += l * &n[i][c];
        }
    }
    if (0..n.len()).any(|i| (&b[i] + dot(&n[i], &v)).is_negative()) {
        return None;
    }
    Some(Vector::from_iterator(d, v.iter().map(|x| x.to_f64().expect("representable"))))
}

/// Exact projection onto `{ v : b_i + <n_i, v> >= 0 }` by trying every
/// subset of tight rows. Floating point screens the subsets loosely; the
/// survivors are checked in rational arithmetic, so thin wedges between
/// nearly antiparallel rows cannot fool the tolerances.
pub fn enumerate_qp(poly: &VelocityPolyhedron, u: &Vector) -> Result<OracleResult, String> {
    let m = poly.normals.len();
    assert!(m <= 12, "enumeration oracle is limited to 12 rows");
    let d = u.len();
    let tol = 1e-6 * (1.0 + u.norm());
    let mut candidates: Vec<(f64, Vec<usize>)> = Vec::new();
    for mask in 0u32..(1 << m) {
        let rows: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        if rows.len() > d {
            continue;
        }
        let v = if rows.is_empty() {
            u.clone()
        } else {
            let n = DMatrix::from_fn(rows.len(), d, |r, c| poly.normals[rows[r]][c]);
            let Some(lambda) = (&n * n.transpose()).lu().solve(
                &-(DVector::from_iterator(rows.len(), rows.iter().map(|&i| poly.offsets[i])) + &n * u),
            ) else {
                continue;
            };
            if !lambda.iter().all(|l| l.is_finite()) || lambda.iter().any(|&l| l < -tol) {
                continue;
            }
            u + n.transpose() * lambda
        };
        if (0..m).all(|i| poly.offsets[i] + poly.normals[i].dot(&v) >= -tol * (1.0 + v.norm())) {
            candidates.push(((&v - u).norm(), rows));
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    candidates
        .iter()
        .find_map(|(_, rows)| exact_kkt_point(poly, u, rows))
        .map(|value| OracleResult { value, method: Method::ActiveSetEnumeration, resolution: 0.0 })
        .ok_or_else(|| "no subset satisfies the optimality conditions".to_string())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticParams {
    pub q0: f64,
    pub u0: f64,
    pub g_grav: f64,
    pub v_wall: f64,
}

impl Default for AnalyticParams {
    fn default() -> Self {
        Self { q0: 1.0, u0: 0.0, g_grav: 10.0, v_wall: 1.0 }
    }
}

/// Closed-form `(q, u)` of the 1-D reference problems.
pub fn analytic_reference(name: &str, p: AnalyticParams, t: f64) -> Result<(f64, f64), String> {
    match name {
        "free" => Ok((p.q0 + p.u0 * t, p.u0)),
        "floor-bounce" => {
            // q0 + u0 s - g s^2 / 2 = 0
            let hit = (p.u0 + (p.u0 * p.u0 + 2.0 * p.g_grav * p.q0).sqrt()) / p.g_grav;
            if t < hit {
                Ok((p.q0 + p.u0 * t - 0.5 * p.g_grav * t * t, p.u0 - p.g_grav * t))
            } else {
                Ok((0.0, 0.0))
            }
        }
        "piston-pursuit" => {
            let hit = if p.u0 < p.v_wall { p.q0 / (p.v_wall - p.u0) } else { f64::INFINITY };
            if t < hit {
                Ok((p.q0 + p.u0 * t, p.u0))
            } else {
                Ok((p.v_wall * t, p.v_wall))
            }
        }
        "resting-contact" => Ok((0.0, 0.0)),
        other => Err(format!("no analytic reference named `{other}`")),
    }
}

pub fn analytic_position(name: &str, p: AnalyticParams) -> impl Fn(f64) -> Vector {
    let name = name.to_string();
    move |t| Vector::from_element(1, analytic_reference(&name, p, t).expect("known reference").0)
}

/// Search box used for registry point projections.
pub const BOX: (f64, f64) = (-3.0, 3.0);

/// Random `(t, x)` with `x` outside `C(t)` but within `max_dist` of it
/// (measured by the grid oracle), for a system of dimension <= 2.
pub fn point_instances(
    sys: &ConstraintSystem,
    rng: &mut impl rand::Rng,
    count: usize,
    max_dist: f64,
    resolution: f64,
) -> Vec<(f64, Vector, OracleResult)> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let t = rng.gen_range(0.0..2.0);
        let x = Vector::from_fn(sys.dim, |_, _| rng.gen_range(-2.0..2.5));
        if feasible(sys, t, &x) {
            continue;
        }
        let oracle = grid_project(sys, t, &x, resolution, BOX.0, BOX.1).expect("box contains feasible points");
        if (&oracle.value - &x).norm() < max_dist {
            out.push((t, x, oracle));
        }
    }
    out
}

/// A nonempty random polyhedron `{ v : b_i + <n_i, v> >= 0 }` and a point to project.
pub fn random_polyhedron(rng: &mut impl rand::Rng, dim: usize, rows: usize) -> (VelocityPolyhedron, Vector) {
    let inside = Vector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
    let normals: Vec<Vector> = (0..rows).map(|_| Vector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0))).collect();
    let offsets = normals
        .iter()
        .map(|n| {
            let slack = if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..1.0) };
            let mut b = slack - n.dot(&inside);
            // keep `inside` admissible in exact arithmetic despite rounding
            let exact = |b: f64| n.iter().zip(inside.iter()).fold(q(b), |s, (&x, &y)| s + q(x) * q(y));
            while exact(b).is_negative() {
                b = b.next_up();
            }
            b
        })
        .collect();
    let u = Vector::from_fn(dim, |_, _| rng.gen_range(-3.0..3.0));
    (VelocityPolyhedron::from_rows(normals, offsets), u)
}
