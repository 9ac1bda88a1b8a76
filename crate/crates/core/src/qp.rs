//! Euclidean projection onto `{ v : b_i + <n_i, v> >= 0 }`.
//!
//! With `w = v - u` the problem is the least-distance program
//! `min |w|  s.t.  N w >= h`, `h = -b - N u`, solved through the
//! nonnegative least-squares problem `min |E z - e_{d+1}|`, `z >= 0`,
//! `E = [N^T; h^T]`. The rows carrying positive duals then define an
//! affine hull onto which `u` is projected exactly.

use nalgebra::{DMatrix, DVector};

use crate::nnls::nnls;

type Vector = DVector<f64>;

/// Nearly tight rows beyond which the polish is skipped.
const MAX_POLISH_ROWS: usize = 12;

/// Tikhonov shift on the working-set Gram matrix.
const REGULARIZATION: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub point: Vector,
    /// One multiplier per row, with `point - u = sum_i l_i n_i`.
    pub multipliers: Vec<f64>,
    /// Rows tight at the solution with a positive multiplier.
    pub working_set: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Infeasible;

fn slack(normals: &[Vector], offsets: &[f64], i: usize, v: &Vector) -> f64 {
    offsets[i] + normals[i].dot(v)
}

fn gram_solve(rows: &[&Vector], rhs: &Vector) -> Vector {
    let k = rows.len();
    let gram = DMatrix::from_fn(k, k, |i, j| rows[i].dot(rows[j]));
    if let Some(c) = gram.clone().cholesky() {
        let sol = c.solve(rhs);
        if sol.iter().all(|v| v.is_finite()) {
            return sol;
        }
    }
    // Dependent rows: shift the Gram matrix; the point stays unique.
    let mut shifted = gram;
    for i in 0..k {
        shifted[(i, i)] += REGULARIZATION;
    }
    shifted
        .clone()
        .cholesky()
        .map(|c| c.solve(rhs))
        .or_else(|| shifted.lu().solve(rhs))
        .unwrap_or_else(|| Vector::zeros(k))
}

/// Projection of `u` onto the affine hull `{ v : b_i + <n_i, v> = 0, i in rows }`
/// and the multipliers of that projection.
fn affine_projection(normals: &[Vector], offsets: &[f64], rows: &[usize], u: &Vector) -> (Vector, Vector) {
    let ns: Vec<&Vector> = rows.iter().map(|&i| &normals[i]).collect();
    let rhs = Vector::from_iterator(rows.len(), rows.iter().map(|&i| slack(normals, offsets, i, u)));
    let c = gram_solve(&ns, &rhs);
    let mut v = u.clone();
    for (n, ci) in ns.iter().zip(c.iter()) {
        v.axpy(-ci, n, 1.0);
    }
    (v, -c)
}

pub fn project(normals: &[Vector], offsets: &[f64], u: &Vector) -> Result<QpSolution, Infeasible> {
    let m = normals.len();
    let d = u.len();
    if (0..m).all(|i| slack(normals, offsets, i, u) >= 0.0) {
        return Ok(QpSolution {
            point: u.clone(),
            multipliers: vec![0.0; m],
            working_set: Vec::new(),
            iterations: 0,
            converged: true,
        });
    }
    // Row scaling keeps the least-distance program well conditioned.
    let scale: Vec<f64> = normals.iter().map(|n| n.norm().max(f64::MIN_POSITIVE)).collect();
    let e = DMatrix::from_fn(d + 1, m, |r, i| {
        if r < d {
            normals[i][r] / scale[i]
        } else {
            -slack(normals, offsets, i, u) / scale[i]
        }
    });
    let mut f = Vector::zeros(d + 1);
    f[d] = 1.0;
    let (z, _) = nnls(&e, &f);
    let r = &e * &z - &f;
    // A vanishing residual certifies that the rows admit no common point.
    if r.norm() <= 1e-10 || r[d] >= 0.0 {
        return Err(Infeasible);
    }
    let mut x = u - r.rows(0, d) / r[d];
    let x_scale = 1.0 + x.norm() + u.norm();
    let feas_tol = 1e-12 * x_scale;
    if (0..m).any(|i| slack(normals, offsets, i, &x) / scale[i] < -1e-8 * x_scale) {
        return Err(Infeasible);
    }
    let mut multipliers: Vec<f64> = (0..m).map(|i| z[i] / (-r[d] * scale[i])).collect();

    // Polish: among subsets of the nearly tight rows, the affine projection
    // that is feasible with nonnegative multipliers and closest to u.
    let tight: Vec<usize> =
        (0..m).filter(|&i| slack(normals, offsets, i, &x) <= 1e-9 * x_scale * scale[i]).collect();
    let mut working = Vec::new();
    let mut iterations = 1;
    if !tight.is_empty() && tight.len() <= MAX_POLISH_ROWS {
        let mut best: Option<(f64, Vector, Vec<usize>, Vector)> = None;
        for mask in 1u32..(1 << tight.len()) {
            if mask.count_ones() as usize > d {
                continue;
            }
            iterations += 1;
            let rows: Vec<usize> = tight.iter().enumerate().filter(|(k, _)| mask & (1 << k) != 0).map(|(_, &i)| i).collect();
            // an independent subset always suffices
            let gram = DMatrix::from_fn(rows.len(), rows.len(), |a, b| {
                normals[rows[a]].dot(&normals[rows[b]]) / (scale[rows[a]] * scale[rows[b]])
            });
            if gram.symmetric_eigenvalues().min() <= 1e-12 {
                continue;
            }
            let (candidate, lambda) = affine_projection(normals, offsets, &rows, u);
            let feasible = (0..m).all(|i| slack(normals, offsets, i, &candidate) >= -feas_tol * scale[i]);
            let dual_ok = lambda.iter().all(|&l| l >= -1e-9 * x_scale);
            let dist = (&candidate - u).norm();
            if feasible && dual_ok && best.as_ref().is_none_or(|b| dist < b.0) {
                best = Some((dist, candidate, rows, lambda));
            }
        }
        if let Some((_, candidate, rows, lambda)) = best {
            x = candidate;
            multipliers = vec![0.0; m];
            for (&i, &l) in rows.iter().zip(lambda.iter()) {
                multipliers[i] = l.max(0.0);
            }
            working = rows;
        }
    }
    Ok(QpSolution { point: x, multipliers, working_set: working, iterations, converged: true })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn feasible_point_is_returned_unchanged() {
        let s = project(&[v(&[1.0])], &[0.0], &v(&[0.4])).unwrap();
        assert_eq!(s.point, v(&[0.4]));
        assert_eq!(s.iterations, 0);
    }

    #[test]
    fn one_dimensional_clamps() {
        let s = project(&[v(&[1.0])], &[0.0], &v(&[-2.0])).unwrap();
        assert!((s.point[0]).abs() < 1e-15);
        assert!((s.multipliers[0] - 2.0).abs() < 1e-12);
        let s = project(&[v(&[1.0])], &[-1.0], &v(&[0.0])).unwrap();
        assert!((s.point[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn quadrant_corner() {
        let s = project(&[v(&[1.0, 0.0]), v(&[0.0, 1.0])], &[0.0, 0.0], &v(&[-1.0, -2.0])).unwrap();
        assert!(s.point.norm() < 1e-14);
        assert!((s.multipliers[0] - 1.0).abs() < 1e-12 && (s.multipliers[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn dependent_rows_still_project() {
        let rows = [v(&[1.0, 0.0]), v(&[2.0, 0.0]), v(&[1.0, 0.0])];
        let s = project(&rows, &[0.0, 0.0, 0.0], &v(&[-3.0, 1.0])).unwrap();
        assert!((s.point - v(&[0.0, 1.0])).norm() < 1e-12);
    }

    #[test]
    fn empty_polyhedron_is_reported() {
        let r = project(&[v(&[1.0]), v(&[-1.0])], &[-1.0, -1.0], &v(&[0.0]));
        assert_eq!(r, Err(Infeasible));
    }

    #[test]
    fn six_dimensional_regression() {
        let rows = [
            v(&[-0.5362552883540892, 0.2599884782598365, -0.08125630249605864, 0.4744386631119215, -0.7803124416816183, 0.42241127165176184]),
            v(&[0.03330323709323224, 0.038650941735490996, 0.6460000871387543, -0.14600190821172188, 0.026258148437604767, -0.40188507362618076]),
            v(&[0.07267843288265974, 0.2700760255760053, 0.7876030203634712, 0.5855399435863831, -0.6825782943528615, 0.01693292204822283]),
            v(&[0.8233461104953483, -0.5912315078521493, -0.804450546944564, -0.3312203704643073, -0.3028147325734727, -0.7707512910789638]),
            v(&[-0.2614081331047262, 0.171580743766516, -0.9289386766753043, 0.46792254087587093, -0.12211727904731662, -0.593761038847834]),
            v(&[-0.7099596581504914, -0.2484979943224599, -0.14444500457172227, -0.5229870616147103, -0.9185859787850856, -0.3459427540734197]),
            v(&[-0.2663118121847341, -0.2290930593639473, 0.6766925976042932, 0.5729411905878328, -0.3173633187953455, -0.8575323336380092]),
            v(&[0.892389412352987, 0.10259015510195768, 0.11788989801877348, -0.3846485207315782, 0.4851839302264964, -0.6819360594503294]),
        ];
        let offsets = [
            -0.20138621644834961, 0.9255469065237987, 1.178184134033009, -0.49917301705628025, -1.066506069057424,
            -0.920545330762721, -0.2134612053320395, 0.4749660025201346,
        ];
        let u = v(&[-2.034220877874886, 1.9372903739531662, 1.419686043961864, 0.05142870430281832, 1.1365862229744916, 0.8641562395243403]);
        let s = project(&rows, &offsets, &u).unwrap();
        let expected = v(&[-0.4632515915751396, 0.6524258742404065, -0.5554137210562502, -0.30872778486005686, -0.2935536016527427, -0.8152720540124843]);
        assert!(s.converged, "{s:?}");
        assert!((s.point - expected).norm() < 1e-9);
    }
}
