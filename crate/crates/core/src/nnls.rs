//! Lawson-Hanson active-set method for `min |A x - b|  s.t.  x >= 0`.

use nalgebra::{DMatrix, DVector};

fn solve_passive(a: &DMatrix<f64>, b: &DVector<f64>, passive: &[usize]) -> DVector<f64> {
    let sub = a.select_columns(passive);
    sub.svd(true, true).solve(b, 1e-13).unwrap_or_else(|_| DVector::zeros(passive.len()))
}

/// Returns the minimizer and the residual norm `|A x - b|`.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> (DVector<f64>, f64) {
    let n = a.ncols();
    let mut x = DVector::zeros(n);
    if n == 0 {
        return (x, b.norm());
    }
    let tol = 1e-12 * a.norm().max(1.0) * b.norm().max(1.0);
    let mut passive: Vec<usize> = Vec::new();

    for _ in 0..3 * n + 10 {
        let w = a.transpose() * (b - a * &x);
        let candidate = (0..n)
            .filter(|j| !passive.contains(j))
            .max_by(|&i, &j| w[i].total_cmp(&w[j]))
            .filter(|&j| w[j] > tol);
        let Some(j) = candidate else { break };
        passive.push(j);
        passive.sort_unstable();

        loop {
            let z = solve_passive(a, b, &passive);
            if z.iter().all(|&v| v > 0.0) {
                for (k, &p) in passive.iter().enumerate() {
                    x[p] = z[k];
                }
                break;
            }
            let mut alpha = 1.0f64;
            for (k, &p) in passive.iter().enumerate() {
                if z[k] <= 0.0 {
                    let denom = x[p] - z[k];
                    if denom > 0.0 {
                        alpha = alpha.min(x[p] / denom);
                    }
                }
            }
            for (k, &p) in passive.iter().enumerate() {
                x[p] += alpha * (z[k] - x[p]);
            }
            passive.retain(|&p| x[p] > tol);
            for p in 0..n {
                if !passive.contains(&p) {
                    x[p] = 0.0;
                }
            }
            if passive.is_empty() {
                break;
            }
        }
    }
    let residual = (a * &x - b).norm();
    (x, residual)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn unconstrained_optimum_inside_orthant() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let (x, r) = nnls(&a, &DVector::from_column_slice(&[1.0, 1.0]));
        assert_eq!(x, DVector::from_column_slice(&[1.0, 1.0]));
        assert!(r < 1e-15);
    }

    #[test]
    fn negative_component_clamped() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let (x, r) = nnls(&a, &DVector::from_column_slice(&[2.0, -3.0]));
        assert_eq!(x, DVector::from_column_slice(&[2.0, 0.0]));
        assert!((r - 3.0).abs() < 1e-15);
    }

    #[test]
    fn zero_target_gives_zero() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0]);
        let (x, _) = nnls(&a, &DVector::zeros(2));
        assert!(x.iter().all(|&v| v == 0.0));
    }

    proptest! {
        // KKT: x >= 0, gradient A^T(Ax - b) >= 0, complementary.
        #[test]
        fn kkt_conditions_hold(vals in proptest::collection::vec(-3.0f64..3.0, 12), rhs in proptest::collection::vec(-3.0f64..3.0, 3)) {
            let a = DMatrix::from_row_slice(3, 4, &vals);
            let b = DVector::from_column_slice(&rhs);
            let (x, _) = nnls(&a, &b);
            let g = a.transpose() * (&a * &x - &b);
            for j in 0..4 {
                prop_assert!(x[j] >= 0.0);
                prop_assert!(g[j] >= -1e-8);
                prop_assert!((x[j] * g[j]).abs() <= 1e-8);
            }
        }
    }
}
