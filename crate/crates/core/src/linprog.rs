//! Dense two-phase simplex for the small linear programs used by the
//! good-direction certificate and the phase-1 feasibility search.
//!
//! Problems have the form `maximize c.x  s.t.  A x <= b, x >= 0` with `b` of
//! either sign. Bland's rule is used throughout, so no cycling.

const EPS: f64 = 1e-11;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.rows[i][self.cols]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Runs simplex iterations maximizing `cost`, never entering columns
    /// flagged in `banned`. Returns false when unbounded.
    fn optimize(&mut self, cost: &[f64], banned: &[bool]) -> bool {
        let m = self.rows.len();
        loop {
            let entering = (0..self.cols).find(|&j| {
                if banned[j] || self.basis.contains(&j) {
                    return false;
                }
                let reduced: f64 =
                    cost[j] - (0..m).map(|i| cost[self.basis[i]] * self.rows[i][j]).sum::<f64>();
                reduced > EPS
            });
            let Some(c) = entering else { return true };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                let a = self.rows[i][c];
                if a > EPS {
                    let ratio = self.rhs(i) / a;
                    let better = match leave {
                        None => true,
                        Some((l, best)) => {
                            ratio < best - EPS || (ratio <= best + EPS && self.basis[i] < self.basis[l])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, _)) = leave else { return false };
            self.pivot(r, c);
        }
    }
}

/// `maximize c.x` subject to `a x <= b`, `x >= 0`.
pub fn maximize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> LpOutcome {
    let n = c.len();
    let m = a.len();
    assert_eq!(b.len(), m, "row count mismatch");
    let artificial_rows: Vec<usize> = (0..m).filter(|&i| b[i] < 0.0).collect();
    let k = artificial_rows.len();
    let cols = n + m + k;

    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    for i in 0..m {
        assert_eq!(a[i].len(), n, "column count mismatch");
        let mut row = vec![0.0; cols + 1];
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            row[j] = sign * a[i][j];
        }
        row[n + i] = sign;
        row[cols] = sign * b[i];
        if let Some(pos) = artificial_rows.iter().position(|&r| r == i) {
            row[n + m + pos] = 1.0;
            basis.push(n + m + pos);
        } else {
            basis.push(n + i);
        }
        rows.push(row);
    }
    let mut tab = Tableau { rows, basis, cols };

    if k > 0 {
        let mut phase1 = vec![0.0; cols];
        for j in n + m..cols {
            phase1[j] = -1.0;
        }
        tab.optimize(&phase1, &vec![false; cols]);
        let infeasibility: f64 = (0..m).filter(|&i| tab.basis[i] >= n + m).map(|i| tab.rhs(i)).sum();
        let scale = 1.0 + b.iter().fold(0.0f64, |s, x| s.max(x.abs()));
        if infeasibility > 1e-9 * scale {
            return LpOutcome::Infeasible;
        }
        // Drive zero-level artificials out of the basis where possible.
        for i in 0..m {
            if tab.basis[i] >= n + m {
                if let Some(j) = (0..n + m).find(|&j| tab.rows[i][j].abs() > EPS && !tab.basis.contains(&j)) {
                    tab.pivot(i, j);
                }
            }
        }
    }

    let mut cost = vec![0.0; cols];
    cost[..n].copy_from_slice(c);
    let mut banned = vec![false; cols];
    for flag in banned.iter_mut().skip(n + m) {
        *flag = true;
    }
    if !tab.optimize(&cost, &banned) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![0.0; n];
    for (i, &bj) in tab.basis.iter().enumerate() {
        if bj < n {
            x[bj] = tab.rhs(i).max(0.0);
        }
    }
    let value = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    LpOutcome::Optimal { x, value }
}
