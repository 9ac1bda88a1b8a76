//! Post-hoc checks on computed trajectories and the theoretical constants.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{AdmissibilityEstimate, ConstraintSystem, DirectionCertificate, Vector, VelocityPolyhedron};
use crate::integrator::{run, ForceField, RunOutput, Trajectory};
use crate::projection::{project_point, project_velocity};

/// Random feasible velocities tried in the variational check, besides vertices.
pub const VARIATIONAL_SAMPLES: usize = 32;

/// Position samples per step when measuring sup-norm errors.
pub const ERROR_SAMPLES_PER_STEP: usize = 8;

/// A detected velocity jump at a contact.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpactEvent {
    pub time: f64,
    /// Grid index of the last step of the impact.
    pub step: usize,
    pub u_minus: Vector,
    pub u_plus: Vector,
    pub polyhedron: VelocityPolyhedron,
    /// `|u_plus - P_V(u_minus)|`; `None` when `V` is empty.
    pub law_residual: Option<f64>,
    /// `max_w <u_minus - u_plus, w - u_plus>` over the sampled `w`.
    pub variational_violation: Option<f64>,
}

impl ImpactEvent {
    pub fn verifiable(&self) -> bool {
        self.law_residual.is_some()
    }
}

/// `sum_n |u^{n+1} - u^n|`.
pub fn total_variation(traj: &Trajectory) -> f64 {
    traj.velocities.windows(2).map(|w| (&w[1] - &w[0]).norm()).sum()
}

pub fn sup_velocity(traj: &Trajectory) -> f64 {
    traj.velocities.iter().map(|u| u.norm()).fold(0.0, f64::max)
}

/// `max_n max_i (-g_i(t^n, q^n))_+`.
pub fn max_feasibility_gap(sys: &ConstraintSystem, traj: &Trajectory) -> Result<f64> {
    traj.times
        .iter()
        .zip(&traj.positions)
        .try_fold(0.0, |acc, (&t, q)| Ok(f64::max(acc, sys.feasibility_gap(t, q)?)))
}

/// Largest `d_{C(t)}(q_h(t))` over `samples` interior points of every step.
pub fn intergrid_distance(sys: &ConstraintSystem, traj: &Trajectory, samples: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 1..traj.len() {
        let (t0, t1) = (traj.times[k - 1], traj.times[k]);
        for s in 1..=samples {
            let t = t0 + (t1 - t0) * s as f64 / (samples + 1) as f64;
            let q = traj.position_at(t);
            if sys.feasibility_gap(t, &q)? > 0.0 {
                worst = worst.max(project_point(sys, t, &q)?.distance);
            }
        }
    }
    Ok(worst)
}

/// `|u(T) - (u0 + sum h f^n - sum increments)|`.
pub fn momentum_residual(out: &RunOutput) -> f64 {
    let traj = &out.trajectory;
    let dim = traj.velocities[0].len();
    let impulses = traj.impulses.iter().fold(Vector::zeros(dim), |acc, i| acc + i);
    let predicted = &traj.velocities[0] + impulses - out.contact.total();
    (traj.velocities.last().expect("nonempty trajectory") - predicted).norm()
}

/// Vertices of `{ v : b_i + <n_i, v> >= 0 }` (solutions of `d` tight rows).
fn vertices(poly: &VelocityPolyhedron, dim: usize) -> Vec<Vector> {
    let m = poly.rows();
    if m < dim || m > 16 {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut subset: Vec<usize> = (0..dim).collect();
    loop {
        let a = nalgebra::DMatrix::from_fn(dim, dim, |r, c| poly.normals[subset[r]][c]);
        let b = Vector::from_iterator(dim, subset.iter().map(|&i| -poly.offsets[i]));
        if let Some(v) = a.lu().solve(&b) {
            if v.iter().all(|x| x.is_finite()) && poly.contains(&v, 1e-10 * (1.0 + v.norm())) {
                out.push(v);
            }
        }
        // next combination
        let mut i = dim;
        while i > 0 && subset[i - 1] == m - dim + i - 1 {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        subset[i - 1] += 1;
        for j in i..dim {
            subset[j] = subset[j - 1] + 1;
        }
    }
    out
}

/// Largest `<u_minus - u_plus, w - u_plus>` over vertices of `poly` and
/// `samples` projections of points drawn in a box around `u_plus`.
pub fn variational_violation(
    poly: &VelocityPolyhedron,
    u_minus: &Vector,
    u_plus: &Vector,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let dim = u_plus.len();
    let dir = u_minus - u_plus;
    let mut ws = vertices(poly, dim);
    let radius = 1.0 + u_minus.norm();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let z = Vector::from_fn(dim, |i, _| u_plus[i] + rng.gen_range(-radius..=radius));
        ws.push(project_velocity(poly, &z)?.point);
    }
    Ok(ws.iter().map(|w| dir.dot(&(w - u_plus))).fold(f64::NEG_INFINITY, f64::max))
}

/// Detects impacts and measures how far they are from the inelastic law.
///
/// A discrete impact is spread over one or two steps, so consecutive steps
/// whose increment exceeds what forcing alone produces (`2 h |F|`) are
/// merged. An event is reported when the velocity across the cluster jumps
/// by more than `max(10 h |F|, 1e-7)` and the end point is in contact.
pub fn verify_impact_law(out: &RunOutput, sys: &ConstraintSystem, force_sup: f64) -> Result<Vec<ImpactEvent>> {
    let traj = &out.trajectory;
    let h = traj.h;
    let candidate_tol = 2.0 * h * force_sup + 1e-7;
    let jump_tol = f64::max(10.0 * h * force_sup, 1e-7);
    let is_candidate =
        |k: usize| out.contact.increments[k].norm() > candidate_tol && !traj.active[k].is_empty();

    let mut events = Vec::new();
    let mut k = 1;
    while k < traj.len() {
        if !is_candidate(k) {
            k += 1;
            continue;
        }
        let start = k;
        while k + 1 < traj.len() && is_candidate(k + 1) {
            k += 1;
        }
        let end = k;
        k += 1;
        let u_minus = traj.velocities[start - 1].clone();
        let u_plus = traj.velocities[end].clone();
        if (&u_plus - &u_minus).norm() <= jump_tol {
            continue;
        }
        let (time, q) = (traj.times[end], &traj.positions[end]);
        let polyhedron = sys.velocity_polyhedron(time, q)?;
        let (law_residual, variational) = match project_velocity(&polyhedron, &u_minus) {
            Ok(p) => {
                let viol = variational_violation(&polyhedron, &u_minus, &u_plus, VARIATIONAL_SAMPLES, end as u64)?;
                (Some((&u_plus - &p.point).norm()), Some(viol))
            }
            Err(Error::InfeasibleCone { .. }) => (None, None),
            Err(e) => return Err(e),
        };
        events.push(ImpactEvent {
            time,
            step: end,
            u_minus,
            u_plus,
            polyhedron,
            law_residual,
            variational_violation: variational,
        });
    }
    Ok(events)
}

/// Smallest good-direction margin over the contact points of a trajectory;
/// vacuous (`delta = 1`) without contacts, `None` if any point fails.
pub fn admissibility_along(sys: &ConstraintSystem, traj: &Trajectory) -> Result<Option<AdmissibilityEstimate>> {
    let mut best: Option<AdmissibilityEstimate> = None;
    let contacts = (0..traj.len()).filter(|&k| !traj.active[k].is_empty());
    for k in contacts {
        match sys.good_direction(traj.times[k], &traj.positions[k], 0.0)? {
            DirectionCertificate::Certified(e) => {
                if best.as_ref().is_none_or(|b| e.delta < b.delta) {
                    best = Some(e);
                }
            }
            DirectionCertificate::Failed { .. } => return Ok(None),
        }
    }
    match best {
        Some(e) => Ok(Some(e)),
        // no active constraint anywhere: the certificate is vacuous
        None => Ok(sys.good_direction(0.0, &traj.positions[0], 0.0)?.estimate().cloned()),
    }
}

/// The numerical constant `J` of the local-horizon estimate.
pub const DEFAULT_J: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constants {
    pub kappa0: Option<f64>,
    pub nu_min: Option<f64>,
    #[serde(rename = "T0")]
    pub t0: f64,
    /// `(k, A(k))` with `A(k) = |u0| + 2 k kappa0 + k int_0^T F`.
    #[serde(skip)]
    pub a_k: Vec<(f64, f64)>,
}

/// `T0 = 1 / (2 (J + 1) (2 |u0| + 3 |F| + sqrt |F|))`.
pub fn local_horizon(u0_norm: f64, force_sup: f64, j: f64) -> f64 {
    1.0 / (2.0 * (j + 1.0) * (2.0 * u0_norm + 3.0 * force_sup + force_sup.sqrt()))
}

pub fn compute_constants(
    admiss: Option<&AdmissibilityEstimate>,
    u0: &Vector,
    field: &ForceField,
    horizon: f64,
    j: f64,
    ks: &[f64],
) -> Constants {
    let u0_norm = u0.norm();
    let t0 = local_horizon(u0_norm, field.sup_norm, j);
    let kappa0 = admiss.map(|a| a.kappa0);
    let f_int = field.envelope_integral(horizon);
    let a_k = match kappa0 {
        Some(k0) => ks.iter().map(|&k| (k, u0_norm + 2.0 * k * k0 + k * f_int)).collect(),
        None => Vec::new(),
    };
    Constants { kappa0, nu_min: admiss.map(|a| a.nu_min), t0, a_k }
}

/// Maximum of `|q_h(t) - reference(t)|` sampled on every step.
pub fn sup_error(traj: &Trajectory, reference: &dyn Fn(f64) -> Vector) -> f64 {
    let mut worst: f64 = 0.0;
    for k in 1..traj.len() {
        let (t0, t1) = (traj.times[k - 1], traj.times[k]);
        for s in 0..ERROR_SAMPLES_PER_STEP {
            let t = t0 + (t1 - t0) * s as f64 / ERROR_SAMPLES_PER_STEP as f64;
            worst = worst.max((traj.position_at(t) - reference(t)).norm());
        }
    }
    let t_end = *traj.times.last().expect("nonempty trajectory");
    worst.max((traj.positions.last().expect("nonempty trajectory") - reference(t_end)).norm())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub h: f64,
    pub err: Option<f64>,
    /// `log(err_prev / err) / log(h_prev / h)`.
    pub order: Option<f64>,
    #[serde(skip)]
    pub failure: Option<String>,
}

pub struct Study {
    pub rows: Vec<ConvergenceRow>,
    pub runs: Vec<Result<RunOutput>>,
}

pub type Reference<'a> = &'a (dyn Fn(f64) -> Vector + Sync);

/// Runs the scheme for every `h` (in parallel) and measures the sup-norm
/// position error against `reference`, or against the finest run if none.
pub fn convergence_study(
    sys: &ConstraintSystem,
    field: &ForceField,
    q0: &Vector,
    u0: &Vector,
    horizon: f64,
    h_list: &[f64],
    reference: Option<Reference<'_>>,
) -> Study {
    let runs: Vec<Result<RunOutput>> = h_list.par_iter().map(|&h| run(sys, field, q0, u0, h, horizon)).collect();
    let finest = if reference.is_none() {
        h_list
            .iter()
            .enumerate()
            .filter(|(i, _)| runs[*i].is_ok())
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
    } else {
        None
    };
    let errors: Vec<std::result::Result<Option<f64>, String>> = runs
        .iter()
        .enumerate()
        .map(|(i, r)| match r {
            Err(e) => Err(e.to_string()),
            Ok(out) => Ok(match (reference, finest) {
                (Some(f), _) => Some(sup_error(&out.trajectory, f)),
                (None, Some(j)) if j != i => {
                    let fine = &runs[j].as_ref().expect("finest run succeeded").trajectory;
                    Some(sup_error(&out.trajectory, &|t| fine.position_at(t)))
                }
                _ => None,
            }),
        })
        .collect();
    let rows = h_list
        .iter()
        .enumerate()
        .map(|(i, &h)| {
            let err = errors[i].clone().ok().flatten();
            let order = match (i.checked_sub(1).and_then(|p| errors[p].clone().ok().flatten()), err) {
                (Some(prev), Some(cur)) if prev > 0.0 && cur > 0.0 => {
                    Some((prev / cur).ln() / (h_list[i - 1] / h).ln())
                }
                _ => None,
            };
            ConvergenceRow { h, err, order, failure: errors[i].clone().err() }
        })
        .collect();
    Study { rows, runs }
}

/// Least-squares slope of `log err` against `log h`.
pub fn fitted_order(rows: &[ConvergenceRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        rows.iter().filter_map(|r| r.err.filter(|&e| e > 0.0).map(|e| (r.h.ln(), e.ln()))).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Errors below this are treated as exact.
pub const EXACT_ERROR: f64 = 1e-10;

/// Errors decrease strictly along the table (or are all at rounding level)
/// and the fitted order is at least `min_order`.
pub fn convergence_ok(rows: &[ConvergenceRow], min_order: f64) -> bool {
    let errs: Vec<f64> = rows.iter().filter_map(|r| r.err).collect();
    if rows.iter().any(|r| r.failure.is_some()) || errs.is_empty() {
        return false;
    }
    if errs.iter().all(|&e| e <= EXACT_ERROR) {
        return true;
    }
    errs.windows(2).all(|w| w[1] < w[0]) && fitted_order(rows).is_some_and(|p| p >= min_order)
}

#[derive(Debug, Clone)]
pub struct DiagnosticsReport {
    pub max_feasibility_gap: f64,
    pub intergrid_distance: f64,
    pub total_variation: f64,
    pub sup_velocity: f64,
    pub impacts: Vec<ImpactEvent>,
    pub constants: Constants,
    pub momentum_residual: f64,
    /// Largest multiplier-fit residual relative to `1 + |increment|`.
    pub max_multiplier_residual: f64,
    pub convergence: Vec<ConvergenceRow>,
}

/// Settings that are not part of the system or the run.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsOptions {
    pub j: f64,
    pub ks: Vec<f64>,
    pub intergrid_samples: usize,
}

impl Default for DiagnosticsOptions {
    fn default() -> Self {
        Self { j: DEFAULT_J, ks: vec![1.0], intergrid_samples: 3 }
    }
}

pub fn diagnose(
    sys: &ConstraintSystem,
    field: &ForceField,
    out: &RunOutput,
    horizon: f64,
    opts: &DiagnosticsOptions,
) -> Result<DiagnosticsReport> {
    let traj = &out.trajectory;
    let admiss = admissibility_along(sys, traj)?;
    let max_multiplier_residual = out
        .contact
        .residuals
        .iter()
        .zip(&out.contact.increments)
        .map(|(r, k)| r / (1.0 + k.norm()))
        .fold(0.0, f64::max);
    Ok(DiagnosticsReport {
        max_feasibility_gap: max_feasibility_gap(sys, traj)?,
        intergrid_distance: intergrid_distance(sys, traj, opts.intergrid_samples)?,
        total_variation: total_variation(traj),
        sup_velocity: sup_velocity(traj),
        impacts: verify_impact_law(out, sys, field.sup_norm)?,
        constants: compute_constants(admiss.as_ref(), &traj.velocities[0], field, horizon, opts.j, &opts.ks),
        momentum_residual: momentum_residual(out),
        max_multiplier_residual,
        convergence: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImpactSummary {
    pub t: f64,
    pub u_minus: Vec<f64>,
    pub u_plus: Vec<f64>,
    pub residual: Option<f64>,
}

/// The JSON document written next to each trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub scenario: String,
    pub h: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub max_feasibility_gap: f64,
    pub total_variation: f64,
    pub sup_velocity: f64,
    pub impacts: Vec<ImpactSummary>,
    pub constants: Constants,
    pub convergence: Vec<ConvergenceRow>,
}

impl Summary {
    pub fn new(scenario: &str, h: f64, horizon: f64, report: &DiagnosticsReport) -> Self {
        Self {
            scenario: scenario.to_string(),
            h,
            horizon,
            max_feasibility_gap: report.max_feasibility_gap,
            total_variation: report.total_variation,
            sup_velocity: report.sup_velocity,
            impacts: report
                .impacts
                .iter()
                .map(|e| ImpactSummary {
                    t: e.time,
                    u_minus: e.u_minus.iter().copied().collect(),
                    u_plus: e.u_plus.iter().copied().collect(),
                    residual: e.law_residual,
                })
                .collect(),
            constants: report.constants.clone(),
            convergence: report.convergence.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary is serializable")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ActiveSet, ConstraintFunction, RegularityConstants};
    use crate::integrator::ContactMeasure;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn floor() -> ConstraintSystem {
        ConstraintSystem::new(
            1,
            vec![ConstraintFunction::half_space(v(&[1.0]), 0.0, 0.0)],
            RegularityConstants { alpha: 1.0, beta: 1.0, hess_bound: 0.0, kappa: 1.0, lipschitz_c0: 0.0 },
        )
        .unwrap()
    }

    fn hand_run(us: &[f64], qs: &[f64], increments: &[f64], contact: &[bool]) -> RunOutput {
        let n = us.len();
        let active = |c: bool| ActiveSet { indices: if c { vec![0] } else { vec![] }, rho: 0.0 };
        RunOutput {
            trajectory: Trajectory {
                h: 0.1,
                times: (0..n).map(|k| k as f64 * 0.1).collect(),
                positions: qs.iter().map(|&q| v(&[q])).collect(),
                velocities: us.iter().map(|&u| v(&[u])).collect(),
                impulses: vec![v(&[0.0]); n],
                active: contact.iter().map(|&c| active(c)).collect(),
                uniform: true,
            },
            contact: ContactMeasure {
                increments: increments.iter().map(|&k| v(&[k])).collect(),
                multipliers: vec![vec![0.0]; n],
                residuals: vec![0.0; n],
                cumulative_variation: increments.iter().map(|k| k.abs()).sum(),
            },
        }
    }

    #[test]
    fn total_variation_examples() {
        let out = hand_run(&[1.0, 1.0, 1.0], &[0.0, 0.1, 0.2], &[0.0; 3], &[false; 3]);
        assert_eq!(total_variation(&out.trajectory), 0.0);
        let out = hand_run(&[-2.0, 0.0, 2.0], &[1.0, 0.8, 1.0], &[0.0; 3], &[false; 3]);
        assert_eq!(total_variation(&out.trajectory), 4.0);
    }

    #[test]
    fn floor_impact_satisfies_law() {
        let out = hand_run(&[-2.0, -2.0, 0.0, 0.0], &[0.4, 0.2, 0.0, 0.0], &[0.0, 0.0, -2.0, 0.0], &[false, false, true, true]);
        let events = verify_impact_law(&out, &floor(), 0.0).unwrap();
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].law_residual, Some(0.0));
        assert!(events[0].variational_violation.unwrap() <= 0.0);
    }

    #[test]
    fn injected_rebound_is_caught() {
        let out = hand_run(&[-2.0, -2.0, 1.0], &[0.4, 0.2, 0.0], &[0.0, 0.0, -3.0], &[false, false, true]);
        let events = verify_impact_law(&out, &floor(), 0.0).unwrap();
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].law_residual, Some(1.0));
        // w = 0 gives <-3, -1> = 3
        assert!(events[0].variational_violation.unwrap() >= 3.0);
    }

    #[test]
    fn smooth_steps_emit_nothing() {
        let out = hand_run(&[1.0, 1.0, 1.0], &[0.0, 0.1, 0.2], &[0.0; 3], &[true; 3]);
        assert!(verify_impact_law(&out, &floor(), 0.0).unwrap().is_empty());
    }

    #[test]
    fn empty_cone_is_unverifiable() {
        let sys = ConstraintSystem::new(
            1,
            vec![
                ConstraintFunction::half_space(v(&[1.0]), 0.0, -1.0),
                ConstraintFunction::half_space(v(&[-1.0]), 0.2, -1.0),
            ],
            RegularityConstants { alpha: 1.0, beta: 1.0, hess_bound: 0.0, kappa: 1.0, lipschitz_c0: 1.0 },
        )
        .unwrap();
        // the walls close in on q = 0.1 at t = 0.1: V = {u >= 1} and {u <= -1} is empty
        let mut out = hand_run(&[-2.0, 0.0], &[0.0, 0.1], &[0.0, -2.0], &[false, true]);
        out.trajectory.times = vec![0.0, 0.1];
        let events = verify_impact_law(&out, &sys, 0.0).unwrap();
        assert_eq!(events.len(), 1);
        assert!(!events[0].verifiable());
    }

    #[test]
    fn floor_constants() {
        let sys = floor();
        let est = sys.good_direction(0.0, &v(&[0.0]), 0.0).unwrap();
        let c = compute_constants(est.estimate(), &v(&[1.0]), &ForceField::zero(1), 1.0, 1.0, &[1.0]);
        assert_eq!(c.kappa0, Some(1.0));
        assert_eq!(c.nu_min, Some(1.0 / 6.0));
        assert_eq!(c.t0, 0.125);
        assert_eq!(c.a_k, vec![(1.0, 3.0)]);
    }

    #[test]
    fn unavailable_constants_are_explicit() {
        let c = compute_constants(None, &v(&[1.0]), &ForceField::zero(1), 1.0, 1.0, &[1.0]);
        assert_eq!(c.kappa0, None);
        assert!(c.a_k.is_empty());
        let json = serde_json::to_value(&c).unwrap();
        assert!(json["kappa0"].is_null());
        assert_eq!(json["T0"], 0.125);
    }

    #[test]
    fn free_flight_study_is_exact() {
        let sys = ConstraintSystem::new(1, vec![], RegularityConstants {
            alpha: 1.0,
            beta: 1.0,
            hess_bound: 0.0,
            kappa: 1.0,
            lipschitz_c0: 0.0,
        })
        .unwrap();
        let reference = |t: f64| v(&[1.0 - t]);
        let study = convergence_study(
            &sys,
            &ForceField::zero(1),
            &v(&[1.0]),
            &v(&[-1.0]),
            1.0,
            &[0.04, 0.02, 0.01, 0.005],
            Some(&reference),
        );
        for row in &study.rows {
            assert!(row.err.unwrap() <= 1e-12, "{row:?}");
        }
        assert!(convergence_ok(&study.rows, 0.9));
    }

    #[test]
    fn fitted_order_of_linear_errors() {
        let rows: Vec<ConvergenceRow> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&h| ConvergenceRow { h, err: Some(3.0 * h), order: None, failure: None })
            .collect();
        assert!((fitted_order(&rows).unwrap() - 1.0).abs() < 1e-12);
        assert!(convergence_ok(&rows, 0.9));
    }

    #[test]
    fn vertices_of_quadrant() {
        let poly = VelocityPolyhedron::from_rows(vec![v(&[1.0, 0.0]), v(&[0.0, 1.0])], vec![0.0, 0.0]);
        assert_eq!(vertices(&poly, 2), vec![v(&[0.0, 0.0])]);
    }
}
