//! Command-line front end: runs, sweeps, file output and `--verify` checks.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Parser;

use crate::diagnostics::{
    convergence_ok, convergence_study, diagnose, DiagnosticsOptions, DiagnosticsReport, Reference, Summary,
};
use crate::error::{Error, Result};
use crate::integrator::{run, RunOutput};
use crate::scenarios::{parse_list, ResolvedConfig, RunConfig};

pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_ABORT: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

/// Fixed CSV header prefix; `q*` and `u*` columns are numbered from 1.
pub const CSV_INCREMENT_COLUMN: &str = "increment_norm";
pub const CSV_ACTIVE_COLUMN: &str = "active_mask";

#[derive(Debug, Parser)]
#[command(name = "sweep2", version, about = "Time-stepping for second-order sweeping processes with inelastic impacts")]
pub struct Args {
    /// Scenario name (floor, wedge, piston, pocket, free).
    #[arg(long)]
    pub scenario: Option<String>,
    /// Flat key = value configuration file; flags override its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Step size.
    #[arg(long)]
    pub h: Option<f64>,
    /// Final time.
    #[arg(long = "T")]
    pub horizon: Option<f64>,
    /// Comma-separated initial position.
    #[arg(long, allow_hyphen_values = true)]
    pub q0: Option<String>,
    /// Comma-separated initial velocity.
    #[arg(long, allow_hyphen_values = true)]
    pub u0: Option<String>,
    /// Comma-separated step sizes for a convergence sweep.
    #[arg(long)]
    pub sweep: Option<String>,
    /// Check invariants (and convergence for sweeps); exit 3 on failure.
    #[arg(long)]
    pub verify: bool,
    /// Output path stem; `.csv` and `.json` are appended.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Skip the trajectory CSV.
    #[arg(long)]
    pub json_only: bool,
}

impl Args {
    fn to_config(&self) -> Result<RunConfig> {
        let file = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        let flags = RunConfig {
            scenario: self.scenario.clone(),
            q0: self.q0.as_deref().map(|s| parse_list("q0", s)).transpose()?,
            u0: self.u0.as_deref().map(|s| parse_list("u0", s)).transpose()?,
            h: self.h,
            horizon: self.horizon,
            sweep: self.sweep.as_deref().map(|s| parse_list("sweep", s)).transpose()?,
            out: self.out.clone(),
            verify: self.verify.then_some(true),
            json_only: self.json_only.then_some(true),
            ..Default::default()
        };
        Ok(file.merged_with(flags))
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Trajectory table: `t, q1..qd, u1..ud, increment_norm, active_mask`.
pub fn trajectory_csv(out: &RunOutput) -> String {
    let traj = &out.trajectory;
    let dim = traj.positions[0].len();
    let mut s = String::from("t");
    for i in 1..=dim {
        write!(s, ",q{i}").unwrap();
    }
    for i in 1..=dim {
        write!(s, ",u{i}").unwrap();
    }
    writeln!(s, ",{CSV_INCREMENT_COLUMN},{CSV_ACTIVE_COLUMN}").unwrap();
    for k in 0..traj.len() {
        s.push_str(&num(traj.times[k]));
        for x in traj.positions[k].iter().chain(traj.velocities[k].iter()) {
            s.push(',');
            s.push_str(&num(*x));
        }
        writeln!(s, ",{},{}", num(out.contact.increments[k].norm()), traj.active[k].bitmask()).unwrap();
    }
    s
}

fn with_suffix(stem: &Path, suffix: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

/// One named pass/fail check of `--verify`.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: impl Into<String>, passed: bool, detail: String) -> Check {
    Check { name: name.into(), passed, detail }
}

/// Invariants every run must satisfy.
pub fn run_checks(cfg: &ResolvedConfig, h: f64, out: &RunOutput, report: &DiagnosticsReport) -> Vec<Check> {
    let sys = cfg.scenario.system();
    let f_sup = cfg.scenario.force_sup();
    let tag = |s: &str| format!("{s} (h={h})");
    let mut checks = vec![
        check(tag("feasibility"), report.max_feasibility_gap <= 1e-8, format!("gap {:e}", report.max_feasibility_gap)),
        check(tag("momentum balance"), report.momentum_residual <= 1e-8, format!("{:e}", report.momentum_residual)),
        check(
            tag("multipliers"),
            report.max_multiplier_residual <= 1e-8,
            format!("relative residual {:e}", report.max_multiplier_residual),
        ),
    ];
    if cfg.scenario.convex {
        let bound = sys.lipschitz_c0 * h + 1e-8;
        checks.push(check(
            tag("between grid points"),
            report.intergrid_distance <= bound,
            format!("distance {:e} vs {bound:e}", report.intergrid_distance),
        ));
    }
    let law_tol = 5.0 * h * (1.0 + f_sup);
    for e in &report.impacts {
        let ok = match (e.law_residual, e.variational_violation) {
            (Some(r), Some(v)) => r <= law_tol && v <= 1e-7 + law_tol,
            _ => false,
        };
        checks.push(check(
            tag(&format!("impact law at t={}", e.time)),
            ok,
            format!("residual {:?}, variational {:?}, tol {law_tol:e}", e.law_residual, e.variational_violation),
        ));
        if sys.is_static() {
            checks.push(check(
                tag(&format!("impact dissipates at t={}", e.time)),
                e.u_plus.norm() <= e.u_minus.norm() + 1e-9,
                format!("|u+| {} vs |u-| {}", e.u_plus.norm(), e.u_minus.norm()),
            ));
        }
    }
    let t0 = report.constants.t0;
    let u0 = cfg.u0.norm();
    let bound = 2.0 * (2.0 * u0 + 3.0 * h * f_sup + f_sup.sqrt());
    let early = out
        .trajectory
        .times
        .iter()
        .zip(&out.trajectory.velocities)
        .filter(|(t, _)| **t <= t0)
        .map(|(_, u)| u.norm())
        // u^1 holds on [0, h), which always meets [0, T0]
        .chain(std::iter::once(out.trajectory.velocities[1].norm()))
        .fold(0.0, f64::max);
    checks.push(check(tag("velocity before T0"), early <= bound, format!("{early} vs {bound}")));
    checks
}

/// Relative spread `(max - min) / max` of nonnegative values.
pub fn spread(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(0.0, f64::max);
    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        0.0
    } else {
        (max - min) / max
    }
}

fn summary_line(cfg: &ResolvedConfig, h: f64, out: &RunOutput, report: &DiagnosticsReport, path: &Path) -> String {
    format!(
        "{} h={h} T={} steps={} gap={:.3e} tv={:.6} sup|u|={:.6} impacts={} -> {}",
        cfg.scenario.name,
        cfg.horizon,
        out.trajectory.steps(),
        report.max_feasibility_gap,
        report.total_variation,
        report.sup_velocity,
        report.impacts.len(),
        path.display()
    )
}

enum Failure {
    Config(Error),
    Abort(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e.root() {
            Error::InfeasibleStart { .. }
            | Error::StepSizeTooLarge { .. }
            | Error::Config(_)
            | Error::UnknownScenario(_)
            | Error::Dimension { .. }
            | Error::InvalidConstants(_) => Failure::Config(e),
            _ => Failure::Abort(e),
        }
    }
}

fn emit(
    cfg: &ResolvedConfig,
    h: f64,
    out: &RunOutput,
    report: &DiagnosticsReport,
    stem: &Path,
) -> Result<Summary> {
    let summary = Summary::new(cfg.scenario.name, h, cfg.horizon, report);
    if !cfg.json_only {
        write(&with_suffix(stem, ".csv"), &trajectory_csv(out))?;
    }
    write(&with_suffix(stem, ".json"), &summary.to_json())?;
    println!("{}", summary_line(cfg, h, out, report, stem));
    Ok(summary)
}

fn execute(cfg: &ResolvedConfig) -> std::result::Result<Vec<Check>, Failure> {
    let sys = cfg.scenario.system();
    let field = cfg.scenario.force();
    // Reject bad starts before spending time on a sweep.
    crate::integrator::initialize(&sys, &field, &cfg.q0, &cfg.u0, cfg.sweep.as_ref().map_or(cfg.h, |s| s[0]))?;
    let opts = DiagnosticsOptions { j: cfg.j, ..Default::default() };
    let mut checks = Vec::new();

    let Some(sweep) = &cfg.sweep else {
        let out = run(&sys, &field, &cfg.q0, &cfg.u0, cfg.h, cfg.horizon)?;
        let report = diagnose(&sys, &field, &out, cfg.horizon, &opts)?;
        emit(cfg, cfg.h, &out, &report, &cfg.out)?;
        checks.extend(run_checks(cfg, cfg.h, &out, &report));
        return Ok(checks);
    };

    let reference = cfg.scenario.reference(&cfg.q0, &cfg.u0);
    let reference_fn: Option<Reference<'_>> = reference.as_deref().map(|f| f as Reference<'_>);
    let threads = std::env::var("SWEEP2_THREADS").ok().and_then(|s| s.parse::<usize>().ok()).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Failure::Config(Error::Config(format!("thread pool: {e}"))))?;
    let study = pool.install(|| convergence_study(&sys, &field, &cfg.q0, &cfg.u0, cfg.horizon, sweep, reference_fn));

    let mut reports = Vec::new();
    for (i, (run_result, &h)) in study.runs.iter().zip(sweep).enumerate() {
        let out = run_result.as_ref().map_err(|e| Failure::from(e.clone()))?;
        let report = diagnose(&sys, &field, out, cfg.horizon, &opts)?;
        emit(cfg, h, out, &report, &with_suffix(&cfg.out, &format!("_h{i}")))?;
        checks.extend(run_checks(cfg, h, out, &report));
        reports.push(report);
    }

    let finest = (0..sweep.len()).min_by(|&a, &b| sweep[a].total_cmp(&sweep[b])).expect("nonempty sweep");
    let mut report = reports[finest].clone();
    report.convergence = study.rows.clone();
    let summary = Summary::new(cfg.scenario.name, sweep[finest], cfg.horizon, &report);
    write(&with_suffix(&cfg.out, ".json"), &summary.to_json())?;
    for row in &study.rows {
        println!(
            "  h={} err={} order={}",
            row.h,
            row.err.map_or("-".into(), |e| format!("{e:.3e}")),
            row.order.map_or("-".into(), |p| format!("{p:.3}"))
        );
    }

    if reference.is_some() {
        checks.push(check(
            "convergence",
            convergence_ok(&study.rows, cfg.min_order),
            format!("{:?}", study.rows.iter().map(|r| r.err).collect::<Vec<_>>()),
        ));
    }
    let sups: Vec<f64> = reports.iter().map(|r| r.sup_velocity).collect();
    let tvs: Vec<f64> = reports.iter().map(|r| r.total_variation).collect();
    checks.push(check("sup|u| uniform in h", spread(&sups) < 0.10, format!("{sups:?}")));
    checks.push(check("TV(u) uniform in h", spread(&tvs) < 0.25, format!("{tvs:?}")));
    Ok(checks)
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let cfg = match args.to_config().and_then(RunConfig::resolve) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    match execute(&cfg) {
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
        Err(Failure::Abort(e)) => {
            eprintln!("simulation aborted: {e}");
            EXIT_ABORT
        }
        Ok(checks) => {
            if !cfg.verify {
                return 0;
            }
            let failed: Vec<&Check> = checks.iter().filter(|c| !c.passed).collect();
            for c in &failed {
                eprintln!("FAIL {}: {}", c.name, c.detail);
            }
            println!("verify: {}/{} checks passed", checks.len() - failed.len(), checks.len());
            if failed.is_empty() {
                0
            } else {
                EXIT_VERIFY
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vector;

    #[test]
    fn numbers_carry_seventeen_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn spread_examples() {
        assert_eq!(spread(&[0.0, 0.0]), 0.0);
        assert_eq!(spread(&[2.0, 1.0]), 0.5);
    }

    #[test]
    fn csv_shape() {
        let s = crate::scenarios::lookup("wedge").unwrap();
        let out = run(&s.system(), &s.force(), &Vector::from_vec(s.q0.clone()), &Vector::from_vec(s.u0.clone()), 0.1, 1.0)
            .unwrap();
        let csv = trajectory_csv(&out);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,q1,q2,u1,u2,increment_norm,active_mask");
        assert_eq!(lines.len(), 1 + 11);
        assert!(lines[1..].iter().all(|l| l.split(',').count() == 7));
    }
}
