//! Built-in scenarios and run configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::diagnostics::DEFAULT_J;
use crate::error::{Error, Result};
use crate::geometry::{ConstraintFunction, ConstraintSystem, RegularityConstants, Vector};
use crate::integrator::ForceField;

pub const GRAVITY: f64 = 10.0;
/// Wall speed of the `piston` scenario.
pub const PISTON_SPEED: f64 = 1.0;

pub type ReferenceFn = Arc<dyn Fn(f64) -> Vector + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Floor,
    Wedge,
    Piston,
    Pocket,
    Free,
}

/// A named constraint system with its forcing and default initial data.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: &'static str,
    pub description: &'static str,
    pub dim: usize,
    pub q0: Vec<f64>,
    pub u0: Vec<f64>,
    pub h: f64,
    pub horizon: f64,
    /// Whether every `C(t)` is convex.
    pub convex: bool,
    kind: Kind,
}

fn v(xs: &[f64]) -> Vector {
    Vector::from_column_slice(xs)
}

impl Scenario {
    pub fn system(&self) -> ConstraintSystem {
        let build = match self.kind {
            Kind::Floor => ConstraintSystem::new(
                1,
                vec![ConstraintFunction::half_space(v(&[1.0]), 0.0, 0.0)],
                RegularityConstants { alpha: 1.0, beta: 1.0, hess_bound: 0.0, kappa: 1.0, lipschitz_c0: 0.0 },
            ),
            Kind::Wedge => ConstraintSystem::new(
                2,
                vec![
                    ConstraintFunction::half_space(v(&[1.0, 0.0]), 0.0, 0.0),
                    ConstraintFunction::half_space(v(&[0.0, 1.0]), 0.0, 0.0),
                ],
                RegularityConstants { alpha: 1.0, beta: 1.0, hess_bound: 0.0, kappa: 1.0, lipschitz_c0: 0.0 },
            ),
            Kind::Piston => ConstraintSystem::new(
                1,
                vec![ConstraintFunction::half_space(v(&[1.0]), 0.0, -PISTON_SPEED)],
                RegularityConstants {
                    alpha: 1.0,
                    beta: 1.0,
                    hess_bound: 0.0,
                    kappa: 1.0,
                    lipschitz_c0: PISTON_SPEED,
                },
            ),
            // Outside the unit disc, above the floor through its centre. The
            // gradient of |q|^2 - 1 has norm 2 and Hessian 2I on the circle,
            // the floor has a unit gradient; the corners (+-1, 0) meet at a
            // right angle, so the set is 1-prox-regular.
            Kind::Pocket => ConstraintSystem::new(
                2,
                vec![
                    ConstraintFunction::ball_exterior(v(&[0.0, 0.0]), 1.0),
                    ConstraintFunction::half_space(v(&[0.0, 1.0]), 0.0, 0.0),
                ],
                RegularityConstants { alpha: 1.0, beta: 3.0, hess_bound: 2.0, kappa: 0.5, lipschitz_c0: 0.0 },
            )
            .and_then(|s| s.with_eta(1.0)),
            Kind::Free => ConstraintSystem::new(
                1,
                vec![],
                RegularityConstants { alpha: 1.0, beta: 1.0, hess_bound: 0.0, kappa: 1.0, lipschitz_c0: 0.0 },
            ),
        };
        build.expect("registry constants are valid")
    }

    pub fn force(&self) -> ForceField {
        match self.kind {
            Kind::Floor => ForceField::constant(v(&[-GRAVITY])),
            Kind::Wedge | Kind::Pocket => ForceField::constant(v(&[0.0, -GRAVITY])),
            Kind::Piston | Kind::Free => ForceField::zero(self.dim),
        }
    }

    /// Closed-form position for the given initial data, when one is known.
    pub fn reference(&self, q0: &Vector, u0: &Vector) -> Option<ReferenceFn> {
        let (q0, u0) = (q0[0], u0[0]);
        match self.kind {
            Kind::Floor => {
                // q0 + u0 t - g t^2 / 2 = 0, then at rest
                let hit = (u0 + (u0 * u0 + 2.0 * GRAVITY * q0).sqrt()) / GRAVITY;
                Some(Arc::new(move |t| {
                    let s = t.min(hit);
                    v(&[if t < hit { (q0 + u0 * s - 0.5 * GRAVITY * s * s).max(0.0) } else { 0.0 }])
                }))
            }
            Kind::Piston => {
                let hit = if u0 < PISTON_SPEED { q0 / (PISTON_SPEED - u0) } else { f64::INFINITY };
                Some(Arc::new(move |t| v(&[if t < hit { q0 + u0 * t } else { PISTON_SPEED * t }])))
            }
            Kind::Free => Some(Arc::new(move |t| v(&[q0 + u0 * t]))),
            Kind::Wedge | Kind::Pocket => None,
        }
    }

    pub fn force_sup(&self) -> f64 {
        self.force().sup_norm
    }
}

/// All built-in scenarios.
pub fn registry() -> Vec<Scenario> {
    vec![
        Scenario {
            name: "floor",
            description: "point falling onto the floor q >= 0 under gravity",
            dim: 1,
            q0: vec![1.0],
            u0: vec![0.0],
            h: 0.01,
            horizon: 2.0,
            convex: true,
            kind: Kind::Floor,
        },
        Scenario {
            name: "wedge",
            description: "point sliding into the corner q1 >= 0, q2 >= 0",
            dim: 2,
            q0: vec![1.0, 1.0],
            u0: vec![-1.0, 0.0],
            h: 0.01,
            horizon: 2.0,
            convex: true,
            kind: Kind::Wedge,
        },
        Scenario {
            name: "piston",
            description: "wall q >= t catching up with a slower point",
            dim: 1,
            q0: vec![1.0],
            u0: vec![-0.5],
            h: 0.01,
            horizon: 2.0,
            convex: true,
            kind: Kind::Piston,
        },
        Scenario {
            name: "pocket",
            description: "outside the unit disc and above the floor q2 >= 0",
            dim: 2,
            q0: vec![0.3, 2.0],
            u0: vec![0.0, 0.0],
            h: 0.01,
            horizon: 2.0,
            convex: false,
            kind: Kind::Pocket,
        },
        Scenario {
            name: "free",
            description: "no constraints, no force",
            dim: 1,
            q0: vec![1.0],
            u0: vec![-1.0],
            h: 0.01,
            horizon: 1.0,
            convex: true,
            kind: Kind::Free,
        },
    ]
}

pub fn lookup(name: &str) -> Result<Scenario> {
    registry().into_iter().find(|s| s.name == name).ok_or_else(|| Error::UnknownScenario(name.to_string()))
}

/// User-supplied settings; unset fields fall back to scenario defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    pub scenario: Option<String>,
    pub q0: Option<Vec<f64>>,
    pub u0: Option<Vec<f64>>,
    pub h: Option<f64>,
    pub horizon: Option<f64>,
    pub j: Option<f64>,
    pub min_order: Option<f64>,
    pub sweep: Option<Vec<f64>>,
    pub out: Option<PathBuf>,
    pub verify: Option<bool>,
    pub json_only: Option<bool>,
}

fn parse_f64(key: &str, s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Config(format!("{key}: `{}` is not a number", s.trim())))
}

pub fn parse_list(key: &str, s: &str) -> Result<Vec<f64>> {
    s.split(',').map(|x| parse_f64(key, x)).collect()
}

fn parse_bool(key: &str, s: &str) -> Result<bool> {
    match s.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(Error::Config(format!("{key}: `{other}` is not a boolean"))),
    }
}

impl RunConfig {
    /// Parses flat `key = value` text; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut seen = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let key = key.trim();
            if seen.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
        }
        let mut cfg = RunConfig::default();
        for (key, value) in &seen {
            match key.as_str() {
                "scenario" => cfg.scenario = Some(value.clone()),
                "q0" => cfg.q0 = Some(parse_list(key, value)?),
                "u0" => cfg.u0 = Some(parse_list(key, value)?),
                "h" => cfg.h = Some(parse_f64(key, value)?),
                "T" => cfg.horizon = Some(parse_f64(key, value)?),
                "J" => cfg.j = Some(parse_f64(key, value)?),
                "min_order" => cfg.min_order = Some(parse_f64(key, value)?),
                "sweep" => cfg.sweep = Some(parse_list(key, value)?),
                "out" => cfg.out = Some(PathBuf::from(value)),
                "verify" => cfg.verify = Some(parse_bool(key, value)?),
                "json_only" => cfg.json_only = Some(parse_bool(key, value)?),
                other => return Err(Error::Config(format!("unknown key `{other}`"))),
            }
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Fields set in `other` win.
    pub fn merged_with(self, other: RunConfig) -> RunConfig {
        RunConfig {
            scenario: other.scenario.or(self.scenario),
            q0: other.q0.or(self.q0),
            u0: other.u0.or(self.u0),
            h: other.h.or(self.h),
            horizon: other.horizon.or(self.horizon),
            j: other.j.or(self.j),
            min_order: other.min_order.or(self.min_order),
            sweep: other.sweep.or(self.sweep),
            out: other.out.or(self.out),
            verify: other.verify.or(self.verify),
            json_only: other.json_only.or(self.json_only),
        }
    }

    pub fn resolve(self) -> Result<ResolvedConfig> {
        let name = self.scenario.ok_or_else(|| Error::Config("no scenario given".into()))?;
        let scenario = lookup(&name)?;
        let vector = |key: &str, given: Option<Vec<f64>>, default: &[f64]| -> Result<Vector> {
            let xs = given.unwrap_or_else(|| default.to_vec());
            if xs.len() != scenario.dim {
                return Err(Error::Config(format!(
                    "{key} has {} components, scenario `{}` needs {}",
                    xs.len(),
                    scenario.name,
                    scenario.dim
                )));
            }
            if xs.iter().any(|x| !x.is_finite()) {
                return Err(Error::Config(format!("{key} must be finite")));
            }
            Ok(Vector::from_vec(xs))
        };
        let q0 = vector("q0", self.q0, &scenario.q0)?;
        let u0 = vector("u0", self.u0, &scenario.u0)?;
        let horizon = self.horizon.unwrap_or(scenario.horizon);
        let h = self.h.unwrap_or(scenario.h);
        let steps = self.sweep.clone().unwrap_or_else(|| vec![h]);
        if steps.is_empty() {
            return Err(Error::Config("empty sweep".into()));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::Config(format!("T must be positive, got {horizon}")));
        }
        for &s in &steps {
            if !(s > 0.0 && s < horizon) {
                return Err(Error::Config(format!("need 0 < h < T, got h={s}, T={horizon}")));
            }
        }
        let j = self.j.unwrap_or(DEFAULT_J);
        if !(j > 0.0 && j.is_finite()) {
            return Err(Error::Config(format!("J must be positive, got {j}")));
        }
        Ok(ResolvedConfig {
            out: self.out.unwrap_or_else(|| PathBuf::from(scenario.name)),
            scenario,
            q0,
            u0,
            h,
            horizon,
            j,
            min_order: self.min_order.unwrap_or(0.9),
            sweep: self.sweep,
            verify: self.verify.unwrap_or(false),
            json_only: self.json_only.unwrap_or(false),
        })
    }
}

/// A fully validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedConfig {
    pub scenario: Scenario,
    pub q0: Vector,
    pub u0: Vector,
    pub h: f64,
    pub horizon: f64,
    pub j: f64,
    pub min_order: f64,
    pub sweep: Option<Vec<f64>>,
    pub out: PathBuf,
    pub verify: bool,
    pub json_only: bool,
}
