//! Prediction-correction time stepping for second-order sweeping processes
//! with inelastic impacts on moving, constraint-defined, prox-regular sets.

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod geometry;
pub mod integrator;
pub mod linprog;
pub mod nnls;
pub mod projection;
pub mod qp;
pub mod scenarios;

pub use error::{Error, Result};
pub use geometry::{
    ActiveSet, AdmissibilityEstimate, ConstraintFunction, ConstraintSystem, DirectionCertificate,
    NormalConeGenerators, RegularityConstants, Vector, VelocityPolyhedron,
};
pub use projection::{project_point, project_velocity, ProjectionResult};
pub use integrator::{ContactMeasure, ForceField, RunOutput, SchemeState, Trajectory};
