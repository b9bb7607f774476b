//! Boundary-element electrostatics for finite-size conductor pairs.
//!
//! The crate computes capacitance-distance curves for parallel-plate,
//! sphere-plane, and cylinder-plane geometries with a charge-based
//! boundary-element solver, differentiates them into force and
//! frequency-shift observables, and fits calibration models of the form
//! `C = C0 + K/(d - d0)^eps` to expose the biases that finite conductor
//! edges introduce into the fitted exponent and distance offset.
//!
//! Modules mirror the processing chain:
//!
//! - [`geometry`]: panel meshes for plates, spheres, cylinders and their
//!   truncated variants, plus probe/plate scene assembly.
//! - [`analytic`]: closed-form reference capacitances (ideal plates, the
//!   sphere-plane image series, cylinder-plane expressions) used as solver
//!   oracles and fit-model generators.
//! - [`bem`]: influence-matrix assembly with exact uniform-panel potentials,
//!   dense and conjugate-gradient solves, capacitance extraction.
//! - [`numdiff`]: Lagrange three-point differentiation of capacitance curves
//!   in logarithmic or semilogarithmic coordinates.
//! - [`fitting`]: damped Gauss-Newton estimation of calibration parameters,
//!   exponent drift scans, and summary tables.
//! - [`pipeline`]: distance sweeps, caching, Richardson extrapolation, and
//!   reproduction bundles for the reference figure/table configurations.
//!
//! All quantities are SI: meters, farads, newtons, volts, kilograms.

pub mod analytic;
pub mod bem;
pub mod csvio;
mod error;
pub mod fitting;
pub mod geometry;
pub mod numdiff;
pub mod pipeline;

pub use error::{Error, Result};

/// Vacuum permittivity (F/m), CODATA 2018.
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;

pub use bem::{SolveMethod, SolverSettings};
pub use fitting::{FitModel, FitResult, ModelKind, Weighting};
pub use geometry::{GeometryScene, Panel, PanelMesh, ShapeSpec, ShapeTag};
pub use numdiff::{CapacitanceCurve, CurveMeta, DerivedCurve, Transform};
pub use pipeline::{DistanceGrid, ReproduceTarget, RunRecord, SweepPlan, Tier};
