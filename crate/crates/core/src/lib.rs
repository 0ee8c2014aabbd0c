//! Bounded-tension force distribution for modular cable-driven haptic
//! interfaces.
//!
//! A set of cable modules is anchored at arbitrary positions around a single
//! end effector. Each cable can only pull, and its tension must stay inside a
//! box (a floor that keeps the cable taut and a ceiling set by the motor).
//! Given a desired 3D force, [`solver::solve`] finds per-cable tensions by
//! Dykstra's alternating projections between the tension box and the
//! equilibrium subspace `{t : A·t = f}`, starting from the all-minimum tension
//! vector so that the returned solution is the feasible point closest to it.
//! When no box-feasible tension renders the force exactly, the solver returns
//! the box point nearest the equilibrium set.
//!
//! Around the solver sit:
//!
//! - [`geometry`]: anchors, layouts, cable directions and the structure matrix.
//! - [`haptics`]: virtual-material force laws that produce the desired force.
//! - [`actuation`]: the per-module hybrid motor/brake command policy.
//! - [`simulation`]: a force-sphere validation harness with ideal and noisy
//!   plants, frame alignment and angle/magnitude error statistics.
//! - [`config`] and [`commands`]: the file formats and command implementations
//!   behind the `cable-haptics` binary.

pub mod actuation;
pub mod commands;
pub mod config;
pub mod error;
pub mod geometry;
pub mod haptics;
pub mod simulation;
pub mod solver;

mod linalg;

pub use error::{Error, Result};
pub use geometry::{ModuleAnchor, ModuleLayout, StructureMatrix, Vec3};
pub use solver::{SolveResult, SolveStatus, SolverConfig, StartMode, TensionBounds, TensionVector};
