//! Synthesis of passivity-preserving observer-based state-feedback
//! controllers for linear port-Hamiltonian systems, via LMI feasibility
//! problems, with closed-loop validation by structure-preserving
//! simulation.
//!
//! The crate is organized around the design pipeline:
//!
//! - [`system`]: pH system types `(J, R, Q, B)`, structural validation,
//!   spectra.
//! - [`lmi`]: affine matrix inequalities in one symmetric unknown, a
//!   margin-maximizing feasibility solver, and an independent solution
//!   checker.
//! - [`synthesis`]: structure assignment, the dual observer problem,
//!   controller realization in pH form, passivity certificates.
//! - [`models`]: the staggered-grid Timoshenko beam and the nonlinear MEMS
//!   switch.
//! - [`sim`]: implicit midpoint integration and power-preserving closed
//!   loops.
//! - [`config`] / [`io`] / [`cli`]: run configuration, bundles and CSV
//!   exports, command pipelines.
//!
//! See the `examples/` directory for one runnable walk-through per
//! capability; the `phlmi` binary drives the same pipelines from config
//! files.

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod lmi;
pub mod models;
pub mod sim;
pub mod synthesis;
pub mod system;

pub use error::{Error, Result};
pub use system::{LinearPhSystem, SpectralReport, StructureReport, Tolerances};
