//! Example plants: a staggered-grid discretization of a clamped-free
//! Timoshenko beam (linear pH, conservative) and a nonlinear MEMS optical
//! switch with its equilibrium and linearization.

pub mod beam;
pub mod mems;

pub use beam::{beam_initial_state, build_timoshenko, reconstruct_deflection, BeamParams, BeamStateLayout, DeflectionProfile};
pub use mems::{MemsEquilibrium, MemsParams};
