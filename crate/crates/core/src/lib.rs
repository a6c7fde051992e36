//! Multi-robot swarm dynamics with passivity-preserving local coupling
//! scaling.
//!
//! Robots are double integrators coupled by a nonlinear spring potential and
//! pairwise dampers over the complete graph, gated by proximity. When one
//! robot touches the environment it rescales the springs and dampers to its
//! neighbors so that the swarm presents a chosen stiffness and damping at
//! the contact point. The [`energy`] module certifies, on every run, that the
//! swarm stays passive with respect to the external forces.
//!
//! Start from [`harness::Scenario::reference`] and [`simulation::simulate`], or
//! look at the runnable programs under `examples/`.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod controller;
pub mod dynamics;
pub mod energy;
pub mod error;
pub mod harness;
pub mod potentials;
pub mod simulation;
pub mod topology;

pub use error::{Error, Result};
