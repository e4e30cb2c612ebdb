//! Two-level atom coupled to a single cavity mode, beyond the rotating-wave
//! approximation.
//!
//! A small unitary rotation brings the full (Rabi) Hamiltonian into
//! Jaynes-Cummings form with a renormalized coupling; the resulting closed
//! form propagator drives a recipe that leaves the cavity in a superposition
//! of displaced number states, and after an undisplacement, in a field qubit
//! with tunable amplitudes. Every analytic formula is checked against exact
//! evolution on the truncated Fock space.

pub mod cli;
pub mod engineering;
pub mod error;
pub mod evolution;
pub mod fock;
pub mod joint;
pub mod linalg;
pub mod model;
pub mod observables;
pub mod tolerance;

pub use error::{Error, Result};
pub use tolerance::Tolerances;
