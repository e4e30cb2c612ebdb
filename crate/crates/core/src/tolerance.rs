//! Default numerical tolerances shared across modules.
//!
//! Every check in the crate reads its threshold from a [`Tolerances`] value;
//! [`Tolerances::default`] holds the pinned defaults.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative Hermiticity tolerance, scaled by the max-abs entry.
    pub hermitian: f64,
    /// Smallest norm that may be normalized.
    pub min_norm: f64,
    /// Max population allowed in the top quarter of the Fock basis.
    pub guard: f64,
    /// Smallest measurement probability accepted by a projection.
    pub min_probability: f64,
    /// Max population outside the two-dimensional qubit span.
    pub leak: f64,
    /// Agreement between closed-form and pipeline qubit amplitudes.
    pub closed_form: f64,
    /// |Omega t| below which sin(Omega t)/Omega switches to its series.
    pub sinc_switch: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            hermitian: 1e-10,
            min_norm: 1e-14,
            guard: 1e-8,
            min_probability: 1e-14,
            leak: 1e-10,
            closed_form: 1e-8,
            sinc_switch: 1e-6,
        }
    }
}
