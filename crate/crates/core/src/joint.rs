//! Pure states of atom ⊗ field, stored atom-major (`atom * N + n`).

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::FieldState;
use crate::linalg::{self, ComplexMatrix, ComplexVector};
use crate::model::atom;
use crate::Tolerances;

/// Atomic state `(amplitude of |g>, amplitude of |e>)`.
pub type AtomState = [C64; 2];

/// `(|g> + |e>) / sqrt(2)`.
pub fn atom_plus() -> AtomState {
    let h = C64::from(std::f64::consts::FRAC_1_SQRT_2);
    [h, h]
}

/// `(|g> - |e>) / sqrt(2)`.
pub fn atom_minus() -> AtomState {
    let h = C64::from(std::f64::consts::FRAC_1_SQRT_2);
    [h, -h]
}

pub fn atom_excited() -> AtomState {
    [C64::from(0.0), C64::from(1.0)]
}

pub fn atom_ground() -> AtomState {
    [C64::from(1.0), C64::from(0.0)]
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    amplitudes: ComplexVector,
    field_dim: usize,
}

impl JointState {
    pub fn from_amplitudes(amplitudes: ComplexVector, field_dim: usize) -> Result<Self> {
        if amplitudes.len() != atom::DIM * field_dim {
            return Err(Error::DimensionMismatch {
                expected: atom::DIM * field_dim,
                found: amplitudes.len(),
            });
        }
        Ok(JointState {
            amplitudes,
            field_dim,
        })
    }

    pub fn product(atom_state: AtomState, field: &FieldState) -> Self {
        let a = ComplexVector::from_column_slice(&atom_state);
        JointState {
            amplitudes: linalg::tensor_vec(&a, field.amplitudes()),
            field_dim: field.dim(),
        }
    }

    /// `(psi_g |g> + psi_e |e>)`, not renormalized.
    pub fn from_branches(psi_g: &FieldState, psi_e: &FieldState) -> Result<Self> {
        if psi_g.dim() != psi_e.dim() {
            return Err(Error::DimensionMismatch {
                expected: psi_g.dim(),
                found: psi_e.dim(),
            });
        }
        let n = psi_g.dim();
        let mut amplitudes = ComplexVector::zeros(2 * n);
        amplitudes
            .rows_mut(atom::GROUND * n, n)
            .copy_from(psi_g.amplitudes());
        amplitudes
            .rows_mut(atom::EXCITED * n, n)
            .copy_from(psi_e.amplitudes());
        Ok(JointState {
            amplitudes,
            field_dim: n,
        })
    }

    pub fn field_dim(&self) -> usize {
        self.field_dim
    }

    pub fn amplitudes(&self) -> &ComplexVector {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn scaled(&self, factor: C64) -> Self {
        JointState {
            amplitudes: self.amplitudes.map(|z| z * factor),
            field_dim: self.field_dim,
        }
    }

    /// Field amplitudes attached to atomic level `level` (unnormalized).
    pub fn branch(&self, level: usize) -> FieldState {
        let n = self.field_dim;
        FieldState::from_amplitudes(self.amplitudes.rows(level * n, n).into_owned())
            .expect("branch of a valid joint state")
    }

    /// `<atom_bra| state>`: the field amplitudes left after contracting the
    /// atomic factor, not renormalized.
    pub fn contract_atom(&self, atom_bra: &AtomState) -> FieldState {
        let g = self.branch(atom::GROUND).into_amplitudes();
        let e = self.branch(atom::EXCITED).into_amplitudes();
        let amps = g.map(|z| z * atom_bra[0].conj()) + e.map(|z| z * atom_bra[1].conj());
        FieldState::from_amplitudes(amps).expect("contraction of a valid joint state")
    }

    pub fn apply(&self, op: &ComplexMatrix) -> Result<Self> {
        if op.ncols() != self.amplitudes.len() || op.nrows() != self.amplitudes.len() {
            return Err(Error::DimensionMismatch {
                expected: self.amplitudes.len(),
                found: op.ncols(),
            });
        }
        Ok(JointState {
            amplitudes: op * &self.amplitudes,
            field_dim: self.field_dim,
        })
    }

    /// Largest top-quarter population over the two atomic branches.
    pub fn guard_population(&self) -> f64 {
        self.branch(atom::GROUND)
            .guard_population()
            .max(self.branch(atom::EXCITED).guard_population())
    }

    pub fn check_truncation(&self, tol: &Tolerances) -> Result<()> {
        let population = self.guard_population();
        if population > tol.guard {
            return Err(Error::Truncation {
                population,
                tolerance: tol.guard,
            });
        }
        Ok(())
    }
}
