//! Propagators on the joint space.
//!
//! - [`analytic_jcm_propagator`]: closed-form exponential of the
//!   Jaynes-Cummings-form Hamiltonian, block by block in the Fock basis.
//! - [`composite_propagate`]: `T^dagger U T`, the small-rotation
//!   approximation to the full dynamics.
//! - [`exact_propagate`]: dense exponential of the full Hamiltonian, used as
//!   the oracle.
//! - [`rwa_propagate`]: plain rotating-wave dynamics with the bare coupling.
//!
//! The closed form factorizes as `exp(-i t omega (n + sigma_z/2))` times an
//! interaction factor `exp(-i t [(Delta/2) sigma_z + g (a sigma_+ + a^dagger sigma_-)])`.
//! Both pieces commute with the excitation number, so the product is exact.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::Result;
use crate::fock;
use crate::joint::JointState;
use crate::linalg::{self, tensor, ComplexMatrix, HermitianEigen};
use crate::model::{self, atom, ModelParams};
use crate::Tolerances;

const I: C64 = C64::new(0.0, 1.0);

/// `Omega_k = sqrt(Delta^2/4 + g^2 k)` for `k = 0..=N`.
#[derive(Debug, Clone)]
pub struct RabiFrequencyTable {
    values: Vec<f64>,
}

impl RabiFrequencyTable {
    pub fn new(detuning: f64, coupling: f64, n: usize) -> Self {
        let values = (0..=n)
            .map(|k| (detuning * detuning / 4.0 + coupling * coupling * k as f64).sqrt())
            .collect();
        RabiFrequencyTable { values }
    }

    pub fn get(&self, k: usize) -> f64 {
        self.values[k]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// `sin(omega t) / omega`, switching to its Taylor series near `omega t = 0`.
pub fn sin_ratio(omega: f64, t: f64, switch: f64) -> f64 {
    let x = omega * t;
    if x.abs() < switch {
        t * (1.0 - x * x / 6.0)
    } else {
        x.sin() / omega
    }
}

/// The four field-space blocks of the interaction factor plus the diagonal
/// free phase, at one time.
#[derive(Debug, Clone)]
pub struct PropagatorBlocks {
    pub t: f64,
    pub u11: ComplexMatrix,
    pub u12: ComplexMatrix,
    pub u21: ComplexMatrix,
    pub u22: ComplexMatrix,
    /// Diagonal of `exp(-i t omega (n + sigma_z / 2))`, joint ordering.
    pub free_phase: Vec<C64>,
}

impl PropagatorBlocks {
    /// Blocks for frequencies `omega`, detuning `detuning` and exchange
    /// coupling `coupling` on an `n`-level field.
    ///
    /// `Omega_{n+1}` comes from `a a^dagger`, whose truncated form vanishes
    /// on the top level, so `|e, N-1>` only picks up the detuning phase.
    pub fn new(
        omega: f64,
        detuning: f64,
        coupling: f64,
        t: f64,
        n: usize,
        tol: &Tolerances,
    ) -> Result<Self> {
        let table = RabiFrequencyTable::new(detuning, coupling, n);
        let raised = |k: usize| {
            if k + 1 < n {
                table.get(k + 1)
            } else {
                table.get(0)
            }
        };
        let s = |w: f64| sin_ratio(w, t, tol.sinc_switch);
        let half_det = detuning / 2.0;

        let diag = |f: &dyn Fn(usize) -> C64| {
            ComplexMatrix::from_diagonal(&linalg::ComplexVector::from_fn(n, |k, _| f(k)))
        };
        let u11 = diag(&|k| {
            let w = raised(k);
            C64::from((w * t).cos()) - I * half_det * s(w)
        });
        let u22 = diag(&|k| {
            let w = table.get(k);
            C64::from((w * t).cos()) + I * half_det * s(w)
        });
        let a = fock::annihilation(n)?;
        let u12 = (&a * diag(&|k| C64::from(s(table.get(k))))).map(|z| -I * coupling * z);
        let u21 = (a.adjoint() * diag(&|k| C64::from(s(raised(k))))).map(|z| -I * coupling * z);

        let free_phase = (0..atom::DIM)
            .flat_map(|level| {
                let sz = if level == atom::EXCITED { 1.0 } else { -1.0 };
                (0..n).map(move |k| C64::from_polar(1.0, -t * omega * (k as f64 + sz / 2.0)))
            })
            .collect();

        Ok(PropagatorBlocks {
            t,
            u11,
            u12,
            u21,
            u22,
            free_phase,
        })
    }

    /// Free phase times
    /// `(U11+U22)/2 ⊗ I + (U11-U22)/2 sigma_z + U21 sigma_- + U12 sigma_+`.
    pub fn assemble(&self) -> ComplexMatrix {
        let sum = (&self.u11 + &self.u22).scale(0.5);
        let diff = (&self.u11 - &self.u22).scale(0.5);
        let mut m = tensor(&atom::identity(), &sum)
            + tensor(&atom::sigma_z(), &diff)
            + tensor(&atom::sigma_minus(), &self.u21)
            + tensor(&atom::sigma_plus(), &self.u12);
        for (mut row, phase) in m.row_iter_mut().zip(self.free_phase.iter()) {
            row *= *phase;
        }
        m
    }
}

/// Closed-form `exp(-i t H_eff)` with the renormalized coupling.
pub fn analytic_jcm_propagator(p: &ModelParams, t: f64, n: usize) -> Result<ComplexMatrix> {
    Ok(PropagatorBlocks::new(
        p.omega(),
        p.detuning(),
        p.epsilon(),
        t,
        n,
        &Tolerances::default(),
    )?
    .assemble())
}

/// Closed-form `exp(-i t H_rwa)` with the bare coupling.
pub fn analytic_rwa_propagator(p: &ModelParams, t: f64, n: usize) -> Result<ComplexMatrix> {
    Ok(PropagatorBlocks::new(
        p.omega(),
        p.detuning(),
        p.lambda(),
        t,
        n,
        &Tolerances::default(),
    )?
    .assemble())
}

pub trait Propagator: Sync {
    fn propagate(&self, psi0: &JointState, t: f64) -> Result<JointState>;
}

/// Dense exponential of the full Hamiltonian; the eigendecomposition is
/// computed once and reused for every time.
#[derive(Debug, Clone)]
pub struct ExactPropagator {
    eigen: HermitianEigen,
}

impl ExactPropagator {
    pub fn new(p: &ModelParams, n: usize) -> Result<Self> {
        Ok(ExactPropagator {
            eigen: linalg::hermitian_eig(&model::rabi_hamiltonian(p, n)?)?,
        })
    }

    pub fn matrix(&self, t: f64) -> ComplexMatrix {
        self.eigen.propagator(t)
    }
}

impl Propagator for ExactPropagator {
    fn propagate(&self, psi0: &JointState, t: f64) -> Result<JointState> {
        JointState::from_amplitudes(self.eigen.evolve(t, psi0.amplitudes()), psi0.field_dim())
    }
}

/// `T^dagger U(t) T` with `U` the closed-form renormalized propagator.
#[derive(Debug, Clone)]
pub struct SmallRotationPropagator {
    params: ModelParams,
    rotation: ComplexMatrix,
    rotation_adj: ComplexMatrix,
    tol: Tolerances,
}

impl SmallRotationPropagator {
    pub fn new(p: &ModelParams, n: usize) -> Result<Self> {
        Self::with_tolerances(p, n, Tolerances::default())
    }

    pub fn with_tolerances(p: &ModelParams, n: usize, tol: Tolerances) -> Result<Self> {
        let rotation = model::small_rotation(p, n)?;
        let rotation_adj = rotation.adjoint();
        Ok(SmallRotationPropagator {
            params: *p,
            rotation,
            rotation_adj,
            tol,
        })
    }

    pub fn rotation(&self) -> &ComplexMatrix {
        &self.rotation
    }
}

impl Propagator for SmallRotationPropagator {
    fn propagate(&self, psi0: &JointState, t: f64) -> Result<JointState> {
        let p = &self.params;
        let n = psi0.field_dim();
        let rotated = psi0.apply(&self.rotation)?;
        rotated.check_truncation(&self.tol)?;
        let blocks = PropagatorBlocks::new(p.omega(), p.detuning(), p.epsilon(), t, n, &self.tol)?;
        rotated.apply(&blocks.assemble())?.apply(&self.rotation_adj)
    }
}

/// Rotating-wave dynamics with the bare coupling and no rotation.
#[derive(Debug, Clone)]
pub struct RwaPropagator {
    params: ModelParams,
    tol: Tolerances,
}

impl RwaPropagator {
    pub fn new(p: &ModelParams) -> Self {
        RwaPropagator {
            params: *p,
            tol: Tolerances::default(),
        }
    }
}

impl Propagator for RwaPropagator {
    fn propagate(&self, psi0: &JointState, t: f64) -> Result<JointState> {
        let p = &self.params;
        let blocks = PropagatorBlocks::new(
            p.omega(),
            p.detuning(),
            p.lambda(),
            t,
            psi0.field_dim(),
            &self.tol,
        )?;
        psi0.apply(&blocks.assemble())
    }
}

pub fn composite_propagate(p: &ModelParams, psi0: &JointState, t: f64) -> Result<JointState> {
    SmallRotationPropagator::new(p, psi0.field_dim())?.propagate(psi0, t)
}

pub fn exact_propagate(p: &ModelParams, psi0: &JointState, t: f64) -> Result<JointState> {
    ExactPropagator::new(p, psi0.field_dim())?.propagate(psi0, t)
}

pub fn rwa_propagate(p: &ModelParams, psi0: &JointState, t: f64) -> Result<JointState> {
    RwaPropagator::new(p).propagate(psi0, t)
}

/// Evolves `psi0` to every time in `times`; points run in parallel and the
/// result keeps the order of `times`.
pub fn evolve_series<P: Propagator + ?Sized>(
    propagator: &P,
    psi0: &JointState,
    times: &[f64],
) -> Result<Vec<JointState>> {
    times
        .par_iter()
        .map(|&t| propagator.propagate(psi0, t))
        .collect()
}
