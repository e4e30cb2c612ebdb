//! Model parameters and the Hamiltonians on the joint atom ⊗ field space.
//!
//! Atom basis: index 0 = |g>, index 1 = |e>, with
//! `sigma_z = |e><e| - |g><g|`, `sigma_+ = |e><g|`, `sigma_- = |g><e|`.
//! Joint operators are `atom ⊗ field`, so joint index = `atom * N + n`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock;
use crate::linalg::{self, tensor, ComplexMatrix};

/// Rotation angles at or above this make the first-order treatment suspect.
pub const SMALL_ROTATION_LIMIT: f64 = 0.2;

/// Field frequency, atomic frequency and coupling (hbar = 1).
///
/// The rotation angle, renormalized coupling and detuning are always derived
/// from these three.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ModelParams {
    omega: f64,
    omega0: f64,
    lambda: f64,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    omega: f64,
    omega0: f64,
    lambda: f64,
}

impl TryFrom<RawParams> for ModelParams {
    type Error = Error;
    fn try_from(raw: RawParams) -> Result<Self> {
        ModelParams::new(raw.omega, raw.omega0, raw.lambda)
    }
}

impl From<ModelParams> for RawParams {
    fn from(p: ModelParams) -> Self {
        RawParams {
            omega: p.omega,
            omega0: p.omega0,
            lambda: p.lambda,
        }
    }
}

impl ModelParams {
    pub fn new(omega: f64, omega0: f64, lambda: f64) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "omega must be > 0, got {omega}"
            )));
        }
        if !(omega0.is_finite() && omega0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "omega0 must be > 0, got {omega0}"
            )));
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be >= 0, got {lambda}"
            )));
        }
        Ok(ModelParams {
            omega,
            omega0,
            lambda,
        })
    }

    /// omega = 1, omega0 = 1.5, lambda = 0.1: coupling ratio 0.1, detuned.
    pub fn reference() -> Self {
        ModelParams {
            omega: 1.0,
            omega0: 1.5,
            lambda: 0.1,
        }
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.omega, self.omega0, lambda)
    }

    /// Rotation angle `lambda / (omega + omega0)`.
    pub fn delta(&self) -> f64 {
        self.lambda / (self.omega + self.omega0)
    }

    /// Renormalized coupling `2 lambda omega0 / (omega0 + omega)`.
    pub fn epsilon(&self) -> f64 {
        // ratio first: exactly 1 at resonance, so epsilon == lambda there
        self.lambda * (2.0 * self.omega0 / (self.omega0 + self.omega))
    }

    /// `omega0 - omega`.
    pub fn detuning(&self) -> f64 {
        self.omega0 - self.omega
    }

    pub fn is_small_rotation_valid(&self) -> bool {
        self.delta() < SMALL_ROTATION_LIMIT
    }
}

pub mod atom {
    use super::*;

    pub const DIM: usize = 2;
    pub const GROUND: usize = 0;
    pub const EXCITED: usize = 1;

    fn from_rows(rows: [[f64; 2]; 2]) -> ComplexMatrix {
        ComplexMatrix::from_fn(2, 2, |i, j| C64::from(rows[i][j]))
    }

    pub fn identity() -> ComplexMatrix {
        ComplexMatrix::identity(2, 2)
    }

    pub fn sigma_z() -> ComplexMatrix {
        from_rows([[-1.0, 0.0], [0.0, 1.0]])
    }

    pub fn sigma_plus() -> ComplexMatrix {
        from_rows([[0.0, 0.0], [1.0, 0.0]])
    }

    pub fn sigma_minus() -> ComplexMatrix {
        from_rows([[0.0, 1.0], [0.0, 0.0]])
    }

    /// `sigma_+ + sigma_-`.
    pub fn sigma_x() -> ComplexMatrix {
        from_rows([[0.0, 1.0], [1.0, 0.0]])
    }
}

/// Joint-space indices whose field label lies below the guard band.
pub fn guarded_indices(n: usize) -> Vec<usize> {
    let g = fock::guard_start(n);
    (0..atom::DIM)
        .flat_map(|s| (0..g).map(move |k| s * n + k))
        .collect()
}

struct FieldOps {
    n: usize,
    a: ComplexMatrix,
    ad: ComplexMatrix,
    num: ComplexMatrix,
    id: ComplexMatrix,
}

impl FieldOps {
    fn new(n: usize) -> Result<Self> {
        let a = fock::annihilation(n)?;
        let ad = a.adjoint();
        let num = fock::number(n)?;
        Ok(FieldOps {
            n,
            a,
            ad,
            num,
            id: fock::identity(n),
        })
    }

    fn quadrature(&self) -> ComplexMatrix {
        &self.a + &self.ad
    }

    fn joint_identity(&self) -> ComplexMatrix {
        ComplexMatrix::identity(2 * self.n, 2 * self.n)
    }

    /// `omega (I ⊗ n) + (omega0 / 2) (sigma_z ⊗ I)`.
    fn free(&self, p: &ModelParams) -> ComplexMatrix {
        tensor(&atom::identity(), &self.num).scale(p.omega)
            + tensor(&atom::sigma_z(), &self.id).scale(p.omega0 / 2.0)
    }
}

/// `omega n + (omega0/2) sigma_z + lambda (sigma_+ + sigma_-)(a + a^dagger)`.
pub fn rabi_hamiltonian(p: &ModelParams, n: usize) -> Result<ComplexMatrix> {
    let f = FieldOps::new(n)?;
    Ok(f.free(p) + tensor(&atom::sigma_x(), &f.quadrature()).scale(p.lambda))
}

/// `T = exp(-delta (a - a^dagger)(sigma_+ + sigma_-))`.
pub fn small_rotation(p: &ModelParams, n: usize) -> Result<ComplexMatrix> {
    let f = FieldOps::new(n)?;
    let generator = tensor(&atom::sigma_x(), &(&f.a - &f.ad)).scale(-p.delta());
    linalg::expm_general(&generator)
}

/// The rotated Hamiltonian `T H T^dagger` written out in closed form, with
/// hyperbolic functions of `2 delta (a - a^dagger)` and both constant
/// shifts (`omega delta^2`, `-2 lambda delta`) kept.
pub fn transformed_hamiltonian_exact(p: &ModelParams, n: usize) -> Result<ComplexMatrix> {
    let f = FieldOps::new(n)?;
    let delta = p.delta();
    let hyp = fock::hyperbolic_ops(2.0 * delta, n)?;
    let sx = atom::sigma_x();
    let coupling = tensor(&sx, &f.quadrature());

    let field_part = (tensor(&atom::identity(), &f.num) - coupling.scale(delta)
        + f.joint_identity().scale(delta * delta))
    .scale(p.omega);
    let atom_part = (tensor(&atom::sigma_z(), &hyp.cosh)
        - tensor(&(atom::sigma_minus() - atom::sigma_plus()), &hyp.sinh))
    .scale(p.omega0 / 2.0);
    let interaction = coupling.scale(p.lambda) - f.joint_identity().scale(2.0 * p.lambda * delta);

    Ok(field_part + atom_part + interaction)
}

/// Whether the constant energy shifts of the rotated Hamiltonian are kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstantShift {
    Dropped,
    Restored,
}

/// Constant part of the rotated Hamiltonian: `omega delta^2 - 2 lambda delta`.
pub fn constant_shift(p: &ModelParams) -> f64 {
    let delta = p.delta();
    p.omega * delta * delta - 2.0 * p.lambda * delta
}

/// Rotated Hamiltonian expanded to first order in delta.
pub fn first_order_hamiltonian(
    p: &ModelParams,
    n: usize,
    shift: ConstantShift,
) -> Result<ComplexMatrix> {
    let f = FieldOps::new(n)?;
    let delta = p.delta();
    let coupling = tensor(&atom::sigma_x(), &f.quadrature());

    let field_part = (tensor(&atom::identity(), &f.num) - coupling.scale(delta)).scale(p.omega);
    let atom_part = (tensor(&atom::sigma_z(), &f.id)
        + tensor(&(atom::sigma_plus() - atom::sigma_minus()), &(&f.a - &f.ad)).scale(2.0 * delta))
    .scale(p.omega0 / 2.0);
    let mut h = field_part + atom_part + coupling.scale(p.lambda);
    if shift == ConstantShift::Restored {
        h += f.joint_identity().scale(constant_shift(p));
    }
    Ok(h)
}

fn jcm(p: &ModelParams, coupling: f64, n: usize) -> Result<ComplexMatrix> {
    let f = FieldOps::new(n)?;
    let exchange = tensor(&atom::sigma_plus(), &f.a) + tensor(&atom::sigma_minus(), &f.ad);
    Ok(f.free(p) + exchange.scale(coupling))
}

/// Jaynes-Cummings form with the renormalized coupling epsilon.
pub fn effective_jcm(p: &ModelParams, n: usize) -> Result<ComplexMatrix> {
    jcm(p, p.epsilon(), n)
}

/// Jaynes-Cummings form with the bare coupling lambda (plain RWA).
pub fn rwa_jcm(p: &ModelParams, n: usize) -> Result<ComplexMatrix> {
    jcm(p, p.lambda, n)
}

/// `sigma_+ sigma_- ⊗ I + I ⊗ n`.
pub fn excitation_number(n: usize) -> Result<ComplexMatrix> {
    let f = FieldOps::new(n)?;
    Ok(tensor(&(atom::sigma_plus() * atom::sigma_minus()), &f.id)
        + tensor(&atom::identity(), &f.num))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, max_abs_diff, restrict};

    fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
        a * b - b * a
    }

    #[test]
    fn derived_parameters() {
        let p = ModelParams::new(1.0, 1.0, 0.1).unwrap();
        assert_eq!(p.epsilon(), p.lambda());
        assert_eq!(p.delta(), 0.05);
        assert_eq!(p.detuning(), 0.0);

        let p = ModelParams::reference();
        assert_eq!(p.epsilon(), 0.12);
        assert_eq!(p.detuning(), 0.5);
        assert!(p.is_small_rotation_valid());
        assert!(!ModelParams::new(1.0, 1.0, 0.5)
            .unwrap()
            .is_small_rotation_valid());
    }

    #[test]
    fn rejects_bad_params() {
        assert!(ModelParams::new(0.0, 1.0, 0.1).is_err());
        assert!(ModelParams::new(1.0, -1.0, 0.1).is_err());
        assert!(ModelParams::new(1.0, 1.0, -0.1).is_err());
        assert!(ModelParams::new(1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn params_serde_rederives() {
        let json = r#"{"omega":1.0,"omega0":1.5,"lambda":0.1}"#;
        let p: ModelParams = serde_json::from_str(json).unwrap();
        assert_eq!(p, ModelParams::reference());
        assert!(
            serde_json::from_str::<ModelParams>(r#"{"omega":-1.0,"omega0":1.5,"lambda":0.1}"#)
                .is_err()
        );
    }

    #[test]
    fn atomic_algebra() {
        let comm = commutator(&atom::sigma_plus(), &atom::sigma_minus());
        assert_eq!(comm, atom::sigma_z());
    }

    #[test]
    fn rabi_hamiltonian_examples() {
        let p = ModelParams::new(1.0, 1.5, 0.0).unwrap();
        let h = rabi_hamiltonian(&p, 6).unwrap();
        for s in 0..2 {
            for k in 0..6 {
                let sz = if s == atom::EXCITED { 1.0 } else { -1.0 };
                assert_eq!(h[(s * 6 + k, s * 6 + k)].re, k as f64 + 0.75 * sz);
            }
        }
        assert_eq!(
            max_abs(&(h.clone() - ComplexMatrix::from_diagonal(&h.diagonal()))),
            0.0
        );

        let p = ModelParams::new(1.0, 1.0, 0.1).unwrap();
        let h = rabi_hamiltonian(&p, 2).unwrap();
        assert_eq!(h[(atom::EXCITED * 2, atom::GROUND * 2 + 1)], C64::from(0.1));
        assert_eq!(linalg::hermitian_deviation(&h), 0.0);
    }

    #[test]
    fn small_rotation_examples() {
        let n = 64;
        let p0 = ModelParams::new(1.0, 1.5, 0.0).unwrap();
        assert_eq!(
            small_rotation(&p0, n).unwrap(),
            ComplexMatrix::identity(2 * n, 2 * n)
        );

        let p = ModelParams::reference();
        let t = small_rotation(&p, n).unwrap();
        let tt = &t * t.adjoint();
        assert!(max_abs_diff(&tt, &ComplexMatrix::identity(2 * n, 2 * n)) < 1e-9);

        // T (|+> ⊗ |-delta>) = |+> ⊗ |0>
        let plus = crate::linalg::ComplexVector::from_element(
            2,
            C64::from(std::f64::consts::FRAC_1_SQRT_2),
        );
        let field = fock::coherent_state(C64::from(-p.delta()), n).unwrap();
        let psi = linalg::tensor_vec(&plus, field.amplitudes());
        let out = &t * psi;
        let want = linalg::tensor_vec(&plus, fock::FieldState::vacuum(n).unwrap().amplitudes());
        assert!((out - want).norm() < 1e-8);
    }

    #[test]
    fn conjugation_reproduces_transformed_hamiltonian() {
        let n = 64;
        let p = ModelParams::reference();
        let t = small_rotation(&p, n).unwrap();
        let rotated = &t * rabi_hamiltonian(&p, n).unwrap() * t.adjoint();
        let closed = transformed_hamiltonian_exact(&p, n).unwrap();
        let idx = guarded_indices(n);
        let resid = max_abs_diff(&restrict(&rotated, &idx), &restrict(&closed, &idx));
        assert!(resid <= 1e-8, "residual {resid:e}");

        // the opposite orientation is a rotation by -delta and does not match
        let reversed = t.adjoint() * rabi_hamiltonian(&p, n).unwrap() * &t;
        let resid = max_abs_diff(&restrict(&reversed, &idx), &restrict(&closed, &idx));
        assert!(resid > 1e-2, "residual {resid:e}");
    }

    #[test]
    fn limits_at_zero_coupling() {
        let n = 8;
        let p = ModelParams::new(1.0, 1.5, 0.0).unwrap();
        let free = rabi_hamiltonian(&p, n).unwrap();
        for h in [
            transformed_hamiltonian_exact(&p, n).unwrap(),
            first_order_hamiltonian(&p, n, ConstantShift::Dropped).unwrap(),
            effective_jcm(&p, n).unwrap(),
            rwa_jcm(&p, n).unwrap(),
        ] {
            assert!(max_abs_diff(&h, &free) < 1e-15);
        }
    }

    #[test]
    fn all_hamiltonians_hermitian() {
        let n = 24;
        let p = ModelParams::reference();
        for h in [
            rabi_hamiltonian(&p, n).unwrap(),
            transformed_hamiltonian_exact(&p, n).unwrap(),
            first_order_hamiltonian(&p, n, ConstantShift::Dropped).unwrap(),
            effective_jcm(&p, n).unwrap(),
            rwa_jcm(&p, n).unwrap(),
        ] {
            assert!(linalg::hermitian_deviation(&h) <= 1e-10 * max_abs(&h));
        }
    }

    #[test]
    fn first_order_form_equals_effective_jcm() {
        // with delta = lambda / (omega + omega0) the counter-rotating pieces
        // of the first-order Hamiltonian cancel identically
        let n = 32;
        for p in [
            ModelParams::reference(),
            ModelParams::new(1.0, 1.0, 0.1).unwrap(),
        ] {
            let h1 = first_order_hamiltonian(&p, n, ConstantShift::Dropped).unwrap();
            let heff = effective_jcm(&p, n).unwrap();
            assert!(max_abs_diff(&h1, &heff) < 1e-14);
        }
    }

    #[test]
    fn restored_shift_adds_constant() {
        let n = 8;
        let p = ModelParams::reference();
        let dropped = first_order_hamiltonian(&p, n, ConstantShift::Dropped).unwrap();
        let restored = first_order_hamiltonian(&p, n, ConstantShift::Restored).unwrap();
        let diff = restored - dropped;
        let c = constant_shift(&p);
        assert!(max_abs_diff(&diff, &ComplexMatrix::identity(2 * n, 2 * n).scale(c)) < 1e-15);
    }

    #[test]
    fn rwa_versus_effective() {
        let n = 16;
        let p = ModelParams::new(1.0, 1.0, 0.1).unwrap();
        assert_eq!(rwa_jcm(&p, n).unwrap(), effective_jcm(&p, n).unwrap());

        let p = ModelParams::reference();
        let diff = rwa_jcm(&p, n).unwrap() - effective_jcm(&p, n).unwrap();
        // largest exchange element sqrt(N-1) |lambda - epsilon|
        let want = (p.epsilon() - p.lambda()).abs() * ((n - 1) as f64).sqrt();
        assert!((max_abs(&diff) - want).abs() < 1e-14);
        assert!((p.epsilon() - p.lambda() - 0.02).abs() < 1e-15);
    }

    #[test]
    fn excitation_number_conservation() {
        let n = 16;
        let p = ModelParams::reference();
        let x = excitation_number(n).unwrap();
        let c_eff = commutator(&effective_jcm(&p, n).unwrap(), &x);
        assert!(max_abs(&c_eff) <= 1e-12);
        let c_rabi = commutator(&rabi_hamiltonian(&p, n).unwrap(), &x);
        assert!(max_abs(&c_rabi) > 0.1 * p.lambda());
    }

    #[test]
    fn first_order_residual_is_second_order() {
        let n = 32;
        let idx = guarded_indices(n);
        let residual = |lambda: f64| {
            let p = ModelParams::new(1.0, 1.5, lambda).unwrap();
            let exact = transformed_hamiltonian_exact(&p, n).unwrap();
            let first = first_order_hamiltonian(&p, n, ConstantShift::Restored).unwrap();
            max_abs(&restrict(&(exact - first), &idx))
        };
        let (r_lo, r_hi) = (residual(0.025), residual(0.1));
        let slope = (r_hi / r_lo).ln() / 4f64.ln();
        assert!((slope - 2.0).abs() <= 0.1, "slope {slope}");
    }
}
