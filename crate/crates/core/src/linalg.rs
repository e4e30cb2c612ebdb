//! Dense complex linear algebra on small (dim <= 256) matrices.
//!
//! Conventions used throughout the crate:
//! - matrices are indexed `(row, col)` in the usual logical order;
//! - joint atom-field operators are built with [`tensor`] with the atom
//!   factor first, so joint index = `atom * N + n`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

const EIG_EPS: f64 = 1e-15;
const EIG_MAX_ITER: usize = 10_000;

/// Largest absolute entry.
pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "max_abs_diff: shape mismatch");
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

/// Induced 1-norm (max column sum).
pub fn norm_one(m: &ComplexMatrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn hermitian_deviation(m: &ComplexMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

pub fn is_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

fn ensure_square(m: &ComplexMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

fn ensure_hermitian(m: &ComplexMatrix, rel_tol: f64) -> Result<()> {
    let deviation = hermitian_deviation(m);
    if deviation > rel_tol * max_abs(m) {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(())
}

/// Eigendecomposition `M = V diag(values) V^dagger` of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Ascending.
    pub eigenvalues: DVector<f64>,
    /// Orthonormal eigenvectors stored as columns, in eigenvalue order.
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEigen {
    /// `e^{-iMt}`.
    pub fn propagator(&self, t: f64) -> ComplexMatrix {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (mut col, &lambda) in scaled.column_iter_mut().zip(self.eigenvalues.iter()) {
            col *= C64::from_polar(1.0, -lambda * t);
        }
        scaled * v.adjoint()
    }

    /// `e^{-iMt} psi` without forming the propagator.
    pub fn evolve(&self, t: f64, psi: &ComplexVector) -> ComplexVector {
        let v = &self.eigenvectors;
        let mut coeffs = v.ad_mul(psi);
        for (c, &lambda) in coeffs.iter_mut().zip(self.eigenvalues.iter()) {
            *c *= C64::from_polar(1.0, -lambda * t);
        }
        v * coeffs
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (mut col, &lambda) in scaled.column_iter_mut().zip(self.eigenvalues.iter()) {
            col *= C64::from(lambda);
        }
        scaled * v.adjoint()
    }
}

pub fn hermitian_eig(m: &ComplexMatrix) -> Result<HermitianEigen> {
    hermitian_eig_with_tol(m, crate::Tolerances::default().hermitian)
}

pub fn hermitian_eig_with_tol(m: &ComplexMatrix, rel_tol: f64) -> Result<HermitianEigen> {
    let n = ensure_square(m)?;
    if !is_finite(m) {
        return Err(Error::NonFinite {
            context: "hermitian_eig input",
        });
    }
    ensure_hermitian(m, rel_tol)?;

    // symmetrize so the solver sees an exactly Hermitian input
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::try_new(sym, EIG_EPS, EIG_MAX_ITER).ok_or(Error::NoConvergence)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));

    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut eigenvectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(HermitianEigen {
        eigenvalues,
        eigenvectors,
    })
}

/// `e^{-iHt}` for Hermitian `H`, through the eigendecomposition.
pub fn expm_unitary(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    Ok(hermitian_eig(h)?.propagator(t))
}

/// `e^M` by scaling and squaring around a truncated Taylor series.
///
/// The matrix is scaled by `2^-s` so that its 1-norm is at most 0.5, the
/// series is summed to machine precision and the result squared `s` times.
pub fn expm_general(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = ensure_square(m)?;
    if !is_finite(m) {
        return Err(Error::NonFinite {
            context: "expm_general input",
        });
    }
    let norm = norm_one(m);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = m.scale(0.5f64.powi(squarings));

    let mut result = ComplexMatrix::identity(n, n);
    let mut term = ComplexMatrix::identity(n, n);
    for k in 1..=60 {
        term = (&term * &scaled).unscale(k as f64);
        result += &term;
        if norm_one(&term) <= f64::EPSILON * 1e-2 * norm_one(&result) {
            break;
        }
    }

    for _ in 0..squarings {
        result = &result * &result;
        if !is_finite(&result) {
            return Err(Error::NonFinite {
                context: "expm_general squaring",
            });
        }
    }
    Ok(result)
}

/// Kronecker product, first factor outermost:
/// `(i*rows(B) + k, j*cols(B) + l) = A(i,j) * B(k,l)`.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn tensor_vec(a: &ComplexVector, b: &ComplexVector) -> ComplexVector {
    a.kronecker(b)
}

/// `<u|v>`, conjugating the left argument.
pub fn inner(u: &ComplexVector, v: &ComplexVector) -> Result<C64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            found: v.len(),
        });
    }
    Ok(u.dotc(v))
}

pub fn norm(v: &ComplexVector) -> f64 {
    v.norm()
}

pub fn normalize(v: &ComplexVector) -> Result<ComplexVector> {
    let n = v.norm();
    if n.is_nan() || n <= crate::Tolerances::default().min_norm {
        return Err(Error::ZeroVector { norm: n });
    }
    Ok(v.unscale(n))
}

/// Principal submatrix on the given index set.
pub fn restrict(m: &ComplexMatrix, indices: &[usize]) -> ComplexMatrix {
    ComplexMatrix::from_fn(indices.len(), indices.len(), |i, j| {
        m[(indices[i], indices[j])]
    })
}
