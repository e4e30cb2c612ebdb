//! Truncated Fock space: ladder operators, displacements, coherent and
//! displaced number states.
//!
//! Displacements are exponentials of truncated generators, which stop being
//! unitary once the state reaches the top of the basis. Two rules guard
//! against that: displacement amplitudes must satisfy `|alpha|^2 <= N/8`,
//! and a state with more than `guard` population in the top quarter of the
//! basis is reported as truncation-unsafe.

use nalgebra::DVector;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, ComplexVector};
use crate::Tolerances;

pub const MIN_DIM: usize = 2;

/// Default truncation for runs at the reference parameters.
pub const DEFAULT_DIM: usize = 64;

fn check_dim(n: usize) -> Result<()> {
    if n < MIN_DIM {
        return Err(Error::InvalidDimension {
            dim: n,
            min: MIN_DIM,
        });
    }
    Ok(())
}

/// Largest `|alpha|^2` a displacement may use at truncation `n`.
pub fn guard_limit(n: usize) -> f64 {
    n as f64 / 8.0
}

pub fn check_guard(alpha: C64, n: usize) -> Result<()> {
    let alpha_sq = alpha.norm_sqr();
    let limit = guard_limit(n);
    if alpha_sq > limit {
        return Err(Error::GuardBand {
            alpha_sq,
            limit,
            dim: n,
        });
    }
    Ok(())
}

/// First index of the guard band (top quarter of the basis).
pub fn guard_start(n: usize) -> usize {
    n - n / 4
}

/// `ln(k!)` for `k = 0..n`, by cumulative sums.
pub fn log_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let mut acc = 0.0;
    for k in 0..n {
        if k > 0 {
            acc += (k as f64).ln();
        }
        out.push(acc);
    }
    out
}

pub fn annihilation(n: usize) -> Result<ComplexMatrix> {
    check_dim(n)?;
    let mut a = ComplexMatrix::zeros(n, n);
    for k in 1..n {
        a[(k - 1, k)] = C64::from((k as f64).sqrt());
    }
    Ok(a)
}

pub fn creation(n: usize) -> Result<ComplexMatrix> {
    Ok(annihilation(n)?.adjoint())
}

/// `diag(0, 1, ..., N-1)`, equal to `creation * annihilation` up to the
/// rounding of `sqrt(k)^2`.
pub fn number(n: usize) -> Result<ComplexMatrix> {
    check_dim(n)?;
    Ok(ComplexMatrix::from_fn(n, n, |i, j| {
        if i == j {
            C64::from(i as f64)
        } else {
            C64::from(0.0)
        }
    }))
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

/// `D(alpha) = exp(alpha a^dagger - conj(alpha) a)`.
pub fn displacement(alpha: C64, n: usize) -> Result<ComplexMatrix> {
    check_dim(n)?;
    check_guard(alpha, n)?;
    let a = annihilation(n)?;
    let generator = a.adjoint().map(|z| z * alpha) - a.map(|z| z * alpha.conj());
    linalg::expm_general(&generator)
}

/// `cosh` and `sinh` of `scale * (a - a^dagger)`.
#[derive(Debug, Clone)]
pub struct HyperbolicOps {
    pub cosh: ComplexMatrix,
    pub sinh: ComplexMatrix,
}

/// With `E = exp(scale (a - a^dagger))`, returns `((E + E^-1)/2, (E - E^-1)/2)`.
pub fn hyperbolic_ops(scale: f64, n: usize) -> Result<HyperbolicOps> {
    check_dim(n)?;
    let a = annihilation(n)?;
    let k = (&a - a.adjoint()).scale(scale);
    let e = linalg::expm_general(&k)?;
    let e_inv = linalg::expm_general(&(-k))?;
    Ok(HyperbolicOps {
        cosh: (&e + &e_inv).scale(0.5),
        sinh: (&e - &e_inv).scale(0.5),
    })
}

/// A pure state of the truncated field mode.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    amplitudes: ComplexVector,
}

impl FieldState {
    pub fn from_amplitudes(amplitudes: ComplexVector) -> Result<Self> {
        check_dim(amplitudes.len())?;
        if !amplitudes
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
        {
            return Err(Error::NonFinite {
                context: "field amplitudes",
            });
        }
        Ok(FieldState { amplitudes })
    }

    pub fn vacuum(n: usize) -> Result<Self> {
        Self::fock(0, n)
    }

    pub fn fock(k: usize, n: usize) -> Result<Self> {
        check_dim(n)?;
        if k >= n {
            return Err(Error::IndexOutOfRange { index: k, dim: n });
        }
        let mut amplitudes = ComplexVector::zeros(n);
        amplitudes[k] = C64::from(1.0);
        Ok(FieldState { amplitudes })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &ComplexVector {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> ComplexVector {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn normalized(&self) -> Result<Self> {
        Ok(FieldState {
            amplitudes: linalg::normalize(&self.amplitudes)?,
        })
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= 1e-10
    }

    /// Population held in the top quarter of the basis.
    pub fn guard_population(&self) -> f64 {
        let start = guard_start(self.dim());
        self.amplitudes
            .rows(start, self.dim() - start)
            .norm_squared()
    }

    pub fn is_truncation_safe(&self, tol: &Tolerances) -> bool {
        self.guard_population() <= tol.guard
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

    pub fn apply(&self, op: &ComplexMatrix) -> Result<Self> {
        if op.ncols() != self.dim() || op.nrows() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: op.ncols(),
            });
        }
        Ok(FieldState {
            amplitudes: op * &self.amplitudes,
        })
    }

    /// Applies `D(alpha)` through the generator's action on the vector,
    /// never forming the dense displacement matrix.
    pub fn displaced(&self, alpha: C64) -> Result<Self> {
        check_guard(alpha, self.dim())?;
        Ok(FieldState {
            amplitudes: displace_vector(alpha, &self.amplitudes),
        })
    }
}

/// `exp(alpha a^dagger - conj(alpha) a) v` by scaled Taylor steps using
/// the bidiagonal structure of the generator.
pub fn displace_vector(alpha: C64, v: &ComplexVector) -> ComplexVector {
    let n = v.len();
    let sqrt: Vec<f64> = (0..=n).map(|k| (k as f64).sqrt()).collect();
    // ||alpha a^dag - conj(alpha) a|| <= 2 |alpha| sqrt(n); one unit per step
    let bound = 2.0 * alpha.norm() * (n as f64).sqrt();
    let steps = bound.ceil().max(1.0) as usize;
    let up = alpha / steps as f64;
    let down = -up.conj();

    let mut current: Vec<C64> = v.iter().copied().collect();
    let mut term = vec![C64::from(0.0); n];
    let mut next = vec![C64::from(0.0); n];
    for _ in 0..steps {
        term.copy_from_slice(&current);
        for k in 1..=40 {
            let inv = 1.0 / k as f64;
            let mut term_norm = 0.0;
            for j in 0..n {
                let mut out = C64::from(0.0);
                if j > 0 {
                    out += up * (sqrt[j] * term[j - 1]);
                }
                if j + 1 < n {
                    out += down * (sqrt[j + 1] * term[j + 1]);
                }
                next[j] = out * inv;
                term_norm += next[j].norm_sqr();
            }
            std::mem::swap(&mut term, &mut next);
            let mut sum_norm = 0.0;
            for (c, t) in current.iter_mut().zip(&term) {
                *c += t;
                sum_norm += c.norm_sqr();
            }
            if term_norm <= 1e-36 * sum_norm {
                break;
            }
        }
    }
    ComplexVector::from_vec(current)
}

/// `|alpha>` from its number-state expansion, renormalized on the truncated
/// basis.
pub fn coherent_state(alpha: C64, n: usize) -> Result<FieldState> {
    check_dim(n)?;
    check_guard(alpha, n)?;
    let amplitudes = if alpha.norm() == 0.0 {
        let mut v = ComplexVector::zeros(n);
        v[0] = C64::from(1.0);
        v
    } else {
        let log_fact = log_factorials(n);
        let (r, phase) = alpha.to_polar();
        let ln_r = r.ln();
        let half_r2 = 0.5 * r * r;
        DVector::from_iterator(
            n,
            (0..n).map(|k| {
                let magnitude = (-half_r2 + k as f64 * ln_r - 0.5 * log_fact[k]).exp();
                C64::from_polar(magnitude, k as f64 * phase)
            }),
        )
    };
    FieldState::from_amplitudes(linalg::normalize(&amplitudes)?)
}

/// `D(alpha)|k>`.
pub fn displaced_fock(alpha: C64, k: usize, n: usize) -> Result<FieldState> {
    let fock = FieldState::fock(k, n)?;
    fock.apply(&displacement(alpha, n)?)
}
