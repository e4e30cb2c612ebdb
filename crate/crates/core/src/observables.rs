//! Diagnostics on states: inversion, photon statistics, fidelity and
//! phase-space quasiprobabilities.

use std::f64::consts::FRAC_1_PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{self, FieldState};
use crate::joint::JointState;
use crate::linalg::{self, ComplexVector};
use crate::model::atom;

/// `<sigma_z ⊗ I>`.
pub fn atomic_inversion(state: &JointState) -> f64 {
    let excited = state.branch(atom::EXCITED).norm().powi(2);
    let ground = state.branch(atom::GROUND).norm().powi(2);
    excited - ground
}

pub fn fock_populations(field: &FieldState) -> Vec<f64> {
    field.amplitudes().iter().map(|z| z.norm_sqr()).collect()
}

pub fn mean_photon_field(field: &FieldState) -> f64 {
    fock_populations(field)
        .iter()
        .enumerate()
        .map(|(k, p)| k as f64 * p)
        .sum()
}

/// `<I ⊗ n>` on a joint state.
pub fn mean_photon(state: &JointState) -> f64 {
    mean_photon_field(&state.branch(atom::GROUND)) + mean_photon_field(&state.branch(atom::EXCITED))
}

/// `|<a|b>|^2`.
pub fn fidelity(a: &ComplexVector, b: &ComplexVector) -> Result<f64> {
    Ok(linalg::inner(a, b)?.norm_sqr())
}

/// `min_phi || a - e^{i phi} b ||`.
pub fn phase_aligned_distance(a: &ComplexVector, b: &ComplexVector) -> Result<f64> {
    let overlap = linalg::inner(b, a)?;
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        C64::from(1.0)
    };
    Ok((a - b.map(|z| z * phase)).norm())
}

/// Rectangular lattice of phase-space points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub resolution: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            re_min: -3.0,
            re_max: 3.0,
            im_min: -3.0,
            im_max: 3.0,
            resolution: 0.05,
        }
    }
}

fn axis(min: f64, max: f64, resolution: f64) -> Result<Vec<f64>> {
    if !(min.is_finite() && max.is_finite() && max >= min) {
        return Err(Error::InvalidParameter(format!(
            "grid range [{min}, {max}] is invalid"
        )));
    }
    if !(resolution.is_finite() && resolution > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "grid resolution must be > 0, got {resolution}"
        )));
    }
    let count = ((max - min) / resolution + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|k| min + k as f64 * resolution).collect())
}

impl GridSpec {
    pub fn single(alpha: C64) -> Self {
        GridSpec {
            re_min: alpha.re,
            re_max: alpha.re,
            im_min: alpha.im,
            im_max: alpha.im,
            resolution: 1.0,
        }
    }

    /// Grid points with the real part as the outer (slow) index.
    pub fn points(&self) -> Result<Vec<C64>> {
        let re = axis(self.re_min, self.re_max, self.resolution)?;
        let im = axis(self.im_min, self.im_max, self.resolution)?;
        Ok(re
            .iter()
            .flat_map(|&x| im.iter().map(move |&y| C64::new(x, y)))
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceGrid {
    pub points: Vec<C64>,
    pub values: Vec<f64>,
}

fn guarded_points(spec: &GridSpec, n: usize) -> Result<Vec<C64>> {
    let points = spec.points()?;
    let limit = fock::guard_limit(n);
    let offending: Vec<C64> = points
        .iter()
        .copied()
        .filter(|a| a.norm_sqr() > limit)
        .collect();
    if !offending.is_empty() {
        return Err(Error::GridGuard {
            points: offending.iter().map(|a| (a.re, a.im)).collect(),
            limit,
            dim: n,
        });
    }
    Ok(points)
}

/// `f(D(alpha)^dagger psi)` at every grid point, real part outermost.
///
/// Along a row the next point differs by `h = i * resolution`, and
/// `D(alpha + h)^dagger = e^{i phi} D(-h) D(alpha)^dagger`; `f` must ignore
/// global phases. Only the first point of each row is displaced from scratch.
fn scan_displaced<F>(field: &FieldState, spec: &GridSpec, points: &[C64], f: F) -> Vec<f64>
where
    F: Fn(&ComplexVector) -> f64 + Sync,
{
    let per_row = points
        .iter()
        .take_while(|a| a.re == points[0].re)
        .count()
        .max(1);
    let step = C64::new(0.0, -spec.resolution);
    points
        .par_chunks(per_row)
        .flat_map_iter(|row| {
            let mut shifted = fock::displace_vector(-row[0], field.amplitudes());
            let mut values = Vec::with_capacity(row.len());
            values.push(f(&shifted));
            for _ in 1..row.len() {
                shifted = fock::displace_vector(step, &shifted);
                values.push(f(&shifted));
            }
            values
        })
        .collect()
}

/// Displaced-parity Wigner function
/// `W(alpha) = (2/pi) <psi| D(alpha) (-1)^n D(alpha)^dagger |psi>`.
pub fn wigner(field: &FieldState, spec: &GridSpec) -> Result<PhaseSpaceGrid> {
    let points = guarded_points(spec, field.dim())?;
    let values = scan_displaced(field, spec, &points, |shifted| {
        let parity: f64 = shifted
            .iter()
            .enumerate()
            .map(|(k, z)| {
                if k % 2 == 0 {
                    z.norm_sqr()
                } else {
                    -z.norm_sqr()
                }
            })
            .sum();
        2.0 * FRAC_1_PI * parity
    });
    Ok(PhaseSpaceGrid { points, values })
}

/// Husimi function `Q(alpha) = |<alpha|psi>|^2 / pi`.
pub fn husimi_q(field: &FieldState, spec: &GridSpec) -> Result<PhaseSpaceGrid> {
    let points = guarded_points(spec, field.dim())?;
    let values = scan_displaced(field, spec, &points, |shifted| {
        shifted[0].norm_sqr() * FRAC_1_PI
    });
    Ok(PhaseSpaceGrid { points, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::coherent_state;
    use crate::joint::{atom_excited, atom_plus};
    use std::f64::consts::FRAC_2_PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn inversion_examples() {
        let n = 8;
        let vac = FieldState::vacuum(n).unwrap();
        assert_eq!(
            atomic_inversion(&JointState::product(atom_excited(), &vac)),
            1.0
        );
        let coh = coherent_state(c(0.4, 0.1), n).unwrap();
        assert!(atomic_inversion(&JointState::product(atom_plus(), &coh)).abs() < 1e-15);
    }

    #[test]
    fn inversion_ignores_field_displacement() {
        let n = 32;
        let field = FieldState::fock(1, n).unwrap();
        let atom_state = [c(0.6, 0.0), c(0.0, 0.8)];
        let s = JointState::product(atom_state, &field);
        let moved = JointState::product(atom_state, &field.displaced(c(0.3, -0.2)).unwrap());
        assert!((atomic_inversion(&s) - atomic_inversion(&moved)).abs() < 1e-12);
    }

    #[test]
    fn photon_statistics() {
        let n = 64;
        assert_eq!(mean_photon_field(&FieldState::vacuum(n).unwrap()), 0.0);

        let alpha = c(1.2, -0.5);
        let coh = coherent_state(alpha, n).unwrap();
        assert!((mean_photon_field(&coh) - alpha.norm_sqr()).abs() < 1e-8);
        let total: f64 = fock_populations(&coh).iter().sum();
        assert!((total - 1.0).abs() < 1e-10);

        // <n> = |alpha|^2 + k for D(alpha)|k>
        let delta = 0.05;
        let d1 = fock::displaced_fock(c(delta, 0.0), 1, n).unwrap();
        assert!((mean_photon_field(&d1) - (delta * delta + 1.0)).abs() < 1e-10);
    }

    #[test]
    fn fidelity_examples() {
        let n = 32;
        let v = FieldState::vacuum(n).unwrap();
        let one = FieldState::fock(1, n).unwrap();
        assert!((fidelity(v.amplitudes(), v.amplitudes()).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(fidelity(v.amplitudes(), one.amplitudes()).unwrap(), 0.0);

        let alpha = c(0.7, 0.2);
        let coh = coherent_state(alpha, n).unwrap();
        let f = fidelity(v.amplitudes(), coh.amplitudes()).unwrap();
        assert!((f - (-alpha.norm_sqr()).exp()).abs() < 1e-12);
        let g = fidelity(coh.amplitudes(), v.amplitudes()).unwrap();
        assert_eq!(f, g);

        assert!(fidelity(v.amplitudes(), &ComplexVector::zeros(3)).is_err());
    }

    #[test]
    fn wigner_and_husimi_reference_values() {
        let n = 32;
        let origin = GridSpec::single(c(0.0, 0.0));
        let w = wigner(&FieldState::vacuum(n).unwrap(), &origin).unwrap();
        assert!((w.values[0] - FRAC_2_PI).abs() < 1e-14);
        let w = wigner(&FieldState::fock(1, n).unwrap(), &origin).unwrap();
        assert!((w.values[0] + FRAC_2_PI).abs() < 1e-14);

        let beta = c(0.8, -0.3);
        let coh = coherent_state(beta, n).unwrap();
        let q = husimi_q(&coh, &GridSpec::single(beta)).unwrap();
        assert!((q.values[0] - FRAC_1_PI).abs() < 1e-12);
    }

    #[test]
    fn quasiprobability_bounds() {
        let n = 64;
        let spec = GridSpec {
            re_min: -2.0,
            re_max: 2.0,
            im_min: -2.0,
            im_max: 2.0,
            resolution: 0.25,
        };
        let psi = fock::displaced_fock(c(0.5, 0.5), 2, n).unwrap();
        let w = wigner(&psi, &spec).unwrap();
        assert_eq!(w.points.len(), 17 * 17);
        assert!(w.values.iter().all(|v| v.abs() <= FRAC_2_PI + 1e-9));
        let q = husimi_q(&psi, &spec).unwrap();
        assert!(q
            .values
            .iter()
            .all(|&v| (0.0..=FRAC_1_PI + 1e-12).contains(&v)));
    }

    #[test]
    fn grid_guard_reports_offending_points() {
        let n = 16;
        let spec = GridSpec {
            re_min: 0.0,
            re_max: 2.0,
            im_min: 0.0,
            im_max: 0.0,
            resolution: 0.5,
        };
        match wigner(&FieldState::vacuum(n).unwrap(), &spec) {
            Err(Error::GridGuard { points, .. }) => {
                assert_eq!(points, vec![(1.5, 0.0), (2.0, 0.0)])
            }
            other => panic!("expected guard error, got {other:?}"),
        }
    }

    #[test]
    fn grid_order_is_real_major() {
        let spec = GridSpec {
            re_min: 0.0,
            re_max: 1.0,
            im_min: 0.0,
            im_max: 0.5,
            resolution: 0.5,
        };
        let pts = spec.points().unwrap();
        assert_eq!(
            pts,
            vec![
                c(0.0, 0.0),
                c(0.0, 0.5),
                c(0.5, 0.0),
                c(0.5, 0.5),
                c(1.0, 0.0),
                c(1.0, 0.5)
            ]
        );
    }

    #[test]
    fn qubit_wigner_is_translated_by_the_displacement() {
        use crate::engineering::{QubitPipeline, DISPLACEMENT_SIGN};
        use crate::model::ModelParams;

        let n = 64;
        let p = ModelParams::new(1.0, 1.0, 0.1).unwrap();
        let pipeline = QubitPipeline::new(&p, n).unwrap();
        let field = pipeline.field_after_measurement(9.0).unwrap();
        let readout = pipeline.readout(&field).unwrap();
        let qubit = FieldState::from_amplitudes(readout.amplitudes.as_vector(n)).unwrap();

        let shift = DISPLACEMENT_SIGN * p.delta();
        let spec = GridSpec {
            re_min: -1.0,
            re_max: 1.0,
            im_min: -1.0,
            im_max: 1.0,
            resolution: 0.25,
        };
        let moved = GridSpec {
            re_min: spec.re_min - shift,
            re_max: spec.re_max - shift,
            ..spec
        };
        let w_field = wigner(&field, &spec).unwrap();
        let w_qubit = wigner(&qubit, &moved).unwrap();
        assert_eq!(w_field.values.len(), w_qubit.values.len());
        for (a, b) in w_field.values.iter().zip(&w_qubit.values) {
            assert!((a - b).abs() <= 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn row_scan_matches_pointwise_displacement() {
        let n = 64;
        let psi = fock::displaced_fock(c(0.3, -0.2), 1, n).unwrap();
        let spec = GridSpec {
            re_min: -1.5,
            re_max: 1.5,
            im_min: -2.0,
            im_max: 2.0,
            resolution: 0.1,
        };
        let w = wigner(&psi, &spec).unwrap();
        let q = husimi_q(&psi, &spec).unwrap();
        for (k, &alpha) in w.points.iter().enumerate() {
            let direct = fock::displace_vector(-alpha, psi.amplitudes());
            let parity: f64 = direct
                .iter()
                .enumerate()
                .map(|(j, z)| {
                    if j % 2 == 0 {
                        z.norm_sqr()
                    } else {
                        -z.norm_sqr()
                    }
                })
                .sum();
            assert!(
                (w.values[k] - 2.0 * FRAC_1_PI * parity).abs() < 1e-10,
                "W at {alpha}"
            );
            assert!(
                (q.values[k] - direct[0].norm_sqr() * FRAC_1_PI).abs() < 1e-10,
                "Q at {alpha}"
            );
        }
    }
}
