//! Hermitian eigendecomposition and the spectrum clipping policy.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{Scalar, Tolerances};

use super::matrix::ComplexMatrix;

/// Eigendecomposition of a Hermitian matrix: `V diag(λ) V†` reconstructs
/// the input, eigenvalues sorted descending, eigenvector columns aligned.
#[derive(Debug, Clone)]
pub struct HermitianSpectrum<R: Scalar> {
    pub eigenvalues: Vec<R>,
    pub eigenvectors: ComplexMatrix<R>,
}

impl<R: Scalar> HermitianSpectrum<R> {
    /// Column `k` of the eigenvector matrix.
    pub fn eigenvector(&self, k: usize) -> Vec<Complex<R>> {
        (0..self.eigenvectors.rows())
            .map(|i| self.eigenvectors[(i, k)])
            .collect()
    }

    /// `V diag(λ) V†`.
    pub fn reconstruct(&self) -> ComplexMatrix<R> {
        let n = self.eigenvalues.len();
        ComplexMatrix::from_fn(n, n, |i, j| {
            let mut acc = Complex::new(R::zero(), R::zero());
            for k in 0..n {
                acc += self.eigenvectors[(i, k)]
                    * Complex::new(self.eigenvalues[k], R::zero())
                    * self.eigenvectors[(j, k)].conj();
            }
            acc
        })
    }
}

/// Eigendecomposition of `m`, which must be Hermitian within `tol.herm`.
pub fn hermitian_eigensystem<R: Scalar>(
    m: &ComplexMatrix<R>,
    tol: &Tolerances<R>,
) -> Result<HermitianSpectrum<R>> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "eigendecomposition needs a square matrix, got {}×{}",
            m.rows(),
            m.cols()
        )));
    }
    let dev = m.hermiticity_deviation();
    if dev > tol.herm {
        return Err(Error::Numeric(format!(
            "matrix is not Hermitian: max asymmetry {:.3e} exceeds {:.3e}",
            dev.to_f64_lossy(),
            tol.herm.to_f64_lossy()
        )));
    }
    let n = m.rows();
    // symmetrize the dust below τ_herm, then hand off to nalgebra
    let na = DMatrix::<Complex<R>>::from_fn(n, n, |i, j| {
        (m[(i, j)] + m[(j, i)].conj()).scale(R::from_config(0.5))
    });
    let eig = na.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("finite eigenvalues")
    });
    let eigenvalues: Vec<R> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(HermitianSpectrum { eigenvalues, eigenvectors })
}

/// Verdict returned by [`validate_density`].
#[derive(Debug, Clone)]
pub struct DensityVerdict<R> {
    pub valid: bool,
    pub hermiticity_deviation: R,
    pub trace_deviation: R,
    pub min_eigenvalue: R,
}

/// Hermitian within τ_herm, unit trace within τ_tr, and no eigenvalue
/// below −τ_psd.
pub fn validate_density<R: Scalar>(m: &ComplexMatrix<R>, tol: &Tolerances<R>) -> DensityVerdict<R> {
    let herm = m.hermiticity_deviation();
    let trace_dev = {
        let t = m.trace();
        ((t.re - R::one()) * (t.re - R::one()) + t.im * t.im).sqrt()
    };
    if herm > tol.herm || trace_dev > tol.trace {
        return DensityVerdict {
            valid: false,
            hermiticity_deviation: herm,
            trace_deviation: trace_dev,
            min_eigenvalue: R::zero(),
        };
    }
    // hermiticity already passed, so the eigensystem cannot fail
    let spectrum = hermitian_eigensystem(m, tol).expect("validated Hermitian");
    let min = *spectrum
        .eigenvalues
        .last()
        .expect("non-empty spectrum");
    DensityVerdict {
        valid: min >= -tol.psd,
        hermiticity_deviation: herm,
        trace_deviation: trace_dev,
        min_eigenvalue: min,
    }
}

/// Clip an eigenvalue list to `[0, 1]` and renormalize to unit mass.
///
/// Negative dust (within −τ_psd) becomes 0 before entropies are taken;
/// returns the probabilities and the total mass moved by clipping.
pub fn clip_spectrum<R: Scalar>(eigenvalues: &[R], tol: &Tolerances<R>) -> (Vec<R>, R) {
    let mut clipped_mass = R::zero();
    let mut probs: Vec<R> = eigenvalues
        .iter()
        .map(|&lambda| {
            let clipped = if lambda < R::zero() {
                R::zero()
            } else if lambda > R::one() {
                R::one()
            } else {
                lambda
            };
            clipped_mass += (clipped - lambda).abs();
            clipped
        })
        .collect();
    let total: R = probs.iter().copied().sum();
    if total > tol.p_floor {
        for p in &mut probs {
            *p /= total;
        }
    }
    (probs, clipped_mass)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;

    fn tol() -> Tolerances<f64> {
        Tolerances::default()
    }

    #[test]
    fn diagonal_matrix_is_its_own_spectrum() {
        let m = ComplexMatrix::from_diag(&[0.7, 0.3]);
        let s = hermitian_eigensystem(&m, &tol()).unwrap();
        assert!((s.eigenvalues[0] - 0.7).abs() < 1e-14);
        assert!((s.eigenvalues[1] - 0.3).abs() < 1e-14);
    }

    #[test]
    fn maximally_mixed_has_flat_spectrum() {
        let d = 4;
        let m = ComplexMatrix::identity(d).scaled_real(1.0 / d as f64);
        let s = hermitian_eigensystem(&m, &tol()).unwrap();
        for lambda in s.eigenvalues {
            assert!((lambda - 0.25).abs() < 1e-14);
        }
    }

    #[test]
    fn non_hermitian_reports_asymmetry() {
        let mut m = ComplexMatrix::<f64>::zeros(2, 2);
        m[(0, 1)] = Complex::new(1.0, 0.0);
        let err = hermitian_eigensystem(&m, &tol()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("asymmetry"), "got: {msg}");
    }

    #[test]
    fn negative_eigenvalue_fails_density_validation() {
        let m = ComplexMatrix::from_diag(&[1.2, -0.2]);
        let v = validate_density(&m, &tol());
        assert!(!v.valid);
        assert!(v.min_eigenvalue < -1e-3);
    }

    #[test]
    fn clipping_removes_negative_dust_and_renormalizes() {
        let (probs, mass) = clip_spectrum(&[0.6, 0.4000000001, -1e-11], &tol());
        assert_eq!(probs.len(), 3);
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(probs[2], 0.0);
        assert!(mass > 0.0 && mass < 1e-9);
    }
}
