//! Scalar abstraction and the numerical tolerance policy.

use num_traits::{FromPrimitive, NumAssign, ToPrimitive};

/// Real floating-point scalar underlying every matrix, state, and rate.
///
/// `f64` is the working precision (all documented tolerances assume it);
/// `f32` is available for rough sweeps and carries proportionally looser
/// default tolerances.
pub trait Scalar:
    nalgebra::RealField
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + std::iter::Sum<Self>
    + Copy
    + Default
    + Send
    + Sync
{
    /// Validation tolerances appropriate for this precision.
    fn default_tolerances() -> Tolerances<Self>;

    /// Lossy conversion from `f64`, used when resolving text configs.
    fn from_config(v: f64) -> Self {
        Self::from_f64(v).expect("finite literal")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

impl Scalar for f64 {
    fn default_tolerances() -> Tolerances<f64> {
        Tolerances {
            herm: 1e-9,
            trace: 1e-9,
            psd: 1e-9,
            eig: 1e-8,
            cp: 1e-9,
            row_sum: 1e-12,
            prob_sum: 1e-10,
            prob_gate: 1e-8,
            p_floor: 1e-12,
        }
    }
}

impl Scalar for f32 {
    fn default_tolerances() -> Tolerances<f32> {
        Tolerances {
            herm: 1e-4,
            trace: 1e-4,
            psd: 1e-4,
            eig: 1e-3,
            cp: 1e-4,
            row_sum: 1e-5,
            prob_sum: 1e-4,
            prob_gate: 1e-3,
            p_floor: 1e-6,
        }
    }
}

/// Numerical tolerances used by every validator in the crate.
///
/// One value set flows through a whole scenario so that a single
/// `--tol-scale` override rescales all checks coherently.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances<R> {
    /// Max allowed |m[i,j] − conj(m[j,i])| for Hermitian inputs (τ_herm).
    pub herm: R,
    /// Max allowed |tr(ρ) − 1| (τ_tr).
    pub trace: R,
    /// Most negative eigenvalue still treated as zero dust (τ_psd).
    pub psd: R,
    /// Max allowed eigendecomposition reconstruction residual (τ_eig).
    pub eig: R,
    /// Max allowed deviation of Kraus sums from the identity (τ_cp).
    pub cp: R,
    /// Max allowed deviation of a stochastic-matrix row sum from 1.
    pub row_sum: R,
    /// Max allowed deviation of ensemble probability mass from 1
    /// after normalization.
    pub prob_sum: R,
    /// Instrument applications whose total branch weight strays from 1
    /// beyond this gate are rejected outright.
    pub prob_gate: R,
    /// Branches and labels below this probability are pruned and the
    /// remaining mass renormalized.
    pub p_floor: R,
}

impl<R: Scalar> Default for Tolerances<R> {
    fn default() -> Self {
        R::default_tolerances()
    }
}

impl<R: Scalar> Tolerances<R> {
    /// Multiply every tolerance by `factor` (CLI `--tol-scale`).
    pub fn scaled(&self, factor: R) -> Self {
        Tolerances {
            herm: self.herm * factor,
            trace: self.trace * factor,
            psd: self.psd * factor,
            eig: self.eig * factor,
            cp: self.cp * factor,
            row_sum: self.row_sum * factor,
            prob_sum: self.prob_sum * factor,
            prob_gate: self.prob_gate * factor,
            p_floor: self.p_floor * factor,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaling_multiplies_every_field() {
        let t = Tolerances::<f64>::default().scaled(10.0);
        assert_eq!(t.herm, 1e-8);
        assert_eq!(t.eig, 1e-7);
        assert_eq!(t.p_floor, 1e-11);
    }

    #[test]
    fn f32_defaults_are_looser() {
        let t32 = Tolerances::<f32>::default();
        let t64 = Tolerances::<f64>::default();
        assert!(f64::from(t32.herm) > t64.herm);
    }
}
