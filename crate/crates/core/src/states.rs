//! Density matrices, pure states, purifications, and the canonical state
//! families used as resources (Bell and Werner pairs, seeded random states).
//!
//! RNG state always enters explicitly as a seed; there is no global RNG.

use num_complex::Complex;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::{Scalar, Tolerances};
use crate::tensorspace::{
    hermitian_eigensystem, partial_trace, permute_registers, validate_density, ComplexMatrix,
    RegisterLayout,
};

/// Positive unit-trace operator tied to a register layout; the universal
/// state carrier of the crate.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<R: Scalar> {
    layout: RegisterLayout,
    matrix: ComplexMatrix<R>,
}

impl<R: Scalar> DensityMatrix<R> {
    /// Validated constructor with the default tolerance set.
    pub fn new(layout: RegisterLayout, matrix: ComplexMatrix<R>) -> Result<Self> {
        Self::with_tolerances(layout, matrix, &Tolerances::default())
    }

    pub fn with_tolerances(
        layout: RegisterLayout,
        matrix: ComplexMatrix<R>,
        tol: &Tolerances<R>,
    ) -> Result<Self> {
        if matrix.rows() != layout.total_dim() || !matrix.is_square() {
            return Err(Error::Dimension(format!(
                "state matrix is {}×{} but the layout has total dimension {}",
                matrix.rows(),
                matrix.cols(),
                layout.total_dim()
            )));
        }
        let verdict = validate_density(&matrix, tol);
        if !verdict.valid {
            return Err(Error::InvalidState(format!(
                "density validation failed: hermiticity dev {:.3e}, trace dev {:.3e}, min eigenvalue {:.3e}",
                verdict.hermiticity_deviation.to_f64_lossy(),
                verdict.trace_deviation.to_f64_lossy(),
                verdict.min_eigenvalue.to_f64_lossy()
            )));
        }
        Ok(DensityMatrix { layout, matrix })
    }

    /// Wrap without validation; for operator outputs already known valid
    /// (normalized branch states, partial traces of valid states).
    pub(crate) fn trusted(layout: RegisterLayout, matrix: ComplexMatrix<R>) -> Self {
        debug_assert_eq!(layout.total_dim(), matrix.rows());
        DensityMatrix { layout, matrix }
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &ComplexMatrix<R> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.layout.total_dim()
    }

    /// Partial trace down to `keep`, preserving original register order.
    pub fn reduce(&self, keep: &[&str]) -> Result<DensityMatrix<R>> {
        let matrix = partial_trace(&self.matrix, &self.layout, keep)?;
        Ok(DensityMatrix::trusted(self.layout.subset(keep)?, matrix))
    }

    pub fn permuted(&self, order: &[&str]) -> Result<DensityMatrix<R>> {
        let matrix = permute_registers(&self.matrix, &self.layout, order)?;
        Ok(DensityMatrix::trusted(self.layout.permuted(order)?, matrix))
    }

    /// Same matrix, new register names (positional).
    pub fn renamed<S: Into<String>>(&self, names: Vec<S>) -> Result<DensityMatrix<R>> {
        Ok(DensityMatrix {
            layout: self.layout.renamed(names)?,
            matrix: self.matrix.clone(),
        })
    }

    /// Tensor product `self ⊗ other`, registers of `self` first.
    pub fn tensor(&self, other: &DensityMatrix<R>, d_max: usize) -> Result<DensityMatrix<R>> {
        let matrix = crate::tensorspace::tensor_product(&self.matrix, &other.matrix, d_max)?;
        Ok(DensityMatrix::trusted(self.layout.concat(&other.layout)?, matrix))
    }

    /// tr(ρ²).
    pub fn purity(&self) -> R {
        (&self.matrix * &self.matrix).trace().re
    }
}

/// Normalized state vector over a register layout.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState<R: Scalar> {
    layout: RegisterLayout,
    amplitudes: Vec<Complex<R>>,
}

impl<R: Scalar> PureState<R> {
    pub fn new(layout: RegisterLayout, amplitudes: Vec<Complex<R>>) -> Result<Self> {
        Self::with_tolerances(layout, amplitudes, &Tolerances::default())
    }

    pub fn with_tolerances(
        layout: RegisterLayout,
        amplitudes: Vec<Complex<R>>,
        tol: &Tolerances<R>,
    ) -> Result<Self> {
        if amplitudes.len() != layout.total_dim() {
            return Err(Error::Dimension(format!(
                "amplitude vector has length {} but the layout has total dimension {}",
                amplitudes.len(),
                layout.total_dim()
            )));
        }
        let norm: R = amplitudes.iter().map(|c| c.norm_sqr()).sum::<R>().sqrt();
        if (norm - R::one()).abs() > tol.trace {
            return Err(Error::InvalidState(format!(
                "state vector norm {} is not 1",
                norm.to_f64_lossy()
            )));
        }
        Ok(PureState { layout, amplitudes })
    }

    /// Computational basis state |k⟩ on the layout.
    pub fn basis_state(layout: RegisterLayout, k: usize) -> Result<Self> {
        let d = layout.total_dim();
        if k >= d {
            return Err(Error::Dimension(format!("basis index {k} out of range for dim {d}")));
        }
        let mut amplitudes = vec![Complex::new(R::zero(), R::zero()); d];
        amplitudes[k] = Complex::new(R::one(), R::zero());
        Ok(PureState { layout, amplitudes })
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[Complex<R>] {
        &self.amplitudes
    }

    /// |ψ⟩⟨ψ| as a density matrix.
    pub fn density(&self) -> DensityMatrix<R> {
        DensityMatrix::trusted(self.layout.clone(), ComplexMatrix::outer(&self.amplitudes))
    }

    pub fn renamed<S: Into<String>>(&self, names: Vec<S>) -> Result<PureState<R>> {
        Ok(PureState {
            layout: self.layout.renamed(names)?,
            amplitudes: self.amplitudes.clone(),
        })
    }

    /// ⟨self|other⟩.
    pub fn overlap(&self, other: &PureState<R>) -> Complex<R> {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * *b)
            .fold(Complex::new(R::zero(), R::zero()), |acc, c| acc + c)
    }
}

/// The four two-qubit Bell states in the order Φ⁺, Φ⁻, Ψ⁺, Ψ⁻.
pub fn bell_state<R: Scalar>(kind: usize) -> Result<PureState<R>> {
    if kind > 3 {
        return Err(Error::Config(format!("bell kind {kind} out of range 0..=3")));
    }
    let layout = RegisterLayout::new(vec![("q0", 2), ("q1", 2)])?;
    let h = R::from_config(std::f64::consts::FRAC_1_SQRT_2);
    let z = R::zero();
    let amp = |re: R| Complex::new(re, z);
    let amplitudes = match kind {
        0 => vec![amp(h), amp(z), amp(z), amp(h)],   // (|00⟩+|11⟩)/√2
        1 => vec![amp(h), amp(z), amp(z), amp(-h)],  // (|00⟩−|11⟩)/√2
        2 => vec![amp(z), amp(h), amp(h), amp(z)],   // (|01⟩+|10⟩)/√2
        _ => vec![amp(z), amp(h), amp(-h), amp(z)],  // (|01⟩−|10⟩)/√2
    };
    PureState::new(layout, amplitudes)
}

/// Werner family p·|Φ⁺⟩⟨Φ⁺| + (1−p)·I/4 on two qubits.
pub fn werner_state<R: Scalar>(p: R) -> Result<DensityMatrix<R>> {
    if p < R::zero() || p > R::one() {
        return Err(Error::Config(format!(
            "werner parameter {} out of [0,1]",
            p.to_f64_lossy()
        )));
    }
    let bell = bell_state::<R>(0)?.density();
    let quarter = (R::one() - p) / R::from_config(4.0);
    let matrix = &bell.matrix().scaled_real(p) + &ComplexMatrix::identity(4).scaled_real(quarter);
    Ok(DensityMatrix::trusted(bell.layout().clone(), matrix))
}

/// I/d on the given layout.
pub fn maximally_mixed<R: Scalar>(layout: RegisterLayout) -> DensityMatrix<R> {
    let d = layout.total_dim();
    let matrix = ComplexMatrix::identity(d).scaled_real(R::one() / R::from_config(d as f64));
    DensityMatrix::trusted(layout, matrix)
}

/// Haar-like random pure state: complex Gaussian amplitudes, normalized.
pub fn random_pure<R: Scalar>(layout: RegisterLayout, seed: u64) -> PureState<R> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_pure_with(layout, &mut rng)
}

pub(crate) fn random_pure_with<R: Scalar>(
    layout: RegisterLayout,
    rng: &mut ChaCha8Rng,
) -> PureState<R> {
    let d = layout.total_dim();
    let mut amplitudes: Vec<Complex<R>> = (0..d)
        .map(|_| Complex::new(R::from_config(gauss(rng)), R::from_config(gauss(rng))))
        .collect();
    let norm: R = amplitudes.iter().map(|c| c.norm_sqr()).sum::<R>().sqrt();
    for a in &mut amplitudes {
        *a = a.unscale(norm);
    }
    PureState { layout, amplitudes }
}

/// Standard normal via Box–Muller; sampled in f64 so the stream is
/// identical for every scalar type.
pub(crate) fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = loop {
        let u = rng.gen::<f64>();
        if u > 0.0 {
            break u;
        }
    };
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Seeded random state of the requested rank: the reduction of a random
/// pure state on layout ⊗ rank-dimensional ancilla (induced measure).
pub fn random_density<R: Scalar>(
    layout: RegisterLayout,
    rank: usize,
    seed: u64,
) -> Result<DensityMatrix<R>> {
    let d = layout.total_dim();
    if rank == 0 || rank > d {
        return Err(Error::Config(format!("rank {rank} out of range 1..={d}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_density_with(layout, rank, &mut rng)
}

pub(crate) fn random_density_with<R: Scalar>(
    layout: RegisterLayout,
    rank: usize,
    rng: &mut ChaCha8Rng,
) -> Result<DensityMatrix<R>> {
    // ancilla name chosen to never collide with caller layouts
    let joint = layout.with_appended("\u{1f3b2}anc", rank)?;
    let pure = random_pure_with::<R>(joint, rng);
    let names = layout.names();
    let matrix = partial_trace(&pure.density().matrix, pure.layout(), &names)?;
    Ok(DensityMatrix::trusted(layout, matrix))
}

/// Purify `rho` with an ancilla register appended at the end.
///
/// The ancilla dimension is the support size of `rho` (so pure states get
/// a trivial one-dimensional ancilla); when the rank decision sits within
/// 10·τ_psd of the threshold the full layout dimension is used instead.
pub fn purify<R: Scalar>(rho: &DensityMatrix<R>, ancilla_name: &str) -> Result<PureState<R>> {
    purify_with_tolerances(rho, ancilla_name, &Tolerances::default())
}

pub fn purify_with_tolerances<R: Scalar>(
    rho: &DensityMatrix<R>,
    ancilla_name: &str,
    tol: &Tolerances<R>,
) -> Result<PureState<R>> {
    let spectrum = hermitian_eigensystem(rho.matrix(), tol)?;
    let d = rho.dim();
    let support = spectrum.eigenvalues.iter().filter(|&&l| l > tol.psd).count();
    let boundary = R::from_config(10.0) * tol.psd;
    let ambiguous = spectrum
        .eigenvalues
        .iter()
        .any(|&l| l > tol.psd && l <= boundary);
    let anc_dim = if ambiguous { d } else { support.max(1) };

    let layout = rho.layout().with_appended(ancilla_name, anc_dim)?;
    let z = Complex::new(R::zero(), R::zero());
    let mut amplitudes = vec![z; d * anc_dim];
    for a in 0..anc_dim {
        let lambda = spectrum.eigenvalues[a];
        if lambda <= R::zero() {
            continue;
        }
        let w = Complex::new(lambda.sqrt(), R::zero());
        for s in 0..d {
            amplitudes[s * anc_dim + a] = w * spectrum.eigenvectors[(s, a)];
        }
    }
    // eigenvalue dust can leave the norm a hair off 1
    let norm: R = amplitudes.iter().map(|c| c.norm_sqr()).sum::<R>().sqrt();
    for a in &mut amplitudes {
        *a = a.unscale(norm);
    }
    PureState::with_tolerances(layout, amplitudes, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensorspace::DEFAULT_D_MAX;

    #[test]
    fn bell_zero_amplitudes() {
        let phi = bell_state::<f64>(0).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((phi.amplitudes()[0].re - h).abs() < 1e-15);
        assert_eq!(phi.amplitudes()[1].re, 0.0);
        assert_eq!(phi.amplitudes()[2].re, 0.0);
        assert!((phi.amplitudes()[3].re - h).abs() < 1e-15);
    }

    #[test]
    fn bell_reductions_are_maximally_mixed() {
        for kind in 0..4 {
            let rho = bell_state::<f64>(kind).unwrap().density();
            for side in ["q0", "q1"] {
                let red = rho.reduce(&[side]).unwrap();
                let target = ComplexMatrix::identity(2).scaled_real(0.5);
                assert!(red.matrix().max_abs_diff(&target) < 1e-15);
            }
        }
    }

    #[test]
    fn bell_states_are_orthonormal() {
        let states: Vec<_> = (0..4).map(|k| bell_state::<f64>(k).unwrap()).collect();
        for i in 0..4 {
            for j in 0..4 {
                let overlap = states[i].overlap(&states[j]).norm_sqr();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((overlap - expected).abs() < 1e-14, "⟨{i}|{j}⟩");
            }
        }
    }

    #[test]
    fn bell_kind_out_of_range() {
        assert!(bell_state::<f64>(4).is_err());
    }

    #[test]
    fn werner_endpoints() {
        let w1 = werner_state::<f64>(1.0).unwrap();
        let bell = bell_state::<f64>(0).unwrap().density();
        assert!(w1.matrix().max_abs_diff(bell.matrix()) < 1e-15);

        let w0 = werner_state::<f64>(0.0).unwrap();
        let mixed = ComplexMatrix::identity(4).scaled_real(0.25);
        assert!(w0.matrix().max_abs_diff(&mixed) < 1e-15);

        assert!(werner_state::<f64>(1.5).is_err());
    }

    #[test]
    fn werner_spectrum_matches_closed_form() {
        let tol = Tolerances::default();
        for k in 0..=4 {
            let p = k as f64 / 4.0;
            let w = werner_state::<f64>(p).unwrap();
            let eig = hermitian_eigensystem(w.matrix(), &tol).unwrap().eigenvalues;
            let top = (1.0 + 3.0 * p) / 4.0;
            let rest = (1.0 - p) / 4.0;
            assert!((eig[0] - top).abs() < 1e-12, "p={p}");
            for lambda in &eig[1..] {
                assert!((lambda - rest).abs() < 1e-12, "p={p}");
            }
        }
    }

    #[test]
    fn maximally_mixed_is_flat() {
        let l2 = RegisterLayout::single("A", 2).unwrap();
        let m = maximally_mixed::<f64>(l2);
        assert!(m.matrix().max_abs_diff(&ComplexMatrix::from_diag(&[0.5, 0.5])) == 0.0);
        let l4 = RegisterLayout::new(vec![("A", 2), ("B", 2)]).unwrap();
        let m4 = maximally_mixed::<f64>(l4);
        assert!((m4.matrix()[(0, 0)].re - 0.25).abs() < 1e-15);
    }

    #[test]
    fn rank_one_random_state_is_pure() {
        let layout = RegisterLayout::new(vec![("A", 2), ("B", 2)]).unwrap();
        let rho = random_density::<f64>(layout, 1, 5).unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn full_rank_random_state_has_full_support() {
        let tol = Tolerances::<f64>::default();
        let layout = RegisterLayout::new(vec![("A", 2), ("B", 2)]).unwrap();
        let rho = random_density::<f64>(layout, 4, 6).unwrap();
        let eig = hermitian_eigensystem(rho.matrix(), &tol).unwrap().eigenvalues;
        assert_eq!(eig.iter().filter(|&&l| l > tol.psd).count(), 4);
    }

    #[test]
    fn same_seed_reproduces_bit_identical_states() {
        let layout = RegisterLayout::new(vec![("A", 2), ("B", 3)]).unwrap();
        let a = random_density::<f64>(layout.clone(), 3, 42).unwrap();
        let b = random_density::<f64>(layout, 3, 42).unwrap();
        assert_eq!(a.matrix().data(), b.matrix().data());
    }

    #[test]
    fn rank_out_of_range_is_rejected() {
        let layout = RegisterLayout::single("A", 2).unwrap();
        assert!(random_density::<f64>(layout.clone(), 0, 1).is_err());
        assert!(random_density::<f64>(layout, 3, 1).is_err());
    }

    #[test]
    fn purifying_a_pure_state_gets_a_trivial_ancilla() {
        let rho = bell_state::<f64>(2).unwrap().density();
        let phi = purify(&rho, "anc").unwrap();
        assert_eq!(phi.layout().dim_of("anc").unwrap(), 1);
        let back = phi.density().reduce(&["q0", "q1"]).unwrap();
        assert!(back.matrix().max_abs_diff(rho.matrix()) < 1e-10);
    }

    #[test]
    fn purifying_maximally_mixed_qubit_reduces_to_it() {
        let rho = maximally_mixed::<f64>(RegisterLayout::single("A", 2).unwrap());
        let phi = purify(&rho, "anc").unwrap();
        assert_eq!(phi.layout().dim_of("anc").unwrap(), 2);
        let sys = phi.density().reduce(&["A"]).unwrap();
        assert!(sys.matrix().max_abs_diff(rho.matrix()) < 1e-12);
        let anc = phi.density().reduce(&["anc"]).unwrap();
        assert!(anc.matrix().max_abs_diff(rho.matrix()) < 1e-12);
    }

    #[test]
    fn purify_round_trip_on_random_rank_3() {
        let layout = RegisterLayout::new(vec![("A", 2), ("B", 2)]).unwrap();
        let rho = random_density::<f64>(layout, 3, 77).unwrap();
        let phi = purify(&rho, "anc").unwrap();
        let back = phi.density().reduce(&["A", "B"]).unwrap();
        assert!(back.matrix().max_abs_diff(rho.matrix()) < 1e-8);
    }

    #[test]
    fn purify_round_trip_sweep() {
        // 100 seeded random states, dims ≤ 8
        let mut checked = 0;
        for trial in 0..100u64 {
            let d0 = 2 + (trial % 2) as usize;
            let d1 = 2 + (trial % 3) as usize;
            let layout = RegisterLayout::new(vec![("A", d0), ("B", d1)]).unwrap();
            let rank = 1 + (trial as usize % (d0 * d1));
            let rho = random_density::<f64>(layout, rank, 1000 + trial).unwrap();
            let phi = purify(&rho, "anc").unwrap();
            let back = phi.density().reduce(&["A", "B"]).unwrap();
            assert!(
                back.matrix().max_abs_diff(rho.matrix()) < 1e-8,
                "trial {trial}"
            );
            checked += 1;
        }
        assert_eq!(checked, 100);
    }

    #[test]
    fn tensor_respects_d_max() {
        let a = maximally_mixed::<f64>(RegisterLayout::new(vec![("A", 16)]).unwrap());
        let b = maximally_mixed::<f64>(RegisterLayout::new(vec![("B", 32)]).unwrap());
        assert!(a.tensor(&b, 256).is_err());
        assert!(a.tensor(&b, DEFAULT_D_MAX * 2).is_ok());
    }

    #[test]
    fn f32_states_work_with_loose_tolerances() {
        let rho = werner_state::<f32>(0.5).unwrap();
        assert!((rho.matrix().trace().re - 1.0).abs() < 1e-4);
        let phi = purify(&rho, "anc").unwrap();
        let back = phi.density().reduce(&["q0", "q1"]).unwrap();
        assert!(back.matrix().max_abs_diff(rho.matrix()) < 1e-3);
    }
}
