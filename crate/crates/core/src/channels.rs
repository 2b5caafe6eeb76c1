//! Completely positive maps, quantum instruments (the relay's
//! measurement), rank-one POVMs (Alice's measurement), and classical
//! cheating channels p(l′|l).
//!
//! An instrument is a finite family of CP maps {T_l}, one per classical
//! outcome, whose Kraus sums add up to the identity: applying it to a
//! state yields the labeled ensemble {(l, p(l), ρ(l))} of conditional
//! states. Cheating rewrites the labels through a stochastic matrix,
//! mixing the member states by Bayes rule.

use num_complex::Complex;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::{Scalar, Tolerances};
use crate::states::DensityMatrix;
use crate::tensorspace::{
    hermitian_eigensystem, partial_trace, permute_registers, ComplexMatrix, RegisterLayout,
};

/// Completely positive, trace-non-increasing map in Kraus form.
/// Every operator is out_dim × in_dim.
#[derive(Debug, Clone)]
pub struct KrausMap<R: Scalar> {
    input: RegisterLayout,
    output: RegisterLayout,
    ops: Vec<ComplexMatrix<R>>,
}

/// Validation outcome for a Kraus map or a whole instrument.
#[derive(Debug, Clone)]
pub struct KrausVerdict<R> {
    /// Max-abs deviation of Σ K†K from the identity.
    pub identity_deviation: R,
    /// True when Σ K†K = I within τ_cp.
    pub trace_preserving: bool,
    /// True when Σ K†K ≤ I within τ_cp (largest eigenvalue of the
    /// Kraus sum at most 1 + τ_cp).
    pub trace_non_increasing: bool,
}

impl<R: Scalar> KrausMap<R> {
    pub fn new(
        input: RegisterLayout,
        output: RegisterLayout,
        ops: Vec<ComplexMatrix<R>>,
    ) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::InvalidChannel("Kraus map needs at least one operator".into()));
        }
        let (din, dout) = (input.total_dim(), output.total_dim());
        for (k, op) in ops.iter().enumerate() {
            if op.rows() != dout || op.cols() != din {
                return Err(Error::Dimension(format!(
                    "Kraus operator {k} is {}×{}, expected {dout}×{din}",
                    op.rows(),
                    op.cols()
                )));
            }
        }
        Ok(KrausMap { input, output, ops })
    }

    pub fn input_layout(&self) -> &RegisterLayout {
        &self.input
    }

    pub fn output_layout(&self) -> &RegisterLayout {
        &self.output
    }

    pub fn operators(&self) -> &[ComplexMatrix<R>] {
        &self.ops
    }

    /// Σ K†K.
    pub fn kraus_sum(&self) -> ComplexMatrix<R> {
        let din = self.input.total_dim();
        let mut acc = ComplexMatrix::zeros(din, din);
        for k in &self.ops {
            acc = &acc + &(&k.conj_transpose() * k);
        }
        acc
    }

    /// Check Σ K†K against the identity (trace-preserving) and against
    /// the unit ball (trace-non-increasing), reporting the max deviation.
    pub fn validate(&self, tol: &Tolerances<R>) -> KrausVerdict<R> {
        validate_kraus_sum(&self.kraus_sum(), tol)
    }
}

fn validate_kraus_sum<R: Scalar>(sum: &ComplexMatrix<R>, tol: &Tolerances<R>) -> KrausVerdict<R> {
    let n = sum.rows();
    let identity_deviation = sum.max_abs_diff(&ComplexMatrix::identity(n));
    let trace_preserving = identity_deviation <= tol.cp;
    let trace_non_increasing = if trace_preserving {
        true
    } else {
        match hermitian_eigensystem(sum, tol) {
            Ok(s) => s.eigenvalues[0] <= R::one() + tol.cp,
            Err(_) => false,
        }
    };
    KrausVerdict {
        identity_deviation,
        trace_preserving,
        trace_non_increasing,
    }
}

/// Σ K ρ K† and its trace (the branch weight before normalization).
pub fn apply_kraus_map<R: Scalar>(
    map: &KrausMap<R>,
    rho: &ComplexMatrix<R>,
) -> Result<(ComplexMatrix<R>, R)> {
    let din = map.input.total_dim();
    if rho.rows() != din || rho.cols() != din {
        return Err(Error::Dimension(format!(
            "state is {}×{} but the map expects input dimension {din}",
            rho.rows(),
            rho.cols()
        )));
    }
    let dout = map.output.total_dim();
    let mut acc = ComplexMatrix::zeros(dout, dout);
    for k in &map.ops {
        let kr = k * rho;
        acc = &acc + &(&kr * &k.conj_transpose());
    }
    let weight = acc.trace().re;
    Ok((acc, weight))
}

/// Finite family of CP maps summing to a trace-preserving map; labels are
/// the branch indices 0..l_max−1.
#[derive(Debug, Clone)]
pub struct QuantumInstrument<R: Scalar> {
    branches: Vec<KrausMap<R>>,
}

impl<R: Scalar> QuantumInstrument<R> {
    pub fn new(branches: Vec<KrausMap<R>>) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::InvalidChannel("instrument needs at least one branch".into()));
        }
        let input = branches[0].input.clone();
        let output = branches[0].output.clone();
        for (l, b) in branches.iter().enumerate() {
            if b.input != input || b.output != output {
                return Err(Error::Layout(format!(
                    "branch {l} does not share the instrument's input/output layouts"
                )));
            }
        }
        Ok(QuantumInstrument { branches })
    }

    pub fn branches(&self) -> &[KrausMap<R>] {
        &self.branches
    }

    pub fn label_count(&self) -> usize {
        self.branches.len()
    }

    pub fn input_layout(&self) -> &RegisterLayout {
        &self.branches[0].input
    }

    pub fn output_layout(&self) -> &RegisterLayout {
        &self.branches[0].output
    }

    /// The total operation Σ_l Σ_k K†K must be the identity.
    pub fn validate(&self, tol: &Tolerances<R>) -> KrausVerdict<R> {
        let din = self.input_layout().total_dim();
        let mut acc = ComplexMatrix::zeros(din, din);
        for b in &self.branches {
            acc = &acc + &b.kraus_sum();
        }
        validate_kraus_sum(&acc, tol)
    }
}

/// POVM given by measurement operators Â(x) on one register;
/// Σ Â†Â = identity. Outcomes are the operator indices.
#[derive(Debug, Clone)]
pub struct MeasurementSet<R: Scalar> {
    dim: usize,
    effects: Vec<ComplexMatrix<R>>,
}

impl<R: Scalar> MeasurementSet<R> {
    pub fn new(effects: Vec<ComplexMatrix<R>>) -> Result<Self> {
        if effects.is_empty() {
            return Err(Error::InvalidMeasurement("POVM needs at least one outcome".into()));
        }
        let dim = effects[0].rows();
        for (x, a) in effects.iter().enumerate() {
            if !a.is_square() || a.rows() != dim {
                return Err(Error::Dimension(format!(
                    "measurement operator {x} is {}×{}, expected {dim}×{dim}",
                    a.rows(),
                    a.cols()
                )));
            }
        }
        Ok(MeasurementSet { dim, effects })
    }

    /// Projective measurement in the computational basis.
    pub fn computational(dim: usize) -> Self {
        let effects = (0..dim)
            .map(|k| {
                let mut v = vec![Complex::new(R::zero(), R::zero()); dim];
                v[k] = Complex::new(R::one(), R::zero());
                ComplexMatrix::outer(&v)
            })
            .collect();
        MeasurementSet { dim, effects }
    }

    /// Seeded random rank-one POVM with `outcomes ≥ dim` effects
    /// |φ_x⟩⟨φ_x|/‖φ_x‖, built from a Haar-like co-isometry.
    pub fn random_rank_one(dim: usize, outcomes: usize, seed: u64) -> Result<Self> {
        if outcomes < dim {
            return Err(Error::InvalidMeasurement(format!(
                "rank-one POVM on dimension {dim} needs at least {dim} outcomes, got {outcomes}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let iso = random_isometry::<R>(outcomes, dim, &mut rng);
        let effects = (0..outcomes)
            .map(|x| {
                // φ_x = (row x of the isometry)†
                let phi: Vec<Complex<R>> = (0..dim).map(|j| iso[(x, j)].conj()).collect();
                let norm: R = phi.iter().map(|c| c.norm_sqr()).sum::<R>().sqrt();
                if norm > R::zero() {
                    ComplexMatrix::outer(&phi).scaled_real(R::one() / norm)
                } else {
                    ComplexMatrix::zeros(dim, dim)
                }
            })
            .collect();
        Ok(MeasurementSet { dim, effects })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn effects(&self) -> &[ComplexMatrix<R>] {
        &self.effects
    }

    pub fn outcome_count(&self) -> usize {
        self.effects.len()
    }

    pub fn validate(&self, tol: &Tolerances<R>) -> KrausVerdict<R> {
        let mut acc = ComplexMatrix::zeros(self.dim, self.dim);
        for a in &self.effects {
            acc = &acc + &(&a.conj_transpose() * a);
        }
        validate_kraus_sum(&acc, tol)
    }
}

/// True iff every Â(x)†Â(x) has rank one within τ_psd.
pub fn is_rank_one<R: Scalar>(meas: &MeasurementSet<R>, tol: &Tolerances<R>) -> bool {
    meas.effects.iter().all(|a| {
        let gram = &a.conj_transpose() * a;
        match hermitian_eigensystem(&gram, tol) {
            Ok(s) => {
                s.eigenvalues[0] > tol.psd
                    && s.eigenvalues.iter().skip(1).all(|&l| l.abs() <= tol.psd)
            }
            Err(_) => false,
        }
    })
}

/// Row-stochastic matrix p(l′|l); rows indexed by the true label l,
/// columns by the announced label l′. Rectangular shapes are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalChannel<R: Scalar> {
    rows: usize,
    cols: usize,
    p: Vec<R>,
}

impl<R: Scalar> ClassicalChannel<R> {
    pub fn new(rows: Vec<Vec<R>>) -> Result<Self> {
        Self::with_tolerances(rows, &Tolerances::default())
    }

    pub fn with_tolerances(rows: Vec<Vec<R>>, tol: &Tolerances<R>) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::InvalidChannel("empty stochastic matrix".into()));
        }
        let cols = rows[0].len();
        let mut p = Vec::with_capacity(rows.len() * cols);
        for (l, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::Dimension(format!(
                    "row {l} has length {}, expected {cols}",
                    row.len()
                )));
            }
            let mut sum = R::zero();
            for &v in row {
                if v < R::zero() {
                    return Err(Error::InvalidChannel(format!(
                        "negative probability {} in row {l}",
                        v.to_f64_lossy()
                    )));
                }
                sum += v;
            }
            if (sum - R::one()).abs() > tol.row_sum {
                return Err(Error::InvalidChannel(format!(
                    "row {l} sums to {}, not 1",
                    sum.to_f64_lossy()
                )));
            }
            p.extend_from_slice(row);
        }
        Ok(ClassicalChannel { rows: rows.len(), cols, p })
    }

    pub fn identity(n: usize) -> Self {
        let mut p = vec![R::zero(); n * n];
        for l in 0..n {
            p[l * n + l] = R::one();
        }
        ClassicalChannel { rows: n, cols: n, p }
    }

    /// Every row equal to `target` (announcement independent of the input).
    pub fn constant(rows: usize, target: &[R]) -> Result<Self> {
        ClassicalChannel::new(vec![target.to_vec(); rows])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn prob(&self, l: usize, lp: usize) -> R {
        self.p[l * self.cols + lp]
    }

    pub fn row(&self, l: usize) -> &[R] {
        &self.p[l * self.cols..(l + 1) * self.cols]
    }

    /// Matrix product: first `self`, then `after` (L → L′ → L″).
    pub fn then(&self, after: &ClassicalChannel<R>) -> Result<ClassicalChannel<R>> {
        if self.cols != after.rows {
            return Err(Error::Dimension(format!(
                "cannot compose {}-column channel with {}-row channel",
                self.cols, after.rows
            )));
        }
        let mut p = vec![R::zero(); self.rows * after.cols];
        for l in 0..self.rows {
            for lpp in 0..after.cols {
                let mut acc = R::zero();
                for lp in 0..self.cols {
                    acc += self.prob(l, lp) * after.prob(lp, lpp);
                }
                p[l * after.cols + lpp] = acc;
            }
        }
        Ok(ClassicalChannel { rows: self.rows, cols: after.cols, p })
    }
}

/// One member of a labeled ensemble.
#[derive(Debug, Clone)]
pub struct EnsembleEntry<R: Scalar> {
    /// Label tuple; arity 1 for {p(l), ρ(l)}, arity 2 for {p(x,l′), ρ(x,l′)}.
    pub label: Vec<usize>,
    pub prob: R,
    pub state: DensityMatrix<R>,
}

/// Finite ensemble {(label, probability, state)} on a shared layout.
#[derive(Debug, Clone)]
pub struct LabeledEnsemble<R: Scalar> {
    layout: RegisterLayout,
    entries: Vec<EnsembleEntry<R>>,
}

impl<R: Scalar> LabeledEnsemble<R> {
    pub fn new(layout: RegisterLayout, entries: Vec<EnsembleEntry<R>>) -> Result<Self> {
        Self::with_tolerances(layout, entries, &Tolerances::default())
    }

    pub fn with_tolerances(
        layout: RegisterLayout,
        entries: Vec<EnsembleEntry<R>>,
        tol: &Tolerances<R>,
    ) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidState("empty ensemble".into()));
        }
        let arity = entries[0].label.len();
        let mut mass = R::zero();
        for e in &entries {
            if e.state.layout() != &layout {
                return Err(Error::Layout("ensemble member on a different layout".into()));
            }
            if e.label.len() != arity {
                return Err(Error::Layout("mixed label arity in ensemble".into()));
            }
            if e.prob < R::zero() {
                return Err(Error::InvalidState(format!(
                    "negative probability {}",
                    e.prob.to_f64_lossy()
                )));
            }
            mass += e.prob;
        }
        if (mass - R::one()).abs() > tol.prob_sum {
            return Err(Error::InvalidState(format!(
                "ensemble mass {} is not 1",
                mass.to_f64_lossy()
            )));
        }
        Ok(LabeledEnsemble { layout, entries })
    }

    pub(crate) fn trusted(layout: RegisterLayout, entries: Vec<EnsembleEntry<R>>) -> Self {
        LabeledEnsemble { layout, entries }
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn entries(&self) -> &[EnsembleEntry<R>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn label_arity(&self) -> usize {
        self.entries[0].label.len()
    }

    pub fn total_mass(&self) -> R {
        self.entries.iter().map(|e| e.prob).sum()
    }

    /// Σ p ρ.
    pub fn average_state(&self) -> DensityMatrix<R> {
        let d = self.layout.total_dim();
        let mut acc = ComplexMatrix::zeros(d, d);
        for e in &self.entries {
            acc = &acc + &e.state.matrix().scaled_real(e.prob);
        }
        DensityMatrix::trusted(self.layout.clone(), acc)
    }

    /// Reduce every member to the kept registers.
    pub fn reduce(&self, keep: &[&str]) -> Result<LabeledEnsemble<R>> {
        let entries = self
            .entries
            .iter()
            .map(|e| {
                Ok(EnsembleEntry {
                    label: e.label.clone(),
                    prob: e.prob,
                    state: e.state.reduce(keep)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LabeledEnsemble::trusted(self.layout.subset(keep)?, entries))
    }
}

/// Apply the instrument to `rho`, acting on the registers named by the
/// instrument's input layout (identity on the rest). Returns the ensemble
/// {(l, p(l), ρ(l))} with normalized members; branches below `p_floor`
/// are pruned and the remaining mass renormalized.
pub fn apply_instrument<R: Scalar>(
    instr: &QuantumInstrument<R>,
    rho: &DensityMatrix<R>,
    tol: &Tolerances<R>,
) -> Result<LabeledEnsemble<R>> {
    let acted = instr.input_layout().names();
    for name in &acted {
        let have = rho.layout().dim_of(name)?;
        let want = instr.input_layout().dim_of(name)?;
        if have != want {
            return Err(Error::Dimension(format!(
                "register {name} has dimension {have} in the state but {want} in the instrument"
            )));
        }
    }
    let kept: Vec<&str> = rho.layout().complement(&acted);
    for name in instr.output_layout().names() {
        if kept.contains(&name) {
            return Err(Error::Layout(format!(
                "instrument output register {name} collides with a kept register"
            )));
        }
    }
    let order: Vec<&str> = kept.iter().chain(acted.iter()).copied().collect();
    let permuted = permute_registers(rho.matrix(), rho.layout(), &order)?;
    let kept_layout = rho.layout().subset(&kept)?;
    let dk = kept_layout.total_dim();
    let lifted_identity = ComplexMatrix::<R>::identity(dk);

    let out_layout = kept_layout.concat(instr.output_layout())?;
    let mut raw: Vec<(usize, R, ComplexMatrix<R>)> = Vec::with_capacity(instr.label_count());
    let mut mass = R::zero();
    for (l, branch) in instr.branches().iter().enumerate() {
        let dout = branch.output_layout().total_dim();
        let mut acc = ComplexMatrix::zeros(dk * dout, dk * dout);
        for k in branch.operators() {
            let full = lifted_identity.kron(k);
            let m = &(&full * &permuted) * &full.conj_transpose();
            acc = &acc + &m;
        }
        let w = acc.trace().re;
        mass += w;
        raw.push((l, w, acc));
    }
    if (mass - R::one()).abs() > tol.prob_gate {
        return Err(Error::Instrument(format!(
            "total branch probability {} deviates from 1 beyond {:.1e}",
            mass.to_f64_lossy(),
            tol.prob_gate.to_f64_lossy()
        )));
    }

    let kept_mass: R = raw
        .iter()
        .filter(|(_, w, _)| *w >= tol.p_floor)
        .map(|(_, w, _)| *w)
        .sum();
    let entries: Vec<EnsembleEntry<R>> = raw
        .into_iter()
        .filter(|(_, w, _)| *w >= tol.p_floor)
        .map(|(l, w, m)| EnsembleEntry {
            label: vec![l],
            prob: w / kept_mass,
            state: DensityMatrix::trusted(out_layout.clone(), m.scaled_real(R::one() / w)),
        })
        .collect();
    if entries.is_empty() {
        return Err(Error::Instrument("all branches fell below p_floor".into()));
    }
    Ok(LabeledEnsemble::trusted(out_layout, entries))
}

/// Measure the named register of `rho` with the POVM. Returns the
/// ensemble over outcomes x of post-measurement states on the REMAINING
/// registers, with p(x) = tr[Â(x) ρ Â(x)†].
pub fn apply_measurement<R: Scalar>(
    meas: &MeasurementSet<R>,
    rho: &DensityMatrix<R>,
    register: &str,
    tol: &Tolerances<R>,
) -> Result<LabeledEnsemble<R>> {
    let d = rho.layout().dim_of(register)?;
    if d != meas.dim() {
        return Err(Error::InvalidMeasurement(format!(
            "POVM acts on dimension {}, register {register} has dimension {d}",
            meas.dim()
        )));
    }
    let rest: Vec<&str> = rho.layout().complement(&[register]);
    if rest.is_empty() {
        return Err(Error::Layout(
            "measurement would leave no registers; keep at least one other register".into(),
        ));
    }
    let order: Vec<&str> = std::iter::once(register).chain(rest.iter().copied()).collect();
    let permuted = permute_registers(rho.matrix(), rho.layout(), &order)?;
    let measured_first = rho.layout().permuted(&order)?;
    let rest_layout = rho.layout().subset(&rest)?;
    let dr = rest_layout.total_dim();
    let rest_identity = ComplexMatrix::<R>::identity(dr);

    let mut raw: Vec<(usize, R, ComplexMatrix<R>)> = Vec::with_capacity(meas.outcome_count());
    let mut mass = R::zero();
    for (x, a) in meas.effects().iter().enumerate() {
        let full = a.kron(&rest_identity);
        let m = &(&full * &permuted) * &full.conj_transpose();
        let post = partial_trace(&m, &measured_first, &rest)?;
        let w = post.trace().re;
        mass += w;
        raw.push((x, w, post));
    }
    if (mass - R::one()).abs() > tol.prob_gate {
        return Err(Error::InvalidMeasurement(format!(
            "outcome probabilities sum to {}, not 1 (invalid POVM?)",
            mass.to_f64_lossy()
        )));
    }
    let kept_mass: R = raw
        .iter()
        .filter(|(_, w, _)| *w >= tol.p_floor)
        .map(|(_, w, _)| *w)
        .sum();
    let entries: Vec<EnsembleEntry<R>> = raw
        .into_iter()
        .filter(|(_, w, _)| *w >= tol.p_floor)
        .map(|(x, w, m)| EnsembleEntry {
            label: vec![x],
            prob: w / kept_mass,
            state: DensityMatrix::trusted(rest_layout.clone(), m.scaled_real(R::one() / w)),
        })
        .collect();
    if entries.is_empty() {
        return Err(Error::InvalidMeasurement("all outcomes fell below p_floor".into()));
    }
    Ok(LabeledEnsemble::trusted(rest_layout, entries))
}

/// Push an ensemble over l through the channel p(l′|l): probabilities by
/// marginalization, states by Bayes-weighted mixing. Labels l′ below
/// `p_floor` are dropped and the mass renormalized.
pub fn cheat_labels<R: Scalar>(
    channel: &ClassicalChannel<R>,
    ensemble: &LabeledEnsemble<R>,
    tol: &Tolerances<R>,
) -> Result<LabeledEnsemble<R>> {
    if ensemble.label_arity() != 1 {
        return Err(Error::Layout("cheat_labels expects singly-labeled ensembles".into()));
    }
    let max_label = ensemble
        .entries()
        .iter()
        .map(|e| e.label[0])
        .max()
        .expect("non-empty ensemble");
    if max_label >= channel.rows() {
        return Err(Error::Dimension(format!(
            "ensemble label {max_label} has no row in the {}-row channel",
            channel.rows()
        )));
    }
    let d = ensemble.layout().total_dim();
    let mut raw: Vec<(usize, R, ComplexMatrix<R>)> = Vec::with_capacity(channel.cols());
    for lp in 0..channel.cols() {
        let mut p_lp = R::zero();
        let mut mix = ComplexMatrix::zeros(d, d);
        for e in ensemble.entries() {
            let w = e.prob * channel.prob(e.label[0], lp);
            if w > R::zero() {
                p_lp += w;
                mix = &mix + &e.state.matrix().scaled_real(w);
            }
        }
        if p_lp >= tol.p_floor {
            raw.push((lp, p_lp, mix.scaled_real(R::one() / p_lp)));
        }
    }
    if raw.is_empty() {
        return Err(Error::InvalidChannel("every announced label fell below p_floor".into()));
    }
    let kept_mass: R = raw.iter().map(|(_, w, _)| *w).sum();
    let entries = raw
        .into_iter()
        .map(|(lp, w, m)| EnsembleEntry {
            label: vec![lp],
            prob: w / kept_mass,
            state: DensityMatrix::trusted(ensemble.layout().clone(), m),
        })
        .collect();
    Ok(LabeledEnsemble::trusted(ensemble.layout().clone(), entries))
}

/// Haar-like random isometry with `rows ≥ cols`: orthonormalized complex
/// Gaussian columns (modified Gram–Schmidt, deterministic for the seed).
pub(crate) fn random_isometry<R: Scalar>(
    rows: usize,
    cols: usize,
    rng: &mut ChaCha8Rng,
) -> ComplexMatrix<R> {
    assert!(rows >= cols, "isometry needs rows >= cols");
    let mut columns: Vec<Vec<Complex<R>>> = (0..cols)
        .map(|_| {
            (0..rows)
                .map(|_| {
                    Complex::new(
                        R::from_config(crate::states::gauss(rng)),
                        R::from_config(crate::states::gauss(rng)),
                    )
                })
                .collect()
        })
        .collect();
    for j in 0..cols {
        // two passes of Gram–Schmidt keep orthogonality near machine precision
        for _ in 0..2 {
            let (settled, rest) = columns.split_at_mut(j);
            let current = &mut rest[0];
            for prior in settled.iter() {
                let proj: Complex<R> = prior
                    .iter()
                    .zip(current.iter())
                    .map(|(a, b)| a.conj() * *b)
                    .fold(Complex::new(R::zero(), R::zero()), |acc, c| acc + c);
                for (c, &p) in current.iter_mut().zip(prior.iter()) {
                    *c -= p * proj;
                }
            }
        }
        let norm: R = columns[j].iter().map(|c| c.norm_sqr()).sum::<R>().sqrt();
        for c in &mut columns[j] {
            *c = c.unscale(norm);
        }
    }
    ComplexMatrix::from_fn(rows, cols, |i, j| columns[j][i])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    use crate::states::{bell_state, maximally_mixed, random_density};
    use crate::tensorspace::DEFAULT_D_MAX;

    type M = ComplexMatrix<f64>;

    fn tol() -> Tolerances<f64> {
        Tolerances::default()
    }

    fn qubit(name: &str) -> RegisterLayout {
        RegisterLayout::single(name, 2).unwrap()
    }

    fn identity_map(name: &str, dim: usize) -> KrausMap<f64> {
        let l = RegisterLayout::single(name, dim).unwrap();
        KrausMap::new(l.clone(), l, vec![M::identity(dim)]).unwrap()
    }

    #[test]
    fn identity_map_is_trace_preserving() {
        let v = identity_map("A", 2).validate(&tol());
        assert!(v.trace_preserving);
        assert_eq!(v.identity_deviation, 0.0);
    }

    #[test]
    fn halved_identity_reports_deviation() {
        let l = qubit("A");
        let map = KrausMap::new(l.clone(), l, vec![M::identity(2).scaled_real(0.5)]).unwrap();
        let v = map.validate(&tol());
        assert!(!v.trace_preserving);
        assert!(v.trace_non_increasing);
        // Σ K†K = I/4, deviation from I is 3/4
        assert!((v.identity_deviation - 0.75).abs() < 1e-15);
        assert!((map.kraus_sum()[(0, 0)].re - 0.25).abs() < 1e-15);
    }

    #[test]
    fn isometry_generated_map_is_trace_preserving() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let iso = random_isometry::<f64>(6, 3, &mut rng);
        // split the 6×3 isometry into three 2×3 Kraus blocks
        let ops: Vec<M> = (0..3)
            .map(|b| M::from_fn(2, 3, |i, j| iso[(2 * b + i, j)]))
            .collect();
        let map = KrausMap::new(
            RegisterLayout::single("in", 3).unwrap(),
            RegisterLayout::single("out", 2).unwrap(),
            ops,
        )
        .unwrap();
        let v = map.validate(&tol());
        assert!(v.trace_preserving, "deviation {}", v.identity_deviation);
    }

    #[test]
    fn apply_identity_map_returns_state_and_unit_weight() {
        let rho = maximally_mixed::<f64>(qubit("A"));
        let (out, w) = apply_kraus_map(&identity_map("A", 2), rho.matrix()).unwrap();
        assert!(out.max_abs_diff(rho.matrix()) == 0.0);
        assert!((w - 1.0).abs() < 1e-15);
    }

    #[test]
    fn projector_branch_halves_the_mixed_state() {
        let l = qubit("A");
        let proj = {
            let v = vec![Complex::new(1.0, 0.0), Complex::new(0.0, 0.0)];
            M::outer(&v)
        };
        let map = KrausMap::new(l.clone(), l.clone(), vec![proj.clone()]).unwrap();
        let rho = maximally_mixed::<f64>(l);
        let (out, w) = apply_kraus_map(&map, rho.matrix()).unwrap();
        assert!((w - 0.5).abs() < 1e-15);
        assert!(out.max_abs_diff(&proj.scaled_real(0.5)) < 1e-15);
    }

    #[test]
    fn random_map_matches_explicit_summation() {
        // oracle: entrywise Σ_k K ρ K† recomputed with scalar loops
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let iso = random_isometry::<f64>(8, 4, &mut rng);
        let ops: Vec<M> = (0..2)
            .map(|b| M::from_fn(4, 4, |i, j| iso[(4 * b + i, j)]))
            .collect();
        let l = RegisterLayout::new(vec![("A", 2), ("B", 2)]).unwrap();
        let map = KrausMap::new(l.clone(), l.clone(), ops.clone()).unwrap();
        let rho = random_density::<f64>(l, 4, 9).unwrap();
        let (out, _) = apply_kraus_map(&map, rho.matrix()).unwrap();
        let mut oracle = M::zeros(4, 4);
        for k in &ops {
            for i in 0..4 {
                for j in 0..4 {
                    let mut acc = Complex::new(0.0, 0.0);
                    for a in 0..4 {
                        for b in 0..4 {
                            acc += k[(i, a)] * rho.matrix()[(a, b)] * k[(j, b)].conj();
                        }
                    }
                    oracle[(i, j)] += acc;
                }
            }
        }
        assert!(out.max_abs_diff(&oracle) < 1e-12);
    }

    /// Bell-measurement instrument on two qubits with a trivial E output.
    fn bell_measurement_instrument() -> QuantumInstrument<f64> {
        let input = RegisterLayout::new(vec![("Ap", 2), ("Bp", 2)]).unwrap();
        let output = RegisterLayout::single("E", 1).unwrap();
        let branches = (0..4)
            .map(|k| {
                let phi = bell_state::<f64>(k).unwrap();
                KrausMap::new(input.clone(), output.clone(), vec![M::bra(phi.amplitudes())])
                    .unwrap()
            })
            .collect();
        QuantumInstrument::new(branches).unwrap()
    }

    fn swap_input() -> DensityMatrix<f64> {
        let alice = bell_state::<f64>(0).unwrap().renamed(vec!["A", "Ap"]).unwrap();
        let bob = bell_state::<f64>(0).unwrap().renamed(vec!["B", "Bp"]).unwrap();
        alice.density().tensor(&bob.density(), DEFAULT_D_MAX).unwrap()
    }

    #[test]
    fn entanglement_swapping_against_dense_oracle() {
        // oracle: ⟨Φ_l|_{A′B′} ρ |Φ_l⟩_{A′B′} by explicit index contraction
        // on the state reordered to [A, B, A′, B′]
        let input = swap_input();
        let rho = input.permuted(&["A", "B", "Ap", "Bp"]).unwrap();
        let instr = bell_measurement_instrument();
        assert!(instr.validate(&tol()).trace_preserving);
        let ens = apply_instrument(&instr, &input, &tol()).unwrap();
        assert_eq!(ens.len(), 4);

        for (l, entry) in ens.entries().iter().enumerate() {
            assert_eq!(entry.label, vec![l]);
            assert!((entry.prob - 0.25).abs() < 1e-12);
            let phi = bell_state::<f64>(l).unwrap();
            let mut projected = M::zeros(4, 4);
            for ab in 0..4 {
                for ab2 in 0..4 {
                    let mut acc = Complex::new(0.0, 0.0);
                    for apbp in 0..4 {
                        for apbp2 in 0..4 {
                            acc += phi.amplitudes()[apbp].conj()
                                * rho.matrix()[(ab * 4 + apbp, ab2 * 4 + apbp2)]
                                * phi.amplitudes()[apbp2];
                        }
                    }
                    projected[(ab, ab2)] = acc;
                }
            }
            let oracle = projected.scaled_real(1.0 / projected.trace().re);
            let got = entry.state.reduce(&["A", "B"]).unwrap();
            assert!(got.matrix().max_abs_diff(&oracle) < 1e-12, "label {l}");
        }
    }

    #[test]
    fn true_identity_instrument_keeps_the_state() {
        let l = qubit("Ap");
        let instr =
            QuantumInstrument::new(vec![KrausMap::new(l.clone(), l, vec![M::identity(2)]).unwrap()])
                .unwrap();
        let layout = RegisterLayout::new(vec![("A", 2), ("Ap", 2)]).unwrap();
        let rho = random_density::<f64>(layout, 3, 16).unwrap();
        let ens = apply_instrument(&instr, &rho, &tol()).unwrap();
        assert_eq!(ens.len(), 1);
        assert!((ens.entries()[0].prob - 1.0).abs() < 1e-12);
        assert!(ens.entries()[0].state.matrix().max_abs_diff(rho.matrix()) < 1e-12);
    }

    #[test]
    fn projector_instrument_reads_diagonal_weights() {
        let l = qubit("Ap");
        let e = RegisterLayout::single("E", 1).unwrap();
        let branches = (0..2)
            .map(|k| {
                let mut v = vec![Complex::new(0.0, 0.0); 2];
                v[k] = Complex::new(1.0, 0.0);
                KrausMap::new(l.clone(), e.clone(), vec![M::bra(&v)]).unwrap()
            })
            .collect();
        let instr = QuantumInstrument::new(branches).unwrap();
        let diag = DensityMatrix::new(qubit("Ap"), M::from_diag(&[0.3, 0.7])).unwrap();
        let full = diag.tensor(&maximally_mixed::<f64>(qubit("B")), DEFAULT_D_MAX).unwrap();
        let ens = apply_instrument(&instr, &full, &tol()).unwrap();
        assert!((ens.entries()[0].prob - 0.3).abs() < 1e-12);
        assert!((ens.entries()[1].prob - 0.7).abs() < 1e-12);
    }

    #[test]
    fn instrument_sum_equals_average_over_labels() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let input = RegisterLayout::new(vec![("Ap", 2), ("Bp", 2)]).unwrap();
        let output = RegisterLayout::single("E", 2).unwrap();
        let iso = random_isometry::<f64>(8, 4, &mut rng);
        let branches: Vec<KrausMap<f64>> = (0..2)
            .map(|l| {
                let ops = (0..2)
                    .map(|k| M::from_fn(2, 4, |i, j| iso[((2 * l + k) * 2 + i, j)]))
                    .collect();
                KrausMap::new(input.clone(), output.clone(), ops).unwrap()
            })
            .collect();
        let instr = QuantumInstrument::new(branches.clone()).unwrap();
        assert!(instr.validate(&tol()).trace_preserving);

        let layout = RegisterLayout::new(vec![("A", 2), ("Ap", 2), ("Bp", 2)]).unwrap();
        let rho = random_density::<f64>(layout, 4, 55).unwrap();
        let ens = apply_instrument(&instr, &rho, &tol()).unwrap();
        let avg = ens.average_state();

        // oracle: apply the summed trace-preserving map directly;
        // the output lives on [A, E], dimension 4
        let perm = rho.permuted(&["A", "Ap", "Bp"]).unwrap();
        let mut total = M::zeros(4, 4);
        for b in &branches {
            for k in b.operators() {
                let full = M::identity(2).kron(k);
                total = &total + &(&(&full * perm.matrix()) * &full.conj_transpose());
            }
        }
        assert!(avg.matrix().max_abs_diff(&total) < 1e-10);
        let mass: f64 = ens.entries().iter().map(|e| e.prob).sum();
        assert!((mass - 1.0).abs() < 1e-10);
    }

    #[test]
    fn computational_measurement_of_bell_pair() {
        let rho = bell_state::<f64>(0).unwrap().renamed(vec!["A", "B"]).unwrap().density();
        let meas = MeasurementSet::<f64>::computational(2);
        let ens = apply_measurement(&meas, &rho, "A", &tol()).unwrap();
        assert_eq!(ens.len(), 2);
        for (x, e) in ens.entries().iter().enumerate() {
            assert!((e.prob - 0.5).abs() < 1e-12);
            let mut v = vec![Complex::new(0.0, 0.0); 2];
            v[x] = Complex::new(1.0, 0.0);
            assert!(e.state.matrix().max_abs_diff(&M::outer(&v)) < 1e-12);
        }
    }

    #[test]
    fn measuring_a_product_state_leaves_the_partner_alone() {
        let a = random_density::<f64>(qubit("A"), 2, 1).unwrap();
        let b = random_density::<f64>(qubit("B"), 2, 2).unwrap();
        let rho = a.tensor(&b, DEFAULT_D_MAX).unwrap();
        let meas = MeasurementSet::<f64>::random_rank_one(2, 3, 7).unwrap();
        let ens = apply_measurement(&meas, &rho, "A", &tol()).unwrap();
        for e in ens.entries() {
            assert!(e.state.matrix().max_abs_diff(b.matrix()) < 1e-12);
        }
    }

    #[test]
    fn povm_probabilities_match_trace_formula() {
        // oracle: p(x) = tr[(Â†Â ⊗ I) ρ]
        let layout = RegisterLayout::new(vec![("A", 2), ("B", 2)]).unwrap();
        let rho = random_density::<f64>(layout, 4, 21).unwrap();
        let meas = MeasurementSet::<f64>::random_rank_one(2, 4, 22).unwrap();
        assert!(meas.validate(&tol()).trace_preserving);
        let ens = apply_measurement(&meas, &rho, "A", &tol()).unwrap();
        for (x, e) in ens.entries().iter().enumerate() {
            let effect = &meas.effects()[x].conj_transpose() * &meas.effects()[x];
            let full = effect.kron(&M::identity(2));
            let p = (&full * rho.matrix()).trace().re;
            assert!((e.prob - p).abs() < 1e-12, "outcome {x}");
        }
    }

    #[test]
    fn identity_cheating_is_transparent() {
        let ens = apply_instrument(&bell_measurement_instrument(), &swap_input(), &tol()).unwrap();
        let cheated = cheat_labels(&ClassicalChannel::identity(4), &ens, &tol()).unwrap();
        assert_eq!(cheated.len(), ens.len());
        for (a, b) in ens.entries().iter().zip(cheated.entries()) {
            assert_eq!(a.label, b.label);
            assert!((a.prob - b.prob).abs() < 1e-14);
            assert!(a.state.matrix().max_abs_diff(b.state.matrix()) < 1e-14);
        }
    }

    #[test]
    fn constant_cheating_factorizes_the_swapping_ensemble() {
        let ens = apply_instrument(&bell_measurement_instrument(), &swap_input(), &tol()).unwrap();
        let dos = ClassicalChannel::constant(4, &[0.25; 4]).unwrap();
        let cheated = cheat_labels(&dos, &ens, &tol()).unwrap();
        // every announced label carries ρ_A ⊗ ρ_B = I/4
        let expect = M::identity(4).scaled_real(0.25);
        for e in cheated.entries() {
            let red = e.state.reduce(&["A", "B"]).unwrap();
            assert!(red.matrix().max_abs_diff(&expect) < 1e-12);
        }
    }

    #[test]
    fn rectangular_cheating_matches_bayes_oracle() {
        let layout = RegisterLayout::new(vec![("A", 2)]).unwrap();
        let states: Vec<DensityMatrix<f64>> =
            (0..4).map(|k| random_density(layout.clone(), 2, 100 + k).unwrap()).collect();
        let probs = [0.1, 0.2, 0.3, 0.4];
        let entries = states
            .iter()
            .enumerate()
            .map(|(l, s)| EnsembleEntry { label: vec![l], prob: probs[l], state: s.clone() })
            .collect();
        let ens = LabeledEnsemble::new(layout, entries).unwrap();
        let channel = ClassicalChannel::new(vec![
            vec![0.5, 0.25, 0.25],
            vec![0.1, 0.6, 0.3],
            vec![0.3, 0.3, 0.4],
            vec![0.25, 0.5, 0.25],
        ])
        .unwrap();
        let cheated = cheat_labels(&channel, &ens, &tol()).unwrap();
        assert_eq!(cheated.len(), 3);
        for (lp, e) in cheated.entries().iter().enumerate() {
            // oracle: direct Bayes computation
            let p_lp: f64 = (0..4).map(|l| probs[l] * channel.prob(l, lp)).sum();
            assert!((e.prob - p_lp).abs() < 1e-12);
            let mut mix = M::zeros(2, 2);
            for l in 0..4 {
                let post = probs[l] * channel.prob(l, lp) / p_lp;
                mix = &mix + &states[l].matrix().scaled_real(post);
            }
            assert!(e.state.matrix().max_abs_diff(&mix) < 1e-12);
        }
    }

    #[test]
    fn cheating_preserves_the_average_state() {
        let layout = RegisterLayout::new(vec![("A", 2), ("B", 2)]).unwrap();
        let entries = (0..3)
            .map(|l| EnsembleEntry {
                label: vec![l],
                prob: [0.2, 0.5, 0.3][l],
                state: random_density(layout.clone(), 3, 200 + l as u64).unwrap(),
            })
            .collect();
        let ens = LabeledEnsemble::new(layout, entries).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows = (0..3)
            .map(|_| {
                let mut row: Vec<f64> = (0..5).map(|_| rng.gen::<f64>() + 1e-3).collect();
                let s: f64 = row.iter().sum();
                row.iter_mut().for_each(|v| *v /= s);
                row
            })
            .collect();
        let channel = ClassicalChannel::new(rows).unwrap();
        let cheated = cheat_labels(&channel, &ens, &tol()).unwrap();
        assert!(
            cheated.average_state().matrix().max_abs_diff(ens.average_state().matrix()) < 1e-10
        );
    }

    #[test]
    fn composed_channels_equal_channel_product() {
        let layout = RegisterLayout::new(vec![("A", 2)]).unwrap();
        let entries = (0..3)
            .map(|l| EnsembleEntry {
                label: vec![l],
                prob: [0.5, 0.25, 0.25][l],
                state: random_density(layout.clone(), 2, 300 + l as u64).unwrap(),
            })
            .collect();
        let ens = LabeledEnsemble::new(layout, entries).unwrap();
        let c1 = ClassicalChannel::new(vec![
            vec![0.9, 0.1, 0.0, 0.0],
            vec![0.0, 0.8, 0.2, 0.0],
            vec![0.1, 0.0, 0.4, 0.5],
        ])
        .unwrap();
        let c2 = ClassicalChannel::new(vec![
            vec![0.7, 0.3],
            vec![0.2, 0.8],
            vec![0.5, 0.5],
            vec![1.0, 0.0],
        ])
        .unwrap();
        let two_step =
            cheat_labels(&c2, &cheat_labels(&c1, &ens, &tol()).unwrap(), &tol()).unwrap();
        let one_step = cheat_labels(&c1.then(&c2).unwrap(), &ens, &tol()).unwrap();
        assert_eq!(two_step.len(), one_step.len());
        for (a, b) in two_step.entries().iter().zip(one_step.entries()) {
            assert!((a.prob - b.prob).abs() < 1e-10);
            assert!(a.state.matrix().max_abs_diff(b.state.matrix()) < 1e-10);
        }
    }

    #[test]
    fn measurement_marginal_recovers_the_reduction() {
        let layout = RegisterLayout::new(vec![("A", 2), ("B", 2)]).unwrap();
        let rho = random_density::<f64>(layout, 4, 71).unwrap();
        let meas = MeasurementSet::<f64>::random_rank_one(2, 4, 72).unwrap();
        let ens = apply_measurement(&meas, &rho, "A", &tol()).unwrap();
        let marginal = ens.average_state();
        let reduction = rho.reduce(&["B"]).unwrap();
        assert!(marginal.matrix().max_abs_diff(reduction.matrix()) < 1e-10);
    }

    #[test]
    fn rank_one_detection() {
        let basis = MeasurementSet::<f64>::computational(2);
        assert!(is_rank_one(&basis, &tol()));

        // {I/√2, I/√2} is a valid POVM but rank two
        let half = M::identity(2).scaled_real(1.0 / 2f64.sqrt());
        let fuzzy = MeasurementSet::new(vec![half.clone(), half]).unwrap();
        assert!(fuzzy.validate(&tol()).trace_preserving);
        assert!(!is_rank_one(&fuzzy, &tol()));

        // tetrahedral (SIC-like) rank-one qubit POVM with four outcomes
        let s = (1.0f64 / 3.0).sqrt();
        let t = (2.0f64 / 3.0).sqrt();
        let dirs: Vec<Vec<Complex<f64>>> = vec![
            vec![Complex::new(1.0, 0.0), Complex::new(0.0, 0.0)],
            vec![Complex::new(s, 0.0), Complex::new(t, 0.0)],
            vec![
                Complex::new(s, 0.0),
                Complex::from_polar(t, 2.0 * std::f64::consts::PI / 3.0),
            ],
            vec![
                Complex::new(s, 0.0),
                Complex::from_polar(t, -2.0 * std::f64::consts::PI / 3.0),
            ],
        ];
        let effects: Vec<M> =
            dirs.iter().map(|v| M::outer(v).scaled_real(1.0 / 2f64.sqrt())).collect();
        let sic = MeasurementSet::new(effects).unwrap();
        assert!(sic.validate(&tol()).trace_preserving);
        assert!(is_rank_one(&sic, &tol()));
    }

    #[test]
    fn random_rank_one_povm_is_valid_and_rank_one() {
        for seed in 0..10 {
            let meas = MeasurementSet::<f64>::random_rank_one(3, 5, seed).unwrap();
            assert!(meas.validate(&tol()).trace_preserving, "seed {seed}");
            assert!(is_rank_one(&meas, &tol()), "seed {seed}");
        }
    }

    #[test]
    fn channel_row_validation() {
        assert!(ClassicalChannel::new(vec![vec![0.5, 0.4]]).is_err());
        assert!(ClassicalChannel::new(vec![vec![0.5, -0.5, 1.0]]).is_err());
        assert!(ClassicalChannel::new(vec![vec![0.5, 0.5], vec![1.0, 0.0]]).is_ok());
    }

    #[test]
    fn cheating_dimension_mismatch_is_caught() {
        let layout = RegisterLayout::new(vec![("A", 2)]).unwrap();
        let entries = (0..4)
            .map(|l| EnsembleEntry {
                label: vec![l],
                prob: 0.25,
                state: maximally_mixed(layout.clone()),
            })
            .collect();
        let ens = LabeledEnsemble::new(layout, entries).unwrap();
        let small = ClassicalChannel::<f64>::identity(3);
        assert!(matches!(cheat_labels(&small, &ens, &tol()), Err(Error::Dimension(_))));
    }
}
