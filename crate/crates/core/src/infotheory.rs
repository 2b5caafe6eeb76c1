//! Entropic functionals: von Neumann entropy, conditional entropy,
//! (conditional) mutual information, coherent information, Holevo and
//! conditional Holevo information, CQ embeddings, interaction
//! information, and the inequality self-check suite.
//!
//! All logarithms are base 2; rates are bits per protocol round.
//! Classical variables enter either as labeled ensembles (embedded into
//! dummy registers block-diagonally) or as explicit joint distributions.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channels::{EnsembleEntry, LabeledEnsemble};
use crate::error::{Error, Result};
use crate::scalar::{Scalar, Tolerances};
use crate::states::{random_density_with, DensityMatrix};
use crate::tensorspace::{clip_spectrum, hermitian_eigensystem, ComplexMatrix, RegisterLayout};

/// Result of one entropy evaluation.
#[derive(Debug, Clone)]
pub struct EntropyReport<R> {
    /// −Σ λ log₂ λ in bits.
    pub bits: R,
    /// The clipped, renormalized spectrum the entropy was taken over.
    pub spectrum: Vec<R>,
    /// Probability mass moved by the clipping policy.
    pub clipped_mass: R,
}

/// Shannon entropy in bits with the 0·log 0 = 0 convention.
pub fn shannon_bits<R: Scalar>(probs: &[R]) -> R {
    let mut acc = R::zero();
    for &p in probs {
        if p > R::zero() {
            acc -= p * p.log2();
        }
    }
    acc
}

/// Von Neumann entropy S(ρ) in bits, eigenvalues clipped to [0, 1] and
/// renormalized before the logarithms.
pub fn von_neumann_entropy<R: Scalar>(rho: &DensityMatrix<R>) -> Result<EntropyReport<R>> {
    von_neumann_entropy_with(rho, &Tolerances::default())
}

pub fn von_neumann_entropy_with<R: Scalar>(
    rho: &DensityMatrix<R>,
    tol: &Tolerances<R>,
) -> Result<EntropyReport<R>> {
    let spectrum = hermitian_eigensystem(rho.matrix(), tol)?;
    let (probs, clipped_mass) = clip_spectrum(&spectrum.eigenvalues, tol);
    Ok(EntropyReport {
        bits: shannon_bits(&probs),
        spectrum: probs,
        clipped_mass,
    })
}

/// S(ρ) as a bare number.
pub fn entropy_bits<R: Scalar>(rho: &DensityMatrix<R>, tol: &Tolerances<R>) -> Result<R> {
    Ok(von_neumann_entropy_with(rho, tol)?.bits)
}

fn entropy_of_reduction<R: Scalar>(
    rho: &DensityMatrix<R>,
    keep: &[&str],
    tol: &Tolerances<R>,
) -> Result<R> {
    if keep.len() == rho.layout().len() {
        entropy_bits(rho, tol)
    } else {
        entropy_bits(&rho.reduce(keep)?, tol)
    }
}

fn check_partition<R: Scalar>(rho: &DensityMatrix<R>, parts: &[&[&str]]) -> Result<()> {
    let mut seen: Vec<&str> = Vec::new();
    for part in parts {
        if part.is_empty() {
            return Err(Error::Layout("empty side in a partition".into()));
        }
        for name in *part {
            rho.layout().position(name)?;
            if seen.contains(name) {
                return Err(Error::Layout(format!("register {name} appears on two sides")));
            }
            seen.push(name);
        }
    }
    Ok(())
}

/// H(rest | cond) = H(full) − H(cond); may be negative.
pub fn conditional_entropy<R: Scalar>(
    rho: &DensityMatrix<R>,
    cond: &[&str],
    tol: &Tolerances<R>,
) -> Result<R> {
    check_partition(rho, &[cond])?;
    if cond.len() == rho.layout().len() {
        return Err(Error::Layout("conditioning side covers the whole layout".into()));
    }
    Ok(entropy_bits(rho, tol)? - entropy_of_reduction(rho, cond, tol)?)
}

/// I(A:B) = H(A) + H(B) − H(AB); the state is reduced to A∪B first.
pub fn mutual_information<R: Scalar>(
    rho: &DensityMatrix<R>,
    a: &[&str],
    b: &[&str],
    tol: &Tolerances<R>,
) -> Result<R> {
    check_partition(rho, &[a, b])?;
    let ab: Vec<&str> = union(a, b, rho.layout());
    Ok(entropy_of_reduction(rho, a, tol)? + entropy_of_reduction(rho, b, tol)?
        - entropy_of_reduction(rho, &ab, tol)?)
}

/// Coherent information I(A⟩B) = S(ρ_B) − S(ρ_AB).
pub fn coherent_information<R: Scalar>(
    rho: &DensityMatrix<R>,
    from: &[&str],
    to: &[&str],
    tol: &Tolerances<R>,
) -> Result<R> {
    check_partition(rho, &[from, to])?;
    let ab: Vec<&str> = union(from, to, rho.layout());
    Ok(entropy_of_reduction(rho, to, tol)? - entropy_of_reduction(rho, &ab, tol)?)
}

/// I(A:B|C) = H(AC) + H(BC) − H(ABC) − H(C); nonnegative by strong
/// subadditivity (up to numerical dust).
pub fn conditional_mutual_information<R: Scalar>(
    rho: &DensityMatrix<R>,
    a: &[&str],
    b: &[&str],
    c: &[&str],
    tol: &Tolerances<R>,
) -> Result<R> {
    cmi_with(rho, a, b, c, &|r| entropy_bits(r, tol))
}

/// CMI over a caller-supplied entropy functional; the inequality checker
/// uses this to prove it would catch a faulty entropy.
pub(crate) fn cmi_with<R: Scalar>(
    rho: &DensityMatrix<R>,
    a: &[&str],
    b: &[&str],
    c: &[&str],
    entropy: &dyn Fn(&DensityMatrix<R>) -> Result<R>,
) -> Result<R> {
    check_partition(rho, &[a, b, c])?;
    let layout = rho.layout();
    let ac: Vec<&str> = union(a, c, layout);
    let bc: Vec<&str> = union(b, c, layout);
    let abc: Vec<&str> = union(&ac, b, layout);
    let reduced = |keep: &[&str]| -> Result<DensityMatrix<R>> {
        if keep.len() == layout.len() {
            Ok(rho.clone())
        } else {
            rho.reduce(keep)
        }
    };
    Ok(entropy(&reduced(&ac)?)? + entropy(&reduced(&bc)?)?
        - entropy(&reduced(&abc)?)?
        - entropy(&reduced(c)?)?)
}

/// Union of name sets in the layout's register order.
fn union<'a>(a: &[&'a str], b: &[&'a str], layout: &RegisterLayout) -> Vec<&'a str> {
    let mut names: Vec<&str> = a.iter().chain(b.iter()).copied().collect();
    names.sort_by_key(|n| layout.position(n).expect("validated name"));
    names
}

/// Embed the chosen label components of an ensemble into dummy quantum
/// registers: ρ = Σ_g p(g) |g⟩⟨g| ⊗ ρ(g), block-diagonal, entries that
/// share an embedded value g mixed by their conditional weights.
///
/// `components` selects label-tuple positions; `names` provides one
/// register name per selected component. Alphabet sizes are read off as
/// max value + 1 per component.
pub fn cq_embed<R: Scalar>(
    ensemble: &LabeledEnsemble<R>,
    components: &[usize],
    names: &[&str],
) -> Result<DensityMatrix<R>> {
    if ensemble.is_empty() {
        return Err(Error::InvalidState("empty ensemble".into()));
    }
    if components.is_empty() || components.len() != names.len() {
        return Err(Error::Layout(
            "cq_embed needs one register name per embedded label component".into(),
        ));
    }
    let arity = ensemble.label_arity();
    for &c in components {
        if c >= arity {
            return Err(Error::Layout(format!(
                "label component {c} out of range for arity {arity}"
            )));
        }
    }
    let dims: Vec<usize> = components
        .iter()
        .map(|&c| {
            ensemble
                .entries()
                .iter()
                .map(|e| e.label[c])
                .max()
                .expect("non-empty")
                + 1
        })
        .collect();
    let mut dummy = RegisterLayout::new(
        names
            .iter()
            .zip(&dims)
            .map(|(n, d)| (n.to_string(), *d))
            .collect::<Vec<_>>(),
    )?;
    dummy = dummy.concat(ensemble.layout())?;

    let d = ensemble.layout().total_dim();
    let classical_dim: usize = dims.iter().product();
    let total = classical_dim * d;
    let mut out = ComplexMatrix::zeros(total, total);
    for e in ensemble.entries() {
        let mut g = 0usize;
        for (&c, &dim) in components.iter().zip(&dims) {
            g = g * dim + e.label[c];
        }
        let base = g * d;
        let block = e.state.matrix();
        for i in 0..d {
            for j in 0..d {
                out[(base + i, base + j)] += block[(i, j)].scale(e.prob);
            }
        }
    }
    Ok(DensityMatrix::trusted(dummy, out))
}

/// Holevo information S(ρ̄) − Σ p(x) S(ρ(x)) of an ensemble, treating
/// each entry as one symbol.
pub fn holevo_information<R: Scalar>(
    ensemble: &LabeledEnsemble<R>,
    tol: &Tolerances<R>,
) -> Result<R> {
    let avg = entropy_bits(&ensemble.average_state(), tol)?;
    let mut conditional = R::zero();
    for e in ensemble.entries() {
        conditional += e.prob * entropy_bits(&e.state, tol)?;
    }
    Ok(avg - conditional)
}

/// Conditional Holevo information Σ_c p(c) · I(X:·|c): entries are
/// grouped by the label component `cond_component` and the per-group
/// Holevo informations averaged. Never builds one giant CQ state.
pub fn conditional_holevo<R: Scalar>(
    ensemble: &LabeledEnsemble<R>,
    cond_component: usize,
    tol: &Tolerances<R>,
) -> Result<R> {
    if cond_component >= ensemble.label_arity() {
        return Err(Error::Layout(format!(
            "conditioning component {cond_component} out of range for arity {}",
            ensemble.label_arity()
        )));
    }
    let mut groups: Vec<usize> = ensemble
        .entries()
        .iter()
        .map(|e| e.label[cond_component])
        .collect();
    groups.sort_unstable();
    groups.dedup();

    let mut total = R::zero();
    for g in groups {
        let members: Vec<&EnsembleEntry<R>> = ensemble
            .entries()
            .iter()
            .filter(|e| e.label[cond_component] == g)
            .collect();
        let p_g: R = members.iter().map(|e| e.prob).sum();
        if p_g <= tol.p_floor {
            continue;
        }
        let entries: Vec<EnsembleEntry<R>> = members
            .iter()
            .map(|e| EnsembleEntry {
                label: e.label.clone(),
                prob: e.prob / p_g,
                state: e.state.clone(),
            })
            .collect();
        let group = LabeledEnsemble::trusted(ensemble.layout().clone(), entries);
        total += p_g * holevo_information(&group, tol)?;
    }
    Ok(total)
}

/// Finite joint distribution over named axes, flat row-major storage.
#[derive(Debug, Clone)]
pub struct JointDistribution<R: Scalar> {
    dims: Vec<usize>,
    probs: Vec<R>,
}

impl<R: Scalar> JointDistribution<R> {
    pub fn new(dims: Vec<usize>, probs: Vec<R>) -> Result<Self> {
        let expect: usize = dims.iter().product();
        if dims.is_empty() || probs.len() != expect {
            return Err(Error::Dimension(format!(
                "distribution over dims {dims:?} needs {expect} entries, got {}",
                probs.len()
            )));
        }
        let mut mass = R::zero();
        for &p in &probs {
            if p < R::zero() {
                return Err(Error::InvalidState("negative probability".into()));
            }
            mass += p;
        }
        if (mass - R::one()).abs() > R::from_config(1e-10) {
            return Err(Error::InvalidState(format!(
                "distribution mass {} is not 1",
                mass.to_f64_lossy()
            )));
        }
        Ok(JointDistribution { dims, probs })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1usize; self.dims.len()];
        for j in (0..self.dims.len().saturating_sub(1)).rev() {
            s[j] = s[j + 1] * self.dims[j + 1];
        }
        s
    }

    /// Marginal over the given axes (kept in the given order).
    pub fn marginal(&self, axes: &[usize]) -> JointDistribution<R> {
        let strides = self.strides();
        let kept_dims: Vec<usize> = axes.iter().map(|&a| self.dims[a]).collect();
        let kept_total: usize = kept_dims.iter().product();
        let mut probs = vec![R::zero(); kept_total];
        let total: usize = self.dims.iter().product();
        for flat in 0..total {
            let mut kept_flat = 0usize;
            for (&axis, &dim) in axes.iter().zip(&kept_dims) {
                let digit = (flat / strides[axis]) % self.dims[axis];
                kept_flat = kept_flat * dim + digit;
            }
            probs[kept_flat] += self.probs[flat];
        }
        JointDistribution { dims: kept_dims, probs }
    }

    pub fn entropy_bits(&self) -> R {
        shannon_bits(&self.probs)
    }

    /// I(A:B) over axis sets.
    pub fn mutual(&self, a: &[usize], b: &[usize]) -> R {
        let ab: Vec<usize> = a.iter().chain(b.iter()).copied().collect();
        self.marginal(a).entropy_bits() + self.marginal(b).entropy_bits()
            - self.marginal(&ab).entropy_bits()
    }

    /// I(A:B|C) over axis sets.
    pub fn conditional_mutual(&self, a: &[usize], b: &[usize], c: &[usize]) -> R {
        let ac: Vec<usize> = a.iter().chain(c.iter()).copied().collect();
        let bc: Vec<usize> = b.iter().chain(c.iter()).copied().collect();
        let abc: Vec<usize> = a.iter().chain(b.iter()).chain(c.iter()).copied().collect();
        self.marginal(&ac).entropy_bits() + self.marginal(&bc).entropy_bits()
            - self.marginal(&abc).entropy_bits()
            - self.marginal(c).entropy_bits()
    }
}

/// Interaction information I(X:Y:Z) = I(X:Y|Z) − I(X:Y) of a
/// three-variable distribution; positive, negative, or zero.
pub fn interaction_information<R: Scalar>(joint: &JointDistribution<R>) -> Result<R> {
    if joint.dims().len() != 3 {
        return Err(Error::Dimension(format!(
            "interaction information needs exactly 3 variables, got {}",
            joint.dims().len()
        )));
    }
    Ok(joint.conditional_mutual(&[0], &[1], &[2]) - joint.mutual(&[0], &[1]))
}

/// Configuration of the entropic-inequality self-check suite.
#[derive(Debug, Clone, Copy)]
pub struct CheckConfig {
    pub seed: u64,
    /// Random tripartite states for strong subadditivity.
    pub ssa_states: usize,
    /// Random tripartite states for the chain rule.
    pub chain_states: usize,
    /// Random CQ constructions for Holevo invariance under appended
    /// classical channels.
    pub holevo_constructions: usize,
    /// Random Markov chains for the data-processing inequality and
    /// conditioning monotonicity.
    pub markov_chains: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            seed: 0,
            ssa_states: 200,
            chain_states: 100,
            holevo_constructions: 50,
            markov_chains: 100,
        }
    }
}

/// Worst residual observed for each inequality; `pass` mirrors the
/// documented 1e−8 gates.
#[derive(Debug, Clone)]
pub struct InequalityReport<R> {
    /// Most negative I(A:B|C); SSA demands ≥ −1e−8.
    pub ssa_min_cmi: R,
    /// Max |I(A:BC) − I(A:B) − I(A:C|B)|.
    pub chain_rule_max_residual: R,
    /// Max |I(A:X) − I(A:XY)| for appended classical channels.
    pub holevo_invariance_max_residual: R,
    /// Max of I(X:Y) − H(X) and I(X:Z) − I(X:Y) on Markov chains.
    pub dpi_max_violation: R,
    /// Max I(X:Y|Z) − I(X:Y) on Markov chains (conditioning decreases).
    pub markov_conditioning_max_violation: R,
}

impl<R: Scalar> InequalityReport<R> {
    pub fn pass(&self) -> bool {
        let gate = R::from_config(1e-8);
        self.ssa_min_cmi >= -gate
            && self.chain_rule_max_residual <= gate
            && self.holevo_invariance_max_residual <= gate
            && self.dpi_max_violation <= gate
            && self.markov_conditioning_max_violation <= gate
    }
}

// tripartite shapes with total dimension ≤ 24
const TRIPARTITE_DIMS: [(usize, usize, usize); 6] =
    [(2, 2, 2), (2, 2, 3), (2, 3, 2), (3, 2, 4), (2, 2, 6), (2, 4, 3)];

fn random_tripartite<R: Scalar>(rng: &mut ChaCha8Rng, trial: usize) -> DensityMatrix<R> {
    let (da, db, dc) = TRIPARTITE_DIMS[trial % TRIPARTITE_DIMS.len()];
    let layout = RegisterLayout::new(vec![("A", da), ("B", db), ("C", dc)]).expect("static dims");
    let total = da * db * dc;
    let rank = 1 + rng.gen_range(0..total);
    random_density_with(layout, rank, rng).expect("rank in range")
}

fn random_distribution<R: Scalar>(rng: &mut ChaCha8Rng, n: usize) -> Vec<R> {
    // Dirichlet(1,…,1) via normalized exponentials
    let mut row: Vec<f64> = (0..n).map(|_| -(rng.gen::<f64>().max(1e-300)).ln()).collect();
    let sum: f64 = row.iter().sum();
    row.iter_mut().for_each(|v| *v /= sum);
    row.into_iter().map(R::from_config).collect()
}

fn random_markov_joint<R: Scalar>(
    rng: &mut ChaCha8Rng,
    nx: usize,
    ny: usize,
    nz: usize,
) -> JointDistribution<R> {
    let px = random_distribution::<R>(rng, nx);
    let py_x: Vec<Vec<R>> = (0..nx).map(|_| random_distribution(rng, ny)).collect();
    let pz_y: Vec<Vec<R>> = (0..ny).map(|_| random_distribution(rng, nz)).collect();
    let mut probs = vec![R::zero(); nx * ny * nz];
    for x in 0..nx {
        for y in 0..ny {
            for z in 0..nz {
                probs[(x * ny + y) * nz + z] = px[x] * py_x[x][y] * pz_y[y][z];
            }
        }
    }
    JointDistribution { dims: vec![nx, ny, nz], probs }
}

/// Run the whole inequality suite on seeded random inputs.
pub fn check_inequalities<R: Scalar>(
    cfg: &CheckConfig,
    tol: &Tolerances<R>,
) -> Result<InequalityReport<R>> {
    let entropy = |rho: &DensityMatrix<R>| entropy_bits(rho, tol);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut ssa_min = R::from_config(f64::INFINITY);
    for trial in 0..cfg.ssa_states {
        let rho = random_tripartite::<R>(&mut rng, trial);
        let cmi = cmi_with(&rho, &["A"], &["B"], &["C"], &entropy)?;
        if cmi < ssa_min {
            ssa_min = cmi;
        }
    }

    let mut chain_max = R::zero();
    for trial in 0..cfg.chain_states {
        let rho = random_tripartite::<R>(&mut rng, trial);
        let lhs = mutual_information(&rho, &["A"], &["B", "C"], tol)?;
        let rhs = mutual_information(&rho, &["A"], &["B"], tol)?
            + cmi_with(&rho, &["A"], &["C"], &["B"], &entropy)?;
        let resid = (lhs - rhs).abs();
        if resid > chain_max {
            chain_max = resid;
        }
    }

    let mut holevo_max = R::zero();
    for trial in 0..cfg.holevo_constructions {
        let resid = holevo_invariance_residual::<R>(&mut rng, trial, tol)?;
        if resid > holevo_max {
            holevo_max = resid;
        }
    }

    let mut dpi_max = R::zero();
    let mut markov_max = R::zero();
    for _ in 0..cfg.markov_chains {
        let nx = 2 + rng.gen_range(0..3);
        let ny = 2 + rng.gen_range(0..3);
        let joint = random_markov_joint::<R>(&mut rng, nx, ny, 2);
        let hx = joint.marginal(&[0]).entropy_bits();
        let ixy = joint.mutual(&[0], &[1]);
        let ixz = joint.mutual(&[0], &[2]);
        for v in [ixy - hx, ixz - ixy] {
            if v > dpi_max {
                dpi_max = v;
            }
        }
        let cond = joint.conditional_mutual(&[0], &[1], &[2]) - ixy;
        if cond > markov_max {
            markov_max = cond;
        }
    }

    Ok(InequalityReport {
        ssa_min_cmi: ssa_min,
        chain_rule_max_residual: chain_max,
        holevo_invariance_max_residual: holevo_max,
        dpi_max_violation: dpi_max,
        markov_conditioning_max_violation: markov_max,
    })
}

/// |I(A:X) − I(A:XY)| for one random ensemble with an appended classical
/// channel X → Y, both sides computed over CQ embeddings.
fn holevo_invariance_residual<R: Scalar>(
    rng: &mut ChaCha8Rng,
    trial: usize,
    tol: &Tolerances<R>,
) -> Result<R> {
    let da = 2 + trial % 2;
    let nx = 2 + trial % 3;
    let ny = 2 + (trial / 2) % 2;
    let layout = RegisterLayout::single("A", da)?;
    let px = random_distribution::<R>(rng, nx);
    let states: Vec<DensityMatrix<R>> = (0..nx)
        .map(|_| random_density_with(layout.clone(), da, rng).expect("full rank"))
        .collect();
    let py_x: Vec<Vec<R>> = (0..nx).map(|_| random_distribution(rng, ny)).collect();

    let single: Vec<EnsembleEntry<R>> = (0..nx)
        .map(|x| EnsembleEntry { label: vec![x], prob: px[x], state: states[x].clone() })
        .collect();
    let single = LabeledEnsemble::trusted(layout.clone(), single);
    let rho_xa = cq_embed(&single, &[0], &["X"])?;
    let i_ax = mutual_information(&rho_xa, &["X"], &["A"], tol)?;

    let mut joint_entries: Vec<EnsembleEntry<R>> = Vec::new();
    for x in 0..nx {
        for (y, &p_yx) in py_x[x].iter().enumerate() {
            let p = px[x] * p_yx;
            if p > R::zero() {
                joint_entries.push(EnsembleEntry {
                    label: vec![x, y],
                    prob: p,
                    state: states[x].clone(),
                });
            }
        }
    }
    let joint = LabeledEnsemble::trusted(layout, joint_entries);
    let rho_xya = cq_embed(&joint, &[0, 1], &["X", "Y"])?;
    let i_axy = mutual_information(&rho_xya, &["X", "Y"], &["A"], tol)?;
    Ok((i_ax - i_axy).abs())
}
