//! Relay and cheating strategy presets, randomized scenario generation,
//! and the search for classical cheating without entanglement:
//! Δ > 0 while I(A⟩B|L′) ≈ 0, which would mean key distillation without
//! entanglement distillation. The search reports evidence only — a
//! negative result is the best score found, never a nonexistence claim.

use num_complex::Complex;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{random_isometry, ClassicalChannel, KrausMap, QuantumInstrument};
use crate::error::{Error, Result};
use crate::protocol::{regs, theorem_certificate, RateReport};
use crate::scalar::Scalar;
use crate::scenario::{
    derive_seed, CheatSpec, InstrumentSpec, MeasurementSpec, Metadata, ResolveOptions,
    ScenarioSpec, StateSpec, StatesSection,
};
use crate::states::bell_state;
use crate::tensorspace::{ComplexMatrix, RegisterLayout};

/// Projective Bell-basis relay on two traveling qubits: four rank-one
/// branches ⟨Φ_l| with a trivial (one-dimensional) E output.
pub fn bell_instrument<R: Scalar>() -> QuantumInstrument<R> {
    let input = RegisterLayout::new(vec![(regs::A_OUT, 2), (regs::B_OUT, 2)])
        .expect("static layout");
    let output = RegisterLayout::single(regs::E, 1).expect("static layout");
    let branches = (0..4)
        .map(|k| {
            let phi = bell_state::<R>(k).expect("kind in range");
            KrausMap::new(input.clone(), output.clone(), vec![ComplexMatrix::bra(phi.amplitudes())])
                .expect("shape correct")
        })
        .collect();
    QuantumInstrument::new(branches).expect("non-empty")
}

/// Noisy relay: with probability 1−q the Bell branch fires, with
/// probability q the label is uniform and the traveling systems are
/// fully depolarized before projection. q = 0 reduces to
/// [`bell_instrument`]; q = 1 announces labels independent of the input.
pub fn depolarized_instrument<R: Scalar>(q: R) -> Result<QuantumInstrument<R>> {
    if q < R::zero() || q > R::one() {
        return Err(Error::Config(format!(
            "depolarization strength {} out of [0,1]",
            q.to_f64_lossy()
        )));
    }
    let input = RegisterLayout::new(vec![(regs::A_OUT, 2), (regs::B_OUT, 2)])?;
    let output = RegisterLayout::single(regs::E, 1)?;
    let bell_weight = (R::one() - q).sqrt();
    let dep_weight = (q / R::from_config(4.0)).sqrt();
    let branches = (0..4)
        .map(|k| {
            let phi = bell_state::<R>(k)?;
            let mut ops =
                vec![ComplexMatrix::bra(phi.amplitudes()).scaled_real(bell_weight)];
            if q > R::zero() {
                for j in 0..4 {
                    let mut basis = vec![Complex::new(R::zero(), R::zero()); 4];
                    basis[j] = Complex::new(R::one(), R::zero());
                    ops.push(ComplexMatrix::bra(&basis).scaled_real(dep_weight));
                }
            }
            KrausMap::new(input.clone(), output.clone(), ops)
        })
        .collect::<Result<Vec<_>>>()?;
    QuantumInstrument::new(branches)
}

/// Denial of service: every row of p(l′|l) equals `target`, so the
/// announcement carries no information about l.
pub fn dos_channel<R: Scalar>(l_max: usize, target: &[R]) -> Result<ClassicalChannel<R>> {
    if l_max == 0 {
        return Err(Error::Config("dos_channel needs at least one row".into()));
    }
    ClassicalChannel::constant(l_max, target)
}

/// Uniform-target denial of service on a square alphabet.
pub fn uniform_dos_channel<R: Scalar>(l_max: usize) -> ClassicalChannel<R> {
    let u = R::one() / R::from_config(l_max as f64);
    ClassicalChannel::constant(l_max, &vec![u; l_max]).expect("uniform rows are stochastic")
}

/// (1−eps)·identity + eps·uniform DoS; eps = 0 is transparent,
/// eps = 1 destroys all label information.
pub fn partial_leak_channel<R: Scalar>(eps: R, l_max: usize) -> Result<ClassicalChannel<R>> {
    if eps < R::zero() || eps > R::one() {
        return Err(Error::Config(format!(
            "leak strength {} out of [0,1]",
            eps.to_f64_lossy()
        )));
    }
    let u = eps / R::from_config(l_max as f64);
    let rows = (0..l_max)
        .map(|l| {
            (0..l_max)
                .map(|lp| if l == lp { R::one() - eps + u } else { u })
                .collect()
        })
        .collect();
    ClassicalChannel::new(rows)
}

/// Seeded random instrument: one Haar-like isometry
/// in_dim → branches·kraus_per_branch·e_dim, chopped into Kraus blocks,
/// which makes the total operation trace-preserving by construction.
pub fn random_instrument<R: Scalar>(
    input: RegisterLayout,
    branches: usize,
    kraus_per_branch: usize,
    e_dim: usize,
    seed: u64,
) -> Result<QuantumInstrument<R>> {
    if branches == 0 || kraus_per_branch == 0 || e_dim == 0 {
        return Err(Error::Config("instrument shape parameters must be positive".into()));
    }
    let in_dim = input.total_dim();
    let total_rows = branches * kraus_per_branch * e_dim;
    if total_rows < in_dim {
        return Err(Error::Dimension(format!(
            "branches×kraus×e_dim = {total_rows} cannot absorb input dimension {in_dim}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let iso = random_isometry::<R>(total_rows, in_dim, &mut rng);
    let output = RegisterLayout::single(regs::E, e_dim)?;
    let maps = (0..branches)
        .map(|l| {
            let ops = (0..kraus_per_branch)
                .map(|k| {
                    let row0 = (l * kraus_per_branch + k) * e_dim;
                    ComplexMatrix::from_fn(e_dim, in_dim, |i, j| iso[(row0 + i, j)])
                })
                .collect();
            KrausMap::new(input.clone(), output.clone(), ops)
        })
        .collect::<Result<Vec<_>>>()?;
    QuantumInstrument::new(maps)
}

/// Seeded random row-stochastic matrix (each row Dirichlet(1,…,1)).
pub fn random_stochastic<R: Scalar>(rows: usize, cols: usize, seed: u64) -> ClassicalChannel<R> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let matrix: Vec<Vec<R>> = (0..rows)
        .map(|_| {
            let mut row: Vec<f64> =
                (0..cols).map(|_| -(rng.gen::<f64>().max(1e-300)).ln()).collect();
            let sum: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= sum);
            row.into_iter().map(R::from_config).collect()
        })
        .collect();
    ClassicalChannel::new(matrix).expect("normalized rows")
}

/// Size box for randomized scenarios: qubit registers throughout, with
/// bounded relay label, announcement, E, and outcome alphabets.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SearchDims {
    pub max_labels: usize,
    pub max_announced: usize,
    pub max_e_dim: usize,
    pub max_outcomes: usize,
}

impl Default for SearchDims {
    fn default() -> Self {
        SearchDims { max_labels: 4, max_announced: 4, max_e_dim: 2, max_outcomes: 4 }
    }
}

/// Draw one random scenario spec inside the size box. Deterministic for
/// the seed; every component carries its own derived seed so the spec
/// re-resolves to the identical scenario.
pub fn random_scenario_spec(dims: &SearchDims, seed: u64) -> ScenarioSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alice_rank = rng.gen_range(1..=4);
    let bob_rank = rng.gen_range(1..=4);
    let branches = rng.gen_range(2..=dims.max_labels.max(2));
    let e_dim = rng.gen_range(1..=dims.max_e_dim.max(1));
    // the isometry needs branches·kraus·e_dim ≥ 4
    let min_kraus = 4usize.div_ceil(branches * e_dim);
    let kraus_per_branch = rng.gen_range(min_kraus..=min_kraus.max(2));
    let announced = rng.gen_range(2..=dims.max_announced.max(2));
    let outcomes = rng.gen_range(2..=dims.max_outcomes.max(2));

    let cheat_rows = {
        let channel = random_stochastic::<f64>(branches, announced, derive_seed(seed, 11));
        (0..branches).map(|l| channel.row(l).to_vec()).collect()
    };

    ScenarioSpec {
        metadata: Metadata {
            name: format!("random-{seed:016x}"),
            seed: Some(seed),
            rounds_total: None,
            rounds_sacrificed: None,
            rounds_key: None,
        },
        states: StatesSection {
            alice: StateSpec::Random {
                dims: [2, 2],
                rank: alice_rank,
                seed: Some(derive_seed(seed, 12)),
            },
            bob: StateSpec::Random {
                dims: [2, 2],
                rank: bob_rank,
                seed: Some(derive_seed(seed, 13)),
            },
        },
        instrument: InstrumentSpec::Random {
            branches,
            kraus_per_branch,
            e_dim,
            seed: Some(derive_seed(seed, 14)),
        },
        cheating: CheatSpec::Explicit { matrix: cheat_rows },
        measurement: MeasurementSpec::RandomRankOne {
            outcomes,
            seed: Some(derive_seed(seed, 15)),
        },
    }
}

/// The ideal entanglement-swapping scenario (search baseline).
pub fn ideal_scenario_spec() -> ScenarioSpec {
    ScenarioSpec {
        metadata: Metadata {
            name: "ideal-swap".into(),
            seed: Some(0),
            rounds_total: None,
            rounds_sacrificed: None,
            rounds_key: None,
        },
        states: StatesSection {
            alice: StateSpec::Bell { kind: 0 },
            bob: StateSpec::Bell { kind: 0 },
        },
        instrument: InstrumentSpec::Bell,
        cheating: CheatSpec::Identity,
        measurement: MeasurementSpec::Computational,
    }
}

/// Search configuration; thresholds follow the documented defaults
/// (candidate gates at 1e−4, witness re-verification at 1e−6).
#[derive(Debug, Clone, Copy)]
pub struct SearchConfig {
    /// Total number of scenario evaluations allowed.
    pub budget: usize,
    pub dims: SearchDims,
    pub seed: u64,
    /// |I(A⟩B|L′)| must stay below this for a candidate to count.
    pub coherence_tol: f64,
    /// Δ must exceed this for a candidate to count.
    pub delta_margin: f64,
}

impl SearchConfig {
    pub fn new(budget: usize, dims: SearchDims, seed: u64) -> Self {
        SearchConfig { budget, dims, seed, coherence_tol: 1e-4, delta_margin: 1e-4 }
    }
}

/// Outcome of the randomized Δ-search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchResult {
    /// The best-scoring scenario, re-resolvable bit for bit.
    pub best_scenario: ScenarioSpec,
    /// min(Δ, coherence_tol − |I(A⟩B|L′)|) of the best candidate.
    pub score: f64,
    pub delta: f64,
    pub coherent_conditional: f64,
    pub r_star: f64,
    /// True only if a candidate passed both gates AND re-verified at the
    /// tightened 1e−6 thresholds.
    pub witness: bool,
    /// Scenario evaluations actually spent.
    pub evaluations: usize,
    /// Candidates whose evaluation failed (counted against the budget).
    pub failed_evaluations: usize,
    pub seed: u64,
}

fn score_report(report: &RateReport, coherence_tol: f64) -> f64 {
    report.delta.min(coherence_tol - report.coherent_conditional.abs())
}

fn evaluate_spec<R: Scalar>(spec: &ScenarioSpec) -> Result<RateReport> {
    let scenario = spec.resolve::<R>(&ResolveOptions::default())?;
    theorem_certificate(&scenario)
}

/// Randomized search for Δ > 0 with vanishing conditional coherent
/// information. Candidate 0 is always the ideal swap (a Δ = 0 baseline);
/// the tail of the budget refines the best candidate's cheating channel
/// by blending it toward the identity and toward uniform DoS.
///
/// Deterministic for (budget, dims, seed): candidates carry derived
/// per-index seeds, the random phase is evaluated in parallel, and ties
/// resolve to the lowest candidate index.
pub fn search_positive_delta<R: Scalar>(cfg: &SearchConfig) -> Result<SearchResult> {
    if cfg.budget == 0 {
        return Err(Error::Config("search budget must be at least 1".into()));
    }
    let random_phase = if cfg.budget <= 2 { cfg.budget } else { (cfg.budget * 4).div_ceil(5) };

    let specs: Vec<ScenarioSpec> = std::iter::once(ideal_scenario_spec())
        .chain(
            (1..random_phase)
                .map(|i| random_scenario_spec(&cfg.dims, derive_seed(cfg.seed, i as u64))),
        )
        .collect();
    let outcomes: Vec<Option<(f64, RateReport)>> = specs
        .par_iter()
        .map(|spec| {
            evaluate_spec::<R>(spec)
                .ok()
                .map(|report| (score_report(&report, cfg.coherence_tol), report))
        })
        .collect();

    let mut evaluations = specs.len();
    let mut failed = 0usize;
    let mut best: Option<(f64, ScenarioSpec, RateReport)> = None;
    for (spec, outcome) in specs.into_iter().zip(outcomes) {
        match outcome {
            Some((score, report)) if best.as_ref().is_none_or(|(s, _, _)| score > *s) => {
                best = Some((score, spec, report));
            }
            Some(_) => {}
            None => failed += 1,
        }
    }

    // coordinate refinement: blend the best candidate's cheating channel
    // toward the identity (odd steps) and toward uniform DoS (even steps)
    let mut refine_step = 0usize;
    while evaluations < cfg.budget {
        let Some((_, base_spec, _)) = &best else { break };
        let CheatSpec::Explicit { matrix } = &base_spec.cheating else {
            // preset channels have no free coordinates to blend
            break;
        };
        let rows = matrix.len();
        let cols = matrix[0].len();
        let step = (refine_step % 6) + 1;
        let t = 0.25 * step.div_ceil(2) as f64;
        let toward_identity = step % 2 == 1 && rows == cols;
        let blended: Vec<Vec<f64>> = (0..rows)
            .map(|l| {
                (0..cols)
                    .map(|lp| {
                        let target = if toward_identity {
                            if l == lp {
                                1.0
                            } else {
                                0.0
                            }
                        } else {
                            1.0 / cols as f64
                        };
                        (1.0 - t) * matrix[l][lp] + t * target
                    })
                    .collect()
            })
            .collect();
        let mut spec = base_spec.clone();
        spec.cheating = CheatSpec::Explicit { matrix: blended };
        spec.metadata.name = format!("{}-refine{refine_step}", base_spec.metadata.name);
        refine_step += 1;
        evaluations += 1;
        match evaluate_spec::<R>(&spec) {
            Ok(report) => {
                let score = score_report(&report, cfg.coherence_tol);
                if best.as_ref().is_none_or(|(s, _, _)| score > *s) {
                    best = Some((score, spec, report));
                }
            }
            Err(_) => failed += 1,
        }
    }

    let (score, best_spec, best_report) = best.ok_or_else(|| {
        Error::Numeric("every search candidate failed to evaluate".into())
    })?;

    let mut witness = best_report.delta > cfg.delta_margin
        && best_report.coherent_conditional.abs() <= cfg.coherence_tol;
    if witness {
        // re-verify at tightened thresholds and pruning before claiming
        let strict = ResolveOptions { tol_scale: 1e-2, ..Default::default() };
        witness = match best_spec
            .resolve::<R>(&strict)
            .and_then(|s| theorem_certificate(&s))
        {
            Ok(r) => r.delta > 1e-6 && r.coherent_conditional.abs() <= 1e-6,
            Err(_) => false,
        };
    }

    Ok(SearchResult {
        score,
        delta: best_report.delta,
        coherent_conditional: best_report.coherent_conditional,
        r_star: best_report.r_star,
        witness,
        evaluations,
        failed_evaluations: failed,
        seed: cfg.seed,
        best_scenario: best_spec,
    })
}
