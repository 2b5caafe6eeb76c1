//! Serializable scenario descriptions.
//!
//! A scenario file is one TOML document with sections
//! `metadata` / `states` / `instrument` / `cheating` / `measurement`.
//! States, instruments, channels, and POVMs are either named presets with
//! parameters or explicit matrix literals (nested `[re, im]` pair
//! arrays). Resolution turns a spec into a validated
//! [`Scenario`](crate::protocol::Scenario); it is deterministic, with
//! per-component seeds derived from the scenario seed unless given
//! explicitly.

use serde::{Deserialize, Serialize};

use crate::attacks;
use crate::channels::{ClassicalChannel, KrausMap, MeasurementSet, QuantumInstrument};
use crate::error::{Error, Result};
use crate::protocol::{regs, RoundCounts, Scenario};
use crate::scalar::{Scalar, Tolerances};
use crate::states::{bell_state, maximally_mixed, random_density, werner_state, DensityMatrix};
use crate::tensorspace::{ComplexMatrix, RegisterLayout, DEFAULT_D_MAX};

/// Rows of `[re, im]` entry pairs.
pub type MatrixLiteral = Vec<Vec<[f64; 2]>>;

/// Stable per-component seed stream (splitmix64 finalizer).
pub(crate) fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const STREAM_ALICE: u64 = 1;
const STREAM_BOB: u64 = 2;
const STREAM_INSTRUMENT: u64 = 3;
const STREAM_MEASUREMENT: u64 = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Declared round counts (M, M′, N); annotation only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rounds_total: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rounds_sacrificed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rounds_key: Option<u64>,
}

/// Resource state ρ on a private register plus a traveling register.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum StateSpec {
    /// Two-qubit Bell state Φ⁺, Φ⁻, Ψ⁺, Ψ⁻ by index.
    Bell { kind: usize },
    /// p·|Φ⁺⟩⟨Φ⁺| + (1−p)·I/4 on two qubits.
    Werner { p: f64 },
    MaximallyMixed { dims: [usize; 2] },
    Random {
        dims: [usize; 2],
        rank: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Explicit { dims: [usize; 2], matrix: MatrixLiteral },
}

impl StateSpec {
    fn resolve<R: Scalar>(
        &self,
        names: [&str; 2],
        base_seed: u64,
        stream: u64,
        tol: &Tolerances<R>,
    ) -> Result<DensityMatrix<R>> {
        let named = |state: DensityMatrix<R>| state.renamed(vec![names[0], names[1]]);
        match self {
            StateSpec::Bell { kind } => named(bell_state::<R>(*kind)?.density()),
            StateSpec::Werner { p } => named(werner_state(R::from_config(*p))?),
            StateSpec::MaximallyMixed { dims } => {
                let layout = RegisterLayout::new(vec![(names[0], dims[0]), (names[1], dims[1])])?;
                Ok(maximally_mixed(layout))
            }
            StateSpec::Random { dims, rank, seed } => {
                let layout = RegisterLayout::new(vec![(names[0], dims[0]), (names[1], dims[1])])?;
                random_density(layout, *rank, seed.unwrap_or_else(|| derive_seed(base_seed, stream)))
            }
            StateSpec::Explicit { dims, matrix } => {
                let layout = RegisterLayout::new(vec![(names[0], dims[0]), (names[1], dims[1])])?;
                DensityMatrix::with_tolerances(layout, ComplexMatrix::from_pairs(matrix)?, tol)
            }
        }
    }

    fn traveling_dim(&self) -> usize {
        match self {
            StateSpec::Bell { .. } | StateSpec::Werner { .. } => 2,
            StateSpec::MaximallyMixed { dims }
            | StateSpec::Random { dims, .. }
            | StateSpec::Explicit { dims, .. } => dims[1],
        }
    }

    fn private_dim(&self) -> usize {
        match self {
            StateSpec::Bell { .. } | StateSpec::Werner { .. } => 2,
            StateSpec::MaximallyMixed { dims }
            | StateSpec::Random { dims, .. }
            | StateSpec::Explicit { dims, .. } => dims[0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatesSection {
    pub alice: StateSpec,
    pub bob: StateSpec,
}

/// One instrument branch as explicit Kraus operators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchLiteral {
    pub kraus: Vec<MatrixLiteral>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum InstrumentSpec {
    /// Projective Bell-basis measurement on two traveling qubits.
    Bell,
    /// Bell measurement with probability 1−q, depolarized uniform
    /// announcement with probability q.
    Depolarized { q: f64 },
    Random {
        branches: usize,
        kraus_per_branch: usize,
        e_dim: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Explicit { e_dim: usize, branches: Vec<BranchLiteral> },
}

impl InstrumentSpec {
    fn resolve<R: Scalar>(
        &self,
        in_dims: [usize; 2],
        base_seed: u64,
    ) -> Result<QuantumInstrument<R>> {
        let input =
            RegisterLayout::new(vec![(regs::A_OUT, in_dims[0]), (regs::B_OUT, in_dims[1])])?;
        match self {
            InstrumentSpec::Bell => {
                if in_dims != [2, 2] {
                    return Err(Error::Config(format!(
                        "the Bell relay needs qubit traveling registers, found dims {in_dims:?}"
                    )));
                }
                Ok(attacks::bell_instrument())
            }
            InstrumentSpec::Depolarized { q } => {
                if in_dims != [2, 2] {
                    return Err(Error::Config(format!(
                        "the depolarized relay needs qubit traveling registers, found dims {in_dims:?}"
                    )));
                }
                attacks::depolarized_instrument(R::from_config(*q))
            }
            InstrumentSpec::Random { branches, kraus_per_branch, e_dim, seed } => {
                attacks::random_instrument(
                    input,
                    *branches,
                    *kraus_per_branch,
                    *e_dim,
                    seed.unwrap_or_else(|| derive_seed(base_seed, STREAM_INSTRUMENT)),
                )
            }
            InstrumentSpec::Explicit { e_dim, branches } => {
                let output = RegisterLayout::single(regs::E, *e_dim)?;
                let maps = branches
                    .iter()
                    .map(|b| {
                        let ops = b
                            .kraus
                            .iter()
                            .map(|m| ComplexMatrix::from_pairs(m))
                            .collect::<Result<Vec<_>>>()?;
                        KrausMap::new(input.clone(), output.clone(), ops)
                    })
                    .collect::<Result<Vec<_>>>()?;
                QuantumInstrument::new(maps)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum CheatSpec {
    /// L′ = L.
    Identity,
    /// Announce from `target` (uniform when omitted) regardless of l.
    Dos {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        target: Option<Vec<f64>>,
    },
    /// (1−eps)·identity + eps·uniform denial of service.
    PartialLeak { eps: f64 },
    Explicit { matrix: Vec<Vec<f64>> },
}

impl CheatSpec {
    fn resolve<R: Scalar>(&self, l_max: usize, tol: &Tolerances<R>) -> Result<ClassicalChannel<R>> {
        match self {
            CheatSpec::Identity => Ok(ClassicalChannel::identity(l_max)),
            CheatSpec::Dos { target } => match target {
                Some(t) => {
                    let row: Vec<R> = t.iter().map(|&v| R::from_config(v)).collect();
                    attacks::dos_channel(l_max, &row)
                }
                None => Ok(attacks::uniform_dos_channel(l_max)),
            },
            CheatSpec::PartialLeak { eps } => {
                attacks::partial_leak_channel(R::from_config(*eps), l_max)
            }
            CheatSpec::Explicit { matrix } => {
                if matrix.len() != l_max {
                    return Err(Error::Config(format!(
                        "cheating matrix has {} rows but the instrument announces {l_max} labels",
                        matrix.len()
                    )));
                }
                let rows = matrix
                    .iter()
                    .map(|r| r.iter().map(|&v| R::from_config(v)).collect())
                    .collect();
                ClassicalChannel::with_tolerances(rows, tol)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum MeasurementSpec {
    Computational,
    RandomRankOne {
        outcomes: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Explicit { operators: Vec<MatrixLiteral> },
}

impl MeasurementSpec {
    fn resolve<R: Scalar>(&self, dim: usize, base_seed: u64) -> Result<MeasurementSet<R>> {
        match self {
            MeasurementSpec::Computational => Ok(MeasurementSet::computational(dim)),
            MeasurementSpec::RandomRankOne { outcomes, seed } => MeasurementSet::random_rank_one(
                dim,
                *outcomes,
                seed.unwrap_or_else(|| derive_seed(base_seed, STREAM_MEASUREMENT)),
            ),
            MeasurementSpec::Explicit { operators } => {
                let ops = operators
                    .iter()
                    .map(|m| ComplexMatrix::from_pairs(m))
                    .collect::<Result<Vec<_>>>()?;
                MeasurementSet::new(ops)
            }
        }
    }
}

/// The whole scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub metadata: Metadata,
    pub states: StatesSection,
    pub instrument: InstrumentSpec,
    pub cheating: CheatSpec,
    pub measurement: MeasurementSpec,
}

/// Runtime knobs applied during resolution.
#[derive(Debug, Clone, Copy)]
pub struct ResolveOptions {
    /// Overrides the metadata seed when set.
    pub seed: Option<u64>,
    /// Uniform factor on every tolerance.
    pub tol_scale: f64,
    pub d_max: usize,
}

impl Default for ResolveOptions {
    fn default() -> Self {
        ResolveOptions { seed: None, tol_scale: 1.0, d_max: DEFAULT_D_MAX }
    }
}

impl ScenarioSpec {
    pub fn from_toml_str(text: &str) -> Result<ScenarioSpec> {
        toml::from_str(text).map_err(|e| Error::Config(format!("scenario parse error: {e}")))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(format!("serialize error: {e}")))
    }

    /// The seed every derived component stream hangs off.
    pub fn effective_seed(&self, options: &ResolveOptions) -> u64 {
        options.seed.or(self.metadata.seed).unwrap_or(0)
    }

    /// Build the validated runtime scenario.
    pub fn resolve<R: Scalar>(&self, options: &ResolveOptions) -> Result<Scenario<R>> {
        let tol = Tolerances::<R>::default().scaled(R::from_config(options.tol_scale));
        let seed = self.effective_seed(options);

        let alice = self.states.alice.resolve(
            [regs::A, regs::A_OUT],
            seed,
            STREAM_ALICE,
            &tol,
        )?;
        let bob = self.states.bob.resolve([regs::B, regs::B_OUT], seed, STREAM_BOB, &tol)?;
        let in_dims = [self.states.alice.traveling_dim(), self.states.bob.traveling_dim()];
        let instrument = self.instrument.resolve::<R>(in_dims, seed)?;
        let cheating = self.cheating.resolve::<R>(instrument.label_count(), &tol)?;
        let measurement = self.measurement.resolve::<R>(self.states.alice.private_dim(), seed)?;

        let rounds = match (
            self.metadata.rounds_total,
            self.metadata.rounds_sacrificed,
            self.metadata.rounds_key,
        ) {
            (Some(total), Some(sacrificed), Some(key)) => {
                Some(RoundCounts { total, sacrificed, key })
            }
            (None, None, None) => None,
            _ => {
                return Err(Error::Config(
                    "declare all of rounds_total, rounds_sacrificed, rounds_key or none".into(),
                ))
            }
        };

        let scenario = Scenario {
            name: self.metadata.name.clone(),
            alice,
            bob,
            instrument,
            cheating,
            measurement,
            rounds,
            d_max: options.d_max,
            tol,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}
