//! Relay-based QKD simulator and secret-key-rate calculator.
//!
//! Two honest parties each keep half of an entangled pair and send the
//! other half (A′, B′) to an untrusted relay. The relay applies a quantum
//! instrument {T_l}, may lie about the outcome through a classical channel
//! p(l′|l), and announces l′. This crate builds the resulting conditional
//! states, evaluates every entropic rate quantity of that scenario
//! (R, R′, R*, Δ, γ, conditional coherent information), and certifies the
//! bound R* ≥ I(A⟩B|L′) + Δ on concrete and randomized scenarios.
//!
//! Module map:
//! - [`tensorspace`] — register-aware dense complex-matrix algebra
//!   (tensor products, partial traces, permutations, Hermitian spectra);
//! - [`states`] — density matrices, purifications, canonical state families;
//! - [`channels`] — Kraus maps, quantum instruments, POVMs, classical
//!   cheating channels, labeled ensembles;
//! - [`infotheory`] — von Neumann entropy, (conditional) mutual information,
//!   Holevo quantities, CQ embeddings, inequality self-checks;
//! - [`protocol`] — one full scenario: resources → relay → cheating →
//!   Alice's measurement → all rates and the theorem certificate;
//! - [`attacks`] — relay/cheating preset library and the randomized search
//!   for Δ > 0 with vanishing conditional coherent information;
//! - [`scenario`] — the serializable scenario description consumed by the
//!   CLI and emitted by the search.
//!
//! Everything numeric is generic over the real scalar [`Scalar`]
//! (`f64` or `f32`); the aliases below pin the common `f64` instantiations.

pub mod attacks;
pub mod channels;
pub mod error;
pub mod infotheory;
pub mod protocol;
pub mod scalar;
pub mod scenario;
pub mod states;
pub mod tensorspace;

pub use error::{Error, Result};
pub use scalar::{Scalar, Tolerances};

/// Default real scalar used by the CLI and the concrete aliases.
pub type Real = f64;

pub type ComplexMatrix64 = tensorspace::ComplexMatrix<f64>;
pub type ComplexMatrix32 = tensorspace::ComplexMatrix<f32>;
pub type DensityMatrix64 = states::DensityMatrix<f64>;
pub type DensityMatrix32 = states::DensityMatrix<f32>;
pub type PureState64 = states::PureState<f64>;
pub type Instrument64 = channels::QuantumInstrument<f64>;
pub type Scenario64 = protocol::Scenario<f64>;
