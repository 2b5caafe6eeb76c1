//! Crate-wide error type.

/// Errors raised while building or evaluating a scenario.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// Register-name or register-ordering problem.
    #[error("layout error: {0}")]
    Layout(String),

    /// Matrix shapes or total dimensions do not fit.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// A numerical tolerance was exceeded (non-Hermitian input, lost
    /// probability mass, failed identity).
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A state failed density-matrix validation.
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// A Kraus map, instrument, or classical channel failed validation.
    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    /// An instrument application lost or created probability mass.
    #[error("instrument error: {0}")]
    Instrument(String),

    /// A POVM failed validation or does not fit the measured register.
    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),

    /// Scenario description problems (parse errors, unresolved presets,
    /// cross-component mismatches).
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
