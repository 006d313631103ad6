use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// The Fock cutoff keeps less than `1 - tol` of a distribution's mass.
    #[error(
        "truncation too small: mean {mean} at cutoff {cutoff} retains {retained:.3e} \
         of the mass (need at least 1 - {tol:e})"
    )]
    Truncation { mean: f64, cutoff: usize, retained: f64, tol: f64 },

    #[error("level {level} is outside the truncated space 0..={cutoff}")]
    OutOfRange { level: usize, cutoff: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The carrier-RWA Hamiltonian needs ω₀ = ω exactly.
    #[error("carrier resonance violated: omega0 = {omega0} but omega = {omega}")]
    ResonanceViolation { omega0: f64, omega: f64 },

    /// η²(1+2m)/2 reached 1, so the second-order cosine expansion no longer
    /// gives a positive effective coupling.
    #[error(
        "Lamb-Dicke expansion invalid: eta^2 (1 + 2 m)/2 = {value:.4} >= 1 at m = {m}; \
         the second-order expansion of cos(eta (a + a^dag)) requires eta^2 m to stay small"
    )]
    ExpansionInvalid { value: f64, m: f64 },

    /// A collapse or revival scale that is infinite for these parameters.
    #[error("no {what}: the timescale is infinite for these parameters ({reason})")]
    Unbounded { what: &'static str, reason: &'static str },

    #[error("operator is not Hermitian: max |H - H^dag| = {deviation:e}")]
    NotHermitian { deviation: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("time grids differ: {0}")]
    GridMismatch(String),

    #[error("window of {window} gt holds {samples} samples, need at least {required}")]
    Resolution { window: f64, samples: usize, required: usize },

    #[error("numerical integrity check failed: {0}")]
    NumericalIntegrity(String),
}
