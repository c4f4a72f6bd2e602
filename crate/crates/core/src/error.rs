use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("system has {n_spins} spins, above the configured maximum of {max}")]
    TooManySpins { n_spins: usize, max: usize },

    #[error("a spin system needs at least one spin")]
    NoSpins,

    #[error("expected {expected} Zeeman frequencies, got {got}")]
    FrequencyCount { expected: usize, got: usize },

    #[error("coupling ({i}, {j}) refers to a spin outside 0..{n_spins}")]
    CouplingIndex { i: usize, j: usize, n_spins: usize },

    #[error("coupling ({0}, {0}) couples a spin to itself")]
    SelfCoupling(usize),

    #[error("couplings ({i}, {j}) and ({j}, {i}) disagree: {a} vs {b}")]
    AsymmetricCoupling { i: usize, j: usize, a: f64, b: f64 },

    #[error("unknown coupling form {0:?} (expected ising-zz, heisenberg-xxx or secular-dipolar)")]
    UnknownCouplingForm(String),

    #[error("matrix is not Hermitian: |H[{row},{col}] - conj(H[{col},{row}])| = {deviation:e}")]
    NotHermitian { row: usize, col: usize, deviation: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("state norm {0} is not 1")]
    NotNormalized(f64),

    #[error("cannot normalize a zero vector")]
    ZeroState,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("rate_from_interaction needs a rate_coupling factor")]
    MissingRateCoupling,

    #[error("occupation {0} is not a non-negative integer")]
    NonIntegerOccupation(f64),

    #[error("target energy {target} outside the open interval ({low}, {high})")]
    EnergyOutOfRange { target: f64, low: f64, high: f64 },

    #[error("no integer occupancy profile reaches energy {0}")]
    NoFeasibleProfile(f64),

    #[error("only {available} (t, t+T) pairs for lag {lag}; at least {required} needed")]
    TrajectoryTooShort {
        lag: f64,
        available: usize,
        required: usize,
    },

    #[error("unknown observable {0:?}")]
    UnknownObservable(String),

    #[error("invalid initial state: {0}")]
    InvalidInitialState(String),
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
