use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("orbit of {start} hits the partition boundary at iterate {iterate} (value {value})")]
    OrbitHitsBoundary {
        start: f64,
        iterate: usize,
        value: f64,
    },

    #[error("truncation tail mass {tail:.3e} exceeds bound {bound:.3e}")]
    TruncationTailTooLarge { tail: f64, bound: f64 },

    #[error("words have different lengths ({left} vs {right})")]
    WordLengthMismatch { left: usize, right: usize },

    #[error("ledger incomplete: {0} missing")]
    LedgerIncomplete(&'static str),

    #[error("no UNI witness available")]
    NoUniWitness,

    #[error("power iteration did not converge after {iterations} iterations (increment {increment:.3e})")]
    NoConvergence { iterations: usize, increment: f64 },

    #[error("spectral data prepared at sigma={found} but Re s={expected}")]
    SpectralMismatch { expected: f64, found: f64 },

    #[error("norm curve at b={b} reached the noise floor before {points} fit points")]
    InsufficientDecayWindow { b: f64, points: usize },

    #[error("neither case inequality holds near y0={y0}")]
    NoCaseWins { y0: f64 },

    #[error("chi slope {slope:.4e} exceeds bound {bound:.4e}")]
    ChiSlopeExceeded { slope: f64, bound: f64 },

    #[error("cone escape at step {step}: {condition}")]
    ConeEscape { step: usize, condition: String },

    #[error("log-Hölder seminorm {seminorm:.4e} exceeds {bound:.4e}")]
    RegularityViolated { seminorm: f64, bound: f64 },

    #[error("series not settled: last term {last_term:.3e} above {tolerance:.3e}")]
    SeriesNotSettled { last_term: f64, tolerance: f64 },

    #[error("fit window has {points} points, need at least 5")]
    WindowTooShort { points: usize },

    #[error("fiber average not converged: increment {increment:.3e}")]
    NotConverged { increment: f64 },

    #[error("fiber map is not contracting (measured gamma0 = {gamma0:.4})")]
    NotContracting { gamma0: f64 },

    #[error("unknown model '{0}'")]
    UnknownModel(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("invalid model definition: {0}")]
    InvalidSpec(String),
}

pub type Result<T> = std::result::Result<T, Error>;
