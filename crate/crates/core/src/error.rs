use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("model order m must be >= 1, got {0}")]
    InvalidOrder(i64),

    #[error(
        "branch index j = {j} is outside [1, {max}] (1 - omega_j would vanish or is undefined)"
    )]
    InvalidBranch { j: usize, max: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("polynomial division left remainder {remainder:.3e} (numerator scale {scale:.3e})")]
    RemainderNonzero { remainder: f64, scale: f64 },

    #[error("resonant factor c(n={n}, alpha={alpha}, j={j}) = {modulus:.3e}")]
    ResonantFactor {
        n: usize,
        alpha: usize,
        j: usize,
        modulus: f64,
    },

    #[error("diagonal system at alpha = {alpha} is singular (condition estimate {condition:.3e})")]
    SingularDiagonalSystem { alpha: usize, condition: f64 },

    #[error("resonant denominator at (n={n}, j={j}; r={r}, l={l}): modulus {modulus:.3e}")]
    ResonantDenominator {
        n: usize,
        j: usize,
        r: usize,
        l: usize,
        modulus: f64,
    },

    #[error("finite section is singular at t = {t} (condition estimate {condition:.3e})")]
    SingularSection { t: String, condition: f64 },

    #[error("winding number inconclusive near z = {re} + {im}i: phase step exceeded pi/2 after refinement")]
    InconclusiveWinding { re: f64, im: f64 },

    #[error("evaluation point is within tolerance of pole (n={n}, j={j})")]
    NearPole { n: usize, j: usize },

    #[error("shift parameter must satisfy Im a >= 0, got Im a = {0}")]
    LowerHalfPlane(f64),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
