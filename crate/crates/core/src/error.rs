use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max asymmetry {0:.3e})")]
    NonHermitianInput(f64),

    #[error("operator has a negative eigenvalue {0:.3e}")]
    NegativeEigenvalue(f64),

    #[error("not a density operator: {0}")]
    InvalidDensity(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite entry in input")]
    NonFinite,

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("key map undefined for kept event (x={x}, a={a}, y={y})")]
    IncompleteKeyMap { x: usize, a: usize, y: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("detector efficiency {0} outside [0, 1]")]
    EfficiencyOutOfRange(f64),

    #[error("QBER {0} outside [0, 1/2]")]
    InvalidQber(f64),

    #[error("ill-formed cone program: {0}")]
    IllFormedProgram(String),

    #[error("constraint set has no identity constraint")]
    IdentityConstraintMissing,

    #[error("perturbation {eps:.3e} outside (0, {max:.3e}]")]
    PerturbationOutOfRange { eps: f64, max: f64 },

    #[error("scenario constraints admit no density operator")]
    InfeasibleScenario,

    #[error("solver did not converge: {0}")]
    SolverNotConverged(String),

    #[error("CHSH value {0} outside [2, 2*sqrt(2)]")]
    SOutOfRange(f64),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("too few rounds: n = {n}, need at least {required}")]
    TooFewRounds { n: u64, required: u64 },

    #[error("decoy observations are inconsistent with any channel")]
    InfeasibleObservations,
}

pub type Result<T> = std::result::Result<T, Error>;
