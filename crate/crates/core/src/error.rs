use sigcert_conic::{SolverError, Status};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("invalid behavior: {0}")]
    InvalidBehavior(String),
    #[error("invalid signalling budget: {0}")]
    InvalidBudget(String),
    #[error("cell (x={x}, y={y}) has no joint click events")]
    EmptyCell { x: usize, y: usize },
    #[error("full-correlation expressions need two outcomes per party (got nA={n_a}, nB={n_b})")]
    NotDichotomic { n_a: usize, n_b: usize },
    #[error("enumeration too large: {count} exceeds cap {cap}")]
    TooLarge { count: u128, cap: u64 },
    #[error("solver failure ({status}): {detail}")]
    SolverFailure { status: Status, detail: String },
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid POVM: {0}")]
    InvalidPovm(String),
    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("invalid assemblage: {0}")]
    InvalidAssemblage(String),
    #[error("gamma {gamma} outside [1/mA, 1] = [{lower}, 1]")]
    InvalidGamma { gamma: f64, lower: f64 },
    #[error("invalid arguments: {0}")]
    InvalidArgs(String),
    #[error("no joint click events possible for (x={x}, y={y})")]
    AllNoClick { x: usize, y: usize },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
