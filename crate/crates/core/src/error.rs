use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown outcome label `{0}`")]
    UnknownOutcome(String),

    #[error("outcome impossible: probability {probability:e} is below tolerance")]
    OutcomeImpossible { probability: f64 },

    #[error("state escaped: total outcome probability {mass:e} is below tolerance")]
    StateEscaped { mass: f64 },

    #[error("algebra is not unital")]
    NotUnital,

    #[error("degenerate algebra element after {attempts} draws: {diagnostics}")]
    DegenerateAlgebra { attempts: usize, diagnostics: String },

    #[error("no separability assumption holds (A1 {a1:e}, A2 {a2:e}, A3 {a3:e}, A4 {a4:e})")]
    NoAssumptionHolds { a1: f64, a2: f64, a3: f64, a4: f64 },

    #[error("enumeration needs {required} sequences, cap is {cap}")]
    CapExceeded { required: u128, cap: u128 },

    #[error("model failed validation: {0}")]
    Validation(String),

    #[error("malformed model file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn ensure_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
