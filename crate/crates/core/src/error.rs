use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// The update sequence violates the dynamic-stream contract.
    #[error("malformed stream: {0}")]
    MalformedStream(String),

    #[error("unsupported weight class: {0}")]
    UnsupportedWeightClass(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A size cap or work budget would be exceeded. Carries the report shown to the user.
    #[error("refused: {0}")]
    Refused(String),

    #[error("sketch parameters or seeds do not match: {0}")]
    SketchMismatch(String),

    #[error("unsupported query: {0}")]
    UnsupportedQuery(String),

    /// An oracle candidate broke one of the multiplicative-weights admissibility conditions.
    #[error("admissibility violated at iteration {iteration}: {detail}")]
    Admissibility { iteration: usize, detail: String },

    #[error("width violation at iteration {iteration}: |A_i y - b_i| = {excess} exceeds rho = {rho}")]
    WidthViolation {
        iteration: usize,
        excess: f64,
        rho: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn is_refusal(&self) -> bool {
        matches!(self, Error::Refused(_))
    }

    pub fn is_malformed_input(&self) -> bool {
        matches!(
            self,
            Error::MalformedStream(_) | Error::InvalidInput(_) | Error::SketchMismatch(_)
        )
    }
}
