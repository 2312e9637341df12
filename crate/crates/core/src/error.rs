use thiserror::Error;

/// Errors raised by mesh handling, discretisation and solves.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("mesh generation failed at cell {cell}: {reason}")]
    GenerationFailure { cell: usize, reason: String },

    #[error("mesh parse error at {location}: {reason}")]
    Parse { location: String, reason: String },

    #[error("degenerate cell {cell}: {reason}")]
    DegenerateCell { cell: usize, reason: String },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("polynomial decomposition failure on element {element}: {reason}")]
    Decomposition { element: usize, reason: String },

    #[error("invalid coefficients: {0}")]
    InvalidCoefficients(String),

    #[error("incompatible data: {0}")]
    Compatibility(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("static condensation failed on element {element}")]
    Condensation { element: usize },

    #[error("linear solver failed: {reason} (regime census: {census})")]
    Solver { reason: String, census: String },

    #[error("degenerate error measure: {0}")]
    DegenerateCase(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
