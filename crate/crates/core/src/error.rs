use thiserror::Error;

/// Errors raised by the clustering library.
#[derive(Debug, Error)]
pub enum Error {
    /// A data row has (numerically) zero norm and cannot be projected onto the sphere.
    #[error("row {0} is the zero vector")]
    ZeroRow(usize),

    /// An angle set has fewer than two samples, so no variance can be estimated.
    #[error("too few angles to estimate moments: {count} (need at least 2)")]
    TooFewAngles { count: u64 },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// Argument outside the domain of a special function or density.
    #[error("domain error: {0}")]
    Domain(String),

    /// The separation parameters give psi <= 1, so no finite sample count suffices.
    #[error("no finite sample count satisfies the separation condition (psi = {psi})")]
    NoFiniteT { psi: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
