use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of a function (e.g. `t` outside `[0, 1)`).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The Hermitian eigensolver failed. `sweeps` is the iteration budget that was exhausted,
    /// when the backend reports one.
    #[error("eigendecomposition of a {size}x{size} matrix did not converge ({detail})")]
    Numerical { size: usize, sweeps: Option<usize>, detail: String },

    /// Not enough data to fit or compare distributions; the remedy is more trials.
    #[error("fit error: {0}")]
    Fit(String),

    /// Exact interpolation of a lattice-point count disagreed with the extra guard node.
    #[error(
        "interpolation guard failed for {partition} at N = {node}: counted {counted}, interpolated {interpolated}"
    )]
    InterpolationGuard { partition: String, node: u64, counted: String, interpolated: String },

    /// A mathematical invariant that should hold by construction was violated.
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
