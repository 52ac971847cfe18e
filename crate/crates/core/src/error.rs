use alloc::string::String;

/// Errors reported by the decomposition library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Tensor or matrix dimensions that do not fit together.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A mode index outside `0..ndims`.
    #[error("mode {mode} out of range for a {ndims}-way tensor")]
    ModeOutOfRange {
        /// Requested mode (0-based).
        mode: usize,
        /// Number of tensor modes.
        ndims: usize,
    },

    /// An argument outside the domain of a density or special function.
    #[error("invalid domain: {0}")]
    Domain(String),

    /// Inconsistent fit or generator configuration.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A numerical breakdown inside an update, with the sweep it happened in.
    #[error("numerical failure at iteration {iteration}: {detail}")]
    Numerical {
        /// Sweep counter (1-based, 0 during initialization).
        iteration: usize,
        /// What broke.
        detail: String,
    },
}

/// Shorthand result type.
pub type Result<T> = core::result::Result<T, Error>;
