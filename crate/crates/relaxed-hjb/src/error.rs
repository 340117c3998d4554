use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller supplied an argument outside the documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The requested operation is not defined for this generator family.
    #[error("unsupported for this generator: {0}")]
    Capability(String),

    /// A coefficient bundle violates ellipticity or sign assumptions.
    #[error("invalid model: {0}")]
    Model(String),

    /// A perturbed model failed re-validation.
    #[error("invalid perturbation: {0}")]
    Perturbation(String),

    /// The finite-difference scheme cannot be assembled monotonically.
    #[error("discretization failure: {0}")]
    Discretization(String),

    /// Policy iteration did not reach the residual tolerance.
    #[error("solver did not converge in {iterations} iterations (last residuals: {history:?})")]
    NonConvergence {
        iterations: usize,
        history: Vec<f64>,
    },

    /// A matrix expected to be positive semi-definite is not.
    #[error("matrix is not positive semi-definite: {0}")]
    NotPsd(String),

    /// A simulated path exceeded the hard step cap without exiting.
    #[error("path {path} exceeded the step cap of {cap} without exiting the domain")]
    StepCap { path: usize, cap: usize },

    /// Config file could not be parsed.
    #[error("config parse error at line {line}: {message}")]
    ConfigParse { line: usize, message: String },

    /// Config parsed but failed validation.
    #[error("config validation error for `{key}`: {message}")]
    ConfigValidation { key: String, message: String },

    /// Expression parse failure (coefficient formulas in configs).
    #[error("expression error in `{expr}`: {message}")]
    Expr { expr: String, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
