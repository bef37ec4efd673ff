use thiserror::Error;

/// Errors produced by construction, solving, and simulation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid `{label}` must be non-empty and strictly increasing")]
    InvalidGrid { label: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("kernel row ({state}, {action}) sums to {sum:.17}, expected 1 within 1e-12")]
    RowNotNormalized {
        state: usize,
        action: usize,
        sum: f64,
    },

    #[error("negative probability in {context}")]
    NegativeProbability { context: String },

    #[error("discount factor {0} outside [0, 1)")]
    InvalidDiscount(f64),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("{what} did not converge within {max_iter} iterations (residual {achieved:.3e}, tol {tol:.3e})")]
    NoConvergence {
        what: String,
        max_iter: usize,
        achieved: f64,
        tol: f64,
    },

    #[error("weighted KL divergence is infinite for every parameter on the support of m")]
    AllInfiniteKl,

    #[error("zero posterior likelihood for observation (s={state}, x={action}, s'={next_state})")]
    ZeroLikelihood {
        state: usize,
        action: usize,
        next_state: usize,
    },

    #[error("belief-space dynamic programming supports at most 3 models, got {0}")]
    BeliefDpTooLarge(usize),

    #[error("infeasible specification: {0}")]
    Infeasible(String),

    #[error("regularity check failed: {0} (pass force=true to solve anyway)")]
    Regularity(String),

    #[error("no Berk-Nash equilibrium found on the parameter grid")]
    NoEquilibrium,

    #[error("parameter {0} outside the model grid range")]
    ThetaOutOfRange(f64),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
