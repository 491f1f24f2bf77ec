use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("covariance matrix is singular or not positive definite: {0}")]
    Singular(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("degenerate soft group sizes (treated {treated:.3e}, control {control:.3e})")]
    DegenerateGroups { treated: f64, control: f64 },

    #[error("{method} exhausted its budget of {budget} (best M = {best_m:.6})")]
    BudgetExhausted {
        method: &'static str,
        budget: u64,
        best_m: f64,
    },

    #[error("latent scores became non-finite at iteration {iteration}")]
    Diverged { iteration: u64 },

    #[error("no grid point accepted; largest p-value was {max_p:.4}")]
    EmptyInterval { max_p: f64 },

    #[error("reference draw {index} failed: {source}")]
    ReferenceDraw {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: u64,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures that come from a sampler running out of budget or
    /// diverging, which studies record as censored replications.
    pub fn is_censoring(&self) -> bool {
        match self {
            Error::BudgetExhausted { .. } | Error::Diverged { .. } => true,
            Error::ReferenceDraw { source, .. } => source.is_censoring(),
            _ => false,
        }
    }
}
