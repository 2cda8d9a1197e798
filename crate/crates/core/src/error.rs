use thiserror::Error;

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("enumeration needs {needed} items, budget is {budget}")]
    OracleScale { needed: u128, budget: u128 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("centering mismatch: bound {bound} is centered {expected}, curve is centered {found}")]
    CenteringMismatch {
        bound: String,
        expected: String,
        found: String,
    },

    #[error("no sign change of psi(r) - r on [{lo}, {hi}]")]
    Bracket { lo: f64, hi: f64 },

    #[error("iteration did not converge after {sweeps} steps (residual {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error(
        "Bernstein condition fails for hypothesis {hypothesis}: E f = 0 but E f^2 = {second_moment:e}"
    )]
    BernsteinViolated {
        hypothesis: usize,
        second_moment: f64,
    },

    #[error("malformed input: {0}")]
    Input(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
