use thiserror::Error;

/// Errors raised by the cascade engine.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum CascadeError {
    /// Balance sheets and exposure matrix disagree on the number of banks.
    #[error("dimension mismatch: {balance_sheets} balance sheets but a {matrix}x{matrix} exposure matrix")]
    DimensionMismatch { balance_sheets: usize, matrix: usize },

    /// A vector argument has the wrong length.
    #[error("{what} has length {got}, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },

    /// The system has no banks.
    #[error("a financial system needs at least one bank")]
    Empty,

    /// A trigger shock asks for more than the bank holds, or has the wrong sign.
    #[error("infeasible shock at bank {bank}: {reason}")]
    InfeasibleShock { bank: usize, reason: String },

    /// A parameter is outside its domain.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// The iteration did not settle within the iteration budget.
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        last_iterate: Vec<f64>,
    },

    /// A balance-sheet audit failed after a step. Never expected; indicates a bug.
    #[error("audit failure on day {day} ({stage}): bank {bank} off by {residual:e}")]
    AuditFailure {
        day: usize,
        stage: &'static str,
        bank: usize,
        residual: f64,
    },

    /// Fixed-asset depth is undefined when the system holds no fixed assets.
    #[error("undefined market depth: total fixed assets are zero")]
    UndefinedDepth,

    /// Scenario generation could not satisfy a constraint.
    #[error("generation failed at bank {bank}: {constraint}")]
    Generation { bank: usize, constraint: String },
}

pub type Result<T> = std::result::Result<T, CascadeError>;
