use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A probability row of the model does not sum to one.
    #[error("invalid {row}: sums to {sum} (deviation {deviation:.3e})")]
    RowSum { row: String, sum: f64, deviation: f64 },

    #[error("horizon {horizon} too small: evaluation support needs {required} stages")]
    Truncation { horizon: usize, required: String },

    #[error("node budget exceeded: visited more than {budget} nodes")]
    BudgetExceeded { budget: usize },

    #[error("enumeration of {count} candidates exceeds cap {cap}")]
    EnumerationCap { count: u128, cap: u128 },

    #[error("singular linear system for recurrent class {class}")]
    SingularSystem { class: usize },

    #[error("strategy undefined at belief {belief:?} (nearest support point at L1 distance {distance:.3e})")]
    OffSupport { belief: Vec<f64>, distance: f64 },
}

impl Error {
    /// True for errors caused by a budget, cap or horizon limit rather than bad input.
    pub fn is_budget(&self) -> bool {
        matches!(
            self,
            Error::Truncation { .. } | Error::BudgetExceeded { .. } | Error::EnumerationCap { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
