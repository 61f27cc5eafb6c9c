use thiserror::Error;

use crate::kernel::KernelTable;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// The series did not reach the requested tolerance. The partial sum is
    /// kept so callers can still inspect or export it.
    #[error("successive approximations stopped after {iterations} terms with increment {last_increment:.3e}")]
    MaxIterExceeded {
        iterations: usize,
        last_increment: f64,
        partial: Box<KernelTable>,
    },

    #[error("quadrature failure: {0}")]
    Quadrature(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("singular boundary system: {0}")]
    SingularSystem(String),

    #[error("non-finite state at t = {time}: {detail}")]
    NonFinite { time: f64, detail: String },

    #[error("decay fit failed: {0}")]
    Fit(String),
}
