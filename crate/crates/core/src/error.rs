use thiserror::Error;

/// Errors raised by the simulator library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not unitary (max deviation {0:e})")]
    NotUnitary(f64),

    #[error("density matrix invariant violated: {0}")]
    InvalidState(String),

    #[error("invalid slot selection: {0}")]
    InvalidSlots(String),

    #[error("Kraus set is not complete (max deviation {0:e})")]
    Incomplete(f64),

    #[error("readout basis is not orthonormal (max deviation {0:e})")]
    NonOrthonormalBasis(f64),

    #[error("outcome {label} has vanishing probability {probability:e}")]
    ZeroProbability { label: usize, probability: f64 },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("register of {needed} qubits exceeds the cap of {cap}")]
    RegisterTooLarge { needed: usize, cap: usize },

    #[error("chain is non-contracting at this angle: {0}")]
    NonContracting(String),

    #[error("closed form not applicable: {0}")]
    ClosedFormInapplicable(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("branch enumeration limit: {0}")]
    BranchLimit(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
