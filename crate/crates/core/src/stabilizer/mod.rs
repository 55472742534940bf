//! Signed Pauli algebra and mixed-state stabilizer groups.

mod clifford;
mod pauli;
mod state;

pub use clifford::CliffordAction;
pub use pauli::{Letter, PauliOperator, Sign};
pub use state::{LocalOp, Measurement, Membership, StabilizerState};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StabilizerError {
    #[error("operator acts on {found} qubits, expected {expected}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("result is not Hermitian")]
    NonHermitian,
    #[error("cannot measure the identity")]
    IdentityOperator,
    #[error("cannot parse Pauli string {0:?}")]
    Parse(String),
    #[error("invalid Clifford: {0}")]
    InvalidClifford(String),
    #[error("invalid generators: {0}")]
    InvalidGenerators(String),
    /// A forced outcome contradicts a deterministic one.
    #[error("forced outcome contradicts deterministic value {deterministic:?}")]
    Incompatible { deterministic: Sign },
}
