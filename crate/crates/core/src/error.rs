use thiserror::Error;

use crate::qstate::MAX_QUBITS;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("register of {0} qubits exceeds the {MAX_QUBITS}-qubit limit")]
    TooManyQubits(usize),

    #[error("qubit index {index} is outside a {n_qubits}-qubit register")]
    BadTarget { index: usize, n_qubits: usize },

    #[error("qubit {0} appears more than once in the target list")]
    DuplicateTarget(usize),

    #[error("operator acts on {operator} qubits but {targets} targets were given")]
    ArityMismatch { operator: usize, targets: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not unitary (max deviation {0:e})")]
    NotUnitary(f64),

    #[error("Kraus set is not trace preserving (max deviation of sum K^dag K from I is {0:e})")]
    NotTracePreserving(f64),

    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("matrix is not a valid density matrix: {0}")]
    Unphysical(String),

    #[error("partial trace must keep at least one qubit")]
    EmptyKeep,

    #[error("sampled measurement branch has probability {0:e}, below the 1e-12 underflow floor")]
    ProbabilityUnderflow(f64),

    #[error("`{name}` = {value} violates invariant {invariant}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        invariant: &'static str,
    },

    #[error("memory qubit {0} is not in the |+X> fiducial state")]
    MemoryNotInitialized(usize),

    #[error("register layout is malformed: {0}")]
    MalformedRegister(String),

    #[error("rate is undefined: no heralded events")]
    NoHeraldedEvents,

    #[error("{0}")]
    Invalid(String),
}

/// Checks `lo <= value <= hi` and names the violated invariant otherwise.
pub(crate) fn check_closed(
    name: &'static str,
    value: f64,
    lo: f64,
    hi: f64,
    invariant: &'static str,
) -> Result<()> {
    if value.is_finite() && value >= lo && value <= hi {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            invariant,
        })
    }
}
