use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("qubit {qubit} out of range for {num_qubits} qubits")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },

    #[error("control qubit {0} equals target")]
    ControlEqualsTarget(usize),

    #[error("matrix is not unitary (deviation {0:e})")]
    NotUnitary(f64),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("size mismatch: expected {expected} qubits, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("invalid shard configuration: {0}")]
    InvalidShardConfig(String),

    #[error("{num_qubits} qubits exceeds the full-simulation limit of {max}")]
    TooManyQubits { num_qubits: usize, max: usize },

    #[error("basis index {index} out of range for {num_qubits} qubits")]
    IndexOutOfRange { index: usize, num_qubits: usize },

    #[error("PERMUTE instruction at position {0} is not allowed here")]
    UnexpectedPermute(usize),

    #[error("vertex {0} is not ready")]
    NotReady(usize),

    #[error("invalid random circuit spec: {0}")]
    InvalidSpec(String),

    #[error("cost table: {0}")]
    CostTable(String),

    #[error("invalid experiment: {0}")]
    InvalidExperiment(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
