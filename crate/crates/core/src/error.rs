use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("qubit count {0} outside supported range 1..={max}", max = crate::simulator::MAX_QUBITS)]
    Size(usize),
    #[error("qubit index {index} out of range for {n_qubits} qubits")]
    Index { index: usize, n_qubits: usize },
    #[error("control and target are both qubit {0}")]
    SameQubit(usize),
    #[error("arity mismatch: expected {expected}, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("label {label} out of range for {n_classes} classes")]
    Label { label: usize, n_classes: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("empty batch")]
    EmptyBatch,
    #[error("invalid config: {0}")]
    Config(String),
    #[error("invalid dataset: {0}")]
    Dataset(String),
}
