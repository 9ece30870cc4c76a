use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("width mismatch: {left} vs {right}")]
    WidthMismatch { left: usize, right: usize },

    #[error("invalid width {0}: must be in 1..={max}", max = crate::pauli::MAX_WIDTH)]
    InvalidWidth(usize),

    #[error("invalid Pauli symbol {0}")]
    InvalidSymbol(u8),

    #[error("quaternary index {index} out of range for width {width}")]
    IndexOutOfRange { index: u64, width: usize },

    #[error("site {site} out of range 1..={width}")]
    SiteOutOfRange { site: usize, width: usize },

    #[error("qubit {qubit} out of range for {num_qubits} qubits")]
    QubitOutOfRange { qubit: usize, num_qubits: usize },

    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("operator is not normalized: total weight {0}")]
    NotNormalized(f64),

    #[error("dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("system of {requested} {what} exceeds the cap of {cap}")]
    TooLarge {
        what: &'static str,
        requested: usize,
        cap: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("scale factors must be distinct: {0} appears twice")]
    DuplicateScale(f64),

    #[error("numerical invariant violated: {0}")]
    Invariant(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
