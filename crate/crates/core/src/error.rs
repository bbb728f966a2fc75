use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// The caller violated an operation's precondition.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("length mismatch for {what}: expected {expected}, got {got}")]
    Length { what: &'static str, expected: usize, got: usize },

    #[error("dense density matrix over {requested} qubits exceeds the {limit}-qubit guard")]
    DenseGuard { requested: usize, limit: usize },

    #[error("brute-force open requires seed length s <= {limit}, got {got}")]
    OpenGuard { limit: u32, got: u32 },

    #[error("witness is not a Hamiltonian cycle of the instance: {0}")]
    InvalidWitness(String),

    #[error("graph file: {0}")]
    Graph(String),

    #[error("transcript: {0}")]
    Transcript(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Length { what, expected, got })
    }
}
