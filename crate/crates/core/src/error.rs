use std::path::PathBuf;

/// Broad failure class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad arguments, inconsistent inputs, malformed documents.
    Validation,
    /// NaN/Inf or a failed numerical check.
    Numerical,
    /// Filesystem or byte-level format trouble.
    Io,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    // --- numerics ---
    #[error("non-finite value produced by op `{op}`")]
    NonFinite { op: &'static str },

    #[error("gradient check ran a stochastic graph (dropout active); disable dropout first")]
    StochasticGraph,

    #[error("graph is nondeterministic: two forward passes disagree ({first} vs {second})")]
    NondeterministicGraph { first: f64, second: f64 },

    #[error("optimizer step without fresh gradients; run forward_backward first")]
    MissingGradients,

    #[error("gradient check failed for `{param}`: rel err {rel_err:.3e} at component {index} (tol {tol:.1e})")]
    GradCheckFailed {
        param: String,
        index: usize,
        rel_err: f64,
        tol: f64,
    },

    // --- validation ---
    #[error("{0}")]
    InvalidConfig(String),

    #[error("{context}: length {len} does not match expected {expected}")]
    LengthMismatch {
        context: &'static str,
        len: usize,
        expected: usize,
    },

    #[error("annotation `{video_id}`: {message}")]
    BadAnnotation { video_id: String, message: String },

    #[error("manifest: {0}")]
    BadManifest(String),

    #[error("checkpoint hyperparameters do not match: {0}")]
    HyperparamMismatch(String),

    #[error("tensor `{name}` in checkpoint has shape {found:?}, model expects {expected:?}")]
    CheckpointShape {
        name: String,
        found: Vec<usize>,
        expected: Vec<usize>,
    },

    #[error("no scores for video `{0}`")]
    MissingScores(String),

    #[error("segment count {requested} exceeds {frames} frames")]
    TooManySegments { requested: usize, frames: usize },

    // --- byte formats / filesystem ---
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),

    #[error("unsupported element dtype tag {0}")]
    UnsupportedDtype(u8),

    #[error("truncated file: expected {expected} bytes, found {actual}")]
    Truncated { expected: u64, actual: u64 },

    #[error("declared size overflows: {0} rows x {1} cols")]
    SizeOverflow(u64, u64),

    #[error("malformed document: {0}")]
    Parse(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        use Error::*;
        match self {
            NonFinite { .. }
            | StochasticGraph
            | NondeterministicGraph { .. }
            | MissingGradients
            | GradCheckFailed { .. } => ErrorKind::Numerical,
            File { .. }
            | BadMagic { .. }
            | UnsupportedVersion(_)
            | UnsupportedDtype(_)
            | Truncated { .. }
            | SizeOverflow(..)
            | Parse(_) => ErrorKind::Io,
            _ => ErrorKind::Validation,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn file_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
    let path = path.into();
    move |source| Error::File { path, source }
}
