use std::path::PathBuf;

/// Unified error type for the crate.
///
/// The CLI maps variants to exit codes: usage errors are caught before any of
/// these are constructed, data/structure/contract problems exit 2, numeric
/// failures exit 3.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Filesystem failure, tagged with the path involved.
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A line of an input file could not be parsed. `line` is 1-based.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Well-formed input that violates the data contract (bad bbox, unknown
    /// label, wrong vector width, ...).
    #[error("data error: {0}")]
    Data(String),

    /// Referential/structural violation: dangling parent id, duplicate
    /// segment id, cycle in parent links.
    #[error("structural error: {0}")]
    Structure(String),

    /// An API precondition was violated (dimension mismatch, odd encoding
    /// width, asymmetric adjacency, zero epochs, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Training produced a non-finite loss or gradient.
    #[error("numeric failure at epoch {epoch}, page {page_id}: {msg}")]
    Numeric {
        epoch: usize,
        page_id: String,
        msg: String,
    },

    /// A fixed capacity was exceeded (e.g. more segments than positional
    /// embedding slots).
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// A required model checkpoint was not found in the model directory.
    #[error("missing checkpoint: {0}")]
    MissingCheckpoint(String),
}

impl Error {
    /// Convenience constructor for [`Error::Io`].
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
