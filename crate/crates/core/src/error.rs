use std::path::PathBuf;

use crate::search::BitextMap;

/// Errors raised anywhere in the mapping pipeline.
#[derive(Debug, thiserror::Error)]
pub enum SimrError {
    #[error("cannot fit a line: all points share the same x coordinate")]
    DegenerateFit,

    #[error("text is empty")]
    EmptyText,

    #[error("no chains to choose from")]
    EmptyChainSet,

    /// No chain was accepted anywhere in the trace. The degenerate
    /// origin-to-terminus map is still returned so callers can use it.
    #[error("matching signal too sparse: no chain was accepted")]
    SignalTooSparse(Box<BitextMap>),

    #[error("segment count mismatch: {x} x-segments vs {y} y-segments")]
    SegmentCountMismatch { x: usize, y: usize },

    #[error("concatenated {side}-segments do not reproduce the {side} text")]
    TextReconstructionMismatch { side: char },

    #[error("gold standard contains no points")]
    EmptyGold,

    #[error("invalid gold standard: {0}")]
    InvalidGold(String),

    #[error("invalid annealing bounds: {0}")]
    InvalidBounds(String),

    #[error("invalid distortion spec: {0}")]
    InvalidSpec(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("cannot read {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = SimrError> = std::result::Result<T, E>;

impl SimrError {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        SimrError::Parse {
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SimrError::Io {
            path: path.into(),
            source,
        }
    }
}

/// Reads a whole UTF-8 file, attaching the path to any failure.
pub fn read_to_string(path: impl AsRef<std::path::Path>) -> Result<String> {
    let path = path.as_ref();
    std::fs::read_to_string(path).map_err(|e| SimrError::io(path, e))
}
