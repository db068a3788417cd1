use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error in {op}: expected {expected}, found {found}")]
    Shape {
        op: &'static str,
        expected: String,
        found: String,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: unknown image format (magic {magic:?})")]
    UnknownMagic { path: PathBuf, magic: Vec<u8> },

    #[error("{path}: malformed PGM header: {reason}")]
    MalformedHeader { path: PathBuf, reason: String },

    #[error("{path}: unsupported maxval {maxval}, only 255 is accepted")]
    UnsupportedMaxval { path: PathBuf, maxval: u32 },

    #[error("{path}: unsupported PNG ({reason}); only 8-bit grayscale is accepted")]
    UnsupportedPng { path: PathBuf, reason: String },

    #[error("{path}: expected {expected} pixels, found {found}")]
    PixelCount {
        path: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error("unpaired dataset files: {}", .orphans.join(", "))]
    Pairing { orphans: Vec<String> },

    #[error("dataset is empty: {0}")]
    EmptyDataset(String),

    #[error("checkpoint: bad magic {:?}, expected \"UNET\"", String::from_utf8_lossy(.0))]
    BadMagic([u8; 4]),

    #[error("checkpoint: unsupported version {0}")]
    UnsupportedVersion(u32),

    #[error("checkpoint: truncated {what}{}", tensor_suffix(*.tensor_index))]
    Truncated {
        what: &'static str,
        tensor_index: Option<usize>,
    },

    #[error("checkpoint: tensor {tensor_index} dims {dims:?} overflow")]
    DimOverflow { tensor_index: usize, dims: Vec<u32> },

    #[error("checkpoint: tensor {tensor_index} has dims {found:?}, configuration requires {expected:?}")]
    TensorShape {
        tensor_index: usize,
        expected: Vec<u32>,
        found: Vec<u32>,
    },

    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

fn tensor_suffix(index: Option<usize>) -> String {
    index.map(|i| format!(" of tensor {i}")).unwrap_or_default()
}

impl Error {
    pub(crate) fn shape(op: &'static str, expected: impl Into<String>, found: impl Into<String>) -> Self {
        Error::Shape {
            op,
            expected: expected.into(),
            found: found.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
