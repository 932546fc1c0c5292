use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("duplicate document id: {0}")]
    DuplicateId(String),

    #[error("empty vocabulary: no term survived pruning")]
    EmptyVocabulary,

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("entropy undefined for single-document corpus")]
    SingleDocumentEntropy,

    #[error("not a model file (bad magic)")]
    BadMagic,

    #[error("unsupported model version: {0}")]
    VersionMismatch(u32),

    #[error("vocabulary checksum mismatch")]
    ChecksumMismatch,

    #[error("truncated model file")]
    Truncated,

    #[error("single-class training data")]
    SingleClass,

    #[error("class {label:?} has {count} members, fewer than {folds} folds")]
    ClassTooSmall {
        label: String,
        count: usize,
        folds: usize,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
