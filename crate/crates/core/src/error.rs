use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unsupported audio format: {0}")]
    UnsupportedFormat(String),
    #[error("corrupt WAV header: {0}")]
    CorruptHeader(String),
    #[error("chunk of {len} samples exceeds ring capacity {capacity}")]
    ChunkTooLarge { len: usize, capacity: usize },
    #[error("invalid band: {0}")]
    InvalidBand(String),
    #[error("unstable filter design: {0}")]
    UnstableDesign(String),
    #[error("sample rate mismatch: expected {expected} Hz, got {actual} Hz")]
    RateMismatch { expected: u32, actual: u32 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("window must be {expected} samples, got {actual}")]
    WrongWindowLength { expected: usize, actual: usize },
    #[error("segment must be {expected} samples, got {actual}")]
    WrongSegmentLength { expected: usize, actual: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("empty batch")]
    EmptyBatch,
    #[error("non-finite loss")]
    NonFiniteLoss,
    #[error("non-finite parameter update")]
    NonFiniteUpdate,
    #[error("unsupported model format version {0}")]
    VersionMismatch(u64),
    #[error("noise clip ({noise} samples) shorter than clean clip ({clean} samples)")]
    NoiseTooShort { noise: usize, clean: usize },
    #[error("clean clip is silent, SNR undefined")]
    SilentClean,
    #[error("unknown gesture class '{0}'")]
    UnknownClass(String),
    #[error("no events found in recording")]
    NoEventsFound,
    #[error("too few samples: {0}")]
    TooFewSamples(String),
    #[error("duplicate record id '{0}'")]
    DuplicateId(String),
    #[error("split leak: record '{child}' is in {child_split} but parent '{parent}' is in {parent_split}")]
    SplitLeak { child: String, parent: String, child_split: String, parent_split: String },
    #[error("missing file {0}")]
    MissingFile(PathBuf),
    #[error("invalid manifest: {0}")]
    InvalidManifest(String),
    #[error("inconsistent confusion counts: {0}")]
    InconsistentCounts(String),
    #[error("labels contain a single class")]
    SingleClassLabels,
    #[error("split '{0}' is empty")]
    EmptySplit(String),
    #[error("duplicate augmentation ratio {0}")]
    DuplicateRatio(usize),
    #[error("audio source lost: {0}")]
    SourceLost(String),
    #[error("model missing: {0}")]
    ModelMissing(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl From<hound::Error> for Error {
    fn from(e: hound::Error) -> Self {
        match e {
            hound::Error::IoError(io) => Error::Io(io),
            hound::Error::Unsupported => Error::UnsupportedFormat("compressed or unknown encoding".into()),
            hound::Error::FormatError(msg) => Error::CorruptHeader(msg.to_string()),
            other => Error::UnsupportedFormat(other.to_string()),
        }
    }
}
