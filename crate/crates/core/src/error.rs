use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    // ingestion
    #[error("input is not valid UTF-8 ({0})")]
    Utf8(String),
    #[error("row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("row {row}: score {value} outside [0, 1]")]
    ScoreOutOfRange { row: usize, value: f64 },
    #[error("duplicate column header `{0}`")]
    DuplicateColumn(String),
    #[error("missing required column `{0}`")]
    MissingColumn(String),
    #[error("duplicate study_id `{id}` in {side} records")]
    DuplicateStudyId { side: &'static str, id: String },
    #[error("malformed JSON: {0}")]
    Json(String),

    // statistics
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{0} is undefined: {1}")]
    Undefined(&'static str, String),

    // masks and tables
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("malformed run-length mask: {0}")]
    MalformedMask(String),

    // governance and reporting
    #[error("missing answer for clause {0}")]
    MissingAnswer(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("pipeline: {0}")]
    Pipeline(String),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("report is missing mandatory section: {0}")]
    MissingSection(&'static str),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
