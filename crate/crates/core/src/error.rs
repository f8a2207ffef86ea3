use std::path::PathBuf;

use chrono::NaiveDate;
use thiserror::Error;

/// Errors produced by every stage of the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {malformed} of {lines} lines malformed, above tolerance {tolerance}")]
    TooManyMalformed {
        path: PathBuf,
        malformed: usize,
        lines: usize,
        tolerance: f64,
    },

    #[error("duplicate tweet id {0:?}")]
    DuplicateId(String),

    #[error("unknown region code {code:?} (record {record:?})")]
    UnknownRegion { code: String, record: String },

    #[error("invalid region registry: {0}")]
    Registry(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no script policy configured for language {0:?}")]
    UnknownScriptPolicy(String),

    #[error("invalid lexicon {name}: {reason}")]
    Lexicon { name: String, reason: String },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("no word reaches the minimum count of {0}")]
    EmptyVocabulary(u64),

    #[error("vocabulary has {vocab} words but {topics} topics were requested")]
    VocabularyTooSmall { vocab: usize, topics: usize },

    #[error("word {0:?} is not in the vocabulary")]
    OutOfVocabulary(String),

    #[error("tweets from more than one region: {0:?} and {1:?}")]
    MixedRegions(String, String),

    #[error("date {date} outside series range {start}..={end}")]
    DateOutOfRange {
        date: NaiveDate,
        start: NaiveDate,
        end: NaiveDate,
    },

    #[error("series too short: {0}")]
    SeriesTooShort(String),

    #[error("series mismatch: {0}")]
    SeriesMismatch(String),

    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),

    #[error("no smoothing candidate could be evaluated")]
    NoViableCandidate,

    #[error("{path}:{line}: {reason}")]
    Parse { path: PathBuf, line: usize, reason: String },

    #[error("config: {0}")]
    Config(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, reason: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            reason: reason.into(),
        }
    }
}
