//! Tokenization, vocabularies, dataset files and fixed-shape user encoding.

mod dataset;
mod embeddings;
mod encode;
mod tokenize;
mod vocab;

use std::path::Path;

use thiserror::Error;

pub use dataset::{load_dataset, parse_dataset, write_dataset, UserRecord};
pub use embeddings::{load_pretrained_embeddings, OOV_INIT_RANGE};
pub use encode::{encode_all, encode_user, EncodedText, EncodedUser, EncodingConfig};
pub use tokenize::{tokenize, URL_TOKEN, USER_TOKEN};
pub use vocab::{Vocab, CHARSET_SIZE, CHAR_PAD, CHAR_UNK, PAD, UNK};

#[derive(Debug, Error)]
pub enum TextError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("unknown label `{label}`{}", line.map(|l| format!(" on line {l}")).unwrap_or_default())]
    UnknownLabel { label: String, line: Option<usize> },
    #[error("line {line}: expected {expected} vector components, found {actual}")]
    WidthMismatch {
        line: usize,
        expected: usize,
        actual: usize,
    },
    #[error("cannot build a vocabulary from an empty corpus")]
    EmptyCorpus,
    #[error("min_freq must be at least 1")]
    InvalidMinFreq,
    #[error("invalid encoding config: {0}")]
    Config(String),
}

impl TextError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        TextError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
