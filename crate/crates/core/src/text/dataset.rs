use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::encode::EncodingConfig;
use super::TextError;
use crate::labels::LabelSet;

/// One user as stored in a dataset file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserRecord {
    pub id: String,
    pub description: String,
    pub tweets: Vec<String>,
    pub label: String,
}

/// Reads a line-delimited dataset. Blank lines are skipped; tweets beyond
/// `cfg.max_tweets` are dropped from the end.
pub fn load_dataset(
    path: &Path,
    labels: &LabelSet,
    cfg: &EncodingConfig,
) -> Result<Vec<UserRecord>, TextError> {
    let text = fs::read_to_string(path).map_err(|e| TextError::io(path, e))?;
    parse_dataset(&text, labels, cfg)
}

pub fn parse_dataset(
    text: &str,
    labels: &LabelSet,
    cfg: &EncodingConfig,
) -> Result<Vec<UserRecord>, TextError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let lineno = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut rec: UserRecord =
            serde_json::from_str(line).map_err(|e| TextError::Malformed {
                line: lineno,
                reason: e.to_string(),
            })?;
        if labels.id(&rec.label).is_err() {
            return Err(TextError::UnknownLabel {
                label: rec.label,
                line: Some(lineno),
            });
        }
        rec.tweets.truncate(cfg.max_tweets);
        out.push(rec);
    }
    Ok(out)
}

pub fn write_dataset(path: &Path, records: &[UserRecord]) -> Result<(), TextError> {
    let file = fs::File::create(path).map_err(|e| TextError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        let line = serde_json::to_string(r).expect("records serialize");
        writeln!(w, "{line}").map_err(|e| TextError::io(path, e))?;
    }
    w.flush().map_err(|e| TextError::io(path, e))
}
