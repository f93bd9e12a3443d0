use std::collections::HashMap;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::dataset::UserRecord;
use super::tokenize::{tokenize, URL_TOKEN, USER_TOKEN};
use super::TextError;

pub const PAD: u32 = 0;
pub const UNK: u32 = 1;
pub const CHAR_PAD: u32 = 0;
pub const CHAR_UNK: u32 = 1;

const WORD_SPECIALS: [&str; 4] = ["<pad>", "<unk>", URL_TOKEN, USER_TOKEN];

/// Printable ASCII (space through tilde) plus the two character specials.
pub const CHARSET_SIZE: usize = 2 + (b'~' - b' ' + 1) as usize;

/// Word and character index maps. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    words: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocab {
    fn from_ordered(words: Vec<String>) -> Self {
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as u32))
            .collect();
        Self { words, index }
    }

    /// Counts tokens over descriptions and tweets and keeps words seen at
    /// least `min_freq` times, ordered by frequency then lexicographically.
    pub fn build(corpus: &[UserRecord], min_freq: usize) -> Result<Self, TextError> {
        if corpus.is_empty() {
            return Err(TextError::EmptyCorpus);
        }
        if min_freq == 0 {
            return Err(TextError::InvalidMinFreq);
        }
        let mut counts: HashMap<String, usize> = HashMap::new();
        for user in corpus {
            let texts = std::iter::once(&user.description).chain(&user.tweets);
            for text in texts {
                for tok in tokenize(text) {
                    *counts.entry(tok).or_default() += 1;
                }
            }
        }
        let mut kept: Vec<(String, usize)> = counts
            .into_iter()
            .filter(|(w, c)| *c >= min_freq && !WORD_SPECIALS.contains(&w.as_str()))
            .collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let words = WORD_SPECIALS
            .iter()
            .map(|s| s.to_string())
            .chain(kept.into_iter().map(|(w, _)| w))
            .collect();
        Ok(Self::from_ordered(words))
    }

    /// Word vocabulary size, specials included.
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn char_len(&self) -> usize {
        CHARSET_SIZE
    }

    pub fn word_id(&self, word: &str) -> u32 {
        self.index.get(word).copied().unwrap_or(UNK)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn char_id(c: char) -> u32 {
        if (' '..='~').contains(&c) {
            2 + (c as u32 - ' ' as u32)
        } else {
            CHAR_UNK
        }
    }

    pub fn to_tsv(&self) -> String {
        let mut s = String::new();
        for (i, w) in self.words.iter().enumerate() {
            s.push_str(w);
            s.push('\t');
            s.push_str(&i.to_string());
            s.push('\n');
        }
        s
    }

    pub fn from_tsv(text: &str) -> Result<Self, TextError> {
        let mut words = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let lineno = n + 1;
            if line.is_empty() {
                continue;
            }
            let (tok, idx) = line.rsplit_once('\t').ok_or_else(|| TextError::Malformed {
                line: lineno,
                reason: "expected token<TAB>index".into(),
            })?;
            let idx: usize = idx.parse().map_err(|_| TextError::Malformed {
                line: lineno,
                reason: format!("bad index `{idx}`"),
            })?;
            if idx != words.len() {
                return Err(TextError::Malformed {
                    line: lineno,
                    reason: format!("index {idx} out of sequence (expected {})", words.len()),
                });
            }
            words.push(tok.to_string());
        }
        for (i, s) in WORD_SPECIALS.iter().enumerate() {
            if words.get(i).map(String::as_str) != Some(*s) {
                return Err(TextError::Malformed {
                    line: i + 1,
                    reason: format!("special `{s}` missing at index {i}"),
                });
            }
        }
        Ok(Self::from_ordered(words))
    }

    pub fn save(&self, path: &Path) -> Result<(), TextError> {
        fs::write(path, self.to_tsv()).map_err(|e| TextError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, TextError> {
        let text = fs::read_to_string(path).map_err(|e| TextError::io(path, e))?;
        Self::from_tsv(&text)
    }

    /// SHA-256 over the serialized word list.
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.to_tsv().as_bytes()))
    }
}
