//! Deterministic synthetic corpora of role-labeled users.
//!
//! Every non-regular role owns a keyword lexicon; each token of a user's
//! description and tweets comes from the role lexicon with probability
//! `signal_rate` and from a shared background lexicon otherwise. Regular
//! users draw only background tokens.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::labels::LabelSet;
use crate::text::UserRecord;
use crate::train::derive_seed;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid spec: {0}")]
    Spec(String),
    #[error("lexicons of `{a}` and `{b}` share the word `{word}`, but signal_rate 1 requires disjoint lexicons")]
    Collision { a: String, b: String, word: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub const SPLITS: [&str; 3] = ["train", "dev", "test"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub roles: LabelSet,
    /// Role drawn purely from the background lexicon.
    pub regular_role: String,
    /// Users per non-regular role in each split: train, dev, test.
    pub users_per_role: [usize; 3],
    /// Regular users are this many times as numerous as each other role.
    pub regular_multiplier: usize,
    /// Inclusive tweet-count range per user.
    pub tweets: (usize, usize),
    /// Inclusive token-count ranges.
    pub description_tokens: (usize, usize),
    pub tweet_tokens: (usize, usize),
    /// Generated lexicon sizes, used when explicit lexicons are absent.
    pub lexicon_size: usize,
    pub background_size: usize,
    /// Explicit role lexicons; generated when empty.
    pub lexicons: BTreeMap<String, Vec<String>>,
    /// Explicit background lexicon; generated when empty.
    pub background: Vec<String>,
    pub signal_rate: f64,
    /// Probability that a tweet carries a link or a mention.
    pub decoration_rate: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            roles: LabelSet::identity(),
            regular_role: "regular".into(),
            users_per_role: [80, 15, 20],
            regular_multiplier: 6,
            tweets: (0, 20),
            description_tokens: (3, 12),
            tweet_tokens: (4, 14),
            lexicon_size: 40,
            background_size: 400,
            lexicons: BTreeMap::new(),
            background: Vec::new(),
            signal_rate: 0.8,
            decoration_rate: 0.15,
            seed: 7,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::Spec(m));
        if !(0.0..=1.0).contains(&self.signal_rate) {
            return bad(format!("signal_rate {} outside [0, 1]", self.signal_rate));
        }
        if !(0.0..=1.0).contains(&self.decoration_rate) {
            return bad(format!("decoration_rate {} outside [0, 1]", self.decoration_rate));
        }
        if self.users_per_role.contains(&0) || self.regular_multiplier == 0 {
            return bad("split sizes must be positive".into());
        }
        if self.roles.id(&self.regular_role).is_err() {
            return bad(format!("regular role `{}` is not among the roles", self.regular_role));
        }
        for (lo, hi, what) in [
            (self.tweets.0, self.tweets.1, "tweets"),
            (self.description_tokens.0, self.description_tokens.1, "description_tokens"),
            (self.tweet_tokens.0, self.tweet_tokens.1, "tweet_tokens"),
        ] {
            if lo > hi {
                return bad(format!("{what}: empty range {lo}..={hi}"));
            }
        }
        if self.description_tokens.0 == 0 || self.tweet_tokens.0 == 0 {
            return bad("texts need at least one token".into());
        }
        if self.lexicons.is_empty() && self.lexicon_size == 0 {
            return bad("lexicon_size must be positive".into());
        }
        if self.background.is_empty() && self.background_size == 0 {
            return bad("background_size must be positive".into());
        }
        for (role, words) in &self.lexicons {
            if self.roles.id(role).is_err() {
                return bad(format!("lexicon for unknown role `{role}`"));
            }
            if words.is_empty() {
                return bad(format!("lexicon of `{role}` is empty"));
            }
        }
        Ok(())
    }

    pub fn users_in(&self, split: usize, role: &str) -> usize {
        let n = self.users_per_role[split];
        if role == self.regular_role {
            n * self.regular_multiplier
        } else {
            n
        }
    }
}

const ONSETS: [&str; 16] = [
    "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "st",
];
const VOWELS: [&str; 6] = ["a", "e", "i", "o", "u", "ai"];

fn pseudo_word(rng: &mut ChaCha8Rng) -> String {
    let syllables = rng.gen_range(2..=3);
    (0..syllables)
        .map(|_| {
            format!(
                "{}{}",
                ONSETS[rng.gen_range(0..ONSETS.len())],
                VOWELS[rng.gen_range(0..VOWELS.len())]
            )
        })
        .collect()
}

fn fresh_words(rng: &mut ChaCha8Rng, n: usize, taken: &mut HashSet<String>) -> Vec<String> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let w = pseudo_word(rng);
        if taken.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

/// Role lexicons (regular role excluded) and the background lexicon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lexicons {
    pub roles: BTreeMap<String, Vec<String>>,
    pub background: Vec<String>,
}

pub fn build_lexicons(spec: &SynthSpec) -> Result<Lexicons, SynthError> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[spec.seed, 0x1e]));
    let mut taken: HashSet<String> = spec
        .lexicons
        .values()
        .chain(std::iter::once(&spec.background))
        .flatten()
        .cloned()
        .collect();
    let mut roles = BTreeMap::new();
    for role in spec.roles.names() {
        if *role == spec.regular_role {
            continue;
        }
        let words = match spec.lexicons.get(role) {
            Some(w) => w.clone(),
            None => fresh_words(&mut rng, spec.lexicon_size, &mut taken),
        };
        roles.insert(role.clone(), words);
    }
    let background = if spec.background.is_empty() {
        fresh_words(&mut rng, spec.background_size, &mut taken)
    } else {
        spec.background.clone()
    };
    if spec.signal_rate >= 1.0 {
        let mut owner: BTreeMap<&str, &str> = BTreeMap::new();
        let named = roles
            .iter()
            .map(|(r, w)| (r.as_str(), w))
            .chain(std::iter::once(("background", &background)));
        for (role, words) in named {
            for w in words {
                if let Some(prev) = owner.insert(w, role) {
                    if prev != role {
                        return Err(SynthError::Collision {
                            a: prev.to_string(),
                            b: role.to_string(),
                            word: w.clone(),
                        });
                    }
                }
            }
        }
    }
    Ok(Lexicons { roles, background })
}

fn text(rng: &mut ChaCha8Rng, range: (usize, usize), role: Option<&[String]>, bg: &[String], rate: f64) -> Vec<String> {
    let n = rng.gen_range(range.0..=range.1);
    (0..n)
        .map(|_| {
            let lex = match role {
                Some(words) if rng.gen_bool(rate) => words,
                _ => bg,
            };
            lex[rng.gen_range(0..lex.len())].clone()
        })
        .collect()
}

fn decorate(rng: &mut ChaCha8Rng, mut words: Vec<String>, rate: f64, bg: &[String]) -> Vec<String> {
    if rng.gen_bool(rate) {
        let w = bg[rng.gen_range(0..bg.len())].clone();
        let extra = if rng.gen_bool(0.5) {
            format!("https://t.co/{w}{}", rng.gen_range(0..1000))
        } else {
            format!("@{w}")
        };
        let at = rng.gen_range(0..=words.len());
        words.insert(at, extra);
    }
    if let Some(first) = words.first_mut() {
        if rng.gen_bool(0.3) {
            let mut c = first.chars();
            if let Some(h) = c.next() {
                *first = h.to_uppercase().chain(c).collect();
            }
        }
    }
    words
}

fn gen_user(
    spec: &SynthSpec,
    lex: &Lexicons,
    id: String,
    role: &str,
    seed: u64,
) -> UserRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let words = lex.roles.get(role).map(|w| w.as_slice());
    let rate = spec.signal_rate;
    let description = text(&mut rng, spec.description_tokens, words, &lex.background, rate).join(" ");
    let n_tweets = rng.gen_range(spec.tweets.0..=spec.tweets.1);
    let tweets = (0..n_tweets)
        .map(|_| {
            let t = text(&mut rng, spec.tweet_tokens, words, &lex.background, rate);
            decorate(&mut rng, t, spec.decoration_rate, &lex.background).join(" ")
        })
        .collect();
    UserRecord {
        id,
        description,
        tweets,
        label: role.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub signal_rate: f64,
    /// Split → label → count.
    pub counts: BTreeMap<String, BTreeMap<String, usize>>,
    pub public_figure_counts: BTreeMap<String, BTreeMap<String, usize>>,
    /// File name → SHA-256 of its bytes.
    pub files: BTreeMap<String, String>,
    pub spec: SynthSpec,
}

/// Generated identity corpus plus the companion public-figure corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub splits: [Vec<UserRecord>; 3],
    pub public_figure: [Vec<UserRecord>; 3],
    pub lexicons: Lexicons,
}

pub fn public_figure_labels() -> LabelSet {
    LabelSet::public_figure()
}

fn split_users(spec: &SynthSpec, lex: &Lexicons, split: usize, prefix: &str, tag: u64) -> Vec<UserRecord> {
    let mut users = Vec::new();
    for (r, role) in spec.roles.names().iter().enumerate() {
        for i in 0..spec.users_in(split, role) {
            let seed = derive_seed(&[spec.seed, tag, split as u64, r as u64, i as u64]);
            let id = format!("{prefix}{}-{role}-{i:04}", SPLITS[split]);
            users.push(gen_user(spec, lex, id, role, seed));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[spec.seed, tag, 0x5f, split as u64]));
    users.shuffle(&mut rng);
    users
}

pub fn gen_corpus(spec: &SynthSpec) -> Result<SynthCorpus, SynthError> {
    spec.validate()?;
    let lexicons = build_lexicons(spec)?;
    let splits = [0, 1, 2].map(|s| split_users(spec, &lexicons, s, "", 1));
    let public_figure = [0, 1, 2].map(|s| {
        split_users(spec, &lexicons, s, "pf-", 2)
            .into_iter()
            .map(|mut u| {
                u.label = if u.label == spec.regular_role {
                    "unverified".into()
                } else {
                    "verified".into()
                };
                u
            })
            .collect()
    });
    Ok(SynthCorpus {
        splits,
        public_figure,
        lexicons,
    })
}

fn jsonl(users: &[UserRecord]) -> String {
    let mut s = String::new();
    for u in users {
        s.push_str(&serde_json::to_string(u).expect("records serialize"));
        s.push('\n');
    }
    s
}

fn counts(splits: &[Vec<UserRecord>; 3]) -> BTreeMap<String, BTreeMap<String, usize>> {
    SPLITS
        .iter()
        .zip(splits)
        .map(|(name, users)| {
            let mut c = BTreeMap::new();
            for u in users {
                *c.entry(u.label.clone()).or_insert(0) += 1;
            }
            (name.to_string(), c)
        })
        .collect()
}

impl SynthCorpus {
    /// File name → contents: identity splits at the top level, the
    /// public-figure corpus under `public_figure/`, plus the lexicons.
    pub fn files(&self) -> BTreeMap<String, String> {
        let mut f = BTreeMap::new();
        for (i, name) in SPLITS.iter().enumerate() {
            f.insert(format!("{name}.jsonl"), jsonl(&self.splits[i]));
            f.insert(
                format!("public_figure/{name}.jsonl"),
                jsonl(&self.public_figure[i]),
            );
        }
        f.insert(
            "lexicons.json".into(),
            serde_json::to_string_pretty(&self.lexicons).expect("lexicons serialize") + "\n",
        );
        f
    }

    pub fn manifest(&self, spec: &SynthSpec) -> Manifest {
        Manifest {
            seed: spec.seed,
            signal_rate: spec.signal_rate,
            counts: counts(&self.splits),
            public_figure_counts: counts(&self.public_figure),
            files: self
                .files()
                .iter()
                .map(|(k, v)| (k.clone(), hex::encode(Sha256::digest(v.as_bytes()))))
                .collect(),
            spec: spec.clone(),
        }
    }

    /// Writes every file plus `manifest.json` under `dir`.
    pub fn write(&self, spec: &SynthSpec, dir: &Path) -> Result<Manifest, SynthError> {
        let io = |p: &Path| {
            let path = p.display().to_string();
            move |source| SynthError::Io { path, source }
        };
        let pf = dir.join("public_figure");
        fs::create_dir_all(&pf).map_err(io(&pf))?;
        for (name, body) in self.files() {
            let p = dir.join(&name);
            fs::write(&p, body).map_err(io(&p))?;
        }
        let manifest = self.manifest(spec);
        let p = dir.join("manifest.json");
        let body = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        fs::write(&p, body).map_err(io(&p))?;
        Ok(manifest)
    }
}
