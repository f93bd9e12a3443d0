use serde::{Deserialize, Serialize};

use super::dataset::UserRecord;
use super::tokenize::tokenize;
use super::vocab::{Vocab, CHAR_PAD, PAD};
use super::TextError;
use crate::labels::LabelSet;

/// Fixed input capacities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncodingConfig {
    /// Tokens kept from the description (M).
    pub desc_len: usize,
    /// Tokens kept per tweet (N).
    pub tweet_len: usize,
    /// Tweets kept per user (T).
    pub max_tweets: usize,
    /// Characters kept per word (K).
    pub max_chars: usize,
}

impl Default for EncodingConfig {
    fn default() -> Self {
        Self {
            desc_len: 30,
            tweet_len: 32,
            max_tweets: 20,
            max_chars: 20,
        }
    }
}

impl EncodingConfig {
    pub fn validate(&self) -> Result<(), TextError> {
        for (name, v) in [
            ("desc_len", self.desc_len),
            ("tweet_len", self.tweet_len),
            ("max_tweets", self.max_tweets),
            ("max_chars", self.max_chars),
        ] {
            if v == 0 {
                return Err(TextError::Config(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

/// Word ids, per-word char ids and the mask of one padded text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedText {
    pub ids: Vec<u32>,
    /// `ids.len() × max_chars`, row-major.
    pub chars: Vec<u32>,
    pub mask: Vec<bool>,
}

impl EncodedText {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn real_len(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn has_tokens(&self) -> bool {
        self.mask.iter().any(|&m| m)
    }

    fn encode(tokens: &[String], vocab: &Vocab, len: usize, max_chars: usize) -> Self {
        let mut ids = vec![PAD; len];
        let mut chars = vec![CHAR_PAD; len * max_chars];
        let mut mask = vec![false; len];
        for (i, tok) in tokens.iter().take(len).enumerate() {
            ids[i] = vocab.word_id(tok);
            mask[i] = true;
            for (j, c) in tok.chars().take(max_chars).enumerate() {
                chars[i * max_chars + j] = Vocab::char_id(c);
            }
        }
        Self { ids, chars, mask }
    }

    fn empty(len: usize, max_chars: usize) -> Self {
        Self {
            ids: vec![PAD; len],
            chars: vec![CHAR_PAD; len * max_chars],
            mask: vec![false; len],
        }
    }
}

/// Fixed-shape index arrays for one user. Shapes depend only on the
/// encoding config.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedUser {
    pub id: String,
    pub max_chars: usize,
    pub description: EncodedText,
    pub tweets: Vec<EncodedText>,
    pub tweet_mask: Vec<bool>,
    pub label_id: usize,
}

impl EncodedUser {
    pub fn num_tweets(&self) -> usize {
        self.tweet_mask.iter().filter(|&&m| m).count()
    }
}

pub fn encode_user(
    user: &UserRecord,
    vocab: &Vocab,
    labels: &LabelSet,
    cfg: &EncodingConfig,
) -> Result<EncodedUser, TextError> {
    let label_id = labels.id(&user.label).map_err(|_| TextError::UnknownLabel {
        label: user.label.clone(),
        line: None,
    })?;
    let k = cfg.max_chars;
    let description = EncodedText::encode(&tokenize(&user.description), vocab, cfg.desc_len, k);
    let mut tweets = Vec::with_capacity(cfg.max_tweets);
    let mut tweet_mask = vec![false; cfg.max_tweets];
    for (t, keep) in tweet_mask.iter_mut().enumerate() {
        match user.tweets.get(t) {
            Some(text) => {
                let enc = EncodedText::encode(&tokenize(text), vocab, cfg.tweet_len, k);
                // a tweet with no tokens carries no content and stays masked
                *keep = enc.has_tokens();
                tweets.push(if *keep {
                    enc
                } else {
                    EncodedText::empty(cfg.tweet_len, k)
                });
            }
            None => tweets.push(EncodedText::empty(cfg.tweet_len, k)),
        }
    }
    Ok(EncodedUser {
        id: user.id.clone(),
        max_chars: k,
        description,
        tweets,
        tweet_mask,
        label_id,
    })
}

pub fn encode_all(
    users: &[UserRecord],
    vocab: &Vocab,
    labels: &LabelSet,
    cfg: &EncodingConfig,
) -> Result<Vec<EncodedUser>, TextError> {
    users
        .iter()
        .map(|u| encode_user(u, vocab, labels, cfg))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::vocab::UNK;
    use proptest::prelude::*;

    fn record(desc: &str, tweets: &[&str]) -> UserRecord {
        UserRecord {
            id: "u".into(),
            description: desc.into(),
            tweets: tweets.iter().map(|s| s.to_string()).collect(),
            label: "sport".into(),
        }
    }

    fn vocab() -> Vocab {
        Vocab::build(&[record("alpha beta gamma delta", &["alpha beta"])], 1).unwrap()
    }

    #[test]
    fn three_tweets_three_mask_bits() {
        let u = record("alpha", &["alpha", "beta", "gamma"]);
        let e = encode_user(&u, &vocab(), &LabelSet::identity(), &EncodingConfig::default()).unwrap();
        assert_eq!(e.tweet_mask.len(), 20);
        assert_eq!(e.num_tweets(), 3);
        assert!(e.tweet_mask[..3].iter().all(|&b| b));
        for t in &e.tweets[3..] {
            assert!(!t.has_tokens());
        }
    }

    #[test]
    fn empty_description_is_all_pad() {
        let e = encode_user(&record("", &[]), &vocab(), &LabelSet::identity(), &EncodingConfig::default()).unwrap();
        assert!(e.description.mask.iter().all(|&m| !m));
        assert!(e.description.ids.iter().all(|&i| i == 0));
        assert_eq!(e.description.len(), 30);
    }

    #[test]
    fn long_word_keeps_char_prefix() {
        let word = "abcdefghijklmnopqrstuvwxy"; // 25 chars
        let e = encode_user(&record(word, &[]), &vocab(), &LabelSet::identity(), &EncodingConfig::default()).unwrap();
        let chars = &e.description.chars[..20];
        let expected: Vec<u32> = word.chars().take(20).map(Vocab::char_id).collect();
        assert_eq!(chars, expected.as_slice());
        assert_eq!(e.description.ids[0], UNK);
    }

    #[test]
    fn unknown_label_named() {
        let mut u = record("a", &[]);
        u.label = "pirate".into();
        match encode_user(&u, &vocab(), &LabelSet::identity(), &EncodingConfig::default()) {
            Err(TextError::UnknownLabel { label, .. }) => assert_eq!(label, "pirate"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn truncation_keeps_prefix() {
        let cfg = EncodingConfig {
            desc_len: 2,
            ..Default::default()
        };
        let e = encode_user(&record("alpha beta gamma", &[]), &vocab(), &LabelSet::identity(), &cfg).unwrap();
        let v = vocab();
        assert_eq!(e.description.ids, vec![v.word_id("alpha"), v.word_id("beta")]);
        assert_eq!(e.description.mask, vec![true, true]);
    }

    proptest! {
        #[test]
        fn shapes_depend_only_on_config(
            desc in "[a-z ]{0,80}",
            tweets in proptest::collection::vec("[a-z !]{0,60}", 0..30),
            m in 1usize..8, n in 1usize..8, t in 1usize..6, k in 1usize..6,
        ) {
            let cfg = EncodingConfig { desc_len: m, tweet_len: n, max_tweets: t, max_chars: k };
            let tw: Vec<&str> = tweets.iter().map(String::as_str).collect();
            let u = record(&desc, &tw);
            let e = encode_user(&u, &vocab(), &LabelSet::identity(), &cfg).unwrap();
            prop_assert_eq!(e.description.ids.len(), m);
            prop_assert_eq!(e.description.chars.len(), m * k);
            prop_assert_eq!(e.tweets.len(), t);
            prop_assert_eq!(e.tweet_mask.len(), t);
            for (i, tw) in e.tweets.iter().enumerate() {
                prop_assert_eq!(tw.ids.len(), n);
                prop_assert_eq!(tw.chars.len(), n * k);
                if !e.tweet_mask[i] {
                    prop_assert!(tw.mask.iter().all(|&b| !b));
                }
                for (j, &on) in tw.mask.iter().enumerate() {
                    if !on {
                        prop_assert_eq!(tw.ids[j], 0);
                    }
                }
            }
            let ntok = tokenize(&desc).len();
            prop_assert_eq!(e.description.real_len(), ntok.min(m));
        }

        #[test]
        fn in_vocab_description_roundtrips(words in proptest::collection::vec(
            prop_oneof![Just("alpha"), Just("beta"), Just("gamma"), Just("delta")], 0..30)) {
            let v = vocab();
            let desc = words.join(" ");
            let e = encode_user(&record(&desc, &[]), &v, &LabelSet::identity(), &EncodingConfig::default()).unwrap();
            let decoded: Vec<&str> = e.description.ids.iter().zip(&e.description.mask)
                .filter(|(_, &m)| m).map(|(&i, _)| v.word(i)).collect();
            prop_assert_eq!(decoded, words);
        }
    }
}
