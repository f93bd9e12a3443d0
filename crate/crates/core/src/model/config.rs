use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::text::EncodingConfig;

/// Component switches for ablated variants. All false is the full model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Ablation {
    pub no_word_attn: bool,
    pub no_tweet_attn: bool,
    pub no_field_attn: bool,
    pub no_charcnn: bool,
    pub no_description: bool,
    pub no_tweets: bool,
}

impl Ablation {
    pub const FULL: Ablation = Ablation {
        no_word_attn: false,
        no_tweet_attn: false,
        no_field_attn: false,
        no_charcnn: false,
        no_description: false,
        no_tweets: false,
    };

    pub const NO_ATTENTION: Ablation = Ablation {
        no_word_attn: true,
        no_tweet_attn: true,
        no_field_attn: true,
        ..Ablation::FULL
    };

    pub fn is_valid(&self) -> bool {
        !(self.no_description && self.no_tweets)
    }

    /// Every flag combination, valid or not, in bit order.
    pub fn all_combinations() -> Vec<Ablation> {
        (0u8..64).map(Ablation::from_bits).collect()
    }

    pub fn from_bits(b: u8) -> Ablation {
        Ablation {
            no_word_attn: b & 1 != 0,
            no_tweet_attn: b & 2 != 0,
            no_field_attn: b & 4 != 0,
            no_charcnn: b & 8 != 0,
            no_description: b & 16 != 0,
            no_tweets: b & 32 != 0,
        }
    }

    /// Short label such as `w/o word-attn+charcnn`, or `full`.
    pub fn label(&self) -> String {
        if *self == Ablation::NO_ATTENTION {
            return "w/o all attention".into();
        }
        let parts: Vec<&str> = [
            (self.no_word_attn, "word attention"),
            (self.no_tweet_attn, "tweet attention"),
            (self.no_field_attn, "field attention"),
            (self.no_charcnn, "charcnn"),
            (self.no_description, "description"),
            (self.no_tweets, "tweets"),
        ]
        .iter()
        .filter(|(on, _)| *on)
        .map(|(_, n)| *n)
        .collect();
        if parts.is_empty() {
            "full".into()
        } else {
            format!("w/o {}", parts.join("+"))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    /// Word-embedding and per-direction LSTM state width (D).
    pub dim: usize,
    /// Character-embedding width.
    pub char_dim: usize,
    /// Character filter widths.
    pub char_windows: Vec<usize>,
    /// Feature maps per filter width.
    pub char_maps: usize,
    pub heads: usize,
    pub num_classes: usize,
    /// Word vocabulary size (V); set from the vocabulary at build time.
    pub vocab_size: usize,
    pub dropout: f64,
    pub ablation: Ablation,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            dim: 300,
            char_dim: 100,
            char_windows: vec![3, 4, 5],
            char_maps: 100,
            heads: 6,
            num_classes: 7,
            vocab_size: 0,
            dropout: 0.5,
            ablation: Ablation::FULL,
        }
    }
}

impl ModelConfig {
    /// Reduced widths that keep every component but train in minutes on a
    /// single CPU core.
    pub fn desk() -> Self {
        Self {
            dim: 24,
            char_dim: 12,
            char_windows: vec![3, 4, 5],
            char_maps: 8,
            heads: 4,
            ..Self::default()
        }
    }

    /// Smallest configuration used for finite-difference checks.
    pub fn tiny() -> Self {
        Self {
            dim: 4,
            char_dim: 2,
            char_windows: vec![2],
            char_maps: 4,
            heads: 2,
            num_classes: 3,
            dropout: 0.0,
            ..Self::default()
        }
    }

    /// Per-head width `2D / h`.
    pub fn head_dim(&self) -> usize {
        2 * self.dim / self.heads
    }

    pub fn validate(&self, enc: &EncodingConfig) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::Config(m));
        if self.dim == 0 || self.char_dim == 0 || self.heads == 0 {
            return bad("dim, char_dim and heads must be positive".into());
        }
        if !(2 * self.dim).is_multiple_of(self.heads) {
            return bad(format!(
                "2·dim = {} is not divisible by heads = {}",
                2 * self.dim,
                self.heads
            ));
        }
        if self.num_classes < 2 {
            return bad("num_classes must be at least 2".into());
        }
        if self.vocab_size < 4 {
            return bad("vocab_size must cover the special tokens".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if self.char_windows.is_empty() || self.char_windows.contains(&0) {
            return bad("char_windows must be nonempty positive widths".into());
        }
        if !self.ablation.no_charcnn {
            let total = self.char_windows.len() * self.char_maps;
            if total != self.dim {
                return bad(format!(
                    "char feature maps sum to {total} but dim is {}",
                    self.dim
                ));
            }
        }
        let widest = *self.char_windows.iter().max().expect("nonempty");
        if enc.max_chars < widest {
            return bad(format!(
                "max_chars = {} is shorter than the widest char window {widest}",
                enc.max_chars
            ));
        }
        if !self.ablation.is_valid() {
            return bad("no_description and no_tweets together leave no input".into());
        }
        Ok(())
    }
}
