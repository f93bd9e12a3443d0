use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::ModelConfig;
use super::layers::{bilstm_encode, embed_tokens, multi_head_attention};
use super::params::{init_params, AttnLevel, ParamIds};
use super::ModelError;
use crate::autodiff::{Grads, ParamStore, Real, Tape, Tensor, Var};
use crate::text::{EncodedText, EncodedUser, EncodingConfig, CHAR_PAD, PAD};

/// Non-fatal conditions met while encoding a user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelWarning {
    /// The description had no tokens; its representation is zero.
    EmptyDescription,
    /// The user had no tweets with tokens; the tweet representation is zero.
    NoTweets,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserOutput<F> {
    pub logits: Vec<F>,
    pub probs: Vec<F>,
    pub warnings: Vec<ModelWarning>,
}

impl<F: Real> UserOutput<F> {
    /// Highest-probability class; ties go to the lowest index.
    pub fn predicted(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        best
    }
}

/// Attention matrices recorded during one evaluation, one entry per head.
#[derive(Debug, Clone, Default)]
pub struct AttentionTrace<F> {
    pub description: Option<Vec<Tensor<F>>>,
    /// Per tweet slot; `None` for masked tweets or when word attention is off.
    pub tweets: Vec<Option<Vec<Tensor<F>>>>,
    pub tweet_level: Option<Vec<Tensor<F>>>,
    pub field_level: Option<Vec<Tensor<F>>>,
}

#[derive(Default)]
struct TraceVars {
    description: Option<Vec<Var>>,
    tweets: Vec<Option<Vec<Var>>>,
    tweet_level: Option<Vec<Var>>,
    field_level: Option<Vec<Var>>,
}

/// Nodes of one user's forward graph.
pub struct UserGraph {
    pub desc_repr: Var,
    pub tweets_repr: Var,
    pub field_repr: Var,
    pub logits: Var,
    pub probs: Var,
    pub warnings: Vec<ModelWarning>,
    trace: TraceVars,
}

/// The hierarchical self-attention network: configuration plus parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Hsan<F> {
    pub config: ModelConfig,
    pub encoding: EncodingConfig,
    pub params: ParamStore<F>,
    ids: ParamIds,
}

impl<F: Real> Hsan<F> {
    pub fn new(
        config: ModelConfig,
        encoding: EncodingConfig,
        word_emb: Option<Tensor<F>>,
        seed: u64,
    ) -> Result<Self, ModelError> {
        config.validate(&encoding)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = init_params(&config, word_emb, &mut rng)?;
        Self::from_params(config, encoding, params)
    }

    pub fn from_params(
        config: ModelConfig,
        encoding: EncodingConfig,
        params: ParamStore<F>,
    ) -> Result<Self, ModelError> {
        config.validate(&encoding)?;
        let ids = ParamIds::resolve(&params, &config)?;
        for (name, shape) in super::params::param_manifest(&config) {
            let t = params.by_name(&name).expect("resolved");
            if t.shape() != shape.as_slice() {
                return Err(ModelError::Config(format!(
                    "parameter `{name}` has shape {:?}, expected {shape:?}",
                    t.shape()
                )));
            }
        }
        Ok(Self {
            config,
            encoding,
            params,
            ids,
        })
    }

    pub fn ids(&self) -> &ParamIds {
        &self.ids
    }

    /// Same parameters with different ablation switches.
    pub fn with_ablation(&self, ablation: super::config::Ablation) -> Result<Self, ModelError> {
        let mut config = self.config.clone();
        config.ablation = ablation;
        Self::from_params(config, self.encoding, self.params.clone())
    }

    pub fn cast<G: Real>(&self) -> Hsan<G> {
        Hsan {
            config: self.config.clone(),
            encoding: self.encoding,
            params: self.params.cast(),
            ids: self.ids.clone(),
        }
    }

    fn check_user(&self, user: &EncodedUser) -> Result<(), ModelError> {
        let e = &self.encoding;
        let ok = user.description.len() == e.desc_len
            && user.tweets.len() == e.max_tweets
            && user.tweet_mask.len() == e.max_tweets
            && user.max_chars == e.max_chars
            && user.tweets.iter().all(|t| t.len() == e.tweet_len);
        if !ok {
            return Err(ModelError::Config(format!(
                "user `{}` was encoded with a different encoding config",
                user.id
            )));
        }
        let v = self.config.vocab_size as u32;
        let in_range = |t: &EncodedText| t.ids.iter().all(|&i| i < v);
        if !in_range(&user.description) || !user.tweets.iter().all(in_range) {
            return Err(ModelError::Config(format!(
                "user `{}` has word ids beyond the vocabulary",
                user.id
            )));
        }
        Ok(())
    }

    /// Word-level pipeline for one text: embed, input dropout, Bi-LSTM,
    /// word attention, masked row mean. `1 × 2D`.
    fn encode_text(
        &self,
        tape: &mut Tape<'_, F>,
        text: &EncodedText,
    ) -> Result<(Var, Option<Vec<Var>>), ModelError> {
        let cfg = &self.config;
        let x = embed_tokens(tape, &self.ids, cfg, text, self.encoding.max_chars);
        let x = tape.dropout(x, cfg.dropout);
        let h = bilstm_encode(tape, x, &text.mask, &self.ids, cfg.dim);
        let (attended, heads) = if cfg.ablation.no_word_attn {
            (h, None)
        } else {
            let a = multi_head_attention(
                tape,
                h,
                &text.mask,
                self.ids.attn(AttnLevel::Word),
                cfg,
            )?;
            (a.output, Some(a.heads))
        };
        Ok((tape.masked_row_mean(attended, &text.mask), heads))
    }

    fn encode_description(
        &self,
        tape: &mut Tape<'_, F>,
        user: &EncodedUser,
        trace: &mut TraceVars,
        warnings: &mut Vec<ModelWarning>,
    ) -> Result<Var, ModelError> {
        let width = 2 * self.config.dim;
        if self.config.ablation.no_description {
            return Ok(tape.zeros(1, width));
        }
        if !user.description.has_tokens() {
            warnings.push(ModelWarning::EmptyDescription);
            return Ok(tape.zeros(1, width));
        }
        let (r, heads) = self.encode_text(tape, &user.description)?;
        trace.description = heads;
        Ok(r)
    }

    fn encode_tweets(
        &self,
        tape: &mut Tape<'_, F>,
        user: &EncodedUser,
        trace: &mut TraceVars,
        warnings: &mut Vec<ModelWarning>,
    ) -> Result<Var, ModelError> {
        let cfg = &self.config;
        let width = 2 * cfg.dim;
        if cfg.ablation.no_tweets {
            return Ok(tape.zeros(1, width));
        }
        if !user.tweet_mask.iter().any(|&m| m) {
            warnings.push(ModelWarning::NoTweets);
            return Ok(tape.zeros(1, width));
        }
        let zero = tape.zeros(1, width);
        let mut rows = Vec::with_capacity(user.tweets.len());
        trace.tweets = vec![None; user.tweets.len()];
        for (t, tweet) in user.tweets.iter().enumerate() {
            if user.tweet_mask[t] {
                let (r, heads) = self.encode_text(tape, tweet)?;
                trace.tweets[t] = heads;
                rows.push(r);
            } else {
                rows.push(zero);
            }
        }
        let stacked = tape.concat_rows(&rows);
        let attended = if cfg.ablation.no_tweet_attn {
            stacked
        } else {
            let a = multi_head_attention(
                tape,
                stacked,
                &user.tweet_mask,
                self.ids.attn(AttnLevel::Tweet),
                cfg,
            )?;
            trace.tweet_level = Some(a.heads);
            a.output
        };
        Ok(tape.masked_row_mean(attended, &user.tweet_mask))
    }

    fn fuse_fields(
        &self,
        tape: &mut Tape<'_, F>,
        desc: Var,
        tweets: Var,
        trace: &mut TraceVars,
    ) -> Result<Var, ModelError> {
        let stacked = tape.concat_rows(&[desc, tweets]);
        let mask = [true, true];
        let attended = if self.config.ablation.no_field_attn {
            stacked
        } else {
            let a = multi_head_attention(
                tape,
                stacked,
                &mask,
                self.ids.attn(AttnLevel::Field),
                &self.config,
            )?;
            trace.field_level = Some(a.heads);
            a.output
        };
        Ok(tape.masked_row_mean(attended, &mask))
    }

    /// Affine projection of the fused representation followed by softmax.
    fn classify(&self, tape: &mut Tape<'_, F>, fused: Var) -> Result<(Var, Var), ModelError> {
        let w = tape.param(self.ids.cls_weight);
        let b = tape.param(self.ids.cls_bias);
        let wx = tape.matmul_bt(fused, w);
        let logits = tape.add_row(wx, b);
        let probs = tape.masked_softmax(logits, 1, None)?;
        Ok((logits, probs))
    }

    /// Records the full forward graph of one user on `tape`.
    pub fn build_graph(
        &self,
        tape: &mut Tape<'_, F>,
        user: &EncodedUser,
    ) -> Result<UserGraph, ModelError> {
        if !self.config.ablation.is_valid() {
            return Err(ModelError::Config(
                "no_description and no_tweets together leave no input".into(),
            ));
        }
        self.check_user(user)?;
        let mut trace = TraceVars::default();
        let mut warnings = Vec::new();
        let desc_repr = self.encode_description(tape, user, &mut trace, &mut warnings)?;
        let tweets_repr = self.encode_tweets(tape, user, &mut trace, &mut warnings)?;
        let field_repr = self.fuse_fields(tape, desc_repr, tweets_repr, &mut trace)?;
        let (logits, probs) = self.classify(tape, field_repr)?;
        Ok(UserGraph {
            desc_repr,
            tweets_repr,
            field_repr,
            logits,
            probs,
            warnings,
            trace,
        })
    }

    /// Deterministic evaluation-mode forward pass.
    pub fn predict(&self, user: &EncodedUser) -> Result<UserOutput<F>, ModelError> {
        let mut tape = Tape::eval(&self.params);
        let g = self.build_graph(&mut tape, user)?;
        Ok(UserOutput {
            logits: tape.value(g.logits).data().to_vec(),
            probs: tape.value(g.probs).data().to_vec(),
            warnings: g.warnings,
        })
    }

    /// Loss and parameter gradients for one user, with the embedding
    /// padding rows held fixed. `rng` enables training mode (dropout);
    /// `None` evaluates deterministically.
    pub fn loss_and_grad(
        &self,
        user: &EncodedUser,
        rng: Option<ChaCha8Rng>,
    ) -> Result<(F, Grads<F>), ModelError> {
        let (value, mut grads) = self.loss_and_exact_grad(user, rng)?;
        self.freeze_padding(&mut grads);
        Ok((value, grads))
    }

    /// Like [`Hsan::loss_and_grad`] but without freezing the padding rows.
    pub fn loss_and_exact_grad(
        &self,
        user: &EncodedUser,
        rng: Option<ChaCha8Rng>,
    ) -> Result<(F, Grads<F>), ModelError> {
        let mut tape = match rng {
            Some(r) => Tape::train(&self.params, r),
            None => Tape::eval(&self.params),
        };
        let g = self.build_graph(&mut tape, user)?;
        let loss = tape.neg_log_at(g.probs, user.label_id);
        let value = tape.value(loss).data()[0];
        Ok((value, tape.backward(loss)))
    }

    /// Evaluation-mode loss only.
    pub fn loss(&self, user: &EncodedUser) -> Result<F, ModelError> {
        let mut tape = Tape::eval(&self.params);
        let g = self.build_graph(&mut tape, user)?;
        let loss = tape.neg_log_at(g.probs, user.label_id);
        Ok(tape.value(loss).data()[0])
    }

    /// The padding rows of both embedding tables stay at zero.
    fn freeze_padding(&self, grads: &mut Grads<F>) {
        let d = self.config.dim;
        if let Some(g) = grads.get_mut(self.ids.word_emb) {
            let p = PAD as usize;
            g[p * d..(p + 1) * d].fill(F::zero());
        }
        let cd = self.config.char_dim;
        if let Some(g) = grads.get_mut(self.ids.char_emb) {
            let p = CHAR_PAD as usize;
            g[p * cd..(p + 1) * cd].fill(F::zero());
        }
    }

    /// Evaluation-mode attention matrices for every attention layer used.
    pub fn trace_attention(
        &self,
        user: &EncodedUser,
    ) -> Result<(UserOutput<F>, AttentionTrace<F>), ModelError> {
        let mut tape = Tape::eval(&self.params);
        let g = self.build_graph(&mut tape, user)?;
        let grab = |vars: &Option<Vec<Var>>| {
            vars.as_ref()
                .map(|vs| vs.iter().map(|&v| tape.value(v).clone()).collect())
        };
        let trace = AttentionTrace {
            description: grab(&g.trace.description),
            tweets: g.trace.tweets.iter().map(&grab).collect(),
            tweet_level: grab(&g.trace.tweet_level),
            field_level: grab(&g.trace.field_level),
        };
        let out = UserOutput {
            logits: tape.value(g.logits).data().to_vec(),
            probs: tape.value(g.probs).data().to_vec(),
            warnings: g.warnings,
        };
        Ok((out, trace))
    }
}
