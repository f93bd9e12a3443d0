//! Plain nested-`Vec` reference implementations, written without the tape,
//! used as independent oracles for the network.

#![allow(dead_code)]

use hsan_core::autodiff::ParamStore;
use hsan_core::labels::LabelSet;
use hsan_core::model::{Ablation, Hsan, ModelConfig};
use hsan_core::text::{encode_user, EncodedText, EncodedUser, EncodingConfig, UserRecord, Vocab};

pub type Mat = Vec<Vec<f64>>;

pub fn param(store: &ParamStore<f64>, name: &str) -> Mat {
    let t = store.by_name(name).unwrap_or_else(|| panic!("missing {name}"));
    let cols = t.cols();
    t.data().chunks(cols).map(|r| r.to_vec()).collect()
}

pub fn param_vec(store: &ParamStore<f64>, name: &str) -> Vec<f64> {
    store.by_name(name).unwrap().data().to_vec()
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let n = b[0].len();
    a.iter()
        .map(|row| {
            (0..n)
                .map(|j| row.iter().enumerate().map(|(k, &x)| x * b[k][j]).sum())
                .collect()
        })
        .collect()
}

pub fn transpose(a: &Mat) -> Mat {
    (0..a[0].len())
        .map(|j| a.iter().map(|r| r[j]).collect())
        .collect()
}

pub fn cols(a: &Mat, start: usize, end: usize) -> Mat {
    a.iter().map(|r| r[start..end].to_vec()).collect()
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn softmax_masked(row: &[f64], mask: &[bool]) -> Vec<f64> {
    let max = row
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(&x, _)| x)
        .fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = row
        .iter()
        .zip(mask)
        .map(|(&x, &m)| if m { (x - max).exp() } else { 0.0 })
        .collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|x| x / s).collect()
}

pub fn masked_mean(a: &Mat, mask: &[bool]) -> Vec<f64> {
    let n = a[0].len();
    let cnt = mask.iter().filter(|&&m| m).count() as f64;
    (0..n)
        .map(|j| {
            a.iter()
                .zip(mask)
                .filter(|(_, &m)| m)
                .map(|(r, _)| r[j])
                .sum::<f64>()
                / cnt
        })
        .collect()
}

/// Naive sliding-window convolution + relu + max pooling for one word.
pub fn char_cnn_word(
    char_emb: &Mat,
    chars: &[u32],
    windows: &[usize],
    filters: &[(Mat, Vec<f64>)],
) -> Vec<f64> {
    let emb: Vec<&Vec<f64>> = chars.iter().map(|&c| &char_emb[c as usize]).collect();
    let d = char_emb[0].len();
    let mut out = Vec::new();
    for (&w, (weight, bias)) in windows.iter().zip(filters) {
        let maps = bias.len();
        for m in 0..maps {
            let mut best = f64::NEG_INFINITY;
            for start in 0..=(chars.len() - w) {
                let mut s = bias[m];
                for off in 0..w {
                    for j in 0..d {
                        s += weight[off * d + j][m] * emb[start + off][j];
                    }
                }
                best = best.max(s.max(0.0));
            }
            out.push(best);
        }
    }
    out
}

/// Step-by-step LSTM over `x` (rows), skipping masked steps, returning the
/// per-step outputs (zero rows where masked).
pub fn lstm_scalar(
    x: &Mat,
    mask: &[bool],
    w_in: &Mat,
    w_h: &Mat,
    bias: &[f64],
    dim: usize,
    reverse: bool,
) -> Mat {
    let len = x.len();
    let mut h = vec![0.0; dim];
    let mut c = vec![0.0; dim];
    let mut out = vec![vec![0.0; dim]; len];
    let order: Vec<usize> = if reverse {
        (0..len).rev().collect()
    } else {
        (0..len).collect()
    };
    for t in order {
        if !mask[t] {
            continue;
        }
        let mut z = vec![0.0; 4 * dim];
        for (g, zg) in z.iter_mut().enumerate() {
            let mut s = bias[g];
            for (k, &xv) in x[t].iter().enumerate() {
                s += xv * w_in[k][g];
            }
            for (k, &hv) in h.iter().enumerate() {
                s += hv * w_h[k][g];
            }
            *zg = s;
        }
        for j in 0..dim {
            let i = sigmoid(z[j]);
            let f = sigmoid(z[dim + j]);
            let g = z[2 * dim + j].tanh();
            let o = sigmoid(z[3 * dim + j]);
            c[j] = f * c[j] + i * g;
            h[j] = o * c[j].tanh();
        }
        out[t] = h.clone();
    }
    out
}

pub fn bilstm(store: &ParamStore<f64>, x: &Mat, mask: &[bool], dim: usize) -> Mat {
    let f = lstm_scalar(
        x,
        mask,
        &param(store, "lstm.fwd.w_input"),
        &param(store, "lstm.fwd.w_hidden"),
        &param_vec(store, "lstm.fwd.bias"),
        dim,
        false,
    );
    let b = lstm_scalar(
        x,
        mask,
        &param(store, "lstm.bwd.w_input"),
        &param(store, "lstm.bwd.w_hidden"),
        &param_vec(store, "lstm.bwd.bias"),
        dim,
        true,
    );
    f.iter()
        .zip(&b)
        .map(|(a, b)| a.iter().chain(b).copied().collect())
        .collect()
}

/// Dense evaluation of the multi-head formula, head by head.
pub fn mha(store: &ParamStore<f64>, level: &str, h: &Mat, mask: &[bool], heads: usize) -> (Mat, Vec<Mat>) {
    let wq = param(store, &format!("attn.{level}.w_query"));
    let wk = param(store, &format!("attn.{level}.w_key"));
    let wv = param(store, &format!("attn.{level}.w_value"));
    let wo = param(store, &format!("attn.{level}.w_output"));
    let dk = wq[0].len() / heads;
    let mut concat: Mat = vec![Vec::new(); h.len()];
    let mut weights = Vec::new();
    for i in 0..heads {
        let q = matmul(h, &cols(&wq, i * dk, (i + 1) * dk));
        let k = matmul(h, &cols(&wk, i * dk, (i + 1) * dk));
        let v = matmul(h, &cols(&wv, i * dk, (i + 1) * dk));
        let scores = matmul(&q, &transpose(&k));
        let a: Mat = scores
            .iter()
            .map(|r| {
                let scaled: Vec<f64> = r.iter().map(|x| x / (dk as f64).sqrt()).collect();
                softmax_masked(&scaled, mask)
            })
            .collect();
        let head = matmul(&a, &v);
        for (row, hr) in concat.iter_mut().zip(head) {
            row.extend(hr);
        }
        weights.push(a);
    }
    (matmul(&concat, &wo), weights)
}

pub fn embed(store: &ParamStore<f64>, cfg: &ModelConfig, text: &EncodedText, k: usize) -> Mat {
    let word = param(store, "word_emb");
    let ch = param(store, "char_emb");
    let filters: Vec<(Mat, Vec<f64>)> = cfg
        .char_windows
        .iter()
        .map(|w| {
            (
                param(store, &format!("char_conv.w{w}.weight")),
                param_vec(store, &format!("char_conv.w{w}.bias")),
            )
        })
        .collect();
    (0..text.len())
        .map(|i| {
            if !text.mask[i] {
                return vec![0.0; 2 * cfg.dim];
            }
            let mut v = word[text.ids[i] as usize].clone();
            if cfg.ablation.no_charcnn {
                v.extend(vec![0.0; cfg.dim]);
            } else {
                v.extend(char_cnn_word(
                    &ch,
                    &text.chars[i * k..(i + 1) * k],
                    &cfg.char_windows,
                    &filters,
                ));
            }
            v
        })
        .collect()
}

pub fn encode_text(store: &ParamStore<f64>, cfg: &ModelConfig, text: &EncodedText, k: usize) -> Vec<f64> {
    let x = embed(store, cfg, text, k);
    let h = bilstm(store, &x, &text.mask, cfg.dim);
    let a = if cfg.ablation.no_word_attn {
        h
    } else {
        mha(store, "word", &h, &text.mask, cfg.heads).0
    };
    masked_mean(&a, &text.mask)
}

pub struct OracleOut {
    pub desc: Vec<f64>,
    pub tweets: Vec<f64>,
    pub fused: Vec<f64>,
    pub probs: Vec<f64>,
}

/// The whole network, composed from the oracles above.
pub fn network(model: &Hsan<f64>, user: &EncodedUser) -> OracleOut {
    let store = &model.params;
    let cfg = &model.config;
    let k = model.encoding.max_chars;
    let w2 = 2 * cfg.dim;
    let desc = if cfg.ablation.no_description || !user.description.has_tokens() {
        vec![0.0; w2]
    } else {
        encode_text(store, cfg, &user.description, k)
    };
    let tweets = if cfg.ablation.no_tweets || !user.tweet_mask.iter().any(|&m| m) {
        vec![0.0; w2]
    } else {
        let rt: Mat = user
            .tweets
            .iter()
            .zip(&user.tweet_mask)
            .map(|(t, &m)| if m { encode_text(store, cfg, t, k) } else { vec![0.0; w2] })
            .collect();
        let a = if cfg.ablation.no_tweet_attn {
            rt
        } else {
            mha(store, "tweet", &rt, &user.tweet_mask, cfg.heads).0
        };
        masked_mean(&a, &user.tweet_mask)
    };
    let stack = vec![desc.clone(), tweets.clone()];
    let fa = if cfg.ablation.no_field_attn {
        stack
    } else {
        mha(store, "field", &stack, &[true, true], cfg.heads).0
    };
    let fused = masked_mean(&fa, &[true, true]);
    let w = param(store, "classifier.weight");
    let b = param_vec(store, "classifier.bias");
    let logits: Vec<f64> = w
        .iter()
        .zip(&b)
        .map(|(row, bi)| row.iter().zip(&fused).map(|(x, y)| x * y).sum::<f64>() + bi)
        .collect();
    let probs = softmax_masked(&logits, &vec![true; logits.len()]);
    OracleOut {
        desc,
        tweets,
        fused,
        probs,
    }
}

pub const WORDS: [&str; 12] = [
    "alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta", "iota", "kappa", "lambda",
    "mu",
];

pub fn tiny_vocab() -> Vocab {
    let u = UserRecord {
        id: "v".into(),
        description: WORDS.join(" "),
        tweets: vec![],
        label: "regular".into(),
    };
    Vocab::build(&[u], 1).unwrap()
}

pub fn tiny_encoding() -> EncodingConfig {
    EncodingConfig {
        desc_len: 3,
        tweet_len: 3,
        max_tweets: 2,
        max_chars: 4,
    }
}

pub fn tiny_labels() -> LabelSet {
    LabelSet::new(["a", "b", "c"]).unwrap()
}

pub fn tiny_model(ablation: Ablation, seed: u64) -> Hsan<f64> {
    let mut cfg = ModelConfig::tiny();
    cfg.vocab_size = tiny_vocab().len();
    cfg.ablation = ablation;
    Hsan::new(cfg, tiny_encoding(), None, seed).unwrap()
}

pub fn record(desc: &str, tweets: &[&str], label: &str) -> UserRecord {
    UserRecord {
        id: "u".into(),
        description: desc.into(),
        tweets: tweets.iter().map(|s| s.to_string()).collect(),
        label: label.into(),
    }
}

pub fn encode(rec: &UserRecord, enc: &EncodingConfig) -> EncodedUser {
    encode_user(rec, &tiny_vocab(), &tiny_labels(), enc).unwrap()
}

/// A small deterministic generator for random test inputs.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        self.0 >> 33
    }

    pub fn uniform(&mut self) -> f64 {
        self.next_u64() as f64 / (1u64 << 31) as f64
    }

    pub fn range(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    pub fn sentence(&mut self, max: usize) -> String {
        let n = 1 + self.range(max);
        (0..n)
            .map(|_| {
                // occasional out-of-vocabulary word with fresh characters
                if self.range(5) == 0 {
                    format!("x{}q", self.range(100))
                } else {
                    WORDS[self.range(WORDS.len())].to_string()
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Posterior by direct enumeration in probability space:
/// `P(c | x) = P(c) Π_j θ_cj^{x_j} / Σ_c' P(c') Π_j θ_c'j^{x_j}`, with
/// `θ_cj = (N_cj + α) / (N_c + α·F)`.
pub fn bayes_oracle(train: &[Vec<f64>], y: &[usize], classes: usize, alpha: f64, x: &[f64]) -> Vec<f64> {
    let f = train[0].len();
    let n = y.len() as f64;
    let mut joint = Vec::new();
    for c in 0..classes {
        let members: Vec<&Vec<f64>> = train.iter().zip(y).filter(|(_, &k)| k == c).map(|(r, _)| r).collect();
        let prior = members.len() as f64 / n;
        let per_term: Vec<f64> = (0..f).map(|j| members.iter().map(|r| r[j]).sum()).collect();
        let total: f64 = per_term.iter().sum::<f64>() + alpha * f as f64;
        let mut p = prior;
        for j in 0..f {
            p *= ((per_term[j] + alpha) / total).powf(x[j]);
        }
        joint.push(p);
    }
    let z: f64 = joint.iter().sum();
    joint.iter().map(|p| p / z).collect()
}
