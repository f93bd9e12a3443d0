use rand::Rng;

use super::config::ModelConfig;
use super::ModelError;
use crate::autodiff::{ParamId, ParamStore, Real, Tensor};
use crate::text::{CHARSET_SIZE, CHAR_PAD, PAD};

/// Attention levels. Word-level parameters are shared by the description
/// and every tweet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttnLevel {
    Word,
    Tweet,
    Field,
}

impl AttnLevel {
    pub const ALL: [AttnLevel; 3] = [AttnLevel::Word, AttnLevel::Tweet, AttnLevel::Field];

    pub fn name(self) -> &'static str {
        match self {
            AttnLevel::Word => "word",
            AttnLevel::Tweet => "tweet",
            AttnLevel::Field => "field",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvIds {
    pub width: usize,
    pub weight: ParamId,
    pub bias: ParamId,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LstmIds {
    /// `2D × 4D`, gate blocks ordered input, forget, cell, output.
    pub w_input: ParamId,
    /// `D × 4D`
    pub w_hidden: ParamId,
    /// `4D`
    pub bias: ParamId,
}

/// Query/key/value projections hold every head side by side: head `i` owns
/// columns `[i·d_k, (i+1)·d_k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttnIds {
    pub w_query: ParamId,
    pub w_key: ParamId,
    pub w_value: ParamId,
    pub w_output: ParamId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamIds {
    pub word_emb: ParamId,
    pub char_emb: ParamId,
    pub conv: Vec<ConvIds>,
    pub lstm_fwd: LstmIds,
    pub lstm_bwd: LstmIds,
    pub attn: [AttnIds; 3],
    pub cls_weight: ParamId,
    pub cls_bias: ParamId,
}

pub const CLASSIFIER_WEIGHT: &str = "classifier.weight";
pub const CLASSIFIER_BIAS: &str = "classifier.bias";

impl ParamIds {
    pub fn attn(&self, level: AttnLevel) -> &AttnIds {
        &self.attn[level as usize]
    }

    pub fn is_classifier(&self, id: ParamId) -> bool {
        id == self.cls_weight || id == self.cls_bias
    }

    /// Looks parameters up by their stable names.
    pub fn resolve<F: Real>(store: &ParamStore<F>, cfg: &ModelConfig) -> Result<Self, ModelError> {
        let id = |n: &str| store.id(n).map_err(ModelError::from);
        let lstm = |dir: &str| -> Result<LstmIds, ModelError> {
            Ok(LstmIds {
                w_input: id(&format!("lstm.{dir}.w_input"))?,
                w_hidden: id(&format!("lstm.{dir}.w_hidden"))?,
                bias: id(&format!("lstm.{dir}.bias"))?,
            })
        };
        let attn = |lvl: AttnLevel| -> Result<AttnIds, ModelError> {
            let p = format!("attn.{}", lvl.name());
            Ok(AttnIds {
                w_query: id(&format!("{p}.w_query"))?,
                w_key: id(&format!("{p}.w_key"))?,
                w_value: id(&format!("{p}.w_value"))?,
                w_output: id(&format!("{p}.w_output"))?,
            })
        };
        let conv = cfg
            .char_windows
            .iter()
            .map(|&w| {
                Ok(ConvIds {
                    width: w,
                    weight: id(&format!("char_conv.w{w}.weight"))?,
                    bias: id(&format!("char_conv.w{w}.bias"))?,
                })
            })
            .collect::<Result<Vec<_>, ModelError>>()?;
        Ok(Self {
            word_emb: id("word_emb")?,
            char_emb: id("char_emb")?,
            conv,
            lstm_fwd: lstm("fwd")?,
            lstm_bwd: lstm("bwd")?,
            attn: [
                attn(AttnLevel::Word)?,
                attn(AttnLevel::Tweet)?,
                attn(AttnLevel::Field)?,
            ],
            cls_weight: id(CLASSIFIER_WEIGHT)?,
            cls_bias: id(CLASSIFIER_BIAS)?,
        })
    }
}

/// Ordered `(name, shape)` manifest for a configuration.
pub fn param_manifest(cfg: &ModelConfig) -> Vec<(String, Vec<usize>)> {
    let d = cfg.dim;
    let hd = cfg.heads * cfg.head_dim();
    let mut m = vec![
        ("word_emb".to_string(), vec![cfg.vocab_size, d]),
        ("char_emb".to_string(), vec![CHARSET_SIZE, cfg.char_dim]),
    ];
    for &w in &cfg.char_windows {
        m.push((
            format!("char_conv.w{w}.weight"),
            vec![w * cfg.char_dim, cfg.char_maps],
        ));
        m.push((format!("char_conv.w{w}.bias"), vec![cfg.char_maps]));
    }
    for dir in ["fwd", "bwd"] {
        m.push((format!("lstm.{dir}.w_input"), vec![2 * d, 4 * d]));
        m.push((format!("lstm.{dir}.w_hidden"), vec![d, 4 * d]));
        m.push((format!("lstm.{dir}.bias"), vec![4 * d]));
    }
    for lvl in AttnLevel::ALL {
        let p = format!("attn.{}", lvl.name());
        m.push((format!("{p}.w_query"), vec![2 * d, hd]));
        m.push((format!("{p}.w_key"), vec![2 * d, hd]));
        m.push((format!("{p}.w_value"), vec![2 * d, hd]));
        m.push((format!("{p}.w_output"), vec![hd, 2 * d]));
    }
    m.push((CLASSIFIER_WEIGHT.to_string(), vec![cfg.num_classes, 2 * d]));
    m.push((CLASSIFIER_BIAS.to_string(), vec![cfg.num_classes]));
    m
}

fn uniform<F: Real, R: Rng>(rng: &mut R, n: usize, limit: f64) -> Vec<F> {
    (0..n).map(|_| F::of(rng.gen_range(-limit..limit))).collect()
}

fn xavier_limit(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Xavier-uniform `rows × cols` matrix.
pub(crate) fn xavier<F: Real, R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Tensor<F> {
    Tensor::from_rows(rows, cols, uniform(rng, rows * cols, xavier_limit(rows, cols)))
}

/// Fresh parameters. `word_emb` may be supplied (for instance from
/// pretrained vectors); otherwise it is drawn from U(−0.25, 0.25).
pub fn init_params<F: Real, R: Rng>(
    cfg: &ModelConfig,
    word_emb: Option<Tensor<F>>,
    rng: &mut R,
) -> Result<ParamStore<F>, ModelError> {
    let d = cfg.dim;
    let mut word_emb = word_emb;
    let mut store = ParamStore::new();
    for (name, shape) in param_manifest(cfg) {
        let n: usize = shape.iter().product();
        let value = match name.as_str() {
            "word_emb" => match word_emb.take() {
                Some(t) => {
                    if t.shape() != shape.as_slice() {
                        return Err(ModelError::Config(format!(
                            "word embedding shape {:?} does not match {:?}",
                            t.shape(),
                            shape
                        )));
                    }
                    t
                }
                None => {
                    let mut data = uniform(rng, n, 0.25);
                    let p = PAD as usize;
                    data[p * d..(p + 1) * d].fill(F::zero());
                    Tensor::new(shape, data).expect("manifest shape")
                }
            },
            "char_emb" => {
                let mut data = uniform(rng, n, 1.0);
                let p = CHAR_PAD as usize;
                data[p * cfg.char_dim..(p + 1) * cfg.char_dim].fill(F::zero());
                Tensor::new(shape, data).expect("manifest shape")
            }
            _ if name.ends_with(".bias") && name.starts_with("lstm.") => {
                let mut data = vec![F::zero(); n];
                data[d..2 * d].fill(F::one());
                Tensor::new(shape, data).expect("manifest shape")
            }
            _ if shape.len() == 1 => Tensor::new(shape, vec![F::zero(); n]).expect("manifest shape"),
            _ => xavier(rng, shape[0], shape[1]),
        };
        store.add(name, value)?;
    }
    Ok(store)
}
