use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use hsan_core::autodiff::Precision;
use hsan_core::baselines::BaselineConfig;
use hsan_core::model::ModelConfig;
use hsan_core::synth::SynthSpec;
use hsan_core::text::EncodingConfig;
use hsan_core::train::TrainConfig;
use hsan_core::LabelSet;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::args::{Common, ModelFlags};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSettings {
    pub seeds: Vec<u64>,
}

impl Default for GridSettings {
    fn default() -> Self {
        Self { seeds: vec![1, 2, 3] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GradcheckSettings {
    pub eps: f64,
    pub tol: f64,
}

impl Default for GradcheckSettings {
    fn default() -> Self {
        Self { eps: 1e-3, tol: 1e-4 }
    }
}

/// Every tunable of every subcommand. The top-level seed is copied into
/// the training and synthetic-corpus seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Settings {
    pub seed: u64,
    pub precision: Precision,
    pub labels: LabelSet,
    pub pretrain_labels: LabelSet,
    pub min_freq: usize,
    pub train_frac: f64,
    pub model: ModelConfig,
    pub encoding: EncodingConfig,
    pub train: TrainConfig,
    pub baseline: BaselineConfig,
    pub synth: SynthSpec,
    pub grid: GridSettings,
    pub gradcheck: GradcheckSettings,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            seed: 42,
            precision: Precision::F32,
            labels: LabelSet::identity(),
            pretrain_labels: LabelSet::public_figure(),
            min_freq: 1,
            train_frac: 1.0,
            model: ModelConfig::default(),
            encoding: EncodingConfig::default(),
            train: TrainConfig::default(),
            baseline: BaselineConfig::default(),
            synth: SynthSpec::default(),
            grid: GridSettings::default(),
            gradcheck: GradcheckSettings::default(),
        }
    }
}

pub fn preset(name: &str) -> Option<Settings> {
    let base = Settings::default();
    match name {
        "paper" => Some(base),
        "desk" => Some(Settings {
            model: ModelConfig::desk(),
            encoding: EncodingConfig {
                desc_len: 16,
                tweet_len: 16,
                max_tweets: 20,
                max_chars: 12,
            },
            train: TrainConfig {
                base_lr: 1e-3,
                late_lr: 1e-4,
                ..base.train.clone()
            },
            ..base
        }),
        "tiny" => Some(Settings {
            precision: Precision::F64,
            model: ModelConfig::tiny(),
            encoding: EncodingConfig {
                desc_len: 3,
                tweet_len: 3,
                max_tweets: 2,
                max_chars: 4,
            },
            train: TrainConfig {
                epochs: 2,
                batch_size: 8,
                base_lr: 0.02,
                late_lr: 0.005,
                eval_every: 4,
                ..base.train.clone()
            },
            ..base
        }),
        _ => None,
    }
}

/// Rejects keys in `given` that have no counterpart in `defaults`. Null
/// defaults (optional values) and empty-object defaults (free maps) accept
/// anything.
fn check_keys(given: &Value, defaults: &Value, path: &str) -> Result<()> {
    match (given, defaults) {
        (_, Value::Null) => Ok(()),
        (Value::Object(g), Value::Object(d)) if !d.is_empty() => {
            for (k, v) in g {
                let sub = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                match d.get(k) {
                    Some(dv) => check_keys(v, dv, &sub)?,
                    None => bail!("unknown setting `{sub}`"),
                }
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

fn merge(base: &mut Value, patch: &Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, p) => *b = p.clone(),
    }
}

fn apply_override(value: &mut Value, defaults: &Value, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| anyhow!("override `{spec}` is not of the form key=value"))?;
    let parsed = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut patch = parsed;
    for part in key.split('.').rev() {
        let mut m = serde_json::Map::new();
        m.insert(part.to_string(), patch);
        patch = Value::Object(m);
    }
    check_keys(&patch, defaults, "")?;
    merge(value, &patch);
    Ok(())
}

/// Defaults (or a preset) < settings file < `--set` overrides < flags.
pub fn resolve(common: &Common, model: Option<&ModelFlags>) -> Result<Settings> {
    let mut base = Settings::default();
    let mut file_patch = None;
    if let Some(c) = &common.config {
        match preset(c) {
            Some(p) => base = p,
            None => {
                let path = Path::new(c);
                if !path.is_file() {
                    bail!("--config `{c}` is neither a preset (paper, desk, tiny) nor a file");
                }
                let text = fs::read_to_string(path).with_context(|| format!("reading {c}"))?;
                let v: Value = serde_json::from_str(&text).with_context(|| format!("parsing {c}"))?;
                file_patch = Some(v);
            }
        }
    }
    let defaults = serde_json::to_value(&base)?;
    let mut value = defaults.clone();
    if let Some(p) = &file_patch {
        check_keys(p, &defaults, "")?;
        merge(&mut value, p);
    }
    for o in &common.overrides {
        apply_override(&mut value, &defaults, o)?;
    }
    let mut s: Settings = serde_json::from_value(value).context("invalid settings")?;
    if let Some(seed) = common.seed {
        s.seed = seed;
    }
    s.train.seed = s.seed;
    s.synth.seed = s.seed;
    if let Some(m) = model {
        apply_model_flags(&mut s, m);
    }
    Ok(s)
}

pub fn apply_model_flags(s: &mut Settings, m: &ModelFlags) {
    if let Some(p) = m.precision {
        s.precision = p.into();
    }
    if let Some(c) = m.clip_norm {
        s.train.clip_norm = Some(c);
    }
    let a = &mut s.model.ablation;
    let flags = [
        (m.no_word_attn, &mut a.no_word_attn),
        (m.no_tweet_attn, &mut a.no_tweet_attn),
        (m.no_field_attn, &mut a.no_field_attn),
        (m.no_charcnn, &mut a.no_charcnn),
        (m.no_description, &mut a.no_description),
        (m.no_tweets, &mut a.no_tweets),
    ];
    for (set, slot) in flags {
        if set {
            *slot = true;
        }
    }
}
