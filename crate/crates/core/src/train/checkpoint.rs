use std::path::Path;

use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::autodiff::Real;
use crate::labels::LabelSet;
use crate::model::{
    read_checkpoint, write_checkpoint, CheckpointError, CheckpointFile, CheckpointKind, Hsan,
    ModelConfig,
};
use crate::text::{EncodingConfig, Vocab};

/// A trained network with everything needed to reuse it.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<F> {
    pub model: Hsan<F>,
    pub vocab: Vocab,
    pub labels: LabelSet,
    pub best_dev_accuracy: f64,
    pub best_step: u64,
}

#[derive(Serialize, Deserialize)]
struct ConfigBlock {
    model: ModelConfig,
    encoding: EncodingConfig,
}

#[derive(Serialize, Deserialize)]
struct MetaBlock {
    labels: LabelSet,
    best_dev_accuracy: f64,
    best_step: u64,
    vocab_fingerprint: String,
    vocab: String,
}

impl<F: Real> Checkpoint<F> {
    pub fn to_file(&self) -> CheckpointFile {
        let config = ConfigBlock {
            model: self.model.config.clone(),
            encoding: self.model.encoding,
        };
        let meta = MetaBlock {
            labels: self.labels.clone(),
            best_dev_accuracy: self.best_dev_accuracy,
            best_step: self.best_step,
            vocab_fingerprint: self.vocab.fingerprint(),
            vocab: self.vocab.to_tsv(),
        };
        CheckpointFile::from_params(
            CheckpointKind::Hsan,
            serde_json::to_value(config).expect("config serializes"),
            serde_json::to_value(meta).expect("meta serializes"),
            &self.model.params,
        )
    }

    pub fn from_file(file: &CheckpointFile) -> Result<Self, TrainError> {
        file.expect_kind(CheckpointKind::Hsan)?;
        let header = |e: serde_json::Error| TrainError::Checkpoint(CheckpointError::Header(e.to_string()));
        let config: ConfigBlock = serde_json::from_value(file.config.clone()).map_err(header)?;
        let meta: MetaBlock = serde_json::from_value(file.meta.clone()).map_err(header)?;
        let vocab = Vocab::from_tsv(&meta.vocab)?;
        if vocab.fingerprint() != meta.vocab_fingerprint {
            return Err(TrainError::Mismatch {
                field: "vocab".into(),
                detail: "embedded vocabulary does not match its fingerprint".into(),
            });
        }
        let model = Hsan::from_params(config.model, config.encoding, file.to_params())?;
        Ok(Self {
            model,
            vocab,
            labels: meta.labels,
            best_dev_accuracy: meta.best_dev_accuracy,
            best_step: meta.best_step,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), TrainError> {
        Ok(write_checkpoint(path, &self.to_file())?)
    }

    pub fn load(path: &Path) -> Result<Self, TrainError> {
        Self::from_file(&read_checkpoint(path)?)
    }
}
