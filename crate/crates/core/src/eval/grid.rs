use serde::{Deserialize, Serialize};

use crate::autodiff::Real;
use crate::labels::LabelSet;
use crate::model::{Ablation, Hsan, ModelConfig};
use crate::parallel::Execution;
use crate::text::{EncodedUser, EncodingConfig};
use crate::train::{derive_seed, evaluate, train, TrainConfig, TrainError, TrainOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    pub label: String,
    pub ablation: Ablation,
}

impl GridEntry {
    pub fn new(label: impl Into<String>, ablation: Ablation) -> Self {
        Self {
            label: label.into(),
            ablation,
        }
    }
}

/// Full model plus the component ablations: attentions, char-CNN,
/// description, tweets.
pub fn table3_grid() -> Vec<GridEntry> {
    let a = Ablation::FULL;
    vec![
        GridEntry::new("full", a),
        GridEntry::new("w/o attentions", Ablation::NO_ATTENTION),
        GridEntry::new("w/o charcnn", Ablation { no_charcnn: true, ..a }),
        GridEntry::new("w/o description", Ablation { no_description: true, ..a }),
        GridEntry::new("w/o tweets", Ablation { no_tweets: true, ..a }),
    ]
}

/// Full model plus each attention level removed, and all of them.
pub fn table4_grid() -> Vec<GridEntry> {
    let a = Ablation::FULL;
    vec![
        GridEntry::new("full", a),
        GridEntry::new("w/o word attention", Ablation { no_word_attn: true, ..a }),
        GridEntry::new("w/o field attention", Ablation { no_field_attn: true, ..a }),
        GridEntry::new("w/o tweet attention", Ablation { no_tweet_attn: true, ..a }),
        GridEntry::new("w/o all attention", Ablation::NO_ATTENTION),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub label: String,
    pub ablation: Ablation,
    pub seeds: Vec<u64>,
    pub accuracy: Vec<f64>,
    pub macro_f1: Vec<f64>,
    pub median_accuracy: Option<f64>,
    pub median_macro_f1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridTable {
    pub rows: Vec<GridRow>,
}

pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite metrics"));
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

impl GridTable {
    pub fn row(&self, label: &str) -> Option<&GridRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{:<24} {:>10} {:>10}  seeds\n", "model", "accuracy", "macro-F1");
        for r in &self.rows {
            match (&r.skipped, r.median_accuracy, r.median_macro_f1) {
                (Some(why), _, _) => s.push_str(&format!("{:<24} skipped: {why}\n", r.label)),
                (None, Some(a), Some(f)) => s.push_str(&format!(
                    "{:<24} {:>10.4} {:>10.4}  {}\n",
                    r.label,
                    a,
                    f,
                    r.seeds.len()
                )),
                _ => s.push_str(&format!("{:<24} no result\n", r.label)),
            }
        }
        s
    }
}

/// Splits the grid draws on.
pub struct GridData<'a> {
    pub labels: &'a LabelSet,
    pub train: &'a [EncodedUser],
    pub dev: &'a [EncodedUser],
    pub test: &'a [EncodedUser],
}

/// One independent train-and-evaluate run per entry and seed; rows report
/// test metrics with medians over seeds. Invalid switch combinations are
/// skipped with the reason recorded.
#[allow(clippy::too_many_arguments)]
pub fn ablation_grid<F: Real>(
    data: &GridData<'_>,
    base: &ModelConfig,
    encoding: EncodingConfig,
    grid: &[GridEntry],
    cfg: &TrainConfig,
    seeds: &[u64],
    exec: Execution,
) -> Result<GridTable, TrainError> {
    let mut rows = Vec::with_capacity(grid.len());
    for entry in grid {
        let mut row = GridRow {
            label: entry.label.clone(),
            ablation: entry.ablation,
            seeds: Vec::new(),
            accuracy: Vec::new(),
            macro_f1: Vec::new(),
            median_accuracy: None,
            median_macro_f1: None,
            skipped: None,
        };
        let mut config = base.clone();
        config.ablation = entry.ablation;
        if let Err(e) = config.validate(&encoding) {
            row.skipped = Some(e.to_string());
            rows.push(row);
            continue;
        }
        for &seed in seeds {
            let model = Hsan::<F>::new(config.clone(), encoding, None, derive_seed(&[seed, 0x9d]))?;
            let run_cfg = TrainConfig {
                seed,
                ..cfg.clone()
            };
            let outcome = train(
                model,
                data.labels,
                data.train,
                data.dev,
                &run_cfg,
                &mut TrainOptions::new(exec),
            )?;
            let (_, report) = evaluate(&outcome.best, data.labels, data.test, exec)?;
            log::info!(
                "{} seed {seed}: test accuracy {:.4}, macro-F1 {:.4}",
                entry.label,
                report.accuracy,
                report.macro_f1
            );
            row.seeds.push(seed);
            row.accuracy.push(report.accuracy);
            row.macro_f1.push(report.macro_f1);
        }
        row.median_accuracy = median(&row.accuracy);
        row.median_macro_f1 = median(&row.macro_f1);
        rows.push(row);
    }
    Ok(GridTable { rows })
}
