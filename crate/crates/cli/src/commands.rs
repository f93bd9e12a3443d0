use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hsan_core::autodiff::{Precision, Real};
use hsan_core::baselines::{BaselineKind, BaselineModel};
use hsan_core::eval::{
    ablation_grid, attention_importance, confusion, metrics, render_heatmap, table3_grid,
    table4_grid, EvalReport, GridData, GridEntry,
};
use hsan_core::model::{
    check_every_ablation, forward_batch, read_checkpoint, CheckpointFile, CheckpointKind, Hsan,
    ModelConfig,
};
use hsan_core::parallel::Execution;
use hsan_core::synth::gen_corpus;
use hsan_core::text::{encode_all, load_dataset, EncodedUser, EncodingConfig, UserRecord, Vocab};
use hsan_core::train::{
    derive_seed, evaluate, finetune, init_from_pretrained, pretrain_public_figure,
    stratified_fraction, train, Checkpoint, LogRecord, TrainOptions, TrainOutcome,
};
use hsan_core::LabelSet;
use serde::Serialize;
use serde_json::json;

use crate::args::*;
use crate::paths::{
    checkpoint_file, dataset_file, optional_split, prepare_out, sibling_out, split_file,
};
use crate::settings::{resolve, Settings};

const EXEC: Execution = Execution::Parallel;

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let body = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}

fn write_text(path: &Path, body: &str) -> Result<()> {
    fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}

/// Persists the effective settings and the invocation for replay.
fn record_run(out: &Path, command: &str, settings: &Settings, inputs: serde_json::Value) -> Result<()> {
    write_json(&out.join("config.json"), settings)?;
    write_json(
        &out.join("command.json"),
        &json!({
            "command": command,
            "seed": settings.seed,
            "inputs": inputs,
            "argv": std::env::args().collect::<Vec<_>>(),
        }),
    )
}

fn load(path: &Path, labels: &LabelSet, enc: &EncodingConfig) -> Result<Vec<UserRecord>> {
    load_dataset(path, labels, enc).with_context(|| format!("loading {}", path.display()))
}

fn encode(users: &[UserRecord], vocab: &Vocab, labels: &LabelSet, enc: &EncodingConfig) -> Result<Vec<EncodedUser>> {
    Ok(encode_all(users, vocab, labels, enc)?)
}

fn report_files(out: &Path, name: &str, report: &EvalReport) -> Result<()> {
    write_json(&out.join(format!("{name}.json")), report)?;
    write_text(&out.join(format!("{name}.txt")), &report.to_text())
}

pub fn gen_synth(a: GenSynthArgs) -> Result<()> {
    let mut settings = resolve(&a.common, None)?;
    if let Some(spec) = &a.spec {
        let text = fs::read_to_string(spec).with_context(|| format!("reading {}", spec.display()))?;
        let mut merged = serde_json::to_value(&settings.synth)?;
        let patch: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", spec.display()))?;
        let (Some(m), Some(p)) = (merged.as_object_mut(), patch.as_object()) else {
            bail!("{} must hold a JSON object", spec.display());
        };
        for (k, v) in p {
            if !m.contains_key(k) {
                bail!("unknown synthetic-corpus setting `{k}`");
            }
            m.insert(k.clone(), v.clone());
        }
        settings.synth = serde_json::from_value(merged).context("invalid synthetic-corpus spec")?;
        if a.common.seed.is_some() {
            settings.synth.seed = settings.seed;
        } else {
            settings.seed = settings.synth.seed;
        }
    }
    prepare_out(&a.out, a.common.overwrite, &[])?;
    let corpus = gen_corpus(&settings.synth)?;
    let manifest = corpus.write(&settings.synth, &a.out)?;
    record_run(&a.out, "gen-synth", &settings, json!({}))?;
    for (split, counts) in &manifest.counts {
        let n: usize = counts.values().sum();
        println!("{split}: {n} users");
    }
    println!("wrote {}", a.out.display());
    Ok(())
}

/// Train split of a dataset directory, or the file itself.
fn train_records(p: &Path, labels: &LabelSet, enc: &EncodingConfig) -> Result<Vec<UserRecord>> {
    let file = if p.is_dir() { split_file(p, "train")? } else { dataset_file(p)? };
    load(&file, labels, enc)
}

/// Loads a dataset whose labels may come from either task.
fn records_any_task(p: &Path, s: &Settings) -> Result<Vec<UserRecord>> {
    train_records(p, &s.labels, &s.encoding).or_else(|_| train_records(p, &s.pretrain_labels, &s.encoding))
}

pub fn build_vocab(a: BuildVocabArgs) -> Result<()> {
    let settings = resolve(&a.common, None)?;
    let inputs: Vec<&Path> = a.data.iter().map(|p| p.as_path()).collect();
    prepare_out(&a.out, a.common.overwrite, &inputs)?;
    let mut corpus = Vec::new();
    for p in &a.data {
        corpus.extend(records_any_task(p, &settings)?);
    }
    let vocab = Vocab::build(&corpus, settings.min_freq)?;
    vocab.save(&a.out.join("vocab.tsv"))?;
    record_run(&a.out, "build-vocab", &settings, json!({ "data": a.data }))?;
    println!("{} words from {} users", vocab.len(), corpus.len());
    Ok(())
}

struct Splits {
    train: Vec<UserRecord>,
    dev: Vec<UserRecord>,
    test: Option<Vec<UserRecord>>,
}

fn load_splits(dir: &Path, labels: &LabelSet, enc: &EncodingConfig) -> Result<Splits> {
    Ok(Splits {
        train: load(&split_file(dir, "train")?, labels, enc)?,
        dev: load(&split_file(dir, "dev")?, labels, enc)?,
        test: optional_split(dir, "test").map(|f| load(&f, labels, enc)).transpose()?,
    })
}

fn vocab_for(path: Option<&PathBuf>, train: &[UserRecord], min_freq: usize) -> Result<Vocab> {
    match path {
        Some(p) => Vocab::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(Vocab::build(train, min_freq)?),
    }
}

/// Streams log records to `log.jsonl` and the logger.
struct LogFile {
    w: BufWriter<File>,
    err: Option<std::io::Error>,
}

impl LogFile {
    fn create(path: &Path) -> Result<Self> {
        let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        Ok(Self {
            w: BufWriter::new(f),
            err: None,
        })
    }

    fn push(&mut self, r: &LogRecord) {
        if let Some(acc) = r.dev_accuracy {
            log::info!(
                "step {} epoch {} loss {:.4} dev accuracy {:.4}{}",
                r.step,
                r.epoch,
                r.train_loss,
                acc,
                if r.checkpoint_saved { " (best)" } else { "" }
            );
        }
        let line = serde_json::to_string(r).expect("log records serialize");
        if self.err.is_none() {
            if let Err(e) = writeln!(self.w, "{line}") {
                self.err = Some(e);
            }
        }
    }

    fn finish(mut self) -> Result<()> {
        if let Some(e) = self.err {
            return Err(e.into());
        }
        self.w.flush()?;
        Ok(())
    }
}

fn run_logged<F: Real>(
    out: &Path,
    f: impl FnOnce(&mut TrainOptions<'_>) -> Result<TrainOutcome<F>>,
) -> Result<TrainOutcome<F>> {
    let mut log = LogFile::create(&out.join("log.jsonl"))?;
    let outcome = {
        let mut sink = |r: &LogRecord| log.push(r);
        let mut opts = TrainOptions {
            exec: EXEC,
            log_sink: Some(&mut sink),
        };
        f(&mut opts)?
    };
    log.finish()?;
    Ok(outcome)
}

#[allow(clippy::too_many_arguments)]
fn save_outcome<F: Real>(
    out: &Path,
    outcome: &TrainOutcome<F>,
    vocab: &Vocab,
    labels: &LabelSet,
    dev: &[EncodedUser],
    test: Option<&[EncodedUser]>,
) -> Result<()> {
    let ckpt = |model: &Hsan<F>| Checkpoint {
        model: model.clone(),
        vocab: vocab.clone(),
        labels: labels.clone(),
        best_dev_accuracy: outcome.best_dev_accuracy,
        best_step: outcome.best_step,
    };
    ckpt(&outcome.best).save(&out.join("best.ckpt"))?;
    ckpt(&outcome.last).save(&out.join("last.ckpt"))?;
    vocab.save(&out.join("vocab.tsv"))?;
    if !outcome.stages.is_empty() {
        write_json(&out.join("stages.json"), &outcome.stages)?;
    }
    let (_, dev_report) = evaluate(&outcome.best, labels, dev, EXEC)?;
    report_files(out, "dev_report", &dev_report)?;
    println!(
        "best dev accuracy {:.4} at step {} (macro-F1 {:.4})",
        outcome.best_dev_accuracy, outcome.best_step, dev_report.macro_f1
    );
    if let Some(test) = test {
        let (_, r) = evaluate(&outcome.best, labels, test, EXEC)?;
        report_files(out, "test_report", &r)?;
        println!("test accuracy {:.4}, macro-F1 {:.4}", r.accuracy, r.macro_f1);
    }
    Ok(())
}

fn model_config(s: &Settings, vocab: &Vocab, labels: &LabelSet) -> ModelConfig {
    ModelConfig {
        vocab_size: vocab.len(),
        num_classes: labels.len(),
        ..s.model.clone()
    }
}

fn train_typed<F: Real>(a: &TrainArgs, s: &Settings) -> Result<()> {
    let splits = load_splits(&a.data, &s.labels, &s.encoding)?;
    let vocab = vocab_for(a.vocab.as_ref(), &splits.train, s.min_freq)?;
    let train_set = encode(&splits.train, &vocab, &s.labels, &s.encoding)?;
    let train_set = if s.train_frac < 1.0 {
        stratified_fraction(&train_set, s.train_frac, s.seed)?
    } else {
        train_set
    };
    let dev = encode(&splits.dev, &vocab, &s.labels, &s.encoding)?;
    let test = splits.test.as_ref().map(|t| encode(t, &vocab, &s.labels, &s.encoding)).transpose()?;
    let model = Hsan::<F>::new(model_config(s, &vocab, &s.labels), s.encoding, None, derive_seed(&[s.seed, 0x9d]))?;
    log::info!("training on {} users, {} parameters", train_set.len(), model.params.num_scalars());
    let outcome = run_logged(&a.out, |opts| Ok(train(model, &s.labels, &train_set, &dev, &s.train, opts)?))?;
    save_outcome(&a.out, &outcome, &vocab, &s.labels, &dev, test.as_deref())
}

pub fn train_cmd(a: TrainArgs) -> Result<()> {
    let mut s = resolve(&a.common, Some(&a.model))?;
    if let Some(f) = a.train_frac {
        s.train_frac = f;
    }
    prepare_out(&a.out, a.common.overwrite, &[&a.data])?;
    record_run(&a.out, "train", &s, json!({ "data": a.data, "vocab": a.vocab }))?;
    match s.precision {
        Precision::F32 => train_typed::<f32>(&a, &s),
        Precision::F64 => train_typed::<f64>(&a, &s),
    }
}

/// Ids of every user in a dataset directory or file.
fn dataset_ids(p: &Path, s: &Settings) -> Result<HashSet<String>> {
    let files: Vec<PathBuf> = if p.is_dir() {
        ["train", "dev", "test"].iter().filter_map(|n| optional_split(p, n)).collect()
    } else {
        vec![dataset_file(p)?]
    };
    let mut ids = HashSet::new();
    for f in files {
        for u in load(&f, &s.labels, &s.encoding)? {
            ids.insert(u.id);
        }
    }
    Ok(ids)
}

fn pretrain_typed<F: Real>(a: &PretrainArgs, s: &Settings) -> Result<()> {
    let labels = &s.pretrain_labels;
    let splits = load_splits(&a.data, labels, &s.encoding)?;
    let vocab = vocab_for(a.vocab.as_ref(), &splits.train, s.min_freq)?;
    let exclude = match &a.exclude {
        Some(p) => dataset_ids(p, s)?,
        None => HashSet::new(),
    };
    let train_set = encode(&splits.train, &vocab, labels, &s.encoding)?;
    let dev = encode(&splits.dev, &vocab, labels, &s.encoding)?;
    let test = splits.test.as_ref().map(|t| encode(t, &vocab, labels, &s.encoding)).transpose()?;
    let model = Hsan::<F>::new(model_config(s, &vocab, labels), s.encoding, None, derive_seed(&[s.seed, 0x9d]))?;
    let outcome = run_logged(&a.out, |opts| {
        Ok(pretrain_public_figure(model, labels, &train_set, &dev, &s.train, &exclude, opts)?)
    })?;
    save_outcome(&a.out, &outcome, &vocab, labels, &dev, test.as_deref())
}

pub fn pretrain_cmd(a: PretrainArgs) -> Result<()> {
    let s = resolve(&a.common, Some(&a.model))?;
    prepare_out(&a.out, a.common.overwrite, &[&a.data])?;
    record_run(&a.out, "pretrain", &s, json!({ "data": a.data, "vocab": a.vocab, "exclude": a.exclude }))?;
    match s.precision {
        Precision::F32 => pretrain_typed::<f32>(&a, &s),
        Precision::F64 => pretrain_typed::<f64>(&a, &s),
    }
}

fn finetune_typed<F: Real>(a: &FinetuneArgs, s: &Settings, file: &CheckpointFile) -> Result<()> {
    let pre = Checkpoint::<F>::from_file(file)?;
    let enc = pre.model.encoding;
    let splits = load_splits(&a.data, &s.labels, &enc)?;
    let vocab = &pre.vocab;
    let train_set = encode(&splits.train, vocab, &s.labels, &enc)?;
    let train_set = if s.train_frac < 1.0 {
        stratified_fraction(&train_set, s.train_frac, s.seed)?
    } else {
        train_set
    };
    let dev = encode(&splits.dev, vocab, &s.labels, &enc)?;
    let test = splits.test.as_ref().map(|t| encode(t, vocab, &s.labels, &enc)).transpose()?;
    let target = ModelConfig {
        num_classes: s.labels.len(),
        ..pre.model.config.clone()
    };
    let model = init_from_pretrained(&pre, &target, &s.labels, vocab, derive_seed(&[s.seed, 0xc1]))?;
    let outcome = run_logged(&a.out, |opts| Ok(finetune(model, &s.labels, &train_set, &dev, &s.train, opts)?))?;
    save_outcome(&a.out, &outcome, vocab, &s.labels, &dev, test.as_deref())
}

pub fn finetune_cmd(a: FinetuneArgs) -> Result<()> {
    let mut s = resolve(&a.common, None)?;
    if let Some(f) = a.train_frac {
        s.train_frac = f;
    }
    if let Some(c) = a.clip_norm {
        s.train.clip_norm = Some(c);
    }
    let path = checkpoint_file(&a.from_ckpt)?;
    let file = read_checkpoint(&path)?;
    file.expect_kind(CheckpointKind::Hsan)?;
    // architecture and precision come from the pretrained checkpoint
    let pre_cfg: serde_json::Value = file.config.get("model").cloned().unwrap_or_default();
    s.model = serde_json::from_value(pre_cfg).context("checkpoint model config")?;
    s.model.num_classes = s.labels.len();
    if let Some(e) = file.config.get("encoding") {
        s.encoding = serde_json::from_value(e.clone()).context("checkpoint encoding")?;
    }
    s.precision = file.dtype;
    prepare_out(&a.out, a.common.overwrite, &[&a.data, &path])?;
    record_run(&a.out, "finetune", &s, json!({ "data": a.data, "from_ckpt": path }))?;
    match file.dtype {
        Precision::F32 => finetune_typed::<f32>(&a, &s, &file),
        Precision::F64 => finetune_typed::<f64>(&a, &s, &file),
    }
}

/// A loaded checkpoint of either family.
enum Loaded {
    Hsan32(Checkpoint<f32>),
    Hsan64(Checkpoint<f64>),
    Baseline(BaselineModel),
}

impl Loaded {
    fn open(p: &Path) -> Result<(PathBuf, Self)> {
        let path = checkpoint_file(p)?;
        let file = read_checkpoint(&path)?;
        let loaded = match (file.kind, file.dtype) {
            (CheckpointKind::Hsan, Precision::F32) => Loaded::Hsan32(Checkpoint::from_file(&file)?),
            (CheckpointKind::Hsan, Precision::F64) => Loaded::Hsan64(Checkpoint::from_file(&file)?),
            _ => Loaded::Baseline(BaselineModel::from_checkpoint(&file)?),
        };
        Ok((path, loaded))
    }

    fn labels(&self) -> &LabelSet {
        match self {
            Loaded::Hsan32(c) => &c.labels,
            Loaded::Hsan64(c) => &c.labels,
            Loaded::Baseline(b) => &b.labels,
        }
    }

    fn encoding(&self) -> EncodingConfig {
        match self {
            Loaded::Hsan32(c) => c.model.encoding,
            Loaded::Hsan64(c) => c.model.encoding,
            Loaded::Baseline(_) => EncodingConfig {
                max_tweets: usize::MAX,
                ..EncodingConfig::default()
            },
        }
    }

    /// Predicted class and class probabilities per user; baselines report
    /// only the class.
    fn predict(&self, users: &[UserRecord]) -> Result<Vec<(usize, Option<Vec<f64>>)>> {
        fn hsan<F: Real>(c: &Checkpoint<F>, users: &[UserRecord]) -> Result<Vec<(usize, Option<Vec<f64>>)>> {
            let enc = encode(users, &c.vocab, &c.labels, &c.model.encoding)?;
            Ok(forward_batch(&c.model, &enc, EXEC)?
                .into_iter()
                .map(|o| (o.predicted(), Some(o.probs.iter().map(|p| p.as_f64()).collect())))
                .collect())
        }
        match self {
            Loaded::Hsan32(c) => hsan(c, users),
            Loaded::Hsan64(c) => hsan(c, users),
            Loaded::Baseline(b) => Ok(b.predict(users).into_iter().map(|p| (p, None)).collect()),
        }
    }
}

fn read_setup(a: &ReadArgs, command: &str) -> Result<(Settings, PathBuf, Loaded, Vec<UserRecord>, PathBuf)> {
    let s = resolve(&a.common, None)?;
    let (ckpt_path, loaded) = Loaded::open(&a.ckpt)?;
    let data = dataset_file(&a.data)?;
    let users = load(&data, loaded.labels(), &loaded.encoding())?;
    if users.is_empty() {
        bail!("{} holds no users", data.display());
    }
    let out = a.out.clone().unwrap_or_else(|| sibling_out(&ckpt_path, command, &data));
    prepare_out(&out, a.common.overwrite, &[&data])?;
    record_run(&out, command, &s, json!({ "ckpt": ckpt_path, "data": data }))?;
    Ok((s, data, loaded, users, out))
}

pub fn evaluate_cmd(a: ReadArgs) -> Result<()> {
    let (_, data, loaded, users, out) = read_setup(&a, "evaluate")?;
    let labels = loaded.labels();
    let preds: Vec<usize> = loaded.predict(&users)?.into_iter().map(|p| p.0).collect();
    let golds = users.iter().map(|u| labels.id(&u.label)).collect::<Result<Vec<_>, _>>()?;
    let report = metrics(&confusion(&preds, &golds, labels)?)?;
    report_files(&out, "report", &report)?;
    println!("{}: {} users", data.display(), users.len());
    print!("{}", report.to_text());
    println!("wrote {}", out.display());
    Ok(())
}

#[derive(Serialize)]
struct Prediction<'a> {
    id: &'a str,
    gold: &'a str,
    predicted: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    probs: Option<serde_json::Map<String, serde_json::Value>>,
}

pub fn predict_cmd(a: ReadArgs) -> Result<()> {
    let (_, _, loaded, users, out) = read_setup(&a, "predict")?;
    let labels = loaded.labels();
    let path = out.join("predictions.jsonl");
    let mut w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
    for (u, (p, probs)) in users.iter().zip(loaded.predict(&users)?) {
        let probs = probs.map(|ps| {
            labels
                .names()
                .iter()
                .zip(ps)
                .map(|(n, p)| (n.clone(), json!(p)))
                .collect()
        });
        let row = Prediction {
            id: &u.id,
            gold: &u.label,
            predicted: labels.name(p),
            probs,
        };
        writeln!(w, "{}", serde_json::to_string(&row)?)?;
    }
    w.flush()?;
    println!("wrote {}", path.display());
    Ok(())
}

fn explain_typed<F: Real>(c: &Checkpoint<F>, users: &[UserRecord], out: &Path) -> Result<()> {
    let enc = encode(users, &c.vocab, &c.labels, &c.model.encoding)?;
    let reports = enc
        .iter()
        .zip(users)
        .map(|(e, u)| attention_importance(&c.model, e, Some(u)))
        .collect::<Result<Vec<_>, _>>()?;
    write_json(&out.join("attention.json"), &reports)?;
    write_text(&out.join("heatmap.html"), &render_heatmap(&reports, c.labels.names()))?;
    Ok(())
}

pub fn explain_cmd(a: ExplainArgs) -> Result<()> {
    let (_, _, loaded, mut users, out) = read_setup(&a.read, "explain")?;
    users.truncate(a.limit);
    match &loaded {
        Loaded::Hsan32(c) => explain_typed(c, &users, &out)?,
        Loaded::Hsan64(c) => explain_typed(c, &users, &out)?,
        Loaded::Baseline(_) => bail!("explain needs a network checkpoint; baselines have no attention"),
    }
    println!("explained {} users; wrote {}", users.len(), out.display());
    Ok(())
}

fn ablate_typed<F: Real>(a: &AblateArgs, s: &Settings) -> Result<()> {
    let splits = load_splits(&a.data, &s.labels, &s.encoding)?;
    let Some(test) = &splits.test else {
        bail!("{} has no test split", a.data.display());
    };
    let vocab = Vocab::build(&splits.train, s.min_freq)?;
    let enc = |u: &[UserRecord]| encode(u, &vocab, &s.labels, &s.encoding);
    let (train_set, dev, test) = (enc(&splits.train)?, enc(&splits.dev)?, enc(test)?);
    let grid: Vec<GridEntry> = match a.grid {
        GridArg::Components => table3_grid(),
        GridArg::Attention => table4_grid(),
        GridArg::Both => {
            let mut g = table3_grid();
            g.extend(table4_grid().into_iter().filter(|e| e.label != "full"));
            g
        }
    };
    let data = GridData {
        labels: &s.labels,
        train: &train_set,
        dev: &dev,
        test: &test,
    };
    let base = model_config(s, &vocab, &s.labels);
    let table = ablation_grid::<F>(&data, &base, s.encoding, &grid, &s.train, &s.grid.seeds, EXEC)?;
    write_json(&a.out.join("grid.json"), &table)?;
    write_text(&a.out.join("grid.txt"), &table.to_text())?;
    print!("{}", table.to_text());
    Ok(())
}

pub fn ablate_cmd(a: AblateArgs) -> Result<()> {
    let mut s = resolve(&a.common, Some(&a.model))?;
    if let Some(seeds) = &a.seeds {
        s.grid.seeds = seeds.clone();
    }
    if s.grid.seeds.is_empty() {
        bail!("no seeds given");
    }
    prepare_out(&a.out, a.common.overwrite, &[&a.data])?;
    record_run(&a.out, "ablate", &s, json!({ "data": a.data }))?;
    match s.precision {
        Precision::F32 => ablate_typed::<f32>(&a, &s),
        Precision::F64 => ablate_typed::<f64>(&a, &s),
    }
}

pub fn baseline_cmd(a: BaselineArgs) -> Result<()> {
    let s = resolve(&a.common, None)?;
    let enc = EncodingConfig {
        max_tweets: usize::MAX,
        ..s.encoding
    };
    let train_set = load(&split_file(&a.data, "train")?, &s.labels, &enc)?;
    let (eval_name, eval_file) = match optional_split(&a.data, "test") {
        Some(f) => ("test", f),
        None => ("dev", split_file(&a.data, "dev")?),
    };
    let eval_set = load(&eval_file, &s.labels, &enc)?;
    prepare_out(&a.out, a.common.overwrite, &[&a.data])?;
    record_run(&a.out, "baseline", &s, json!({ "data": a.data, "kind": format!("{:?}", a.kind) }))?;
    let kinds: Vec<BaselineKind> = match a.kind {
        KindArg::Mnb => vec![BaselineKind::Mnb],
        KindArg::Svm => vec![BaselineKind::Svm],
        KindArg::Fasttext => vec![BaselineKind::Fasttext],
        KindArg::All => BaselineKind::ALL.to_vec(),
    };
    let golds = eval_set.iter().map(|u| s.labels.id(&u.label)).collect::<Result<Vec<_>, _>>()?;
    let mut summary = format!("{:<12} {:>10} {:>10}  ({eval_name} split)\n", "baseline", "accuracy", "macro-F1");
    for kind in kinds {
        let model = BaselineModel::fit(kind, &train_set, &s.labels, &s.baseline)?;
        let report = metrics(&confusion(&model.predict(&eval_set), &golds, &s.labels)?)?;
        let name = kind.name();
        hsan_core::model::write_checkpoint(&a.out.join(format!("{name}.ckpt")), &model.to_checkpoint(&s.baseline))?;
        report_files(&a.out, &format!("{name}_report"), &report)?;
        let note = if kind.is_approximation() { "  approximation" } else { "" };
        summary.push_str(&format!("{name:<12} {:>10.4} {:>10.4}{note}\n", report.accuracy, report.macro_f1));
    }
    write_text(&a.out.join("summary.txt"), &summary)?;
    print!("{summary}");
    Ok(())
}

/// Words and users for the built-in gradient-check fixture.
fn gradcheck_fixture(enc: &EncodingConfig, num_classes: usize) -> Result<(Vocab, LabelSet, EncodedUser)> {
    let words = "alpha beta gamma delta epsilon zeta eta theta iota kappa lambda mu";
    let vocab = Vocab::build(
        &[UserRecord {
            id: "vocab".into(),
            description: words.into(),
            tweets: vec![],
            label: "c0".into(),
        }],
        1,
    )?;
    let labels = LabelSet::new((0..num_classes).map(|i| format!("c{i}")))?;
    let user = UserRecord {
        id: "fixture".into(),
        description: "alpha beta gamma".into(),
        tweets: vec!["delta eta".into(), "mu kappa iota".into()],
        label: labels.name(num_classes.min(2) - 1).to_string(),
    };
    let encoded = encode(std::slice::from_ref(&user), &vocab, &labels, enc)?.remove(0);
    Ok((vocab, labels, encoded))
}

pub fn gradcheck_cmd(a: GradcheckArgs) -> Result<()> {
    let s = resolve(&a.common, None)?;
    if let Some(out) = &a.out {
        prepare_out(out, a.common.overwrite, &[])?;
        record_run(out, "gradcheck", &s, json!({}))?;
    }
    let (vocab, _, user) = gradcheck_fixture(&s.encoding, s.model.num_classes)?;
    let base = ModelConfig {
        vocab_size: vocab.len(),
        ..s.model.clone()
    };
    let g = &s.gradcheck;
    let checks = check_every_ablation(&base, s.encoding, &user, s.seed, g.eps, g.tol)?;
    let mut failed = 0;
    for c in &checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        println!("{status} {:<60} max rel error {:.3e}", c.label, c.max_rel_error);
        if !c.passed {
            failed += 1;
            for p in c.report.failures() {
                println!("    {} [{}]: analytic {:e} numeric {:e}", p.name, p.worst_index, p.analytic, p.numeric);
            }
        }
    }
    if let Some(out) = &a.out {
        write_json(&out.join("gradcheck.json"), &checks)?;
    }
    println!("{} of {} variants pass (eps {:e}, tol {:e})", checks.len() - failed, checks.len(), g.eps, g.tol);
    if failed > 0 {
        bail!("{failed} variants failed the gradient check");
    }
    Ok(())
}
