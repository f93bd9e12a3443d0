use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

fn with_suffix(p: &Path, ext: &str) -> PathBuf {
    let mut s = OsString::from(p.as_os_str());
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// A dataset file: the path itself, or the path with `.jsonl` appended.
pub fn dataset_file(p: &Path) -> Result<PathBuf> {
    if p.is_file() {
        return Ok(p.to_path_buf());
    }
    if p.is_dir() {
        bail!("{} is a directory; expected a dataset file", p.display());
    }
    let f = with_suffix(p, "jsonl");
    if f.is_file() {
        return Ok(f);
    }
    bail!("dataset {} not found", p.display())
}

/// A split inside a dataset directory.
pub fn split_file(dir: &Path, split: &str) -> Result<PathBuf> {
    if !dir.is_dir() {
        bail!("{} is not a dataset directory", dir.display());
    }
    let f = dir.join(format!("{split}.jsonl"));
    if !f.is_file() {
        bail!("{} has no {split} split ({} missing)", dir.display(), f.display());
    }
    Ok(f)
}

pub fn optional_split(dir: &Path, split: &str) -> Option<PathBuf> {
    let f = dir.join(format!("{split}.jsonl"));
    f.is_file().then_some(f)
}

/// A checkpoint: the path itself, or the path with `.ckpt` appended.
pub fn checkpoint_file(p: &Path) -> Result<PathBuf> {
    if p.is_file() {
        return Ok(p.to_path_buf());
    }
    let f = with_suffix(p, "ckpt");
    if f.is_file() {
        return Ok(f);
    }
    bail!("checkpoint {} not found", p.display())
}

/// Creates `out`, which must be empty unless `overwrite` is set. It may not
/// coincide with any input location.
pub fn prepare_out(out: &Path, overwrite: bool, inputs: &[&Path]) -> Result<()> {
    if out.exists() {
        if !out.is_dir() {
            bail!("output {} exists and is not a directory", out.display());
        }
        let canon = out.canonicalize()?;
        for input in inputs {
            let dir = if input.is_dir() { Some(*input) } else { input.parent() };
            if let Some(d) = dir.and_then(|d| d.canonicalize().ok()) {
                if d == canon {
                    bail!("output directory {} holds input data; choose another", out.display());
                }
            }
        }
        let non_empty = fs::read_dir(out)?.next().is_some();
        if non_empty && !overwrite {
            bail!("output directory {} is not empty; pass --overwrite to reuse it", out.display());
        }
    }
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))
}

/// Default output directory for read-only commands: next to the checkpoint,
/// named after the command and the dataset.
pub fn sibling_out(ckpt: &Path, command: &str, data: &Path) -> PathBuf {
    let stem = data
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "data".into());
    let ckpt_stem = ckpt
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".into());
    ckpt.parent()
        .unwrap_or(Path::new("."))
        .join(format!("{command}-{ckpt_stem}-{stem}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suffix_resolution() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("test.jsonl"), "").unwrap();
        fs::write(dir.path().join("best.ckpt"), "").unwrap();
        assert_eq!(dataset_file(&dir.path().join("test")).unwrap(), dir.path().join("test.jsonl"));
        assert_eq!(checkpoint_file(&dir.path().join("best")).unwrap(), dir.path().join("best.ckpt"));
        assert!(dataset_file(dir.path()).is_err());
        assert!(dataset_file(&dir.path().join("nope")).is_err());
    }

    #[test]
    fn output_must_be_fresh() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("run");
        prepare_out(&out, false, &[]).unwrap();
        fs::write(out.join("x"), "").unwrap();
        assert!(prepare_out(&out, false, &[]).is_err());
        prepare_out(&out, true, &[]).unwrap();
        let data = dir.path().join("data");
        fs::create_dir(&data).unwrap();
        assert!(prepare_out(&data, true, &[&data]).is_err());
    }
}
