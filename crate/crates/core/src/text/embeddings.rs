use std::fs;
use std::path::Path;

use rand::Rng;

use super::vocab::{Vocab, PAD};
use super::TextError;
use crate::autodiff::{Real, Tensor};

/// Half-width of the uniform range for words without a pretrained vector.
pub const OOV_INIT_RANGE: f64 = 0.25;

/// Builds the `V × dim` word-embedding matrix. Rows for words found in the
/// whitespace-separated vector file are copied; all others are drawn from
/// U(−0.25, 0.25). The `<pad>` row is zero.
pub fn load_pretrained_embeddings<F: Real, R: Rng>(
    path: Option<&Path>,
    vocab: &Vocab,
    dim: usize,
    rng: &mut R,
) -> Result<Tensor<F>, TextError> {
    let mut data: Vec<F> = (0..vocab.len() * dim)
        .map(|_| F::of(rng.gen_range(-OOV_INIT_RANGE..OOV_INIT_RANGE)))
        .collect();
    if let Some(path) = path {
        let text = fs::read_to_string(path).map_err(|e| TextError::io(path, e))?;
        for (n, line) in text.lines().enumerate() {
            let mut parts = line.split_whitespace();
            let Some(word) = parts.next() else { continue };
            let values: Vec<&str> = parts.collect();
            if values.len() != dim {
                return Err(TextError::WidthMismatch {
                    line: n + 1,
                    expected: dim,
                    actual: values.len(),
                });
            }
            if !vocab.contains(word) {
                continue;
            }
            let row = vocab.word_id(word) as usize;
            for (j, v) in values.iter().enumerate() {
                let x: f64 = v.parse().map_err(|_| TextError::Malformed {
                    line: n + 1,
                    reason: format!("bad number `{v}`"),
                })?;
                data[row * dim + j] = F::of(x);
            }
        }
    }
    let pad = PAD as usize;
    data[pad * dim..(pad + 1) * dim].fill(F::zero());
    Ok(Tensor::from_rows(vocab.len(), dim, data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::dataset::UserRecord;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn vocab() -> Vocab {
        let u = UserRecord {
            id: "1".into(),
            description: "cat dog".into(),
            tweets: vec![],
            label: "x".into(),
        };
        Vocab::build(&[u], 1).unwrap()
    }

    #[test]
    fn present_rows_copied_absent_rows_uniform() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("emb.txt");
        fs::write(&p, "cat 0.5 -1.5 2.0\nzebra 1 1 1\n").unwrap();
        let v = vocab();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let m: Tensor<f64> = load_pretrained_embeddings(Some(&p), &v, 3, &mut rng).unwrap();
        assert_eq!(m.row(v.word_id("cat") as usize), &[0.5, -1.5, 2.0]);
        for &x in m.row(v.word_id("dog") as usize) {
            assert!(x > -0.25 && x < 0.25);
        }
        assert_eq!(m.row(0), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn no_file_all_uniform_except_pad() {
        let v = vocab();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m: Tensor<f32> = load_pretrained_embeddings(None, &v, 4, &mut rng).unwrap();
        assert_eq!(m.shape(), &[v.len(), 4]);
        assert!(m.row(0).iter().all(|&x| x == 0.0));
        for r in 1..v.len() {
            assert!(m.row(r).iter().all(|&x| x.abs() < 0.25));
        }
    }

    #[test]
    fn width_mismatch_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("emb.txt");
        fs::write(&p, "cat 1 2 3\ndog 1 2\n").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let err = load_pretrained_embeddings::<f64, _>(Some(&p), &vocab(), 3, &mut rng).unwrap_err();
        assert!(matches!(
            err,
            TextError::WidthMismatch { line: 2, expected: 3, actual: 2 }
        ));
    }
}
