mod common;

use common::*;
use hsan_core::eval::{
    attention_importance, confusion, key_importance, metrics, render_heatmap, ConfusionMatrix,
};
use hsan_core::model::Ablation;
use hsan_core::LabelSet;
use proptest::prelude::*;

const PUBLISHED: [[u64; 7]; 7] = [
    [535, 10, 12, 0, 5, 2, 4],
    [6, 81, 1, 4, 2, 2, 1],
    [15, 0, 55, 2, 2, 1, 0],
    [1, 1, 0, 71, 1, 0, 0],
    [1, 2, 1, 4, 58, 0, 0],
    [1, 1, 0, 0, 0, 79, 0],
    [1, 0, 1, 0, 0, 0, 37],
];

/// Per-class F1 as 2TP / (2TP + FP + FN), averaged.
fn macro_f1_oracle(m: &[Vec<u64>]) -> f64 {
    let n = m.len();
    let mut sum = 0.0;
    for (c, row) in m.iter().enumerate() {
        let tp = row[c] as f64;
        let fp: f64 = (0..n).filter(|&r| r != c).map(|r| m[r][c] as f64).sum();
        let fn_: f64 = row.iter().sum::<u64>() as f64 - tp;
        let den = 2.0 * tp + fp + fn_;
        sum += if den == 0.0 { 0.0 } else { 2.0 * tp / den };
    }
    sum / n as f64
}

/// Expands a count matrix into prediction and gold sequences.
fn expand(m: &[[u64; 7]; 7]) -> (Vec<usize>, Vec<usize>) {
    let (mut p, mut g) = (Vec::new(), Vec::new());
    for (t, row) in m.iter().enumerate() {
        for (q, &c) in row.iter().enumerate() {
            for _ in 0..c {
                g.push(t);
                p.push(q);
            }
        }
    }
    (p, g)
}

#[test]
fn published_matrix_fixture() {
    let labels = LabelSet::identity();
    let (p, g) = expand(&PUBLISHED);
    let cm = confusion(&p, &g, &labels).unwrap();
    assert_eq!(cm.row_sums(), vec![568, 97, 75, 74, 66, 81, 39]);
    assert_eq!(cm.total(), 1000);
    let r = metrics(&cm).unwrap();
    assert_eq!(r.accuracy, 0.916);
    assert!((r.macro_f1 - macro_f1_oracle(&cm.counts)).abs() < 1e-12);
    assert!((r.macro_f1 * 100.0 - 88.63).abs() < 0.005, "{}", r.macro_f1);
    assert_eq!(r.per_class[0].support, 568);
    assert!(r.to_text().contains("government"));
}

#[test]
fn zero_divisions_score_zero() {
    let labels = LabelSet::new(["x", "y", "z"]).unwrap();
    // class z never predicted nor present
    let cm = ConfusionMatrix::from_counts(&labels, vec![vec![3, 1, 0], vec![0, 2, 0], vec![0, 0, 0]]).unwrap();
    let r = metrics(&cm).unwrap();
    assert_eq!(r.per_class[2].f1, 0.0);
    assert_eq!(r.per_class[2].precision, 0.0);
    assert!((r.macro_f1 - macro_f1_oracle(&cm.counts)).abs() < 1e-15);
    assert!(metrics(&ConfusionMatrix::zeros(&labels)).is_err());
    assert!(confusion(&[0, 1], &[0], &labels).is_err());
    assert!(confusion(&[0, 5], &[0, 1], &labels).is_err());
}

fn labeled_pairs() -> impl Strategy<Value = Vec<(usize, usize)>> {
    prop::collection::vec((0usize..7, 0usize..7), 1..200)
}

proptest! {
    #[test]
    fn accuracy_is_mean_of_hits(pairs in labeled_pairs()) {
        let (p, g): (Vec<usize>, Vec<usize>) = pairs.iter().cloned().unzip();
        let r = metrics(&confusion(&p, &g, &LabelSet::identity()).unwrap()).unwrap();
        let hits = pairs.iter().filter(|(a, b)| a == b).count() as f64;
        prop_assert!((r.accuracy - hits / pairs.len() as f64).abs() < 1e-15);
        prop_assert!((r.macro_f1 - macro_f1_oracle(&r.matrix.counts)).abs() < 1e-12);
    }

    #[test]
    fn relabeling_permutes_the_matrix(pairs in labeled_pairs(), perm in Just((0..7).collect::<Vec<usize>>()).prop_shuffle()) {
        let labels = LabelSet::identity();
        let (p, g): (Vec<usize>, Vec<usize>) = pairs.iter().cloned().unzip();
        let a = metrics(&confusion(&p, &g, &labels).unwrap()).unwrap();
        let pp: Vec<usize> = p.iter().map(|&x| perm[x]).collect();
        let gg: Vec<usize> = g.iter().map(|&x| perm[x]).collect();
        let b = metrics(&confusion(&pp, &gg, &labels).unwrap()).unwrap();
        for i in 0..7 {
            for j in 0..7 {
                prop_assert_eq!(a.matrix.counts[i][j], b.matrix.counts[perm[i]][perm[j]]);
            }
        }
        prop_assert!((a.macro_f1 - b.macro_f1).abs() < 1e-12);
        prop_assert_eq!(a.accuracy, b.accuracy);
    }
}

#[test]
fn importance_oracle_on_tiny_model() {
    let enc = tiny_encoding();
    let model = tiny_model(Ablation::FULL, 17);
    let rec = record("alpha beta gamma", &["delta", "eta theta"], "b");
    let user = encode(&rec, &enc);
    let report = attention_importance(&model, &user, Some(&rec)).unwrap();

    let store = &model.params;
    let x = embed(store, &model.config, &user.description, enc.max_chars);
    let h = bilstm(store, &x, &user.description.mask, model.config.dim);
    let (_, heads) = mha(store, "word", &h, &user.description.mask, model.config.heads);
    let n = heads[0].len();
    let mut want = vec![0.0; n];
    for a in &heads {
        for row in a {
            for (k, w) in want.iter_mut().enumerate() {
                *w += row[k];
            }
        }
    }
    let total: f64 = want.iter().sum();
    let desc = report.description.as_ref().unwrap();
    assert_eq!(desc.tokens, ["alpha", "beta", "gamma"]);
    for (got, w) in desc.weights.iter().zip(&want) {
        assert!((got - w / total).abs() < 1e-10);
    }

    // the single-word tweet puts all its weight on that word
    assert_eq!(report.tweets.len(), 2);
    assert_eq!(report.tweets[0].words.as_ref().unwrap().weights, vec![1.0]);
    let tw: f64 = report.tweets.iter().map(|t| t.weight.unwrap()).sum();
    assert!((tw - 1.0).abs() < 1e-12);
    let f = report.fields.unwrap();
    assert!((f[0] + f[1] - 1.0).abs() < 1e-12);
    let sum: f64 = report.probs.iter().sum();
    assert!((sum - 1.0).abs() < 1e-12);

    let html = render_heatmap(&[report], &["a".into(), "b".into(), "c".into()]);
    assert!(html.contains("gamma") && html.starts_with("<!DOCTYPE html>"));
}

#[test]
fn ablated_levels_report_nothing() {
    let model = tiny_model(Ablation { no_tweet_attn: true, no_field_attn: true, ..Ablation::FULL }, 3);
    let rec = record("alpha", &["beta"], "a");
    let report = attention_importance(&model, &encode(&rec, &tiny_encoding()), None).unwrap();
    assert!(report.fields.is_none());
    assert!(report.tweets.iter().all(|t| t.weight.is_none()));
    assert_eq!(report.description.unwrap().weights[0], 1.0);
}

proptest! {
    #[test]
    fn key_importance_is_a_distribution(seed in 0u64..1000, n in 1usize..6, masked in 0usize..6) {
        let mut rng = Lcg(seed);
        let mask: Vec<bool> = (0..n).map(|i| i == 0 || i != masked % n).collect();
        let heads: Vec<hsan_core::autodiff::Tensor<f64>> = (0..2)
            .map(|_| hsan_core::autodiff::Tensor::from_rows(n, n, (0..n * n).map(|_| rng.uniform()).collect()))
            .collect();
        let w = key_importance(&heads, &mask);
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for (wi, &m) in w.iter().zip(&mask) {
            prop_assert!(*wi >= 0.0);
            if !m { prop_assert_eq!(*wi, 0.0); }
        }
    }
}
