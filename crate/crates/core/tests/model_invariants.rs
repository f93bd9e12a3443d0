mod common;

use common::*;
use hsan_core::model::{Ablation, Hsan};
use hsan_core::text::EncodingConfig;
use proptest::prelude::*;

fn sentence() -> impl Strategy<Value = String> {
    proptest::collection::vec(0..WORDS.len(), 1..=3)
        .prop_map(|ix| ix.iter().map(|&i| WORDS[i]).collect::<Vec<_>>().join(" "))
}

fn ablation() -> impl Strategy<Value = Ablation> {
    (0u8..64)
        .prop_map(Ablation::from_bits)
        .prop_filter("valid", |a| a.is_valid())
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn probabilities_are_a_distribution(
        desc in sentence(),
        tweets in proptest::collection::vec(sentence(), 0..=2),
        ab in ablation(),
        seed in 0u64..1000,
    ) {
        let model = tiny_model(ab, seed);
        let refs: Vec<&str> = tweets.iter().map(|s| s.as_str()).collect();
        let user = encode(&record(&desc, &refs, "a"), &tiny_encoding());
        let out = model.predict(&user).unwrap();
        let s: f64 = out.probs.iter().sum();
        prop_assert!((s - 1.0).abs() < 1e-12);
        prop_assert!(out.probs.iter().all(|&p| (0.0..=1.0).contains(&p)));
        prop_assert!(out.logits.iter().all(|x| x.is_finite()));
    }

    /// Tweet attention and the mean over tweets are both order-agnostic.
    #[test]
    fn tweet_order_does_not_matter(
        desc in sentence(),
        a in sentence(),
        b in sentence(),
        ab in ablation(),
        seed in 0u64..1000,
    ) {
        let model = tiny_model(ab, seed);
        let enc = tiny_encoding();
        let x = model.predict(&encode(&record(&desc, &[&a, &b], "a"), &enc)).unwrap();
        let y = model.predict(&encode(&record(&desc, &[&b, &a], "a"), &enc)).unwrap();
        prop_assert!(close(&x.probs, &y.probs, 1e-12), "{:?} vs {:?}", x.probs, y.probs);
    }

    /// Extra padding positions and empty tweet slots leave the output unchanged.
    #[test]
    fn padding_does_not_matter(
        desc in sentence(),
        tweets in proptest::collection::vec(sentence(), 0..=2),
        ab in ablation(),
        seed in 0u64..1000,
    ) {
        let model = tiny_model(ab, seed);
        let wide = EncodingConfig { desc_len: 6, tweet_len: 5, max_tweets: 4, ..tiny_encoding() };
        let padded = Hsan::from_params(model.config.clone(), wide, model.params.clone()).unwrap();
        let refs: Vec<&str> = tweets.iter().map(|s| s.as_str()).collect();
        let rec = record(&desc, &refs, "a");
        let x = model.predict(&encode(&rec, &tiny_encoding())).unwrap();
        let y = padded.predict(&encode(&rec, &wide)).unwrap();
        prop_assert!(close(&x.probs, &y.probs, 1e-12), "{:?} vs {:?}", x.probs, y.probs);
    }

    #[test]
    fn f32_tracks_f64(
        desc in sentence(),
        tweets in proptest::collection::vec(sentence(), 0..=2),
        seed in 0u64..1000,
    ) {
        let model = tiny_model(Ablation::FULL, seed);
        let single: Hsan<f32> = model.cast();
        let refs: Vec<&str> = tweets.iter().map(|s| s.as_str()).collect();
        let user = encode(&record(&desc, &refs, "a"), &tiny_encoding());
        let x = model.predict(&user).unwrap();
        let y = single.predict(&user).unwrap();
        for (p, q) in x.probs.iter().zip(&y.probs) {
            prop_assert!((p - *q as f64).abs() < 1e-5);
        }
    }
}

#[test]
fn training_mode_is_seed_deterministic() {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    let mut model = tiny_model(Ablation::FULL, 3);
    model.config.dropout = 0.5;
    let user = encode(&record("alpha beta", &["gamma delta", "eta"], "c"), &tiny_encoding());
    let (l1, g1) = model
        .loss_and_grad(&user, Some(ChaCha8Rng::seed_from_u64(9)))
        .unwrap();
    let (l2, g2) = model
        .loss_and_grad(&user, Some(ChaCha8Rng::seed_from_u64(9)))
        .unwrap();
    assert_eq!(l1.to_bits(), l2.to_bits());
    for id in model.params.ids() {
        assert_eq!(g1.get(id), g2.get(id));
    }
    let (l3, _) = model.loss_and_grad(&user, None).unwrap();
    assert_eq!(l3, model.loss(&user).unwrap());
}

#[test]
fn padding_rows_get_no_update() {
    let model = tiny_model(Ablation::FULL, 1);
    let user = encode(&record("mu", &["eta"], "a"), &tiny_encoding());
    let (_, g) = model.loss_and_grad(&user, None).unwrap();
    let ce = g.get(model.ids().char_emb).unwrap();
    assert!(ce[..model.config.char_dim].iter().all(|&x| x == 0.0));
    let (_, exact) = model.loss_and_exact_grad(&user, None).unwrap();
    let ce = exact.get(model.ids().char_emb).unwrap();
    assert!(ce[..model.config.char_dim].iter().any(|&x| x != 0.0));
}
