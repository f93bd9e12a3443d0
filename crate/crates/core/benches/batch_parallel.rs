use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hsan_core::model::{Hsan, ModelConfig};
use hsan_core::parallel::Execution;
use hsan_core::synth::{gen_corpus, SynthSpec};
use hsan_core::text::{encode_all, EncodedUser, EncodingConfig, Vocab};
use hsan_core::train::batch_gradient;
use hsan_core::LabelSet;

fn setup() -> (Hsan<f32>, Vec<EncodedUser>) {
    let spec = SynthSpec {
        users_per_role: [6, 1, 1],
        ..SynthSpec::default()
    };
    let corpus = gen_corpus(&spec).expect("valid spec");
    let labels = LabelSet::identity();
    let vocab = Vocab::build(&corpus.splits[0], 1).expect("non-empty corpus");
    let enc = EncodingConfig {
        desc_len: 16,
        tweet_len: 16,
        max_tweets: 20,
        max_chars: 12,
    };
    let users = encode_all(&corpus.splits[0], &vocab, &labels, &enc).expect("labels match");
    let mut cfg = ModelConfig::desk();
    cfg.vocab_size = vocab.len();
    (Hsan::new(cfg, enc, None, 1).expect("valid config"), users)
}

fn bench(c: &mut Criterion) {
    let (model, users) = setup();
    let batch: Vec<&EncodedUser> = users.iter().take(32).collect();
    let mut group = c.benchmark_group("batch_gradient");
    group.sample_size(10);
    for (name, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| batch_gradient(&model, &batch, 7, 1, exec).expect("finite"))
        });
    }
    group.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
