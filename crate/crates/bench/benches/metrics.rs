use std::hint::black_box;

use calmfeed_core::chat::RuleBasedChat;
use calmfeed_core::classifier::lexicon_classify;
use calmfeed_core::corpus::synthetic::synthetic_rows;
use calmfeed_core::detox::detoxify;
use calmfeed_core::fidelity::{assess, HashedBowEmbedder, OverlapNli};
use calmfeed_core::metrics::flesch_reading_ease;
use calmfeed_core::PresentationMode;
use criterion::{criterion_group, criterion_main, Criterion};

fn texts() -> Vec<String> {
    synthetic_rows(50, 1)
        .into_iter()
        .map(|r| format!("{} {}", r.title, r.description))
        .collect()
}

fn bench(c: &mut Criterion) {
    let texts = texts();
    c.bench_function("fre 200 texts", |b| {
        b.iter(|| {
            for t in &texts {
                black_box(flesch_reading_ease(t).unwrap());
            }
        })
    });
    c.bench_function("lexicon classify 200 texts", |b| {
        b.iter(|| {
            for t in &texts {
                black_box(lexicon_classify(t));
            }
        })
    });
    c.bench_function("mock detox + fidelity", |b| {
        b.iter(|| {
            let bundle = detoxify(&texts[0], &RuleBasedChat).unwrap();
            assess(0, PresentationMode::Cool, &texts[0], &bundle.cool.text, &HashedBowEmbedder, &OverlapNli).unwrap()
        })
    });
}

criterion_group!(benches, bench);
criterion_main!(benches);
