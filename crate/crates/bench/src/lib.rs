//! Throughput benchmarks, kept in a library so the bench target stays a
//! thin `criterion_main!` wrapper.

use criterion::{black_box, BenchmarkId, Criterion, Throughput};
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lmcompress::predictor::StaticModel;
use lmcompress::{
    compress, decode_stream, encode_stream, quantize_distribution, CompressOptions, PredictorSpec,
};

/// Skewed i.i.d. bytes plus the static model they were drawn from.
pub fn iid_symbols(n: usize, seed: u64) -> (Vec<u32>, StaticModel) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<u64> = (0..256u64).map(|i| 1 + 1000 / (i + 1)).collect();
    let dist = quantize_distribution(&weights, 256).expect("valid weights");
    let sampler = WeightedIndex::new(dist.freqs()).expect("positive freqs");
    let symbols = (0..n).map(|_| sampler.sample(&mut rng) as u32).collect();
    (symbols, StaticModel::new(dist))
}

/// Word salad with English-like letter statistics.
pub fn pseudo_text(n: usize, seed: u64) -> Vec<u8> {
    const WORDS: &[&str] = &[
        "the", "of", "and", "to", "in", "is", "that", "it", "was", "for", "on", "are", "with",
        "as", "his", "they", "be", "at", "one", "have", "this", "from", "by", "hot", "word",
        "but", "what", "some", "we", "can", "out", "other", "were", "all", "there", "when",
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n + 16);
    while out.len() < n {
        out.extend_from_slice(WORDS[rng.gen_range(0..WORDS.len())].as_bytes());
        out.push(if rng.gen_ratio(1, 12) { b'.' } else { b' ' });
    }
    out.truncate(n);
    out
}

pub fn coder(c: &mut Criterion) {
    let n = 1 << 20;
    let (symbols, model) = iid_symbols(n, 7);
    let code = encode_stream(&symbols, &mut model.clone()).unwrap();
    let mut g = c.benchmark_group("range_coder");
    g.throughput(Throughput::Elements(n as u64));
    g.bench_function("encode_static", |b| {
        b.iter(|| encode_stream(black_box(&symbols), &mut model.clone()).unwrap())
    });
    g.bench_function("decode_static", |b| {
        b.iter(|| decode_stream(black_box(&code), &mut model.clone(), n).unwrap())
    });
    g.finish();
}

pub fn predictors(c: &mut Criterion) {
    let text = pseudo_text(64 * 1024, 3);
    let mut g = c.benchmark_group("compress_text_64k");
    g.throughput(Throughput::Bytes(text.len() as u64));
    g.sample_size(10);
    for spec in [
        PredictorSpec::uniform(256),
        PredictorSpec::order0(256),
        PredictorSpec::order_k(2, 256),
        PredictorSpec::order_k(4, 256),
    ] {
        let opts = CompressOptions {
            jobs: 1,
            ..CompressOptions::with_predictor(spec.clone())
        };
        g.bench_with_input(BenchmarkId::from_parameter(&spec), &text, |b, t| {
            b.iter(|| compress(black_box(t), &opts).unwrap())
        });
    }
    g.finish();
}

pub fn quantize(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let weights: Vec<u64> = (0..256).map(|_| rng.gen_range(0..1_000_000)).collect();
    c.bench_function("quantize_256", |b| {
        b.iter(|| quantize_distribution(black_box(&weights), 256).unwrap())
    });
}

pub fn benchmarks(c: &mut Criterion) {
    coder(c);
    predictors(c);
    quantize(c);
}
