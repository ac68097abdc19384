mod common;

use proptest::collection::vec;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lmcompress::container::{Archive, Chunk};
use lmcompress::media::{parse_media, sequence_to_media};
use lmcompress::predictor::{quantize_wide, StaticModel};
use lmcompress::{
    begin_session, decode_stream, encode_stream, ideal_code_length, quantize_distribution, MediaKind,
    PredictorSpec, QuantizedDistribution,
};
use num_bigint::BigUint;

fn weight_vector() -> impl Strategy<Value = Vec<u64>> {
    prop_oneof![
        vec(0u64..10, 2..300),
        vec(0u64..=u64::MAX, 2..64),
        vec(prop_oneof![Just(0u64), 1u64..1_000_000], 2..1000),
    ]
    .prop_filter("some weight must be positive", |w| w.iter().any(|&x| x > 0))
}

fn distribution() -> impl Strategy<Value = QuantizedDistribution> {
    weight_vector().prop_map(|w| quantize_distribution(&w, w.len()).unwrap())
}

fn dist_and_symbols() -> impl Strategy<Value = (QuantizedDistribution, Vec<u32>)> {
    distribution().prop_flat_map(|d| {
        let s = d.alphabet_size() as u32;
        (Just(d), vec(0..s, 0..3000))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn quantize_invariants(w in weight_vector()) {
        let d = quantize_distribution(&w, w.len()).unwrap();
        prop_assert_eq!(d.freqs().iter().map(|&f| u64::from(f)).sum::<u64>(), 65536);
        prop_assert!(d.freqs().iter().all(|&f| f >= 1));
        for i in 0..w.len() {
            for j in 0..w.len() {
                // equal weights are split by index, so only strict order is monotone
                if w[i] > w[j] {
                    prop_assert!(d.freq(i as u32) >= d.freq(j as u32), "w[{}]>w[{}]", i, j);
                }
                if w[i] == w[j] {
                    prop_assert!(d.freq(i as u32).abs_diff(d.freq(j as u32)) <= 1);
                }
            }
        }
    }

    #[test]
    fn quantize_is_scale_invariant(w in vec(0u64..1_000_000, 2..200), k in 1u64..1_000_000) {
        prop_assume!(w.iter().any(|&x| x > 0));
        let base = quantize_distribution(&w, w.len()).unwrap();
        let big: Vec<BigUint> = w.iter().map(|&x| BigUint::from(x) * k * BigUint::from(u64::MAX)).collect();
        let mut scaled = QuantizedDistribution::uniform(w.len()).unwrap();
        quantize_wide(&big, &mut scaled).unwrap();
        prop_assert_eq!(base.freqs(), scaled.freqs());
    }

    #[test]
    fn coder_round_trips((dist, symbols) in dist_and_symbols()) {
        let code = encode_stream(&symbols, &mut StaticModel::new(dist.clone())).unwrap();
        let back = decode_stream(&code, &mut StaticModel::new(dist), symbols.len()).unwrap();
        prop_assert_eq!(back, symbols);
    }

    #[test]
    fn coder_is_near_ideal((dist, symbols) in dist_and_symbols()) {
        let code = encode_stream(&symbols, &mut StaticModel::new(dist.clone())).unwrap();
        let ideal = ideal_code_length(&symbols, &mut StaticModel::new(dist)).unwrap();
        // 64 bits of flush plus at most ~0.006 bits per symbol of interval
        // rounding (worst case: frequency 1 at the smallest range)
        let bound = ideal + 64.0 + 0.01 * symbols.len() as f64;
        prop_assert!((code.len() * 8) as f64 <= bound, "{} bytes vs ideal {} bits", code.len(), ideal);
    }

    #[test]
    fn adaptive_models_round_trip(seed: u64, kind in 0usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<u32> = common::random_text(&mut rng, 3000).into_iter().map(u32::from).collect();
        let spec = [
            PredictorSpec::uniform(256),
            PredictorSpec::order0(256),
            PredictorSpec::order_k(2, 256),
            PredictorSpec::order_k(5, 256),
        ][kind].clone();
        let code = encode_stream(&data, &mut begin_session(&spec).unwrap()).unwrap();
        let back = decode_stream(&code, &mut begin_session(&spec).unwrap(), data.len()).unwrap();
        prop_assert_eq!(back, data);
    }

    #[test]
    fn media_transforms_are_reversible(seed: u64, k in 0u8..4) {
        let kind = MediaKind::from_u8(k).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let file = common::random_media(&mut rng, kind);
        let payload = parse_media(&file, kind).unwrap();
        prop_assert_eq!(payload.media(), kind);
        if kind == MediaKind::Audio {
            prop_assert!(payload.main_bytes.iter().all(|&b| b <= 0x7F));
        }
        let plan = payload.default_chunk_plan();
        prop_assert_eq!(plan.total(), payload.main_bytes.len());
        prop_assert_eq!(sequence_to_media(&payload).unwrap(), file);
    }

    #[test]
    fn archive_read_inverts_write(seed: u64, k in 0u8..4, spec_kind in 0usize..4) {
        let kind = MediaKind::from_u8(k).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let payload = parse_media(&common::random_media(&mut rng, kind), kind).unwrap();
        let mut chunks = Vec::new();
        let mut left = payload.main_bytes.len();
        while left > 0 {
            let symbols = rng.gen_range(1..=left.min(5000));
            let stored = rng.gen_range(1..=symbols);
            chunks.push(Chunk { symbols: symbols as u32, data: (0..stored).map(|_| rng.gen()).collect() });
            left -= symbols;
        }
        let archive = Archive {
            predictor: [
                PredictorSpec::uniform(256),
                PredictorSpec::order0(256),
                PredictorSpec::order_k(3, 256),
                PredictorSpec::external(256, "model:sha=abc"),
            ][spec_kind].clone(),
            meta: payload.meta.clone(),
            main_len: payload.main_bytes.len() as u64,
            chunks,
            side_bits: payload.side_bits.clone(),
            original_crc: rng.gen(),
        };
        let bytes = archive.to_bytes();
        prop_assert_eq!(Archive::from_bytes(&bytes).unwrap(), archive);
    }

    #[test]
    fn sessions_are_deterministic(seed: u64, order in 0u32..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = common::random_text(&mut rng, 500);
        let spec = PredictorSpec::order_k(order, 256);
        let (mut a, mut b) = (begin_session(&spec).unwrap(), begin_session(&spec).unwrap());
        for &byte in &data {
            prop_assert_eq!(a.predict().unwrap().freqs(), b.predict().unwrap().freqs());
            a.observe(u32::from(byte)).unwrap();
            b.observe(u32::from(byte)).unwrap();
        }
    }
}
