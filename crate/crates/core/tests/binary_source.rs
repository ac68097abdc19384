//! A two-symbol source with P(0) = 0.9 through the range coder.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lmcompress::predictor::StaticModel;
use lmcompress::{decode_stream, encode_stream, ideal_code_length, quantize_distribution};

const N: usize = 10_000;
// 10000 * H(0.9), closed form
const ENTROPY_BITS: f64 = 4689.955935892812;

fn model() -> StaticModel {
    StaticModel::new(quantize_distribution(&[9u64, 1], 2).unwrap())
}

#[test]
fn quantized_to_expected_freqs() {
    // floor(9 * 65534 / 10) + 1 = 58981, floor(65534 / 10) + 1 = 6554,
    // the leftover unit goes to symbol 0 (remainder 6 beats 4)
    assert_eq!(quantize_distribution(&[9u64, 1], 2).unwrap().freqs(), &[58982, 6554]);
}

#[test]
fn iid_draw_codes_near_its_own_ideal() {
    let mut rng = ChaCha8Rng::seed_from_u64(90);
    let symbols: Vec<u32> = (0..N).map(|_| u32::from(rng.gen_bool(0.1))).collect();

    let direct: f64 = symbols
        .iter()
        .map(|&s| -(f64::from([58982u32, 6554][s as usize]) / 65536.0).log2())
        .sum();
    let ideal = ideal_code_length(&symbols, &mut model()).unwrap();
    assert!((ideal - direct).abs() < 1.0, "{ideal} vs {direct}");

    let code = encode_stream(&symbols, &mut model()).unwrap();
    let bits = (code.len() * 8) as f64;
    assert!(bits <= ideal * 1.001 + 64.0, "{bits} bits vs ideal {ideal}");
    assert_eq!(decode_stream(&code, &mut model(), N).unwrap(), symbols);
}

#[test]
fn exact_proportions_meet_closed_form_entropy() {
    let mut symbols = vec![0u32; 9000];
    symbols.extend(std::iter::repeat(1).take(1000));
    symbols.shuffle(&mut ChaCha8Rng::seed_from_u64(91));

    let code = encode_stream(&symbols, &mut model()).unwrap();
    let bits = (code.len() * 8) as f64;
    assert!(bits <= ENTROPY_BITS * 1.001 + 64.0, "{bits} bits");
    assert!(bits >= ENTROPY_BITS - 1.0, "{bits} bits");
    assert_eq!(decode_stream(&code, &mut model(), N).unwrap(), symbols);
}
