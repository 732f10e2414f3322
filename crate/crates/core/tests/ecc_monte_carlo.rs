//! Large randomized trials of the RS(255,191) codec, judged by a separate
//! bitwise GF(2^8) implementation.

use ephemera_core::ecc::{
    rs_decode, rs_decode_stream, rs_encode, rs_encode_stream, EccError, K, N,
};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Shift-and-add multiply modulo x^8+x^4+x^3+x^2+1.
fn gf_mul(mut a: u8, mut b: u8) -> u8 {
    let mut p = 0u8;
    while b != 0 {
        if b & 1 != 0 {
            p ^= a;
        }
        let carry = a & 0x80 != 0;
        a <<= 1;
        if carry {
            a ^= 0x1D;
        }
        b >>= 1;
    }
    p
}

/// True when `cw` (byte 0 = highest degree) vanishes at alpha^1..alpha^64.
fn is_codeword(cw: &[u8]) -> bool {
    let mut root = 1u8;
    for _ in 0..64 {
        root = gf_mul(root, 2);
        let value = cw.iter().fold(0u8, |acc, &c| gf_mul(acc, root) ^ c);
        if value != 0 {
            return false;
        }
    }
    true
}

fn corrupt(cw: &mut [u8; N], errors: usize, rng: &mut ChaCha8Rng) {
    for pos in sample(rng, N, errors) {
        cw[pos] ^= rng.gen_range(1..=255u8);
    }
}

#[test]
fn oracle_accepts_encoder_output() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..50 {
        let data: Vec<u8> = (0..K).map(|_| rng.gen()).collect();
        let cw = rs_encode(&data).unwrap();
        assert!(is_codeword(&cw));
        let mut bad = cw;
        bad[rng.gen_range(0..N)] ^= 1;
        assert!(!is_codeword(&bad));
    }
}

#[test]
fn thirty_two_errors_always_corrected() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..2000 {
        let data: Vec<u8> = (0..K).map(|_| rng.gen()).collect();
        let mut cw = rs_encode(&data).unwrap();
        corrupt(&mut cw, 32, &mut rng);
        let (out, fixed) = rs_decode(&cw).unwrap();
        assert_eq!(out.as_slice(), data.as_slice());
        assert_eq!(fixed, 32);
    }
}

#[test]
fn forty_errors_detected_in_ten_thousand_trials() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let trials = 10_000;
    let mut failures = 0;
    for _ in 0..trials {
        let data: Vec<u8> = (0..K).map(|_| rng.gen()).collect();
        let mut cw = rs_encode(&data).unwrap();
        corrupt(&mut cw, 40, &mut rng);
        match rs_decode(&cw) {
            Err(EccError::DecodeFailure { .. }) => failures += 1,
            Err(e) => panic!("unexpected error {e}"),
            Ok((out, _)) => {
                // A miscorrection must still land on a valid codeword other
                // than the one sent; it can never reproduce the data.
                assert_ne!(out.as_slice(), data.as_slice());
                let recoded = rs_encode(&out).unwrap();
                assert!(is_codeword(&recoded));
            }
        }
    }
    assert!(
        failures * 100 >= trials * 99,
        "only {failures} of {trials} detected"
    );
}

#[test]
fn stream_round_trip_with_scattered_errors() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let data: Vec<u8> = (0..10_000).map(|_| rng.gen()).collect();
    let mut coded = rs_encode_stream(&data);
    for chunk in coded.chunks_mut(N) {
        let chunk: &mut [u8; N] = chunk.try_into().unwrap();
        let n = rng.gen_range(0..=32);
        corrupt(chunk, n, &mut rng);
    }
    let mut out = rs_decode_stream(&coded).unwrap();
    out.truncate(data.len());
    assert_eq!(out, data);
}
