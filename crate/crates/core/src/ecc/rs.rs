//! Systematic Reed-Solomon RS(255, 191) over GF(256).
//!
//! Generator roots are α^1 … α^64. A codeword is the 191 data bytes followed
//! by 64 parity bytes; byte 0 is the coefficient of x^254.

use super::gf256::{self, exp, mul};
use thiserror::Error;

pub const N: usize = 255;
pub const K: usize = 191;
pub const PARITY: usize = N - K;
/// Symbol errors a codeword can always repair.
pub const MAX_CORRECTABLE: usize = PARITY / 2;
/// Exponent of the first generator root.
pub const FIRST_ROOT: usize = 1;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EccError {
    #[error("expected {expected} bytes, got {actual}")]
    WrongLength { expected: usize, actual: usize },
    #[error("codeword {codeword} has more errors than the code can repair")]
    DecodeFailure { codeword: usize },
}

/// Generator polynomial, highest degree first, monic.
fn generator() -> &'static [u8; PARITY + 1] {
    static GEN: std::sync::OnceLock<[u8; PARITY + 1]> = std::sync::OnceLock::new();
    GEN.get_or_init(|| {
        // lowest degree first while building
        let mut g = vec![1u8];
        for i in 0..PARITY {
            let root = exp(FIRST_ROOT + i);
            let mut next = vec![0u8; g.len() + 1];
            for (j, &c) in g.iter().enumerate() {
                next[j] ^= mul(c, root);
                next[j + 1] ^= c;
            }
            g = next;
        }
        let mut out = [0u8; PARITY + 1];
        for (o, c) in out.iter_mut().zip(g.iter().rev()) {
            *o = *c;
        }
        out
    })
}

/// `table[f][i] = f · g[i + 1]`, the multiples of the generator's tail.
fn generator_products() -> &'static [[u8; PARITY]; 256] {
    static TABLE: std::sync::OnceLock<Box<[[u8; PARITY]; 256]>> = std::sync::OnceLock::new();
    TABLE.get_or_init(|| {
        let g = generator();
        let mut t = Box::new([[0u8; PARITY]; 256]);
        for (f, row) in t.iter_mut().enumerate() {
            for (i, v) in row.iter_mut().enumerate() {
                *v = mul(f as u8, g[i + 1]);
            }
        }
        t
    })
}

/// Encode exactly 191 data bytes into a 255-byte codeword.
pub fn rs_encode(data: &[u8]) -> Result<[u8; N], EccError> {
    if data.len() != K {
        return Err(EccError::WrongLength {
            expected: K,
            actual: data.len(),
        });
    }
    let products = generator_products();
    let mut out = [0u8; N];
    out[..K].copy_from_slice(data);
    // long division of data·x^64 by g; the remainder lands in out[K..]
    let mut rem = [0u8; PARITY];
    for &d in data {
        let factor = d ^ rem[0];
        rem.copy_within(1.., 0);
        rem[PARITY - 1] = 0;
        for (r, p) in rem.iter_mut().zip(&products[factor as usize]) {
            *r ^= p;
        }
    }
    out[K..].copy_from_slice(&rem);
    Ok(out)
}

/// `table[j][a] = a · α^(FIRST_ROOT + j)`.
fn root_products() -> &'static [[u8; 256]; PARITY] {
    static TABLE: std::sync::OnceLock<Box<[[u8; 256]; PARITY]>> = std::sync::OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Box::new([[0u8; 256]; PARITY]);
        for (j, row) in t.iter_mut().enumerate() {
            let x = exp(FIRST_ROOT + j);
            for (a, v) in row.iter_mut().enumerate() {
                *v = mul(a as u8, x);
            }
        }
        t
    })
}

fn syndromes(cw: &[u8]) -> ([u8; PARITY], bool) {
    let table = root_products();
    let mut s = [0u8; PARITY];
    // Horner's rule for all 64 roots at once
    for &c in cw {
        for (sj, row) in s.iter_mut().zip(table.iter()) {
            *sj = row[*sj as usize] ^ c;
        }
    }
    let any = s.iter().any(|&v| v != 0);
    (s, any)
}

/// Evaluate a lowest-degree-first polynomial at `x`.
fn eval_low(poly: &[u8], x: u8) -> u8 {
    poly.iter().rev().fold(0u8, |acc, &c| mul(acc, x) ^ c)
}

/// Berlekamp–Massey; returns the error locator, lowest degree first.
fn berlekamp_massey(s: &[u8; PARITY]) -> Vec<u8> {
    let mut lambda = vec![0u8; PARITY + 1];
    let mut prev = vec![0u8; PARITY + 1];
    lambda[0] = 1;
    prev[0] = 1;
    let mut l = 0usize;
    let mut m = 1usize;
    let mut b = 1u8;
    for n in 0..PARITY {
        let mut d = s[n];
        for i in 1..=l {
            d ^= mul(lambda[i], s[n - i]);
        }
        if d == 0 {
            m += 1;
            continue;
        }
        let coef = gf256::div(d, b);
        if 2 * l <= n {
            let saved = lambda.clone();
            for i in 0..=PARITY - m {
                lambda[i + m] ^= mul(coef, prev[i]);
            }
            l = n + 1 - l;
            prev = saved;
            b = d;
            m = 1;
        } else {
            for i in 0..=PARITY - m {
                lambda[i + m] ^= mul(coef, prev[i]);
            }
            m += 1;
        }
    }
    lambda.truncate(l + 1);
    lambda
}

/// Correct a codeword in place; returns the number of repaired symbols.
pub fn rs_correct(cw: &mut [u8; N]) -> Result<usize, EccError> {
    let (s, dirty) = syndromes(cw);
    if !dirty {
        return Ok(0);
    }
    let lambda = berlekamp_massey(&s);
    let errors = lambda.len() - 1;
    if errors == 0 || errors > MAX_CORRECTABLE {
        return Err(EccError::DecodeFailure { codeword: 0 });
    }
    // Chien search: position p (power of x) is in error iff Λ(α^-p) = 0
    let mut positions = Vec::with_capacity(errors);
    for p in 0..N {
        if eval_low(&lambda, exp(255 - p)) == 0 {
            positions.push(p);
        }
    }
    if positions.len() != errors {
        return Err(EccError::DecodeFailure { codeword: 0 });
    }
    // Ω(x) = S(x)Λ(x) mod x^64
    let mut omega = [0u8; PARITY];
    for (i, &li) in lambda.iter().enumerate() {
        if li == 0 {
            continue;
        }
        for (j, &sj) in s.iter().enumerate().take(PARITY - i) {
            omega[i + j] ^= mul(li, sj);
        }
    }
    // formal derivative keeps the odd terms
    let deriv: Vec<u8> = lambda
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| if i % 2 == 1 { c } else { 0 })
        .collect();
    for &p in &positions {
        let x_inv = exp(255 - p);
        let num = eval_low(&omega, x_inv);
        let den = eval_low(&deriv, x_inv);
        if den == 0 {
            return Err(EccError::DecodeFailure { codeword: 0 });
        }
        // with first root α^1 the X^(1-b) factor is 1
        let magnitude = gf256::div(num, den);
        cw[N - 1 - p] ^= magnitude;
    }
    if syndromes(cw).1 {
        return Err(EccError::DecodeFailure { codeword: 0 });
    }
    Ok(errors)
}

/// Decode one codeword into its data bytes and the number of corrections.
pub fn rs_decode(codeword: &[u8]) -> Result<([u8; K], usize), EccError> {
    let mut cw: [u8; N] = codeword.try_into().map_err(|_| EccError::WrongLength {
        expected: N,
        actual: codeword.len(),
    })?;
    let corrected = rs_correct(&mut cw)?;
    let mut data = [0u8; K];
    data.copy_from_slice(&cw[..K]);
    Ok((data, corrected))
}
