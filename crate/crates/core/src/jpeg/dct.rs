//! 8×8 forward and inverse discrete cosine transforms.
//!
//! Two families live here: a separable floating-point transform that is
//! generic over [`Real`], and a fixed-point Loeffler–Ligtenberg–Moschytz
//! transform in the style of the IJG "islow" code, which trades accuracy for
//! integer-only arithmetic the way deployed JPEG libraries do.

use super::quant::{quantize, CoefficientBlock, QuantTable};
use crate::scalar::Real;

/// Precomputed cosine basis for the type-II DCT with JPEG normalization.
#[derive(Clone, Debug)]
pub struct DctPlan<T: Real> {
    /// `basis[u * 8 + x] = C(u)/2 · cos((2x+1)uπ/16)`
    basis: [T; 64],
}

impl<T: Real> Default for DctPlan<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> DctPlan<T> {
    pub fn new() -> Self {
        let mut basis = [T::zero(); 64];
        for u in 0..8 {
            let cu = if u == 0 {
                std::f64::consts::FRAC_1_SQRT_2
            } else {
                1.0
            };
            for x in 0..8 {
                let angle = (2 * x + 1) as f64 * u as f64 * std::f64::consts::PI / 16.0;
                basis[u * 8 + x] = T::lit(cu / 2.0 * angle.cos());
            }
        }
        Self { basis }
    }

    /// Forward transform of a level-shifted block. A constant block `c`
    /// yields DC = 8c and zero AC terms.
    pub fn forward(&self, block: &[T; 64]) -> [T; 64] {
        let b = &self.basis;
        let mut tmp = [T::zero(); 64];
        for y in 0..8 {
            let row = &block[y * 8..y * 8 + 8];
            for u in 0..8 {
                let mut acc = T::zero();
                for x in 0..8 {
                    acc += row[x] * b[u * 8 + x];
                }
                tmp[y * 8 + u] = acc;
            }
        }
        let mut out = [T::zero(); 64];
        for v in 0..8 {
            for u in 0..8 {
                let mut acc = T::zero();
                for y in 0..8 {
                    acc += tmp[y * 8 + u] * b[v * 8 + y];
                }
                out[v * 8 + u] = acc;
            }
        }
        out
    }

    /// Inverse transform back to level-shifted spatial values.
    pub fn inverse(&self, coeffs: &[T; 64]) -> [T; 64] {
        let b = &self.basis;
        let mut tmp = [T::zero(); 64];
        for v in 0..8 {
            let row = &coeffs[v * 8..v * 8 + 8];
            for x in 0..8 {
                let mut acc = T::zero();
                for u in 0..8 {
                    acc += row[u] * b[u * 8 + x];
                }
                tmp[v * 8 + x] = acc;
            }
        }
        let mut out = [T::zero(); 64];
        for y in 0..8 {
            for x in 0..8 {
                let mut acc = T::zero();
                for v in 0..8 {
                    acc += tmp[v * 8 + x] * b[v * 8 + y];
                }
                out[y * 8 + x] = acc;
            }
        }
        out
    }
}

/// Forward transform of level-shifted integer samples into real coefficients.
pub fn fdct<T: Real>(plan: &DctPlan<T>, block: &[i16; 64]) -> [T; 64] {
    let mut input = [T::zero(); 64];
    for (d, s) in input.iter_mut().zip(block) {
        *d = T::from_int(*s as i32);
    }
    plan.forward(&input)
}

/// Inverse transform into level-shifted real values (unrounded).
pub fn idct<T: Real>(plan: &DctPlan<T>, coeffs: &[T; 64]) -> [T; 64] {
    plan.inverse(coeffs)
}

/// How a codec maps samples to quantized coefficients and back.
pub trait BlockTransform: Send + Sync {
    /// Level-shifted samples → quantized coefficients.
    fn forward_quantize(&self, samples: &[i16; 64], table: &QuantTable) -> CoefficientBlock;

    /// Quantized coefficients → level-shifted samples, rounded but not clamped.
    fn dequantize_inverse(&self, coeffs: &CoefficientBlock, table: &QuantTable) -> [i16; 64];
}

impl<T: Real> BlockTransform for DctPlan<T> {
    fn forward_quantize(&self, samples: &[i16; 64], table: &QuantTable) -> CoefficientBlock {
        quantize(&fdct(self, samples), table)
    }

    fn dequantize_inverse(&self, coeffs: &CoefficientBlock, table: &QuantTable) -> [i16; 64] {
        let mut deq = [T::zero(); 64];
        for ((d, c), q) in deq.iter_mut().zip(coeffs.0.iter()).zip(table.values()) {
            *d = T::from_int(*c as i32 * *q as i32);
        }
        let spatial = self.inverse(&deq);
        let mut out = [0i16; 64];
        for (o, v) in out.iter_mut().zip(spatial.iter()) {
            // round half up, matching the colour conversion convention
            *o = (*v + T::lit(0.5))
                .floor()
                .round_to_i32()
                .clamp(-32768, 32767) as i16;
        }
        out
    }
}

const CONST_BITS: i32 = 13;
const PASS1_BITS: i32 = 2;

const FIX_0_298631336: i32 = 2446;
const FIX_0_390180644: i32 = 3196;
const FIX_0_541196100: i32 = 4433;
const FIX_0_765366865: i32 = 6270;
const FIX_0_899976223: i32 = 7373;
const FIX_1_175875602: i32 = 9633;
const FIX_1_501321110: i32 = 12299;
const FIX_1_847759065: i32 = 15137;
const FIX_1_961570560: i32 = 16069;
const FIX_2_053119869: i32 = 16819;
const FIX_2_562915447: i32 = 20995;
const FIX_3_072711026: i32 = 25172;

#[inline]
fn descale(x: i32, n: i32) -> i32 {
    (x + (1 << (n - 1))) >> n
}

/// Fixed-point transform with 13-bit constants and 2 guard bits between
/// passes. Results differ from the exact transform by rounding.
#[derive(Clone, Copy, Debug, Default)]
pub struct FixedPointDct;

impl FixedPointDct {
    /// Forward transform; output is scaled up by 8 relative to [`DctPlan`].
    pub fn forward_scaled(&self, samples: &[i16; 64]) -> [i32; 64] {
        let mut d = [0i32; 64];
        for (o, s) in d.iter_mut().zip(samples) {
            *o = *s as i32;
        }
        for row in 0..8 {
            let b = row * 8;
            let tmp0 = d[b] + d[b + 7];
            let tmp7 = d[b] - d[b + 7];
            let tmp1 = d[b + 1] + d[b + 6];
            let tmp6 = d[b + 1] - d[b + 6];
            let tmp2 = d[b + 2] + d[b + 5];
            let tmp5 = d[b + 2] - d[b + 5];
            let tmp3 = d[b + 3] + d[b + 4];
            let tmp4 = d[b + 3] - d[b + 4];

            let tmp10 = tmp0 + tmp3;
            let tmp13 = tmp0 - tmp3;
            let tmp11 = tmp1 + tmp2;
            let tmp12 = tmp1 - tmp2;
            d[b] = (tmp10 + tmp11) << PASS1_BITS;
            d[b + 4] = (tmp10 - tmp11) << PASS1_BITS;
            let z1 = (tmp12 + tmp13) * FIX_0_541196100;
            d[b + 2] = descale(z1 + tmp13 * FIX_0_765366865, CONST_BITS - PASS1_BITS);
            d[b + 6] = descale(z1 - tmp12 * FIX_1_847759065, CONST_BITS - PASS1_BITS);

            let (o7, o5, o3, o1) = odd_forward(tmp4, tmp5, tmp6, tmp7);
            d[b + 7] = descale(o7, CONST_BITS - PASS1_BITS);
            d[b + 5] = descale(o5, CONST_BITS - PASS1_BITS);
            d[b + 3] = descale(o3, CONST_BITS - PASS1_BITS);
            d[b + 1] = descale(o1, CONST_BITS - PASS1_BITS);
        }
        for col in 0..8 {
            let at = |r: usize| r * 8 + col;
            let tmp0 = d[at(0)] + d[at(7)];
            let tmp7 = d[at(0)] - d[at(7)];
            let tmp1 = d[at(1)] + d[at(6)];
            let tmp6 = d[at(1)] - d[at(6)];
            let tmp2 = d[at(2)] + d[at(5)];
            let tmp5 = d[at(2)] - d[at(5)];
            let tmp3 = d[at(3)] + d[at(4)];
            let tmp4 = d[at(3)] - d[at(4)];

            let tmp10 = tmp0 + tmp3;
            let tmp13 = tmp0 - tmp3;
            let tmp11 = tmp1 + tmp2;
            let tmp12 = tmp1 - tmp2;
            d[at(0)] = descale(tmp10 + tmp11, PASS1_BITS);
            d[at(4)] = descale(tmp10 - tmp11, PASS1_BITS);
            let z1 = (tmp12 + tmp13) * FIX_0_541196100;
            d[at(2)] = descale(z1 + tmp13 * FIX_0_765366865, CONST_BITS + PASS1_BITS);
            d[at(6)] = descale(z1 - tmp12 * FIX_1_847759065, CONST_BITS + PASS1_BITS);

            let (o7, o5, o3, o1) = odd_forward(tmp4, tmp5, tmp6, tmp7);
            d[at(7)] = descale(o7, CONST_BITS + PASS1_BITS);
            d[at(5)] = descale(o5, CONST_BITS + PASS1_BITS);
            d[at(3)] = descale(o3, CONST_BITS + PASS1_BITS);
            d[at(1)] = descale(o1, CONST_BITS + PASS1_BITS);
        }
        d
    }

    /// Inverse transform of dequantized coefficients into level-shifted
    /// samples (rounded, not clamped).
    pub fn inverse(&self, coeffs: &[i32; 64]) -> [i32; 64] {
        let mut ws = [0i32; 64];
        for col in 0..8 {
            let c = |r: usize| coeffs[r * 8 + col];
            if (1..8).all(|r| c(r) == 0) {
                let dc = c(0) << PASS1_BITS;
                for r in 0..8 {
                    ws[r * 8 + col] = dc;
                }
                continue;
            }
            let out = idct_1d([c(0), c(1), c(2), c(3), c(4), c(5), c(6), c(7)]);
            for (r, v) in out.iter().enumerate() {
                ws[r * 8 + col] = descale(*v, CONST_BITS - PASS1_BITS);
            }
        }
        let mut out = [0i32; 64];
        for row in 0..8 {
            let b = row * 8;
            let r: [i32; 8] = ws[b..b + 8].try_into().expect("row of 8");
            let vals = idct_1d(r);
            for (x, v) in vals.iter().enumerate() {
                out[b + x] = descale(*v, CONST_BITS + PASS1_BITS + 3);
            }
        }
        out
    }
}

#[inline]
fn odd_forward(tmp4: i32, tmp5: i32, tmp6: i32, tmp7: i32) -> (i32, i32, i32, i32) {
    let z1 = tmp4 + tmp7;
    let z2 = tmp5 + tmp6;
    let z3 = tmp4 + tmp6;
    let z4 = tmp5 + tmp7;
    let z5 = (z3 + z4) * FIX_1_175875602;
    let tmp4 = tmp4 * FIX_0_298631336;
    let tmp5 = tmp5 * FIX_2_053119869;
    let tmp6 = tmp6 * FIX_3_072711026;
    let tmp7 = tmp7 * FIX_1_501321110;
    let z1 = -z1 * FIX_0_899976223;
    let z2 = -z2 * FIX_2_562915447;
    let z3 = -z3 * FIX_1_961570560 + z5;
    let z4 = -z4 * FIX_0_390180644 + z5;
    (
        tmp4 + z1 + z3,
        tmp5 + z2 + z4,
        tmp6 + z2 + z3,
        tmp7 + z1 + z4,
    )
}

/// One-dimensional inverse pass; outputs carry `CONST_BITS` of scaling.
#[inline]
fn idct_1d(s: [i32; 8]) -> [i32; 8] {
    let z2 = s[2];
    let z3 = s[6];
    let z1 = (z2 + z3) * FIX_0_541196100;
    let tmp2 = z1 - z3 * FIX_1_847759065;
    let tmp3 = z1 + z2 * FIX_0_765366865;
    let tmp0 = (s[0] + s[4]) << CONST_BITS;
    let tmp1 = (s[0] - s[4]) << CONST_BITS;
    let tmp10 = tmp0 + tmp3;
    let tmp13 = tmp0 - tmp3;
    let tmp11 = tmp1 + tmp2;
    let tmp12 = tmp1 - tmp2;

    let (t0, t1, t2, t3) = (s[7], s[5], s[3], s[1]);
    let z1 = t0 + t3;
    let z2 = t1 + t2;
    let z3 = t0 + t2;
    let z4 = t1 + t3;
    let z5 = (z3 + z4) * FIX_1_175875602;
    let t0 = t0 * FIX_0_298631336;
    let t1 = t1 * FIX_2_053119869;
    let t2 = t2 * FIX_3_072711026;
    let t3 = t3 * FIX_1_501321110;
    let z1 = -z1 * FIX_0_899976223;
    let z2 = -z2 * FIX_2_562915447;
    let z3 = -z3 * FIX_1_961570560 + z5;
    let z4 = -z4 * FIX_0_390180644 + z5;
    let t0 = t0 + z1 + z3;
    let t1 = t1 + z2 + z4;
    let t2 = t2 + z2 + z3;
    let t3 = t3 + z1 + z4;

    [
        tmp10 + t3,
        tmp11 + t2,
        tmp12 + t1,
        tmp13 + t0,
        tmp13 - t0,
        tmp12 - t1,
        tmp11 - t2,
        tmp10 - t3,
    ]
}

impl BlockTransform for FixedPointDct {
    fn forward_quantize(&self, samples: &[i16; 64], table: &QuantTable) -> CoefficientBlock {
        let scaled = self.forward_scaled(samples);
        let mut out = [0i16; 64];
        for ((o, c), q) in out.iter_mut().zip(scaled.iter()).zip(table.values()) {
            let div = (*q as i32) << 3;
            let v = if *c >= 0 {
                (c + div / 2) / div
            } else {
                -((-c + div / 2) / div)
            };
            *o = v as i16;
        }
        CoefficientBlock(out)
    }

    fn dequantize_inverse(&self, coeffs: &CoefficientBlock, table: &QuantTable) -> [i16; 64] {
        let mut deq = [0i32; 64];
        for ((d, c), q) in deq.iter_mut().zip(coeffs.0.iter()).zip(table.values()) {
            *d = *c as i32 * *q as i32;
        }
        let spatial = self.inverse(&deq);
        let mut out = [0i16; 64];
        for (o, v) in out.iter_mut().zip(spatial.iter()) {
            *o = (*v).clamp(-32768, 32767) as i16;
        }
        out
    }
}

/// Arithmetic used for the transform stages of the codec.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arithmetic {
    /// Separable transform in `f32`.
    #[default]
    Float,
    /// Separable transform in `f64`.
    Double,
    /// Fixed-point integer transform.
    Integer,
}

impl Arithmetic {
    pub fn transform(self) -> Box<dyn BlockTransform> {
        match self {
            Arithmetic::Float => Box::new(DctPlan::<f32>::new()),
            Arithmetic::Double => Box::new(DctPlan::<f64>::new()),
            Arithmetic::Integer => Box::new(FixedPointDct),
        }
    }
}
