//! The inverse-quantization-table scheme: pre-distort blocks so that a
//! site's quantizer lands exactly on chosen coefficients.

use super::profile::SiteProfile;
use crate::jpeg::{
    decode_coefficients, encode_planes, parse_jfif, serialize_jfif, CodecHooks, DctPlan,
    EncodeParams, Plane, QuantTable, Subsampling, YcbcrPlanes,
};
use crate::scalar::Real;

/// Pointwise reciprocal of a quantization table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RealQuantTable<T: Real> {
    pub values: [T; 64],
}

pub fn inverse_quantization_table<T: Real>(table: &QuantTable) -> RealQuantTable<T> {
    let mut values = [T::zero(); 64];
    for (v, q) in values.iter_mut().zip(table.values()) {
        *v = T::one() / T::from_int(*q as i32);
    }
    RealQuantTable { values }
}

/// Fraction of differing bytes; a length mismatch counts as errors.
pub fn measure_ber(sent: &[u8], received: &[u8]) -> f64 {
    let len = sent.len().max(received.len());
    if len == 0 {
        return 0.0;
    }
    let same = sent.iter().zip(received).filter(|(a, b)| a == b).count();
    (len - same) as f64 / len as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CancellationArithmetic {
    /// Pre-image kept in double precision, no rounding or clamping; the site
    /// transform is the exact one.
    Exact,
    /// Pre-image rounded and clamped to 8-bit pixels and pushed through the
    /// site's fixed-point codec.
    IntegerRounded,
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct CancellationReport {
    pub bytes: usize,
    pub blocks: usize,
    pub ber: f64,
    /// Pre-image samples that fell outside `[0, 255]`.
    pub clipped_samples: usize,
}

/// Payload bytes the experiment can place in a profile-sized luminance plane.
pub fn cancellation_capacity(profile: &SiteProfile) -> usize {
    (profile.max_width / 8) * (profile.max_height / 8) * 64
}

/// Target coefficients for a block: payload bytes as signed values in
/// natural order, zero-filled.
fn targets(payload: &[u8], block: usize) -> [i32; 64] {
    let mut q = [0i32; 64];
    for (t, &b) in q.iter_mut().zip(payload.iter().skip(block * 64)) {
        *t = b as i8 as i32;
    }
    q
}

/// Spatial pre-image whose transform is `Q ⊙ A`, level shift included.
fn pre_image(plan: &DctPlan<f64>, q: &[i32; 64], table: &QuantTable) -> [f64; 64] {
    let inv = inverse_quantization_table::<f64>(table);
    let mut coeffs = [0f64; 64];
    for i in 0..64 {
        // multiplying by A is dividing by the inverse table
        coeffs[i] = q[i] as f64 / inv.values[i];
    }
    let mut spatial = plan.inverse(&coeffs);
    for v in spatial.iter_mut() {
        *v += 128.0;
    }
    spatial
}

/// Embed `payload` with the inverse-table scheme, run one recompression
/// pass, and report how many bytes come back intact.
pub fn cancellation_experiment(
    payload: &[u8],
    profile: &SiteProfile,
    arithmetic: CancellationArithmetic,
) -> CancellationReport {
    let blocks = payload.len().div_ceil(64);
    assert!(
        payload.len() <= cancellation_capacity(profile),
        "payload exceeds the profile's block budget"
    );
    if payload.is_empty() {
        return CancellationReport {
            bytes: 0,
            blocks: 0,
            ber: 0.0,
            clipped_samples: 0,
        };
    }
    let plan = DctPlan::<f64>::new();
    let table = &profile.luma_quant;
    let bw = profile.max_width / 8;
    let mut received = Vec::with_capacity(blocks * 64);
    let mut clipped = 0;

    match arithmetic {
        CancellationArithmetic::Exact => {
            for b in 0..blocks {
                let q = targets(payload, b);
                let mut img = pre_image(&plan, &q, table);
                clipped += img.iter().filter(|v| **v < 0.0 || **v > 255.0).count();
                for v in img.iter_mut() {
                    *v -= 128.0;
                }
                let coeffs = plan.forward(&img);
                for (c, a) in coeffs.iter().zip(table.values()) {
                    received.push((c / *a as f64).round_to_i32() as i8 as u8);
                }
            }
        }
        CancellationArithmetic::IntegerRounded => {
            let (w, h) = (profile.max_width, profile.max_height);
            let mut y = Plane::new(w, h, 128);
            for b in 0..blocks {
                let img = pre_image(&plan, &targets(payload, b), table);
                let block: [u8; 64] = std::array::from_fn(|i| {
                    let v = img[i];
                    if !(0.0..=255.0).contains(&v) {
                        clipped += 1;
                    }
                    v.round_half_up_u8()
                });
                y.put_block(b % bw, b / bw, &block);
            }
            let chroma = Plane::new(w, h, 128);
            let planes = YcbcrPlanes {
                y,
                cb: chroma.clone(),
                cr: chroma,
                subsampling: Subsampling::None,
            };
            let mut params =
                EncodeParams::with_tables(*table, profile.chroma_quant, Subsampling::None);
            params.arithmetic = profile.arithmetic;
            let file = encode_planes(&planes, &params, &mut CodecHooks::none())
                .expect("profile tables are valid");
            let bytes = serialize_jfif(&file).expect("no oversized segments");
            let back = decode_coefficients(&parse_jfif(&bytes).expect("own output parses"))
                .expect("own output decodes");
            let grid = &back.grids[0];
            for b in 0..blocks {
                received.extend(grid.at(b % bw, b / bw).0.iter().map(|&c| c as i8 as u8));
            }
        }
    }
    received.truncate(payload.len());
    CancellationReport {
        bytes: payload.len(),
        blocks,
        ber: measure_ber(payload, &received),
        clipped_samples: clipped,
    }
}
