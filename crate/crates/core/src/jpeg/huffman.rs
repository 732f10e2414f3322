//! Huffman table specifications, encoder code tables and decoder lookup.

use super::error::JpegError;

/// A table as carried in a DHT segment: code counts per length and the
/// symbols in code order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HuffmanSpec {
    pub counts: [u8; 16],
    pub symbols: Vec<u8>,
}

const DC_LUMA_COUNTS: [u8; 16] = [0, 1, 5, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0];
const DC_CHROMA_COUNTS: [u8; 16] = [0, 3, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0];
const AC_LUMA_COUNTS: [u8; 16] = [0, 2, 1, 3, 3, 2, 4, 3, 5, 5, 4, 4, 0, 0, 1, 0x7d];
const AC_CHROMA_COUNTS: [u8; 16] = [0, 2, 1, 2, 4, 4, 3, 4, 7, 5, 4, 4, 0, 1, 2, 0x77];

#[rustfmt::skip]
const AC_LUMA_SYMBOLS: [u8; 162] = [
    0x01, 0x02, 0x03, 0x00, 0x04, 0x11, 0x05, 0x12, 0x21, 0x31, 0x41, 0x06, 0x13, 0x51, 0x61, 0x07,
    0x22, 0x71, 0x14, 0x32, 0x81, 0x91, 0xa1, 0x08, 0x23, 0x42, 0xb1, 0xc1, 0x15, 0x52, 0xd1, 0xf0,
    0x24, 0x33, 0x62, 0x72, 0x82, 0x09, 0x0a, 0x16, 0x17, 0x18, 0x19, 0x1a, 0x25, 0x26, 0x27, 0x28,
    0x29, 0x2a, 0x34, 0x35, 0x36, 0x37, 0x38, 0x39, 0x3a, 0x43, 0x44, 0x45, 0x46, 0x47, 0x48, 0x49,
    0x4a, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58, 0x59, 0x5a, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68, 0x69,
    0x6a, 0x73, 0x74, 0x75, 0x76, 0x77, 0x78, 0x79, 0x7a, 0x83, 0x84, 0x85, 0x86, 0x87, 0x88, 0x89,
    0x8a, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97, 0x98, 0x99, 0x9a, 0xa2, 0xa3, 0xa4, 0xa5, 0xa6, 0xa7,
    0xa8, 0xa9, 0xaa, 0xb2, 0xb3, 0xb4, 0xb5, 0xb6, 0xb7, 0xb8, 0xb9, 0xba, 0xc2, 0xc3, 0xc4, 0xc5,
    0xc6, 0xc7, 0xc8, 0xc9, 0xca, 0xd2, 0xd3, 0xd4, 0xd5, 0xd6, 0xd7, 0xd8, 0xd9, 0xda, 0xe1, 0xe2,
    0xe3, 0xe4, 0xe5, 0xe6, 0xe7, 0xe8, 0xe9, 0xea, 0xf1, 0xf2, 0xf3, 0xf4, 0xf5, 0xf6, 0xf7, 0xf8,
    0xf9, 0xfa,
];

#[rustfmt::skip]
const AC_CHROMA_SYMBOLS: [u8; 162] = [
    0x00, 0x01, 0x02, 0x03, 0x11, 0x04, 0x05, 0x21, 0x31, 0x06, 0x12, 0x41, 0x51, 0x07, 0x61, 0x71,
    0x13, 0x22, 0x32, 0x81, 0x08, 0x14, 0x42, 0x91, 0xa1, 0xb1, 0xc1, 0x09, 0x23, 0x33, 0x52, 0xf0,
    0x15, 0x62, 0x72, 0xd1, 0x0a, 0x16, 0x24, 0x34, 0xe1, 0x25, 0xf1, 0x17, 0x18, 0x19, 0x1a, 0x26,
    0x27, 0x28, 0x29, 0x2a, 0x35, 0x36, 0x37, 0x38, 0x39, 0x3a, 0x43, 0x44, 0x45, 0x46, 0x47, 0x48,
    0x49, 0x4a, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58, 0x59, 0x5a, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68,
    0x69, 0x6a, 0x73, 0x74, 0x75, 0x76, 0x77, 0x78, 0x79, 0x7a, 0x82, 0x83, 0x84, 0x85, 0x86, 0x87,
    0x88, 0x89, 0x8a, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97, 0x98, 0x99, 0x9a, 0xa2, 0xa3, 0xa4, 0xa5,
    0xa6, 0xa7, 0xa8, 0xa9, 0xaa, 0xb2, 0xb3, 0xb4, 0xb5, 0xb6, 0xb7, 0xb8, 0xb9, 0xba, 0xc2, 0xc3,
    0xc4, 0xc5, 0xc6, 0xc7, 0xc8, 0xc9, 0xca, 0xd2, 0xd3, 0xd4, 0xd5, 0xd6, 0xd7, 0xd8, 0xd9, 0xda,
    0xe2, 0xe3, 0xe4, 0xe5, 0xe6, 0xe7, 0xe8, 0xe9, 0xea, 0xf2, 0xf3, 0xf4, 0xf5, 0xf6, 0xf7, 0xf8,
    0xf9, 0xfa,
];

impl HuffmanSpec {
    pub fn new(counts: [u8; 16], symbols: Vec<u8>) -> Result<Self, JpegError> {
        let total: usize = counts.iter().map(|&c| c as usize).sum();
        if total != symbols.len() || total > 256 || total == 0 {
            return Err(JpegError::InvalidHuffmanTable(format!(
                "{total} codes declared, {} symbols",
                symbols.len()
            )));
        }
        // Kraft inequality: canonical code must not overflow any length.
        let mut code: u32 = 0;
        for (len, &count) in counts.iter().enumerate() {
            code += count as u32;
            if code > 1 << (len + 1) {
                return Err(JpegError::InvalidHuffmanTable(format!(
                    "too many codes of length {}",
                    len + 1
                )));
            }
            code <<= 1;
        }
        Ok(Self { counts, symbols })
    }

    pub fn std_dc_luma() -> Self {
        Self {
            counts: DC_LUMA_COUNTS,
            symbols: (0..12).collect(),
        }
    }

    pub fn std_dc_chroma() -> Self {
        Self {
            counts: DC_CHROMA_COUNTS,
            symbols: (0..12).collect(),
        }
    }

    pub fn std_ac_luma() -> Self {
        Self {
            counts: AC_LUMA_COUNTS,
            symbols: AC_LUMA_SYMBOLS.to_vec(),
        }
    }

    pub fn std_ac_chroma() -> Self {
        Self {
            counts: AC_CHROMA_COUNTS,
            symbols: AC_CHROMA_SYMBOLS.to_vec(),
        }
    }

    /// Canonical `(code, length)` for each symbol in table order.
    fn canonical_codes(&self) -> Vec<(u16, u8)> {
        let mut out = Vec::with_capacity(self.symbols.len());
        let mut code: u32 = 0;
        for (len, &count) in self.counts.iter().enumerate() {
            for _ in 0..count {
                out.push((code as u16, (len + 1) as u8));
                code += 1;
            }
            code <<= 1;
        }
        out
    }
}

/// The four tables a two-channel baseline file uses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HuffmanTables {
    pub dc_luma: HuffmanSpec,
    pub ac_luma: HuffmanSpec,
    pub dc_chroma: HuffmanSpec,
    pub ac_chroma: HuffmanSpec,
}

impl Default for HuffmanTables {
    fn default() -> Self {
        Self {
            dc_luma: HuffmanSpec::std_dc_luma(),
            ac_luma: HuffmanSpec::std_ac_luma(),
            dc_chroma: HuffmanSpec::std_dc_chroma(),
            ac_chroma: HuffmanSpec::std_ac_chroma(),
        }
    }
}

/// Symbol → code lookup for the encoder.
#[derive(Clone, Debug)]
pub struct HuffmanEncoder {
    codes: [(u16, u8); 256],
}

impl HuffmanEncoder {
    pub fn new(spec: &HuffmanSpec) -> Self {
        let mut codes = [(0u16, 0u8); 256];
        for (sym, code) in spec.symbols.iter().zip(spec.canonical_codes()) {
            codes[*sym as usize] = code;
        }
        Self { codes }
    }

    /// `(code, length)`; length 0 means the symbol is not in the table.
    #[inline]
    pub fn code(&self, symbol: u8) -> (u16, u8) {
        self.codes[symbol as usize]
    }
}

pub(crate) const LOOKUP_BITS: u8 = 9;

/// Canonical decoder with a direct lookup for short codes.
#[derive(Clone, Debug)]
pub struct HuffmanDecoder {
    /// Indexed by the next `LOOKUP_BITS` bits: `(length, symbol)`; length 0 = slow path.
    lookup: Vec<(u8, u8)>,
    /// Largest code of each length, or -1.
    max_code: [i32; 17],
    /// Index into `symbols` of the first code of each length, minus that code.
    val_offset: [i32; 17],
    symbols: Vec<u8>,
}

impl HuffmanDecoder {
    pub fn new(spec: &HuffmanSpec) -> Self {
        let mut lookup = vec![(0u8, 0u8); 1 << LOOKUP_BITS];
        let codes = spec.canonical_codes();
        for (sym, &(code, len)) in spec.symbols.iter().zip(&codes) {
            if len <= LOOKUP_BITS {
                let shift = LOOKUP_BITS - len;
                let base = (code as usize) << shift;
                for fill in 0..(1usize << shift) {
                    lookup[base + fill] = (len, *sym);
                }
            }
        }
        let mut max_code = [-1i32; 17];
        let mut val_offset = [0i32; 17];
        let mut k = 0usize;
        let mut code = 0i32;
        for len in 1..=16 {
            let count = spec.counts[len - 1] as usize;
            if count > 0 {
                val_offset[len] = k as i32 - code;
                code += count as i32;
                k += count;
                max_code[len] = code - 1;
            }
            code <<= 1;
        }
        Self {
            lookup,
            max_code,
            val_offset,
            symbols: spec.symbols.clone(),
        }
    }

    #[inline]
    pub(crate) fn fast(&self, peek: u16) -> (u8, u8) {
        self.lookup[peek as usize]
    }

    /// Resolve a code from the 16 bits at the head of the stream.
    pub(crate) fn slow(&self, peek16: u16) -> Option<(u8, u8)> {
        for len in 1..=16usize {
            let code = (peek16 >> (16 - len)) as i32;
            if code <= self.max_code[len] {
                let idx = (code + self.val_offset[len]) as usize;
                return self.symbols.get(idx).map(|s| (len as u8, *s));
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn all_ac_symbols() -> BTreeSet<u8> {
        let mut s = BTreeSet::from([0x00, 0xf0]);
        for run in 0..16u8 {
            for size in 1..=10u8 {
                s.insert((run << 4) | size);
            }
        }
        s
    }

    #[test]
    fn standard_ac_tables_cover_every_run_size() {
        for spec in [HuffmanSpec::std_ac_luma(), HuffmanSpec::std_ac_chroma()] {
            let set: BTreeSet<u8> = spec.symbols.iter().copied().collect();
            assert_eq!(set.len(), 162);
            assert_eq!(set, all_ac_symbols());
            HuffmanSpec::new(spec.counts, spec.symbols.clone()).unwrap();
        }
    }

    #[test]
    fn rejects_overfull_tables() {
        let mut counts = [0u8; 16];
        counts[0] = 3;
        assert!(HuffmanSpec::new(counts, vec![1, 2, 3]).is_err());
        assert!(HuffmanSpec::new(counts, vec![1, 2]).is_err());
    }

    #[test]
    fn codes_decode_back() {
        for spec in [
            HuffmanSpec::std_dc_luma(),
            HuffmanSpec::std_ac_luma(),
            HuffmanSpec::std_dc_chroma(),
            HuffmanSpec::std_ac_chroma(),
        ] {
            let enc = HuffmanEncoder::new(&spec);
            let dec = HuffmanDecoder::new(&spec);
            for &sym in &spec.symbols {
                let (code, len) = enc.code(sym);
                assert!(len > 0);
                let peek16 = code << (16 - len);
                assert_eq!(dec.slow(peek16), Some((len, sym)));
                if len <= LOOKUP_BITS {
                    assert_eq!(dec.fast(peek16 >> (16 - LOOKUP_BITS)), (len, sym));
                }
            }
        }
    }
}
