//! Bit-level I/O for entropy-coded segments, with 0xFF byte stuffing.

use super::error::JpegError;
use super::huffman::{HuffmanDecoder, HuffmanEncoder, LOOKUP_BITS};

#[cold]
fn missing_symbol(symbol: u8) -> JpegError {
    JpegError::InvalidHuffmanTable(format!("symbol {symbol:#04x} missing from table"))
}

pub(crate) struct BitWriter {
    out: Vec<u8>,
    acc: u64,
    nbits: u32,
}

impl BitWriter {
    pub fn with_capacity(cap: usize) -> Self {
        Self {
            out: Vec::with_capacity(cap),
            acc: 0,
            nbits: 0,
        }
    }

    /// Append the low `len` bits of `bits`; `len` is at most 32.
    #[inline(always)]
    pub fn write(&mut self, bits: u32, len: u8) {
        let mask = (1u64 << len) - 1;
        self.acc = (self.acc << len) | (bits as u64 & mask);
        self.nbits += len as u32;
        if self.nbits >= 32 {
            self.spill();
        }
    }

    /// Move 32 finished bits to the output.
    #[inline(never)]
    fn spill(&mut self) {
        self.nbits -= 32;
        let word = (self.acc >> self.nbits) as u32;
        let inv = !word;
        // any 0xFF byte in `word` is a zero byte in `inv`
        if inv.wrapping_sub(0x0101_0101) & !inv & 0x8080_8080 == 0 {
            self.out.extend_from_slice(&word.to_be_bytes());
        } else {
            for b in word.to_be_bytes() {
                self.push_byte(b);
            }
        }
    }

    #[inline]
    fn push_byte(&mut self, byte: u8) {
        self.out.push(byte);
        if byte == 0xFF {
            self.out.push(0x00);
        }
    }

    #[inline]
    pub fn write_code(&mut self, table: &HuffmanEncoder, symbol: u8) -> Result<(), JpegError> {
        let (code, len) = table.code(symbol);
        if len == 0 {
            return Err(missing_symbol(symbol));
        }
        self.write(code as u32, len);
        Ok(())
    }

    /// A Huffman code followed by `extra_len` raw bits, in one write.
    #[inline]
    pub fn write_code_with(
        &mut self,
        table: &HuffmanEncoder,
        symbol: u8,
        extra: u32,
        extra_len: u8,
    ) -> Result<(), JpegError> {
        let (code, len) = table.code(symbol);
        if len == 0 {
            return Err(missing_symbol(symbol));
        }
        self.write(((code as u32) << extra_len) | extra, len + extra_len);
        Ok(())
    }

    /// Pad the final partial byte with one-bits and drain whole bytes.
    pub fn flush(&mut self) {
        let pad = (8 - self.nbits % 8) % 8;
        self.acc = (self.acc << pad) | ((1u64 << pad) - 1);
        self.nbits += pad;
        while self.nbits >= 8 {
            self.nbits -= 8;
            self.push_byte((self.acc >> self.nbits) as u8);
        }
    }

    /// Pad, then emit a restart marker.
    pub fn restart(&mut self, index: u8) {
        self.flush();
        self.out.push(0xFF);
        self.out.push(0xD0 + (index & 7));
    }

    pub fn into_bytes(mut self) -> Vec<u8> {
        self.flush();
        self.out
    }
}

pub(crate) struct BitReader<'a> {
    data: &'a [u8],
    pos: usize,
    acc: u64,
    nbits: u32,
    /// Low-order bits of `acc` that are zero padding past the end of data.
    padded: u32,
}

impl<'a> BitReader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        Self {
            data,
            pos: 0,
            acc: 0,
            nbits: 0,
            padded: 0,
        }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    fn next_byte(&mut self) -> Option<u8> {
        let b = *self.data.get(self.pos)?;
        if b == 0xFF {
            match self.data.get(self.pos + 1) {
                Some(0x00) => {
                    self.pos += 2;
                    Some(0xFF)
                }
                // a marker: stop feeding data
                _ => None,
            }
        } else {
            self.pos += 1;
            Some(b)
        }
    }

    #[inline]
    fn fill(&mut self) {
        while self.nbits <= 56 {
            let byte = if self.padded > 0 {
                None
            } else {
                self.next_byte()
            };
            match byte {
                Some(b) => {
                    self.acc |= (b as u64) << (56 - self.nbits);
                }
                None => self.padded += 8,
            }
            self.nbits += 8;
        }
    }

    #[inline]
    fn peek(&mut self, n: u32) -> u32 {
        if self.nbits < n {
            self.fill();
        }
        (self.acc >> (64 - n)) as u32
    }

    #[inline]
    fn consume(&mut self, n: u32) -> Result<(), JpegError> {
        if n > self.nbits - self.padded {
            return Err(JpegError::Parse {
                offset: self.pos,
                reason: "entropy-coded data truncated".into(),
            });
        }
        self.acc <<= n;
        self.nbits -= n;
        Ok(())
    }

    pub fn bits(&mut self, n: u8) -> Result<u32, JpegError> {
        if n == 0 {
            return Ok(0);
        }
        let v = self.peek(n as u32);
        self.consume(n as u32)?;
        Ok(v)
    }

    /// Read `size` magnitude bits and sign-extend per the JPEG convention.
    #[inline]
    pub fn receive_extend(&mut self, size: u8) -> Result<i32, JpegError> {
        if size == 0 {
            return Ok(0);
        }
        let v = self.bits(size)? as i32;
        Ok(if v < 1 << (size - 1) {
            v - (1 << size) + 1
        } else {
            v
        })
    }

    #[inline]
    pub fn decode(&mut self, table: &HuffmanDecoder) -> Result<u8, JpegError> {
        let peek = self.peek(LOOKUP_BITS as u32) as u16;
        let (len, sym) = table.fast(peek);
        if len > 0 {
            self.consume(len as u32)?;
            return Ok(sym);
        }
        let peek16 = self.peek(16) as u16;
        match table.slow(peek16) {
            Some((len, sym)) => {
                self.consume(len as u32)?;
                Ok(sym)
            }
            None => Err(JpegError::Parse {
                offset: self.pos,
                reason: "invalid Huffman code".into(),
            }),
        }
    }

    /// Drop buffered bits and step over the next RSTn marker.
    pub fn restart(&mut self) -> Result<(), JpegError> {
        self.acc = 0;
        self.nbits = 0;
        self.padded = 0;
        while self.pos + 1 < self.data.len() {
            if self.data[self.pos] == 0xFF && (0xD0..=0xD7).contains(&self.data[self.pos + 1]) {
                self.pos += 2;
                return Ok(());
            }
            self.pos += 1;
        }
        Err(JpegError::Parse {
            offset: self.pos,
            reason: "expected restart marker".into(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stuffing_and_padding() {
        let mut w = BitWriter::with_capacity(4);
        w.write(0xFF, 8);
        w.write(0b101, 3);
        let bytes = w.into_bytes();
        assert_eq!(bytes, vec![0xFF, 0x00, 0b1011_1111]);
        let mut r = BitReader::new(&bytes);
        assert_eq!(r.bits(8).unwrap(), 0xFF);
        assert_eq!(r.bits(3).unwrap(), 0b101);
        assert_eq!(r.bits(5).unwrap(), 0b11111);
        assert!(r.bits(1).is_err());
    }

    #[test]
    fn extend_sign() {
        let mut w = BitWriter::with_capacity(2);
        w.write(0b00, 2); // -3
        w.write(0b11, 2); // 3
        w.write(0b0, 1); // -1
        let bytes = w.into_bytes();
        let mut r = BitReader::new(&bytes);
        assert_eq!(r.receive_extend(2).unwrap(), -3);
        assert_eq!(r.receive_extend(2).unwrap(), 3);
        assert_eq!(r.receive_extend(1).unwrap(), -1);
    }

    #[test]
    fn reader_stops_at_markers() {
        let bytes = [0b1010_0000, 0xFF, 0xD9];
        let mut r = BitReader::new(&bytes);
        assert_eq!(r.bits(8).unwrap(), 0b1010_0000);
        assert!(r.bits(1).is_err());
    }
}
