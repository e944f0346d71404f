//! Fixed-width symbol packing shared by the wire protocol and the file formats.
//!
//! Each symbol occupies `ceil(log2 p)` bits, most significant bit first,
//! written back to back and zero-padded to the next byte boundary.

use crate::error::{Error, Result};
use crate::field::{FieldPrime, Symbol};

/// Bytes needed for `count` packed symbols.
pub fn packed_len(count: usize, prime: FieldPrime) -> usize {
    count.saturating_mul(prime.symbol_bits() as usize).div_ceil(8)
}

pub fn pack_symbols(symbols: &[Symbol], prime: FieldPrime) -> Vec<u8> {
    let width = prime.symbol_bits();
    let mut out = vec![0u8; packed_len(symbols.len(), prime)];
    let mut bit = 0usize;
    for &s in symbols {
        for b in (0..width).rev() {
            if (s >> b) & 1 == 1 {
                out[bit / 8] |= 0x80 >> (bit % 8);
            }
            bit += 1;
        }
    }
    out
}

/// Inverse of [`pack_symbols`]. The byte length must be exact, padding bits
/// must be zero and every symbol must lie in the field.
pub fn unpack_symbols(bytes: &[u8], count: usize, prime: FieldPrime) -> Result<Vec<Symbol>> {
    let expected = packed_len(count, prime);
    if bytes.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            actual: bytes.len(),
        });
    }
    let width = prime.symbol_bits();
    let mut out = Vec::with_capacity(count);
    let mut bit = 0usize;
    for _ in 0..count {
        let mut s = 0u64;
        for _ in 0..width {
            let set = bytes[bit / 8] & (0x80 >> (bit % 8)) != 0;
            s = (s << 1) | u64::from(set);
            bit += 1;
        }
        out.push(prime.check(s)?);
    }
    while bit < bytes.len() * 8 {
        if bytes[bit / 8] & (0x80 >> (bit % 8)) != 0 {
            return Err(Error::Format("nonzero padding bits".into()));
        }
        bit += 1;
    }
    Ok(out)
}

/// Cursor over a big-endian byte buffer for the file formats.
pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Format(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn finish(self) -> Result<()> {
        if self.pos == self.buf.len() {
            Ok(())
        } else {
            Err(Error::Format(format!(
                "{} trailing bytes",
                self.buf.len() - self.pos
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn binary_layout() {
        let p2 = FieldPrime::new(2).unwrap();
        assert_eq!(pack_symbols(&[1, 0, 1], p2), vec![0b1010_0000]);
        assert_eq!(pack_symbols(&[1; 9], p2), vec![0xff, 0x80]);

        let p3 = FieldPrime::new(3).unwrap();
        assert_eq!(pack_symbols(&[2, 1, 0, 2, 1], p3), vec![0b1001_0010, 0b0100_0000]);
    }

    #[test]
    fn unpack_guards() {
        let p3 = FieldPrime::new(3).unwrap();
        // 0b11 = 3 is not in F_3.
        assert!(unpack_symbols(&[0b1100_0000], 1, p3).is_err());
        // padding must be zero
        assert!(unpack_symbols(&[0b1000_0001], 1, p3).is_err());
        assert!(unpack_symbols(&[0, 0], 1, p3).is_err());
        assert!(unpack_symbols(&[], 1, p3).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(prime in prop::sample::select(vec![2u64, 3, 5, 7, 13, 257, 65_537]),
                      raw in prop::collection::vec(any::<u32>(), 0..40)) {
            let f = FieldPrime::new(prime).unwrap();
            let symbols: Vec<Symbol> = raw.iter().map(|r| r % f.get()).collect();
            let bytes = pack_symbols(&symbols, f);
            prop_assert_eq!(bytes.len(), packed_len(symbols.len(), f));
            prop_assert_eq!(unpack_symbols(&bytes, symbols.len(), f).unwrap(), symbols);
        }
    }
}
