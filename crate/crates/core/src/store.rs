//! The replicated message store and its on-disk format.
//!
//! Store file layout (all integers big-endian):
//!
//! ```text
//! offset  size        field
//! 0       4           magic "SPST"
//! 4       1           version (0x01)
//! 5       4           prime p
//! 9       4           message count K
//! 13      4*K         message lengths l_1 .. l_K (symbols)
//! 13+4K   ...         all symbols, message 1 first, packed with
//!                     ceil(log2 p) bits each, zero-padded to a byte
//! ```

use std::path::Path;

use rand::RngCore;

use crate::codec::{pack_symbols, packed_len, unpack_symbols, Reader};
use crate::error::{Error, Result};
use crate::field::{FieldPrime, Symbol};
use crate::params::ProtocolParams;

const STORE_MAGIC: &[u8; 4] = b"SPST";
const STORE_VERSION: u8 = 1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MessageStore {
    prime: FieldPrime,
    messages: Vec<Vec<Symbol>>,
}

impl MessageStore {
    pub fn new(prime: FieldPrime, messages: Vec<Vec<Symbol>>) -> Result<Self> {
        if messages.is_empty() {
            return Err(Error::InvalidParams("store needs at least one message".into()));
        }
        for m in &messages {
            if m.is_empty() {
                return Err(Error::InvalidParams("empty message".into()));
            }
            prime.check_all(m)?;
        }
        Ok(MessageStore { prime, messages })
    }

    /// Uniform messages shaped by `params`.
    pub fn random<R: RngCore + ?Sized>(params: &ProtocolParams, rng: &mut R) -> Self {
        let prime = params.prime();
        let messages = params
            .lengths()
            .iter()
            .map(|&l| prime.sample_uniform(l, rng))
            .collect();
        MessageStore { prime, messages }
    }

    /// Every symbol of every message set to `value`.
    pub fn constant(params: &ProtocolParams, value: Symbol) -> Result<Self> {
        params.prime().check(u64::from(value))?;
        let messages = params.lengths().iter().map(|&l| vec![value; l]).collect();
        Ok(MessageStore {
            prime: params.prime(),
            messages,
        })
    }

    pub fn prime(&self) -> FieldPrime {
        self.prime
    }

    pub fn messages(&self) -> &[Vec<Symbol>] {
        &self.messages
    }

    pub fn message(&self, index: usize) -> &[Symbol] {
        &self.messages[index]
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.messages.iter().map(Vec::len).collect()
    }

    /// Whether this store has the shape described by `params`.
    pub fn matches(&self, params: &ProtocolParams) -> bool {
        self.prime == params.prime() && self.lengths() == params.lengths()
    }

    /// Symbol `offset` of message `index`, or zero past its end.
    #[inline]
    pub fn symbol_or_zero(&self, index: usize, offset: usize) -> Symbol {
        self.messages[index].get(offset).copied().unwrap_or(0)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(STORE_MAGIC);
        out.push(STORE_VERSION);
        out.extend_from_slice(&self.prime.get().to_be_bytes());
        out.extend_from_slice(&(self.messages.len() as u32).to_be_bytes());
        for m in &self.messages {
            out.extend_from_slice(&(m.len() as u32).to_be_bytes());
        }
        let all: Vec<Symbol> = self.messages.concat();
        out.extend_from_slice(&pack_symbols(&all, self.prime));
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        if r.take(4)? != STORE_MAGIC {
            return Err(Error::Format("bad store magic".into()));
        }
        let version = r.u8()?;
        if version != STORE_VERSION {
            return Err(Error::Format(format!("unsupported store version {version}")));
        }
        let prime = FieldPrime::new(u64::from(r.u32()?))?;
        let count = r.u32()? as usize;
        let lengths = (0..count)
            .map(|_| r.u32().map(|l| l as usize))
            .collect::<Result<Vec<_>>>()?;
        if lengths.contains(&0) {
            return Err(Error::Format("zero-length message".into()));
        }
        let total: usize = lengths.iter().sum();
        let rest = r.take(packed_len(total, prime))?;
        let all = unpack_symbols(rest, total, prime)
            .map_err(|e| Error::Format(format!("store payload: {e}")))?;
        r.finish()?;
        let mut messages = Vec::with_capacity(count);
        let mut at = 0;
        for l in lengths {
            messages.push(all[at..at + l].to_vec());
            at += l;
        }
        MessageStore::new(prime, messages)
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        MessageStore::from_bytes(&std::fs::read(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::seeded_rng;

    #[test]
    fn rejects_out_of_field_symbols() {
        let p = FieldPrime::new(3).unwrap();
        assert!(MessageStore::new(p, vec![vec![0, 1, 2]]).is_ok());
        assert!(matches!(
            MessageStore::new(p, vec![vec![0, 3]]),
            Err(Error::SymbolOutOfRange { symbol: 3, prime: 3 })
        ));
        assert!(MessageStore::new(p, vec![]).is_err());
    }

    #[test]
    fn byte_layout() {
        let p = FieldPrime::TWO;
        let store = MessageStore::new(p, vec![vec![1], vec![0, 1]]).unwrap();
        let bytes = store.to_bytes();
        assert_eq!(
            bytes,
            [
                b'S', b'P', b'S', b'T', 1, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 1, 0, 0, 0, 2,
                0b1010_0000
            ]
        );
        assert_eq!(MessageStore::from_bytes(&bytes).unwrap(), store);
    }

    #[test]
    fn file_round_trip() {
        let params = ProtocolParams::in_blocks(3, &[1, 2, 4], FieldPrime::new(5).unwrap()).unwrap();
        let store = MessageStore::random(&params, &mut seeded_rng(4));
        assert!(store.matches(&params));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.bin");
        store.write_file(&path).unwrap();
        assert_eq!(MessageStore::read_file(&path).unwrap(), store);
    }

    #[test]
    fn truncated_file_is_rejected() {
        let p = FieldPrime::TWO;
        let bytes = MessageStore::new(p, vec![vec![1; 9]]).unwrap().to_bytes();
        for cut in 0..bytes.len() {
            assert!(MessageStore::from_bytes(&bytes[..cut]).is_err(), "cut at {cut}");
        }
        let mut long = bytes.clone();
        long.push(0);
        assert!(MessageStore::from_bytes(&long).is_err());
    }
}
