//! Common randomness held by the databases and private coins held by the user.
//!
//! The two live in separate types so that nothing user-facing can carry a
//! database mask by accident.
//!
//! Dealer file layout (all integers big-endian), one record per session:
//!
//! ```text
//! 0       4     magic "SPRN"
//! 4       1     version (0x01)
//! 5       4     prime p
//! 9       4     database count N
//! 13      4     session count M
//! then M records:
//!         8     session id
//!         4     symbol count c
//!         ...   c symbols packed with ceil(log2 p) bits, zero-padded to a byte
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::codec::{pack_symbols, packed_len, unpack_symbols, Reader};
use crate::error::{Error, Result};
use crate::field::{FieldPrime, Symbol};

const DEALER_MAGIC: &[u8; 4] = b"SPRN";
const DEALER_VERSION: u8 = 1;

/// Symbols shared by every database and never sent to the user (`S`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommonRandomness {
    symbols: Vec<Symbol>,
    consumed: usize,
}

impl CommonRandomness {
    pub fn new(prime: FieldPrime, symbols: Vec<Symbol>) -> Result<Self> {
        prime.check_all(&symbols)?;
        Ok(CommonRandomness {
            symbols,
            consumed: 0,
        })
    }

    pub fn sample<R: RngCore + ?Sized>(count: usize, prime: FieldPrime, rng: &mut R) -> Self {
        CommonRandomness {
            symbols: prime.sample_uniform(count, rng),
            consumed: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn consumed(&self) -> usize {
        self.consumed
    }

    /// The next unused symbol.
    pub fn take(&mut self) -> Result<Symbol> {
        let s = self.symbols.get(self.consumed).copied().ok_or(Error::RandomnessExhausted {
            consumed: self.consumed,
            available: self.symbols.len(),
        })?;
        self.consumed += 1;
        Ok(s)
    }

    /// Symbol `index`, marking everything up to it as consumed. Repeated reads
    /// of the same index return the same symbol.
    pub fn at(&mut self, index: usize) -> Result<Symbol> {
        let s = self.symbols.get(index).copied().ok_or(Error::RandomnessExhausted {
            consumed: index,
            available: self.symbols.len(),
        })?;
        self.consumed = self.consumed.max(index + 1);
        Ok(s)
    }

    pub(crate) fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }
}

/// The user's private coins for one session (`F`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UserRandomness {
    coins: Vec<Symbol>,
}

impl UserRandomness {
    pub fn new(prime: FieldPrime, coins: Vec<Symbol>) -> Result<Self> {
        prime.check_all(&coins)?;
        Ok(UserRandomness { coins })
    }

    pub fn sample<R: RngCore + ?Sized>(count: usize, prime: FieldPrime, rng: &mut R) -> Self {
        UserRandomness {
            coins: prime.sample_uniform(count, rng),
        }
    }

    pub fn coins(&self) -> &[Symbol] {
        &self.coins
    }

    pub fn len(&self) -> usize {
        self.coins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coins.is_empty()
    }
}

/// What the dealer hands every database out of band: per-session common
/// randomness plus the deployment size.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DealerRecord {
    pub prime: FieldPrime,
    pub databases: usize,
    pub sessions: BTreeMap<u64, Vec<Symbol>>,
}

impl DealerRecord {
    pub fn new(prime: FieldPrime, databases: usize) -> Self {
        DealerRecord {
            prime,
            databases,
            sessions: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, session_id: u64, randomness: &CommonRandomness) {
        self.sessions.insert(session_id, randomness.symbols().to_vec());
    }

    pub fn session(&self, session_id: u64) -> Option<CommonRandomness> {
        self.sessions.get(&session_id).map(|s| CommonRandomness {
            symbols: s.clone(),
            consumed: 0,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(DEALER_MAGIC);
        out.push(DEALER_VERSION);
        out.extend_from_slice(&self.prime.get().to_be_bytes());
        out.extend_from_slice(&(self.databases as u32).to_be_bytes());
        out.extend_from_slice(&(self.sessions.len() as u32).to_be_bytes());
        for (id, symbols) in &self.sessions {
            out.extend_from_slice(&id.to_be_bytes());
            out.extend_from_slice(&(symbols.len() as u32).to_be_bytes());
            out.extend_from_slice(&pack_symbols(symbols, self.prime));
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        if r.take(4)? != DEALER_MAGIC {
            return Err(Error::Format("bad randomness file magic".into()));
        }
        let version = r.u8()?;
        if version != DEALER_VERSION {
            return Err(Error::Format(format!(
                "unsupported randomness file version {version}"
            )));
        }
        let prime = FieldPrime::new(u64::from(r.u32()?))?;
        let databases = r.u32()? as usize;
        let count = r.u32()?;
        let mut record = DealerRecord::new(prime, databases);
        for _ in 0..count {
            let id = r.u64()?;
            let len = r.u32()? as usize;
            let symbols = unpack_symbols(r.take(packed_len(len, prime))?, len, prime)?;
            if record.sessions.insert(id, symbols).is_some() {
                return Err(Error::Format(format!("duplicate session {id}")));
            }
        }
        r.finish()?;
        Ok(record)
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        DealerRecord::from_bytes(&std::fs::read(path)?)
    }
}
