//! Prime-field arithmetic over `F_p` with one symbol per `u32`.
//!
//! Every protocol quantity (message symbols, query coefficients, answers,
//! common randomness) is a [`Symbol`] in `[0, p-1]`. Arithmetic widens to
//! `u64` so any prime below `2^32` is safe.

use std::fmt;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Symbol = u32;

/// Seeded generator used for every replayable draw in the crate.
pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct FieldPrime(u32);

impl FieldPrime {
    pub const TWO: FieldPrime = FieldPrime(2);

    pub fn new(p: u64) -> Result<Self> {
        if p > u64::from(u32::MAX) {
            return Err(Error::PrimeTooLarge(p));
        }
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        Ok(FieldPrime(p as u32))
    }

    #[inline]
    pub fn get(self) -> u32 {
        self.0
    }

    /// Width of one packed symbol on the wire, `ceil(log2 p)`.
    pub fn symbol_bits(self) -> u32 {
        32 - (self.0 - 1).leading_zeros()
    }

    pub fn check(self, symbol: u64) -> Result<Symbol> {
        if symbol < u64::from(self.0) {
            Ok(symbol as Symbol)
        } else {
            Err(Error::SymbolOutOfRange {
                symbol,
                prime: self.0,
            })
        }
    }

    pub fn check_all(self, symbols: &[Symbol]) -> Result<()> {
        symbols
            .iter()
            .try_for_each(|&s| self.check(u64::from(s)).map(|_| ()))
    }

    #[inline]
    pub fn add(self, a: Symbol, b: Symbol) -> Symbol {
        ((u64::from(a) + u64::from(b)) % u64::from(self.0)) as Symbol
    }

    #[inline]
    pub fn sub(self, a: Symbol, b: Symbol) -> Symbol {
        let p = u64::from(self.0);
        ((u64::from(a) + p - u64::from(b)) % p) as Symbol
    }

    #[inline]
    pub fn neg(self, a: Symbol) -> Symbol {
        self.sub(0, a)
    }

    #[inline]
    pub fn mul(self, a: Symbol, b: Symbol) -> Symbol {
        ((u64::from(a) * u64::from(b)) % u64::from(self.0)) as Symbol
    }

    /// `sum coeffs[i] * data[i] mod p`.
    pub fn inner_product(self, coeffs: &[Symbol], data: &[Symbol]) -> Result<Symbol> {
        if coeffs.len() != data.len() {
            return Err(Error::LengthMismatch {
                expected: coeffs.len(),
                actual: data.len(),
            });
        }
        Ok(self.dot(coeffs, data))
    }

    /// Unchecked inner product for hot loops; lengths must already agree.
    #[inline]
    pub(crate) fn dot(self, coeffs: &[Symbol], data: &[Symbol]) -> Symbol {
        debug_assert_eq!(coeffs.len(), data.len());
        let p = u64::from(self.0);
        let acc = coeffs
            .iter()
            .zip(data)
            .fold(0u64, |acc, (&c, &d)| (acc + u64::from(c) * u64::from(d)) % p);
        acc as Symbol
    }

    /// `count` i.i.d. uniform symbols drawn from `rng`.
    pub fn sample_uniform<R: RngCore + ?Sized>(self, count: usize, rng: &mut R) -> Vec<Symbol> {
        (0..count).map(|_| rng.gen_range(0..self.0)).collect()
    }
}

impl Default for FieldPrime {
    fn default() -> Self {
        FieldPrime::TWO
    }
}

impl fmt::Display for FieldPrime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl TryFrom<u64> for FieldPrime {
    type Error = Error;

    fn try_from(p: u64) -> Result<Self> {
        FieldPrime::new(p)
    }
}

impl From<FieldPrime> for u64 {
    fn from(p: FieldPrime) -> u64 {
        u64::from(p.0)
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}
