//! Closed-form capacity, threshold and feasibility calculators.
//!
//! Everything is an exact [`BigRational`]; threshold comparisons such as
//! `rho >= 1 / (N - 1)` must never be decided in floating point.

use num::{BigInt, BigRational, One, ToPrimitive, Zero};
use serde::Serialize;

pub type Rational = BigRational;

pub fn ratio(numer: usize, denom: usize) -> Rational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn integer(v: usize) -> Rational {
    BigRational::from_integer(BigInt::from(v))
}

/// `ceil(a / b)` for positive `b`.
pub fn ceil_div(a: usize, b: usize) -> usize {
    a.div_ceil(b)
}

/// `"a/b (≈0.666667)"`, or `"a (≈a)"` for integers.
pub fn display(r: &Rational) -> String {
    format!("{} (≈{:.6})", r, to_f64(r))
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Parse `"a/b"`, an integer, or a finite decimal such as `"0.25"` exactly.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    if let Some((a, b)) = text.split_once('/') {
        let a: BigInt = a.trim().parse().ok()?;
        let b: BigInt = b.trim().parse().ok()?;
        return (!b.is_zero()).then(|| BigRational::new(a, b));
    }
    if let Some((whole, frac)) = text.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|c| c.is_ascii_digit()) {
            return None;
        }
        let negative = whole.starts_with('-');
        let whole: BigInt = match whole {
            "" | "-" => BigInt::zero(),
            w => w.parse().ok()?,
        };
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let frac: BigInt = frac.parse().ok()?;
        let frac = BigRational::new(frac, scale);
        let whole = BigRational::from_integer(whole);
        return Some(if negative { whole - frac } else { whole + frac });
    }
    text.parse::<BigInt>().ok().map(BigRational::from_integer)
}

/// Serde adapter writing rationals as `"a/b"` strings.
pub mod rational_text {
    use super::Rational;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(r)
    }

    pub fn serialize_vec<S: Serializer>(rs: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(rs.iter().map(|r| r.to_string()))
    }

    pub fn serialize_option<S: Serializer>(r: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.collect_str(r),
            None => s.serialize_none(),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `K = 1`: nothing to protect on the database side, capacity 1.
    TrivialK1,
    /// `N = 1`, `K >= 2`: infeasible, capacity 0.
    InfeasibleN1,
    /// Not enough common randomness, capacity 0.
    BelowThreshold,
    AtCapacity,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CapacityVerdict {
    #[serde(serialize_with = "rational_text::serialize")]
    pub capacity: Rational,
    pub feasible: bool,
    /// Minimum common randomness per message symbol; `None` when no amount
    /// suffices.
    #[serde(serialize_with = "rational_text::serialize_option")]
    pub rho_threshold: Option<Rational>,
    pub regime: Regime,
}

fn degenerate(n: usize, k: usize) -> Option<CapacityVerdict> {
    if k <= 1 {
        return Some(CapacityVerdict {
            capacity: Rational::one(),
            feasible: true,
            rho_threshold: Some(Rational::zero()),
            regime: Regime::TrivialK1,
        });
    }
    if n <= 1 {
        return Some(CapacityVerdict {
            capacity: Rational::zero(),
            feasible: false,
            rho_threshold: None,
            regime: Regime::InfeasibleN1,
        });
    }
    None
}

fn threshold_verdict(capacity: Rational, threshold: Rational, rho: &Rational) -> CapacityVerdict {
    if *rho >= threshold {
        CapacityVerdict {
            capacity,
            feasible: true,
            rho_threshold: Some(threshold),
            regime: Regime::AtCapacity,
        }
    } else {
        CapacityVerdict {
            capacity: Rational::zero(),
            feasible: false,
            rho_threshold: Some(threshold),
            regime: Regime::BelowThreshold,
        }
    }
}

/// `1 - 1/N` when `rho >= 1/(N-1)`, zero otherwise; independent of `K`.
pub fn capacity_spir(n: usize, k: usize, rho: &Rational) -> CapacityVerdict {
    if let Some(v) = degenerate(n, k) {
        return v;
    }
    threshold_verdict(ratio(n - 1, n), ratio(1, n - 1), rho)
}

/// Capacity of plain PIR, `(1 + 1/N + ... + 1/N^(K-1))^-1`.
pub fn capacity_pir(n: usize, k: usize) -> Rational {
    assert!(n >= 1 && k >= 1, "capacity_pir needs N, K >= 1");
    let inv_n = ratio(1, n);
    let mut term = Rational::one();
    let mut sum = Rational::zero();
    for _ in 0..k {
        sum += &term;
        term *= &inv_n;
    }
    sum.recip()
}

/// Zero-error capacity at finite length `L`:
/// `L / ceil(L / (1 - 1/N))` when `rho >= ceil(L / (N-1)) / L`.
pub fn capacity_finite(n: usize, k: usize, length: usize, rho: &Rational) -> CapacityVerdict {
    assert!(length >= 1, "message length must be positive");
    if let Some(v) = degenerate(n, k) {
        return v;
    }
    let download = min_download(n, length);
    threshold_verdict(
        ratio(length, download),
        ratio(ceil_div(length, n - 1), length),
        rho,
    )
}

/// Smallest integer download for `L` symbols, `ceil(L N / (N - 1))`.
pub fn min_download(n: usize, length: usize) -> usize {
    ceil_div(length * n, n - 1)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RegionBound {
    /// Per-message rate caps `(l_k / max l) (1 - 1/N)`.
    #[serde(serialize_with = "rational_text::serialize_vec")]
    pub caps: Vec<Rational>,
    /// Optimal `D / L = max l * N / (N - 1)`, the same for every message.
    #[serde(serialize_with = "rational_text::serialize_option")]
    pub normalized_download: Option<Rational>,
}

/// Capacity region for unequal sizes, given sufficient common randomness.
pub fn region_bound(n: usize, lengths: &[usize]) -> RegionBound {
    let k = lengths.len();
    if k <= 1 {
        return RegionBound {
            caps: vec![Rational::one(); k],
            normalized_download: lengths.first().map(|&l| integer(l)),
        };
    }
    if n <= 1 {
        return RegionBound {
            caps: vec![Rational::zero(); k],
            normalized_download: None,
        };
    }
    let max = lengths.iter().copied().max().unwrap_or(1);
    let base = ratio(n - 1, n);
    RegionBound {
        caps: lengths.iter().map(|&l| ratio(l, max) * &base).collect(),
        normalized_download: Some(ratio(max * n, n - 1)),
    }
}
