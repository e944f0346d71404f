//! Exact verdicts over a [`JointTable`].

use num::{BigInt, BigRational, Integer, Zero};
use serde::Serialize;

use crate::analysis::{rational_text, ratio, Rational};
use crate::auditor::table::JointTable;
use crate::error::{Error, Result};
use crate::params::ProtocolParams;
use crate::schemes::Transcript;

/// Largest total-variation distance between two desired indices' views at
/// one database.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UserPrivacy {
    #[serde(serialize_with = "rational_text::serialize")]
    pub tv: Rational,
    /// `(database, k, k')` attaining the maximum, 1-based.
    pub worst: Option<(usize, usize, usize)>,
}

/// `max_{n, k, k'} TV((Q_n, A_n, W, S) | k, (Q_n, A_n, W, S) | k')`.
pub fn check_user_privacy(table: &JointTable) -> UserPrivacy {
    let total = u128::from(table.states_per_index());
    let mut best = UserPrivacy {
        tv: Rational::zero(),
        worst: None,
    };
    let k = table.messages();
    for n in 0..table.plan().databases {
        for a in 0..k {
            for b in a + 1..k {
                let diff = l1_distance(
                    &table.columns[a].database_views[n],
                    &table.columns[b].database_views[n],
                );
                let tv = BigRational::new(BigInt::from(diff), BigInt::from(2 * total));
                if best.worst.is_none() || tv > best.tv {
                    best = UserPrivacy {
                        tv,
                        worst: Some((n + 1, a + 1, b + 1)),
                    };
                }
            }
        }
    }
    best
}

/// `sum_key |count_a(key) - count_b(key)|` over two sorted multisets.
fn l1_distance(a: &[u64], b: &[u64]) -> u128 {
    let (mut i, mut j, mut acc) = (0, 0, 0u128);
    while i < a.len() || j < b.len() {
        let key = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        let ca = run_length(a, &mut i, key);
        let cb = run_length(b, &mut j, key);
        acc += ca.abs_diff(cb) as u128;
    }
    acc
}

fn run_length<T: PartialEq + Copy>(sorted: &[T], at: &mut usize, value: T) -> usize {
    let start = *at;
    while *at < sorted.len() && sorted[*at] == value {
        *at += 1;
    }
    *at - start
}

/// `I(W_{k̄}; Q_{1:N}, A_{1:N}, F)`, maximized over `k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Leakage {
    /// Exact independence: every joint count factors into its marginals.
    pub independent: bool,
    /// For display; `0.0` exactly when `independent`.
    pub bits: f64,
    /// Exact value when every likelihood ratio is a power of two.
    #[serde(serialize_with = "rational_text::serialize_option")]
    pub exact_bits: Option<Rational>,
    /// Desired index (1-based) attaining the maximum.
    pub worst_index: Option<usize>,
}

pub fn check_db_privacy(table: &JointTable) -> Leakage {
    let mut best = Leakage {
        independent: true,
        bits: 0.0,
        exact_bits: Some(Rational::zero()),
        worst_index: None,
    };
    for (k, col) in table.columns.iter().enumerate() {
        let l = mutual_information(&col.user_views);
        if best.worst_index.is_none() || l.bits > best.bits || (!l.independent && best.independent) {
            best = Leakage {
                worst_index: Some(k + 1),
                ..l
            };
        }
    }
    best
}

/// Mutual information between the two coordinates of equally weighted
/// `(view, secret)` samples, sorted by view then secret.
pub(crate) fn mutual_information(pairs: &[(u64, u64)]) -> Leakage {
    let total = pairs.len() as u128;
    let mut secrets: Vec<u64> = pairs.iter().map(|&(_, x)| x).collect();
    secrets.sort_unstable();
    let mut marginal: Vec<(u64, u128)> = Vec::new();
    let mut i = 0;
    while i < secrets.len() {
        let x = secrets[i];
        marginal.push((x, run_length(&secrets, &mut i, x) as u128));
    }
    let count_of = |x: u64| {
        let at = marginal.binary_search_by_key(&x, |&(v, _)| v).expect("secret in marginal");
        marginal[at].1
    };

    let mut independent = true;
    let mut bits = 0.0f64;
    let mut exact = Some(Rational::zero());
    let mut i = 0;
    while i < pairs.len() {
        let view = pairs[i].0;
        let group_start = i;
        while i < pairs.len() && pairs[i].0 == view {
            i += 1;
        }
        let group = &pairs[group_start..i];
        let c_view = group.len() as u128;
        let mut distinct = 0;
        let mut j = 0;
        while j < group.len() {
            let x = group[j].1;
            let start = j;
            while j < group.len() && group[j].1 == x {
                j += 1;
            }
            distinct += 1;
            let c_joint = (j - start) as u128;
            let num = c_joint * total;
            let den = count_of(x) * c_view;
            if num != den {
                independent = false;
            }
            bits += (c_joint as f64 / total as f64) * (num as f64 / den as f64).log2();
            exact = exact.and_then(|acc| {
                let g = num.gcd(&den);
                let (n, d) = (num / g, den / g);
                let log = if n.is_power_of_two() && d.is_power_of_two() {
                    i64::from(n.trailing_zeros()) - i64::from(d.trailing_zeros())
                } else {
                    return None;
                };
                Some(acc + BigRational::new(BigInt::from(c_joint), BigInt::from(total)) * BigInt::from(log))
            });
        }
        if distinct != marginal.len() {
            independent = false;
        }
    }
    if independent {
        bits = 0.0;
        exact = Some(Rational::zero());
    }
    Leakage {
        independent,
        bits: bits.max(0.0),
        exact_bits: exact,
        worst_index: None,
    }
}

/// Worst-case error probability over desired indices.
pub fn check_correctness(table: &JointTable) -> Rational {
    let total = u128::from(table.states_per_index());
    (1..=table.messages())
        .map(|k| BigRational::new(BigInt::from(table.errors(k)), BigInt::from(total)))
        .max()
        .unwrap_or_else(Rational::zero)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RateMeasurement {
    /// `R_k = l_k / D`.
    #[serde(serialize_with = "rational_text::serialize_vec")]
    pub per_message: Vec<Rational>,
    /// Consumed common randomness over the largest message length.
    #[serde(serialize_with = "rational_text::serialize")]
    pub rho: Rational,
    pub download: usize,
    pub randomness: usize,
}

impl RateMeasurement {
    /// The largest per-message rate.
    pub fn rate(&self) -> Rational {
        self.per_message.iter().max().cloned().unwrap_or_else(Rational::zero)
    }
}

/// Rates and `rho` from the download ledgers of completed sessions. The
/// largest download and randomness seen across transcripts are used.
pub fn measure_rates(transcripts: &[Transcript], params: &ProtocolParams) -> Result<RateMeasurement> {
    if transcripts.is_empty() {
        return Err(Error::InvalidParams("no transcripts to measure".into()));
    }
    if let Some(t) = transcripts.iter().find(|t| t.lengths != params.lengths()) {
        return Err(Error::InvalidParams(format!(
            "transcript lengths {:?} do not match parameters {:?}",
            t.lengths,
            params.lengths()
        )));
    }
    let download = transcripts.iter().map(|t| t.ledger.total).max().unwrap_or(0);
    let randomness = transcripts
        .iter()
        .map(|t| t.ledger.common_randomness)
        .max()
        .unwrap_or(0);
    if download == 0 {
        return Err(Error::InvalidParams("transcripts downloaded nothing".into()));
    }
    Ok(RateMeasurement {
        per_message: params.lengths().iter().map(|&l| ratio(l, download)).collect(),
        rho: ratio(randomness, params.max_length()),
        download,
        randomness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::auditor::table::{enumerate_joint, SchemeVariant, DEFAULT_BUDGET};
    use crate::field::FieldPrime;
    use crate::net::simulate;

    fn params(n: usize, k: usize, l: usize, p: u32) -> ProtocolParams {
        ProtocolParams::uniform(n, k, l, FieldPrime::new(p.into()).unwrap()).unwrap()
    }

    fn table(p: &ProtocolParams, v: SchemeVariant) -> JointTable {
        enumerate_joint(p, v, DEFAULT_BUDGET).unwrap()
    }

    #[test]
    fn honest_base_is_private_and_correct() {
        let t = table(&params(2, 2, 1, 2), SchemeVariant::Honest);
        assert!(check_user_privacy(&t).tv.is_zero());
        let l = check_db_privacy(&t);
        assert!(l.independent);
        assert_eq!(l.bits, 0.0);
        assert!(check_correctness(&t).is_zero());
    }

    #[test]
    fn no_mask_leaks_half_a_bit() {
        let l = check_db_privacy(&table(&params(2, 2, 1, 2), SchemeVariant::NoMask));
        assert!(!l.independent);
        assert_eq!(l.exact_bits, Some(ratio(1, 2)));
        assert!((l.bits - 0.5).abs() < 1e-12);
    }

    #[test]
    fn deterministic_coins_are_fully_distinguishable() {
        let t = table(&params(2, 2, 1, 2), SchemeVariant::DeterministicCoins);
        let u = check_user_privacy(&t);
        assert_eq!(u.tv, ratio(1, 1));
        assert_eq!(u.worst.map(|w| w.0), Some(2));
    }

    #[test]
    fn reused_mask_leaks_across_rounds() {
        let t = table(&params(2, 2, 2, 2), SchemeVariant::ReusedMask);
        assert!(!check_db_privacy(&t).independent);
        assert!(check_correctness(&t).is_zero());
        // a single round has nothing to reuse
        let t = table(&params(2, 2, 1, 2), SchemeVariant::ReusedMask);
        assert!(check_db_privacy(&t).independent);
    }

    #[test]
    fn wrong_subtraction_needs_an_odd_prime() {
        let t = table(&params(2, 2, 1, 2), SchemeVariant::WrongSubtraction);
        assert!(check_correctness(&t).is_zero());
        let t = table(&params(2, 2, 1, 3), SchemeVariant::WrongSubtraction);
        // decoding returns -w, wrong unless w = 0
        assert_eq!(check_correctness(&t), ratio(2, 3));
    }

    #[test]
    fn constant_secret_never_leaks() {
        let pairs: Vec<(u64, u64)> = (0..16).map(|v| (v % 5, 7)).collect();
        let mut pairs = pairs;
        pairs.sort_unstable();
        let l = mutual_information(&pairs);
        assert!(l.independent);
        assert_eq!(l.exact_bits, Some(Rational::zero()));
    }

    #[test]
    fn mutual_information_examples() {
        // view equals secret: one full bit
        let l = mutual_information(&[(0, 0), (1, 1)]);
        assert_eq!(l.exact_bits, Some(ratio(1, 1)));
        // a ratio of 3/2 has no exact binary logarithm
        let mut pairs = vec![(0, 0), (0, 0), (0, 1), (1, 1)];
        pairs.sort_unstable();
        let l = mutual_information(&pairs);
        assert!(!l.independent);
        assert_eq!(l.exact_bits, None);
        assert!(l.bits > 0.0);
    }

    #[test]
    fn l1_examples() {
        assert_eq!(l1_distance(&[1, 2, 2], &[1, 2, 2]), 0);
        assert_eq!(l1_distance(&[1, 1], &[2, 2]), 4);
        assert_eq!(l1_distance(&[1, 2], &[2, 3]), 2);
        assert_eq!(l1_distance(&[], &[]), 0);
    }

    #[test]
    fn rate_examples() {
        let p = params(3, 2, 2, 2);
        let batch = simulate(&p, 4, 1).unwrap();
        let m = measure_rates(&batch.transcripts, &p).unwrap();
        assert_eq!(m.per_message, vec![ratio(2, 3); 2]);
        assert_eq!(m.rho, ratio(1, 2));

        let p = ProtocolParams::new(2, vec![1, 2], FieldPrime::TWO).unwrap();
        let batch = simulate(&p, 4, 1).unwrap();
        let m = measure_rates(&batch.transcripts, &p).unwrap();
        assert_eq!(m.per_message, vec![ratio(1, 4), ratio(1, 2)]);
        assert_eq!(m.rho, ratio(1, 1));

        let p = params(3, 2, 3, 2);
        let batch = simulate(&p, 4, 1).unwrap();
        let m = measure_rates(&batch.transcripts, &p).unwrap();
        assert_eq!(m.rate(), ratio(3, 5));
        assert_eq!(m.randomness, 2);

        assert!(measure_rates(&[], &p).is_err());
    }
}
