//! One round of the capacity-achieving scheme.
//!
//! With `m` participating databases each message contributes a block of
//! `m - 1` symbols. The user draws `(m - 1) K` uniform coins `h`, sends `h`
//! itself to database 1 and `h + e_(k,i)` to database `i + 1`, where
//! `e_(k,i)` is the unit vector at the coordinate of symbol `i` of the
//! desired message `k`. Every database answers `<query, blocks> + s` with the
//! same common-randomness symbol `s`, so `A_(i+1) - A_1` is exactly symbol
//! `i` of message `k` while each undesired symbol stays masked by `s`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{FieldPrime, Symbol};
use crate::store::MessageStore;

/// Which message the user wants (`theta`), 1-based.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievalRequest {
    desired: usize,
}

impl RetrievalRequest {
    pub fn new(desired: usize, messages: usize) -> Result<Self> {
        if desired == 0 || desired > messages {
            return Err(Error::IndexOutOfRange {
                index: desired,
                count: messages,
            });
        }
        Ok(RetrievalRequest { desired })
    }

    /// 1-based index as used on the command line and in transcripts.
    pub fn desired(&self) -> usize {
        self.desired
    }

    /// 0-based position into message arrays.
    pub fn position(&self) -> usize {
        self.desired - 1
    }
}

/// `Q_n` for one round. `database` is 1-based.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub round: u32,
    pub database: usize,
    pub coeffs: Vec<Symbol>,
}

/// `A_n` for one round: a single field symbol.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Answer {
    pub round: u32,
    pub database: usize,
    pub value: Symbol,
}

/// Size of one round: `databases` participants, `messages` blocks of
/// `databases - 1` symbols each.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct RoundShape {
    pub databases: usize,
    pub messages: usize,
    pub prime: FieldPrime,
}

impl RoundShape {
    pub fn new(databases: usize, messages: usize, prime: FieldPrime) -> Result<Self> {
        if databases < 2 {
            return Err(Error::Infeasible(format!(
                "a round needs at least 2 databases, got {databases}"
            )));
        }
        if messages < 2 {
            return Err(Error::Infeasible(format!(
                "a round needs at least 2 messages, got {messages}"
            )));
        }
        Ok(RoundShape {
            databases,
            messages,
            prime,
        })
    }

    /// Symbols per message block.
    pub fn block(&self) -> usize {
        self.databases - 1
    }

    /// Query length and number of user coins, `(m - 1) K`.
    pub fn coins(&self) -> usize {
        self.block() * self.messages
    }

    /// Coordinate of symbol `i` (0-based) of message `position` (0-based).
    #[inline]
    pub fn coordinate(&self, position: usize, i: usize) -> usize {
        position * self.block() + i
    }
}

/// Build the `m` queries of one round from the coins `h`.
pub fn build_queries(
    request: &RetrievalRequest,
    coins: &[Symbol],
    shape: RoundShape,
    round: u32,
) -> Result<Vec<Query>> {
    if request.desired() > shape.messages {
        return Err(Error::IndexOutOfRange {
            index: request.desired(),
            count: shape.messages,
        });
    }
    if coins.len() != shape.coins() {
        return Err(Error::CoinCount {
            expected: shape.coins(),
            actual: coins.len(),
        });
    }
    shape.prime.check_all(coins)?;
    let mut coeffs = vec![Vec::new(); shape.databases];
    fill_queries(request.position(), coins, shape, &mut coeffs);
    Ok(coeffs
        .into_iter()
        .enumerate()
        .map(|(n, coeffs)| Query {
            round,
            database: n + 1,
            coeffs,
        })
        .collect())
}

/// Allocation-reusing core of [`build_queries`]; `out` must hold `m` vectors.
pub(crate) fn fill_queries(position: usize, coins: &[Symbol], shape: RoundShape, out: &mut [Vec<Symbol>]) {
    debug_assert_eq!(out.len(), shape.databases);
    for (n, q) in out.iter_mut().enumerate() {
        q.clear();
        q.extend_from_slice(coins);
        if n > 0 {
            let c = shape.coordinate(position, n - 1);
            q[c] = shape.prime.add(q[c], 1);
        }
    }
}

/// `<coeffs, block> + s`. `block` is the concatenation of every message's
/// `m - 1` symbols for this round.
pub fn answer_block(query: &Query, block: &[Symbol], s: Symbol, prime: FieldPrime) -> Result<Answer> {
    let value = prime.inner_product(&query.coeffs, block)?;
    Ok(Answer {
        round: query.round,
        database: query.database,
        value: prime.add(value, s),
    })
}

/// Answer from a store whose messages are exactly one block each.
pub fn answer(query: &Query, store: &MessageStore, s: Symbol) -> Result<Answer> {
    let block: Vec<Symbol> = store.messages().concat();
    answer_block(query, &block, s, store.prime())
}

/// Recover the desired block as `A_(i+1) - A_1`. Answers may arrive in any
/// order but must cover databases `1..=m` of a single round.
pub fn decode(answers: &[Answer], shape: RoundShape) -> Result<Vec<Symbol>> {
    let ordered = order_answers(answers, shape.databases)?;
    let mut out = vec![0; shape.block()];
    differences(&ordered, shape.prime, &mut out);
    Ok(out)
}

/// `out[i] = ordered[i + 1] - ordered[0]` for answers sorted by database.
#[inline]
pub(crate) fn differences(ordered: &[Symbol], prime: FieldPrime, out: &mut [Symbol]) {
    let first = ordered[0];
    for (o, &a) in out.iter_mut().zip(&ordered[1..]) {
        *o = prime.sub(a, first);
    }
}

fn order_answers(answers: &[Answer], databases: usize) -> Result<Vec<Symbol>> {
    let mut slots: Vec<Option<Symbol>> = vec![None; databases];
    let round = answers.first().map(|a| a.round);
    for a in answers {
        if Some(a.round) != round {
            return Err(Error::IncompleteSession(
                "answers from different rounds".into(),
            ));
        }
        let slot = a
            .database
            .checked_sub(1)
            .and_then(|i| slots.get_mut(i))
            .ok_or_else(|| {
                Error::IncompleteSession(format!("answer from unexpected database {}", a.database))
            })?;
        if slot.replace(a.value).is_some() {
            return Err(Error::IncompleteSession(format!(
                "duplicate answer from database {}",
                a.database
            )));
        }
    }
    slots
        .into_iter()
        .enumerate()
        .map(|(n, s)| {
            s.ok_or_else(|| Error::IncompleteSession(format!("missing answer from database {}", n + 1)))
        })
        .collect()
}
