//! The joint probability space of one scheme at small parameters.
//!
//! For every desired index `k` the table walks all `p^(coins + msg + S)`
//! assignments of user coins, message symbols and common randomness, each
//! with weight `1 / (K p^(coins + msg + S))`. Transcripts are not kept: each
//! state is reduced on the fly to the integer keys the checks compare, and
//! [`JointTable::entry`] rebuilds the full transcript of any state on demand.

use num::{BigInt, BigRational};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::analysis::Rational;
use crate::error::{Error, Result};
use crate::field::{FieldPrime, Symbol};
use crate::params::ProtocolParams;
use crate::randomness::UserRandomness;
use crate::schemes::base::{differences, fill_queries};
use crate::schemes::{Answer, DownloadLedger, Query, SessionPlan, Transcript};

/// Joint states per desired index the auditor enumerates by default.
pub const DEFAULT_BUDGET: u128 = 1 << 24;

/// The scheme under test. Everything except `Honest` is deliberately broken.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeVariant {
    #[default]
    Honest,
    /// Answers carry no common-randomness mask.
    NoMask,
    /// The user's coins are fixed to zero.
    DeterministicCoins,
    /// Every round is masked with the first round's symbol.
    ReusedMask,
    /// Decodes `A_1 - A_(i+1)`.
    WrongSubtraction,
}

impl SchemeVariant {
    pub const ALL: [SchemeVariant; 5] = [
        SchemeVariant::Honest,
        SchemeVariant::NoMask,
        SchemeVariant::DeterministicCoins,
        SchemeVariant::ReusedMask,
        SchemeVariant::WrongSubtraction,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeVariant::Honest => "honest",
            SchemeVariant::NoMask => "no-mask",
            SchemeVariant::DeterministicCoins => "deterministic-coins",
            SchemeVariant::ReusedMask => "reused-mask",
            SchemeVariant::WrongSubtraction => "wrong-subtraction",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        SchemeVariant::ALL.into_iter().find(|v| v.name() == name)
    }

    /// Distinct common-randomness symbols the variant actually consumes.
    pub fn consumed_randomness(self, rounds: usize) -> usize {
        match self {
            SchemeVariant::NoMask => 0,
            SchemeVariant::ReusedMask => rounds.min(1),
            _ => rounds,
        }
    }
}

/// Digit counts of one joint state: coins, then message symbols, then `S`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StateLayout {
    pub prime: FieldPrime,
    pub coins: usize,
    pub message_symbols: usize,
    pub common_symbols: usize,
}

impl StateLayout {
    pub fn of(plan: &SessionPlan) -> Self {
        StateLayout {
            prime: plan.prime,
            coins: plan.coin_count(),
            message_symbols: plan.lengths.iter().sum(),
            common_symbols: plan.randomness(),
        }
    }

    pub fn width(&self) -> usize {
        self.coins + self.message_symbols + self.common_symbols
    }

    /// `p^width`, saturating at `u128::MAX`.
    pub fn states(&self) -> u128 {
        checked_power(u64::from(self.prime.get()), self.width()).unwrap_or(u128::MAX)
    }

    /// Digits of state number `state`, least significant first.
    pub fn digits(&self, mut state: u64) -> Vec<Symbol> {
        let p = u64::from(self.prime.get());
        (0..self.width())
            .map(|_| {
                let d = (state % p) as Symbol;
                state /= p;
                d
            })
            .collect()
    }
}

fn checked_power(base: u64, exp: usize) -> Option<u128> {
    let exp = u32::try_from(exp).ok()?;
    u128::from(base).checked_pow(exp)
}

/// Per-state evaluation of one variant for a fixed desired index, reusing
/// its buffers across states.
pub(crate) struct Evaluator<'a> {
    plan: &'a SessionPlan,
    variant: SchemeVariant,
    position: usize,
    layout: StateLayout,
    coin_offsets: Vec<usize>,
    message_offsets: Vec<usize>,
    /// Per round, the state digit feeding each block coordinate.
    block_source: Vec<Vec<Option<usize>>>,
    zero_coins: Vec<Symbol>,
    pub(crate) blocks: Vec<Vec<Symbol>>,
    pub(crate) queries: Vec<Vec<Vec<Symbol>>>,
    pub(crate) answers: Vec<Vec<Symbol>>,
    pub(crate) decoded: Vec<Symbol>,
    diff: Vec<Symbol>,
}

impl<'a> Evaluator<'a> {
    pub(crate) fn new(plan: &'a SessionPlan, variant: SchemeVariant, position: usize) -> Self {
        let layout = StateLayout::of(plan);
        let mut message_offsets = Vec::with_capacity(plan.messages());
        let mut at = layout.coins;
        for &l in &plan.lengths {
            message_offsets.push(at);
            at += l;
        }
        let block_source = plan
            .rounds
            .iter()
            .map(|r| {
                let block = r.participants - 1;
                r.windows
                    .iter()
                    .enumerate()
                    .flat_map(|(k, w)| {
                        let base = message_offsets[k] + w.start;
                        (0..block).map(move |i| (i < w.len).then_some(base + i))
                    })
                    .collect()
            })
            .collect();
        let rounds = plan.rounds.len();
        let max_coins = (0..rounds).map(|r| plan.round_shape(r).coins()).max().unwrap_or(0);
        Evaluator {
            plan,
            variant,
            position,
            layout,
            coin_offsets: plan.coin_offsets(),
            message_offsets,
            block_source,
            zero_coins: vec![0; max_coins],
            blocks: (0..rounds).map(|r| Vec::with_capacity(plan.round_shape(r).coins())).collect(),
            queries: plan.rounds.iter().map(|r| vec![Vec::new(); r.participants]).collect(),
            answers: plan.rounds.iter().map(|r| vec![0; r.participants]).collect(),
            decoded: vec![0; plan.lengths[position]],
            diff: vec![0; plan.databases],
        }
    }

    pub(crate) fn layout(&self) -> StateLayout {
        self.layout
    }

    fn mask(&self, digits: &[Symbol], round: usize) -> Symbol {
        let s = self.layout.coins + self.layout.message_symbols;
        match self.variant {
            SchemeVariant::NoMask => 0,
            SchemeVariant::ReusedMask => digits[s],
            _ => digits[s + round],
        }
    }

    /// Run every round on one assignment.
    pub(crate) fn eval(&mut self, digits: &[Symbol]) {
        let prime = self.plan.prime;
        for r in 0..self.plan.rounds.len() {
            let shape = self.plan.round_shape(r);
            let coins = if self.variant == SchemeVariant::DeterministicCoins {
                &self.zero_coins[..shape.coins()]
            } else {
                &digits[self.coin_offsets[r]..self.coin_offsets[r] + shape.coins()]
            };
            fill_queries(self.position, coins, shape, &mut self.queries[r]);

            let block = &mut self.blocks[r];
            block.clear();
            block.extend(self.block_source[r].iter().map(|src| src.map_or(0, |i| digits[i])));

            let mask = self.mask(digits, r);
            for (a, q) in self.answers[r].iter_mut().zip(&self.queries[r]) {
                *a = prime.add(prime.dot(q, &self.blocks[r]), mask);
            }

            let diff = &mut self.diff[..shape.block()];
            differences(&self.answers[r], prime, diff);
            if self.variant == SchemeVariant::WrongSubtraction {
                for d in diff.iter_mut() {
                    *d = prime.neg(*d);
                }
            }
            let w = self.plan.rounds[r].windows[self.position];
            self.decoded[w.start..w.start + w.len].copy_from_slice(&diff[..w.len]);
        }
    }

    pub(crate) fn desired<'d>(&self, digits: &'d [Symbol]) -> &'d [Symbol] {
        let at = self.message_offsets[self.position];
        &digits[at..at + self.plan.lengths[self.position]]
    }

    /// Transcript of the last evaluated state.
    pub(crate) fn transcript(&self, digits: &[Symbol]) -> Transcript {
        let plan = self.plan;
        let mut queries = Vec::new();
        let mut answers = Vec::new();
        let mut ledger = DownloadLedger::new(plan.databases);
        for (r, (qs, avs)) in self.queries.iter().zip(&self.answers).enumerate() {
            for (n, (q, &a)) in qs.iter().zip(avs).enumerate() {
                queries.push(Query {
                    round: r as u32,
                    database: n + 1,
                    coeffs: q.clone(),
                });
                answers.push(Answer {
                    round: r as u32,
                    database: n + 1,
                    value: a,
                });
                ledger.record_answer(n + 1);
                ledger.upload_symbols += q.len();
            }
        }
        ledger.common_randomness = self.variant.consumed_randomness(plan.rounds.len());
        Transcript {
            session_id: 0,
            databases: plan.databases,
            prime: u64::from(plan.prime.get()),
            lengths: plan.lengths.clone(),
            desired_index: self.position + 1,
            user_randomness: UserRandomness::new(plan.prime, digits[..self.layout.coins].to_vec())
                .expect("digits are field elements"),
            queries,
            answers,
            decoded: self.decoded.clone(),
            ledger,
        }
    }
}

/// Reduced columns for one desired index. Every vector is sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct IndexColumns {
    /// Per database, the key of `(Q_n, A_n, W_1..W_K, S)`.
    pub(crate) database_views: Vec<Vec<u64>>,
    /// `(user view, undesired messages)`: the view is `(F, A_1..A_N)`;
    /// queries are a function of `F` once `k` is fixed.
    pub(crate) user_views: Vec<(u64, u64)>,
    pub(crate) errors: u64,
}

/// One joint state with its weight and the transcript it induces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JointEntry {
    pub desired_index: usize,
    pub coins: Vec<Symbol>,
    pub messages: Vec<Vec<Symbol>>,
    pub common: Vec<Symbol>,
    pub probability: Rational,
    pub transcript: Transcript,
}

pub struct JointTable {
    plan: SessionPlan,
    variant: SchemeVariant,
    layout: StateLayout,
    states_per_index: u64,
    pub(crate) columns: Vec<IndexColumns>,
}

/// Enumerate the full joint distribution of `variant` at `params`.
///
/// Refuses with [`Error::BudgetExceeded`] when one desired index alone has
/// more than `budget` states.
pub fn enumerate_joint(params: &ProtocolParams, variant: SchemeVariant, budget: u128) -> Result<JointTable> {
    let plan = SessionPlan::for_params(params)?;
    let layout = StateLayout::of(&plan);
    let required = layout.states();
    if required > budget {
        return Err(Error::BudgetExceeded { required, budget });
    }
    let states = u64::try_from(required).map_err(|_| Error::BudgetExceeded { required, budget })?;
    let keys = KeyWidths::new(&plan)?;
    let columns = (0..plan.messages())
        .into_par_iter()
        .map(|position| enumerate_index(&plan, variant, position, states, &keys))
        .collect();
    Ok(JointTable {
        plan,
        variant,
        layout,
        states_per_index: states,
        columns,
    })
}

/// Radix powers for packing views into `u64` keys.
struct KeyWidths {
    /// `p^(msg + S)`, the scale of each database's `(Q_n, A_n)` prefix.
    shared_scale: u64,
}

impl KeyWidths {
    fn new(plan: &SessionPlan) -> Result<Self> {
        let layout = StateLayout::of(plan);
        let p = u64::from(plan.prime.get());
        let shared = layout.message_symbols + layout.common_symbols;
        let widest_view = (0..plan.databases)
            .map(|n| {
                (0..plan.rounds.len())
                    .filter(|&r| n < plan.rounds[r].participants)
                    .map(|r| plan.round_shape(r).coins() + 1)
                    .sum::<usize>()
            })
            .max()
            .unwrap_or(0);
        let user_view = layout.coins + plan.download();
        let fits = |digits: usize| checked_power(p, digits).is_some_and(|v| v <= u128::from(u64::MAX));
        if !fits(widest_view + shared) || !fits(user_view) || !fits(layout.message_symbols) {
            return Err(Error::InvalidParams(
                "views too wide to key exactly; lower the parameters".into(),
            ));
        }
        Ok(KeyWidths {
            shared_scale: p.pow(shared as u32),
        })
    }
}

fn enumerate_index(
    plan: &SessionPlan,
    variant: SchemeVariant,
    position: usize,
    states: u64,
    keys: &KeyWidths,
) -> IndexColumns {
    let mut ev = Evaluator::new(plan, variant, position);
    let layout = ev.layout();
    let p = u64::from(plan.prime.get());
    let capacity = states as usize;
    let mut database_views: Vec<Vec<u64>> = (0..plan.databases).map(|_| Vec::with_capacity(capacity)).collect();
    let mut user_views = Vec::with_capacity(capacity);
    let mut errors = 0u64;

    let msg_start = layout.coins;
    let msg_end = msg_start + layout.message_symbols;
    let desired_start = msg_start + plan.lengths[..position].iter().sum::<usize>();
    let desired_end = desired_start + plan.lengths[position];
    let horner = |acc: u64, d: &Symbol| acc * p + u64::from(*d);

    let mut digits = vec![0 as Symbol; layout.width()];
    for _ in 0..states {
        ev.eval(&digits);

        let shared = digits[msg_start..].iter().fold(0, horner);
        for (n, views) in database_views.iter_mut().enumerate() {
            let mut key = 0u64;
            for (qs, avs) in ev.queries.iter().zip(&ev.answers) {
                if let (Some(q), Some(&a)) = (qs.get(n), avs.get(n)) {
                    key = q.iter().fold(key, horner);
                    key = horner(key, &a);
                }
            }
            views.push(key * keys.shared_scale + shared);
        }

        let mut view = digits[..layout.coins].iter().fold(0, horner);
        for avs in &ev.answers {
            view = avs.iter().fold(view, horner);
        }
        let undesired = digits[msg_start..desired_start]
            .iter()
            .chain(&digits[desired_end..msg_end])
            .fold(0, horner);
        user_views.push((view, undesired));

        if ev.decoded != ev.desired(&digits) {
            errors += 1;
        }
        increment(&mut digits, plan.prime.get());
    }

    for v in &mut database_views {
        v.par_sort_unstable();
    }
    user_views.par_sort_unstable();
    IndexColumns {
        database_views,
        user_views,
        errors,
    }
}

/// Odometer step, least significant digit first.
fn increment(digits: &mut [Symbol], radix: Symbol) {
    for d in digits {
        *d += 1;
        if *d < radix {
            return;
        }
        *d = 0;
    }
}

impl JointTable {
    pub fn plan(&self) -> &SessionPlan {
        &self.plan
    }

    pub fn variant(&self) -> SchemeVariant {
        self.variant
    }

    pub fn layout(&self) -> StateLayout {
        self.layout
    }

    pub fn messages(&self) -> usize {
        self.plan.messages()
    }

    /// `p^(coins + msg + S)`.
    pub fn states_per_index(&self) -> u64 {
        self.states_per_index
    }

    /// Total weighted entries, `K p^(coins + msg + S)`.
    pub fn len(&self) -> u128 {
        u128::from(self.states_per_index) * self.messages() as u128
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Weight of every entry under uniform index, coins, messages and `S`.
    pub fn probability(&self) -> Rational {
        BigRational::new(BigInt::from(1u8), BigInt::from(self.len()))
    }

    /// Decoding failures among the states of desired index `k` (1-based).
    pub fn errors(&self, k: usize) -> u64 {
        self.columns[k - 1].errors
    }

    /// Rebuild entry `state` of desired index `k` (1-based).
    pub fn entry(&self, k: usize, state: u64) -> Result<JointEntry> {
        if k == 0 || k > self.messages() {
            return Err(Error::IndexOutOfRange {
                index: k,
                count: self.messages(),
            });
        }
        if state >= self.states_per_index {
            return Err(Error::InvalidParams(format!(
                "state {state} outside 0..{}",
                self.states_per_index
            )));
        }
        let digits = self.layout.digits(state);
        let mut ev = Evaluator::new(&self.plan, self.variant, k - 1);
        ev.eval(&digits);
        let c = self.layout.coins;
        let mut at = c;
        let messages = self
            .plan
            .lengths
            .iter()
            .map(|&l| {
                at += l;
                digits[at - l..at].to_vec()
            })
            .collect();
        Ok(JointEntry {
            desired_index: k,
            coins: digits[..c].to_vec(),
            messages,
            common: digits[c + self.layout.message_symbols..].to_vec(),
            probability: self.probability(),
            transcript: ev.transcript(&digits),
        })
    }

    /// Digest of every reduced column; equal tables have equal fingerprints.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for col in &self.columns {
            for views in &col.database_views {
                for key in views {
                    h.update(key.to_le_bytes());
                }
            }
            for (v, x) in &col.user_views {
                h.update(v.to_le_bytes());
                h.update(x.to_le_bytes());
            }
            h.update(col.errors.to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}
