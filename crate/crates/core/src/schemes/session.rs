//! Composition of base rounds into a full retrieval session.
//!
//! [`ClientSession`] is the user side (coins, queries, decoding, ledger) and
//! [`answer_round`] the database side; [`run_session`] wires them together
//! directly, the `net` module wires them over frames.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Symbol;
use crate::randomness::{CommonRandomness, UserRandomness};
use crate::schemes::base::{self, Answer, Query, RetrievalRequest};
use crate::schemes::plan::SessionPlan;
use crate::store::MessageStore;

/// Download metering (`D`). Upload and randomness are recorded alongside but
/// do not enter the rate.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DownloadLedger {
    pub per_database: Vec<usize>,
    pub total: usize,
    pub upload_symbols: usize,
    pub common_randomness: usize,
}

impl DownloadLedger {
    pub fn new(databases: usize) -> Self {
        DownloadLedger {
            per_database: vec![0; databases],
            ..Default::default()
        }
    }

    pub fn record_answer(&mut self, database: usize) {
        self.per_database[database - 1] += 1;
        self.total += 1;
    }

    pub fn is_consistent(&self) -> bool {
        self.per_database.iter().sum::<usize>() == self.total
    }
}

/// Everything the user saw in one session, in canonical order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub session_id: u64,
    pub databases: usize,
    pub prime: u64,
    pub lengths: Vec<usize>,
    pub desired_index: usize,
    pub user_randomness: UserRandomness,
    pub queries: Vec<Query>,
    pub answers: Vec<Answer>,
    pub decoded: Vec<Symbol>,
    pub ledger: DownloadLedger,
}

impl Transcript {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("transcript serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// User side of a session: holds the coins, emits queries round by round and
/// decodes answers as they arrive.
pub struct ClientSession<'a> {
    plan: &'a SessionPlan,
    request: RetrievalRequest,
    coins: UserRandomness,
    offsets: Vec<usize>,
    next_round: usize,
    queries: Vec<Query>,
    answers: Vec<Answer>,
    decoded: Vec<Symbol>,
    ledger: DownloadLedger,
}

impl<'a> ClientSession<'a> {
    pub fn new(plan: &'a SessionPlan, request: RetrievalRequest, coins: UserRandomness) -> Result<Self> {
        if request.desired() > plan.messages() {
            return Err(Error::IndexOutOfRange {
                index: request.desired(),
                count: plan.messages(),
            });
        }
        if coins.len() != plan.coin_count() {
            return Err(Error::CoinCount {
                expected: plan.coin_count(),
                actual: coins.len(),
            });
        }
        plan.prime.check_all(coins.coins())?;
        Ok(ClientSession {
            plan,
            request,
            offsets: plan.coin_offsets(),
            coins,
            next_round: 0,
            queries: Vec::new(),
            answers: Vec::new(),
            decoded: vec![0; plan.lengths[request.position()]],
            ledger: DownloadLedger::new(plan.databases),
        })
    }

    pub fn rounds(&self) -> usize {
        self.plan.rounds.len()
    }

    /// Queries for `round`, one per participating database.
    pub fn queries(&self, round: usize) -> Result<Vec<Query>> {
        let shape = self.plan.round_shape(round);
        let at = self.offsets[round];
        let coins = &self.coins.coins()[at..at + shape.coins()];
        base::build_queries(&self.request, coins, shape, round as u32)
    }

    /// Decode one completed round. Rounds must be absorbed in order.
    pub fn absorb(&mut self, round: usize, queries: Vec<Query>, answers: Vec<Answer>) -> Result<()> {
        if round != self.next_round {
            return Err(Error::IncompleteSession(format!(
                "round {round} delivered while expecting round {}",
                self.next_round
            )));
        }
        let shape = self.plan.round_shape(round);
        if answers.iter().any(|a| a.round != round as u32) {
            return Err(Error::IncompleteSession(format!("stray answer in round {round}")));
        }
        let block = base::decode(&answers, shape)?;
        let window = self.plan.rounds[round].windows[self.request.position()];
        self.decoded[window.start..window.start + window.len].copy_from_slice(&block[..window.len]);

        let mut answers = answers;
        answers.sort_by_key(|a| a.database);
        for a in &answers {
            self.ledger.record_answer(a.database);
        }
        self.ledger.upload_symbols += queries.iter().map(|q| q.coeffs.len()).sum::<usize>();
        self.ledger.common_randomness += 1;
        self.queries.extend(queries);
        self.answers.extend(answers);
        self.next_round += 1;
        Ok(())
    }

    pub fn finish(self, session_id: u64) -> Result<Transcript> {
        if self.next_round != self.plan.rounds.len() {
            return Err(Error::IncompleteSession(format!(
                "{} of {} rounds completed",
                self.next_round,
                self.plan.rounds.len()
            )));
        }
        Ok(Transcript {
            session_id,
            databases: self.plan.databases,
            prime: u64::from(self.plan.prime),
            lengths: self.plan.lengths.clone(),
            desired_index: self.request.desired(),
            user_randomness: self.coins,
            queries: self.queries,
            answers: self.answers,
            decoded: self.decoded,
            ledger: self.ledger,
        })
    }
}

/// Database side of one round. Reads only the query, the store and the
/// round's common-randomness symbol.
pub fn answer_round(plan: &SessionPlan, query: &Query, store: &MessageStore, s: Symbol) -> Result<Answer> {
    let round = query.round as usize;
    let shape = plan
        .rounds
        .get(round)
        .map(|_| plan.round_shape(round))
        .ok_or_else(|| Error::InvalidParams(format!("plan has no round {round}")))?;
    if query.database == 0 || query.database > shape.databases {
        return Err(Error::InvalidParams(format!(
            "database {} does not take part in round {round}",
            query.database
        )));
    }
    let mut block = Vec::with_capacity(shape.coins());
    plan.gather_block(round, store, &mut block);
    base::answer_block(query, &block, s, plan.prime)
}

/// Run a whole session in process. Consumes one common-randomness symbol per
/// round; the decoded message equals `W_k` for every input.
pub fn run_session(
    plan: &SessionPlan,
    request: RetrievalRequest,
    store: &MessageStore,
    common: &mut CommonRandomness,
    coins: UserRandomness,
    session_id: u64,
) -> Result<Transcript> {
    plan.check_store(store)?;
    let mut client = ClientSession::new(plan, request, coins)?;
    for round in 0..client.rounds() {
        let s = common.take()?;
        let queries = client.queries(round)?;
        let answers = queries
            .iter()
            .map(|q| answer_round(plan, q, store, s))
            .collect::<Result<Vec<_>>>()?;
        client.absorb(round, queries, answers)?;
    }
    client.finish(session_id)
}
