//! A single database server.
//!
//! A node owns its copy of the store and the dealer-provided common
//! randomness and nothing else: no handle to any other node exists anywhere
//! in its state. Queries never carry the desired index, so the node cannot
//! learn or record it.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Mutex, RwLock};

use crate::codec::{pack_symbols, unpack_symbols, Reader};
use crate::error::{Error, Result};
use crate::net::frame::{ErrorCode, Frame, FrameType};
use crate::params::ProtocolParams;
use crate::randomness::{CommonRandomness, DealerRecord};
use crate::schemes::{answer_round, Query, SessionPlan};
use crate::store::MessageStore;

#[derive(Debug, Default)]
struct Meter {
    queries: AtomicU64,
    symbols_served: AtomicU64,
    answer_bytes: AtomicU64,
    query_bytes: AtomicU64,
    rejected: AtomicU64,
}

/// Point-in-time copy of a node's counters.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub struct NodeLedger {
    pub queries: u64,
    pub symbols_served: u64,
    pub answer_bytes: u64,
    pub query_bytes: u64,
    pub rejected: u64,
}

pub struct DatabaseNode {
    index: usize,
    store: MessageStore,
    plan: SessionPlan,
    sessions: RwLock<HashMap<u64, Mutex<CommonRandomness>>>,
    meter: Meter,
}

impl DatabaseNode {
    /// Node `index` (1-based) of a deployment of `databases` nodes.
    pub fn new(index: usize, databases: usize, store: MessageStore) -> Result<Self> {
        let params = ProtocolParams::new(databases, store.lengths(), store.prime())?;
        let plan = SessionPlan::for_params(&params)?;
        if index == 0 || index > databases {
            return Err(Error::InvalidParams(format!(
                "node index {index} outside 1..={databases}"
            )));
        }
        Ok(DatabaseNode {
            index,
            store,
            plan,
            sessions: RwLock::new(HashMap::new()),
            meter: Meter::default(),
        })
    }

    /// Node preloaded with every session in the dealer record.
    pub fn from_dealer(index: usize, store: MessageStore, dealer: &DealerRecord) -> Result<Self> {
        if dealer.prime != store.prime() {
            return Err(Error::InvalidParams(format!(
                "randomness is over F_{} but the store is over F_{}",
                dealer.prime,
                store.prime()
            )));
        }
        let node = DatabaseNode::new(index, dealer.databases, store)?;
        for &id in dealer.sessions.keys() {
            node.setup_session(id, dealer.session(id).expect("listed session"))?;
        }
        Ok(node)
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn plan(&self) -> &SessionPlan {
        &self.plan
    }

    pub fn ledger(&self) -> NodeLedger {
        let m = &self.meter;
        NodeLedger {
            queries: m.queries.load(Ordering::SeqCst),
            symbols_served: m.symbols_served.load(Ordering::SeqCst),
            answer_bytes: m.answer_bytes.load(Ordering::SeqCst),
            query_bytes: m.query_bytes.load(Ordering::SeqCst),
            rejected: m.rejected.load(Ordering::SeqCst),
        }
    }

    /// Register the common randomness of a session. Re-registering identical
    /// symbols is a no-op; conflicting symbols are refused.
    pub fn setup_session(&self, session_id: u64, randomness: CommonRandomness) -> Result<()> {
        if randomness.len() < self.plan.randomness() {
            return Err(Error::InvalidParams(format!(
                "session {session_id} has {} randomness symbols, plan needs {}",
                randomness.len(),
                self.plan.randomness()
            )));
        }
        let mut sessions = self.sessions.write().expect("session table poisoned");
        if let Some(existing) = sessions.get(&session_id) {
            let existing = existing.lock().expect("session poisoned");
            if existing.symbols() != randomness.symbols() {
                return Err(Error::InvalidParams(format!(
                    "session {session_id} already set up with different randomness"
                )));
            }
            return Ok(());
        }
        sessions.insert(session_id, Mutex::new(randomness));
        Ok(())
    }

    /// Bytes in, bytes out. Undecodable input yields an ERROR frame.
    pub fn handle_bytes(&self, bytes: &[u8]) -> Vec<u8> {
        match Frame::decode(bytes) {
            Ok(frame) => self.handle(&frame),
            Err(e) => self.reject(0, 0, ErrorCode::Malformed, &e.to_string()),
        }
        .encode()
    }

    pub fn handle(&self, frame: &Frame) -> Frame {
        match frame.frame_type {
            FrameType::Query => self.serve(frame),
            FrameType::Setup => self.setup_frame(frame),
            FrameType::Answer | FrameType::Error => self.reject(
                frame.session_id,
                frame.round,
                ErrorCode::UnexpectedFrame,
                "databases only accept SETUP and QUERY",
            ),
        }
    }

    /// Answer one QUERY frame.
    pub fn serve(&self, frame: &Frame) -> Frame {
        let (sid, round) = (frame.session_id, frame.round);
        let sessions = self.sessions.read().expect("session table poisoned");
        let Some(randomness) = sessions.get(&sid) else {
            return self.reject(sid, round, ErrorCode::NotSetup, "no common randomness for session");
        };
        let r = round as usize;
        let Some(round_plan) = self.plan.rounds.get(r) else {
            return self.reject(sid, round, ErrorCode::BadRound, "round outside the session plan");
        };
        if self.index > round_plan.participants {
            return self.reject(sid, round, ErrorCode::BadRound, "node does not take part in this round");
        }
        let shape = self.plan.round_shape(r);
        let coeffs = match unpack_symbols(&frame.payload, shape.coins(), self.plan.prime) {
            Ok(c) => c,
            Err(e) => return self.reject(sid, round, ErrorCode::Malformed, &e.to_string()),
        };
        let s = match randomness.lock().expect("session poisoned").at(r) {
            Ok(s) => s,
            Err(e) => return self.reject(sid, round, ErrorCode::Internal, &e.to_string()),
        };
        let query = Query {
            round,
            database: self.index,
            coeffs,
        };
        let answer = match answer_round(&self.plan, &query, &self.store, s) {
            Ok(a) => a,
            Err(e) => return self.reject(sid, round, ErrorCode::Internal, &e.to_string()),
        };
        let payload = pack_symbols(&[answer.value], self.plan.prime);
        let m = &self.meter;
        m.queries.fetch_add(1, Ordering::SeqCst);
        m.symbols_served.fetch_add(1, Ordering::SeqCst);
        m.query_bytes.fetch_add(frame.encoded_len() as u64, Ordering::SeqCst);
        m.answer_bytes.fetch_add(payload.len() as u64, Ordering::SeqCst);
        Frame::new(FrameType::Answer, sid, round, payload)
    }

    fn setup_frame(&self, frame: &Frame) -> Frame {
        let parsed = (|| {
            let mut r = Reader::new(&frame.payload);
            let count = r.u32()? as usize;
            let rest = r.take(frame.payload.len() - 4)?;
            let symbols = unpack_symbols(rest, count, self.plan.prime)?;
            CommonRandomness::new(self.plan.prime, symbols)
        })();
        match parsed.and_then(|s| self.setup_session(frame.session_id, s)) {
            Ok(()) => Frame::new(FrameType::Setup, frame.session_id, frame.round, Vec::new()),
            Err(e) => self.reject(frame.session_id, frame.round, ErrorCode::Malformed, &e.to_string()),
        }
    }

    fn reject(&self, sid: u64, round: u32, code: ErrorCode, message: &str) -> Frame {
        self.meter.rejected.fetch_add(1, Ordering::SeqCst);
        Frame::error(sid, round, code, message)
    }
}

/// SETUP frame carrying a session's common randomness (dealer side).
pub fn setup_frame(session_id: u64, randomness: &CommonRandomness, prime: crate::field::FieldPrime) -> Frame {
    let mut payload = (randomness.len() as u32).to_be_bytes().to_vec();
    payload.extend_from_slice(&pack_symbols(randomness.symbols(), prime));
    Frame::new(FrameType::Setup, session_id, 0, payload)
}
