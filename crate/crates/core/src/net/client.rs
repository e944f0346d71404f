use std::collections::VecDeque;
use std::sync::Arc;

use crate::codec::{pack_symbols, unpack_symbols};
use crate::error::{Error, Result};
use crate::net::frame::{Frame, FrameType};
use crate::net::node::DatabaseNode;
use crate::randomness::UserRandomness;
use crate::schemes::{Answer, ClientSession, RetrievalRequest, SessionPlan, Transcript};

/// One half-duplex connection from the user to one database.
pub trait DatabaseLink: Send {
    fn send(&mut self, frame: &Frame) -> Result<()>;
    fn recv(&mut self) -> Result<Frame>;
}

/// Link to a node living in this process. Frames still go through their
/// byte encoding so the path matches the networked one.
pub struct InProcessLink {
    node: Arc<DatabaseNode>,
    pending: VecDeque<Vec<u8>>,
}

impl InProcessLink {
    pub fn new(node: Arc<DatabaseNode>) -> Self {
        InProcessLink {
            node,
            pending: VecDeque::new(),
        }
    }
}

impl DatabaseLink for InProcessLink {
    fn send(&mut self, frame: &Frame) -> Result<()> {
        self.pending.push_back(self.node.handle_bytes(&frame.encode()));
        Ok(())
    }

    fn recv(&mut self) -> Result<Frame> {
        let bytes = self
            .pending
            .pop_front()
            .ok_or_else(|| Error::Aborted("no reply pending".into()))?;
        Ok(Frame::decode(&bytes)?)
    }
}

/// What actually crossed the wire, per database, as seen by the user.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WireMeter {
    pub answer_symbols: Vec<usize>,
    pub answer_payload_bytes: Vec<usize>,
    pub frame_bytes_down: Vec<usize>,
    pub frame_bytes_up: Vec<usize>,
}

impl WireMeter {
    fn new(databases: usize) -> Self {
        WireMeter {
            answer_symbols: vec![0; databases],
            answer_payload_bytes: vec![0; databases],
            frame_bytes_down: vec![0; databases],
            frame_bytes_up: vec![0; databases],
        }
    }

    pub fn total_answer_symbols(&self) -> usize {
        self.answer_symbols.iter().sum()
    }
}

/// The user: holds one link per database and runs sessions over them.
pub struct Client {
    links: Vec<Box<dyn DatabaseLink>>,
    meter: WireMeter,
}

impl Client {
    pub fn new(links: Vec<Box<dyn DatabaseLink>>) -> Self {
        let meter = WireMeter::new(links.len());
        Client { links, meter }
    }

    pub fn meter(&self) -> &WireMeter {
        &self.meter
    }

    /// Run every planned round: send all of a round's queries, then collect
    /// all of its answers before decoding. Any failure aborts the session
    /// and nothing is decoded.
    pub fn retrieve(
        &mut self,
        plan: &SessionPlan,
        request: RetrievalRequest,
        coins: UserRandomness,
        session_id: u64,
    ) -> Result<Transcript> {
        if self.links.len() != plan.databases {
            return Err(Error::InvalidParams(format!(
                "{} endpoints for {} databases",
                self.links.len(),
                plan.databases
            )));
        }
        let mut session = ClientSession::new(plan, request, coins)?;
        for round in 0..session.rounds() {
            let queries = session.queries(round)?;
            for q in &queries {
                let frame = Frame::new(
                    FrameType::Query,
                    session_id,
                    q.round,
                    pack_symbols(&q.coeffs, plan.prime),
                );
                self.links[q.database - 1]
                    .send(&frame)
                    .map_err(|e| abort(q.database, e))?;
                self.meter.frame_bytes_up[q.database - 1] += frame.encoded_len();
            }
            let mut answers = Vec::with_capacity(queries.len());
            for q in &queries {
                let n = q.database;
                let frame = self.links[n - 1].recv().map_err(|e| abort(n, e))?;
                answers.push(self.accept(plan, n, session_id, q.round, frame)?);
            }
            session.absorb(round, queries, answers)?;
        }
        session.finish(session_id)
    }

    fn accept(&mut self, plan: &SessionPlan, database: usize, session_id: u64, round: u32, frame: Frame) -> Result<Answer> {
        match frame.frame_type {
            FrameType::Answer => {}
            FrameType::Error => {
                let (code, message) = frame.error_parts()?;
                return Err(Error::Remote {
                    database,
                    code,
                    message,
                });
            }
            other => {
                return Err(Error::Aborted(format!(
                    "database {database} replied with {other:?}"
                )))
            }
        }
        if frame.session_id != session_id || frame.round != round {
            return Err(Error::Aborted(format!(
                "database {database} answered session {} round {} instead of {session_id}/{round}",
                frame.session_id, frame.round
            )));
        }
        let symbols = unpack_symbols(&frame.payload, 1, plan.prime)
            .map_err(|e| Error::Aborted(format!("database {database} sent a bad answer: {e}")))?;
        let i = database - 1;
        self.meter.answer_symbols[i] += symbols.len();
        self.meter.answer_payload_bytes[i] += frame.payload.len();
        self.meter.frame_bytes_down[i] += frame.encoded_len();
        Ok(Answer {
            round,
            database,
            value: symbols[0],
        })
    }
}

fn abort(database: usize, e: Error) -> Error {
    match e {
        Error::Aborted(_) | Error::Remote { .. } => e,
        other => Error::Aborted(format!("database {database}: {other}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{seeded_rng, FieldPrime};
    use crate::params::ProtocolParams;
    use crate::randomness::CommonRandomness;
    use crate::store::MessageStore;

    struct DeadLink;

    impl DatabaseLink for DeadLink {
        fn send(&mut self, _: &Frame) -> Result<()> {
            Err(Error::Io(std::io::ErrorKind::ConnectionRefused.into()))
        }
        fn recv(&mut self) -> Result<Frame> {
            Err(Error::Io(std::io::ErrorKind::ConnectionRefused.into()))
        }
    }

    fn deployment(n: usize, l: usize) -> (SessionPlan, MessageStore, Vec<Arc<DatabaseNode>>) {
        let params = ProtocolParams::uniform(n, 2, l, FieldPrime::TWO).unwrap();
        let plan = SessionPlan::for_params(&params).unwrap();
        let store = MessageStore::random(&params, &mut seeded_rng(3));
        let s = CommonRandomness::sample(plan.randomness(), params.prime(), &mut seeded_rng(4));
        let nodes = (1..=n)
            .map(|i| {
                let node = DatabaseNode::new(i, n, store.clone()).unwrap();
                node.setup_session(9, s.clone()).unwrap();
                Arc::new(node)
            })
            .collect();
        (plan, store, nodes)
    }

    fn links(nodes: &[Arc<DatabaseNode>]) -> Vec<Box<dyn DatabaseLink>> {
        nodes
            .iter()
            .map(|n| Box::new(InProcessLink::new(n.clone())) as Box<dyn DatabaseLink>)
            .collect()
    }

    #[test]
    fn base_round_meters_one_symbol_per_database() {
        let (plan, store, nodes) = deployment(3, 2);
        let mut client = Client::new(links(&nodes));
        let coins = UserRandomness::sample(plan.coin_count(), plan.prime, &mut seeded_rng(5));
        let t = client
            .retrieve(&plan, RetrievalRequest::new(2, 2).unwrap(), coins, 9)
            .unwrap();
        assert_eq!(t.decoded, store.message(1));
        assert_eq!(t.ledger.per_database, vec![1, 1, 1]);
        assert_eq!(client.meter().answer_symbols, vec![1, 1, 1]);
        let served: Vec<u64> = nodes.iter().map(|n| n.ledger().symbols_served).collect();
        assert_eq!(served, vec![1, 1, 1]);
    }

    #[test]
    fn finite_plan_meters_residual_round() {
        let (plan, _, nodes) = deployment(3, 3);
        let mut client = Client::new(links(&nodes));
        let coins = UserRandomness::sample(plan.coin_count(), plan.prime, &mut seeded_rng(5));
        let t = client
            .retrieve(&plan, RetrievalRequest::new(1, 2).unwrap(), coins, 9)
            .unwrap();
        assert_eq!(t.ledger.per_database, vec![2, 2, 1]);
        assert_eq!(t.ledger.total, 5);
        assert_eq!(client.meter().total_answer_symbols(), 5);
    }

    #[test]
    fn dead_endpoint_aborts_without_output() {
        let (plan, _, nodes) = deployment(3, 2);
        let mut links = links(&nodes);
        links[1] = Box::new(DeadLink);
        let mut client = Client::new(links);
        let coins = UserRandomness::sample(plan.coin_count(), plan.prime, &mut seeded_rng(5));
        let err = client
            .retrieve(&plan, RetrievalRequest::new(1, 2).unwrap(), coins, 9)
            .unwrap_err();
        assert!(matches!(err, Error::Aborted(_)), "{err}");
    }

    #[test]
    fn unknown_session_surfaces_remote_error() {
        let (plan, _, nodes) = deployment(2, 1);
        let mut client = Client::new(links(&nodes));
        let coins = UserRandomness::sample(plan.coin_count(), plan.prime, &mut seeded_rng(5));
        let err = client
            .retrieve(&plan, RetrievalRequest::new(1, 2).unwrap(), coins, 10)
            .unwrap_err();
        assert!(matches!(err, Error::Remote { database: 1, .. }), "{err}");
    }
}
