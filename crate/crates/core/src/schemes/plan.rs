//! Session planners: how a whole retrieval decomposes into base rounds.
//!
//! A plan depends only on public parameters, never on the desired index, so
//! databases can derive the same plan the user follows.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{FieldPrime, Symbol};
use crate::params::ProtocolParams;
use crate::schemes::base::RoundShape;
use crate::store::MessageStore;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanKind {
    /// A single round with every message exactly `N - 1` symbols.
    Base,
    /// Equal lengths of any size: full rounds plus one residual round.
    Finite,
    /// Unequal lengths in whole blocks of `N - 1` symbols.
    Region,
}

/// The real symbols of one message that a round carries. Positions of the
/// round's block beyond `len` are zero padding.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Window {
    pub start: usize,
    pub len: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RoundPlan {
    /// Databases `1..=participants` take part in this round.
    pub participants: usize,
    /// Sub-message group this round belongs to (1-based).
    pub group: usize,
    /// One window per message, in the caller's message order.
    pub windows: Vec<Window>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SessionPlan {
    pub kind: PlanKind,
    pub databases: usize,
    pub prime: FieldPrime,
    pub lengths: Vec<usize>,
    /// Message positions sorted by ascending length (stable on ties).
    pub order: Vec<usize>,
    pub rounds: Vec<RoundPlan>,
}

impl SessionPlan {
    /// One round, every message exactly `N - 1` symbols.
    pub fn base(params: &ProtocolParams) -> Result<Self> {
        params.require_symmetric()?;
        let block = params.databases() - 1;
        if params.lengths().iter().any(|&l| l != block) {
            return Err(Error::InvalidParams(format!(
                "base scheme needs every message to be N - 1 = {block} symbols"
            )));
        }
        let mut plan = SessionPlan::finite(params)?;
        plan.kind = PlanKind::Base;
        Ok(plan)
    }

    /// Equal length `L = G (N - 1) + r`: `G` rounds over all databases, then
    /// if `r > 0` one round over databases `1..=r+1`.
    pub fn finite(params: &ProtocolParams) -> Result<Self> {
        params.require_symmetric()?;
        let length = params.uniform_length().ok_or_else(|| {
            Error::InvalidParams("finite-length plan needs equal message lengths".into())
        })?;
        let n = params.databases();
        let k = params.messages();
        let full = length / (n - 1);
        let residual = length % (n - 1);

        let mut rounds: Vec<RoundPlan> = (0..full)
            .map(|g| RoundPlan {
                participants: n,
                group: 1,
                windows: vec![
                    Window {
                        start: g * (n - 1),
                        len: n - 1
                    };
                    k
                ],
            })
            .collect();
        if residual > 0 {
            rounds.push(RoundPlan {
                participants: residual + 1,
                group: 2,
                windows: vec![
                    Window {
                        start: full * (n - 1),
                        len: residual
                    };
                    k
                ],
            });
        }
        Ok(SessionPlan {
            kind: PlanKind::Finite,
            databases: n,
            prime: params.prime(),
            lengths: params.lengths().to_vec(),
            order: (0..k).collect(),
            rounds,
        })
    }

    /// Unequal lengths `l_k (N - 1)`. With lengths sorted as
    /// `l_(1) <= .. <= l_(K)`, group `i` runs `l_(i) - l_(i-1)` base rounds;
    /// messages shorter than `l_(i)` are zero-padded in that group.
    pub fn region(params: &ProtocolParams) -> Result<Self> {
        params.require_symmetric()?;
        let n = params.databases();
        let block = n - 1;
        if let Some(k) = params.lengths().iter().position(|l| l % block != 0) {
            return Err(Error::InvalidParams(format!(
                "region plan needs lengths in whole blocks of N - 1 = {block} symbols (message {} has {})",
                k + 1,
                params.lengths()[k]
            )));
        }
        let units: Vec<usize> = params.lengths().iter().map(|l| l / block).collect();
        let mut order: Vec<usize> = (0..units.len()).collect();
        order.sort_by_key(|&k| units[k]);

        let mut rounds = Vec::new();
        let mut previous = 0;
        for (group, &k) in order.iter().enumerate() {
            let level = units[k];
            for unit in previous..level {
                let windows = units
                    .iter()
                    .map(|&u| {
                        let start = (unit * block).min(u * block);
                        let len = if u > unit { block } else { 0 };
                        Window { start, len }
                    })
                    .collect();
                rounds.push(RoundPlan {
                    participants: n,
                    group: group + 1,
                    windows,
                });
            }
            previous = level;
        }
        Ok(SessionPlan {
            kind: PlanKind::Region,
            databases: n,
            prime: params.prime(),
            lengths: params.lengths().to_vec(),
            order,
            rounds,
        })
    }

    /// Finite plan for equal lengths, region plan otherwise.
    pub fn for_params(params: &ProtocolParams) -> Result<Self> {
        if params.uniform_length().is_some() {
            SessionPlan::finite(params)
        } else {
            SessionPlan::region(params)
        }
    }

    pub fn messages(&self) -> usize {
        self.lengths.len()
    }

    pub fn round_shape(&self, round: usize) -> RoundShape {
        RoundShape {
            databases: self.rounds[round].participants,
            messages: self.messages(),
            prime: self.prime,
        }
    }

    /// Total answer symbols `D`: one per participant per round.
    pub fn download(&self) -> usize {
        self.rounds.iter().map(|r| r.participants).sum()
    }

    pub fn per_database_download(&self) -> Vec<usize> {
        let mut out = vec![0; self.databases];
        for r in &self.rounds {
            for slot in &mut out[..r.participants] {
                *slot += 1;
            }
        }
        out
    }

    /// Common-randomness symbols: one per round.
    pub fn randomness(&self) -> usize {
        self.rounds.len()
    }

    /// User coins over the whole session.
    pub fn coin_count(&self) -> usize {
        (0..self.rounds.len()).map(|r| self.round_shape(r).coins()).sum()
    }

    /// Offset of each round's coins within the session's coin vector.
    pub fn coin_offsets(&self) -> Vec<usize> {
        let mut at = 0;
        (0..self.rounds.len())
            .map(|r| {
                let here = at;
                at += self.round_shape(r).coins();
                here
            })
            .collect()
    }

    /// Query symbols uploaded over the session.
    pub fn upload(&self) -> usize {
        (0..self.rounds.len())
            .map(|r| self.round_shape(r).coins() * self.rounds[r].participants)
            .sum()
    }

    /// Concatenate every message's window for `round`, zero-padded to the
    /// round's block size.
    pub fn gather_block(&self, round: usize, store: &MessageStore, out: &mut Vec<Symbol>) {
        let plan = &self.rounds[round];
        let block = plan.participants - 1;
        out.clear();
        for (k, w) in plan.windows.iter().enumerate() {
            for i in 0..block {
                out.push(if i < w.len { store.symbol_or_zero(k, w.start + i) } else { 0 });
            }
        }
    }

    pub fn check_store(&self, store: &MessageStore) -> Result<()> {
        if store.prime() != self.prime || store.lengths() != self.lengths {
            return Err(Error::InvalidParams(format!(
                "store shape (p = {}, lengths {:?}) does not match plan (p = {}, lengths {:?})",
                store.prime(),
                store.lengths(),
                self.prime,
                self.lengths
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }
}
