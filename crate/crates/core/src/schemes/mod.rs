//! The capacity-achieving constructions: the base round, the planners for
//! unequal and finite lengths, and session composition.

pub mod base;
pub mod plan;
pub mod session;

pub use base::{Answer, Query, RetrievalRequest, RoundShape};
pub use plan::{PlanKind, RoundPlan, SessionPlan, Window};
pub use session::{answer_round, run_session, ClientSession, DownloadLedger, Transcript};
