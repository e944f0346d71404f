//! Capacity-achieving symmetric private information retrieval.
//!
//! `N` non-communicating databases replicate `K` messages over `F_p` and
//! share common randomness the user never sees. A user retrieves one message
//! so that no single database learns which one, while the user learns
//! nothing about the others, downloading `N / (N - 1)` symbols per message
//! symbol.
//!
//! - [`schemes`]: the base round, the finite-length and unequal-size
//!   planners, and session composition.
//! - [`analysis`]: exact-rational capacity and feasibility calculators.
//! - [`auditor`]: exhaustive enumeration of the joint distribution, checking
//!   user privacy, database privacy and zero error exactly.
//! - [`net`]: binary framing, database nodes, the client, TCP transport and
//!   an in-process simulator.

pub mod analysis;
pub mod auditor;
pub mod cli;
pub mod codec;
pub mod error;
pub mod field;
pub mod net;
pub mod params;
pub mod randomness;
pub mod schemes;
pub mod store;

pub use error::{Error, Result};
pub use field::{FieldPrime, Symbol};
pub use params::ProtocolParams;
pub use randomness::{CommonRandomness, UserRandomness};
pub use store::MessageStore;
