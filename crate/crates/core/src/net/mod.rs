//! Wire protocol, database nodes, the user client and the in-process
//! simulator.

pub mod client;
pub mod frame;
pub mod node;
pub mod sim;
pub mod tcp;

pub use crate::schemes::DownloadLedger;
pub use client::{Client, DatabaseLink, InProcessLink, WireMeter};
pub use frame::{ErrorCode, Frame, FrameError, FrameType};
pub use node::{setup_frame, DatabaseNode, NodeLedger};
pub use sim::{deal, derive_seed, session_coins, session_index, simulate, SimulationBatch};
pub use tcp::{spawn_server, TcpLink};
