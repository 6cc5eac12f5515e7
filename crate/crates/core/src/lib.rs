//! Slot-synchronous simulator for routing and XOR network coding on a ring
//! of `n` players around one game server.
//!
//! Every decodability claim goes through an exact GF(2) span, every slot is
//! executed under the broadcast, half-duplex and collision rules, and every
//! trace can be re-checked by an independent replay.
//!
//! ```
//! use cyclenc::{run_protocol, Objective, Protocol, RunOptions};
//!
//! let run = run_protocol(Protocol::NcGaming, 5, Objective::Gaming, RunOptions::default()).unwrap();
//! assert_eq!((run.t, run.l), (7, 12));
//! ```

pub mod analysis;
pub mod cli;
pub mod engine;
pub mod packet;
pub mod protocols;
pub mod topology;
pub mod trace;
pub mod validator;

pub use analysis::{
    arrival_order, bounds_for, check_run, comparison_table, nc_gain, Bounds, MessageBound, TableRow,
};
pub use engine::{objective_met, run, run_protocol, EngineError, Objective, RunOptions, RunResult};
pub use packet::{CodedPacket, KnowledgeBase};
pub use protocols::{Protocol, Rule, Schedule, TransmitIntent};
pub use topology::{
    build_cycle, check_partition, multicast_partition, partition, CycleTopology, PhasePartition,
    ProtocolParams,
};
pub use trace::{OutcomeKind, SlotEvent};
pub use validator::{validate_trace, Claim, Violation, ViolationKind};
