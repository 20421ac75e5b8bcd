//! Vertex-centric validation: a bulk-synchronous message-passing engine and
//! a schema validator built on it, with per-superstep tracing.

mod engine;
mod machine;
mod validate;

pub use engine::{run_pregel, BudgetExceeded, Edge, PregelGraph, Triplet};
pub use machine::{merge_msg, merge_msg_maps, Dep, Msg, MsgMap, Status};
pub use validate::{
    pregel_subset, pregel_validate, PregelError, PregelOptions, PregelOutcome, PregelSubset,
    SuperstepRecord,
};
