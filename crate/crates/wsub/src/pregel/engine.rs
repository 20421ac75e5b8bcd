//! Generic bulk-synchronous vertex-centric loop.
//!
//! Each superstep scans all triplets (source vertex, edge, target vertex)
//! for outgoing messages, merges them per destination with an associative
//! and commutative operator, and applies the vertex program to every vertex
//! that received something. The loop stops after the first scan that
//! produces no messages (that scan counts as a superstep) or errors out
//! when the budget is exceeded.

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::wgraph::EntityId;

/// A directed edge with a payload.
#[derive(Debug, Clone)]
pub struct Edge<ED> {
    pub src: EntityId,
    pub dst: EntityId,
    pub data: ED,
}

/// An edge together with both endpoint values, as seen by the send phase.
pub struct Triplet<'a, VD, ED> {
    pub src: EntityId,
    pub src_data: &'a VD,
    pub edge: &'a ED,
    pub dst: EntityId,
    pub dst_data: &'a VD,
}

/// Vertex map plus edge list; vertices referenced by edges must exist.
#[derive(Debug, Clone)]
pub struct PregelGraph<VD, ED> {
    pub vertices: BTreeMap<EntityId, VD>,
    pub edges: Vec<Edge<ED>>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("superstep budget exceeded after {supersteps} supersteps")]
pub struct BudgetExceeded {
    pub supersteps: usize,
}

/// Run the loop; returns the number of supersteps (send-phase scans).
///
/// `observe` is called after each superstep — and once with superstep 0
/// after the initial vertex-program pass — with the superstep number, the
/// raw message count, the merged per-destination messages, and the vertex
/// map as of that point.
pub fn run_pregel<VD, ED, A>(
    graph: &mut PregelGraph<VD, ED>,
    initial_msg: &A,
    max_supersteps: usize,
    vprog: impl Fn(EntityId, &VD, &A) -> VD + Sync,
    send: impl Fn(&Triplet<'_, VD, ED>) -> Vec<(EntityId, A)> + Sync,
    merge: impl Fn(A, A) -> A,
    mut observe: impl FnMut(usize, usize, &BTreeMap<EntityId, A>, &BTreeMap<EntityId, VD>),
) -> Result<usize, BudgetExceeded>
where
    VD: Send + Sync,
    ED: Sync,
    A: Send + Sync,
{
    // Initial pass: every vertex runs the program on the initial message.
    let updated: Vec<(EntityId, VD)> = graph
        .vertices
        .par_iter()
        .map(|(id, vd)| (*id, vprog(*id, vd, initial_msg)))
        .collect();
    for (id, vd) in updated {
        graph.vertices.insert(id, vd);
    }
    observe(0, 0, &BTreeMap::new(), &graph.vertices);

    let mut superstep = 0;
    loop {
        superstep += 1;
        // Send phase: rayon preserves input order in collect, so the
        // message list — and therefore the sequential merge below — is
        // deterministic (merge associativity/commutativity make any
        // reduction tree equivalent anyway).
        let sent: Vec<(EntityId, A)> = graph
            .edges
            .par_iter()
            .flat_map_iter(|e| {
                let triplet = Triplet {
                    src: e.src,
                    src_data: &graph.vertices[&e.src],
                    edge: &e.data,
                    dst: e.dst,
                    dst_data: &graph.vertices[&e.dst],
                };
                send(&triplet)
            })
            .collect();
        let raw_count = sent.len();
        if raw_count == 0 {
            observe(superstep, 0, &BTreeMap::new(), &graph.vertices);
            return Ok(superstep);
        }
        if superstep > max_supersteps {
            return Err(BudgetExceeded {
                supersteps: superstep,
            });
        }
        let mut delivered: BTreeMap<EntityId, A> = BTreeMap::new();
        for (dst, msg) in sent {
            match delivered.remove(&dst) {
                Some(prev) => {
                    delivered.insert(dst, merge(prev, msg));
                }
                None => {
                    delivered.insert(dst, msg);
                }
            }
        }
        let updated: Vec<(EntityId, VD)> = delivered
            .par_iter()
            .map(|(id, msg)| (*id, vprog(*id, &graph.vertices[id], msg)))
            .collect();
        for (id, vd) in updated {
            graph.vertices.insert(id, vd);
        }
        observe(superstep, raw_count, &delivered, &graph.vertices);
    }
}
