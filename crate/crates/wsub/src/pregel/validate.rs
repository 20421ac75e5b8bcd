//! Schema validation as a vertex program.
//!
//! The schema is compiled once: top-level references are resolved away, each
//! label's shapes are flattened into constraint occurrences over a bag
//! expression, and every occurrence records its target label and whether an
//! entity value could possibly satisfy that target. Validation then runs as
//! message rounds: a vertex asked to validate a label checks what it can
//! locally, goes `Pending` when remote entity checks are needed, registers
//! dependencies (`WaitFor`), and completes with an exact neighborhood match
//! once every dependency has reported back (`Checked`). Statuses left
//! `Pending`/`WaitingFor` when messages run dry are resolved by a final
//! neighborhood check that treats unreported dependencies as failed.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::rbe::Rbe;
use crate::wgraph::{EntityId, Statement, Value, WikibaseGraph};
use crate::wshex::ast::{
    NodeConstraint, QualifierSpec, Shape, ShapeExpr, ShapeLabel, TripleExpr, ValueCheck,
    WShExSchema,
};
use crate::wshex::eval::{assignment_matches, compile_te, Evaluator, Neighs};

use super::engine::{run_pregel, Edge, PregelGraph, Triplet};
use super::machine::{merge_msg_maps, Dep, Msg, MsgMap, Status};

/// Internal label standing in for `.` (any value) targets, so that remote
/// checks of such targets have something to report a status for.
const ANY_LABEL: &str = "__any__";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PregelError {
    #[error("start label {0} is not declared in the schema")]
    UnknownStart(ShapeLabel),
    #[error("shape label {0} is reserved for internal use")]
    ReservedLabel(ShapeLabel),
    #[error(
        "qualifier constraint on {property} references {label}, which is not built \
         from value conditions alone"
    )]
    QualifierRef {
        property: EntityId,
        label: ShapeLabel,
    },
    #[error("superstep budget exceeded after {supersteps} supersteps")]
    Budget { supersteps: usize },
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PregelOptions {
    /// Maximum number of supersteps before the run is aborted; defaults to
    /// `|vertices| * |labels| + 2`.
    pub max_supersteps: Option<usize>,
    /// Record the merged per-(vertex, label) messages of every superstep.
    pub capture_trace: bool,
}

/// What one superstep delivered and left behind.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuperstepRecord {
    pub superstep: usize,
    /// Raw messages produced by the send scan (before merging).
    pub messages_sent: usize,
    /// Vertices that received at least one message.
    pub activated: usize,
    /// Merged messages, flattened per (vertex, label); captured only when
    /// [`PregelOptions::capture_trace`] is set.
    pub delivered: BTreeMap<(EntityId, ShapeLabel), Msg>,
    /// How many (vertex, label) statuses of each kind exist after the step.
    pub status_counts: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PregelOutcome {
    /// Final status per (vertex, label); pairs never evaluated are absent.
    pub statuses: BTreeMap<(EntityId, ShapeLabel), Status>,
    /// Number of send scans, counting the final one that found no messages.
    pub supersteps: usize,
    pub trace: Vec<SuperstepRecord>,
}

impl PregelOutcome {
    /// The (vertex, label) pairs that validated.
    pub fn ok_pairs(&self) -> BTreeSet<(EntityId, ShapeLabel)> {
        self.statuses
            .iter()
            .filter(|(_, s)| matches!(s, Status::Ok))
            .map(|(k, _)| k.clone())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PregelSubset {
    /// Nodes that validated some label.
    pub ok_nodes: BTreeSet<EntityId>,
    /// The statements consumed by validated (node, label) pairs.
    pub graph: WikibaseGraph,
}

/// One flattened triple-constraint occurrence of a compiled shape.
struct Occ {
    property: EntityId,
    /// The label a value of this occurrence must satisfy.
    target: ShapeLabel,
    /// Whether any entity value could satisfy the target; when false the
    /// occurrence can only be filled by data values.
    entity_possible: bool,
    qualifiers: QualifierSpec,
}

struct CompiledShape {
    closed: bool,
    preds: BTreeSet<EntityId>,
    te: TripleExpr,
    occs: Vec<Occ>,
    full_rbe: Rbe<usize>,
}

struct CompiledLabel {
    /// Value conditions conjoined with the shapes.
    conds: Vec<NodeConstraint>,
    shapes: Vec<CompiledShape>,
    /// Whether any occurrence could require a remote entity check.
    has_entity_occs: bool,
}

struct Engine {
    compiled: BTreeMap<ShapeLabel, CompiledLabel>,
    /// (property, target) pairs per label, for the dependency scan.
    tcs: BTreeMap<ShapeLabel, Vec<(EntityId, ShapeLabel)>>,
    /// The schema with top-level references resolved away, used for exact
    /// local evaluation of data values and reference-free labels.
    eval_schema: WShExSchema,
}

/// Neighborhood source that answers every lookup with no statements. Exact
/// for data values, and safe for entity values reached through occurrences no
/// entity can satisfy (those evaluate to false regardless of neighborhoods).
struct NoNeighs;

impl Neighs for NoNeighs {
    fn neighs(&self, _: EntityId) -> &[Statement] {
        &[]
    }
}

/// Whether any entity value could satisfy the expression. Syntactic and
/// exact on resolved expressions: datatype conditions and value sets without
/// entity members reject every entity, conjunctions need both sides.
fn entity_possible(expr: &ShapeExpr) -> bool {
    match expr {
        ShapeExpr::Cond(NodeConstraint::AnyValue) => true,
        ShapeExpr::Cond(NodeConstraint::ValueSet(vs)) => {
            vs.iter().any(|v| matches!(v, Value::Entity(_)))
        }
        ShapeExpr::Cond(NodeConstraint::Datatype(_)) => false,
        ShapeExpr::Shape(_) => true,
        ShapeExpr::And(a, b) => entity_possible(a) && entity_possible(b),
        // Resolved expressions have no top-level references left.
        ShapeExpr::Ref(_) => true,
    }
}

/// Resolve top-level references (safe: the schema rejects shape-free cycles).
fn resolve_label(
    schema: &WShExSchema,
    l: &ShapeLabel,
    memo: &mut BTreeMap<ShapeLabel, ShapeExpr>,
) -> ShapeExpr {
    if let Some(e) = memo.get(l) {
        return e.clone();
    }
    let e = resolve_expr(schema, schema.delta(l), memo);
    memo.insert(l.clone(), e.clone());
    e
}

fn resolve_expr(
    schema: &WShExSchema,
    expr: &ShapeExpr,
    memo: &mut BTreeMap<ShapeLabel, ShapeExpr>,
) -> ShapeExpr {
    match expr {
        ShapeExpr::Cond(_) | ShapeExpr::Shape(_) => expr.clone(),
        ShapeExpr::And(a, b) => {
            ShapeExpr::and(resolve_expr(schema, a, memo), resolve_expr(schema, b, memo))
        }
        ShapeExpr::Ref(l) => resolve_label(schema, l, memo),
    }
}

fn collect_parts<'a>(
    expr: &'a ShapeExpr,
    conds: &mut Vec<NodeConstraint>,
    shapes: &mut Vec<&'a Shape>,
) {
    match expr {
        ShapeExpr::Cond(c) => conds.push(c.clone()),
        ShapeExpr::And(a, b) => {
            collect_parts(a, conds, shapes);
            collect_parts(b, conds, shapes);
        }
        ShapeExpr::Shape(s) => shapes.push(s),
        ShapeExpr::Ref(l) => unreachable!("unresolved top-level reference {l}"),
    }
}

impl Engine {
    fn compile(schema: &WShExSchema, start: &ShapeLabel) -> Result<Engine, PregelError> {
        let any_label = ShapeLabel::new(ANY_LABEL);
        if schema.contains(&any_label) {
            return Err(PregelError::ReservedLabel(any_label));
        }
        if !schema.contains(start) {
            return Err(PregelError::UnknownStart(start.clone()));
        }
        let mut memo = BTreeMap::new();
        for l in schema.labels() {
            resolve_label(schema, l, &mut memo);
        }
        let needs_any = memo.values().any(|e| {
            let mut conds = Vec::new();
            let mut shapes = Vec::new();
            collect_parts(e, &mut conds, &mut shapes);
            shapes.iter().any(|s| {
                s.expr
                    .constraints()
                    .iter()
                    .any(|tc| matches!(tc.value, ValueCheck::Any))
            })
        });
        let mut decls: Vec<(ShapeLabel, ShapeExpr)> = schema
            .labels()
            .iter()
            .map(|l| (l.clone(), memo[l].clone()))
            .collect();
        if needs_any {
            decls.push((any_label.clone(), ShapeExpr::Cond(NodeConstraint::AnyValue)));
        }
        let eval_schema = WShExSchema::new(decls, None, BTreeMap::new())
            .expect("resolving references preserves schema well-formedness");

        let mut compiled = BTreeMap::new();
        let mut tcs = BTreeMap::new();
        for l in eval_schema.labels() {
            let expr = eval_schema.delta(l);
            let mut conds = Vec::new();
            let mut shape_srcs = Vec::new();
            collect_parts(expr, &mut conds, &mut shape_srcs);
            let mut shapes = Vec::new();
            let mut pairs = Vec::new();
            for s in shape_srcs {
                let mut flat = Vec::new();
                let full_rbe = compile_te(&s.expr, &mut flat);
                let mut occs = Vec::new();
                for tc in flat {
                    for (p, vc) in tc.qualifiers.spec.constraints() {
                        if let ValueCheck::Ref(lq) = vc {
                            if !eval_schema.delta(lq).is_cond_only() {
                                return Err(PregelError::QualifierRef {
                                    property: *p,
                                    label: lq.clone(),
                                });
                            }
                        }
                    }
                    let (target, possible) = match &tc.value {
                        ValueCheck::Any => (any_label.clone(), true),
                        ValueCheck::Ref(t) => (t.clone(), entity_possible(eval_schema.delta(t))),
                    };
                    pairs.push((tc.property, target.clone()));
                    occs.push(Occ {
                        property: tc.property,
                        target,
                        entity_possible: possible,
                        qualifiers: tc.qualifiers.clone(),
                    });
                }
                shapes.push(CompiledShape {
                    closed: s.closed,
                    preds: s.expr.preds(),
                    te: s.expr.clone(),
                    occs,
                    full_rbe,
                });
            }
            let has_entity_occs = shapes
                .iter()
                .any(|cs| cs.occs.iter().any(|o| o.entity_possible));
            compiled.insert(
                l.clone(),
                CompiledLabel {
                    conds,
                    shapes,
                    has_entity_occs,
                },
            );
            tcs.insert(l.clone(), pairs);
        }
        Ok(Engine {
            compiled,
            tcs,
            eval_schema,
        })
    }

    fn n_labels(&self) -> usize {
        self.compiled.len()
    }
}

/// Per-vertex state: the statuses assigned so far (absent means undefined).
#[derive(Debug, Clone, Default)]
struct VertexState {
    statuses: BTreeMap<ShapeLabel, Status>,
}

impl VertexState {
    fn status(&self, l: &ShapeLabel) -> &Status {
        static UNDEFINED: Status = Status::Undefined;
        self.statuses.get(l).unwrap_or(&UNDEFINED)
    }

    fn set(&mut self, l: &ShapeLabel, s: Status) {
        self.statuses.insert(l.clone(), s);
    }
}

enum Local {
    Ok,
    Failed(String),
    Pending(BTreeSet<ShapeLabel>),
}

/// How one occurrence appears in the local satisfiability expression.
enum OccForm {
    /// No entity value can fill it: skipped.
    Epsilon,
    /// Fillable by an entity edge or by a data statement present here.
    Optional,
    /// Only an entity edge can fill it.
    Required,
}

fn local_rbe(rbe: &Rbe<usize>, form: &impl Fn(usize) -> OccForm) -> Rbe<usize> {
    match rbe {
        Rbe::Empty => Rbe::Empty,
        Rbe::Symbol(i) => match form(*i) {
            OccForm::Epsilon => Rbe::Empty,
            OccForm::Optional => Rbe::or(Rbe::Symbol(*i), Rbe::Empty),
            OccForm::Required => Rbe::Symbol(*i),
        },
        Rbe::Or(a, b) => Rbe::or(local_rbe(a, form), local_rbe(b, form)),
        Rbe::Seq(a, b) => Rbe::seq(local_rbe(a, form), local_rbe(b, form)),
        Rbe::Star(a) => Rbe::star(local_rbe(a, form)),
    }
}

#[derive(Clone, Copy)]
struct Ctx<'a> {
    engine: &'a Engine,
    g: &'a WikibaseGraph,
}

impl Ctx<'_> {
    fn no_neighs_eval(&self) -> Evaluator<'_, NoNeighs> {
        static NO_NEIGHS: NoNeighs = NoNeighs;
        Evaluator {
            schema: &self.engine.eval_schema,
            tau: None,
            src: &NO_NEIGHS,
        }
    }

    /// Whether a data value satisfies the occurrence's target label.
    fn data_value_ok(&self, v: &Value, target: &ShapeLabel) -> bool {
        debug_assert!(matches!(v, Value::Data(_)));
        self.no_neighs_eval()
            .eval_se(v, self.engine.eval_schema.delta(target))
    }

    fn qualifiers_ok(&self, st: &Statement, occ: &Occ) -> bool {
        self.no_neighs_eval()
            .check_qualifiers(&st.qualifiers, &occ.qualifiers)
    }

    /// Whether a data-valued statement can fill the occurrence.
    fn data_candidate(&self, st: &Statement, occ: &Occ) -> bool {
        occ.property == st.property
            && matches!(st.value, Value::Data(_))
            && self.qualifiers_ok(st, occ)
            && self.data_value_ok(&st.value, &occ.target)
    }

    /// Whether an entity-valued statement could fill the occurrence, leaving
    /// the remote check of the value to the dependency machinery.
    fn entity_candidate(&self, st: &Statement, occ: &Occ) -> bool {
        occ.property == st.property && occ.entity_possible && self.qualifiers_ok(st, occ)
    }

    /// Exact evaluation for labels without entity occurrences: value
    /// references are expanded as if values had empty neighborhoods, which is
    /// exact for data values and irrelevant for entity values here (all
    /// targets reject every entity).
    fn eval_exact(&self, v: EntityId, cl: &CompiledLabel) -> bool {
        let ev = self.no_neighs_eval();
        cl.shapes
            .iter()
            .all(|cs| ev.eval_te_on(&cs.te, self.g.neighs(v), cs.closed))
    }

    /// What the vertex can conclude about the label from its own statements.
    fn check_local(&self, v: EntityId, label: &ShapeLabel) -> Local {
        let cl = &self.engine.compiled[label];
        for c in &cl.conds {
            if !c.eval(&Value::Entity(v)) {
                return Local::Failed(format!("{v} fails the value condition of {label}"));
            }
        }
        if !cl.has_entity_occs {
            return if self.eval_exact(v, cl) {
                Local::Ok
            } else {
                Local::Failed(format!("{v} does not satisfy {label}"))
            };
        }
        let stmts = self.g.neighs(v);
        let mut pending: BTreeSet<ShapeLabel> = BTreeSet::new();
        for cs in &cl.shapes {
            let selected: Vec<&Statement> = if cs.closed {
                stmts.iter().collect()
            } else {
                stmts
                    .iter()
                    .filter(|st| cs.preds.contains(&st.property))
                    .collect()
            };
            let mut entity_items: Vec<&Statement> = Vec::new();
            let mut data_fillable = vec![false; cs.occs.len()];
            for st in &selected {
                if cs.closed && !cs.preds.contains(&st.property) {
                    return Local::Failed(format!(
                        "{v}: closed shape {label} does not mention {}",
                        st.property
                    ));
                }
                match &st.value {
                    Value::Data(_) => {
                        let mut consumable = false;
                        for (i, occ) in cs.occs.iter().enumerate() {
                            if self.data_candidate(st, occ) {
                                consumable = true;
                                data_fillable[i] = true;
                            }
                        }
                        if !consumable {
                            return Local::Failed(format!(
                                "{v}: no constraint of {label} accepts the {} statement",
                                st.property
                            ));
                        }
                    }
                    Value::Entity(_) => {
                        if !cs.occs.iter().any(|occ| self.entity_candidate(st, occ)) {
                            return Local::Failed(format!(
                                "{v}: no constraint of {label} accepts the {} statement",
                                st.property
                            ));
                        }
                        entity_items.push(st);
                    }
                }
            }
            // Could the entity edges fill the required occurrences, assuming
            // every remote check succeeds? Occurrences no entity satisfies
            // are skipped; occurrences a present data statement can fill
            // become optional.
            let possibly = local_rbe(&cs.full_rbe, &|i| {
                if !cs.occs[i].entity_possible {
                    OccForm::Epsilon
                } else if data_fillable[i] {
                    OccForm::Optional
                } else {
                    OccForm::Required
                }
            });
            if !assignment_matches(&entity_items, cs.occs.len(), &possibly, |st, i| {
                self.entity_candidate(st, &cs.occs[i])
            }) {
                return Local::Failed(format!(
                    "{v}: statements cannot satisfy the constraints of {label}"
                ));
            }
            for occ in &cs.occs {
                if occ.entity_possible
                    && entity_items.iter().any(|st| self.entity_candidate(st, occ))
                {
                    pending.insert(occ.target.clone());
                }
            }
        }
        if pending.is_empty() {
            // No remote checks can arise: the neighborhood holds no entity
            // edge any occurrence accepts, so the full match is local.
            return match self.check_neighs(v, label, &BTreeSet::new()) {
                Ok(()) => Local::Ok,
                Err(e) => Local::Failed(e),
            };
        }
        Local::Pending(pending)
    }

    /// Exact neighborhood match: every selected statement must fill an
    /// occurrence, entity values only through dependencies reported Ok.
    fn check_neighs(
        &self,
        v: EntityId,
        label: &ShapeLabel,
        oks: &BTreeSet<Dep>,
    ) -> Result<(), String> {
        let cl = &self.engine.compiled[label];
        for c in &cl.conds {
            if !c.eval(&Value::Entity(v)) {
                return Err(format!("{v} fails the value condition of {label}"));
            }
        }
        if !cl.has_entity_occs {
            return if self.eval_exact(v, cl) {
                Ok(())
            } else {
                Err(format!("{v} does not satisfy {label}"))
            };
        }
        let stmts = self.g.neighs(v);
        for cs in &cl.shapes {
            let selected: Vec<&Statement> = if cs.closed {
                stmts.iter().collect()
            } else {
                stmts
                    .iter()
                    .filter(|st| cs.preds.contains(&st.property))
                    .collect()
            };
            let ok = assignment_matches(&selected, cs.occs.len(), &cs.full_rbe, |st, i| {
                let occ = &cs.occs[i];
                occ.property == st.property
                    && self.qualifiers_ok(st, occ)
                    && match &st.value {
                        Value::Data(_) => self.data_value_ok(&st.value, &occ.target),
                        Value::Entity(e) => {
                            oks.contains(&Dep::new(*e, st.property, occ.target.clone()))
                        }
                    }
            });
            if !ok {
                return Err(format!(
                    "{v}: neighborhood does not satisfy the constraints of {label}"
                ));
            }
        }
        Ok(())
    }

    /// Validate a label at a vertex, recursively giving the labels it refers
    /// to a local verdict as well (so condition-only targets resolve without
    /// extra rounds). The recursion stops at any label already assigned.
    fn run_validate(&self, v: EntityId, label: &ShapeLabel, state: &mut VertexState) {
        if !matches!(state.status(label), Status::Undefined) {
            return;
        }
        match self.check_local(v, label) {
            Local::Ok => state.set(label, Status::Ok),
            Local::Failed(e) => state.set(label, Status::Failed(e)),
            Local::Pending(targets) => {
                state.set(label, Status::Pending);
                for t in targets {
                    self.run_validate(v, &t, state);
                }
            }
        }
    }

    fn vprog(&self, v: EntityId, state: &VertexState, msgs: &MsgMap) -> VertexState {
        let mut st = state.clone();
        for (label, msg) in msgs {
            let parts = msg.clone().into_parts();
            if parts.validate {
                self.run_validate(v, label, &mut st);
            }
            if !parts.ds.is_empty() {
                match st.status(label).clone() {
                    Status::Pending => st.set(
                        label,
                        Status::WaitingFor {
                            ds: parts.ds.clone(),
                            oks: BTreeSet::new(),
                            fs: BTreeSet::new(),
                        },
                    ),
                    Status::WaitingFor { mut ds, oks, fs } => {
                        ds.extend(parts.ds.iter().cloned());
                        st.set(label, Status::WaitingFor { ds, oks, fs });
                    }
                    _ => {}
                }
            }
            if !parts.oks.is_empty() || !parts.fs.is_empty() {
                if let Status::WaitingFor {
                    ds,
                    mut oks,
                    mut fs,
                } = st.status(label).clone()
                {
                    oks.extend(parts.oks.iter().cloned());
                    fs.extend(parts.fs.iter().cloned());
                    if ds.iter().all(|d| oks.contains(d) || fs.contains(d)) {
                        match self.check_neighs(v, label, &oks) {
                            Ok(()) => st.set(label, Status::Ok),
                            Err(e) => st.set(label, Status::Failed(e)),
                        }
                    } else {
                        st.set(label, Status::WaitingFor { ds, oks, fs });
                    }
                }
            }
        }
        st
    }

    fn send(&self, t: &Triplet<'_, VertexState, &Statement>) -> Vec<(EntityId, MsgMap)> {
        let st: &Statement = t.edge;
        let mut out = Vec::new();
        for (label, status) in &t.src_data.statuses {
            match status {
                Status::Pending => {
                    let pairs = self
                        .engine
                        .tcs
                        .get(label)
                        .map(|v| v.as_slice())
                        .unwrap_or(&[]);
                    for (p, target) in pairs {
                        if *p == st.property {
                            let dep = Dep::new(t.dst, *p, target.clone());
                            out.push((
                                t.src,
                                MsgMap::from([(label.clone(), Msg::WaitFor([dep].into()))]),
                            ));
                            out.push((t.dst, MsgMap::from([(target.clone(), Msg::Validate)])));
                        }
                    }
                }
                Status::WaitingFor { ds, oks, fs } => {
                    for dep in ds {
                        if dep.node != t.dst || oks.contains(dep) || fs.contains(dep) {
                            continue;
                        }
                        let checked = match t.dst_data.status(&dep.label) {
                            Status::Ok => Msg::Checked {
                                oks: [dep.clone()].into(),
                                fs: BTreeSet::new(),
                            },
                            Status::Failed(_) => Msg::Checked {
                                oks: BTreeSet::new(),
                                fs: [dep.clone()].into(),
                            },
                            _ => continue,
                        };
                        out.push((t.src, MsgMap::from([(label.clone(), checked)])));
                    }
                }
                _ => {}
            }
        }
        out
    }

    /// Resolve statuses still open after the message rounds: dependencies
    /// that never reported count as failed.
    fn check_remaining(&self, graph: &mut PregelGraph<VertexState, &Statement>) {
        let updates: Vec<(EntityId, ShapeLabel, Status)> = graph
            .vertices
            .iter()
            .flat_map(|(v, state)| {
                state.statuses.iter().filter_map(|(label, status)| {
                    let oks = match status {
                        Status::Pending => BTreeSet::new(),
                        Status::WaitingFor { oks, .. } => oks.clone(),
                        _ => return None,
                    };
                    let new = match self.check_neighs(*v, label, &oks) {
                        Ok(()) => Status::Ok,
                        Err(e) => Status::Failed(e),
                    };
                    Some((*v, label.clone(), new))
                })
            })
            .collect();
        for (v, label, status) in updates {
            graph
                .vertices
                .get_mut(&v)
                .expect("status updates refer to existing vertices")
                .set(&label, status);
        }
    }
}

fn run(
    engine: &Engine,
    g: &WikibaseGraph,
    start: &ShapeLabel,
    opts: &PregelOptions,
) -> Result<PregelOutcome, PregelError> {
    let ctx = Ctx { engine, g };
    let mut pgraph: PregelGraph<VertexState, &Statement> = PregelGraph {
        vertices: g
            .entity_nodes()
            .iter()
            .map(|e| (*e, VertexState::default()))
            .collect(),
        edges: g
            .statements()
            .iter()
            .filter_map(|st| match &st.value {
                Value::Entity(e) => Some(Edge {
                    src: st.subject,
                    dst: *e,
                    data: st,
                }),
                Value::Data(_) => None,
            })
            .collect(),
    };
    let budget = opts
        .max_supersteps
        .unwrap_or_else(|| pgraph.vertices.len() * engine.n_labels() + 2);
    let initial: MsgMap = [(start.clone(), Msg::Validate)].into();
    let capture = opts.capture_trace;
    let mut trace: Vec<SuperstepRecord> = Vec::new();
    let result = run_pregel(
        &mut pgraph,
        &initial,
        budget,
        |v, state, msgs| ctx.vprog(v, state, msgs),
        |t| ctx.send(t),
        merge_msg_maps,
        |superstep, sent, delivered, vertices| {
            let mut record = SuperstepRecord {
                superstep,
                messages_sent: sent,
                activated: delivered.len(),
                delivered: BTreeMap::new(),
                status_counts: BTreeMap::new(),
            };
            if capture {
                for (vid, mm) in delivered {
                    for (l, m) in mm {
                        record.delivered.insert((*vid, l.clone()), m.clone());
                    }
                }
            }
            for state in vertices.values() {
                for s in state.statuses.values() {
                    *record
                        .status_counts
                        .entry(s.kind().to_string())
                        .or_insert(0) += 1;
                }
            }
            trace.push(record);
        },
    );
    let supersteps = result.map_err(|e| PregelError::Budget {
        supersteps: e.supersteps,
    })?;
    ctx.check_remaining(&mut pgraph);
    let mut statuses = BTreeMap::new();
    for (v, state) in &pgraph.vertices {
        for (l, s) in &state.statuses {
            if l.as_str() != ANY_LABEL {
                statuses.insert((*v, l.clone()), s.clone());
            }
        }
    }
    Ok(PregelOutcome {
        statuses,
        supersteps,
        trace,
    })
}

/// Validate every node of the graph against the schema, starting from the
/// given label (which is broadcast to all vertices in the first round).
pub fn pregel_validate(
    g: &WikibaseGraph,
    schema: &WShExSchema,
    start: &ShapeLabel,
    opts: &PregelOptions,
) -> Result<PregelOutcome, PregelError> {
    let engine = Engine::compile(schema, start)?;
    run(&engine, g, start, opts)
}

/// Validate and project: every (node, label) pair that validated contributes
/// the statements its label's shapes select (all of them for closed shapes,
/// the constrained properties for open ones).
pub fn pregel_subset(
    g: &WikibaseGraph,
    schema: &WShExSchema,
    start: &ShapeLabel,
    opts: &PregelOptions,
) -> Result<(PregelSubset, PregelOutcome), PregelError> {
    let engine = Engine::compile(schema, start)?;
    let outcome = run(&engine, g, start, opts)?;
    let mut ok_nodes = BTreeSet::new();
    let mut stmts: BTreeSet<Statement> = BTreeSet::new();
    for ((v, label), status) in &outcome.statuses {
        if !matches!(status, Status::Ok) {
            continue;
        }
        ok_nodes.insert(*v);
        let cl = &engine.compiled[label];
        for cs in &cl.shapes {
            for st in g.neighs(*v) {
                if cs.closed || cs.preds.contains(&st.property) {
                    stmts.insert(st.clone());
                }
            }
        }
    }
    let subset = PregelSubset {
        ok_nodes,
        graph: WikibaseGraph::from_statements(stmts),
    };
    Ok((subset, outcome))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::*;
    use crate::wshex::eval::maximal_assignment;
    use crate::wshex::parser::parse_schema;

    const RESEARCHER_SCHEMA: &str = "\
<Researcher> {
  P31 @<Human> ;
  P569 @<Date> ;
  P19 @<Place>
}
<Place> { P17 @<Country> }
<Country> { }
<Date> xsd:date
<Human> [ Q5 ]
";

    fn label(s: &str) -> ShapeLabel {
        ShapeLabel::new(s)
    }

    fn dep(node: EntityId, prop: EntityId, l: &str) -> Dep {
        Dep::new(node, prop, label(l))
    }

    fn waitfor(deps: impl IntoIterator<Item = Dep>) -> Msg {
        Msg::WaitFor(deps.into_iter().collect())
    }

    fn checked(oks: impl IntoIterator<Item = Dep>, fs: impl IntoIterator<Item = Dep>) -> Msg {
        Msg::Checked {
            oks: oks.into_iter().collect(),
            fs: fs.into_iter().collect(),
        }
    }

    fn status_kinds(outcome: &PregelOutcome) -> BTreeMap<(EntityId, String), String> {
        outcome
            .statuses
            .iter()
            .map(|((v, l), s)| ((*v, l.to_string()), s.kind().to_string()))
            .collect()
    }

    fn researcher_outcome() -> PregelOutcome {
        let schema = parse_schema(RESEARCHER_SCHEMA).unwrap();
        pregel_validate(
            &example_graph(),
            &schema,
            &label("Researcher"),
            &PregelOptions {
                capture_trace: true,
                ..PregelOptions::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn researcher_run_takes_five_supersteps_with_the_expected_messages() {
        let out = researcher_outcome();
        assert_eq!(out.supersteps, 5);
        assert_eq!(out.trace.len(), 6); // rounds 0..=5

        let raw: Vec<usize> = out.trace.iter().map(|r| r.messages_sent).collect();
        assert_eq!(raw, vec![0, 8, 5, 1, 1, 0]);

        let s1: BTreeMap<(EntityId, ShapeLabel), Msg> = [
            (
                (tim_bl(), label("Researcher")),
                waitfor([
                    dep(human(), instance_of(), "Human"),
                    dep(london(), birth_place(), "Place"),
                ]),
            ),
            (
                (vint_cerf(), label("Researcher")),
                waitfor([
                    dep(human(), instance_of(), "Human"),
                    dep(new_haven(), birth_place(), "Place"),
                ]),
            ),
            ((human(), label("Human")), Msg::Validate),
            ((london(), label("Place")), Msg::Validate),
            ((new_haven(), label("Place")), Msg::Validate),
        ]
        .into();
        assert_eq!(out.trace[1].delivered, s1);

        let s2: BTreeMap<(EntityId, ShapeLabel), Msg> = [
            (
                (london(), label("Place")),
                waitfor([dep(uk(), country(), "Country")]),
            ),
            ((uk(), label("Country")), Msg::Validate),
            (
                (tim_bl(), label("Researcher")),
                checked([dep(human(), instance_of(), "Human")], []),
            ),
            (
                (vint_cerf(), label("Researcher")),
                checked(
                    [dep(human(), instance_of(), "Human")],
                    [dep(new_haven(), birth_place(), "Place")],
                ),
            ),
        ]
        .into();
        assert_eq!(out.trace[2].delivered, s2);

        let s3: BTreeMap<(EntityId, ShapeLabel), Msg> = [(
            (london(), label("Place")),
            checked([dep(uk(), country(), "Country")], []),
        )]
        .into();
        assert_eq!(out.trace[3].delivered, s3);

        let s4: BTreeMap<(EntityId, ShapeLabel), Msg> = [(
            (tim_bl(), label("Researcher")),
            checked([dep(london(), birth_place(), "Place")], []),
        )]
        .into();
        assert_eq!(out.trace[4].delivered, s4);

        assert!(out.trace[5].delivered.is_empty());
        assert_eq!(out.trace[5].messages_sent, 0);
    }

    #[test]
    fn researcher_run_assigns_the_expected_statuses() {
        let out = researcher_outcome();
        let expected: BTreeMap<(EntityId, String), String> = [
            ((tim_bl(), "Researcher"), "ok"),
            ((tim_bl(), "Human"), "failed"),
            ((tim_bl(), "Place"), "failed"),
            ((vint_cerf(), "Researcher"), "failed"),
            ((vint_cerf(), "Human"), "failed"),
            ((vint_cerf(), "Place"), "failed"),
            ((london(), "Researcher"), "failed"),
            ((london(), "Place"), "ok"),
            ((london(), "Country"), "ok"),
            ((uk(), "Researcher"), "failed"),
            ((uk(), "Country"), "ok"),
            ((human(), "Researcher"), "failed"),
            ((human(), "Human"), "ok"),
            ((new_haven(), "Researcher"), "failed"),
            ((new_haven(), "Place"), "failed"),
            ((cern(), "Researcher"), "failed"),
            ((pa_award(), "Researcher"), "failed"),
            ((spain(), "Researcher"), "failed"),
        ]
        .into_iter()
        .map(|((v, l), k)| ((v, l.to_string()), k.to_string()))
        .collect();
        assert_eq!(status_kinds(&out), expected);

        let oks = out.ok_pairs();
        let expected_oks: BTreeSet<(EntityId, ShapeLabel)> = [
            (tim_bl(), label("Researcher")),
            (london(), label("Place")),
            (london(), label("Country")),
            (uk(), label("Country")),
            (human(), label("Human")),
        ]
        .into();
        assert_eq!(oks, expected_oks);
    }

    #[test]
    fn researcher_subset_projects_four_statements() {
        let schema = parse_schema(RESEARCHER_SCHEMA).unwrap();
        let (subset, outcome) = pregel_subset(
            &example_graph(),
            &schema,
            &label("Researcher"),
            &PregelOptions::default(),
        )
        .unwrap();
        assert_eq!(outcome.supersteps, 5);
        let expected: BTreeSet<Statement> = [
            Statement::new(tim_bl(), instance_of(), human()),
            Statement::new(tim_bl(), birth_date(), year(1955)),
            Statement::new(tim_bl(), birth_place(), london()),
            Statement::new(london(), country(), uk()),
        ]
        .into();
        let got: BTreeSet<Statement> = subset.graph.statements().iter().cloned().collect();
        assert_eq!(got, expected);
        let nodes: BTreeSet<EntityId> = [tim_bl(), london(), uk(), human()].into();
        assert_eq!(subset.ok_nodes, nodes);
    }

    #[test]
    fn runs_are_deterministic() {
        let a = researcher_outcome();
        let b = researcher_outcome();
        assert_eq!(a, b);
    }

    #[test]
    fn unknown_start_label_is_rejected() {
        let schema = parse_schema("<S> { }").unwrap();
        let err = pregel_validate(
            &example_graph(),
            &schema,
            &label("Missing"),
            &PregelOptions::default(),
        )
        .unwrap_err();
        assert_eq!(err, PregelError::UnknownStart(label("Missing")));
    }

    #[test]
    fn reserved_label_is_rejected() {
        let schema = parse_schema("<__any__> { }").unwrap();
        let err = pregel_validate(
            &example_graph(),
            &schema,
            &label("__any__"),
            &PregelOptions::default(),
        )
        .unwrap_err();
        assert_eq!(err, PregelError::ReservedLabel(label("__any__")));
    }

    #[test]
    fn structural_qualifier_reference_is_rejected() {
        let schema =
            parse_schema("<S> { P108 @<O> {{ P580 @<T> }} }\n<O> { }\n<T> { P1 @<O> }").unwrap();
        let err = pregel_validate(
            &example_graph(),
            &schema,
            &label("S"),
            &PregelOptions::default(),
        )
        .unwrap_err();
        assert_eq!(
            err,
            PregelError::QualifierRef {
                property: EntityId::property(580),
                label: label("T"),
            }
        );
    }

    #[test]
    fn budget_exhaustion_is_an_error() {
        let schema = parse_schema(RESEARCHER_SCHEMA).unwrap();
        let err = pregel_validate(
            &example_graph(),
            &schema,
            &label("Researcher"),
            &PregelOptions {
                max_supersteps: Some(2),
                ..PregelOptions::default()
            },
        )
        .unwrap_err();
        assert_eq!(err, PregelError::Budget { supersteps: 3 });
    }

    #[test]
    fn closed_shape_fails_on_extra_statements() {
        let schema = parse_schema("<S> CLOSED { P31 @<H> }\n<H> [ Q5 ]").unwrap();
        let clean = WikibaseGraph::from_statements([Statement::new(
            EntityId::item(1),
            instance_of(),
            human(),
        )]);
        let out = pregel_validate(&clean, &schema, &label("S"), &PregelOptions::default()).unwrap();
        assert!(matches!(
            out.statuses[&(EntityId::item(1), label("S"))],
            Status::Ok
        ));
        let noisy = WikibaseGraph::from_statements([
            Statement::new(EntityId::item(1), instance_of(), human()),
            Statement::new(EntityId::item(1), country(), uk()),
        ]);
        let out = pregel_validate(&noisy, &schema, &label("S"), &PregelOptions::default()).unwrap();
        assert!(matches!(
            out.statuses[&(EntityId::item(1), label("S"))],
            Status::Failed(_)
        ));
    }

    #[test]
    fn any_value_targets_resolve_without_leaking_internal_labels() {
        let schema = parse_schema("<S> { P17 . }").unwrap();
        let g = WikibaseGraph::from_statements([
            Statement::new(london(), country(), uk()),
            Statement::new(pa_award(), country(), spain()),
        ]);
        let out = pregel_validate(&g, &schema, &label("S"), &PregelOptions::default()).unwrap();
        assert!(out.statuses.keys().all(|(_, l)| l.as_str() != ANY_LABEL));
        assert!(matches!(out.statuses[&(london(), label("S"))], Status::Ok));
        assert!(matches!(
            out.statuses[&(pa_award(), label("S"))],
            Status::Ok
        ));
        assert!(matches!(
            out.statuses[&(uk(), label("S"))],
            Status::Failed(_)
        ));
    }

    #[test]
    fn unresolved_cycles_fail_where_recursive_semantics_accepts() {
        // The message rounds cannot certify a cycle that only supports
        // itself: each side waits for the other and the final sweep treats
        // unreported dependencies as failed. The recursive semantics keeps
        // the cycle; extraction strategies built on this engine are
        // deliberately the stricter of the two.
        let schema = parse_schema("<A> { P1 @<A> }").unwrap();
        let g = WikibaseGraph::from_statements([
            Statement::new(EntityId::item(1), EntityId::property(1), EntityId::item(2)),
            Statement::new(EntityId::item(2), EntityId::property(1), EntityId::item(1)),
        ]);
        let tau = maximal_assignment(&g, &schema);
        assert!(tau.contains(&(EntityId::item(1), label("A"))));
        let out = pregel_validate(&g, &schema, &label("A"), &PregelOptions::default()).unwrap();
        assert!(matches!(
            out.statuses[&(EntityId::item(1), label("A"))],
            Status::Failed(_)
        ));
        assert!(matches!(
            out.statuses[&(EntityId::item(2), label("A"))],
            Status::Failed(_)
        ));
    }

    #[test]
    fn condition_only_labels_resolve_in_the_first_round() {
        let schema = parse_schema("<H> [ Q5 Q84 ]").unwrap();
        let out = pregel_validate(
            &example_graph(),
            &schema,
            &label("H"),
            &PregelOptions::default(),
        )
        .unwrap();
        assert_eq!(out.supersteps, 1);
        assert!(matches!(out.statuses[&(human(), label("H"))], Status::Ok));
        assert!(matches!(out.statuses[&(london(), label("H"))], Status::Ok));
        assert!(matches!(
            out.statuses[&(tim_bl(), label("H"))],
            Status::Failed(_)
        ));
    }

    #[test]
    fn optional_data_constraint_is_not_required_locally() {
        // A node missing an optional data statement validates; a node
        // missing a required entity edge fails locally.
        let schema =
            parse_schema("<S> { P569 @<D> ? ; P31 @<H> }\n<D> xsd:date\n<H> [ Q5 ]").unwrap();
        let g = WikibaseGraph::from_statements([
            Statement::new(EntityId::item(1), instance_of(), human()),
            Statement::new(EntityId::item(2), birth_date(), year(1990)),
        ]);
        let out = pregel_validate(&g, &schema, &label("S"), &PregelOptions::default()).unwrap();
        assert!(matches!(
            out.statuses[&(EntityId::item(1), label("S"))],
            Status::Ok
        ));
        assert!(matches!(
            out.statuses[&(EntityId::item(2), label("S"))],
            Status::Failed(_)
        ));
    }

    mod agreement {
        //! On schemas whose references form no cycles, the message-passing
        //! verdict for the start label must coincide with membership in the
        //! maximal assignment, and every other reported verdict must be
        //! consistent with it.

        use super::*;
        use crate::wgraph::DataValue;
        use proptest::prelude::*;

        #[derive(Debug, Clone)]
        enum LabelKind {
            /// Value set over a non-empty subset of Q1..Q6 (bitmask).
            EntitySet(u8),
            /// Value set mixing entities and years.
            MixedSet(u8),
            Year,
            /// Open shape: (property, target choice, cardinality choice).
            Shape(Vec<(u32, usize, u8)>),
        }

        fn build_schema(kinds: Vec<LabelKind>) -> WShExSchema {
            let n = kinds.len();
            let decls: Vec<(ShapeLabel, ShapeExpr)> = kinds
                .into_iter()
                .enumerate()
                .map(|(i, kind)| {
                    let name = ShapeLabel::new(format!("L{i}"));
                    let expr = match kind {
                        LabelKind::EntitySet(mask) => ShapeExpr::value_set(
                            (1..=6u32)
                                .filter(|q| mask & (1 << (q - 1)) != 0)
                                .map(|q| Value::Entity(EntityId::item(q)))
                                .chain([Value::Entity(EntityId::item(1))]),
                        ),
                        LabelKind::MixedSet(mask) => ShapeExpr::value_set(
                            (1..=3u32)
                                .filter(|q| mask & (1 << (q - 1)) != 0)
                                .map(|q| Value::Entity(EntityId::item(q)))
                                .chain([
                                    Value::Data(DataValue::year(2000)),
                                    Value::Data(DataValue::year(2001)),
                                ]),
                        ),
                        LabelKind::Year => ShapeExpr::datatype(crate::wgraph::Datatype::Year),
                        LabelKind::Shape(tcs) => {
                            let parts = tcs.into_iter().map(|(p, target, card)| {
                                let value = if i + 1 < n {
                                    let t = i + 1 + target % (n - i - 1);
                                    ValueCheck::Ref(ShapeLabel::new(format!("L{t}")))
                                } else {
                                    ValueCheck::Any
                                };
                                let tc = crate::wshex::ast::TripleConstraint {
                                    property: EntityId::property(p),
                                    value,
                                    qualifiers: QualifierSpec::open_empty(),
                                };
                                let c = TripleExpr::Constraint(tc);
                                match card {
                                    0 => c,
                                    1 => TripleExpr::one_of(c, TripleExpr::Empty),
                                    _ => TripleExpr::star(c),
                                }
                            });
                            ShapeExpr::open(TripleExpr::each_of_all(parts))
                        }
                    };
                    (name, expr)
                })
                .collect();
            WShExSchema::new(decls, None, BTreeMap::new()).unwrap()
        }

        fn build_graph(raw: Vec<(u32, u32, Option<u32>)>) -> WikibaseGraph {
            WikibaseGraph::from_statements(raw.into_iter().map(|(s, p, v)| {
                let value = match v {
                    Some(q) => Value::Entity(EntityId::item(q)),
                    None => Value::Data(DataValue::year(2000)),
                };
                Statement::new(EntityId::item(s), EntityId::property(p), value)
            }))
        }

        fn arb_kind() -> impl Strategy<Value = LabelKind> {
            prop_oneof![
                (0u8..64).prop_map(LabelKind::EntitySet),
                (0u8..8).prop_map(LabelKind::MixedSet),
                Just(LabelKind::Year),
                prop::collection::vec((1u32..=3, 0usize..=3, 0u8..=2), 1..=3)
                    .prop_map(LabelKind::Shape),
            ]
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn acyclic_runs_agree_with_the_maximal_assignment(
                kinds in prop::collection::vec(arb_kind(), 2..=4),
                raw in prop::collection::vec(
                    (1u32..=6, 1u32..=3, prop::option::of(1u32..=6)),
                    0..=10,
                ),
            ) {
                let schema = build_schema(kinds);
                let g = build_graph(raw);
                let tau = maximal_assignment(&g, &schema);
                let start = schema.labels()[0].clone();
                let out = pregel_validate(&g, &schema, &start, &PregelOptions::default())
                    .unwrap();
                for n in g.entity_nodes() {
                    let expected = tau.contains(&(*n, start.clone()));
                    let got = matches!(out.statuses.get(&(*n, start.clone())), Some(Status::Ok));
                    prop_assert_eq!(got, expected, "start verdict for {}", n);
                }
                for ((n, l), s) in &out.statuses {
                    match s {
                        Status::Ok => prop_assert!(
                            tau.contains(&(*n, l.clone())),
                            "{} wrongly validated {}", n, l
                        ),
                        Status::Failed(_) => prop_assert!(
                            !tau.contains(&(*n, l.clone())),
                            "{} wrongly failed {}", n, l
                        ),
                        other => prop_assert!(false, "unresolved status {:?}", other),
                    }
                }
            }
        }
    }
}
