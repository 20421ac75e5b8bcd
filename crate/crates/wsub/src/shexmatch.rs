//! Schema-driven matching over single entities: cross-entity references are
//! erased so each entity can be judged from its own statements alone, which
//! makes the extraction a one-pass streaming filter over a dump.

use std::collections::{BTreeMap, BTreeSet};

use crate::dumpio::EntityDocument;
use crate::wgraph::{EntityId, Statement, Value, WikibaseGraph};
use crate::wshex::ast::{
    PropertySpec, QualifierSpec, Shape, ShapeExpr, ShapeLabel, TripleConstraint, TripleExpr,
    ValueCheck, WShExSchema,
};
use crate::wshex::eval::{Evaluator, SliceNeighs};

/// Rewrite every reference used as a triple-constraint or qualifier value
/// check to the any-value check, keeping everything else (node conditions,
/// closedness, structure, top-level references) intact.
pub fn erase_refs(schema: &WShExSchema) -> WShExSchema {
    schema.map_exprs(erase_se)
}

fn erase_se(se: &ShapeExpr) -> ShapeExpr {
    match se {
        ShapeExpr::Cond(c) => ShapeExpr::Cond(c.clone()),
        ShapeExpr::And(a, b) => ShapeExpr::And(Box::new(erase_se(a)), Box::new(erase_se(b))),
        ShapeExpr::Ref(l) => ShapeExpr::Ref(l.clone()),
        ShapeExpr::Shape(s) => ShapeExpr::Shape(Shape {
            closed: s.closed,
            expr: erase_te(&s.expr),
        }),
    }
}

fn erase_te(te: &TripleExpr) -> TripleExpr {
    match te {
        TripleExpr::Empty => TripleExpr::Empty,
        TripleExpr::Constraint(tc) => TripleExpr::Constraint(TripleConstraint {
            property: tc.property,
            value: ValueCheck::Any,
            qualifiers: QualifierSpec {
                closed: tc.qualifiers.closed,
                spec: erase_ps(&tc.qualifiers.spec),
            },
        }),
        TripleExpr::EachOf(a, b) => {
            TripleExpr::EachOf(Box::new(erase_te(a)), Box::new(erase_te(b)))
        }
        TripleExpr::OneOf(a, b) => TripleExpr::OneOf(Box::new(erase_te(a)), Box::new(erase_te(b))),
        TripleExpr::Star(a) => TripleExpr::Star(Box::new(erase_te(a))),
    }
}

fn erase_ps(ps: &PropertySpec) -> PropertySpec {
    match ps {
        PropertySpec::Empty => PropertySpec::Empty,
        PropertySpec::Constraint(p, _) => PropertySpec::Constraint(*p, ValueCheck::Any),
        PropertySpec::EachOf(a, b) => {
            PropertySpec::EachOf(Box::new(erase_ps(a)), Box::new(erase_ps(b)))
        }
        PropertySpec::OneOf(a, b) => {
            PropertySpec::OneOf(Box::new(erase_ps(a)), Box::new(erase_ps(b)))
        }
        PropertySpec::Star(a) => PropertySpec::Star(Box::new(erase_ps(a))),
    }
}

/// The statements a matched shape expression accounts for: none for bare
/// node conditions, the mentioned-property statements for open shapes,
/// everything for closed shapes, unions across conjunctions and references.
fn consumed_statements(
    se: &ShapeExpr,
    stmts: &[Statement],
    schema: &WShExSchema,
    out: &mut BTreeSet<Statement>,
) {
    match se {
        ShapeExpr::Cond(_) => {}
        ShapeExpr::And(a, b) => {
            consumed_statements(a, stmts, schema, out);
            consumed_statements(b, stmts, schema, out);
        }
        ShapeExpr::Ref(l) => consumed_statements(schema.delta(l), stmts, schema, out),
        ShapeExpr::Shape(s) => {
            if s.closed {
                out.extend(stmts.iter().cloned());
            } else {
                let preds = s.expr.preds();
                out.extend(
                    stmts
                        .iter()
                        .filter(|st| preds.contains(&st.property))
                        .cloned(),
                );
            }
        }
    }
}

/// Try each declared label in order against the entity's own statements;
/// return the first that matches along with the statements it consumed.
///
/// The schema is used as given — pass it through [`erase_refs`] first when
/// the statements are a single entity's slice, otherwise reference checks
/// on other entities will see empty neighborhoods and fail.
pub fn node_match(
    subject: EntityId,
    stmts: &[Statement],
    schema: &WShExSchema,
) -> Option<(ShapeLabel, Vec<Statement>)> {
    let src = SliceNeighs { subject, stmts };
    let ev = Evaluator {
        schema,
        tau: None,
        src: &src,
    };
    let v = Value::Entity(subject);
    for l in schema.labels() {
        let se = schema.delta(l);
        if ev.eval_se(&v, se) {
            let mut out = BTreeSet::new();
            consumed_statements(se, stmts, schema, &mut out);
            return Some((l.clone(), out.into_iter().collect()));
        }
    }
    None
}

/// Counters reported by a matching run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MatchSummary {
    pub entities_read: u64,
    pub entities_matched: u64,
    pub statements_emitted: u64,
    pub matched_by_label: BTreeMap<ShapeLabel, u64>,
}

/// Stream entity documents through the reference-erased schema, handing each
/// matched document (trimmed to its consumed statements, possibly none) to
/// the sink. Errors from the source or the sink abort the run.
pub fn shex_match_stream<I, F, E>(
    docs: I,
    schema: &WShExSchema,
    mut sink: F,
) -> Result<MatchSummary, E>
where
    I: IntoIterator<Item = Result<EntityDocument, E>>,
    F: FnMut(EntityDocument) -> Result<(), E>,
{
    let erased = erase_refs(schema);
    let mut summary = MatchSummary::default();
    for doc in docs {
        let doc = doc?;
        summary.entities_read += 1;
        if let Some((label, consumed)) = node_match(doc.id, &doc.statements, &erased) {
            summary.entities_matched += 1;
            summary.statements_emitted += consumed.len() as u64;
            *summary.matched_by_label.entry(label).or_insert(0) += 1;
            sink(EntityDocument::new(doc.id, consumed))?;
        }
    }
    Ok(summary)
}

/// In-memory convenience: match every entity node of a graph (including
/// statement-less ones) and union the consumed statements.
pub fn shex_match_graph(
    g: &WikibaseGraph,
    schema: &WShExSchema,
) -> (BTreeSet<EntityId>, WikibaseGraph) {
    let erased = erase_refs(schema);
    let mut matched = BTreeSet::new();
    let mut statements = BTreeSet::new();
    for n in g.entity_nodes() {
        if let Some((_, consumed)) = node_match(*n, g.neighs(*n), &erased) {
            matched.insert(*n);
            statements.extend(consumed);
        }
    }
    (matched, WikibaseGraph::from_statements(statements))
}
