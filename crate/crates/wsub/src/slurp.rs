//! Subset extraction by slurping: full recursive validation that also
//! accumulates the nodes and statements the successful derivation visits.
//!
//! The collected statements carry exactly the qualifier pairs the qualifier
//! spec consumed, so they may have reduced qualifier sets relative to the
//! source graph (an option restores the originals). Failed alternatives
//! contribute nothing; a separate option switches to the permissive variant
//! that keeps everything any constraint touched during the search.

use std::collections::BTreeSet;

use rayon::prelude::*;
use thiserror::Error;

use crate::wgraph::{EntityId, QualifierSet, Statement, Value, WikibaseGraph};
use crate::wshex::ast::{
    PropertySpec, QualifierSpec, Shape, ShapeExpr, ShapeLabel, TripleConstraint, TripleExpr,
    ValueCheck, WShExSchema,
};
use crate::wshex::eval::{maximal_assignment, ShapeAssignment};

/// Nodes and statements collected by a derivation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Slurped {
    pub nodes: BTreeSet<Value>,
    pub statements: BTreeSet<Statement>,
}

impl Slurped {
    fn node(v: Value) -> Self {
        Slurped {
            nodes: [v].into_iter().collect(),
            statements: BTreeSet::new(),
        }
    }

    fn absorb(&mut self, other: Slurped) {
        self.nodes.extend(other.nodes);
        self.statements.extend(other.statements);
    }

    /// Entity nodes among the collected nodes.
    pub fn entity_nodes(&self) -> BTreeSet<EntityId> {
        self.nodes.iter().filter_map(Value::as_entity).collect()
    }
}

/// Outcome of a slurping conformance check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlurpResult {
    pub conforms: bool,
    pub slurped: Slurped,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SlurpOptions {
    /// Collect everything any triple constraint consumed during the search,
    /// including branches that were later abandoned, with original
    /// qualifier sets.
    pub visited: bool,
    /// Emit matched statements with their original qualifier sets instead
    /// of the consumed subset.
    pub full_qualifiers: bool,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SlurpError {
    #[error("unknown shape label {0}")]
    UnknownLabel(ShapeLabel),
}

/// Result of a subset run: the matched entity nodes (some may have no
/// statements) and the collected statements as a graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlurpSubset {
    pub nodes: BTreeSet<EntityId>,
    pub graph: WikibaseGraph,
}

struct Slurper<'a> {
    g: &'a WikibaseGraph,
    schema: &'a WShExSchema,
    tau: &'a ShapeAssignment,
    path: Vec<(EntityId, ShapeLabel)>,
    full_qualifiers: bool,
    /// Side collector for the permissive variant.
    visited: Slurped,
}

impl<'a> Slurper<'a> {
    fn new(
        g: &'a WikibaseGraph,
        schema: &'a WShExSchema,
        tau: &'a ShapeAssignment,
        full_qualifiers: bool,
    ) -> Self {
        Slurper {
            g,
            schema,
            tau,
            path: Vec::new(),
            full_qualifiers,
            visited: Slurped::default(),
        }
    }

    fn slurp_se(&mut self, v: &Value, se: &ShapeExpr) -> Option<Slurped> {
        match se {
            ShapeExpr::Cond(c) => c.eval(v).then(|| Slurped::node(v.clone())),
            ShapeExpr::And(a, b) => {
                let mut s = self.slurp_se(v, a)?;
                s.absorb(self.slurp_se(v, b)?);
                Some(s)
            }
            ShapeExpr::Ref(l) => self.slurp_ref(v, l),
            ShapeExpr::Shape(s) => self.slurp_shape(v, s),
        }
    }

    fn slurp_ref(&mut self, v: &Value, l: &ShapeLabel) -> Option<Slurped> {
        match v {
            Value::Entity(e) => {
                let key = (*e, l.clone());
                if !self.tau.contains(&key) {
                    return None;
                }
                if self.path.contains(&key) {
                    // Already being derived higher up: the assignment
                    // vouches for it; contribute the node, don't descend.
                    return Some(Slurped::node(v.clone()));
                }
                self.path.push(key);
                let r = self.slurp_se(v, self.schema.delta(l));
                self.path.pop();
                debug_assert!(r.is_some(), "descent must succeed for assignment members");
                r
            }
            Value::Data(_) => self.slurp_se(v, self.schema.delta(l)),
        }
    }

    fn slurp_shape(&mut self, v: &Value, s: &Shape) -> Option<Slurped> {
        let stmts: Vec<&Statement> = match v {
            Value::Entity(e) => {
                let all = self.g.neighs(*e);
                if s.closed {
                    all.iter().collect()
                } else {
                    let preds = s.expr.preds();
                    all.iter()
                        .filter(|st| preds.contains(&st.property))
                        .collect()
                }
            }
            Value::Data(_) => Vec::new(),
        };
        let mut out = self.slurp_te(&s.expr, &stmts)?;
        out.absorb(Slurped::node(v.clone()));
        Some(out)
    }

    /// Derive `te` consuming exactly `stmts`; first witness in statement
    /// order wins.
    fn slurp_te(&mut self, te: &TripleExpr, stmts: &[&Statement]) -> Option<Slurped> {
        match te {
            TripleExpr::Empty => stmts.is_empty().then(Slurped::default),
            TripleExpr::Constraint(tc) => match stmts {
                [st] => self.slurp_tc(tc, st),
                _ => None,
            },
            TripleExpr::OneOf(a, b) => self.slurp_te(a, stmts).or_else(|| self.slurp_te(b, stmts)),
            TripleExpr::EachOf(a, b) => split_search(
                stmts,
                &mut |me, left, right| {
                    let mut s = me.slurp_te(a, left)?;
                    s.absorb(me.slurp_te(b, right)?);
                    Some(s)
                },
                self,
            ),
            TripleExpr::Star(a) => {
                if stmts.is_empty() {
                    return Some(Slurped::default());
                }
                // The first statement anchors the head group.
                let rest = &stmts[1..];
                split_search(
                    rest,
                    &mut |me, with_first, remainder| {
                        let mut head: Vec<&Statement> = Vec::with_capacity(with_first.len() + 1);
                        head.push(stmts[0]);
                        head.extend_from_slice(with_first);
                        let mut s = me.slurp_te(a, &head)?;
                        s.absorb(me.slurp_te(te, remainder)?);
                        Some(s)
                    },
                    self,
                )
            }
        }
    }

    fn slurp_tc(&mut self, tc: &TripleConstraint, st: &Statement) -> Option<Slurped> {
        if st.property != tc.property {
            return None;
        }
        let value_slurp = match &tc.value {
            ValueCheck::Any => Slurped::default(),
            ValueCheck::Ref(l) => self.slurp_ref(&st.value, l)?,
        };
        let (consumed, q_slurp) = self.slurp_qualifiers(&st.qualifiers, &tc.qualifiers)?;
        let emitted = if self.full_qualifiers {
            st.clone()
        } else {
            Statement::with_qualifiers(st.subject, st.property, st.value.clone(), consumed)
        };
        // Permissive collection: record the touched statement whether or
        // not the surrounding partition survives.
        self.visited.nodes.insert(Value::Entity(st.subject));
        self.visited.nodes.insert(st.value.clone());
        self.visited
            .nodes
            .extend(st.qualifiers.iter().map(|(_, v)| v.clone()));
        self.visited.statements.insert(st.clone());

        let mut out = Slurped {
            nodes: [Value::Entity(st.subject), st.value.clone()]
                .into_iter()
                .collect(),
            statements: [emitted].into_iter().collect(),
        };
        out.absorb(value_slurp);
        out.absorb(q_slurp);
        Some(out)
    }

    /// Check a qualifier set against a spec, returning the consumed pairs
    /// (the whole filtered set for open specs, everything for closed ones)
    /// and the slurp of the qualifier-value checks.
    fn slurp_qualifiers(
        &mut self,
        qs: &QualifierSet,
        spec: &QualifierSpec,
    ) -> Option<(QualifierSet, Slurped)> {
        let pairs: Vec<&(EntityId, Value)> = if spec.closed {
            qs.iter().collect()
        } else {
            let props = spec.spec.props();
            qs.iter().filter(|(p, _)| props.contains(p)).collect()
        };
        let slurp = self.slurp_ps(&spec.spec, &pairs)?;
        let consumed: QualifierSet = pairs.into_iter().cloned().collect();
        Some((consumed, slurp))
    }

    fn slurp_ps(&mut self, ps: &PropertySpec, pairs: &[&(EntityId, Value)]) -> Option<Slurped> {
        match ps {
            PropertySpec::Empty => pairs.is_empty().then(Slurped::default),
            PropertySpec::Constraint(p, vc) => match pairs {
                [(qp, qv)] if qp == p => match vc {
                    ValueCheck::Any => Some(Slurped::default()),
                    ValueCheck::Ref(l) => self.slurp_ref(qv, l),
                },
                _ => None,
            },
            PropertySpec::OneOf(a, b) => {
                self.slurp_ps(a, pairs).or_else(|| self.slurp_ps(b, pairs))
            }
            PropertySpec::EachOf(a, b) => split_search(
                pairs,
                &mut |me, left, right| {
                    let mut s = me.slurp_ps(a, left)?;
                    s.absorb(me.slurp_ps(b, right)?);
                    Some(s)
                },
                self,
            ),
            PropertySpec::Star(a) => {
                if pairs.is_empty() {
                    return Some(Slurped::default());
                }
                let rest = &pairs[1..];
                split_search(
                    rest,
                    &mut |me, with_first, remainder| {
                        let mut head: Vec<&(EntityId, Value)> =
                            Vec::with_capacity(with_first.len() + 1);
                        head.push(pairs[0]);
                        head.extend_from_slice(with_first);
                        let mut s = me.slurp_ps(a, &head)?;
                        s.absorb(me.slurp_ps(ps, remainder)?);
                        Some(s)
                    },
                    self,
                )
            }
        }
    }
}

/// A split candidate consumer: derives the two halves, `None` on failure.
type SplitFn<'f, 's, T> = dyn FnMut(&mut Slurper, &[&'s T], &[&'s T]) -> Option<Slurped> + 'f;

/// Enumerate two-way splits of `items` in a fixed order (each item tried on
/// the right first, so splits appear in increasing left-set order), handing
/// each to `f` until one succeeds.
fn split_search<'s, T: ?Sized>(
    items: &[&'s T],
    f: &mut SplitFn<'_, 's, T>,
    me: &mut Slurper,
) -> Option<Slurped> {
    fn go<'s, T: ?Sized>(
        items: &[&'s T],
        idx: usize,
        left: &mut Vec<&'s T>,
        right: &mut Vec<&'s T>,
        f: &mut SplitFn<'_, 's, T>,
        me: &mut Slurper,
    ) -> Option<Slurped> {
        if idx == items.len() {
            return f(me, left, right);
        }
        right.push(items[idx]);
        if let Some(r) = go(items, idx + 1, left, right, f, me) {
            return Some(r);
        }
        right.pop();
        left.push(items[idx]);
        if let Some(r) = go(items, idx + 1, left, right, f, me) {
            return Some(r);
        }
        left.pop();
        None
    }
    go(items, 0, &mut Vec::new(), &mut Vec::new(), f, me)
}

/// Slurping conformance: agrees with the plain conformance check and
/// additionally returns what the derivation collected.
pub fn conforms_slurp(
    g: &WikibaseGraph,
    v: &Value,
    tau: &ShapeAssignment,
    se: &ShapeExpr,
    schema: &WShExSchema,
) -> SlurpResult {
    let mut slurper = Slurper::new(g, schema, tau, false);
    match slurper.slurp_se(v, se) {
        Some(slurped) => SlurpResult {
            conforms: true,
            slurped,
        },
        None => SlurpResult {
            conforms: false,
            slurped: Slurped::default(),
        },
    }
}

/// Validate every entity node against each of the given labels under the
/// maximal assignment and union what the conforming derivations slurp.
pub fn slurp_subset(
    g: &WikibaseGraph,
    schema: &WShExSchema,
    labels: &[ShapeLabel],
    options: SlurpOptions,
) -> Result<SlurpSubset, SlurpError> {
    for l in labels {
        if !schema.contains(l) {
            return Err(SlurpError::UnknownLabel(l.clone()));
        }
    }
    let tau = maximal_assignment(g, schema);
    let total = g
        .entity_nodes()
        .par_iter()
        .map(|n| {
            let mut acc = Slurped::default();
            for l in labels {
                if !tau.contains(&(*n, l.clone())) {
                    continue;
                }
                let mut slurper = Slurper::new(g, schema, &tau, options.full_qualifiers);
                let r = slurper.slurp_ref(&Value::Entity(*n), l);
                debug_assert!(r.is_some());
                if let Some(s) = r {
                    acc.absorb(if options.visited { slurper.visited } else { s });
                    if options.visited {
                        acc.nodes.insert(Value::Entity(*n));
                    }
                }
            }
            acc
        })
        .reduce(Slurped::default, |mut a, b| {
            a.absorb(b);
            a
        });
    Ok(SlurpSubset {
        nodes: total.entity_nodes(),
        graph: WikibaseGraph::from_statements(total.statements.iter().cloned()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::*;
    use crate::wshex::eval::conforms;
    use crate::wshex::parse_schema;

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

    #[test]
    fn cond_success_slurps_only_the_node() {
        let schema = parse_schema("<H> [ Q5 ]").unwrap();
        let g = example_graph();
        let tau = maximal_assignment(&g, &schema);
        let r = conforms_slurp(
            &g,
            &Value::Entity(human()),
            &tau,
            schema.delta(&label("H")),
            &schema,
        );
        assert!(r.conforms);
        assert_eq!(
            r.slurped.nodes,
            [Value::Entity(human())].into_iter().collect()
        );
        assert!(r.slurped.statements.is_empty());
    }

    #[test]
    fn researcher_slurp_collects_four_statements() {
        let schema = parse_schema(RESEARCHER_SCHEMA).unwrap();
        let g = example_graph();
        let tau = maximal_assignment(&g, &schema);
        let r = conforms_slurp(
            &g,
            &Value::Entity(tim_bl()),
            &tau,
            &ShapeExpr::Ref(label("Researcher")),
            &schema,
        );
        assert!(r.conforms);
        let expected: BTreeSet<Statement> = [
            Statement::new(tim_bl(), instance_of(), human()),
            Statement::new(tim_bl(), birth_date(), year(1955)),
            Statement::new(tim_bl(), birth_place(), london()),
            Statement::new(london(), country(), uk()),
        ]
        .into_iter()
        .collect();
        assert_eq!(r.slurped.statements, expected);
        assert_eq!(
            r.slurped.entity_nodes(),
            [tim_bl(), human(), london(), uk()].into_iter().collect()
        );
    }

    #[test]
    fn subset_driver_matches_the_single_conforming_node() {
        let schema = parse_schema(RESEARCHER_SCHEMA).unwrap();
        let g = example_graph();
        let out =
            slurp_subset(&g, &schema, &[label("Researcher")], SlurpOptions::default()).unwrap();
        assert_eq!(out.graph.len(), 4);
        // vintCerf does not conform and contributes nothing.
        assert!(!out.nodes.contains(&vint_cerf()));
        assert!(out.graph.neighs(vint_cerf()).is_empty());
    }

    #[test]
    fn unknown_start_label_is_an_error() {
        let schema = parse_schema("<A> { }").unwrap();
        let g = example_graph();
        assert_eq!(
            slurp_subset(&g, &schema, &[label("B")], SlurpOptions::default()),
            Err(SlurpError::UnknownLabel(label("B")))
        );
    }

    #[test]
    fn open_empty_start_shape_slurps_all_nodes_no_statements() {
        let schema = parse_schema("<Anything> { }").unwrap();
        let g = example_graph();
        let out = slurp_subset(&g, &schema, &[label("Anything")], SlurpOptions::default()).unwrap();
        assert_eq!(&out.nodes, g.entity_nodes());
        assert!(out.graph.is_empty());
    }

    #[test]
    fn two_node_cycle_slurps_both_edges() {
        let schema = parse_schema("<L> { P1 @<L> }").unwrap();
        let s1 = Statement::new(EntityId::item(1), EntityId::property(1), EntityId::item(2));
        let s2 = Statement::new(EntityId::item(2), EntityId::property(1), EntityId::item(1));
        let g = WikibaseGraph::from_statements([s1.clone(), s2.clone()]);
        let out = slurp_subset(&g, &schema, &[label("L")], SlurpOptions::default()).unwrap();
        assert_eq!(
            out.nodes,
            [EntityId::item(1), EntityId::item(2)].into_iter().collect()
        );
        assert_eq!(
            out.graph
                .statements()
                .iter()
                .cloned()
                .collect::<BTreeSet<_>>(),
            [s1, s2].into_iter().collect()
        );
    }

    #[test]
    fn open_qualifier_spec_reduces_slurped_qualifiers() {
        let schema =
            parse_schema("<S> { P166 @<Award> {{ P585 @<Date> }} }\n<Award> { }\n<Date> xsd:date")
                .unwrap();
        let g = example_graph();
        let tau = maximal_assignment(&g, &schema);
        let r = conforms_slurp(
            &g,
            &Value::Entity(tim_bl()),
            &tau,
            &ShapeExpr::Ref(label("S")),
            &schema,
        );
        assert!(r.conforms);
        // The emitted statement keeps pointTime but sheds togetherWith.
        let expected = Statement::with_qualifiers(
            tim_bl(),
            awarded(),
            pa_award(),
            [(point_time(), year(2002))],
        );
        assert!(r.slurped.statements.contains(&expected));
        assert!(r
            .slurped
            .statements
            .iter()
            .all(|s| !s.qualifiers.iter().any(|(p, _)| *p == together_with())));
    }

    #[test]
    fn full_qualifiers_option_restores_originals() {
        let schema =
            parse_schema("<S> { P166 @<Award> {{ P585 @<Date> }} }\n<Award> { }\n<Date> xsd:date")
                .unwrap();
        let g = example_graph();
        let out = slurp_subset(
            &g,
            &schema,
            &[label("S")],
            SlurpOptions {
                full_qualifiers: true,
                ..Default::default()
            },
        )
        .unwrap();
        let original = Statement::with_qualifiers(
            tim_bl(),
            awarded(),
            pa_award(),
            [
                (point_time(), year(2002)),
                (together_with(), Value::Entity(vint_cerf())),
            ],
        );
        assert!(out.graph.contains(&original));
    }

    #[test]
    fn visited_mode_keeps_touched_statements_from_abandoned_branches() {
        // Both statements satisfy the first constraint, so the search first
        // tries an assignment that later fails; the permissive variant
        // keeps those touches, and keeps original qualifiers.
        let schema =
            parse_schema("<S> { P1 @<AB> ; P1 @<A> }\n<AB> [ Q7 Q8 ]\n<A> [ Q7 ]").unwrap();
        let x = EntityId::item(1);
        let p1 = EntityId::property(1);
        let p9 = EntityId::property(9);
        let s7 = Statement::with_qualifiers(x, p1, EntityId::item(7), [(p9, year(1))]);
        let s8 = Statement::with_qualifiers(x, p1, EntityId::item(8), [(p9, year(2))]);
        let g = WikibaseGraph::from_statements([s7.clone(), s8.clone()]);

        let reduced = slurp_subset(&g, &schema, &[label("S")], SlurpOptions::default()).unwrap();
        let visited = slurp_subset(
            &g,
            &schema,
            &[label("S")],
            SlurpOptions {
                visited: true,
                ..Default::default()
            },
        )
        .unwrap();
        // Rule-faithful output reduces the (unconstrained) qualifier sets.
        assert!(reduced
            .graph
            .statements()
            .iter()
            .all(|s| s.qualifiers.is_empty()));
        // The permissive variant keeps the original statements.
        assert!(visited.graph.contains(&s7));
        assert!(visited.graph.contains(&s8));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_value() -> impl Strategy<Value = Value> {
            prop_oneof![
                (1u32..=6).prop_map(|n| Value::Entity(EntityId::item(n))),
                (1i64..=2).prop_map(year),
            ]
        }

        fn arb_graph() -> impl Strategy<Value = WikibaseGraph> {
            prop::collection::vec(
                (
                    1u32..=6,
                    1u32..=3,
                    arb_value(),
                    prop::collection::vec(
                        ((4u32..=5).prop_map(EntityId::property), arb_value()),
                        0..2,
                    ),
                ),
                0..10,
            )
            .prop_map(|rows| {
                WikibaseGraph::from_statements(rows.into_iter().map(|(s, p, v, qs)| {
                    Statement::with_qualifiers(EntityId::item(s), EntityId::property(p), v, qs)
                }))
            })
        }

        /// Random small schemas over labels A–D: value sets, any-value, and
        /// open shapes with reference-bearing constraints.
        fn arb_schema() -> impl Strategy<Value = WShExSchema> {
            let labels = ["A", "B", "C", "D"];
            let arb_vc = prop_oneof![
                Just(ValueCheck::Any),
                (0usize..4).prop_map(|i| ValueCheck::Ref(ShapeLabel::new(["A", "B", "C", "D"][i]))),
            ];
            let arb_tc =
                (1u32..=3, arb_vc, prop::option::of(0usize..=2)).prop_map(|(p, vc, card)| {
                    let tc = TripleExpr::Constraint(TripleConstraint {
                        property: EntityId::property(p),
                        value: vc,
                        qualifiers: QualifierSpec::open_empty(),
                    });
                    match card {
                        None => tc,
                        Some(0) => TripleExpr::OneOf(Box::new(tc), Box::new(TripleExpr::Empty)),
                        Some(_) => TripleExpr::star(tc),
                    }
                });
            let arb_expr = prop_oneof![
                3 => prop::collection::vec(arb_tc, 1..=3)
                    .prop_map(|tcs| ShapeExpr::open(TripleExpr::each_of_all(tcs))),
                1 => prop::collection::btree_set((1u32..=6).prop_map(|n| Value::Entity(EntityId::item(n))), 1..3)
                    .prop_map(ShapeExpr::value_set),
            ];
            prop::collection::vec(arb_expr, 4).prop_map(move |exprs| {
                let decls = labels
                    .iter()
                    .zip(exprs)
                    .map(|(l, e)| (ShapeLabel::new(*l), e))
                    .collect();
                WShExSchema::new(decls, None, Default::default()).unwrap()
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn slurp_agrees_with_plain_conformance(
                g in arb_graph(),
                schema in arb_schema(),
            ) {
                let tau = maximal_assignment(&g, &schema);
                for n in g.entity_nodes() {
                    for l in schema.labels() {
                        let v = Value::Entity(*n);
                        let se = ShapeExpr::Ref(l.clone());
                        let plain = conforms(&g, &v, &se, &tau, &schema);
                        let r = conforms_slurp(&g, &v, &tau, &se, &schema);
                        prop_assert_eq!(plain, r.conforms, "node {} label {}", n, l);
                        if r.conforms {
                            // Every slurped statement is a source statement
                            // up to qualifier reduction.
                            for st in &r.slurped.statements {
                                let matched = g.statements().iter().any(|orig| {
                                    orig.subject == st.subject
                                        && orig.property == st.property
                                        && orig.value == st.value
                                        && st.qualifiers.is_subset(&orig.qualifiers)
                                });
                                prop_assert!(matched, "slurped {} not in source", st);
                            }
                        } else {
                            prop_assert!(r.slurped.nodes.is_empty());
                            prop_assert!(r.slurped.statements.is_empty());
                        }
                    }
                }
            }

            #[test]
            fn subset_contains_each_conforming_slurp(
                g in arb_graph(),
                schema in arb_schema(),
            ) {
                let tau = maximal_assignment(&g, &schema);
                let start = ShapeLabel::new("A");
                let out =
                    slurp_subset(&g, &schema, std::slice::from_ref(&start), SlurpOptions::default())
                        .unwrap();
                for n in g.entity_nodes() {
                    let r = conforms_slurp(
                        &g,
                        &Value::Entity(*n),
                        &tau,
                        &ShapeExpr::Ref(start.clone()),
                        &schema,
                    );
                    if r.conforms {
                        for st in &r.slurped.statements {
                            prop_assert!(out.graph.contains(st));
                        }
                        for nd in r.slurped.entity_nodes() {
                            prop_assert!(out.nodes.contains(&nd));
                        }
                    }
                }
            }
        }
    }
}
