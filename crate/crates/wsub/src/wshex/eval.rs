//! Recursive conformance checking and maximal shape assignments.
//!
//! A shape assignment pairs entity nodes with shape labels. Conformance of a
//! node against a shape expression is checked structurally; references from
//! triple constraints consult the assignment for entity values and are
//! evaluated directly for data values (which have no neighborhood of their
//! own). The maximal assignment is the greatest fixpoint of the conformance
//! operator, computed by downward refinement from the full relation.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rayon::prelude::*;

use crate::rbe::{matches, Bag, Rbe};
use crate::wgraph::{EntityId, QualifierSet, Statement, Value, WikibaseGraph};

use super::ast::{
    PropertySpec, QualifierSpec, Shape, ShapeExpr, ShapeLabel, TripleConstraint, TripleExpr,
    ValueCheck, WShExSchema,
};

/// A set of (entity node, shape label) pairs.
pub type ShapeAssignment = BTreeSet<(EntityId, ShapeLabel)>;

/// Source of entity neighborhoods for the evaluator.
pub(crate) trait Neighs {
    fn neighs(&self, e: EntityId) -> &[Statement];
}

impl Neighs for WikibaseGraph {
    fn neighs(&self, e: EntityId) -> &[Statement] {
        WikibaseGraph::neighs(self, e)
    }
}

/// A single entity's statements, with every other entity treated as having
/// an empty neighborhood. Used to evaluate one streamed document at a time.
pub(crate) struct SliceNeighs<'a> {
    pub subject: EntityId,
    pub stmts: &'a [Statement],
}

impl Neighs for SliceNeighs<'_> {
    fn neighs(&self, e: EntityId) -> &[Statement] {
        if e == self.subject {
            self.stmts
        } else {
            &[]
        }
    }
}

/// Evaluation context. With `tau: Some(_)`, references on entity values are
/// answered from the assignment; with `tau: None`, they are expanded
/// structurally (only safe for schemas whose references cannot cross
/// entities, such as reference-erased ones).
pub(crate) struct Evaluator<'a, N: Neighs> {
    pub schema: &'a WShExSchema,
    pub tau: Option<&'a ShapeAssignment>,
    pub src: &'a N,
}

impl<N: Neighs> Evaluator<'_, N> {
    pub(crate) fn eval_se(&self, v: &Value, se: &ShapeExpr) -> bool {
        match se {
            ShapeExpr::Cond(c) => c.eval(v),
            ShapeExpr::And(a, b) => self.eval_se(v, a) && self.eval_se(v, b),
            ShapeExpr::Ref(l) => self.eval_ref(v, l),
            ShapeExpr::Shape(s) => self.eval_shape(v, s),
        }
    }

    pub(crate) fn eval_ref(&self, v: &Value, l: &ShapeLabel) -> bool {
        match (v, self.tau) {
            (Value::Entity(e), Some(tau)) => tau.contains(&(*e, l.clone())),
            _ => self.eval_se(v, self.schema.delta(l)),
        }
    }

    fn eval_shape(&self, v: &Value, s: &Shape) -> bool {
        let stmts: &[Statement] = match v {
            Value::Entity(e) => self.src.neighs(*e),
            Value::Data(_) => &[],
        };
        self.eval_te_on(&s.expr, stmts, s.closed)
    }

    /// Whether the triple expression consumes the neighborhood: all of it
    /// when the shape is closed, otherwise the statements whose property
    /// occurs in the expression.
    pub(crate) fn eval_te_on(&self, te: &TripleExpr, stmts: &[Statement], closed: bool) -> bool {
        let selected: Vec<&Statement> = if closed {
            stmts.iter().collect()
        } else {
            let preds = te.preds();
            stmts
                .iter()
                .filter(|st| preds.contains(&st.property))
                .collect()
        };
        let mut occs = Vec::new();
        let rbe = compile_te(te, &mut occs);
        assignment_matches(&selected, occs.len(), &rbe, |st, i| {
            self.tc_accepts(occs[i], st)
        })
    }

    pub(crate) fn tc_accepts(&self, tc: &TripleConstraint, st: &Statement) -> bool {
        st.property == tc.property
            && self.check_value(&st.value, &tc.value)
            && self.check_qualifiers(&st.qualifiers, &tc.qualifiers)
    }

    pub(crate) fn check_value(&self, v: &Value, vc: &ValueCheck) -> bool {
        match vc {
            ValueCheck::Any => true,
            ValueCheck::Ref(l) => self.eval_ref(v, l),
        }
    }

    /// Whether the qualifier set satisfies the spec: a closed spec must
    /// consume every pair, an open one every pair whose property the spec
    /// mentions (the rest are ignored).
    pub(crate) fn check_qualifiers(&self, qs: &QualifierSet, spec: &QualifierSpec) -> bool {
        let pairs: Vec<&(EntityId, Value)> = if spec.closed {
            qs.iter().collect()
        } else {
            let props = spec.spec.props();
            qs.iter().filter(|(p, _)| props.contains(p)).collect()
        };
        let mut occs = Vec::new();
        let rbe = compile_ps(&spec.spec, &mut occs);
        assignment_matches(&pairs, occs.len(), &rbe, |(p, v), i| {
            let (op, ovc) = occs[i];
            *p == *op && self.check_value(v, ovc)
        })
    }
}

/// Flatten a triple expression into its constraint occurrences (in syntactic
/// order) and a bag expression over their indices.
pub(crate) fn compile_te<'a>(
    te: &'a TripleExpr,
    occs: &mut Vec<&'a TripleConstraint>,
) -> Rbe<usize> {
    match te {
        TripleExpr::Empty => Rbe::Empty,
        TripleExpr::Constraint(tc) => {
            occs.push(tc);
            Rbe::symbol(occs.len() - 1)
        }
        TripleExpr::EachOf(a, b) => {
            let ra = compile_te(a, occs);
            let rb = compile_te(b, occs);
            Rbe::seq(ra, rb)
        }
        TripleExpr::OneOf(a, b) => {
            let ra = compile_te(a, occs);
            let rb = compile_te(b, occs);
            Rbe::or(ra, rb)
        }
        TripleExpr::Star(a) => {
            let ra = compile_te(a, occs);
            Rbe::star(ra)
        }
    }
}

/// Same flattening for qualifier property specs.
pub(crate) fn compile_ps<'a>(
    ps: &'a PropertySpec,
    occs: &mut Vec<(&'a EntityId, &'a ValueCheck)>,
) -> Rbe<usize> {
    match ps {
        PropertySpec::Empty => Rbe::Empty,
        PropertySpec::Constraint(p, vc) => {
            occs.push((p, vc));
            Rbe::symbol(occs.len() - 1)
        }
        PropertySpec::EachOf(a, b) => {
            let ra = compile_ps(a, occs);
            let rb = compile_ps(b, occs);
            Rbe::seq(ra, rb)
        }
        PropertySpec::OneOf(a, b) => {
            let ra = compile_ps(a, occs);
            let rb = compile_ps(b, occs);
            Rbe::or(ra, rb)
        }
        PropertySpec::Star(a) => {
            let ra = compile_ps(a, occs);
            Rbe::star(ra)
        }
    }
}

/// Whether some assignment of items to accepting occurrences yields an
/// occurrence bag in the expression's language. Items with identical
/// candidate sets are interchangeable, so the search runs over count
/// distributions per candidate-set group rather than per item.
pub(crate) fn assignment_matches<T: ?Sized>(
    items: &[&T],
    n_occs: usize,
    rbe: &Rbe<usize>,
    accepts: impl Fn(&T, usize) -> bool,
) -> bool {
    let mut groups: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    for item in items {
        let cands: Vec<usize> = (0..n_occs).filter(|&i| accepts(item, i)).collect();
        if cands.is_empty() {
            return false;
        }
        *groups.entry(cands).or_insert(0) += 1;
    }
    let groups: Vec<(Vec<usize>, usize)> = groups.into_iter().collect();
    let mut seen: HashSet<(usize, Bag<usize>)> = HashSet::new();
    search(&groups, 0, &Bag::new(), rbe, &mut seen)
}

fn search(
    groups: &[(Vec<usize>, usize)],
    idx: usize,
    bag: &Bag<usize>,
    rbe: &Rbe<usize>,
    seen: &mut HashSet<(usize, Bag<usize>)>,
) -> bool {
    if !seen.insert((idx, bag.clone())) {
        return false;
    }
    match groups.get(idx) {
        None => matches(bag, rbe),
        Some((cands, count)) => distribute(cands, *count, bag, &mut |next| {
            search(groups, idx + 1, next, rbe, seen)
        }),
    }
}

/// Enumerate all ways to split `count` items over the candidate occurrences,
/// calling `next` with the bag extended by each distribution.
fn distribute(
    cands: &[usize],
    count: usize,
    bag: &Bag<usize>,
    next: &mut impl FnMut(&Bag<usize>) -> bool,
) -> bool {
    match cands {
        [] => count == 0 && next(bag),
        [last] => {
            let mut b = bag.clone();
            b.insert(*last, count);
            next(&b)
        }
        [first, rest @ ..] => {
            for take in 0..=count {
                let mut b = bag.clone();
                b.insert(*first, take);
                if distribute(rest, count - take, &b, next) {
                    return true;
                }
            }
            false
        }
    }
}

/// Whether `v` conforms to the shape expression under the given assignment.
pub fn conforms(
    g: &WikibaseGraph,
    v: &Value,
    se: &ShapeExpr,
    tau: &ShapeAssignment,
    schema: &WShExSchema,
) -> bool {
    Evaluator {
        schema,
        tau: Some(tau),
        src: g,
    }
    .eval_se(v, se)
}

/// The maximal shape assignment: the greatest fixpoint of conformance over
/// entity nodes × labels, computed by refining downward from the full
/// relation until no pair drops out.
pub fn maximal_assignment(g: &WikibaseGraph, schema: &WShExSchema) -> ShapeAssignment {
    let mut tau: ShapeAssignment = g
        .entity_nodes()
        .iter()
        .flat_map(|e| schema.labels().iter().map(move |l| (*e, l.clone())))
        .collect();
    loop {
        let next: ShapeAssignment = tau
            .par_iter()
            .filter(|(e, l)| {
                let ev = Evaluator {
                    schema,
                    tau: Some(&tau),
                    src: g,
                };
                ev.eval_se(&Value::Entity(*e), schema.delta(l))
            })
            .cloned()
            .collect();
        if next == tau {
            return tau;
        }
        tau = next;
    }
}

/// Whether the node conforms to the label under the maximal assignment.
pub fn validate_node(
    g: &WikibaseGraph,
    node: EntityId,
    label: &ShapeLabel,
    schema: &WShExSchema,
) -> bool {
    maximal_assignment(g, schema).contains(&(node, label.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wgraph::DataValue;
    use crate::wshex::parser::parse_schema;

    fn q(n: u32) -> EntityId {
        EntityId::item(n)
    }
    fn p(n: u32) -> EntityId {
        EntityId::property(n)
    }

    fn tau_of(g: &WikibaseGraph, schema: &WShExSchema) -> ShapeAssignment {
        maximal_assignment(g, schema)
    }

    #[test]
    fn value_set_and_datatype_conformance() {
        let schema = parse_schema("<H> [ Q5 ]\n<D> xsd:date").unwrap();
        let g = WikibaseGraph::from_statements([Statement::new(q(1), p(31), q(5))]);
        let tau = tau_of(&g, &schema);
        // Q5 occurs as a value node and conforms to its own value set.
        assert!(tau.contains(&(q(5), ShapeLabel::new("H"))));
        assert!(!tau.contains(&(q(1), ShapeLabel::new("H"))));
        // Data values are checked directly, not through the assignment.
        let ev = Evaluator {
            schema: &schema,
            tau: Some(&tau),
            src: &g,
        };
        assert!(ev.eval_ref(&Value::Data(DataValue::year(1955)), &ShapeLabel::new("D")));
        assert!(!ev.eval_ref(&Value::Data(DataValue::string("x")), &ShapeLabel::new("D")));
    }

    #[test]
    fn open_shape_ignores_unmentioned_properties() {
        let schema = parse_schema("<S> { P31 @<H> }\n<H> [ Q5 ]").unwrap();
        let g = WikibaseGraph::from_statements([
            Statement::new(q(1), p(31), q(5)),
            Statement::new(q(1), p(17), q(145)),
        ]);
        let tau = tau_of(&g, &schema);
        assert!(tau.contains(&(q(1), ShapeLabel::new("S"))));
    }

    #[test]
    fn closed_shape_rejects_unmentioned_properties() {
        let schema = parse_schema("<S> CLOSED { P31 @<H> }\n<H> [ Q5 ]").unwrap();
        let g = WikibaseGraph::from_statements([
            Statement::new(q(1), p(31), q(5)),
            Statement::new(q(1), p(17), q(145)),
        ]);
        let tau = tau_of(&g, &schema);
        assert!(!tau.contains(&(q(1), ShapeLabel::new("S"))));
        // Without the extra statement the closed shape passes.
        let g2 = WikibaseGraph::from_statements([Statement::new(q(1), p(31), q(5))]);
        assert!(tau_of(&g2, &schema).contains(&(q(1), ShapeLabel::new("S"))));
    }

    #[test]
    fn repeated_property_requires_exact_multiplicity() {
        // One occurrence of P31 consumes exactly one matching statement.
        let schema = parse_schema("<S> { P31 @<H> }\n<H> [ Q5 Q6 ]").unwrap();
        let g = WikibaseGraph::from_statements([
            Statement::new(q(1), p(31), q(5)),
            Statement::new(q(1), p(31), q(6)),
        ]);
        assert!(!tau_of(&g, &schema).contains(&(q(1), ShapeLabel::new("S"))));
        let plus = parse_schema("<S> { P31 @<H> + }\n<H> [ Q5 Q6 ]").unwrap();
        assert!(tau_of(&g, &plus).contains(&(q(1), ShapeLabel::new("S"))));
    }

    #[test]
    fn open_qualifier_spec_ignores_other_qualifier_properties() {
        let schema =
            parse_schema("<S> { P108 @<O> {{ P580 @<D> }} }\n<O> { }\n<D> xsd:date").unwrap();
        let st = Statement::with_qualifiers(
            q(1),
            p(108),
            q(2),
            [
                (p(580), Value::Data(DataValue::year(1980))),
                (p(582), Value::Data(DataValue::year(1994))),
            ],
        );
        let g = WikibaseGraph::from_statements([st]);
        assert!(tau_of(&g, &schema).contains(&(q(1), ShapeLabel::new("S"))));
    }

    #[test]
    fn closed_qualifier_spec_rejects_other_qualifier_properties() {
        let schema =
            parse_schema("<S> { P108 @<O> [[ P580 @<D> ]] }\n<O> { }\n<D> xsd:date").unwrap();
        let st = Statement::with_qualifiers(
            q(1),
            p(108),
            q(2),
            [
                (p(580), Value::Data(DataValue::year(1980))),
                (p(582), Value::Data(DataValue::year(1994))),
            ],
        );
        let g = WikibaseGraph::from_statements([st]);
        assert!(!tau_of(&g, &schema).contains(&(q(1), ShapeLabel::new("S"))));
        let only_start = Statement::with_qualifiers(
            q(1),
            p(108),
            q(2),
            [(p(580), Value::Data(DataValue::year(1980)))],
        );
        let g2 = WikibaseGraph::from_statements([only_start]);
        assert!(tau_of(&g2, &schema).contains(&(q(1), ShapeLabel::new("S"))));
    }

    #[test]
    fn closed_empty_qualifier_spec_requires_no_qualifiers() {
        let schema = parse_schema("<S> { P108 @<O> [[ ]] }\n<O> { }").unwrap();
        let plain = Statement::new(q(1), p(108), q(2));
        let g = WikibaseGraph::from_statements([plain]);
        assert!(tau_of(&g, &schema).contains(&(q(1), ShapeLabel::new("S"))));
        let with_q = Statement::with_qualifiers(
            q(1),
            p(108),
            q(2),
            [(p(580), Value::Data(DataValue::year(1980)))],
        );
        let g2 = WikibaseGraph::from_statements([with_q]);
        assert!(!tau_of(&g2, &schema).contains(&(q(1), ShapeLabel::new("S"))));
    }

    #[test]
    fn one_of_accepts_either_branch_but_not_both() {
        let schema = parse_schema("<S> { P1 @<A> | P2 @<A> }\n<A> { }").unwrap();
        let s = ShapeLabel::new("S");
        let g1 = WikibaseGraph::from_statements([Statement::new(q(1), p(1), q(9))]);
        assert!(tau_of(&g1, &schema).contains(&(q(1), s.clone())));
        let g2 = WikibaseGraph::from_statements([Statement::new(q(1), p(2), q(9))]);
        assert!(tau_of(&g2, &schema).contains(&(q(1), s.clone())));
        let g3 = WikibaseGraph::from_statements([
            Statement::new(q(1), p(1), q(9)),
            Statement::new(q(1), p(2), q(9)),
        ]);
        assert!(!tau_of(&g3, &schema).contains(&(q(1), s)));
    }

    #[test]
    fn star_of_each_of_needs_balanced_counts() {
        let te = TripleExpr::star(TripleExpr::each_of(
            TripleExpr::Constraint(TripleConstraint::any(p(1))),
            TripleExpr::Constraint(TripleConstraint::any(p(2))),
        ));
        let schema = parse_schema("<X> { }").unwrap();
        let balanced = WikibaseGraph::from_statements([
            Statement::new(q(1), p(1), q(7)),
            Statement::new(q(1), p(1), q(8)),
            Statement::new(q(1), p(2), q(7)),
            Statement::new(q(1), p(2), q(8)),
        ]);
        let tau = ShapeAssignment::new();
        let ev = Evaluator {
            schema: &schema,
            tau: Some(&tau),
            src: &balanced,
        };
        assert!(ev.eval_te_on(&te, balanced.neighs(q(1)), false));
        let lopsided = WikibaseGraph::from_statements([
            Statement::new(q(1), p(1), q(7)),
            Statement::new(q(1), p(1), q(8)),
            Statement::new(q(1), p(2), q(7)),
        ]);
        let ev2 = Evaluator {
            schema: &schema,
            tau: Some(&tau),
            src: &lopsided,
        };
        assert!(!ev2.eval_te_on(&te, lopsided.neighs(q(1)), false));
    }

    #[test]
    fn ambiguous_statements_find_a_valid_split() {
        // Both statements satisfy both occurrences; the split must still
        // give one statement to each.
        let schema =
            parse_schema("<S> { P1 @<A> ; P1 @<B> }\n<A> [ Q7 Q8 ]\n<B> [ Q7 Q8 ]").unwrap();
        let g = WikibaseGraph::from_statements([
            Statement::new(q(1), p(1), q(7)),
            Statement::new(q(1), p(1), q(8)),
        ]);
        assert!(tau_of(&g, &schema).contains(&(q(1), ShapeLabel::new("S"))));
        // Three statements overflow the two occurrences.
        let g3 = WikibaseGraph::from_statements([
            Statement::new(q(1), p(1), q(7)),
            Statement::new(q(1), p(1), q(8)),
            Statement::with_qualifiers(q(1), p(1), q(7), [(p(9), Value::Entity(q(7)))]),
        ]);
        assert!(!tau_of(&g3, &schema).contains(&(q(1), ShapeLabel::new("S"))));
    }

    #[test]
    fn greatest_fixpoint_keeps_cycles_and_drops_chains() {
        let schema = parse_schema("<A> { P1 @<A> }").unwrap();
        let a = ShapeLabel::new("A");
        // A two-cycle supports itself.
        let cycle = WikibaseGraph::from_statements([
            Statement::new(q(1), p(1), q(2)),
            Statement::new(q(2), p(1), q(1)),
        ]);
        let tau = tau_of(&cycle, &schema);
        assert!(tau.contains(&(q(1), a.clone())));
        assert!(tau.contains(&(q(2), a.clone())));
        // A chain collapses: the sink fails, then its predecessor.
        let chain = WikibaseGraph::from_statements([Statement::new(q(1), p(1), q(2))]);
        assert!(tau_of(&chain, &schema).is_empty());
    }

    #[test]
    fn and_combines_value_set_with_shape() {
        let schema = parse_schema("<S> [ Q1 Q2 ] AND { P1 @<T> }\n<T> { }").unwrap();
        let s = ShapeLabel::new("S");
        let g = WikibaseGraph::from_statements([
            Statement::new(q(1), p(1), q(9)),
            Statement::new(q(3), p(1), q(9)),
        ]);
        let tau = tau_of(&g, &schema);
        assert!(tau.contains(&(q(1), s.clone())));
        assert!(!tau.contains(&(q(3), s)));
    }

    #[test]
    fn empty_te_closed_requires_empty_neighborhood() {
        let schema = parse_schema("<E> CLOSED { }\n<O> { }").unwrap();
        let g = WikibaseGraph::from_statements([Statement::new(q(1), p(1), q(2))]);
        let tau = tau_of(&g, &schema);
        assert!(!tau.contains(&(q(1), ShapeLabel::new("E"))));
        assert!(tau.contains(&(q(2), ShapeLabel::new("E"))));
        // The open empty shape accepts every node.
        assert!(tau.contains(&(q(1), ShapeLabel::new("O"))));
        assert!(tau.contains(&(q(2), ShapeLabel::new("O"))));
    }

    mod partition_equivalence {
        //! The grouped candidate-bag search must agree with the raw
        //! partition semantics of triple expressions.

        use super::*;
        use proptest::prelude::*;

        fn oracle<N: Neighs>(ev: &Evaluator<'_, N>, te: &TripleExpr, stmts: &[&Statement]) -> bool {
            match te {
                TripleExpr::Empty => stmts.is_empty(),
                TripleExpr::Constraint(tc) => stmts.len() == 1 && ev.tc_accepts(tc, stmts[0]),
                TripleExpr::OneOf(a, b) => oracle(ev, a, stmts) || oracle(ev, b, stmts),
                TripleExpr::EachOf(a, b) => {
                    let n = stmts.len();
                    (0..(1u32 << n)).any(|mask| {
                        let mut left: Vec<&Statement> = Vec::new();
                        let mut right: Vec<&Statement> = Vec::new();
                        for (i, st) in stmts.iter().enumerate() {
                            if mask & (1 << i) != 0 {
                                left.push(st);
                            } else {
                                right.push(st);
                            }
                        }
                        oracle(ev, a, &left) && oracle(ev, b, &right)
                    })
                }
                TripleExpr::Star(a) => {
                    if stmts.is_empty() {
                        return true;
                    }
                    let n = stmts.len();
                    // The first statement anchors the head group.
                    (0..(1u32 << (n - 1))).any(|mask| {
                        let mut head: Vec<&Statement> = vec![stmts[0]];
                        let mut rest: Vec<&Statement> = Vec::new();
                        for (i, st) in stmts.iter().enumerate().skip(1) {
                            if mask & (1 << (i - 1)) != 0 {
                                head.push(st);
                            } else {
                                rest.push(st);
                            }
                        }
                        oracle(ev, a, &head) && oracle(ev, te, &rest)
                    })
                }
            }
        }

        fn arb_te() -> impl Strategy<Value = TripleExpr> {
            let leaf = prop_oneof![
                Just(TripleExpr::Empty),
                (1u32..=3, 0usize..=2).prop_map(|(prop, vc)| {
                    let value = match vc {
                        0 => ValueCheck::Any,
                        1 => ValueCheck::Ref(ShapeLabel::new("A")),
                        _ => ValueCheck::Ref(ShapeLabel::new("B")),
                    };
                    TripleExpr::Constraint(TripleConstraint {
                        property: EntityId::property(prop),
                        value,
                        qualifiers: QualifierSpec::open_empty(),
                    })
                }),
            ];
            leaf.prop_recursive(3, 16, 2, |inner| {
                prop_oneof![
                    (inner.clone(), inner.clone()).prop_map(|(a, b)| TripleExpr::each_of(a, b)),
                    (inner.clone(), inner.clone()).prop_map(|(a, b)| TripleExpr::one_of(a, b)),
                    inner.prop_map(TripleExpr::star),
                ]
            })
        }

        fn arb_stmts() -> impl Strategy<Value = Vec<Statement>> {
            prop::collection::vec((1u32..=3, 7u32..=8), 0..=5).prop_map(|pairs| {
                pairs
                    .into_iter()
                    .map(|(prop, val)| {
                        Statement::new(
                            EntityId::item(1),
                            EntityId::property(prop),
                            EntityId::item(val),
                        )
                    })
                    .collect()
            })
        }

        proptest! {
            #[test]
            fn grouped_search_matches_partition_semantics(
                te in arb_te(),
                stmts in arb_stmts(),
            ) {
                let schema = parse_schema("<A> [ Q7 ]\n<B> [ Q7 Q8 ]").unwrap();
                let g = WikibaseGraph::from_statements([]);
                // Assignment consistent with the value sets, so reference
                // checks discriminate between values.
                let tau: ShapeAssignment = [
                    (EntityId::item(7), ShapeLabel::new("A")),
                    (EntityId::item(7), ShapeLabel::new("B")),
                    (EntityId::item(8), ShapeLabel::new("B")),
                ]
                .into_iter()
                .collect();
                let ev = Evaluator { schema: &schema, tau: Some(&tau), src: &g };
                // Deduplicate: the graph itself stores statement sets, so
                // feed the evaluator a set as well.
                let set: BTreeSet<Statement> = stmts.into_iter().collect();
                let stmts: Vec<Statement> = set.into_iter().collect();
                let refs: Vec<&Statement> = stmts.iter().collect();
                let mut occs = Vec::new();
                let rbe = compile_te(&te, &mut occs);
                let fast = assignment_matches(&refs, occs.len(), &rbe, |st, i| {
                    ev.tc_accepts(occs[i], st)
                });
                let slow = oracle(&ev, &te, &refs);
                prop_assert_eq!(fast, slow);
            }
        }
    }
}
