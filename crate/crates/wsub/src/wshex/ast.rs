//! Schema abstract syntax: shape labels, node constraints, shape
//! expressions, triple expressions, and qualifier specifiers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::rbe::Kleene;
use crate::wgraph::{Datatype, EntityId, Value};

/// A schema-scoped shape name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ShapeLabel(String);

impl ShapeLabel {
    pub fn new(name: impl Into<String>) -> Self {
        let name = name.into();
        assert!(!name.is_empty(), "shape labels must be non-empty");
        ShapeLabel(name)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ShapeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ShapeLabel {
    fn from(s: &str) -> Self {
        ShapeLabel::new(s)
    }
}

/// Value-level condition evaluated without graph traversal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeConstraint {
    AnyValue,
    ValueSet(BTreeSet<Value>),
    Datatype(Datatype),
}

impl NodeConstraint {
    /// Evaluate the condition on a value. `date` constraints also accept
    /// `year` literals: a year is a date at year precision, and the same
    /// literal must satisfy both schema datatype checks and year-typed
    /// matcher literals.
    pub fn eval(&self, v: &Value) -> bool {
        match self {
            NodeConstraint::AnyValue => true,
            NodeConstraint::ValueSet(vs) => vs.contains(v),
            NodeConstraint::Datatype(dt) => match v {
                Value::Entity(_) => false,
                Value::Data(d) => {
                    d.datatype() == *dt || (*dt == Datatype::Date && d.datatype() == Datatype::Year)
                }
            },
        }
    }
}

/// The check applied to a statement's value inside a triple constraint:
/// either a shape reference or an always-true check (the result of reference
/// erasure, written `.` in the compact syntax).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ValueCheck {
    Ref(ShapeLabel),
    Any,
}

impl ValueCheck {
    pub fn label(&self) -> Option<&ShapeLabel> {
        match self {
            ValueCheck::Ref(l) => Some(l),
            ValueCheck::Any => None,
        }
    }
}

/// Property specifier inside a qualifier spec: the same regular operators as
/// triple expressions, over (property, value-check) constraints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PropertySpec {
    EachOf(Box<PropertySpec>, Box<PropertySpec>),
    OneOf(Box<PropertySpec>, Box<PropertySpec>),
    Star(Box<PropertySpec>),
    Empty,
    Constraint(EntityId, ValueCheck),
}

impl PropertySpec {
    pub fn each_of(a: PropertySpec, b: PropertySpec) -> Self {
        PropertySpec::EachOf(Box::new(a), Box::new(b))
    }

    pub fn one_of(a: PropertySpec, b: PropertySpec) -> Self {
        PropertySpec::OneOf(Box::new(a), Box::new(b))
    }

    pub fn star(a: PropertySpec) -> Self {
        PropertySpec::Star(Box::new(a))
    }

    pub fn constraint(p: EntityId, l: impl Into<ShapeLabel>) -> Self {
        PropertySpec::Constraint(p, ValueCheck::Ref(l.into()))
    }

    /// Properties mentioned anywhere in the specifier.
    pub fn props(&self) -> BTreeSet<EntityId> {
        let mut out = BTreeSet::new();
        self.collect_props(&mut out);
        out
    }

    /// All (property, value check) constraints, in syntactic order.
    pub fn constraints(&self) -> Vec<(&EntityId, &ValueCheck)> {
        let mut out = Vec::new();
        self.collect_constraints(&mut out);
        out
    }

    fn collect_constraints<'a>(&'a self, out: &mut Vec<(&'a EntityId, &'a ValueCheck)>) {
        match self {
            PropertySpec::EachOf(a, b) | PropertySpec::OneOf(a, b) => {
                a.collect_constraints(out);
                b.collect_constraints(out);
            }
            PropertySpec::Star(a) => a.collect_constraints(out),
            PropertySpec::Empty => {}
            PropertySpec::Constraint(p, vc) => out.push((p, vc)),
        }
    }

    fn collect_props(&self, out: &mut BTreeSet<EntityId>) {
        match self {
            PropertySpec::EachOf(a, b) | PropertySpec::OneOf(a, b) => {
                a.collect_props(out);
                b.collect_props(out);
            }
            PropertySpec::Star(a) => a.collect_props(out),
            PropertySpec::Empty => {}
            PropertySpec::Constraint(p, _) => {
                out.insert(*p);
            }
        }
    }

    fn collect_refs<'a>(&'a self, out: &mut Vec<&'a ShapeLabel>) {
        match self {
            PropertySpec::EachOf(a, b) | PropertySpec::OneOf(a, b) => {
                a.collect_refs(out);
                b.collect_refs(out);
            }
            PropertySpec::Star(a) => a.collect_refs(out),
            PropertySpec::Empty => {}
            PropertySpec::Constraint(_, check) => {
                if let ValueCheck::Ref(l) = check {
                    out.push(l);
                }
            }
        }
    }
}

/// Qualifier specifier: open filters the qualifier set down to the
/// specifier's properties before matching; closed matches the whole set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QualifierSpec {
    pub closed: bool,
    pub spec: PropertySpec,
}

impl QualifierSpec {
    /// The default spec on constraints written without one: open over the
    /// empty specifier, which filters every pair away and accepts.
    pub fn open_empty() -> Self {
        QualifierSpec {
            closed: false,
            spec: PropertySpec::Empty,
        }
    }

    pub fn open(spec: PropertySpec) -> Self {
        QualifierSpec {
            closed: false,
            spec,
        }
    }

    pub fn closed(spec: PropertySpec) -> Self {
        QualifierSpec { closed: true, spec }
    }

    pub fn is_open_empty(&self) -> bool {
        !self.closed && matches!(self.spec, PropertySpec::Empty)
    }
}

/// One triple constraint: property, value check, qualifier spec.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripleConstraint {
    pub property: EntityId,
    pub value: ValueCheck,
    pub qualifiers: QualifierSpec,
}

impl TripleConstraint {
    pub fn new(property: EntityId, label: impl Into<ShapeLabel>) -> Self {
        TripleConstraint {
            property,
            value: ValueCheck::Ref(label.into()),
            qualifiers: QualifierSpec::open_empty(),
        }
    }

    pub fn any(property: EntityId) -> Self {
        TripleConstraint {
            property,
            value: ValueCheck::Any,
            qualifiers: QualifierSpec::open_empty(),
        }
    }

    pub fn with_qualifiers(mut self, qs: QualifierSpec) -> Self {
        self.qualifiers = qs;
        self
    }
}

/// Triple expression: regular operators over triple constraints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TripleExpr {
    EachOf(Box<TripleExpr>, Box<TripleExpr>),
    OneOf(Box<TripleExpr>, Box<TripleExpr>),
    Star(Box<TripleExpr>),
    Empty,
    Constraint(TripleConstraint),
}

impl TripleExpr {
    pub fn each_of(a: TripleExpr, b: TripleExpr) -> Self {
        TripleExpr::EachOf(Box::new(a), Box::new(b))
    }

    pub fn one_of(a: TripleExpr, b: TripleExpr) -> Self {
        TripleExpr::OneOf(Box::new(a), Box::new(b))
    }

    pub fn star(a: TripleExpr) -> Self {
        TripleExpr::Star(Box::new(a))
    }

    pub fn each_of_all(items: impl IntoIterator<Item = TripleExpr>) -> Self {
        let mut items: Vec<_> = items.into_iter().collect();
        match items.pop() {
            None => TripleExpr::Empty,
            Some(last) => items
                .into_iter()
                .rev()
                .fold(last, |acc, e| TripleExpr::each_of(e, acc)),
        }
    }

    /// Properties mentioned by the expression's constraints.
    pub fn preds(&self) -> BTreeSet<EntityId> {
        let mut out = BTreeSet::new();
        self.collect_preds(&mut out);
        out
    }

    fn collect_preds(&self, out: &mut BTreeSet<EntityId>) {
        match self {
            TripleExpr::EachOf(a, b) | TripleExpr::OneOf(a, b) => {
                a.collect_preds(out);
                b.collect_preds(out);
            }
            TripleExpr::Star(a) => a.collect_preds(out),
            TripleExpr::Empty => {}
            TripleExpr::Constraint(tc) => {
                out.insert(tc.property);
            }
        }
    }

    /// All constraints in the expression, in syntactic order.
    pub fn constraints(&self) -> Vec<&TripleConstraint> {
        let mut out = Vec::new();
        self.collect_constraints(&mut out);
        out
    }

    fn collect_constraints<'a>(&'a self, out: &mut Vec<&'a TripleConstraint>) {
        match self {
            TripleExpr::EachOf(a, b) | TripleExpr::OneOf(a, b) => {
                a.collect_constraints(out);
                b.collect_constraints(out);
            }
            TripleExpr::Star(a) => a.collect_constraints(out),
            TripleExpr::Empty => {}
            TripleExpr::Constraint(tc) => out.push(tc),
        }
    }

    fn collect_refs<'a>(&'a self, out: &mut Vec<&'a ShapeLabel>) {
        for tc in self.constraints() {
            if let ValueCheck::Ref(l) = &tc.value {
                out.push(l);
            }
            tc.qualifiers.spec.collect_refs(out);
        }
    }
}

impl Kleene for TripleExpr {
    fn empty() -> Self {
        TripleExpr::Empty
    }

    fn alt(a: Self, b: Self) -> Self {
        TripleExpr::one_of(a, b)
    }

    fn then(a: Self, b: Self) -> Self {
        TripleExpr::each_of(a, b)
    }

    fn many(a: Self) -> Self {
        TripleExpr::star(a)
    }
}

impl Kleene for PropertySpec {
    fn empty() -> Self {
        PropertySpec::Empty
    }

    fn alt(a: Self, b: Self) -> Self {
        PropertySpec::one_of(a, b)
    }

    fn then(a: Self, b: Self) -> Self {
        PropertySpec::each_of(a, b)
    }

    fn many(a: Self) -> Self {
        PropertySpec::star(a)
    }
}

/// A shape with an open or closed triple expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shape {
    pub closed: bool,
    pub expr: TripleExpr,
}

/// Shape expression assigned to a label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ShapeExpr {
    Cond(NodeConstraint),
    And(Box<ShapeExpr>, Box<ShapeExpr>),
    Ref(ShapeLabel),
    Shape(Shape),
}

impl ShapeExpr {
    pub fn open(expr: TripleExpr) -> Self {
        ShapeExpr::Shape(Shape {
            closed: false,
            expr,
        })
    }

    pub fn closed(expr: TripleExpr) -> Self {
        ShapeExpr::Shape(Shape { closed: true, expr })
    }

    pub fn and(a: ShapeExpr, b: ShapeExpr) -> Self {
        ShapeExpr::And(Box::new(a), Box::new(b))
    }

    pub fn value_set(values: impl IntoIterator<Item = Value>) -> Self {
        ShapeExpr::Cond(NodeConstraint::ValueSet(values.into_iter().collect()))
    }

    pub fn datatype(dt: Datatype) -> Self {
        ShapeExpr::Cond(NodeConstraint::Datatype(dt))
    }

    /// Labels referenced anywhere under this expression (top-level refs and
    /// value positions alike).
    pub fn referenced_labels(&self) -> Vec<&ShapeLabel> {
        let mut out = Vec::new();
        self.collect_refs(&mut out);
        out
    }

    fn collect_refs<'a>(&'a self, out: &mut Vec<&'a ShapeLabel>) {
        match self {
            ShapeExpr::Cond(_) => {}
            ShapeExpr::And(a, b) => {
                a.collect_refs(out);
                b.collect_refs(out);
            }
            ShapeExpr::Ref(l) => out.push(l),
            ShapeExpr::Shape(s) => s.expr.collect_refs(out),
        }
    }

    /// Labels referenced at the shape-expression level only, without
    /// descending into any shape's triple expression.
    fn top_level_refs<'a>(&'a self, out: &mut Vec<&'a ShapeLabel>) {
        match self {
            ShapeExpr::Cond(_) | ShapeExpr::Shape(_) => {}
            ShapeExpr::And(a, b) => {
                a.top_level_refs(out);
                b.top_level_refs(out);
            }
            ShapeExpr::Ref(l) => out.push(l),
        }
    }

    /// Whether the expression is built from conditions alone (no shapes, no
    /// references); such labels can be evaluated on any value directly.
    pub fn is_cond_only(&self) -> bool {
        match self {
            ShapeExpr::Cond(_) => true,
            ShapeExpr::And(a, b) => a.is_cond_only() && b.is_cond_only(),
            ShapeExpr::Ref(_) | ShapeExpr::Shape(_) => false,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SchemaError {
    #[error("duplicate shape label {0}")]
    DuplicateLabel(String),
    #[error("reference to undefined shape label {0}")]
    UndefinedLabel(String),
    #[error("start label {0} is not defined")]
    UndefinedStart(String),
    #[error("labels {0} form a reference cycle that never passes through a shape")]
    ShapeFreeCycle(String),
}

/// A schema: an ordered label list, a total label → shape-expression map, an
/// optional start label, and the prefix table the parser saw.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WShExSchema {
    labels: Vec<ShapeLabel>,
    delta: BTreeMap<ShapeLabel, ShapeExpr>,
    start: Option<ShapeLabel>,
    prefixes: BTreeMap<String, String>,
}

impl WShExSchema {
    pub fn new(
        decls: Vec<(ShapeLabel, ShapeExpr)>,
        start: Option<ShapeLabel>,
        prefixes: BTreeMap<String, String>,
    ) -> Result<Self, SchemaError> {
        let mut labels = Vec::with_capacity(decls.len());
        let mut delta = BTreeMap::new();
        for (label, expr) in decls {
            if delta.insert(label.clone(), expr).is_some() {
                return Err(SchemaError::DuplicateLabel(label.to_string()));
            }
            labels.push(label);
        }
        for expr in delta.values() {
            for l in expr.referenced_labels() {
                if !delta.contains_key(l) {
                    return Err(SchemaError::UndefinedLabel(l.to_string()));
                }
            }
        }
        if let Some(s) = &start {
            if !delta.contains_key(s) {
                return Err(SchemaError::UndefinedStart(s.to_string()));
            }
        }
        let schema = WShExSchema {
            labels,
            delta,
            start,
            prefixes,
        };
        schema.check_shape_free_cycles()?;
        Ok(schema)
    }

    /// Reject cycles that stay at the shape-expression level (`Ref`/`And`
    /// chains with no shape in between), which would make resolution loop.
    fn check_shape_free_cycles(&self) -> Result<(), SchemaError> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            Visiting,
            Done,
        }
        let mut marks: BTreeMap<&ShapeLabel, Mark> = BTreeMap::new();
        fn visit<'a>(
            schema: &'a WShExSchema,
            l: &'a ShapeLabel,
            marks: &mut BTreeMap<&'a ShapeLabel, Mark>,
        ) -> Result<(), SchemaError> {
            match marks.get(l) {
                Some(Mark::Done) => return Ok(()),
                Some(Mark::Visiting) => {
                    return Err(SchemaError::ShapeFreeCycle(l.to_string()));
                }
                None => {}
            }
            marks.insert(l, Mark::Visiting);
            let mut next = Vec::new();
            schema.delta[l].top_level_refs(&mut next);
            for n in next {
                visit(schema, n, marks)?;
            }
            marks.insert(l, Mark::Done);
            Ok(())
        }
        for l in &self.labels {
            visit(self, l, &mut marks)?;
        }
        Ok(())
    }

    /// Labels in declaration order.
    pub fn labels(&self) -> &[ShapeLabel] {
        &self.labels
    }

    pub fn start(&self) -> Option<&ShapeLabel> {
        self.start.as_ref()
    }

    pub fn prefixes(&self) -> &BTreeMap<String, String> {
        &self.prefixes
    }

    pub fn get(&self, l: &ShapeLabel) -> Option<&ShapeExpr> {
        self.delta.get(l)
    }

    /// The expression for a label known to be declared.
    pub fn delta(&self, l: &ShapeLabel) -> &ShapeExpr {
        &self.delta[l]
    }

    pub fn contains(&self, l: &ShapeLabel) -> bool {
        self.delta.contains_key(l)
    }

    /// Rebuild with the same label order and a transformed expression map.
    pub fn map_exprs(&self, mut f: impl FnMut(&ShapeExpr) -> ShapeExpr) -> WShExSchema {
        WShExSchema {
            labels: self.labels.clone(),
            delta: self.delta.iter().map(|(l, e)| (l.clone(), f(e))).collect(),
            start: self.start.clone(),
            prefixes: self.prefixes.clone(),
        }
    }
}
