//! Entity-generated and matching-generated subset extraction.
//!
//! Both families work statement by statement, so each extraction can run
//! in-memory over a [`WikibaseGraph`] or as a single-pass streaming filter
//! over a dump; the per-statement predicates are public for the latter.
//!
//! The induced item/property/data-value sets of every result are derived
//! from the selected statements, so results are always well-formed graphs.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::wgraph::{DataValue, Datatype, EntityId, Statement, Value, WikibaseGraph};

/// A single statement matcher. Entity arguments of the property-flavored
/// matchers must be P-ids.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Matcher {
    /// The statement's subject is the given entity.
    SubjectIs(EntityId),
    /// The statement's property is the given property.
    PropertyIs(EntityId),
    /// The statement's value equals the given value.
    ValueIs(Value),
    /// The statement carries exactly this qualifier pair.
    QualifierIs(EntityId, Value),
    /// Some qualifier pair uses this property.
    QualifiedPropIs(EntityId),
    /// Some qualifier pair carries this value.
    QualifiedValueIs(Value),
}

impl Matcher {
    /// Whether the statement satisfies this matcher.
    pub fn matches(&self, s: &Statement) -> bool {
        match self {
            Matcher::SubjectIs(e) => s.subject == *e,
            Matcher::PropertyIs(p) => s.property == *p,
            Matcher::ValueIs(v) => s.value == *v,
            Matcher::QualifierIs(p, v) => s.qualifiers.contains(&(*p, v.clone())),
            Matcher::QualifiedPropIs(p) => s.qualifiers.iter().any(|(qp, _)| qp == p),
            Matcher::QualifiedValueIs(v) => s.qualifiers.iter().any(|(_, qv)| qv == v),
        }
    }

    fn assert_valid(&self) {
        match self {
            Matcher::PropertyIs(p) | Matcher::QualifierIs(p, _) | Matcher::QualifiedPropIs(p) => {
                assert!(p.is_property(), "matcher takes a property id, got {p}");
            }
            _ => {}
        }
    }
}

impl fmt::Display for Matcher {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn arg(v: &Value) -> String {
            match v {
                Value::Entity(e) => e.to_string(),
                Value::Data(d) => match d.datatype() {
                    Datatype::String => format!("{:?}", d.lexical()),
                    _ => d.lexical().to_string(),
                },
            }
        }
        match self {
            Matcher::SubjectIs(e) => write!(f, "subject({e})"),
            Matcher::PropertyIs(p) => write!(f, "property({p})"),
            Matcher::ValueIs(v) => write!(f, "value({})", arg(v)),
            Matcher::QualifierIs(p, v) => write!(f, "qualifier({p},{})", arg(v)),
            Matcher::QualifiedPropIs(p) => write!(f, "qualifiedProp({p})"),
            Matcher::QualifiedValueIs(v) => write!(f, "qualifiedValue({})", arg(v)),
        }
    }
}

/// A disjunctive set of matchers; a statement is selected when any matcher
/// accepts it. The empty expression selects nothing.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MatchExpression {
    matchers: BTreeSet<Matcher>,
}

impl MatchExpression {
    pub fn new(matchers: impl IntoIterator<Item = Matcher>) -> Self {
        let matchers: BTreeSet<Matcher> = matchers.into_iter().collect();
        for m in &matchers {
            m.assert_valid();
        }
        MatchExpression { matchers }
    }

    pub fn is_empty(&self) -> bool {
        self.matchers.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Matcher> {
        self.matchers.iter()
    }

    /// Whether any matcher accepts the statement.
    pub fn matches(&self, s: &Statement) -> bool {
        self.matchers.iter().any(|m| m.matches(s))
    }
}

impl FromIterator<Matcher> for MatchExpression {
    fn from_iter<T: IntoIterator<Item = Matcher>>(iter: T) -> Self {
        MatchExpression::new(iter)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SubsetError {
    #[error("{0} is not an item id")]
    NotAnItem(EntityId),
    #[error("{0} is not a property id")]
    NotAProperty(EntityId),
}

/// Whether the statement mentions one of the items: as subject, as value,
/// or as a qualifier value.
pub fn item_statement_matches(s: &Statement, items: &BTreeSet<EntityId>) -> bool {
    if items.contains(&s.subject) {
        return true;
    }
    if let Value::Entity(e) = &s.value {
        if items.contains(e) {
            return true;
        }
    }
    s.qualifiers.iter().any(|(_, v)| match v {
        Value::Entity(e) => items.contains(e),
        Value::Data(_) => false,
    })
}

/// Whether the statement uses one of the properties, as its property or in
/// a qualifier pair.
pub fn property_statement_matches(s: &Statement, props: &BTreeSet<EntityId>) -> bool {
    props.contains(&s.property) || s.qualifiers.iter().any(|(p, _)| props.contains(p))
}

/// Whether the statement mentions any of the entities per their kind:
/// items via [`item_statement_matches`], properties via
/// [`property_statement_matches`].
pub fn entity_statement_matches(s: &Statement, entities: &BTreeSet<EntityId>) -> bool {
    let (items, props) = split_by_kind(entities);
    item_statement_matches(s, &items) || property_statement_matches(s, &props)
}

fn split_by_kind(entities: &BTreeSet<EntityId>) -> (BTreeSet<EntityId>, BTreeSet<EntityId>) {
    entities.iter().partition(|e| e.is_item())
}

/// The subgraph of statements mentioning any of the items.
pub fn item_subgraph(
    g: &WikibaseGraph,
    items: &BTreeSet<EntityId>,
) -> Result<WikibaseGraph, SubsetError> {
    if let Some(bad) = items.iter().find(|e| !e.is_item()) {
        return Err(SubsetError::NotAnItem(*bad));
    }
    Ok(g.statements()
        .iter()
        .filter(|s| item_statement_matches(s, items))
        .cloned()
        .collect())
}

/// The subgraph of statements using any of the properties.
pub fn property_subgraph(
    g: &WikibaseGraph,
    props: &BTreeSet<EntityId>,
) -> Result<WikibaseGraph, SubsetError> {
    if let Some(bad) = props.iter().find(|e| !e.is_property()) {
        return Err(SubsetError::NotAProperty(*bad));
    }
    Ok(g.statements()
        .iter()
        .filter(|s| property_statement_matches(s, props))
        .cloned()
        .collect())
}

/// The union of the item subgraph of the item ids and the property subgraph
/// of the property ids.
pub fn entity_subgraph(g: &WikibaseGraph, entities: &BTreeSet<EntityId>) -> WikibaseGraph {
    g.statements()
        .iter()
        .filter(|s| entity_statement_matches(s, entities))
        .cloned()
        .collect()
}

/// The subgraph of statements accepted by the match expression.
pub fn matching_subgraph(g: &WikibaseGraph, ms: &MatchExpression) -> WikibaseGraph {
    g.statements()
        .iter()
        .filter(|s| ms.matches(s))
        .cloned()
        .collect()
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct MatcherParseError {
    pub line: usize,
    pub message: String,
}

fn matcher_err(line: usize, message: impl Into<String>) -> MatcherParseError {
    MatcherParseError {
        line,
        message: message.into(),
    }
}

/// Parse a matcher file: one `name(arg[,arg])` per line, `#` comments and
/// blank lines ignored. Entity arguments are `Q<n>`/`P<n>`, strings are
/// double-quoted, and bare integer literals take `literal_datatype`.
pub fn parse_matchers(
    text: &str,
    literal_datatype: Datatype,
) -> Result<MatchExpression, MatcherParseError> {
    let mut matchers = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = match raw_line.find('#') {
            Some(i) => &raw_line[..i],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let open = line
            .find('(')
            .ok_or_else(|| matcher_err(lineno, "expected `name(arg)`"))?;
        if !line.ends_with(')') {
            return Err(matcher_err(lineno, "expected closing `)`"));
        }
        let name = line[..open].trim();
        let args_text = &line[open + 1..line.len() - 1];
        let args: Vec<&str> = if args_text.trim().is_empty() {
            Vec::new()
        } else {
            args_text.split(',').map(str::trim).collect()
        };

        let entity_arg = |i: usize| -> Result<EntityId, MatcherParseError> {
            let a = args
                .get(i)
                .ok_or_else(|| matcher_err(lineno, "missing argument"))?;
            a.parse::<EntityId>()
                .map_err(|e| matcher_err(lineno, e.to_string()))
        };
        let property_arg = |i: usize| -> Result<EntityId, MatcherParseError> {
            let p = entity_arg(i)?;
            if !p.is_property() {
                return Err(matcher_err(lineno, format!("`{p}` is not a property id")));
            }
            Ok(p)
        };
        let value_arg = |i: usize| -> Result<Value, MatcherParseError> {
            let a = args
                .get(i)
                .ok_or_else(|| matcher_err(lineno, "missing argument"))?;
            if let Some(rest) = a.strip_prefix('"') {
                let inner = rest
                    .strip_suffix('"')
                    .ok_or_else(|| matcher_err(lineno, "unterminated string literal"))?;
                return Ok(Value::Data(DataValue::string(inner)));
            }
            if a.chars()
                .next()
                .is_some_and(|c| c.is_ascii_digit() || c == '-')
            {
                return Ok(Value::Data(DataValue::new(*a, literal_datatype)));
            }
            Ok(Value::Entity(
                a.parse::<EntityId>()
                    .map_err(|e| matcher_err(lineno, e.to_string()))?,
            ))
        };
        let expect_args = |n: usize| -> Result<(), MatcherParseError> {
            if args.len() != n {
                return Err(matcher_err(
                    lineno,
                    format!("`{name}` takes {n} argument(s), got {}", args.len()),
                ));
            }
            Ok(())
        };

        let m = match name {
            "subject" => {
                expect_args(1)?;
                Matcher::SubjectIs(entity_arg(0)?)
            }
            "property" => {
                expect_args(1)?;
                Matcher::PropertyIs(property_arg(0)?)
            }
            "value" => {
                expect_args(1)?;
                Matcher::ValueIs(value_arg(0)?)
            }
            "qualifier" => {
                expect_args(2)?;
                Matcher::QualifierIs(property_arg(0)?, value_arg(1)?)
            }
            "qualifiedProp" => {
                expect_args(1)?;
                Matcher::QualifiedPropIs(property_arg(0)?)
            }
            "qualifiedValue" => {
                expect_args(1)?;
                Matcher::QualifiedValueIs(value_arg(0)?)
            }
            other => {
                return Err(matcher_err(lineno, format!("unknown matcher `{other}`")));
            }
        };
        matchers.push(m);
    }
    Ok(MatchExpression::new(matchers))
}
