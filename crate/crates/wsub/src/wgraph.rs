//! Wikibase-style graph model: entities, data values, statements with
//! qualifiers, and graphs with derived item/property/data-value sets.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Entities are either items (`Q…`) or properties (`P…`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EntityKind {
    Item,
    Property,
}

impl EntityKind {
    pub fn prefix(self) -> char {
        match self {
            EntityKind::Item => 'Q',
            EntityKind::Property => 'P',
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EntityKind::Item => "item",
            EntityKind::Property => "property",
        }
    }
}

/// A wikibase entity id, rendered as `Q<num>` or `P<num>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EntityId {
    kind: EntityKind,
    num: u32,
}

impl EntityId {
    pub fn new(kind: EntityKind, num: u32) -> Self {
        assert!(num >= 1, "entity numbers start at 1");
        EntityId { kind, num }
    }

    pub fn item(num: u32) -> Self {
        Self::new(EntityKind::Item, num)
    }

    pub fn property(num: u32) -> Self {
        Self::new(EntityKind::Property, num)
    }

    pub fn kind(self) -> EntityKind {
        self.kind
    }

    pub fn num(self) -> u32 {
        self.num
    }

    pub fn is_item(self) -> bool {
        self.kind == EntityKind::Item
    }

    pub fn is_property(self) -> bool {
        self.kind == EntityKind::Property
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.kind.prefix(), self.num)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid entity id {0:?}: expected Q<num> or P<num>")]
pub struct EntityIdError(pub String);

impl FromStr for EntityId {
    type Err = EntityIdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut chars = s.chars();
        let kind = match chars.next() {
            Some('Q') => EntityKind::Item,
            Some('P') => EntityKind::Property,
            _ => return Err(EntityIdError(s.to_string())),
        };
        let rest = chars.as_str();
        if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) {
            return Err(EntityIdError(s.to_string()));
        }
        match rest.parse::<u32>() {
            Ok(num) if num >= 1 => Ok(EntityId { kind, num }),
            _ => Err(EntityIdError(s.to_string())),
        }
    }
}

/// Closed tag set for data values; `Unknown` keeps unrecognized dump
/// datatypes alive across round-trips.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Datatype {
    String,
    Integer,
    Decimal,
    Date,
    Year,
    Coordinate,
    Unknown,
}

impl Datatype {
    pub fn as_str(self) -> &'static str {
        match self {
            Datatype::String => "string",
            Datatype::Integer => "integer",
            Datatype::Decimal => "decimal",
            Datatype::Date => "date",
            Datatype::Year => "year",
            Datatype::Coordinate => "coordinate",
            Datatype::Unknown => "unknown",
        }
    }

    pub fn from_tag(tag: &str) -> Self {
        match tag {
            "string" => Datatype::String,
            "integer" => Datatype::Integer,
            "decimal" => Datatype::Decimal,
            "date" => Datatype::Date,
            "year" => Datatype::Year,
            "coordinate" => Datatype::Coordinate,
            _ => Datatype::Unknown,
        }
    }
}

impl fmt::Display for Datatype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A literal with its lexical form and datatype tag.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DataValue {
    lexical: String,
    datatype: Datatype,
}

impl DataValue {
    pub fn new(lexical: impl Into<String>, datatype: Datatype) -> Self {
        let lexical = lexical.into();
        assert!(!lexical.is_empty(), "data values need a lexical form");
        DataValue { lexical, datatype }
    }

    pub fn year(y: i64) -> Self {
        DataValue::new(y.to_string(), Datatype::Year)
    }

    pub fn string(s: impl Into<String>) -> Self {
        DataValue::new(s, Datatype::String)
    }

    pub fn lexical(&self) -> &str {
        &self.lexical
    }

    pub fn datatype(&self) -> Datatype {
        self.datatype
    }
}

impl fmt::Display for DataValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}^^{}", self.lexical, self.datatype)
    }
}

/// Statement and qualifier values: an entity or a data value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Value {
    Entity(EntityId),
    Data(DataValue),
}

impl Value {
    pub fn entity(id: EntityId) -> Self {
        Value::Entity(id)
    }

    pub fn as_entity(&self) -> Option<EntityId> {
        match self {
            Value::Entity(e) => Some(*e),
            Value::Data(_) => None,
        }
    }

    pub fn as_data(&self) -> Option<&DataValue> {
        match self {
            Value::Entity(_) => None,
            Value::Data(d) => Some(d),
        }
    }

    pub fn is_entity(&self) -> bool {
        matches!(self, Value::Entity(_))
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Entity(e) => e.fmt(f),
            Value::Data(d) => d.fmt(f),
        }
    }
}

impl From<EntityId> for Value {
    fn from(e: EntityId) -> Self {
        Value::Entity(e)
    }
}

impl From<DataValue> for Value {
    fn from(d: DataValue) -> Self {
        Value::Data(d)
    }
}

/// A finite set of qualifier pairs attached to one statement.
pub type QualifierSet = BTreeSet<(EntityId, Value)>;

/// One statement: subject, property, value, and a qualifier set. Equality is
/// over the whole 4-tuple, so two statements differing only in qualifiers are
/// distinct.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Statement {
    pub subject: EntityId,
    pub property: EntityId,
    pub value: Value,
    pub qualifiers: QualifierSet,
}

impl Statement {
    pub fn new(subject: EntityId, property: EntityId, value: impl Into<Value>) -> Self {
        assert!(property.is_property(), "statement properties must be P-ids");
        Statement {
            subject,
            property,
            value: value.into(),
            qualifiers: QualifierSet::new(),
        }
    }

    pub fn with_qualifiers(
        subject: EntityId,
        property: EntityId,
        value: impl Into<Value>,
        qualifiers: impl IntoIterator<Item = (EntityId, Value)>,
    ) -> Self {
        let mut st = Statement::new(subject, property, value);
        for (p, v) in qualifiers {
            assert!(p.is_property(), "qualifier properties must be P-ids");
            st.qualifiers.insert((p, v));
        }
        st
    }
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}", self.subject, self.property, self.value)?;
        if !self.qualifiers.is_empty() {
            write!(f, ", {{")?;
            for (i, (p, v)) in self.qualifiers.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{p}: {v}")?;
            }
            write!(f, "}}")?;
        }
        write!(f, ")")
    }
}

/// Item, property, and data-value sets induced by a collection of statements:
/// items are item-kind subjects, values, and qualifier values; properties are
/// statement properties, qualifier properties, and property-kind
/// subjects/values; data values are literals in value or qualifier position.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InducedSets {
    pub items: BTreeSet<EntityId>,
    pub properties: BTreeSet<EntityId>,
    pub data_values: BTreeSet<DataValue>,
}

impl InducedSets {
    fn add_entity(&mut self, e: EntityId) {
        match e.kind() {
            EntityKind::Item => self.items.insert(e),
            EntityKind::Property => self.properties.insert(e),
        };
    }

    fn add_value(&mut self, v: &Value) {
        match v {
            Value::Entity(e) => self.add_entity(*e),
            Value::Data(d) => {
                self.data_values.insert(d.clone());
            }
        }
    }
}

/// Compute the sets induced by a statement collection.
pub fn induced_sets<'a>(statements: impl IntoIterator<Item = &'a Statement>) -> InducedSets {
    let mut sets = InducedSets::default();
    for st in statements {
        sets.add_entity(st.subject);
        sets.properties.insert(st.property);
        sets.add_value(&st.value);
        for (p, v) in &st.qualifiers {
            sets.properties.insert(*p);
            sets.add_value(v);
        }
    }
    sets
}

/// An immutable statement set with derived entity/data-value sets and a
/// by-subject index.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WikibaseGraph {
    statements: Vec<Statement>,
    subject_ranges: BTreeMap<EntityId, (usize, usize)>,
    sets: InducedSets,
    nodes: BTreeSet<EntityId>,
}

impl WikibaseGraph {
    pub fn from_statements(statements: impl IntoIterator<Item = Statement>) -> Self {
        let mut statements: Vec<Statement> = statements.into_iter().collect();
        statements.sort();
        statements.dedup();
        let sets = induced_sets(&statements);

        let mut subject_ranges = BTreeMap::new();
        let mut i = 0;
        while i < statements.len() {
            let subject = statements[i].subject;
            let start = i;
            while i < statements.len() && statements[i].subject == subject {
                i += 1;
            }
            subject_ranges.insert(subject, (start, i));
        }

        // Graph nodes are the entities that can carry statements: all items,
        // plus properties that occur in subject, value, or qualifier-value
        // position (properties used only as edge labels are not nodes).
        let mut nodes: BTreeSet<EntityId> = sets.items.iter().copied().collect();
        for st in &statements {
            if st.subject.is_property() {
                nodes.insert(st.subject);
            }
            if let Value::Entity(e) = st.value {
                if e.is_property() {
                    nodes.insert(e);
                }
            }
            for (_, v) in &st.qualifiers {
                if let Some(e) = v.as_entity() {
                    if e.is_property() {
                        nodes.insert(e);
                    }
                }
            }
        }

        WikibaseGraph {
            statements,
            subject_ranges,
            sets,
            nodes,
        }
    }

    pub fn statements(&self) -> &[Statement] {
        &self.statements
    }

    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }

    pub fn items(&self) -> &BTreeSet<EntityId> {
        &self.sets.items
    }

    pub fn properties(&self) -> &BTreeSet<EntityId> {
        &self.sets.properties
    }

    pub fn data_values(&self) -> &BTreeSet<DataValue> {
        &self.sets.data_values
    }

    pub fn induced(&self) -> &InducedSets {
        &self.sets
    }

    /// Entities that act as graph nodes (validation subjects).
    pub fn entity_nodes(&self) -> &BTreeSet<EntityId> {
        &self.nodes
    }

    /// The statements whose subject is `n` (the outgoing neighborhood).
    pub fn neighs(&self, n: EntityId) -> &[Statement] {
        match self.subject_ranges.get(&n) {
            Some(&(start, end)) => &self.statements[start..end],
            None => &[],
        }
    }

    pub fn contains(&self, st: &Statement) -> bool {
        self.statements.binary_search(st).is_ok()
    }

    /// Subgraph test: statement, item, property, and data-value inclusion.
    pub fn is_subgraph_of(&self, other: &WikibaseGraph) -> bool {
        self.statements.iter().all(|st| other.contains(st))
            && self.sets.items.is_subset(&other.sets.items)
            && self.sets.properties.is_subset(&other.sets.properties)
            && self.sets.data_values.is_subset(&other.sets.data_values)
    }
}

impl FromIterator<Statement> for WikibaseGraph {
    fn from_iter<T: IntoIterator<Item = Statement>>(iter: T) -> Self {
        WikibaseGraph::from_statements(iter)
    }
}
