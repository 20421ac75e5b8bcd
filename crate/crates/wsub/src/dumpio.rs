//! Streaming reader/writer for line-delimited JSON dumps.
//!
//! The native format ("WBJL") is one JSON object per line, each carrying an
//! entity's complete outgoing neighborhood:
//!
//! ```json
//! {"type":"item","id":"Q80","claims":{"P108":[{"value":{"entity":"Q42944"},"qualifiers":{"P580":[{"literal":"1984","datatype":"year"}]}}]}}
//! ```
//!
//! Values are `{"entity":"Q.."}` or `{"literal":"...","datatype":"..."}`.
//! The writer is canonical: fixed key order, properties in id order,
//! statements and qualifier values sorted, qualifiers omitted when empty,
//! no array wrapper. Equal graphs serialize to identical bytes.
//!
//! A best-effort reader for real Wikidata JSON dumps maps
//! `claims[P][i].mainsnak.datavalue` into the native model, dropping ranks,
//! references, and non-value snak types; unmappable values come through
//! with datatype `unknown`. This direction is lossy by design.

use std::collections::BTreeMap;
use std::io::{self, BufRead, BufReader, Read, Write};

use flate2::read::MultiGzDecoder;
use serde::Deserialize;
use thiserror::Error;

use crate::wgraph::{DataValue, Datatype, EntityId, EntityKind, Statement, Value, WikibaseGraph};

/// One dump line: an entity and all statements with it as subject.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityDocument {
    pub id: EntityId,
    pub statements: Vec<Statement>,
}

impl EntityDocument {
    pub fn new(id: EntityId, statements: Vec<Statement>) -> Self {
        assert!(
            statements.iter().all(|s| s.subject == id),
            "document statements must have the document id as subject"
        );
        EntityDocument { id, statements }
    }

    pub fn entity_type(&self) -> EntityKind {
        self.id.kind()
    }
}

/// Input syntax of a dump.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DumpFormat {
    #[default]
    Wbjl,
    WikidataJson,
}

/// What to do with lines that fail to parse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorPolicy {
    /// Log, count, and continue (the default).
    #[default]
    Skip,
    /// Stop at the first bad line.
    Fail,
}

#[derive(Debug, Error)]
pub enum DumpError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Wrap a byte stream, transparently decoding gzip when the magic bytes
/// match (concatenated members included).
pub fn maybe_gzip(r: impl Read + 'static) -> io::Result<Box<dyn Read>> {
    let mut br = BufReader::new(r);
    let head = br.fill_buf()?;
    if head.starts_with(&[0x1f, 0x8b]) {
        Ok(Box::new(MultiGzDecoder::new(br)))
    } else {
        Ok(Box::new(br))
    }
}

// Wire shape of a WBJL line. Unknown fields are ignored.
#[derive(Deserialize)]
struct RawDoc {
    #[serde(rename = "type")]
    entity_type: Option<String>,
    id: String,
    #[serde(default)]
    claims: BTreeMap<String, Vec<RawStatement>>,
}

#[derive(Deserialize)]
struct RawStatement {
    value: RawValue,
    #[serde(default)]
    qualifiers: BTreeMap<String, Vec<RawValue>>,
}

#[derive(Deserialize)]
struct RawValue {
    entity: Option<String>,
    literal: Option<String>,
    datatype: Option<String>,
}

fn parse_entity(s: &str) -> Result<EntityId, String> {
    s.parse::<EntityId>().map_err(|e| e.to_string())
}

fn parse_property(s: &str) -> Result<EntityId, String> {
    let p = parse_entity(s)?;
    if !p.is_property() {
        return Err(format!("`{p}` is not a property id"));
    }
    Ok(p)
}

impl RawValue {
    fn into_value(self) -> Result<Value, String> {
        match (self.entity, self.literal) {
            (Some(e), None) => Ok(Value::Entity(parse_entity(&e)?)),
            (None, Some(lexical)) => {
                if lexical.is_empty() {
                    return Err("empty literal".into());
                }
                let datatype = self
                    .datatype
                    .as_deref()
                    .map(Datatype::from_tag)
                    .unwrap_or(Datatype::Unknown);
                Ok(Value::Data(DataValue::new(lexical, datatype)))
            }
            (Some(_), Some(_)) => Err("value has both `entity` and `literal`".into()),
            (None, None) => Err("value has neither `entity` nor `literal`".into()),
        }
    }
}

fn doc_from_wbjl(line: &str) -> Result<EntityDocument, String> {
    let raw: RawDoc = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let id = parse_entity(&raw.id)?;
    if let Some(t) = &raw.entity_type {
        let expected = match id.kind() {
            EntityKind::Item => "item",
            EntityKind::Property => "property",
        };
        if t != expected {
            return Err(format!("entity {id} declared with type `{t}`"));
        }
    }
    let mut statements = Vec::new();
    for (prop, sts) in raw.claims {
        let property = parse_property(&prop)?;
        for st in sts {
            let value = st.value.into_value()?;
            let mut qualifiers = Vec::new();
            for (qp, qvs) in st.qualifiers {
                let qprop = parse_property(&qp)?;
                for qv in qvs {
                    qualifiers.push((qprop, qv.into_value()?));
                }
            }
            statements.push(Statement::with_qualifiers(id, property, value, qualifiers));
        }
    }
    Ok(EntityDocument::new(id, statements))
}

// Wire shape of a real Wikidata JSON line (the subset we map).
#[derive(Deserialize)]
struct WdDoc {
    id: String,
    #[serde(default)]
    claims: BTreeMap<String, Vec<WdClaim>>,
}

#[derive(Deserialize)]
struct WdClaim {
    mainsnak: WdSnak,
    #[serde(default)]
    qualifiers: BTreeMap<String, Vec<WdSnak>>,
}

#[derive(Deserialize)]
struct WdSnak {
    snaktype: Option<String>,
    datavalue: Option<WdDatavalue>,
}

#[derive(Deserialize)]
struct WdDatavalue {
    #[serde(rename = "type")]
    value_type: String,
    value: serde_json::Value,
}

impl WdSnak {
    /// Map a snak to a value; `None` for somevalue/novalue snaks.
    fn into_value(self) -> Result<Option<Value>, String> {
        if self.snaktype.as_deref().is_some_and(|t| t != "value") {
            return Ok(None);
        }
        let dv = match self.datavalue {
            Some(dv) => dv,
            None => return Ok(None),
        };
        let unknown = |v: &serde_json::Value| {
            DataValue::new(
                serde_json::to_string(v).unwrap_or_else(|_| "?".into()),
                Datatype::Unknown,
            )
        };
        let value = match dv.value_type.as_str() {
            "wikibase-entityid" => {
                let id = dv.value.get("id").and_then(|v| v.as_str()).unwrap_or("");
                match id.parse::<EntityId>() {
                    Ok(e) => Value::Entity(e),
                    Err(e) => return Err(e.to_string()),
                }
            }
            "string" => match dv.value.as_str() {
                Some(s) if !s.is_empty() => Value::Data(DataValue::string(s)),
                _ => Value::Data(unknown(&dv.value)),
            },
            "time" => {
                let time = dv.value.get("time").and_then(|v| v.as_str()).unwrap_or("");
                let precision = dv.value.get("precision").and_then(|v| v.as_i64());
                // "+1955-06-08T00:00:00Z": year precision keeps the year
                // only, anything finer keeps the whole timestamp.
                let year: Option<i64> = time
                    .split('-')
                    .next()
                    .and_then(|y| y.trim_start_matches('+').parse().ok());
                match (precision, year) {
                    (Some(p), Some(y)) if p <= 9 => Value::Data(DataValue::year(y)),
                    _ if !time.is_empty() => Value::Data(DataValue::new(time, Datatype::Date)),
                    _ => Value::Data(unknown(&dv.value)),
                }
            }
            "quantity" => {
                let amount = dv
                    .value
                    .get("amount")
                    .and_then(|v| v.as_str())
                    .unwrap_or("");
                let lexical = amount.trim_start_matches('+');
                if lexical.is_empty() {
                    Value::Data(unknown(&dv.value))
                } else if lexical.contains('.') {
                    Value::Data(DataValue::new(lexical, Datatype::Decimal))
                } else {
                    Value::Data(DataValue::new(lexical, Datatype::Integer))
                }
            }
            "monolingualtext" => match dv.value.get("text").and_then(|v| v.as_str()) {
                Some(s) if !s.is_empty() => Value::Data(DataValue::string(s)),
                _ => Value::Data(unknown(&dv.value)),
            },
            "globecoordinate" => {
                let lat = dv.value.get("latitude").and_then(|v| v.as_f64());
                let lon = dv.value.get("longitude").and_then(|v| v.as_f64());
                match (lat, lon) {
                    (Some(lat), Some(lon)) => {
                        Value::Data(DataValue::new(format!("{lat},{lon}"), Datatype::Coordinate))
                    }
                    _ => Value::Data(unknown(&dv.value)),
                }
            }
            _ => Value::Data(unknown(&dv.value)),
        };
        Ok(Some(value))
    }
}

fn doc_from_wikidata_json(line: &str) -> Result<EntityDocument, String> {
    let raw: WdDoc = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let id = parse_entity(&raw.id)?;
    let mut statements = Vec::new();
    for (prop, claims) in raw.claims {
        let property = parse_property(&prop)?;
        for claim in claims {
            let value = match claim.mainsnak.into_value()? {
                Some(v) => v,
                None => continue,
            };
            let mut qualifiers = Vec::new();
            for (qp, qsnaks) in claim.qualifiers {
                let qprop = parse_property(&qp)?;
                for snak in qsnaks {
                    if let Some(v) = snak.into_value()? {
                        qualifiers.push((qprop, v));
                    }
                }
            }
            statements.push(Statement::with_qualifiers(id, property, value, qualifiers));
        }
    }
    Ok(EntityDocument::new(id, statements))
}

/// Streaming dump reader: an iterator of documents over a line stream.
pub struct DumpReader<R: BufRead> {
    lines: io::Lines<R>,
    lineno: usize,
    format: DumpFormat,
    policy: ErrorPolicy,
    skipped: usize,
    done: bool,
}

impl<R: BufRead> DumpReader<R> {
    pub fn new(reader: R, format: DumpFormat, policy: ErrorPolicy) -> Self {
        DumpReader {
            lines: reader.lines(),
            lineno: 0,
            format,
            policy,
            skipped: 0,
            done: false,
        }
    }

    /// Lines skipped so far under [`ErrorPolicy::Skip`].
    pub fn skipped(&self) -> usize {
        self.skipped
    }
}

impl<R: BufRead> Iterator for DumpReader<R> {
    type Item = Result<EntityDocument, DumpError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => {
                    self.done = true;
                    return Some(Err(DumpError::Io(e)));
                }
            };
            self.lineno += 1;
            let mut text = line.trim();
            // Array-wrapped dumps: skip the brackets, drop one trailing
            // comma from each element line.
            if text.is_empty() || text == "[" || text == "]" || text == "," {
                continue;
            }
            text = text.strip_suffix(',').unwrap_or(text).trim_end();
            let parsed = match self.format {
                DumpFormat::Wbjl => doc_from_wbjl(text),
                DumpFormat::WikidataJson => doc_from_wikidata_json(text),
            };
            match parsed {
                Ok(doc) => return Some(Ok(doc)),
                Err(message) => match self.policy {
                    ErrorPolicy::Skip => {
                        log::warn!("skipping dump line {}: {}", self.lineno, message);
                        self.skipped += 1;
                    }
                    ErrorPolicy::Fail => {
                        self.done = true;
                        return Some(Err(DumpError::Parse {
                            line: self.lineno,
                            message,
                        }));
                    }
                },
            }
        }
    }
}

/// Read a whole dump into documents (tests and small inputs).
pub fn read_dump(
    reader: impl BufRead,
    format: DumpFormat,
    policy: ErrorPolicy,
) -> Result<Vec<EntityDocument>, DumpError> {
    DumpReader::new(reader, format, policy).collect()
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

fn write_value(v: &Value, out: &mut String) {
    match v {
        Value::Entity(e) => {
            out.push_str("{\"entity\":");
            out.push_str(&json_str(&e.to_string()));
            out.push('}');
        }
        Value::Data(d) => {
            out.push_str("{\"literal\":");
            out.push_str(&json_str(d.lexical()));
            out.push_str(",\"datatype\":");
            out.push_str(&json_str(d.datatype().as_str()));
            out.push('}');
        }
    }
}

/// Render one document as its canonical WBJL line (no trailing newline).
pub fn document_line(doc: &EntityDocument) -> String {
    let mut by_prop: BTreeMap<EntityId, Vec<&Statement>> = BTreeMap::new();
    for st in &doc.statements {
        by_prop.entry(st.property).or_default().push(st);
    }
    let mut out = String::new();
    out.push_str("{\"type\":\"");
    out.push_str(doc.entity_type().as_str());
    out.push_str("\",\"id\":\"");
    out.push_str(&doc.id.to_string());
    out.push_str("\",\"claims\":{");
    let mut first_prop = true;
    for (prop, mut sts) in by_prop {
        if !first_prop {
            out.push(',');
        }
        first_prop = false;
        sts.sort();
        out.push_str(&json_str(&prop.to_string()));
        out.push_str(":[");
        for (i, st) in sts.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str("{\"value\":");
            write_value(&st.value, &mut out);
            if !st.qualifiers.is_empty() {
                out.push_str(",\"qualifiers\":{");
                let mut by_qprop: BTreeMap<EntityId, Vec<&Value>> = BTreeMap::new();
                for (p, v) in st.qualifiers.iter() {
                    by_qprop.entry(*p).or_default().push(v);
                }
                let mut first_q = true;
                for (qp, qvs) in by_qprop {
                    if !first_q {
                        out.push(',');
                    }
                    first_q = false;
                    out.push_str(&json_str(&qp.to_string()));
                    out.push_str(":[");
                    for (j, qv) in qvs.iter().enumerate() {
                        if j > 0 {
                            out.push(',');
                        }
                        write_value(qv, &mut out);
                    }
                    out.push(']');
                }
                out.push('}');
            }
            out.push('}');
        }
        out.push(']');
    }
    out.push_str("}}");
    out
}

/// Write documents as canonical WBJL, one line each.
pub fn write_dump<'a>(
    docs: impl IntoIterator<Item = &'a EntityDocument>,
    out: &mut impl Write,
) -> io::Result<()> {
    for doc in docs {
        out.write_all(document_line(doc).as_bytes())?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Group a graph's statements into documents, one per subject that has
/// statements, in subject order.
pub fn docs_from_graph(g: &WikibaseGraph) -> Vec<EntityDocument> {
    let mut docs: Vec<EntityDocument> = Vec::new();
    for st in g.statements() {
        match docs.last_mut() {
            Some(doc) if doc.id == st.subject => doc.statements.push(st.clone()),
            _ => docs.push(EntityDocument::new(st.subject, vec![st.clone()])),
        }
    }
    docs
}

/// Collect documents into a graph. Statements of duplicate document ids are
/// unioned (with a warning).
pub fn graph_from_docs(docs: impl IntoIterator<Item = EntityDocument>) -> WikibaseGraph {
    let mut seen: std::collections::BTreeSet<EntityId> = Default::default();
    let mut statements = Vec::new();
    for doc in docs {
        if !seen.insert(doc.id) {
            log::warn!("duplicate document for {}; statements unioned", doc.id);
        }
        statements.extend(doc.statements);
    }
    WikibaseGraph::from_statements(statements)
}

/// Serialize a whole graph as canonical WBJL.
pub fn write_graph(g: &WikibaseGraph, out: &mut impl Write) -> io::Result<()> {
    write_dump(&docs_from_graph(g), out)
}
