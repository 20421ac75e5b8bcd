//! Parser for the compact schema syntax.
//!
//! ```text
//! prefix wde: <http://www.wikidata.org/entity/>
//! Start = @<City>
//! <City> { wde:P31 @<CityCode> }
//! <CityCode> [ wde:Q515 ]
//! ```
//!
//! Shape declarations are `<Label> { te }`, `<Label> CLOSED { te }`, or
//! `<Label> nodeConstraint`, optionally combined with `AND`. Triple
//! constraints are `property (@<Label> | .) cardinality? qualifierSpec?`,
//! separated by `;` (each-of) or `|` (one-of). Cardinalities are `?`, `*`,
//! `+`, `{m,n}`, `{m,}`. Qualifier specs are `{{ ps }}` (open) or `[[ ps ]]`
//! (closed) with entries `property (@<Label> | .) *?` separated by `,`
//! (each-of) or `|` (one-of). Node constraints are value sets `[ v … ]` or a
//! datatype such as `xsd:date`. `#` starts a comment.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::rbe::{desugar_cardinality, Cardinality};
use crate::wgraph::{DataValue, Datatype, EntityId, Value};

use super::ast::{
    NodeConstraint, PropertySpec, QualifierSpec, SchemaError, ShapeExpr, ShapeLabel,
    TripleConstraint, TripleExpr, ValueCheck, WShExSchema,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SchemaParseError {
    #[error("{line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error(transparent)]
    Invalid(#[from] SchemaError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Iri(String),
    Name {
        prefix: Option<String>,
        local: String,
    },
    Str(String),
    Int(i64),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Semi,
    Pipe,
    Comma,
    At,
    Star,
    Plus,
    Question,
    Eq,
    Dot,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Iri(s) => write!(f, "<{s}>"),
            Tok::Name { prefix, local } => match prefix {
                Some(p) => write!(f, "{p}:{local}"),
                None => write!(f, "{local}"),
            },
            Tok::Str(s) => write!(f, "{s:?}"),
            Tok::Int(i) => write!(f, "{i}"),
            Tok::LBrace => write!(f, "{{"),
            Tok::RBrace => write!(f, "}}"),
            Tok::LBracket => write!(f, "["),
            Tok::RBracket => write!(f, "]"),
            Tok::Semi => write!(f, ";"),
            Tok::Pipe => write!(f, "|"),
            Tok::Comma => write!(f, ","),
            Tok::At => write!(f, "@"),
            Tok::Star => write!(f, "*"),
            Tok::Plus => write!(f, "+"),
            Tok::Question => write!(f, "?"),
            Tok::Eq => write!(f, "="),
            Tok::Dot => write!(f, "."),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn err(line: usize, col: usize, message: impl Into<String>) -> SchemaParseError {
    SchemaParseError::Syntax {
        line,
        col,
        message: message.into(),
    }
}

fn is_name_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_name_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '-'
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
}

impl Lexer {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied();
        if let Some(c) = c {
            self.pos += 1;
            if c == '\n' {
                self.line += 1;
                self.col = 1;
            } else {
                self.col += 1;
            }
        }
        c
    }

    fn take_name_chars(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if is_name_char(c) {
                s.push(self.bump().unwrap());
            } else {
                break;
            }
        }
        s
    }
}

fn lex(text: &str) -> Result<Vec<Spanned>, SchemaParseError> {
    let mut out = Vec::new();
    let mut lx = Lexer {
        chars: text.chars().collect(),
        pos: 0,
        line: 1,
        col: 1,
    };

    while let Some(c) = lx.peek() {
        let (tline, tcol) = (lx.line, lx.col);
        let mut push = |tok: Tok| {
            out.push(Spanned {
                tok,
                line: tline,
                col: tcol,
            })
        };
        match c {
            '#' => {
                while let Some(c) = lx.peek() {
                    if c == '\n' {
                        break;
                    }
                    lx.bump();
                }
            }
            c if c.is_whitespace() => {
                lx.bump();
            }
            '<' => {
                lx.bump();
                let mut s = String::new();
                loop {
                    match lx.peek() {
                        Some('>') => {
                            lx.bump();
                            break;
                        }
                        Some(_) => s.push(lx.bump().unwrap()),
                        None => return Err(err(tline, tcol, "unterminated <...>")),
                    }
                }
                push(Tok::Iri(s));
            }
            '"' => {
                lx.bump();
                let mut s = String::new();
                loop {
                    match lx.bump() {
                        Some('"') => break,
                        Some('\\') => match lx.bump() {
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            Some(c @ ('"' | '\\')) => s.push(c),
                            _ => return Err(err(tline, tcol, "bad escape in string")),
                        },
                        Some(c) => s.push(c),
                        None => return Err(err(tline, tcol, "unterminated string")),
                    }
                }
                push(Tok::Str(s));
            }
            '{' => {
                lx.bump();
                push(Tok::LBrace);
            }
            '}' => {
                lx.bump();
                push(Tok::RBrace);
            }
            '[' => {
                lx.bump();
                push(Tok::LBracket);
            }
            ']' => {
                lx.bump();
                push(Tok::RBracket);
            }
            ';' => {
                lx.bump();
                push(Tok::Semi);
            }
            '|' => {
                lx.bump();
                push(Tok::Pipe);
            }
            ',' => {
                lx.bump();
                push(Tok::Comma);
            }
            '@' => {
                lx.bump();
                push(Tok::At);
            }
            '*' => {
                lx.bump();
                push(Tok::Star);
            }
            '+' => {
                lx.bump();
                push(Tok::Plus);
            }
            '?' => {
                lx.bump();
                push(Tok::Question);
            }
            '=' => {
                lx.bump();
                push(Tok::Eq);
            }
            '.' => {
                lx.bump();
                push(Tok::Dot);
            }
            ':' => {
                // A name with an empty prefix, e.g. `:Date`, or the bare `:`
                // of an empty prefix declaration.
                lx.bump();
                let local = lx.take_name_chars();
                push(Tok::Name {
                    prefix: Some(String::new()),
                    local,
                });
            }
            c if c.is_ascii_digit() || c == '-' => {
                let mut s = String::new();
                s.push(lx.bump().unwrap());
                while let Some(c) = lx.peek() {
                    if c.is_ascii_digit() {
                        s.push(lx.bump().unwrap());
                    } else {
                        break;
                    }
                }
                let n: i64 = s
                    .parse()
                    .map_err(|_| err(tline, tcol, format!("bad integer {s:?}")))?;
                push(Tok::Int(n));
            }
            c if is_name_start(c) => {
                let name = lx.take_name_chars();
                if lx.peek() == Some(':') {
                    lx.bump();
                    let local = lx.take_name_chars();
                    push(Tok::Name {
                        prefix: Some(name),
                        local,
                    });
                } else {
                    push(Tok::Name {
                        prefix: None,
                        local: name,
                    });
                }
            }
            other => return Err(err(tline, tcol, format!("unexpected character {other:?}"))),
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    prefixes: BTreeMap<String, String>,
}

/// Datatypes recognized in constraint position. `xsd:` and `geo:` are
/// builtin here and need no declaration.
fn datatype_for(prefix: &str, local: &str) -> Option<Datatype> {
    match (prefix, local) {
        ("xsd", "string") => Some(Datatype::String),
        ("xsd", "integer") => Some(Datatype::Integer),
        ("xsd", "decimal") => Some(Datatype::Decimal),
        ("xsd", "date") | ("xsd", "dateTime") => Some(Datatype::Date),
        ("xsd", "gYear") => Some(Datatype::Year),
        ("geo", "wktLiteral") => Some(Datatype::Coordinate),
        _ => None,
    }
}

/// Trailing segment of an IRI: everything after the last `/`, `#`, or `:`.
fn local_part(iri: &str) -> &str {
    match iri.rfind(['/', '#', ':']) {
        Some(i) => &iri[i + 1..],
        None => iri,
    }
}

impl Parser {
    fn peek(&self) -> Option<&Spanned> {
        self.toks.get(self.pos)
    }

    fn peek2(&self) -> Option<&Spanned> {
        self.toks.get(self.pos + 1)
    }

    fn next(&mut self) -> Option<Spanned> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn here(&self) -> (usize, usize) {
        match self.peek() {
            Some(t) => (t.line, t.col),
            None => self
                .toks
                .last()
                .map(|t| (t.line, t.col + 1))
                .unwrap_or((1, 1)),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<Spanned, SchemaParseError> {
        let (line, col) = self.here();
        match self.next() {
            Some(t) if t.tok == tok => Ok(t),
            Some(t) => Err(err(
                t.line,
                t.col,
                format!("expected `{tok}`, found `{}`", t.tok),
            )),
            None => Err(err(
                line,
                col,
                format!("expected `{tok}`, found end of input"),
            )),
        }
    }

    fn fail<T>(&self, message: impl Into<String>) -> Result<T, SchemaParseError> {
        let (line, col) = self.here();
        Err(err(line, col, message))
    }

    /// Expand a prefixed name against the declared prefixes.
    fn expand(&self, t: &Spanned, prefix: &str, local: &str) -> Result<String, SchemaParseError> {
        match self.prefixes.get(prefix) {
            Some(iri) => Ok(format!("{iri}{local}")),
            None => Err(err(t.line, t.col, format!("undeclared prefix `{prefix}:`"))),
        }
    }

    /// Read an entity id from a name or IRI token: the trailing segment must
    /// be a Q- or P-id.
    fn entity_from(&self, t: &Spanned) -> Result<EntityId, SchemaParseError> {
        let local = match &t.tok {
            Tok::Iri(iri) => local_part(iri).to_string(),
            Tok::Name {
                prefix: Some(p),
                local,
            } => {
                let expanded = self.expand(t, p, local)?;
                local_part(&expanded).to_string()
            }
            Tok::Name {
                prefix: None,
                local,
            } => local.clone(),
            other => {
                return Err(err(
                    t.line,
                    t.col,
                    format!("expected an entity id, found `{other}`"),
                ))
            }
        };
        local
            .parse::<EntityId>()
            .map_err(|_| err(t.line, t.col, format!("`{local}` is not a Q/P entity id")))
    }

    fn property_from(&self, t: &Spanned) -> Result<EntityId, SchemaParseError> {
        let id = self.entity_from(t)?;
        if !id.is_property() {
            return Err(err(t.line, t.col, format!("`{id}` is not a property id")));
        }
        Ok(id)
    }

    /// Read a shape label from a name or IRI token.
    fn label_from(&self, t: &Spanned) -> Result<ShapeLabel, SchemaParseError> {
        let name = match &t.tok {
            Tok::Iri(iri) => local_part(iri).to_string(),
            Tok::Name {
                prefix: Some(p),
                local,
            } => {
                if local.is_empty() {
                    return Err(err(t.line, t.col, "empty shape label"));
                }
                let expanded = self.expand(t, p, local)?;
                local_part(&expanded).to_string()
            }
            Tok::Name {
                prefix: None,
                local,
            } => local.clone(),
            other => {
                return Err(err(
                    t.line,
                    t.col,
                    format!("expected a shape label, found `{other}`"),
                ))
            }
        };
        if name.is_empty() {
            return Err(err(t.line, t.col, "empty shape label"));
        }
        Ok(ShapeLabel::new(name))
    }

    fn parse_label_ref(&mut self) -> Result<ShapeLabel, SchemaParseError> {
        match self.next() {
            Some(t) => self.label_from(&t),
            None => self.fail("expected a shape label, found end of input"),
        }
    }

    fn parse_schema(&mut self) -> Result<WShExSchema, SchemaParseError> {
        let mut decls: Vec<(ShapeLabel, ShapeExpr)> = Vec::new();
        let mut start: Option<ShapeLabel> = None;
        while let Some(t) = self.peek().cloned() {
            match &t.tok {
                Tok::Name {
                    prefix: None,
                    local,
                } if local == "prefix" => {
                    self.next();
                    let name_tok = match self.next() {
                        Some(t) => t,
                        None => return self.fail("expected prefix name"),
                    };
                    let name = match &name_tok.tok {
                        // `prefix wde:` lexes as a name with empty local.
                        Tok::Name {
                            prefix: Some(p),
                            local,
                        } if local.is_empty() => p.clone(),
                        other => {
                            return Err(err(
                                name_tok.line,
                                name_tok.col,
                                format!("expected `name:`, found `{other}`"),
                            ))
                        }
                    };
                    let iri_tok = match self.next() {
                        Some(t) => t,
                        None => return self.fail("expected <IRI> after prefix name"),
                    };
                    let iri = match &iri_tok.tok {
                        Tok::Iri(iri) => iri.clone(),
                        other => {
                            return Err(err(
                                iri_tok.line,
                                iri_tok.col,
                                format!("expected <IRI>, found `{other}`"),
                            ))
                        }
                    };
                    self.prefixes.insert(name, iri);
                }
                Tok::Name {
                    prefix: None,
                    local,
                } if local == "Start" => {
                    self.next();
                    self.expect(Tok::Eq)?;
                    self.expect(Tok::At)?;
                    let label = self.parse_label_ref()?;
                    if start.replace(label).is_some() {
                        return Err(err(t.line, t.col, "duplicate Start declaration"));
                    }
                }
                _ => {
                    let label_tok = self.next().expect("peeked");
                    let label = self.label_from(&label_tok)?;
                    let expr = self.parse_shape_expr()?;
                    decls.push((label, expr));
                }
            }
        }
        WShExSchema::new(decls, start, std::mem::take(&mut self.prefixes)).map_err(Into::into)
    }

    fn parse_shape_expr(&mut self) -> Result<ShapeExpr, SchemaParseError> {
        let mut expr = self.parse_shape_atom()?;
        while let Some(t) = self.peek() {
            match &t.tok {
                Tok::Name {
                    prefix: None,
                    local,
                } if local == "AND" => {
                    self.next();
                    let rhs = self.parse_shape_atom()?;
                    expr = ShapeExpr::and(expr, rhs);
                }
                _ => break,
            }
        }
        Ok(expr)
    }

    fn parse_shape_atom(&mut self) -> Result<ShapeExpr, SchemaParseError> {
        match self.peek().cloned() {
            Some(t) => match &t.tok {
                Tok::Name {
                    prefix: None,
                    local,
                } if local == "CLOSED" => {
                    self.next();
                    self.expect(Tok::LBrace)?;
                    let te = self.parse_triple_expr_body()?;
                    Ok(ShapeExpr::closed(te))
                }
                Tok::LBrace => {
                    self.next();
                    let te = self.parse_triple_expr_body()?;
                    Ok(ShapeExpr::open(te))
                }
                Tok::LBracket => {
                    self.next();
                    let mut values = Vec::new();
                    loop {
                        match self.peek().cloned() {
                            Some(t) if t.tok == Tok::RBracket => {
                                self.next();
                                break;
                            }
                            Some(t) => {
                                self.next();
                                values.push(self.value_from(&t)?);
                            }
                            None => return self.fail("unterminated value set"),
                        }
                    }
                    Ok(ShapeExpr::value_set(values))
                }
                Tok::At => {
                    self.next();
                    let label = self.parse_label_ref()?;
                    Ok(ShapeExpr::Ref(label))
                }
                Tok::Dot => {
                    self.next();
                    Ok(ShapeExpr::Cond(NodeConstraint::AnyValue))
                }
                Tok::Name {
                    prefix: Some(p),
                    local,
                } => {
                    if let Some(dt) = datatype_for(p, local) {
                        self.next();
                        Ok(ShapeExpr::datatype(dt))
                    } else {
                        Err(err(
                            t.line,
                            t.col,
                            format!("unknown datatype `{p}:{local}`"),
                        ))
                    }
                }
                other => Err(err(
                    t.line,
                    t.col,
                    format!("expected a shape or node constraint, found `{other}`"),
                )),
            },
            None => self.fail("expected a shape expression, found end of input"),
        }
    }

    fn value_from(&self, t: &Spanned) -> Result<Value, SchemaParseError> {
        match &t.tok {
            Tok::Str(s) => {
                if s.is_empty() {
                    return Err(err(t.line, t.col, "empty string literal"));
                }
                Ok(Value::Data(DataValue::string(s.clone())))
            }
            // Bare integers denote years, matching the matcher-file default.
            Tok::Int(n) => Ok(Value::Data(DataValue::year(*n))),
            Tok::Iri(_) | Tok::Name { .. } => Ok(Value::Entity(self.entity_from(t)?)),
            other => Err(err(
                t.line,
                t.col,
                format!("expected a value, found `{other}`"),
            )),
        }
    }

    /// Body of `{ te }`; the opening brace has been consumed.
    fn parse_triple_expr_body(&mut self) -> Result<TripleExpr, SchemaParseError> {
        if let Some(t) = self.peek() {
            if t.tok == Tok::RBrace {
                self.next();
                return Ok(TripleExpr::Empty);
            }
        }
        let te = self.parse_te_one_of()?;
        self.expect(Tok::RBrace)?;
        Ok(te)
    }

    fn parse_te_one_of(&mut self) -> Result<TripleExpr, SchemaParseError> {
        let mut expr = self.parse_te_each_of()?;
        while self.peek().map(|t| &t.tok) == Some(&Tok::Pipe) {
            self.next();
            let rhs = self.parse_te_each_of()?;
            expr = TripleExpr::one_of(expr, rhs);
        }
        Ok(expr)
    }

    fn parse_te_each_of(&mut self) -> Result<TripleExpr, SchemaParseError> {
        let mut parts = vec![self.parse_te_constraint()?];
        while self.peek().map(|t| &t.tok) == Some(&Tok::Semi) {
            self.next();
            // Tolerate a trailing `;` before the closing brace.
            match self.peek().map(|t| &t.tok) {
                Some(Tok::RBrace) | Some(Tok::Pipe) | None => break,
                _ => parts.push(self.parse_te_constraint()?),
            }
        }
        Ok(TripleExpr::each_of_all(parts))
    }

    fn parse_te_constraint(&mut self) -> Result<TripleExpr, SchemaParseError> {
        let prop_tok = match self.next() {
            Some(t) => t,
            None => return self.fail("expected a triple constraint"),
        };
        let property = self.property_from(&prop_tok)?;
        let value = self.parse_value_check()?;
        let card = self.parse_cardinality()?;
        let qualifiers = self.parse_qualifier_spec()?;
        let tc = TripleExpr::Constraint(TripleConstraint {
            property,
            value,
            qualifiers,
        });
        Ok(match card {
            Some(card) => desugar_cardinality(tc, card),
            None => tc,
        })
    }

    fn parse_value_check(&mut self) -> Result<ValueCheck, SchemaParseError> {
        match self.peek().map(|t| t.tok.clone()) {
            Some(Tok::At) => {
                self.next();
                Ok(ValueCheck::Ref(self.parse_label_ref()?))
            }
            Some(Tok::Dot) => {
                self.next();
                Ok(ValueCheck::Any)
            }
            _ => self.fail("expected `@<Label>` or `.` after the property"),
        }
    }

    fn parse_cardinality(&mut self) -> Result<Option<Cardinality>, SchemaParseError> {
        match self.peek().map(|t| t.tok.clone()) {
            Some(Tok::Question) => {
                self.next();
                Ok(Some(Cardinality::OPTIONAL))
            }
            Some(Tok::Star) => {
                self.next();
                Ok(Some(Cardinality::STAR))
            }
            Some(Tok::Plus) => {
                self.next();
                Ok(Some(Cardinality::PLUS))
            }
            Some(Tok::LBrace) => {
                // `{m,n}` or `{m,}` or `{m}`; a following `{` means a
                // qualifier spec instead, so require an integer next.
                if !matches!(self.peek2().map(|t| &t.tok), Some(Tok::Int(_))) {
                    return Ok(None);
                }
                let open = self.next().expect("peeked");
                let min = match self.next().map(|t| t.tok) {
                    Some(Tok::Int(n)) if n >= 0 => n as usize,
                    _ => return Err(err(open.line, open.col, "expected a count in cardinality")),
                };
                let max = match self.peek().map(|t| t.tok.clone()) {
                    Some(Tok::Comma) => {
                        self.next();
                        match self.peek().map(|t| t.tok.clone()) {
                            Some(Tok::Int(n)) if n >= 0 => {
                                self.next();
                                Some(n as usize)
                            }
                            Some(Tok::RBrace) => None,
                            _ => {
                                return Err(err(
                                    open.line,
                                    open.col,
                                    "expected a count or `}` after `,` in cardinality",
                                ))
                            }
                        }
                    }
                    _ => Some(min),
                };
                self.expect(Tok::RBrace)?;
                let card = Cardinality::range(min, max)
                    .map_err(|e| err(open.line, open.col, e.to_string()))?;
                Ok(Some(card))
            }
            _ => Ok(None),
        }
    }

    fn parse_qualifier_spec(&mut self) -> Result<QualifierSpec, SchemaParseError> {
        let closed = match (self.peek().map(|t| &t.tok), self.peek2().map(|t| &t.tok)) {
            (Some(Tok::LBrace), Some(Tok::LBrace)) => false,
            (Some(Tok::LBracket), Some(Tok::LBracket)) => true,
            _ => return Ok(QualifierSpec::open_empty()),
        };
        self.next();
        self.next();
        let (close_a, close_b) = if closed {
            (Tok::RBracket, Tok::RBracket)
        } else {
            (Tok::RBrace, Tok::RBrace)
        };
        let spec = if self.peek().map(|t| &t.tok) == Some(&close_a) {
            PropertySpec::Empty
        } else {
            self.parse_ps_one_of()?
        };
        self.expect(close_a)?;
        self.expect(close_b)?;
        Ok(QualifierSpec { closed, spec })
    }

    fn parse_ps_one_of(&mut self) -> Result<PropertySpec, SchemaParseError> {
        let mut expr = self.parse_ps_each_of()?;
        while self.peek().map(|t| &t.tok) == Some(&Tok::Pipe) {
            self.next();
            let rhs = self.parse_ps_each_of()?;
            expr = PropertySpec::one_of(expr, rhs);
        }
        Ok(expr)
    }

    fn parse_ps_each_of(&mut self) -> Result<PropertySpec, SchemaParseError> {
        let mut parts = vec![self.parse_ps_constraint()?];
        while self.peek().map(|t| &t.tok) == Some(&Tok::Comma) {
            self.next();
            parts.push(self.parse_ps_constraint()?);
        }
        let mut parts = parts.into_iter().rev();
        let last = parts.next().expect("at least one part");
        Ok(parts.fold(last, |acc, p| PropertySpec::each_of(p, acc)))
    }

    fn parse_ps_constraint(&mut self) -> Result<PropertySpec, SchemaParseError> {
        let prop_tok = match self.next() {
            Some(t) => t,
            None => return self.fail("expected a qualifier constraint"),
        };
        let property = self.property_from(&prop_tok)?;
        let value = self.parse_value_check()?;
        let mut ps = PropertySpec::Constraint(property, value);
        if self.peek().map(|t| &t.tok) == Some(&Tok::Star) {
            self.next();
            ps = PropertySpec::star(ps);
        }
        Ok(ps)
    }
}

/// Parse a schema from its compact-syntax text.
pub fn parse_schema(text: &str) -> Result<WShExSchema, SchemaParseError> {
    let toks = lex(text)?;
    let mut parser = Parser {
        toks,
        pos: 0,
        prefixes: BTreeMap::new(),
    };
    parser.parse_schema()
}
