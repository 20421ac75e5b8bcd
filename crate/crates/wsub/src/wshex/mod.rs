//! Schema language for wikibase-style graphs: shapes over entity
//! neighborhoods with per-statement qualifier constraints.

pub mod ast;
pub mod eval;
pub mod parser;

pub use ast::{
    NodeConstraint, PropertySpec, QualifierSpec, SchemaError, Shape, ShapeExpr, ShapeLabel,
    TripleConstraint, TripleExpr, ValueCheck, WShExSchema,
};
pub use eval::{conforms, maximal_assignment, validate_node, ShapeAssignment};
pub use parser::{parse_schema, SchemaParseError};
