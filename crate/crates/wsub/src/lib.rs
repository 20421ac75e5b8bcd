//! Knowledge-graph subsetting toolkit for wikibase-style graphs.
//!
//! The library models graphs whose statements carry qualifier sets, a schema
//! language with shape labels and qualifier specifiers, and several subset
//! extraction strategies: explicit entity lists, statement matchers,
//! reference-erased shape matching, slurping during validation, and a
//! vertex-centric BSP validator.

pub mod dumpio;
pub mod pregel;
pub mod rbe;
pub mod shexmatch;
pub mod slurp;
pub mod subsets;
pub mod wgraph;
pub mod wshex;

#[cfg(test)]
pub(crate) mod testutil;

/// Compiles and runs every code listing of the guide (`book/`) as doctests,
/// keeping the prose in sync with the API.
#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../README.md")]
    pub struct Readme;
    #[doc = include_str!("../../../book/src/graphs.md")]
    pub struct Graphs;
    #[doc = include_str!("../../../book/src/dumps.md")]
    pub struct Dumps;
    #[doc = include_str!("../../../book/src/schemas.md")]
    pub struct Schemas;
    #[doc = include_str!("../../../book/src/bags.md")]
    pub struct Bags;
    #[doc = include_str!("../../../book/src/validation.md")]
    pub struct Validation;
    #[doc = include_str!("../../../book/src/extraction.md")]
    pub struct Extraction;
    #[doc = include_str!("../../../book/src/shex-matching.md")]
    pub struct ShexMatching;
    #[doc = include_str!("../../../book/src/slurping.md")]
    pub struct Slurping;
    #[doc = include_str!("../../../book/src/pregel.md")]
    pub struct Pregel;
}
