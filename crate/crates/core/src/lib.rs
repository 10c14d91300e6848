//! Approximate answering of SPARQL basic graph patterns over RDF data.
//!
//! The crate is `no_std` and only needs `alloc`. It covers the whole
//! pipeline that does not touch the file system:
//!
//! * [`graph`]: a dictionary-encoded, triple-indexed, immutable RDF graph,
//!   fed by the line-oriented [`ntriples`] parser.
//! * [`sparql`]: parsing and exact evaluation of the basic-graph-pattern
//!   fragment (`SELECT`, `ASK`, `COUNT(DISTINCT ..)`).
//! * [`qparser`]: query graphs, constant-leaf stripping and subquery tree
//!   enumeration.
//! * [`embedding`]: TransE / TransH / TransR training and triple scoring.
//! * [`scoring`]: selectivity-based edge weights and solution scores.
//! * [`recommender`]: the end-to-end ranked recommendation.
//! * [`evalkit`]: reciprocal rank, mean rank and the fact-deletion harness.
//!
//! Timing is injected through the [`Clock`] trait so that callers with an
//! operating system can attribute time to each phase.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod embedding;
pub mod evalkit;
pub mod graph;
pub mod ntriples;
pub mod qparser;
pub mod recommender;
pub mod scoring;
pub mod sparql;
pub mod synthetic;
pub mod term;

mod clock;

pub use clock::{Clock, NoClock};
pub use graph::{Graph, GraphBuilder, Triple};
pub use term::{Literal, Term, TermId};

/// IRI of `rdf:type`.
pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
