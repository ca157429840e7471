//! Taxonomy construction from encyclopedia page dumps.
//!
//! The pipeline extracts candidate hypernym-hyponym (isA) relations from four
//! sources of a page — the disambiguation bracket in its title, its abstract,
//! its infobox triples, and its tags — then filters wrong candidates with
//! heuristic verifiers before freezing the survivors into a queryable
//! taxonomy graph.
//!
//! Modules follow the pipeline order:
//!
//! * [`corpus`] — page model, dump parsing, streaming ingestion
//! * [`segment`] — dictionary-based word segmentation of noun compounds
//! * [`pmi`] — adjacent-bigram statistics and smoothed PMI
//! * [`separation`] — PMI-driven constituency parsing of bracket compounds
//! * [`generation`] — the four candidate extractors and their merge
//! * [`verification`] — thematic, head-stem, NE-support and
//!   incompatible-concept filters
//! * [`store`] — the frozen taxonomy graph, mention index and snapshots
//! * [`service`] — HTTP query API over a loaded snapshot
//! * [`eval`] — precision sampling and question-coverage measurement

pub mod corpus;
pub mod eval;
pub mod generation;
pub mod pmi;
pub mod segment;
pub mod separation;
pub mod service;
pub mod store;
pub mod verification;

pub use corpus::{EncyclopediaPage, IngestReport, SpoTriple, TitleCensus};
pub use generation::{CandidateRelation, FilterReason, Source, Status};
pub use pmi::PmiTable;
pub use segment::{Dictionary, Segmented};
pub use store::TaxonomyGraph;
