//! Planning, data-construction, and evaluation toolkit for cross-lingual
//! instruction tuning.
//!
//! The crate is organized around the pipeline stages:
//!
//! * [`corpus`] — ingest, filter, and deduplicate parallel corpora.
//! * [`simlang`] — language-similarity coefficients from multi-way
//!   sentence embeddings.
//! * [`scalelaw`] — evaluate and fit the translation-performance scaling
//!   law `S(X) = 100 - alpha * (gamma * X)^beta`.
//! * [`allocator`] — budget-constrained multilingual data allocation
//!   (water-filling on the shared marginal gain).
//! * [`databuild`] — assemble instruction-tuning datasets from parallel
//!   corpora and general-task seed files.
//! * [`evalkit`] — exact match, corpus BLEU, paired bootstrap, external
//!   score ingestion, and an LLM-judge client.
//! * [`repspace`] — representation-alignment metrics and 2D projection
//!   from per-layer embedding dumps.

pub mod allocator;
pub mod corpus;
pub mod databuild;
pub mod det;
pub mod evalkit;
pub mod lang;
pub mod repspace;
pub mod scalelaw;
pub mod simlang;

pub use lang::Lang;
