//! Reasoning toolkit for query expressibility and verification in
//! ontology-based data access: whether a source (U)CQ over a source schema
//! is expressible as a target UCQ over the vocabulary exposed by GAV
//! mappings and a DL-Lite/EL/ELHI ontology, and whether a candidate target
//! query realizes it.
//!
//! The crate is organized around:
//! - [`model`]: schemas, queries, databases, ontologies, mappings, specs;
//! - [`textio`]: the `.obda` / `.uq` / `.db` text formats;
//! - [`homomorphism`]: CQ/UCQ containment and evaluation;
//! - [`mappings`]: forward and backward mapping application;
//! - [`reasoner`]: chase-based certain answers for DL-Lite and ELHI;
//! - [`rewriting`]: canonical UCQ rewritings and pseudo-tree enumeration;
//! - [`decision`]: the expressibility / verification procedures;
//! - [`oracle`], [`testgen`], [`qbf`]: the brute-force semantic oracle,
//!   random instance generators and the QBF hard-instance generator.

pub mod decision;
pub mod homomorphism;
pub mod mappings;
pub mod model;
pub mod oracle;
pub mod qbf;
pub mod reasoner;
pub mod rewriting;
pub mod testgen;
pub mod textio;

pub use model::{
    Abox, Atom, Concept, Cq, Database, Diagnostic, Dialect, Fact, GavMapping, Name, ObdaSpec,
    Ontology, Role, Schema, Ucq,
};
