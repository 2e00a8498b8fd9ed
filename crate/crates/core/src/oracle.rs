//! Brute-force semantic oracle for the realization definition: enumerate
//! source databases and compare source answers with certain answers over
//! the mapped image. A counterexample is definitive; consistency up to the
//! bound is evidence, not proof.

use std::collections::BTreeSet;

use crate::homomorphism::evaluate;
use crate::mappings::apply_forward_db;
use crate::model::{Database, Name, ObdaSpec, Ucq};
use crate::reasoner::{Certain, Omq, OmqEngine};
use crate::rewriting::for_each_database;

/// Result of the brute-force sweep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleResult {
    /// No discrepancy among the enumerated databases.
    ConsistentUpTo { max_domain: usize, max_facts: usize },
    /// ans_{q_s}(D) ≠ cert_Q(M(D)) at this database; the tuple lies in
    /// exactly one of the two sets.
    Counterexample { database: Database, tuple: Vec<Name> },
}

/// Options for the sweep.
#[derive(Debug, Clone)]
pub struct OracleConfig {
    pub max_domain: usize,
    /// Cap on facts per database; a discrepancy always shrinks to the
    /// certain-answer derivation support, so a small cap loses little.
    pub max_facts: usize,
    pub consistent_only: bool,
}

impl OracleConfig {
    pub fn for_domain(max_domain: usize) -> OracleConfig {
        OracleConfig {
            max_domain,
            max_facts: max_domain + 2,
            consistent_only: false,
        }
    }
}

/// Enumerates every source database over the constant pool up to the
/// configured bounds (canonical growth, isomorphism-reduced) and compares
/// evaluate(q_s, D) with cert_Q(M(D)).
pub fn brute_force_realization_check(
    spec: &ObdaSpec,
    q_s: &Ucq,
    q_t: &Ucq,
    cfg: &OracleConfig,
) -> OracleResult {
    let engine = OmqEngine::new(&Omq {
        ontology: spec.ontology.clone(),
        schema: spec.mapped_schema(),
        query: q_t.clone(),
    });
    let mut found: Option<(Database, Vec<Name>)> = None;
    for_each_database(
        &spec.source_schema,
        cfg.max_domain,
        cfg.max_facts,
        true,
        &mut |d| {
            let image = apply_forward_db(&spec.mappings, d);
            let certain = engine.certain(&image);
            if cfg.consistent_only && certain == Certain::Inconsistent {
                return true;
            }
            let certain: BTreeSet<Vec<Name>> = certain.tuples(&image, q_s.arity());
            let answers = evaluate(q_s, d);
            if answers != certain {
                let tuple = answers
                    .symmetric_difference(&certain)
                    .next()
                    .expect("sets differ")
                    .clone();
                found = Some((d.clone(), tuple));
                return false;
            }
            true
        },
    );
    match found {
        Some((database, tuple)) => OracleResult::Counterexample { database, tuple },
        None => OracleResult::ConsistentUpTo {
            max_domain: cfg.max_domain,
            max_facts: cfg.max_facts,
        },
    }
}
