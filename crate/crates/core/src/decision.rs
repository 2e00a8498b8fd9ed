//! Top-level decision procedures: expressibility and verification for
//! DL-Lite and ELHI specifications, built from the two characterizing
//! inclusions (q_s ⊆ M⁻(q_r) and M⁻(q_r) ⊆ q_s for q_r a rewriting of the
//! target OMQ).
//!
//! The backward inclusion quantifies over all rewriting disjuncts (A, ā)
//! and all backward-translation choices, so candidate ABoxes have to be
//! enumerated. Candidates come from three sources:
//!
//! 1. a pattern source that abstracts the possible certain-answer matches
//!    of q_t (variable identifications, adom/anonymous splits, edge
//!    realizations, derivation supports truncated at the frontier depth
//!    with saturated frontier nodes) — complete for rooted source queries
//!    and for ontologies without ∃-on-the-left axioms, because a failing
//!    (A, ā, choice) shrinks to its certain-answer support, unravels to a
//!    pseudo-tree, truncates at the frontier, and then receives a
//!    homomorphism from an enumerated candidate, along which failures
//!    transfer;
//! 2. a sweep of small arbitrary ABoxes (the bounded canonical rewriting);
//! 3. the budgeted pseudo-tree enumeration with frontier closure.
//!
//! Verdicts are three-valued: Yes is only claimed when the candidate set
//! is provably covering, No always carries an end-to-end revalidated
//! witness, and everything else is Unknown.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::homomorphism::{evaluate, find_cq_hom};
use crate::mappings::{apply_backward, apply_forward_db, apply_forward_ucq, BackwardDisjunct};
use crate::model::{
    is_rooted_ucq, validate_query, validate_spec, view_as_database, Abox, Atom, Cq, Database,
    Diagnostic, Fact, ModelError, Name, ObdaSpec, Schema, Ucq,
};
use crate::reasoner::{core_normal_form, Certain, NfAxiom, Omq, OmqEngine, Reasoner};
use crate::rewriting::{
    canonical_database, for_each_database, for_each_pseudo_tree, frontier_closure, RewritingBudget,
};

/// Errors raised before a decision procedure can run.
#[derive(Debug, thiserror::Error)]
pub enum DecisionError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid input: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Validation(Vec<Diagnostic>),
}

/// Three-valued decision outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Yes,
    No,
    Unknown,
}

/// A counterexample to Definition-1 equality: a source database and tuple
/// on which source answers and certain answers differ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub database: Database,
    pub tuple: Vec<Name>,
    pub source_answers: BTreeSet<Vec<Name>>,
    pub certain_answers: BTreeSet<Vec<Name>>,
}

/// How the verdict was obtained and whether the search was complete.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundsReport {
    pub rooted: bool,
    /// The positive direction is complete: Holds may be reported as Yes.
    pub exact: bool,
    pub pipeline: String,
    pub candidates_checked: usize,
    pub budget: RewritingBudget,
    pub consistent_only: bool,
}

/// The decision result: outcome, the realization M(q_s) for positive
/// expressibility answers, a revalidated witness for negative answers,
/// and the bounds report.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub outcome: Outcome,
    pub realization: Option<Ucq>,
    pub witness: Option<Witness>,
    pub bounds: BoundsReport,
}

/// Outcome of the backward inclusion M⁻(q_r) ⊆ q_s.
#[derive(Debug, Clone)]
pub enum BackwardOutcome {
    Holds,
    Fails(Witness),
    Unknown,
}

/// Tunable limits for the decision search.
#[derive(Debug, Clone)]
pub struct DecisionConfig {
    pub budget: RewritingBudget,
    /// Skip inconsistent M(D) witnesses (the consistent-ABoxes variant of
    /// the realization definition).
    pub consistent_only: bool,
    /// Cap on enumerated candidate ABoxes per source.
    pub candidate_cap: usize,
    /// Cap on backward-translation choices per candidate.
    pub choice_cap: u128,
    /// Cap on derivation-support plans per pattern.
    pub support_cap: usize,
    /// Worker threads for the candidate loop (1 = sequential).
    pub jobs: usize,
}

impl Default for DecisionConfig {
    fn default() -> DecisionConfig {
        DecisionConfig {
            budget: RewritingBudget::default(),
            consistent_only: false,
            candidate_cap: 60_000,
            choice_cap: 1_000_000,
            support_cap: 4_000,
            jobs: 1,
        }
    }
}

// ---------------------------------------------------------------------------
// shared context

struct Ctx<'a> {
    spec: &'a ObdaSpec,
    q_s: &'a Ucq,
    q_t: &'a Ucq,
    sch_m: Schema,
    engine: OmqEngine,
    /// reasoner view of the normal-form axioms used by the pattern source
    axioms: PatternAxioms,
    cfg: &'a DecisionConfig,
    frontier: usize,
}

/// The normal-form material the pattern source works with.
struct PatternAxioms {
    /// A ⊑ ∃r.B axioms as (lhs, role name, inverse, seed)
    sub_exists: Vec<(Name, Name, bool, Name)>,
    /// ∃s.B ⊑ A axioms as (role name, inverse, premise, conclusion)
    exists_sub: Vec<(Name, bool, Name, Name)>,
    /// concepts assertable in candidate ABoxes (sch(M) unary relations)
    assertable: BTreeSet<Name>,
    /// rhs concepts of exists_sub plus assertable: the universe premise
    /// sets draw from
    bottom_universe: Vec<Name>,
    /// saturated concept set of a frontier node (all labels + all loops)
    top_node: BTreeSet<Name>,
    /// concepts whose presence makes any ABox inconsistent
    poison: BTreeSet<Name>,
    /// role disjointness sets
    disjoint: Vec<BTreeSet<Name>>,
}

fn validate_inputs(spec: &ObdaSpec, q_s: &Ucq, q_t: Option<&Ucq>) -> Result<(), DecisionError> {
    let mut diags = validate_spec(spec);
    diags.extend(validate_query(q_s, &spec.source_schema));
    if let Some(q_t) = q_t {
        diags.extend(validate_query(q_t, &spec.mapped_schema()));
        if q_s.arity() != q_t.arity() {
            return Err(DecisionError::Model(ModelError::ArityMismatch(format!(
                "source arity {} vs target arity {}",
                q_s.arity(),
                q_t.arity()
            ))));
        }
    }
    if diags.is_empty() {
        Ok(())
    } else {
        Err(DecisionError::Validation(diags))
    }
}

impl<'a> Ctx<'a> {
    fn new(
        spec: &'a ObdaSpec,
        q_s: &'a Ucq,
        q_t: &'a Ucq,
        cfg: &'a DecisionConfig,
    ) -> Result<Ctx<'a>, DecisionError> {
        validate_inputs(spec, q_s, Some(q_t))?;
        let sch_m = spec.mapped_schema();
        let omq = Omq {
            ontology: spec.ontology.clone(),
            schema: sch_m.clone(),
            query: q_t.clone(),
        };
        let engine = OmqEngine::new(&omq);
        let nf = core_normal_form(&spec.ontology, &sch_m);
        let assertable: BTreeSet<Name> = sch_m.unary_names().cloned().collect();
        let mut sub_exists = Vec::new();
        let mut exists_sub = Vec::new();
        let mut bottom: BTreeSet<Name> = assertable.clone();
        for ax in &nf.axioms {
            match ax {
                NfAxiom::SubExists(a, r, b) => {
                    sub_exists.push((a.clone(), r.name.clone(), r.inverse, b.clone()));
                }
                NfAxiom::ExistsSub(r, a, b) => {
                    exists_sub.push((r.name.clone(), r.inverse, a.clone(), b.clone()));
                    bottom.insert(b.clone());
                }
                _ => {}
            }
        }
        // saturated frontier-node type: all sch(M) labels plus all loops
        let reasoner = &engine.reasoner;
        let top_abox = top_node_abox(&sch_m, "w0");
        let top_sat = reasoner.saturate(&top_abox, &[]);
        let top_node = top_sat.concepts_of("w0");
        // poison concepts: a singleton {A(c)} is already inconsistent
        let mut poison = BTreeSet::new();
        for a in nf.concept_names() {
            let sat = reasoner.saturate(&Abox::new([Fact::new(a.clone(), vec!["p0".into()])]), &[]);
            if !sat.consistent {
                poison.insert(a);
            }
        }
        let axioms = PatternAxioms {
            sub_exists,
            exists_sub,
            assertable,
            bottom_universe: bottom.into_iter().collect(),
            top_node,
            poison,
            disjoint: nf.role_disjointness.clone(),
        };
        let frontier = q_s.max_disjunct_size().max(1);
        Ok(Ctx {
            spec,
            q_s,
            q_t,
            sch_m,
            engine,
            axioms,
            cfg,
            frontier,
        })
    }

    fn reasoner(&self) -> &Reasoner {
        &self.engine.reasoner
    }

    /// Materialized certain answers of the target OMQ over M(d).
    fn certain_over_image(&self, d: &Database) -> (Abox, Certain) {
        let image = apply_forward_db(&self.spec.mappings, d);
        let certain = self.engine.certain(&image);
        (image, certain)
    }
}

fn top_node_abox(schema: &Schema, name: &str) -> Abox {
    let mut facts = BTreeSet::new();
    for n in schema.unary_names() {
        facts.insert(Fact::new(n.clone(), vec![name.to_string()]));
    }
    for n in schema.binary_names() {
        facts.insert(Fact::new(n.clone(), vec![name.to_string(), name.to_string()]));
    }
    Abox { facts }
}

// ---------------------------------------------------------------------------
// forward inclusion

/// Decides q_s ⊆_S M⁻(q_r) via Lemma 1.3: for each disjunct q of q_s,
/// M(q) must be contained in the rewriting, i.e. its equality-quotiented
/// ABox view (with answer variables not occurring in any atom placed
/// generically) must have its tuple among the certain answers. Exact; no
/// enumeration beyond the finitely many placements.
pub fn forward_inclusion(spec: &ObdaSpec, q_s: &Ucq, q_t: &Ucq) -> Result<bool, DecisionError> {
    let cfg = DecisionConfig::default();
    let ctx = Ctx::new(spec, q_s, q_t, &cfg)?;
    for q in &q_s.disjuncts {
        let image = crate::mappings::apply_forward_query(&spec.mappings, q);
        if !cq_in_rewriting(&ctx, &image) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// p ⊆ q_r for the canonical rewriting of the target OMQ: every generic
/// placement of floating answer representatives must be certain.
fn cq_in_rewriting(ctx: &Ctx, p: &Cq) -> bool {
    for (abox, tuple) in placements(p, &ctx.sch_m) {
        match ctx.engine.certain(&abox) {
            Certain::Inconsistent => continue,
            Certain::Consistent(set) => {
                if !set.contains(&tuple) {
                    return false;
                }
            }
        }
    }
    true
}

/// All generic placements of a CQ viewed as a database with its answer
/// tuple: answer representatives that occur in no atom are anchored either
/// to an existing constant or to a fresh constant inside one generic fact
/// per (relation, position) of the schema.
fn placements(p: &Cq, schema: &Schema) -> Vec<(Database, Vec<Name>)> {
    let (pq, _) = p.quotient();
    let base = view_as_database(&pq);
    let adom = base.adom();
    let reps = pq.answer_vars.clone();
    let mut floats: Vec<Name> = Vec::new();
    for r in &reps {
        if !adom.contains(r) && !floats.contains(r) {
            floats.push(r.clone());
        }
    }
    // anchor shapes: an existing constant, or position i of relation R
    enum Place {
        Existing(Name),
        Generic(Name, usize, usize), // relation, arity, position
    }
    let mut shapes: Vec<Place> = adom.iter().cloned().map(Place::Existing).collect();
    for (rel, arity) in schema.iter() {
        for i in 0..arity {
            shapes.push(Place::Generic(rel.clone(), arity, i));
        }
    }
    if floats.is_empty() {
        // queries with variables need a nonempty domain; cover the empty
        // canonical database by one generic fact per relation
        if base.is_empty() && !pq.all_vars().is_empty() {
            let mut out = Vec::new();
            for (rel, arity) in schema.iter() {
                let facts = [Fact::new(
                    rel.clone(),
                    (0..arity).map(|k| format!("_g{}", k)).collect(),
                )];
                out.push((Database::new(facts), reps.clone()));
            }
            return out;
        }
        return vec![(base, reps)];
    }
    if shapes.is_empty() {
        // no relations at all: nothing can anchor a floating answer
        return vec![(base, reps)];
    }
    let mut out = Vec::new();
    let mut choice = vec![0usize; floats.len()];
    loop {
        let mut db = base.clone();
        let mut assignment: BTreeMap<Name, Name> = BTreeMap::new();
        let mut fresh = 0usize;
        for (f, &c) in floats.iter().zip(choice.iter()) {
            match &shapes[c] {
                Place::Existing(a) => {
                    assignment.insert(f.clone(), a.clone());
                }
                Place::Generic(rel, arity, pos) => {
                    let anchor = format!("_g{}", fresh);
                    fresh += 1;
                    let args: Vec<Name> = (0..*arity)
                        .map(|k| {
                            if k == *pos {
                                anchor.clone()
                            } else {
                                let partner = format!("_g{}", fresh);
                                fresh += 1;
                                partner
                            }
                        })
                        .collect();
                    db.facts.insert(Fact::new(rel.clone(), args));
                    assignment.insert(f.clone(), anchor);
                }
            }
        }
        let tuple: Vec<Name> = reps
            .iter()
            .map(|r| assignment.get(r).cloned().unwrap_or_else(|| r.clone()))
            .collect();
        out.push((db, tuple));
        // advance
        let mut pos = floats.len();
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            choice[pos] += 1;
            if choice[pos] < shapes.len() {
                break;
            }
            choice[pos] = 0;
        }
    }
}

/// The Definition-1 forward direction on the source side: every answer of
/// q_s must be certain over the mapped image, checked on the finitely many
/// generic instances of each disjunct. Returns a witness on failure.
fn definition1_forward(ctx: &Ctx) -> Option<Witness> {
    for q in &ctx.q_s.disjuncts {
        for (db, tuple) in placements(q, &ctx.spec.source_schema) {
            let (image, certain) = ctx.certain_over_image(&db);
            let ok = match &certain {
                Certain::Inconsistent => !ctx.cfg.consistent_only,
                Certain::Consistent(set) => set.contains(&tuple),
            };
            if !ok {
                let source_answers = evaluate(ctx.q_s, &db);
                // the placement construction guarantees tuple ∈ answers
                let certain_answers = certain.tuples(&image, ctx.q_s.arity());
                if source_answers.contains(&tuple) && !certain_answers.contains(&tuple) {
                    return Some(Witness {
                        database: db,
                        tuple,
                        source_answers,
                        certain_answers,
                    });
                }
            }
        }
    }
    None
}

/// True when every disjunct's forward image has all answer variables in
/// atoms, in which case q_s ⊆_S M⁻(q_r) holds outright for q_t = M(q_s).
fn forward_trivially_true(ctx: &Ctx) -> bool {
    ctx.q_s.disjuncts.iter().all(|q| {
        let image = crate::mappings::apply_forward_query(&ctx.spec.mappings, q);
        let (iq, _) = image.quotient();
        let adom = view_as_database(&iq).adom();
        iq.answer_vars.iter().all(|v| adom.contains(v))
    })
}

// ---------------------------------------------------------------------------
// backward inclusion

/// A candidate rewriting disjunct: an ABox over sch(M) with an answer
/// tuple over its domain.
#[derive(Debug, Clone)]
struct Candidate {
    abox: Abox,
    tuple: Vec<Name>,
    from_pattern: bool,
}

enum CandidateOutcome {
    Pass,
    /// certain-answer check failed for a pattern-built candidate:
    /// bookkeeping was off, demote exactness
    PatternCertMiss,
    ChoicesCapped,
    Fail(Box<BackwardDisjunct>),
}

fn check_candidate(ctx: &Ctx, cand: &Candidate) -> CandidateOutcome {
    let certain_ok = match ctx.engine.certain(&cand.abox) {
        Certain::Inconsistent => !ctx.cfg.consistent_only,
        Certain::Consistent(set) => set.contains(&cand.tuple),
    };
    if !certain_ok {
        return if cand.from_pattern {
            CandidateOutcome::PatternCertMiss
        } else {
            CandidateOutcome::Pass
        };
    }
    let choices = apply_backward(&ctx.spec.mappings, &cand.abox, &cand.tuple);
    if choices.dead_fact().is_some() {
        return CandidateOutcome::Pass;
    }
    let capped = choices.total_choices() > ctx.cfg.choice_cap;
    let mut examined: u128 = 0;
    #[allow(clippy::explicit_counter_loop)]
    for disjunct in choices {
        if examined >= ctx.cfg.choice_cap {
            break;
        }
        examined += 1;
        let mut covered = false;
        for q in &ctx.q_s.disjuncts {
            if find_cq_hom(q, &disjunct.cq)
                .ok()
                .flatten()
                .is_some()
            {
                covered = true;
                break;
            }
        }
        if !covered {
            return CandidateOutcome::Fail(Box::new(disjunct));
        }
    }
    if capped {
        CandidateOutcome::ChoicesCapped
    } else {
        CandidateOutcome::Pass
    }
}

fn witness_from_disjunct(ctx: &Ctx, d: &BackwardDisjunct, tuple: &[Name]) -> Option<Witness> {
    let database = d.source_db.clone();
    let source_answers = evaluate(ctx.q_s, &database);
    let (image, certain) = ctx.certain_over_image(&database);
    if ctx.cfg.consistent_only && certain == Certain::Inconsistent {
        return None;
    }
    let certain_answers = certain.tuples(&image, ctx.q_s.arity());
    let tuple = tuple.to_vec();
    // revalidate end to end before reporting
    if certain_answers.contains(&tuple) && !source_answers.contains(&tuple) {
        Some(Witness {
            database,
            tuple,
            source_answers,
            certain_answers,
        })
    } else {
        None
    }
}

/// Decides M⁻(q_r) ⊆_S q_s. Holds is only reported when the candidate
/// set provably covers every rewriting disjunct: the pattern source closed
/// and the source query is rooted (or the ontology has no ∃-lhs axioms),
/// or the sweep was flagged exhaustive by the caller.
pub fn backward_inclusion(
    spec: &ObdaSpec,
    q_s: &Ucq,
    q_t: &Ucq,
    cfg: &DecisionConfig,
) -> Result<(BackwardOutcome, BoundsReport), DecisionError> {
    let ctx = Ctx::new(spec, q_s, q_t, cfg)?;
    run_backward(&ctx)
}

fn run_backward(ctx: &Ctx) -> Result<(BackwardOutcome, BoundsReport), DecisionError> {
    let rooted = is_rooted_ucq(ctx.q_s);
    let no_exists_lhs = ctx.axioms.exists_sub.is_empty();
    // repeated-variable heads break the choice transfer along unravelings
    // (a split loop may lose its only suitable mapping), so coverage is
    // only claimed without them unless no derivation trees are needed
    let repeated_head = ctx
        .spec
        .mappings
        .iter()
        .any(|m| m.head_args.len() == 2 && m.head_args[0] == m.head_args[1]);
    let (patterns, patterns_closed) = pattern_candidates(ctx);
    let pattern_covering =
        patterns_closed && (rooted || no_exists_lhs) && (no_exists_lhs || !repeated_head);

    let mut candidates: Vec<Candidate> = patterns;
    let mut seen: HashSet<(Database, Vec<Name>)> = candidates
        .iter()
        .map(|c| candidate_key(&c.abox, &c.tuple))
        .collect();
    let mut capped = !patterns_closed;

    // when the pattern source provably covers every rewriting disjunct
    // (failures transfer into it along homomorphisms), the budgeted
    // sources below are redundant and skipped
    let arity = ctx.q_t.arity();
    let mut sweep_full = true;
    if !pattern_covering {
        // sweep of small arbitrary ABoxes (the bounded canonical rewriting)
        for_each_database(
            &ctx.sch_m,
            ctx.cfg.budget.max_core.max(1) + arity,
            ctx.cfg.budget.max_abox_size,
            true,
            &mut |abox| {
                for tuple in crate::reasoner::all_tuples(&abox.adom(), arity) {
                    if candidates.len() >= ctx.cfg.candidate_cap {
                        sweep_full = false;
                        return false;
                    }
                    let key = candidate_key(abox, &tuple);
                    if seen.insert(key) {
                        candidates.push(Candidate {
                            abox: abox.clone(),
                            tuple,
                            from_pattern: false,
                        });
                    }
                }
                true
            },
        );

        // budgeted pseudo-tree enumeration with frontier closure
        let frontier_depth = ctx.frontier.min(ctx.cfg.budget.max_depth);
        for_each_pseudo_tree(&ctx.sch_m, &ctx.cfg.budget, &mut |pta| {
            let closed = frontier_closure(pta, frontier_depth.min(pta.depth()), &ctx.sch_m);
            for tuple in pta.core_tuples(arity) {
                if candidates.len() >= ctx.cfg.candidate_cap {
                    sweep_full = false;
                    return false;
                }
                let key = candidate_key(&closed, &tuple);
                if seen.insert(key) {
                    candidates.push(Candidate {
                        abox: closed.clone(),
                        tuple,
                        from_pattern: false,
                    });
                }
            }
            true
        });
    }

    // deterministic order: small candidates first, pattern-found witnesses
    // keep their provenance for exactness accounting
    candidates.sort_by_key(|c| {
        (
            c.abox.len(),
            c.abox.facts.iter().cloned().collect::<Vec<_>>(),
            c.tuple.clone(),
        )
    });

    let mut pattern_cert_miss = false;
    let mut failure: Option<Witness> = None;
    let checked = candidates.len();
    let run_one = |cand: &Candidate| -> (Option<Witness>, bool, bool) {
        match check_candidate(ctx, cand) {
            CandidateOutcome::Pass => (None, false, false),
            CandidateOutcome::PatternCertMiss => (None, false, true),
            CandidateOutcome::ChoicesCapped => (None, true, false),
            CandidateOutcome::Fail(d) => {
                (witness_from_disjunct(ctx, &d, &cand.tuple), false, false)
            }
        }
    };
    if ctx.cfg.jobs > 1 {
        use rayon::prelude::*;
        // chunked scan: parallel within a chunk, short-circuit between
        // chunks, first-in-order witness for determinism
        for chunk in candidates.chunks(256) {
            let results: Vec<(Option<Witness>, bool, bool)> =
                chunk.par_iter().map(run_one).collect();
            for (w, cap, miss) in results {
                capped |= cap;
                pattern_cert_miss |= miss;
                if failure.is_none() {
                    failure = w;
                }
            }
            if failure.is_some() {
                break;
            }
        }
    } else {
        for cand in &candidates {
            let (w, cap, miss) = run_one(cand);
            capped |= cap;
            pattern_cert_miss |= miss;
            if let Some(w) = w {
                failure = Some(w);
                break;
            }
        }
    }

    let exact = (pattern_covering && !pattern_cert_miss)
        || (ctx.cfg.budget.exhaustive && sweep_full && !capped);
    let bounds = BoundsReport {
        rooted,
        exact,
        pipeline: if pattern_covering {
            "pattern".to_string()
        } else {
            "budgeted".to_string()
        },
        candidates_checked: checked,
        budget: ctx.cfg.budget.clone(),
        consistent_only: ctx.cfg.consistent_only,
    };
    let outcome = match failure {
        Some(w) => BackwardOutcome::Fails(w),
        None if exact && !capped => BackwardOutcome::Holds,
        None => BackwardOutcome::Unknown,
    };
    Ok((outcome, bounds))
}

fn candidate_key(abox: &Abox, tuple: &[Name]) -> (Database, Vec<Name>) {
    // canonicalize the ABox together with answer markers so isomorphic
    // candidates collapse
    let mut marked = abox.clone();
    for (i, c) in tuple.iter().enumerate() {
        marked
            .facts
            .insert(Fact::new(format!("_ans{}", i), vec![c.clone()]));
    }
    (canonical_database(&marked), Vec::new())
}

// ---------------------------------------------------------------------------
// the pattern source

/// Enumerates covering candidates from abstract match patterns of q_t.
/// Returns the candidates and whether enumeration closed without hitting
/// a cap.
fn pattern_candidates(ctx: &Ctx) -> (Vec<Candidate>, bool) {
    let mut out: Vec<Candidate> = Vec::new();
    let mut closed = true;
    let mut seen: HashSet<(Database, Vec<Name>)> = HashSet::new();
    for disjunct in &ctx.q_t.disjuncts {
        let (dq, _) = disjunct.quotient();
        let vars: Vec<Name> = dq.all_vars().into_iter().collect();
        if vars.len() > 7 {
            closed = false;
            continue;
        }
        for partition in partitions(&vars) {
            // map each variable to its block representative
            let block_of = |v: &Name| -> usize {
                partition.iter().position(|b| b.contains(v)).unwrap()
            };
            let merged = apply_partition(&dq, &partition);
            // answer classes must land in adom; quantified classes may
            // enter the anonymous forest when ∃-rhs axioms exist
            let answer_blocks: BTreeSet<usize> =
                dq.answer_vars.iter().map(block_of).collect();
            let quant_blocks: Vec<usize> = (0..partition.len())
                .filter(|b| !answer_blocks.contains(b))
                .collect();
            let anon_possible = !ctx.axioms.sub_exists.is_empty();
            let split_count = if anon_possible {
                1usize << quant_blocks.len()
            } else {
                1
            };
            if split_count > 256 {
                closed = false;
                continue;
            }
            for split_bits in 0..split_count {
                let anon_blocks: BTreeSet<usize> = quant_blocks
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| (split_bits >> i) & 1 == 1)
                    .map(|(_, b)| *b)
                    .collect();
                if !expand_split(
                    ctx,
                    &merged,
                    &partition,
                    &anon_blocks,
                    &mut out,
                    &mut seen,
                ) {
                    closed = false;
                }
                if out.len() > ctx.cfg.candidate_cap {
                    return (out, false);
                }
            }
        }
    }
    // inconsistency patterns (role disjointness can force every tuple to
    // be certain)
    if !ctx.cfg.consistent_only && !inconsistency_patterns(ctx, &mut out, &mut seen) {
        closed = false;
    }
    (out, closed)
}

/// All partitions of a variable set.
fn partitions(vars: &[Name]) -> Vec<Vec<BTreeSet<Name>>> {
    let mut out: Vec<Vec<BTreeSet<Name>>> = vec![Vec::new()];
    for v in vars {
        let mut next = Vec::new();
        for p in &out {
            for i in 0..p.len() {
                let mut q = p.clone();
                q[i].insert(v.clone());
                next.push(q);
            }
            let mut q = p.clone();
            q.push(BTreeSet::from([v.clone()]));
            next.push(q);
        }
        out = next;
    }
    out
}

fn apply_partition(q: &Cq, partition: &[BTreeSet<Name>]) -> Cq {
    let rep = |v: &Name| -> Name {
        let block = partition.iter().find(|b| b.contains(v)).unwrap();
        block.iter().next().unwrap().clone()
    };
    let atoms: Vec<Atom> = q
        .atoms
        .iter()
        .map(|a| match a {
            Atom::Rel { rel, args } => Atom::rel(rel.clone(), args.iter().map(&rep).collect()),
            Atom::Eq { left, right } => Atom::eq(rep(left), rep(right)),
        })
        .collect();
    Cq::new(q.answer_vars.iter().map(rep).collect(), atoms)
}

/// Expands one (partition, adom/anon split) pattern into candidates.
/// Returns false when a cap was hit.
fn expand_split(
    ctx: &Ctx,
    merged: &Cq,
    partition: &[BTreeSet<Name>],
    anon_blocks: &BTreeSet<usize>,
    out: &mut Vec<Candidate>,
    seen: &mut HashSet<(Database, Vec<Name>)>,
) -> bool {
    let block_of = |v: &Name| -> usize {
        partition.iter().position(|b| b.contains(v)).unwrap()
    };
    let is_anon = |v: &Name| anon_blocks.contains(&block_of(v));
    // classify atoms
    let mut core_edges: Vec<(Name, Name, Name)> = Vec::new(); // rel, u, v
    let mut requirements: BTreeMap<Name, BTreeSet<Name>> = BTreeMap::new();
    let mut fragment_atoms: Vec<Atom> = Vec::new();
    for (rel, args) in merged.relational_atoms() {
        let anon_args: Vec<bool> = args.iter().map(&is_anon).collect();
        if anon_args.iter().any(|&b| b) {
            fragment_atoms.push(Atom::rel(rel.clone(), args.clone()));
        } else {
            match args.len() {
                1 => {
                    requirements
                        .entry(args[0].clone())
                        .or_default()
                        .insert(rel.clone());
                }
                2 => core_edges.push((rel.clone(), args[0].clone(), args[1].clone())),
                _ => return true, // non-DL arity cannot appear over sch(M)
            }
        }
    }
    // group fragment atoms into connected anonymous components and find
    // their unique core attachment
    let components = anon_components(&fragment_atoms, &is_anon);
    let mut fragment_anchors: Vec<Option<Name>> = Vec::new();
    let mut fragment_sets: Vec<Vec<BTreeSet<Name>>> = Vec::new();
    for (anchor, atoms) in components {
        let anchor = match anchor {
            Attachment::None => None,
            Attachment::One(u) => Some(u),
            Attachment::Conflict => return true, // unrealizable split
        };
        // minimal requirement sets hosting this fragment
        let sets = fragment_requirement_sets(ctx, &anchor, &atoms);
        if sets.is_empty() {
            return true; // fragment cannot be hosted: unrealizable split
        }
        fragment_anchors.push(anchor);
        fragment_sets.push(sets);
    }

    // edge realizations: each core edge r(u,v) is provided by some
    // asserted schema fact entailing it
    let mut edge_options: Vec<Vec<(Name, bool)>> = Vec::new(); // (role, forward)
    for (rel, _, _) in &core_edges {
        let mut opts = Vec::new();
        for s in ctx.sch_m.binary_names() {
            if ctx.reasoner().role_entailed(
                &crate::model::Role::new(s.clone()),
                &crate::model::Role::new(rel.clone()),
            ) {
                opts.push((s.clone(), true));
            }
            if ctx.reasoner().role_entailed(
                &crate::model::Role::new(s.clone()),
                &crate::model::Role::inv(rel.clone()),
            ) {
                opts.push((s.clone(), false));
            }
        }
        if opts.is_empty() {
            return true; // edge cannot be realized: unrealizable pattern
        }
        edge_options.push(opts);
    }

    // iterate: edge choices × fragment requirement-set choices
    let mut edge_idx = vec![0usize; edge_options.len()];
    let mut ok = true;
    loop {
        let mut frag_idx = vec![0usize; fragment_sets.len()];
        loop {
            // assemble requirements for this combination
            let mut req = requirements.clone();
            let mut extra_hosts: Vec<(Name, BTreeSet<Name>)> = Vec::new();
            for (i, anchor) in fragment_anchors.iter().enumerate() {
                let set = &fragment_sets[i][frag_idx[i]];
                match anchor {
                    Some(u) => {
                        req.entry(u.clone()).or_default().extend(set.iter().cloned());
                    }
                    None => {
                        // a detached fragment may sit below any element;
                        // host it at a dedicated fresh constant
                        extra_hosts.push((format!("_h{}", i), set.clone()));
                    }
                }
            }
            let mut core_facts: BTreeSet<Fact> = BTreeSet::new();
            for (k, (_, u, v)) in core_edges.iter().enumerate() {
                let (role, forward) = &edge_options[k][edge_idx[k]];
                let (x, y) = if *forward {
                    (u.clone(), v.clone())
                } else {
                    (v.clone(), u.clone())
                };
                core_facts.insert(Fact::new(role.clone(), vec![x, y]));
            }
            if !emit_candidates(ctx, merged, core_facts, &req, &extra_hosts, out, seen) {
                ok = false;
            }
            if out.len() > ctx.cfg.candidate_cap {
                return false;
            }
            // advance fragment choices
            let mut pos = fragment_sets.len();
            let mut done = true;
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                frag_idx[pos] += 1;
                if frag_idx[pos] < fragment_sets[pos].len() {
                    done = false;
                    break;
                }
                frag_idx[pos] = 0;
            }
            if done {
                break;
            }
        }
        // advance edge choices
        let mut pos = edge_options.len();
        let mut done = true;
        loop {
            if pos == 0 {
                break;
            }
            pos -= 1;
            edge_idx[pos] += 1;
            if edge_idx[pos] < edge_options[pos].len() {
                done = false;
                break;
            }
            edge_idx[pos] = 0;
        }
        if done {
            break;
        }
    }
    ok
}

enum Attachment {
    None,
    One(Name),
    Conflict,
}

/// Connected components of the anonymous part of the match, each with its
/// core attachment point.
fn anon_components(
    fragment_atoms: &[Atom],
    is_anon: &dyn Fn(&Name) -> bool,
) -> Vec<(Attachment, Vec<Atom>)> {
    // union-find over anonymous variables
    let mut anon_vars: Vec<Name> = Vec::new();
    for a in fragment_atoms {
        for v in a.vars() {
            if is_anon(v) && !anon_vars.contains(v) {
                anon_vars.push(v.clone());
            }
        }
    }
    let mut parent: Vec<usize> = (0..anon_vars.len()).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] == i {
            i
        } else {
            let r = find(parent, parent[i]);
            parent[i] = r;
            r
        }
    }
    let idx = |v: &Name, anon_vars: &[Name]| anon_vars.iter().position(|x| x == v).unwrap();
    for a in fragment_atoms {
        let vs: Vec<usize> = a
            .vars()
            .into_iter()
            .filter(|v| is_anon(v))
            .map(|v| idx(v, &anon_vars))
            .collect();
        for w in vs.windows(2) {
            let (r1, r2) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
            if r1 != r2 {
                parent[r1] = r2;
            }
        }
    }
    let mut groups: BTreeMap<usize, (Attachment, Vec<Atom>)> = BTreeMap::new();
    for a in fragment_atoms {
        let root = a
            .vars()
            .into_iter()
            .find(|v| is_anon(v))
            .map(|v| find(&mut parent, idx(v, &anon_vars)))
            .unwrap();
        let entry = groups.entry(root).or_insert((Attachment::None, Vec::new()));
        entry.1.push(a.clone());
        for v in a.vars() {
            if !is_anon(v) {
                entry.0 = match std::mem::replace(&mut entry.0, Attachment::None) {
                    Attachment::None => Attachment::One(v.clone()),
                    Attachment::One(u) if u == *v => Attachment::One(u),
                    _ => Attachment::Conflict,
                };
            }
        }
    }
    groups.into_values().collect()
}

/// Minimal sets S of ∃-lhs concepts such that the fragment (with its
/// anchor pinned to the root) matches into the anonymous forest below an
/// element saturated from S. Monotone in S, so minimal sets are complete.
fn fragment_requirement_sets(
    ctx: &Ctx,
    anchor: &Option<Name>,
    atoms: &[Atom],
) -> Vec<BTreeSet<Name>> {
    let triggers: BTreeSet<Name> = ctx
        .axioms
        .sub_exists
        .iter()
        .map(|(a, _, _, _)| a.clone())
        .collect();
    let triggers: Vec<Name> = triggers.into_iter().collect();
    if triggers.is_empty() {
        return Vec::new();
    }
    let mut found: Vec<BTreeSet<Name>> = Vec::new();
    // subsets by increasing size; skip supersets of found sets
    let n = triggers.len();
    if n > 12 {
        return Vec::new(); // give up: pattern source will report not-closed
    }
    for mask in 0u32..(1u32 << n) {
        let set: BTreeSet<Name> = (0..n)
            .filter(|i| (mask >> i) & 1 == 1)
            .map(|i| triggers[i].clone())
            .collect();
        if found.iter().any(|f| f.is_subset(&set)) {
            continue;
        }
        if fragment_hosted(ctx, anchor, atoms, &set) {
            found.push(set);
        }
    }
    found.sort_by_key(|s| (s.len(), s.iter().cloned().collect::<Vec<_>>()));
    found
}

/// Tests whether the fragment matches into the anonymous forest below a
/// root element carrying (the closure of) `set`, with the anchor variable
/// mapped to the root and all other variables mapped to anonymous
/// elements.
fn fragment_hosted(ctx: &Ctx, anchor: &Option<Name>, atoms: &[Atom], set: &BTreeSet<Name>) -> bool {
    let root = "_root".to_string();
    let abox = Abox::new(set.iter().map(|a| Fact::new(a.clone(), vec![root.clone()])));
    let reasoner = ctx.reasoner();
    let sat = reasoner.saturate(&abox, std::slice::from_ref(&root));
    if !sat.consistent {
        return false;
    }
    let mut vars: BTreeSet<Name> = BTreeSet::new();
    for a in atoms {
        vars.extend(a.vars().into_iter().cloned());
    }
    let model = reasoner.universal_model_for_matching(&sat, vars.len() + 1);
    // answer variables: anchor first (pinned to root), anonymous vars next
    let anon_vars: Vec<Name> = vars
        .iter()
        .filter(|v| Some(*v) != anchor.as_ref())
        .cloned()
        .collect();
    let mut answer = Vec::new();
    if let Some(a) = anchor {
        answer.push(a.clone());
    }
    answer.extend(anon_vars.iter().cloned());
    let probe = Cq::new(answer, atoms.iter().cloned());
    for tuple in crate::homomorphism::evaluate_cq(&probe, &model.db) {
        let mut i = 0usize;
        let mut ok = true;
        if anchor.is_some() {
            if tuple[0] != root {
                ok = false;
            }
            i = 1;
        }
        if ok && tuple[i..].iter().all(|c| model.anonymous.contains(c)) {
            return true;
        }
    }
    false
}

/// Builds candidates for fixed core facts and requirements by enumerating
/// derivation-support forests and anchors. Returns false when a cap hits.
fn emit_candidates(
    ctx: &Ctx,
    merged: &Cq,
    core_facts: BTreeSet<Fact>,
    requirements: &BTreeMap<Name, BTreeSet<Name>>,
    extra_hosts: &[(Name, BTreeSet<Name>)],
    out: &mut Vec<Candidate>,
    seen: &mut HashSet<(Database, Vec<Name>)>,
) -> bool {
    // support plans per constant with requirements
    let mut stations: Vec<(Name, BTreeSet<Name>)> = requirements
        .iter()
        .filter(|(_, req)| !req.is_empty())
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    stations.extend(extra_hosts.iter().cloned());
    let mut plan_options: Vec<Vec<SupPlan>> = Vec::new();
    for (_, req) in &stations {
        match support_plans(ctx, req, ctx.frontier) {
            Some(plans) if !plans.is_empty() => plan_options.push(plans),
            _ => return true, // requirement underivable or capped: see below
        }
    }
    // cartesian product over stations
    let mut idx = vec![0usize; plan_options.len()];
    loop {
        let mut facts = core_facts.clone();
        let mut fresh = 0usize;
        for (k, (constant, _)) in stations.iter().enumerate() {
            materialize_plan(
                ctx,
                &plan_options[k][idx[k]],
                constant,
                &mut facts,
                &mut fresh,
            );
        }
        // answer anchors: every answer class must occur in some fact
        let abox = Abox { facts };
        let tuple: Vec<Name> = merged.answer_vars.clone();
        let adom = abox.adom();
        let unanchored: BTreeSet<Name> = tuple
            .iter()
            .filter(|c| !adom.contains(*c))
            .cloned()
            .collect();
        if unanchored.is_empty() {
            push_candidate(ctx, abox, tuple, out, seen);
        } else {
            // one anchor shape per unanchored constant
            let shapes = anchor_shapes(ctx);
            if shapes.is_empty() {
                return true;
            }
            let floats: Vec<Name> = unanchored.into_iter().collect();
            let mut choice = vec![0usize; floats.len()];
            loop {
                let mut facts2 = abox.facts.clone();
                let mut w = 0usize;
                for (f, &c) in floats.iter().zip(choice.iter()) {
                    facts2.extend(shapes[c].instantiate(f, &mut w));
                }
                push_candidate(
                    ctx,
                    Abox { facts: facts2 },
                    tuple.clone(),
                    out,
                    seen,
                );
                if out.len() > ctx.cfg.candidate_cap {
                    return false;
                }
                let mut pos = floats.len();
                let mut done = true;
                loop {
                    if pos == 0 {
                        break;
                    }
                    pos -= 1;
                    choice[pos] += 1;
                    if choice[pos] < shapes.len() {
                        done = false;
                        break;
                    }
                    choice[pos] = 0;
                }
                if done {
                    break;
                }
            }
        }
        if out.len() > ctx.cfg.candidate_cap {
            return false;
        }
        // advance
        let mut pos = plan_options.len();
        let mut done = true;
        loop {
            if pos == 0 {
                break;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < plan_options[pos].len() {
                done = false;
                break;
            }
            idx[pos] = 0;
        }
        if done {
            return true;
        }
    }
}

fn push_candidate(
    ctx: &Ctx,
    abox: Abox,
    tuple: Vec<Name>,
    out: &mut Vec<Candidate>,
    seen: &mut HashSet<(Database, Vec<Name>)>,
) {
    let _ = ctx;
    let key = candidate_key(&abox, &tuple);
    if seen.insert(key) {
        out.push(Candidate {
            abox,
            tuple,
            from_pattern: true,
        });
    }
}

/// An anchor: one fact shape that places a constant into the domain.
enum AnchorShape {
    Unary(Name),
    /// binary relation with the anchored constant at the given position;
    /// the partner is a fresh bare constant
    Binary(Name, usize),
}

impl AnchorShape {
    fn instantiate(&self, c: &Name, fresh: &mut usize) -> Vec<Fact> {
        match self {
            AnchorShape::Unary(rel) => vec![Fact::new(rel.clone(), vec![c.clone()])],
            AnchorShape::Binary(rel, pos) => {
                let partner = format!("_w{}", fresh);
                *fresh += 1;
                let args = if *pos == 0 {
                    vec![c.clone(), partner]
                } else {
                    vec![partner, c.clone()]
                };
                vec![Fact::new(rel.clone(), args)]
            }
        }
    }
}

fn anchor_shapes(ctx: &Ctx) -> Vec<AnchorShape> {
    let mut shapes: Vec<AnchorShape> = Vec::new();
    for n in ctx.sch_m.unary_names() {
        shapes.push(AnchorShape::Unary(n.clone()));
    }
    for n in ctx.sch_m.binary_names() {
        shapes.push(AnchorShape::Binary(n.clone(), 0));
        shapes.push(AnchorShape::Binary(n.clone(), 1));
    }
    shapes
}

/// A derivation-support plan for one node: asserted labels plus children
/// that either carry their own plan or are saturated frontier nodes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct SupPlan {
    asserted: BTreeSet<Name>,
    children: Vec<(Name, bool, SupChild)>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum SupChild {
    Frontier,
    Plan(SupPlan),
}

impl SupPlan {
    fn empty() -> SupPlan {
        SupPlan {
            asserted: BTreeSet::new(),
            children: Vec::new(),
        }
    }

    fn merge(&self, other: &SupPlan) -> SupPlan {
        let mut merged = self.clone();
        merged.asserted.extend(other.asserted.iter().cloned());
        merged.children.extend(other.children.iter().cloned());
        merged.children.sort();
        merged.children.dedup();
        merged
    }
}

/// Enumerates derivation plans for a set of required concepts at one node
/// with `depth_left` tree levels available. None means a cap was hit.
fn support_plans(ctx: &Ctx, req: &BTreeSet<Name>, depth_left: usize) -> Option<Vec<SupPlan>> {
    let mut plans = vec![SupPlan::empty()];
    for concept in req {
        let options = concept_plans(ctx, concept, depth_left)?;
        if options.is_empty() {
            return Some(Vec::new()); // underivable requirement
        }
        let mut next = Vec::new();
        for p in &plans {
            for o in &options {
                next.push(p.merge(o));
                if next.len() > ctx.cfg.support_cap {
                    return None;
                }
            }
        }
        next.sort();
        next.dedup();
        plans = next;
    }
    Some(plans)
}

/// Ways to make one concept hold at a node: assert it (sch(M) concepts
/// only), get it for free from the ontology, derive it from a minimal
/// bottom-level premise set, or pull it across one edge to a child.
fn concept_plans(ctx: &Ctx, concept: &Name, depth_left: usize) -> Option<Vec<SupPlan>> {
    let mut out: Vec<SupPlan> = Vec::new();
    // free: holds at every element
    if ctx.reasoner().subsumes(&BTreeSet::new(), concept) {
        out.push(SupPlan::empty());
        return Some(out); // nothing can be more general
    }
    if ctx.axioms.assertable.contains(concept) {
        out.push(SupPlan {
            asserted: BTreeSet::from([concept.clone()]),
            children: Vec::new(),
        });
    }
    // one edge step per ∃-lhs axiom concluding the concept
    for plan in edge_plans(ctx, concept, depth_left)? {
        out.push(plan);
    }
    // minimal premise sets over the bottom universe
    let universe: Vec<Name> = ctx
        .axioms
        .bottom_universe
        .iter()
        .filter(|b| *b != concept)
        .cloned()
        .collect();
    if universe.len() <= 12 {
        let mut minimal: Vec<BTreeSet<Name>> = Vec::new();
        for mask in 1u32..(1u32 << universe.len()) {
            let set: BTreeSet<Name> = (0..universe.len())
                .filter(|i| (mask >> i) & 1 == 1)
                .map(|i| universe[i].clone())
                .collect();
            if minimal.iter().any(|m| m.is_subset(&set)) {
                continue;
            }
            if !set.is_empty() && ctx.reasoner().subsumes(&set, concept) {
                minimal.push(set);
            }
        }
        for set in minimal {
            // premise members are bottom-level: derive each without
            // another conjunction step
            let mut partial = vec![SupPlan::empty()];
            let mut dead = false;
            for member in &set {
                let mut opts: Vec<SupPlan> = Vec::new();
                if ctx.axioms.assertable.contains(member) {
                    opts.push(SupPlan {
                        asserted: BTreeSet::from([member.clone()]),
                        children: Vec::new(),
                    });
                }
                if ctx.reasoner().subsumes(&BTreeSet::new(), member) {
                    opts.push(SupPlan::empty());
                }
                opts.extend(edge_plans(ctx, member, depth_left)?);
                if opts.is_empty() {
                    dead = true;
                    break;
                }
                let mut next = Vec::new();
                for p in &partial {
                    for o in &opts {
                        next.push(p.merge(o));
                        if next.len() > ctx.cfg.support_cap {
                            return None;
                        }
                    }
                }
                partial = next;
            }
            if !dead {
                out.extend(partial);
            }
        }
    } else {
        return None; // too many bottom concepts to enumerate premise sets
    }
    out.sort();
    out.dedup();
    if out.len() > ctx.cfg.support_cap {
        return None;
    }
    Some(out)
}

/// Plans that derive `concept` through one ∃s.B ⊑ concept step across an
/// asserted schema edge to a child.
fn edge_plans(ctx: &Ctx, concept: &Name, depth_left: usize) -> Option<Vec<SupPlan>> {
    let mut out = Vec::new();
    for (s_name, s_inv, premise, conclusion) in &ctx.axioms.exists_sub {
        if conclusion != concept {
            continue;
        }
        let target = crate::model::Role {
            name: s_name.clone(),
            inverse: *s_inv,
        };
        for rho in ctx.sch_m.binary_names() {
            for outward in [true, false] {
                // fact rho(x, child) realizes signed role rho; inward
                // facts realize rho⁻
                let signed = if outward {
                    crate::model::Role::new(rho.clone())
                } else {
                    crate::model::Role::inv(rho.clone())
                };
                if !ctx.reasoner().role_entailed(&signed, &target) {
                    continue;
                }
                if depth_left == 0 {
                    continue;
                }
                if depth_left == 1 {
                    // the child is a saturated frontier node
                    if ctx.axioms.top_node.contains(premise) {
                        out.push(SupPlan {
                            asserted: BTreeSet::new(),
                            children: vec![(rho.clone(), outward, SupChild::Frontier)],
                        });
                    }
                } else {
                    let child_plans =
                        support_plans(ctx, &BTreeSet::from([premise.clone()]), depth_left - 1)?;
                    for cp in child_plans {
                        out.push(SupPlan {
                            asserted: BTreeSet::new(),
                            children: vec![(rho.clone(), outward, SupChild::Plan(cp))],
                        });
                        if out.len() > ctx.cfg.support_cap {
                            return None;
                        }
                    }
                }
            }
        }
    }
    Some(out)
}

fn materialize_plan(
    ctx: &Ctx,
    plan: &SupPlan,
    node: &Name,
    facts: &mut BTreeSet<Fact>,
    fresh: &mut usize,
) {
    for a in &plan.asserted {
        facts.insert(Fact::new(a.clone(), vec![node.clone()]));
    }
    for (role, outward, child) in &plan.children {
        let child_name = format!("_s{}", fresh);
        *fresh += 1;
        let (x, y) = if *outward {
            (node.clone(), child_name.clone())
        } else {
            (child_name.clone(), node.clone())
        };
        facts.insert(Fact::new(role.clone(), vec![x, y]));
        match child {
            SupChild::Frontier => {
                for n in ctx.sch_m.unary_names() {
                    facts.insert(Fact::new(n.clone(), vec![child_name.clone()]));
                }
                for n in ctx.sch_m.binary_names() {
                    facts.insert(Fact::new(
                        n.clone(),
                        vec![child_name.clone(), child_name.clone()],
                    ));
                }
            }
            SupChild::Plan(p) => materialize_plan(ctx, p, &child_name, facts, fresh),
        }
    }
}

/// Candidates whose certain answers are trivially everything because the
/// ABox is inconsistent: role-disjointness violations realized on a pair
/// of constants, and poison concepts derived at a host.
fn inconsistency_patterns(
    ctx: &Ctx,
    out: &mut Vec<Candidate>,
    seen: &mut HashSet<(Database, Vec<Name>)>,
) -> bool {
    if ctx.axioms.disjoint.is_empty() && ctx.axioms.poison.is_empty() {
        return true;
    }
    let arity = ctx.q_t.arity();
    let mut cores: Vec<Abox> = Vec::new();
    // pairwise violations: for each disjointness set, each role gets an
    // asserted schema fact on the pair (a, b) in one of two orientations
    for set in &ctx.axioms.disjoint {
        let roles: Vec<Name> = set.iter().cloned().collect();
        let mut options: Vec<Vec<Fact>> = Vec::new();
        for r in &roles {
            let mut opts = Vec::new();
            for s in ctx.sch_m.binary_names() {
                if ctx.reasoner().role_entailed(
                    &crate::model::Role::new(s.clone()),
                    &crate::model::Role::new(r.clone()),
                ) {
                    opts.push(Fact::new(s.clone(), vec!["a".into(), "b".into()]));
                }
                if ctx.reasoner().role_entailed(
                    &crate::model::Role::new(s.clone()),
                    &crate::model::Role::inv(r.clone()),
                ) {
                    opts.push(Fact::new(s.clone(), vec!["b".into(), "a".into()]));
                }
            }
            if opts.is_empty() {
                options.clear();
                break;
            }
            options.push(opts);
        }
        if options.is_empty() {
            continue;
        }
        let mut idx = vec![0usize; options.len()];
        loop {
            let abox = Abox::new(idx.iter().enumerate().map(|(i, &j)| options[i][j].clone()));
            cores.push(abox.clone());
            // merged-pair variant
            let merged = Abox::new(abox.facts.iter().map(|f| {
                Fact::new(f.rel.clone(), f.args.iter().map(|_| "a".to_string()).collect())
            }));
            cores.push(merged);
            let mut pos = options.len();
            let mut done = true;
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < options[pos].len() {
                    done = false;
                    break;
                }
                idx[pos] = 0;
            }
            if done {
                break;
            }
        }
    }
    // poison concepts derived at a dedicated host
    let mut closed = true;
    for p in &ctx.axioms.poison {
        match support_plans(ctx, &BTreeSet::from([p.clone()]), ctx.frontier) {
            None => closed = false,
            Some(plans) => {
                for plan in plans {
                    let mut facts = BTreeSet::new();
                    let mut fresh = 0usize;
                    materialize_plan(ctx, &plan, &"a".to_string(), &mut facts, &mut fresh);
                    if facts.iter().any(|f| f.args.contains(&"a".to_string())) {
                        cores.push(Abox { facts });
                    } else {
                        // host must occur in the ABox: anchor it
                        for shape in anchor_shapes(ctx) {
                            let mut fs = facts.clone();
                            let mut w = 0usize;
                            fs.extend(shape.instantiate(&"a".to_string(), &mut w));
                            cores.push(Abox { facts: fs });
                        }
                    }
                }
            }
        }
    }
    // attach answer anchors: tuples over existing constants or freshly
    // anchored ones
    for core in cores {
        let adom = core.adom();
        let mut targets: Vec<Name> = adom.iter().cloned().collect();
        targets.push("_y".to_string()); // one shared fresh anchored constant
        let tuples = crate::reasoner::all_tuples(&targets.iter().cloned().collect(), arity);
        for tuple in tuples {
            if tuple.iter().any(|c| c == "_y") {
                for shape in anchor_shapes(ctx) {
                    let mut facts = core.facts.clone();
                    let mut w = 100usize;
                    facts.extend(shape.instantiate(&"_y".to_string(), &mut w));
                    push_candidate(ctx, Abox { facts }, tuple.clone(), out, seen);
                }
            } else {
                push_candidate(ctx, core.clone(), tuple.clone(), out, seen);
            }
            if out.len() > ctx.cfg.candidate_cap {
                return false;
            }
        }
    }
    closed
}

// ---------------------------------------------------------------------------
// verify / expressible

/// Decides whether q_t is a realization of q_s in the specification.
pub fn verify(
    spec: &ObdaSpec,
    q_s: &Ucq,
    q_t: &Ucq,
    cfg: &DecisionConfig,
) -> Result<Verdict, DecisionError> {
    let ctx = Ctx::new(spec, q_s, q_t, cfg)?;
    // Definition-1 forward direction, exact on generic instances
    if let Some(witness) = definition1_forward(&ctx) {
        let (_, bounds) = run_backward(&ctx)?;
        return Ok(Verdict {
            outcome: Outcome::No,
            realization: None,
            witness: Some(witness),
            bounds: BoundsReport {
                pipeline: "forward".to_string(),
                ..bounds
            },
        });
    }
    let (backward, bounds) = run_backward(&ctx)?;
    Ok(match backward {
        BackwardOutcome::Fails(witness) => Verdict {
            outcome: Outcome::No,
            realization: None,
            witness: Some(witness),
            bounds,
        },
        BackwardOutcome::Holds => Verdict {
            outcome: Outcome::Yes,
            realization: None,
            witness: None,
            bounds,
        },
        BackwardOutcome::Unknown => Verdict {
            outcome: Outcome::Unknown,
            realization: None,
            witness: None,
            bounds,
        },
    })
}

/// Decides whether q_s is expressible; the candidate realization is
/// always M(q_s).
pub fn expressible(
    spec: &ObdaSpec,
    q_s: &Ucq,
    cfg: &DecisionConfig,
) -> Result<Verdict, DecisionError> {
    validate_inputs(spec, q_s, None)?;
    let q_t = apply_forward_ucq(&spec.mappings, q_s);
    let ctx = Ctx::new(spec, q_s, &q_t, cfg)?;
    // the forward inclusion holds outright when every forward image keeps
    // its answer variables in atoms; otherwise check the generic instances
    if !forward_trivially_true(&ctx) {
        if let Some(witness) = definition1_forward(&ctx) {
            let (_, bounds) = run_backward(&ctx)?;
            return Ok(Verdict {
                outcome: Outcome::No,
                realization: None,
                witness: Some(witness),
                bounds: BoundsReport {
                    pipeline: "forward".to_string(),
                    ..bounds
                },
            });
        }
    }
    let (backward, bounds) = run_backward(&ctx)?;
    Ok(match backward {
        BackwardOutcome::Fails(witness) => Verdict {
            outcome: Outcome::No,
            realization: None,
            witness: Some(witness),
            bounds,
        },
        BackwardOutcome::Holds => Verdict {
            outcome: Outcome::Yes,
            realization: Some(q_t),
            witness: None,
            bounds,
        },
        BackwardOutcome::Unknown => Verdict {
            outcome: Outcome::Unknown,
            realization: None,
            witness: None,
            bounds,
        },
    })
}
