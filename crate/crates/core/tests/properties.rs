//! Property tests for the spec-level invariants that are not already part
//! of the acceptance suite.

use std::collections::BTreeSet;

use proptest::prelude::*;

use obdex_core::decision::{verify, DecisionConfig, Outcome};
use obdex_core::homomorphism::{cq_contained, evaluate, evaluate_cq, find_cq_hom, ucq_contained};
use obdex_core::model::{
    is_rooted, view_as_cq, view_as_database, Atom, Cq, Database, Fact, Name, Schema, Ucq,
};
use obdex_core::oracle::{brute_force_realization_check, OracleConfig, OracleResult};
use obdex_core::reasoner::{certain_answers, core_normal_form, Certain, Omq, OmqEngine, Reasoner};
use obdex_core::rewriting::{canonical_rewriting_dllite, for_each_database, frontier_closure, for_each_pseudo_tree, RewritingBudget};
use obdex_core::testgen::{random_abox, random_instance, random_normal_form, random_target_query, rng_for, GenProfile};
use obdex_core::textio::{parse_database, parse_query, parse_spec, render_database, render_query, render_spec};

fn v(s: &str) -> Name {
    s.to_string()
}

// ---------------------------------------------------------------------------
// core-model

#[test]
fn view_roundtrip_is_equality_quotient() {
    let profile = GenProfile::default();
    for seed in 0..100u64 {
        let (spec, q) = random_instance(seed, &profile);
        let _ = spec;
        let cq = &q.disjuncts[0];
        let (quotiented, _) = cq.quotient();
        let db = view_as_database(&quotiented);
        if db.is_empty() {
            continue;
        }
        // viewing back as a CQ (no answer tuple) and as a database again
        // reproduces the quotiented facts
        let back = view_as_cq(&db, &[]).unwrap();
        assert_eq!(view_as_database(&back), db, "seed {}", seed);
    }
}

#[test]
fn rootedness_is_monotone_under_connecting_atoms() {
    let profile = GenProfile {
        rooted: true,
        ..GenProfile::default()
    };
    for seed in 0..100u64 {
        let (spec, q) = random_instance(seed, &profile);
        let cq = &q.disjuncts[0];
        assert!(is_rooted(cq));
        // adding an atom that connects a fresh variable to an answer
        // variable keeps the query rooted
        let first = spec
            .source_schema
            .iter()
            .next()
            .map(|(rel, arity)| (rel.clone(), arity));
        if let Some((rel, arity)) = first {
            if arity >= 2 && !cq.answer_vars.is_empty() {
                let mut args = vec![cq.answer_vars[0].clone()];
                args.extend((1..arity).map(|i| format!("fresh{}", i)));
                let mut atoms: Vec<Atom> = cq.atoms.iter().cloned().collect();
                atoms.push(Atom::rel(rel, args));
                let grown = Cq::new(cq.answer_vars.clone(), atoms);
                assert!(is_rooted(&grown), "seed {}", seed);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// homomorphism

#[test]
fn identity_hom_and_preorder() {
    let profile = GenProfile {
        rooted: false,
        ..GenProfile::default()
    };
    for seed in 0..150u64 {
        let (spec, q) = random_instance(seed, &profile);
        let cq = &q.disjuncts[0];
        // find_cq_hom(q, q) always succeeds (the identity is a witness);
        // any hom found maps atoms into atoms of the same query
        let h = find_cq_hom(cq, cq).unwrap().expect("self-hom");
        let reps = cq.equality_representatives();
        for (x1, x2) in cq.answer_vars.iter().zip(cq.answer_vars.iter()) {
            assert_eq!(reps[&h.assignment[x1]], reps[x2], "seed {}", seed);
        }
        // transitivity on a random triple built by atom addition
        let mut rng = rng_for(seed ^ 77);
        let extra1 = random_target_query(&mut rng, &spec.source_schema, 1, 0);
        let mut atoms1: Vec<Atom> = cq.atoms.iter().cloned().collect();
        atoms1.extend(extra1.disjuncts[0].atoms.iter().cloned());
        let q1 = Cq::new(cq.answer_vars.clone(), atoms1.clone());
        let extra2 = random_target_query(&mut rng, &spec.source_schema, 1, 0);
        let mut atoms2 = atoms1;
        atoms2.extend(extra2.disjuncts[0].atoms.iter().cloned());
        let q2 = Cq::new(cq.answer_vars.clone(), atoms2);
        assert!(cq_contained(&q1, cq).unwrap());
        assert!(cq_contained(&q2, &q1).unwrap());
        assert!(cq_contained(&q2, cq).unwrap(), "transitivity at seed {}", seed);
    }
}

/// Safe queries (answer variables occurring in atoms): hom-containment
/// coincides with evaluation-containment over all databases with a small
/// domain.
#[test]
fn containment_agrees_with_evaluation() {
    let profile = GenProfile {
        rooted: true, // rooted queries keep every answer variable anchored
        max_query_atoms: 2,
        max_answer_vars: 1,
        ..GenProfile::default()
    };
    let mut checked = 0usize;
    let mut seed = 0u64;
    while checked < 60 {
        seed += 1;
        let (spec, q1) = random_instance(seed, &profile);
        let mut rng = rng_for(seed ^ 0xa5a5);
        let q2 = {
            
            random_target_query(&mut rng, &spec.source_schema, 2, q1.arity())
        };
        // skip unsafe q2 (answer variable in no atom)
        let safe = q2.disjuncts.iter().all(|cq| {
            let occurring: BTreeSet<&Name> =
                cq.relational_atoms().flat_map(|(_, args)| args).collect();
            let reps = cq.equality_representatives();
            cq.answer_vars
                .iter()
                .all(|x| occurring.iter().any(|o| reps[*o] == reps[x]))
        });
        if !safe {
            continue;
        }
        let hom = ucq_contained(&q1, &q2).unwrap();
        let max_vars = q1
            .disjuncts
            .iter()
            .chain(q2.disjuncts.iter())
            .map(|c| c.all_vars().len())
            .max()
            .unwrap_or(1);
        let mut semantic = true;
        for_each_database(&spec.source_schema, max_vars.max(1), 4, true, &mut |d| {
            if !evaluate(&q1, d).is_subset(&evaluate(&q2, d)) {
                semantic = false;
                return false;
            }
            true
        });
        assert_eq!(hom, semantic, "seed {}", seed);
        checked += 1;
    }
}

// ---------------------------------------------------------------------------
// reasoner

#[test]
fn certain_answers_depth_stable_and_monotone() {
    let mut seed = 0u64;
    let mut checked = 0usize;
    while checked < 60 {
        seed += 1;
        let mut rng = rng_for(seed);
        let (nf, schema) = random_normal_form(&mut rng, 3, 1, 3, true);
        let abox = random_abox(&mut rng, &schema, 3, 3);
        if abox.is_empty() {
            continue;
        }
        let query = random_target_query(&mut rng, &schema, 2, 1);
        let reasoner = Reasoner::new(&nf, &schema);
        let sat = reasoner.saturate(&abox, &[]);
        if !sat.consistent {
            continue;
        }
        let max_vars = query
            .disjuncts
            .iter()
            .map(|q| q.all_vars().len())
            .max()
            .unwrap();
        // evaluating at increasing depths beyond the completeness bound
        // (#reachable types + #variables) never changes the answers
        // restricted to adom
        let adom = abox.adom();
        let answers_at = |depth: usize| -> BTreeSet<Vec<Name>> {
            let model = reasoner.universal_model(&sat, depth);
            evaluate(&query, &model.db)
                .into_iter()
                .filter(|t| t.iter().all(|c| adom.contains(c)))
                .collect()
        };
        let base_depth = reasoner.reachable_anon_types(&sat) + max_vars;
        let stable = answers_at(base_depth);
        assert_eq!(stable, answers_at(base_depth + 1), "seed {}", seed);
        assert_eq!(stable, answers_at(base_depth + 2), "seed {}", seed);
        // the path-cut materialization used by certain-answer computation
        // agrees with the uniform-depth bound
        let pathcut = {
            let model = reasoner.universal_model_for_matching(&sat, max_vars);
            evaluate(&query, &model.db)
                .into_iter()
                .filter(|t| t.iter().all(|c| adom.contains(c)))
                .collect::<BTreeSet<Vec<Name>>>()
        };
        assert_eq!(stable, pathcut, "seed {}", seed);

        // monotone in the ABox
        let mut bigger = abox.clone();
        bigger
            .facts
            .extend(random_abox(&mut rng, &schema, 3, 2).facts);
        let sat2 = reasoner.saturate(&bigger, &[]);
        if sat2.consistent {
            let model2 = reasoner.universal_model_for_matching(&sat2, max_vars);
            let answers2: BTreeSet<Vec<Name>> = evaluate(&query, &model2.db)
                .into_iter()
                .filter(|t| t.iter().all(|c| bigger.adom().contains(c)))
                .collect();
            assert!(
                stable.is_subset(&answers2),
                "certain answers must be monotone, seed {}",
                seed
            );
        }
        checked += 1;
    }
}

// ---------------------------------------------------------------------------
// rewriting

#[test]
fn canonical_rewriting_is_rewriting_on_its_domain() {
    let mut seed = 0u64;
    let mut checked = 0usize;
    while checked < 25 {
        seed += 1;
        let profile = GenProfile {
            dialect: obdex_core::model::Dialect::DlLiteRHorn,
            max_cis: 2,
            ..GenProfile::default()
        };
        let (spec, _) = random_instance(seed, &profile);
        let schema = spec.mapped_schema();
        if schema.is_empty() || !spec.ontology.role_disjointness.is_empty() {
            continue;
        }
        let mut rng = rng_for(seed ^ 3);
        let query = random_target_query(&mut rng, &schema, 2, 1);
        let omq = Omq {
            ontology: spec.ontology.clone(),
            schema: schema.clone(),
            query: query.clone(),
        };
        let bound = 2usize;
        let Some(rewriting) = canonical_rewriting_dllite(&omq, bound).unwrap() else {
            continue;
        };
        // on every ABox of the enumeration domain, evaluating the
        // rewriting equals the certain answers
        let engine = OmqEngine::new(&omq);
        for_each_database(&schema, bound * 2, bound, true, &mut |abox| {
            let lhs = evaluate(&rewriting, abox);
            let rhs = engine.certain(abox).tuples(abox, 1);
            assert_eq!(lhs, rhs, "seed {} at {:?}", seed, abox);
            true
        });
        // enlarging the bound keeps the rewriting equivalent on that domain
        if let Some(larger) = canonical_rewriting_dllite(&omq, bound + 1).unwrap() {
            for_each_database(&schema, bound * 2, bound, true, &mut |abox| {
                assert_eq!(
                    evaluate(&rewriting, abox),
                    evaluate(&larger, abox),
                    "bound stability violated at seed {}",
                    seed
                );
                true
            });
        }
        checked += 1;
    }
}

#[test]
fn frontier_closure_receives_hom_from_original() {
    let schema = Schema::from_pairs([(v("A"), 1), (v("r"), 2)]);
    let budget = RewritingBudget {
        max_abox_size: 4,
        max_core: 2,
        max_outdegree: 2,
        max_depth: 3,
        exhaustive: false,
    };
    let mut checked = 0usize;
    for_each_pseudo_tree(&schema, &budget, &mut |pta| {
        let closed = frontier_closure(pta, 1.min(pta.depth()), &schema);
        let original = pta.abox();
        if original.is_empty() {
            return true;
        }
        // read both as Boolean CQs; a hom original → closed must exist
        let orig_q = Cq::new(
            Vec::new(),
            original
                .facts
                .iter()
                .map(|f| Atom::rel(f.rel.clone(), f.args.clone())),
        );
        let closed_q = Cq::new(
            Vec::new(),
            closed
                .facts
                .iter()
                .map(|f| Atom::rel(f.rel.clone(), f.args.clone())),
        );
        assert!(
            find_cq_hom(&orig_q, &closed_q).unwrap().is_some(),
            "no hom into the frontier closure of {:?}",
            original
        );
        checked += 1;
        checked < 200
    });
    assert!(checked > 50);
}

// ---------------------------------------------------------------------------
// decision vs Definition 1

#[test]
fn verify_yes_agrees_with_definition_on_small_databases() {
    let profile = GenProfile::default();
    let cfg = DecisionConfig::default();
    let mut seed = 0u64;
    let mut yes_checked = 0usize;
    while yes_checked < 25 && seed < 400 {
        seed += 1;
        let (spec, q_s) = random_instance(seed, &profile);
        let sch_m = spec.mapped_schema();
        if sch_m.is_empty() {
            continue;
        }
        let mut rng = rng_for(seed ^ 0xc0de);
        let q_t = random_target_query(&mut rng, &sch_m, 2, q_s.arity());
        let Ok(verdict) = verify(&spec, &q_s, &q_t, &cfg) else {
            continue;
        };
        if verdict.outcome != Outcome::Yes {
            continue;
        }
        let oracle = brute_force_realization_check(
            &spec,
            &q_s,
            &q_t,
            &OracleConfig {
                max_domain: 3,
                max_facts: 4,
                consistent_only: false,
            },
        );
        assert!(
            matches!(oracle, OracleResult::ConsistentUpTo { .. }),
            "seed {}: verify=Yes refuted by the oracle",
            seed
        );
        yes_checked += 1;
    }
    assert!(yes_checked >= 10, "too few Yes instances sampled");
}

// ---------------------------------------------------------------------------
// textio round trips and fuzzing

#[test]
fn roundtrip_generated_objects() {
    let profile = GenProfile {
        rooted: false,
        ..GenProfile::default()
    };
    for seed in 0..150u64 {
        let (spec, q) = random_instance(seed, &profile);
        let spec2 = parse_spec(&render_spec(&spec)).unwrap();
        assert_eq!(render_spec(&spec2), render_spec(&spec), "seed {}", seed);

        let text = render_query(&q);
        let q2 = parse_query(&text, &spec.source_schema).unwrap();
        assert_eq!(render_query(&q2), text, "seed {}", seed);

        let mut rng = rng_for(seed);
        let db = random_abox(&mut rng, &spec.source_schema, 3, 4);
        let db2 = parse_database(&render_database(&db), &spec.source_schema).unwrap();
        assert_eq!(db2, db, "seed {}", seed);
    }
}

proptest! {
    /// Parsing never panics: every input yields a value or a located
    /// diagnostic.
    #[test]
    fn parse_is_total(input in "\\PC*") {
        let _ = parse_spec(&input);
        let _ = parse_query(&input, &Schema::from_pairs([(v("R"), 1)]));
        let _ = parse_database(&input, &Schema::from_pairs([(v("R"), 1)]));
    }

    /// Structured soup stays panic-free too.
    #[test]
    fn parse_is_total_on_token_soup(tokens in proptest::collection::vec(
        proptest::sample::select(vec![
            "schema", "mappings", "ontology", "el", "facts", "{", "}", "(", ")",
            "[=", "->", ":-", ",", ";", ".", "/", "&", "-", "=", "R", "x", "1",
            "exists", "top", "bot", "role", "#c\n",
        ]),
        0..40,
    )) {
        let input = tokens.join(" ");
        let _ = parse_spec(&input);
        let _ = parse_query(&input, &Schema::from_pairs([(v("R"), 1)]));
    }
}

// ---------------------------------------------------------------------------
// reasoner example from the spec: evaluation respects equalities after
// mapping application end to end

#[test]
fn certain_answers_trivial_without_ontology() {
    let schema = Schema::from_pairs([(v("A"), 1), (v("r"), 2)]);
    let mut rng = rng_for(17);
    for _ in 0..40 {
        let abox = random_abox(&mut rng, &schema, 3, 4);
        let query = random_target_query(&mut rng, &schema, 2, 1);
        let omq = Omq {
            ontology: obdex_core::model::Ontology::empty(obdex_core::model::Dialect::El),
            schema: schema.clone(),
            query: query.clone(),
        };
        match certain_answers(&omq, &abox) {
            Certain::Consistent(tuples) => assert_eq!(tuples, evaluate(&query, &abox)),
            Certain::Inconsistent => panic!("empty ontology cannot be inconsistent"),
        }
    }
}

// ---------------------------------------------------------------------------
// QBF evaluator cross-check

/// A second evaluator written directly against the semantics: recursion
/// over the quantifier prefix instead of bit enumeration.
fn qbf_eval_recursive(phi: &obdex_core::qbf::QbfFormula) -> bool {
    use obdex_core::qbf::Literal;
    fn clause_true(clause: &[Literal; 3], xs: &[bool], ys: &[bool]) -> bool {
        clause.iter().any(|l| match l {
            Literal::Universal { index, positive } => xs[*index] == *positive,
            Literal::Existential { index, positive } => ys[*index] == *positive,
        })
    }
    fn forall(phi: &obdex_core::qbf::QbfFormula, xs: &mut Vec<bool>) -> bool {
        if xs.len() == phi.universal_count {
            let mut ys = Vec::new();
            return exists(phi, xs, &mut ys);
        }
        for b in [false, true] {
            xs.push(b);
            let ok = forall(phi, xs);
            xs.pop();
            if !ok {
                return false;
            }
        }
        true
    }
    fn exists(phi: &obdex_core::qbf::QbfFormula, xs: &[bool], ys: &mut Vec<bool>) -> bool {
        if ys.len() == phi.existential_count {
            return phi.clauses.iter().all(|c| clause_true(c, xs, ys));
        }
        for b in [false, true] {
            ys.push(b);
            let ok = exists(phi, xs, ys);
            ys.pop();
            if ok {
                return true;
            }
        }
        false
    }
    forall(phi, &mut Vec::new())
}

#[test]
fn qbf_evaluators_agree_on_random_formulas() {
    use obdex_core::qbf::{qbf_brute_eval, Literal, QbfFormula};
    let mut rng = rng_for(99);
    use rand::Rng;
    for _ in 0..300 {
        let universals = rng.gen_range(1..=2usize);
        let existentials = rng.gen_range(2..=3usize);
        let nclauses = rng.gen_range(1..=4usize);
        let total = universals + existentials;
        let clauses: Vec<[Literal; 3]> = (0..nclauses)
            .map(|_| {
                let mut clause = [Literal::Existential {
                    index: 0,
                    positive: true,
                }; 3];
                for slot in clause.iter_mut() {
                    let v = rng.gen_range(0..total);
                    let positive = rng.gen_bool(0.5);
                    *slot = if v < universals {
                        Literal::Universal { index: v, positive }
                    } else {
                        Literal::Existential {
                            index: v - universals,
                            positive,
                        }
                    };
                }
                clause
            })
            .collect();
        let phi = QbfFormula {
            universal_count: universals,
            existential_count: existentials,
            clauses,
        };
        assert_eq!(qbf_brute_eval(&phi), qbf_eval_recursive(&phi));
    }
}

#[test]
fn saturation_concepts_match_model_checking_on_tiny_ontology() {
    // {∃r.∃s.A ⊑ B} normalized is conservative: spot-check entailment on
    // a concrete chain
    let mut o = obdex_core::model::Ontology::empty(obdex_core::model::Dialect::Elhi);
    o.concept_inclusions.push((
        obdex_core::model::Concept::exists(
            obdex_core::model::Role::new("r"),
            obdex_core::model::Concept::exists(
                obdex_core::model::Role::new("s"),
                obdex_core::model::Concept::name("A"),
            ),
        ),
        obdex_core::model::Concept::name("B"),
    ));
    let schema = Schema::from_pairs([(v("A"), 1), (v("B"), 1), (v("r"), 2), (v("s"), 2)]);
    let nf = core_normal_form(&o, &schema);
    let reasoner = Reasoner::new(&nf, &schema);
    let abox = Database::new([
        Fact::new("r", vec![v("a"), v("b")]),
        Fact::new("s", vec![v("b"), v("c")]),
        Fact::new("A", vec![v("c")]),
    ]);
    let sat = reasoner.saturate(&abox, &[]);
    let facts = sat.atomic_facts();
    assert!(facts.facts.contains(&Fact::new("B", vec![v("a")])));
    assert!(!facts.facts.contains(&Fact::new("B", vec![v("b")])));
    // and the B-query sees it
    let q = Ucq::singleton(Cq::new(vec![v("x")], [Atom::rel("B", vec![v("x")])]));
    let model = reasoner.universal_model(&sat, 2);
    let ans = evaluate_cq(&q.disjuncts[0], &model.db);
    assert!(ans.contains(&vec![v("a")]));
}
