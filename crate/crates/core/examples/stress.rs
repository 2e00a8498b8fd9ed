//! One-off randomized stress run: decision vs brute-force oracle.
use obdex_core::decision::{expressible, DecisionConfig, Outcome};
use obdex_core::homomorphism::evaluate;
use obdex_core::mappings::{apply_forward_db, apply_forward_ucq};
use obdex_core::oracle::{brute_force_realization_check, OracleConfig, OracleResult};
use obdex_core::reasoner::{Omq, OmqEngine};
use obdex_core::testgen::{random_instance, GenProfile};

fn main() {
    let cfg = DecisionConfig::default();
    let mut yes = 0;
    let mut no = 0;
    let mut unknown = 0;
    let args: Vec<String> = std::env::args().collect();
    let n: u64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(1000);
    let repeated: bool = args.get(2).map(|s| s == "rep").unwrap_or(false);
    for seed in 0..n {
        let profile = GenProfile {
            dialect: match seed % 4 {
                0 => obdex_core::model::Dialect::El,
                1 => obdex_core::model::Dialect::Elhi,
                2 => obdex_core::model::Dialect::DlLiteRHorn,
                _ => obdex_core::model::Dialect::El,
            },
            max_cis: if seed % 5 == 4 { 0 } else { 3 },
            max_query_atoms: 2 + (seed as usize % 2),
            allow_repeated_heads: repeated,
            rooted: !repeated || seed % 3 != 0,
            ..GenProfile::default()
        };
        let (spec, q_s) = random_instance(seed.wrapping_mul(7919).wrapping_add(13), &profile);
        let verdict = match expressible(&spec, &q_s, &cfg) {
            Ok(v) => v,
            Err(e) => { println!("seed {}: error {}", seed, e); continue; }
        };
        let q_t = apply_forward_ucq(&spec.mappings, &q_s);
        let vars = q_s.disjuncts.iter().map(|q| q.all_vars().len()).max().unwrap();
        let oracle_cfg = OracleConfig { max_domain: vars + 2, max_facts: 4, consistent_only: false };
        let oracle = brute_force_realization_check(&spec, &q_s, &q_t, &oracle_cfg);
        match (&verdict.outcome, &oracle) {
            (Outcome::Yes, OracleResult::Counterexample { database, tuple }) => {
                println!("UNSOUND YES at seed {}: D={:?} t={:?}", seed, database, tuple);
                std::process::exit(1);
            }
            (Outcome::No, _) => {
                no += 1;
                let w = verdict.witness.as_ref().unwrap();
                let answers = evaluate(&q_s, &w.database);
                let image = apply_forward_db(&spec.mappings, &w.database);
                let certain = OmqEngine::new(&Omq {
                    ontology: spec.ontology.clone(),
                    schema: spec.mapped_schema(),
                    query: q_t.clone(),
                }).certain(&image).tuples(&image, q_s.arity());
                if answers.contains(&w.tuple) == certain.contains(&w.tuple) {
                    println!("INVALID WITNESS at seed {}", seed);
                    std::process::exit(1);
                }
            }
            (Outcome::Yes, _) => yes += 1,
            (Outcome::Unknown, OracleResult::Counterexample { .. }) => {
                println!("MISSED COUNTEREXAMPLE (unknown) at seed {}", seed);
                std::process::exit(1);
            }
            (Outcome::Unknown, _) => unknown += 1,
        }
        if matches!(oracle, OracleResult::Counterexample { .. }) && verdict.outcome != Outcome::No {
            println!("DISAGREEMENT at seed {}", seed);
            std::process::exit(1);
        }
    }
    println!("stress ok: {} yes / {} no / {} unknown", yes, no, unknown);
}
