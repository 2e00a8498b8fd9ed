//! Command-line front end: expressibility checking, realization
//! verification, DL-Lite rewriting, chase dumps, containment tests, QBF
//! instance generation, and the brute-force oracle.
//!
//! Exit codes: 0 = yes, 1 = no, 2 = unknown, >2 = error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use obdex_core::decision::{self, DecisionConfig, Outcome};
use obdex_core::homomorphism::ucq_contained;
use obdex_core::model::{ObdaSpec, Schema, Ucq};
use obdex_core::oracle::{brute_force_realization_check, OracleConfig, OracleResult};
use obdex_core::qbf;
use obdex_core::reasoner::{core_normal_form, Omq, Reasoner};
use obdex_core::rewriting::{canonical_rewriting_dllite, RewritingBudget};
use obdex_core::textio;

#[derive(Parser)]
#[command(
    name = "obdex",
    about = "Expressibility and verification of source queries in OBDA specifications",
    long_about = "Decides whether a source (U)CQ is expressible as a target UCQ over the\n\
                  vocabulary exposed by GAV mappings and a DL-Lite/EL/ELHI ontology, and\n\
                  verifies candidate realizations.\n\n\
                  Verdicts are three-valued. \"yes\" is only reported when the search is\n\
                  provably complete (rooted source queries, or an empty ontology, or an\n\
                  explicitly exhaustive budget); counterexamples are revalidated before\n\
                  they are reported. The exhaustive completeness threshold for rooted\n\
                  ELHI instances is an ABox domain of |q_t| + |q_t|*|O|^(|q_s|+1), which\n\
                  is usually far beyond the default budgets."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct BudgetArgs {
    /// Maximum facts per enumerated candidate ABox
    #[arg(long, default_value_t = 4)]
    max_abox: usize,
    /// Maximum core constants for pseudo-tree candidates
    #[arg(long, default_value_t = 3)]
    max_core: usize,
    /// Maximum outdegree for pseudo-tree candidates
    #[arg(long, default_value_t = 2)]
    max_outdegree: usize,
    /// Maximum tree depth for pseudo-tree candidates
    #[arg(long, default_value_t = 2)]
    max_depth: usize,
    /// Assert that the budget covers the completeness bound; positive
    /// verdicts are then claimed even for searches that are not provably
    /// complete on their own
    #[arg(long, default_value_t = false)]
    exhaustive: bool,
    /// Skip source databases whose mapped image is inconsistent
    #[arg(long, default_value_t = false)]
    consistent_only: bool,
    /// Worker threads for the candidate search
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

impl BudgetArgs {
    fn decision_config(&self) -> DecisionConfig {
        DecisionConfig {
            budget: RewritingBudget {
                max_abox_size: self.max_abox,
                max_core: self.max_core,
                max_outdegree: self.max_outdegree,
                max_depth: self.max_depth,
                exhaustive: self.exhaustive,
            },
            consistent_only: self.consistent_only,
            jobs: self.jobs,
            ..DecisionConfig::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether the source query is expressible over the target
    /// vocabulary
    Check {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        source_query: PathBuf,
        #[command(flatten)]
        budget: BudgetArgs,
        /// Emit the verdict as JSON
        #[arg(long, default_value_t = false)]
        json: bool,
    },
    /// Verify that a candidate target query realizes the source query
    Verify {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        source_query: PathBuf,
        #[arg(long)]
        target_query: PathBuf,
        #[command(flatten)]
        budget: BudgetArgs,
        #[arg(long, default_value_t = false)]
        json: bool,
    },
    /// Emit the canonical DL-Lite UCQ-rewriting of the target OMQ
    Rewrite {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        target_query: PathBuf,
        /// Fact bound for the canonical rewriting
        #[arg(long, default_value_t = 2)]
        max_abox: usize,
    },
    /// Saturate an ABox and dump a depth-bounded unraveling
    Chase {
        #[arg(long)]
        spec: PathBuf,
        /// ABox over sch(M) plus ontology names (.db)
        #[arg(long)]
        abox: PathBuf,
        #[arg(long, default_value_t = 2)]
        max_depth: usize,
    },
    /// Test UCQ containment (source-query ⊆ target-query over the source
    /// schema); exit 0 = contained, 1 = not contained
    Containment {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        source_query: PathBuf,
        #[arg(long)]
        target_query: PathBuf,
    },
    /// Build an expressibility instance from a ∀∃-3CNF formula
    GenQbf {
        /// DIMACS-like input (a/e prefix lines, 3-literal clauses); omit
        /// to generate a random formula from --seed
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Universal variables for random generation
        #[arg(long, default_value_t = 2)]
        universals: usize,
        /// Existential variables for random generation
        #[arg(long, default_value_t = 3)]
        existentials: usize,
        /// Clauses for random generation
        #[arg(long, default_value_t = 3)]
        clauses: usize,
        #[arg(long)]
        out_spec: PathBuf,
        #[arg(long)]
        out_query: PathBuf,
    },
    /// Brute-force semantic check of a candidate realization
    Oracle {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        source_query: PathBuf,
        #[arg(long)]
        target_query: PathBuf,
        /// Constant-pool size for the database sweep
        #[arg(long, default_value_t = 3)]
        max_domain: usize,
        /// Fact bound for the database sweep
        #[arg(long, default_value_t = 5)]
        max_facts: usize,
        #[arg(long, default_value_t = false)]
        consistent_only: bool,
        #[arg(long, default_value_t = false)]
        json: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {}", message);
            ExitCode::from(3)
        }
    }
}

fn read_text(path: &Path) -> Result<String, String> {
    let bytes = std::fs::read(path).map_err(|e| format!("{}: {}", path.display(), e))?;
    textio::decode_utf8(&bytes)
        .map(str::to_string)
        .map_err(|e| format!("{}: {}", path.display(), e))
}

fn load_spec(path: &Path) -> Result<ObdaSpec, String> {
    let text = read_text(path)?;
    textio::parse_spec(&text).map_err(|e| format!("{}: {}", path.display(), e))
}

fn load_query(path: &Path, schema: &Schema) -> Result<Ucq, String> {
    let text = read_text(path)?;
    textio::parse_query(&text, schema).map_err(|e| format!("{}: {}", path.display(), e))
}

fn verdict_exit(v: &decision::Verdict, json: bool) -> ExitCode {
    if json {
        println!(
            "{}",
            serde_json::to_string_pretty(&textio::verdict_to_json(v)).unwrap()
        );
    } else {
        print!("{}", textio::render_verdict(v));
    }
    match v.outcome {
        Outcome::Yes => ExitCode::from(0),
        Outcome::No => ExitCode::from(1),
        Outcome::Unknown => ExitCode::from(2),
    }
}

fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> T {
    if jobs > 1 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .expect("thread pool")
            .install(f)
    } else {
        f()
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Check {
            spec,
            source_query,
            budget,
            json,
        } => {
            let spec = load_spec(&spec)?;
            let q_s = load_query(&source_query, &spec.source_schema)?;
            let cfg = budget.decision_config();
            let verdict = with_pool(cfg.jobs, || decision::expressible(&spec, &q_s, &cfg))
                .map_err(|e| e.to_string())?;
            Ok(verdict_exit(&verdict, json))
        }
        Command::Verify {
            spec,
            source_query,
            target_query,
            budget,
            json,
        } => {
            let spec = load_spec(&spec)?;
            let q_s = load_query(&source_query, &spec.source_schema)?;
            let q_t = load_query(&target_query, &spec.mapped_schema())?;
            let cfg = budget.decision_config();
            let verdict = with_pool(cfg.jobs, || decision::verify(&spec, &q_s, &q_t, &cfg))
                .map_err(|e| e.to_string())?;
            Ok(verdict_exit(&verdict, json))
        }
        Command::Rewrite {
            spec,
            target_query,
            max_abox,
        } => {
            let spec = load_spec(&spec)?;
            let schema = spec
                .target_schema()
                .ok_or("ontology and mapping arities conflict")?;
            let q_t = load_query(&target_query, &schema)?;
            let omq = Omq {
                ontology: spec.ontology.clone(),
                schema,
                query: q_t,
            };
            match canonical_rewriting_dllite(&omq, max_abox).map_err(|e| e.to_string())? {
                Some(rw) => print!("{}", textio::render_query(&rw)),
                None => println!("# empty rewriting: no certain answers within the bound"),
            }
            Ok(ExitCode::from(0))
        }
        Command::Chase {
            spec,
            abox,
            max_depth,
        } => {
            let spec = load_spec(&spec)?;
            let schema = spec
                .target_schema()
                .ok_or("ontology and mapping arities conflict")?;
            let text = read_text(&abox)?;
            let abox = textio::parse_database(&text, &schema)
                .map_err(|e| format!("{}: {}", abox.display(), e))?;
            let nf = core_normal_form(&spec.ontology, &schema);
            let reasoner = Reasoner::new(&nf, &schema);
            let sat = reasoner.saturate(&abox, &[]);
            if !sat.consistent {
                println!("# inconsistent: role disjointness violated");
                return Ok(ExitCode::from(0));
            }
            println!("# saturated ABox");
            print!("{}", textio::render_database(&sat.atomic_facts()));
            let model = reasoner.universal_model(&sat, max_depth);
            println!("\n# universal model unraveled to depth {}", max_depth);
            print!("{}", textio::render_database(&model.db));
            Ok(ExitCode::from(0))
        }
        Command::Containment {
            spec,
            source_query,
            target_query,
        } => {
            let spec = load_spec(&spec)?;
            let q1 = load_query(&source_query, &spec.source_schema)?;
            let q2 = load_query(&target_query, &spec.source_schema)?;
            let contained = ucq_contained(&q1, &q2).map_err(|e| e.to_string())?;
            println!("{}", contained);
            Ok(ExitCode::from(u8::from(!contained)))
        }
        Command::GenQbf {
            input,
            seed,
            universals,
            existentials,
            clauses,
            out_spec,
            out_query,
        } => {
            let phi = match input {
                Some(path) => {
                    let text = read_text(&path)?;
                    qbf::parse_qdimacs(&text)?
                }
                None => random_formula(seed, universals, existentials, clauses)?,
            };
            let (spec, q_s) = qbf::qbf_to_instance(&phi).map_err(|e| e.to_string())?;
            std::fs::write(&out_spec, textio::render_spec(&spec))
                .map_err(|e| format!("{}: {}", out_spec.display(), e))?;
            std::fs::write(&out_query, textio::render_query(&q_s))
                .map_err(|e| format!("{}: {}", out_query.display(), e))?;
            println!(
                "formula is {} (brute force); instance written to {} and {}",
                if qbf::qbf_brute_eval(&phi) {
                    "true"
                } else {
                    "false"
                },
                out_spec.display(),
                out_query.display()
            );
            Ok(ExitCode::from(0))
        }
        Command::Oracle {
            spec,
            source_query,
            target_query,
            max_domain,
            max_facts,
            consistent_only,
            json,
        } => {
            let spec = load_spec(&spec)?;
            let q_s = load_query(&source_query, &spec.source_schema)?;
            let q_t = load_query(&target_query, &spec.mapped_schema())?;
            let cfg = OracleConfig {
                max_domain,
                max_facts,
                consistent_only,
            };
            let result = brute_force_realization_check(&spec, &q_s, &q_t, &cfg);
            match result {
                OracleResult::ConsistentUpTo {
                    max_domain,
                    max_facts,
                } => {
                    if json {
                        println!(
                            "{}",
                            serde_json::json!({
                                "result": "consistent-up-to",
                                "max_domain": max_domain,
                                "max_facts": max_facts,
                            })
                        );
                    } else {
                        println!(
                            "consistent up to {} constants / {} facts (not a proof)",
                            max_domain, max_facts
                        );
                    }
                    Ok(ExitCode::from(0))
                }
                OracleResult::Counterexample { database, tuple } => {
                    if json {
                        let facts: Vec<Vec<String>> = database
                            .facts
                            .iter()
                            .map(|f| {
                                let mut row = vec![f.rel.clone()];
                                row.extend(f.args.iter().cloned());
                                row
                            })
                            .collect();
                        println!(
                            "{}",
                            serde_json::json!({
                                "result": "counterexample",
                                "database": facts,
                                "tuple": tuple,
                            })
                        );
                    } else {
                        println!("counterexample tuple ({})", tuple.join(","));
                        print!("{}", textio::render_database(&database));
                    }
                    Ok(ExitCode::from(1))
                }
            }
        }
    }
}

fn random_formula(
    seed: u64,
    universals: usize,
    existentials: usize,
    clauses: usize,
) -> Result<qbf::QbfFormula, String> {
    if universals == 0 || existentials < 2 {
        return Err("need at least 1 universal and 2 existential variables".to_string());
    }
    // small deterministic generator keyed on the seed
    let mut state = seed.wrapping_add(0x9e3779b97f4a7c15);
    let mut next = || {
        state = state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    };
    let total = universals + existentials;
    let mut cs = Vec::with_capacity(clauses);
    for _ in 0..clauses {
        let mut clause = [qbf::Literal::Existential {
            index: 0,
            positive: true,
        }; 3];
        for slot in clause.iter_mut() {
            let v = (next() % total as u64) as usize;
            let positive = next() % 2 == 0;
            *slot = if v < universals {
                qbf::Literal::Universal { index: v, positive }
            } else {
                qbf::Literal::Existential {
                    index: v - universals,
                    positive,
                }
            };
        }
        cs.push(clause);
    }
    let phi = qbf::QbfFormula {
        universal_count: universals,
        existential_count: existentials,
        clauses: cs,
    };
    phi.validate().map_err(|e| e.to_string())?;
    Ok(phi)
}
