//! Shared fixtures for the criterion benchmarks.

use obdex_core::model::{ObdaSpec, Ucq};
use obdex_core::qbf::{Literal, QbfFormula};
use obdex_core::textio::{parse_query, parse_spec};

pub const EXAMPLE_SPEC: &str = r#"
schema { Man/2 Emp/3 }
mappings {
  Man(x,z), Emp(y,z,u) -> manages(x,y);
  Emp(x,y,z) -> Employee(x);
  Man(x,y) -> Manager(x);
}
ontology el {
  Manager [= Employee;
  Manager [= exists manages.Secretary;
}
"#;

pub fn example_spec() -> ObdaSpec {
    parse_spec(EXAMPLE_SPEC).expect("fixture spec")
}

pub fn join_query(spec: &ObdaSpec) -> Ucq {
    parse_query("q(x,y) :- Man(x,z), Emp(y,z,u).", &spec.source_schema).expect("fixture query")
}

/// A satisfiable ∀∃-3CNF instance with the given number of universal
/// variables; query and mapping sizes grow linearly with it.
pub fn qbf_instance(universals: usize) -> (ObdaSpec, Ucq) {
    let u = |index: usize, positive: bool| Literal::Universal { index, positive };
    let e = |index: usize, positive: bool| Literal::Existential { index, positive };
    let clauses = (0..universals)
        .map(|i| [e(0, true), u(i, i % 2 == 0), e(1, false)])
        .collect();
    let phi = QbfFormula {
        universal_count: universals,
        existential_count: 2,
        clauses,
    };
    obdex_core::qbf::qbf_to_instance(&phi).expect("valid formula")
}
