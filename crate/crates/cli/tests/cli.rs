//! End-to-end tests of the command-line interface: exit codes, JSON
//! output, and the gen-qbf → check round trip.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_obdex"))
}

struct Workspace {
    dir: PathBuf,
}

impl Workspace {
    fn new(name: &str) -> Workspace {
        let dir = std::env::temp_dir().join(format!("obdex-cli-{}-{}", name, std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        std::fs::create_dir_all(&dir).unwrap();
        Workspace { dir }
    }

    fn file(&self, name: &str, contents: &str) -> PathBuf {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).unwrap();
        path
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }
}

impl Drop for Workspace {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.dir);
    }
}

const SPEC: &str = "schema { Man/2 Emp/3 }\n\
     mappings {\n\
       Man(x,z), Emp(y,z,u) -> manages(x,y);\n\
       Emp(x,y,z) -> Employee(x);\n\
       Man(x,y) -> Manager(x);\n\
     }\n\
     ontology el {\n\
       Manager [= Employee;\n\
       Manager [= exists manages.Secretary;\n\
     }\n";

#[test]
fn exit_codes_follow_the_contract() {
    let ws = Workspace::new("exit");
    let spec = ws.file("spec.obda", SPEC);
    let man = ws.file("man.uq", "q(x) :- Man(x,y).\n");
    let emp = ws.file("emp.uq", "q(x) :- Emp(x,y,z).\n");
    let employee = ws.file("employee.uq", "q(x) :- Employee(x).\n");

    // yes → 0
    let out = bin()
        .args(["check", "--spec"])
        .arg(&spec)
        .arg("--source-query")
        .arg(&man)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{:?}", out);

    // no → 1
    let out = bin()
        .args(["verify", "--spec"])
        .arg(&spec)
        .arg("--source-query")
        .arg(&emp)
        .arg("--target-query")
        .arg(&employee)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "{:?}", out);

    // unknown → 2: an unrooted source query over an ontology with
    // ∃-on-the-left axioms is only searched up to the budget
    let unrooted_spec = ws.file(
        "unrooted.obda",
        "schema { R/2 }\nmappings { R(x,y) -> r(x,y) }\n\
         ontology elhi { A [= exists r.A; exists r.A [= B; }\n",
    );
    let boolean = ws.file("bool.uq", "q() :- R(u,v).\n");
    let out = bin()
        .args(["check", "--spec"])
        .arg(&unrooted_spec)
        .arg("--source-query")
        .arg(&boolean)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{:?}", out);

    // parse error → >2
    let bad = ws.file("bad.uq", "q(x) :- Nope(x).\n");
    let out = bin()
        .args(["check", "--spec"])
        .arg(&spec)
        .arg("--source-query")
        .arg(&bad)
        .output()
        .unwrap();
    assert!(out.status.code().unwrap() > 2, "{:?}", out);
}

#[test]
fn json_verdict_has_the_documented_shape() {
    let ws = Workspace::new("json");
    let spec = ws.file("spec.obda", SPEC);
    let emp = ws.file("emp.uq", "q(x) :- Emp(x,y,z).\n");
    let out = bin()
        .args(["check", "--spec"])
        .arg(&spec)
        .arg("--source-query")
        .arg(&emp)
        .arg("--json")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let value: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(value["verdict"], "no");
    let witness = &value["witness"];
    assert!(witness["database"].is_array());
    assert!(witness["tuple"].is_array());
    assert!(witness["source_answers"].is_array());
    assert!(witness["certain_answers"].is_array());
    assert!(value["bounds"]["exact"].as_bool().unwrap());
}

#[test]
fn gen_qbf_round_trips_through_check() {
    let ws = Workspace::new("qbf");
    let input = ws.file("phi.qdimacs", "a 1 0\ne 2 3 0\n1 2 3 0\n-1 2 -3 0\n");
    let spec = ws.path("phi.obda");
    let query = ws.path("phi.uq");
    let out = bin()
        .arg("gen-qbf")
        .arg(&input)
        .arg("--out-spec")
        .arg(&spec)
        .arg("--out-query")
        .arg(&query)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{:?}", out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    let expect_true = stdout.contains("formula is true");

    let out = bin()
        .args(["check", "--spec"])
        .arg(&spec)
        .arg("--source-query")
        .arg(&query)
        .output()
        .unwrap();
    let code = out.status.code().unwrap();
    assert_eq!(code == 0, expect_true, "{:?}", out);
}

#[test]
fn chase_and_rewrite_emit_parseable_output() {
    let ws = Workspace::new("chase");
    let spec = ws.file("spec.obda", SPEC);
    let abox = ws.file("a.db", "facts { Manager(alice) }\n");
    let out = bin()
        .args(["chase", "--spec"])
        .arg(&spec)
        .arg("--abox")
        .arg(&abox)
        .args(["--max-depth", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("Employee(alice)"));
    assert!(text.contains("Secretary("));

    let dll = ws.file(
        "dll.obda",
        "schema { R0/1 } mappings { R0(x) -> A(x); R0(x) -> B(x) } ontology dllite { A [= B; }\n",
    );
    let b = ws.file("b.uq", "q(x) :- B(x).\n");
    let out = bin()
        .args(["rewrite", "--spec"])
        .arg(&dll)
        .arg("--target-query")
        .arg(&b)
        .args(["--max-abox", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("A(") && text.contains("B("), "{}", text);
}

#[test]
fn containment_and_oracle() {
    let ws = Workspace::new("misc");
    let spec = ws.file("spec.obda", SPEC);
    let man = ws.file("man.uq", "q(x) :- Man(x,y).\n");
    let out = bin()
        .args(["containment", "--spec"])
        .arg(&spec)
        .arg("--source-query")
        .arg(&man)
        .arg("--target-query")
        .arg(&man)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "true");

    let emp = ws.file("emp.uq", "q(x) :- Emp(x,y,z).\n");
    let employee = ws.file("employee.uq", "q(x) :- Employee(x).\n");
    let out = bin()
        .args(["oracle", "--spec"])
        .arg(&spec)
        .arg("--source-query")
        .arg(&emp)
        .arg("--target-query")
        .arg(&employee)
        .args(["--max-domain", "2", "--max-facts", "3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "{:?}", out);
    assert!(String::from_utf8_lossy(&out.stdout).contains("counterexample"));
}
