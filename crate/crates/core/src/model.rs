//! Logical syntax objects: schemas, queries, databases, ontologies, GAV
//! mappings and OBDA specifications, with validation and the view
//! conversions between databases and queries.
//!
//! All types are immutable after construction and cheap to clone; they can
//! be shared freely across threads.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// An interned-ish name. Variables and constants live in one namespace so
/// that viewing a query as a database (and back) is a plain rebadging.
pub type Name = String;

/// A relational schema: relation names with arities.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Schema {
    relations: BTreeMap<Name, usize>,
}

impl Schema {
    pub fn new() -> Self {
        Schema::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (Name, usize)>>(pairs: I) -> Self {
        Schema {
            relations: pairs.into_iter().collect(),
        }
    }

    /// Adds a relation; returns false if the name was already declared with
    /// a different arity.
    pub fn add(&mut self, name: impl Into<Name>, arity: usize) -> bool {
        let name = name.into();
        match self.relations.get(&name) {
            Some(&a) => a == arity,
            None => {
                self.relations.insert(name, arity);
                true
            }
        }
    }

    pub fn arity(&self, name: &str) -> Option<usize> {
        self.relations.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.relations.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Name, usize)> {
        self.relations.iter().map(|(n, &a)| (n, a))
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    /// True iff every relation is unary or binary.
    pub fn is_dl_schema(&self) -> bool {
        self.relations.values().all(|&a| a == 1 || a == 2)
    }

    pub fn unary_names(&self) -> impl Iterator<Item = &Name> {
        self.relations
            .iter()
            .filter(|(_, &a)| a == 1)
            .map(|(n, _)| n)
    }

    pub fn binary_names(&self) -> impl Iterator<Item = &Name> {
        self.relations
            .iter()
            .filter(|(_, &a)| a == 2)
            .map(|(n, _)| n)
    }

    /// Union of two schemas; arities must agree on shared names.
    pub fn union(&self, other: &Schema) -> Option<Schema> {
        let mut out = self.clone();
        for (n, a) in other.iter() {
            if !out.add(n.clone(), a) {
                return None;
            }
        }
        Some(out)
    }
}

/// An atom of a conjunctive query.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    /// R(z1, ..., zn) over variables.
    Rel { rel: Name, args: Vec<Name> },
    /// z1 = z2.
    Eq { left: Name, right: Name },
}

impl Atom {
    pub fn rel(rel: impl Into<Name>, args: Vec<Name>) -> Atom {
        Atom::Rel {
            rel: rel.into(),
            args,
        }
    }

    pub fn eq(left: impl Into<Name>, right: impl Into<Name>) -> Atom {
        Atom::Eq {
            left: left.into(),
            right: right.into(),
        }
    }

    pub fn vars(&self) -> Vec<&Name> {
        match self {
            Atom::Rel { args, .. } => args.iter().collect(),
            Atom::Eq { left, right } => vec![left, right],
        }
    }
}

/// A conjunctive query q(x̄) = ∃ȳ φ(x̄, ȳ).
///
/// Answer variables are an ordered tuple and need not occur in any atom.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cq {
    pub answer_vars: Vec<Name>,
    pub quantified_vars: BTreeSet<Name>,
    pub atoms: BTreeSet<Atom>,
}

impl Cq {
    /// Builds a CQ, inferring quantified variables from the atoms.
    pub fn new<I: IntoIterator<Item = Atom>>(answer_vars: Vec<Name>, atoms: I) -> Cq {
        let atoms: BTreeSet<Atom> = atoms.into_iter().collect();
        let answer: BTreeSet<&Name> = answer_vars.iter().collect();
        let mut quantified = BTreeSet::new();
        for a in &atoms {
            for v in a.vars() {
                if !answer.contains(v) {
                    quantified.insert(v.clone());
                }
            }
        }
        Cq {
            answer_vars,
            quantified_vars: quantified,
            atoms,
        }
    }

    pub fn arity(&self) -> usize {
        self.answer_vars.len()
    }

    pub fn is_boolean(&self) -> bool {
        self.answer_vars.is_empty()
    }

    /// All variables: answer ∪ quantified.
    pub fn all_vars(&self) -> BTreeSet<Name> {
        let mut s: BTreeSet<Name> = self.answer_vars.iter().cloned().collect();
        s.extend(self.quantified_vars.iter().cloned());
        s
    }

    pub fn relational_atoms(&self) -> impl Iterator<Item = (&Name, &Vec<Name>)> {
        self.atoms.iter().filter_map(|a| match a {
            Atom::Rel { rel, args } => Some((rel, args)),
            Atom::Eq { .. } => None,
        })
    }

    pub fn equality_atoms(&self) -> impl Iterator<Item = (&Name, &Name)> {
        self.atoms.iter().filter_map(|a| match a {
            Atom::Eq { left, right } => Some((left, right)),
            Atom::Rel { .. } => None,
        })
    }

    /// Number of symbols needed to write the query, names counting as one.
    pub fn size(&self) -> usize {
        let mut n = self.answer_vars.len();
        for a in &self.atoms {
            n += match a {
                Atom::Rel { args, .. } => 1 + args.len(),
                Atom::Eq { .. } => 2,
            };
        }
        n
    }

    /// Union-find closure of the equality atoms, as var → class representative
    /// (the lexicographically least member of the class). Defined on all
    /// variables of the query.
    pub fn equality_representatives(&self) -> BTreeMap<Name, Name> {
        let mut parent: BTreeMap<Name, Name> = BTreeMap::new();
        for v in self.all_vars() {
            parent.insert(v.clone(), v);
        }
        fn find(parent: &mut BTreeMap<Name, Name>, v: &Name) -> Name {
            let p = parent.get(v).cloned().unwrap_or_else(|| v.clone());
            if &p == v {
                return p;
            }
            let root = find(parent, &p);
            parent.insert(v.clone(), root.clone());
            root
        }
        for (l, r) in self.equality_atoms() {
            let rl = find(&mut parent, l);
            let rr = find(&mut parent, r);
            if rl != rr {
                // keep the lexicographically least name as root
                if rl < rr {
                    parent.insert(rr, rl);
                } else {
                    parent.insert(rl, rr);
                }
            }
        }
        let vars: Vec<Name> = parent.keys().cloned().collect();
        let mut out = BTreeMap::new();
        for v in vars {
            let r = find(&mut parent, &v);
            out.insert(v, r);
        }
        out
    }

    /// Replaces every variable by its equality-class representative and
    /// drops the (now trivial) equality atoms. Answer variables are rewritten
    /// to representatives as well; the caller keeps the original tuple if it
    /// needs the query-level view.
    pub fn quotient(&self) -> (Cq, BTreeMap<Name, Name>) {
        let reps = self.equality_representatives();
        let atoms: BTreeSet<Atom> = self
            .relational_atoms()
            .map(|(rel, args)| Atom::Rel {
                rel: rel.clone(),
                args: args.iter().map(|v| reps[v].clone()).collect(),
            })
            .collect();
        let answer: Vec<Name> = self.answer_vars.iter().map(|v| reps[v].clone()).collect();
        (Cq::new(answer, atoms), reps)
    }
}

/// A union of conjunctive queries. Nonempty; all disjuncts share the answer
/// arity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ucq {
    pub disjuncts: Vec<Cq>,
}

impl Ucq {
    pub fn new(disjuncts: Vec<Cq>) -> Ucq {
        assert!(!disjuncts.is_empty(), "UCQ must have at least one disjunct");
        Ucq { disjuncts }
    }

    pub fn singleton(cq: Cq) -> Ucq {
        Ucq {
            disjuncts: vec![cq],
        }
    }

    pub fn arity(&self) -> usize {
        self.disjuncts[0].arity()
    }

    pub fn size(&self) -> usize {
        self.disjuncts.iter().map(Cq::size).sum()
    }

    pub fn max_disjunct_size(&self) -> usize {
        self.disjuncts.iter().map(Cq::size).max().unwrap_or(0)
    }
}

impl From<Cq> for Ucq {
    fn from(cq: Cq) -> Ucq {
        Ucq::singleton(cq)
    }
}

/// A ground fact R(a1, ..., an).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fact {
    pub rel: Name,
    pub args: Vec<Name>,
}

impl Fact {
    pub fn new(rel: impl Into<Name>, args: Vec<Name>) -> Fact {
        Fact {
            rel: rel.into(),
            args,
        }
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.rel, self.args.join(","))
    }
}

/// A set of facts. ABoxes are databases over a DL (unary/binary) schema.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Default, Hash)]
pub struct Database {
    pub facts: BTreeSet<Fact>,
}

/// ABoxes are databases over a DL schema; the alias keeps signatures close
/// to the terminology that the rest of the crate uses.
pub type Abox = Database;

impl Database {
    pub fn new<I: IntoIterator<Item = Fact>>(facts: I) -> Database {
        Database {
            facts: facts.into_iter().collect(),
        }
    }

    pub fn empty() -> Database {
        Database::default()
    }

    /// Active domain: all constants occurring in facts.
    pub fn adom(&self) -> BTreeSet<Name> {
        let mut s = BTreeSet::new();
        for f in &self.facts {
            s.extend(f.args.iter().cloned());
        }
        s
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    /// Number of symbols needed to write the database.
    pub fn size(&self) -> usize {
        self.facts.iter().map(|f| 1 + f.args.len()).sum()
    }

    pub fn union(&self, other: &Database) -> Database {
        Database {
            facts: self.facts.union(&other.facts).cloned().collect(),
        }
    }
}

/// Ontology dialects supported by the toolkit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dialect {
    DlLiteRHorn,
    El,
    Elhi,
}

impl fmt::Display for Dialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dialect::DlLiteRHorn => write!(f, "dl-lite-r-horn"),
            Dialect::El => write!(f, "el"),
            Dialect::Elhi => write!(f, "elhi"),
        }
    }
}

/// A role: a role name, possibly inverted.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Role {
    pub name: Name,
    pub inverse: bool,
}

impl Role {
    pub fn new(name: impl Into<Name>) -> Role {
        Role {
            name: name.into(),
            inverse: false,
        }
    }

    pub fn inv(name: impl Into<Name>) -> Role {
        Role {
            name: name.into(),
            inverse: true,
        }
    }

    pub fn inverted(&self) -> Role {
        Role {
            name: self.name.clone(),
            inverse: !self.inverse,
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.inverse {
            write!(f, "{}-", self.name)
        } else {
            write!(f, "{}", self.name)
        }
    }
}

/// Concepts over {⊤, concept name, ⊓, ∃r.C, ∃r⁻.C}.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Concept {
    Top,
    Name(Name),
    And(Box<Concept>, Box<Concept>),
    Exists(Role, Box<Concept>),
}

impl Concept {
    pub fn name(n: impl Into<Name>) -> Concept {
        Concept::Name(n.into())
    }

    pub fn and(l: Concept, r: Concept) -> Concept {
        Concept::And(Box::new(l), Box::new(r))
    }

    pub fn exists(role: Role, c: Concept) -> Concept {
        Concept::Exists(role, Box::new(c))
    }

    pub fn uses_inverse(&self) -> bool {
        match self {
            Concept::Top | Concept::Name(_) => false,
            Concept::And(l, r) => l.uses_inverse() || r.uses_inverse(),
            Concept::Exists(role, c) => role.inverse || c.uses_inverse(),
        }
    }

    /// Concept names occurring in the concept.
    pub fn concept_names(&self, out: &mut BTreeSet<Name>) {
        match self {
            Concept::Top => {}
            Concept::Name(n) => {
                out.insert(n.clone());
            }
            Concept::And(l, r) => {
                l.concept_names(out);
                r.concept_names(out);
            }
            Concept::Exists(_, c) => c.concept_names(out),
        }
    }

    pub fn role_names(&self, out: &mut BTreeSet<Name>) {
        match self {
            Concept::Top | Concept::Name(_) => {}
            Concept::And(l, r) => {
                l.role_names(out);
                r.role_names(out);
            }
            Concept::Exists(role, c) => {
                out.insert(role.name.clone());
                c.role_names(out);
            }
        }
    }

    /// A basic concept in the DL-Lite sense: ⊤, a name, or ∃r.⊤ / ∃r⁻.⊤.
    pub fn is_basic(&self) -> bool {
        match self {
            Concept::Top | Concept::Name(_) => true,
            Concept::Exists(_, c) => matches!(**c, Concept::Top),
            Concept::And(_, _) => false,
        }
    }

    /// Flattens top-level conjunctions.
    pub fn conjuncts(&self) -> Vec<&Concept> {
        match self {
            Concept::And(l, r) => {
                let mut v = l.conjuncts();
                v.extend(r.conjuncts());
                v
            }
            c => vec![c],
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Concept::Top => 1,
            Concept::Name(_) => 1,
            Concept::And(l, r) => l.size() + r.size(),
            Concept::Exists(_, c) => 1 + c.size(),
        }
    }
}

/// An ontology: concept inclusions, role inclusions and (for DL-Lite) role
/// disjointness constraints r1 ⊓ ... ⊓ rn ⊑ ⊥.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ontology {
    pub dialect: Dialect,
    pub concept_inclusions: Vec<(Concept, Concept)>,
    /// lhs ⊑ rhs with the lhs a role name and the rhs possibly inverted.
    pub role_inclusions: Vec<(Name, Role)>,
    pub role_disjointness: Vec<BTreeSet<Name>>,
}

impl Ontology {
    pub fn empty(dialect: Dialect) -> Ontology {
        Ontology {
            dialect,
            concept_inclusions: Vec::new(),
            role_inclusions: Vec::new(),
            role_disjointness: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.concept_inclusions.is_empty()
            && self.role_inclusions.is_empty()
            && self.role_disjointness.is_empty()
    }

    pub fn concept_names(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        for (l, r) in &self.concept_inclusions {
            l.concept_names(&mut out);
            r.concept_names(&mut out);
        }
        out
    }

    pub fn role_names(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        for (l, r) in &self.concept_inclusions {
            l.role_names(&mut out);
            r.role_names(&mut out);
        }
        for (l, r) in &self.role_inclusions {
            out.insert(l.clone());
            out.insert(r.name.clone());
        }
        for set in &self.role_disjointness {
            out.extend(set.iter().cloned());
        }
        out
    }

    /// Number of symbols, names counting as one.
    pub fn size(&self) -> usize {
        let ci: usize = self
            .concept_inclusions
            .iter()
            .map(|(l, r)| l.size() + r.size())
            .sum();
        let ri: usize = self.role_inclusions.iter().map(|_| 2).sum();
        let rd: usize = self.role_disjointness.iter().map(|s| s.len() + 1).sum();
        ci + ri + rd
    }

    /// The DL schema consisting of the ontology's concept and role names.
    pub fn schema(&self) -> Schema {
        let mut s = Schema::new();
        for n in self.concept_names() {
            s.add(n, 1);
        }
        for n in self.role_names() {
            s.add(n, 2);
        }
        s
    }
}

/// A GAV mapping body → head with the head a single unary or binary atom
/// over head variables that all occur in the body.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GavMapping {
    /// Relational atoms over the source schema.
    pub body: BTreeSet<Atom>,
    pub head_rel: Name,
    /// One variable (concept head) or two, possibly repeated (role head).
    pub head_args: Vec<Name>,
}

impl GavMapping {
    pub fn new(body: impl IntoIterator<Item = Atom>, head_rel: impl Into<Name>, head_args: Vec<Name>) -> GavMapping {
        GavMapping {
            body: body.into_iter().collect(),
            head_rel: head_rel.into(),
            head_args,
        }
    }

    pub fn body_vars(&self) -> BTreeSet<Name> {
        let mut s = BTreeSet::new();
        for a in &self.body {
            for v in a.vars() {
                s.insert(v.clone());
            }
        }
        s
    }

    /// The body as a Boolean CQ (used to evaluate the mapping on a database).
    pub fn body_as_query(&self) -> Cq {
        Cq::new(Vec::new(), self.body.iter().cloned())
    }
}

/// An OBDA specification (O, M, S).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObdaSpec {
    pub ontology: Ontology,
    pub mappings: Vec<GavMapping>,
    pub source_schema: Schema,
}

impl ObdaSpec {
    /// sch(M): the head relations of the mappings, with arities.
    pub fn mapped_schema(&self) -> Schema {
        let mut s = Schema::new();
        for m in &self.mappings {
            s.add(m.head_rel.clone(), m.head_args.len());
        }
        s
    }

    /// The DL schema visible to target queries and the ontology:
    /// sch(M) plus ontology names.
    pub fn target_schema(&self) -> Option<Schema> {
        self.mapped_schema().union(&self.ontology.schema())
    }
}

/// A diagnostic produced by validation: what is violated and where.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub message: String,
    pub location: Option<crate::textio::SourceLocation>,
}

impl Diagnostic {
    pub fn new(message: impl Into<String>) -> Diagnostic {
        Diagnostic {
            message: message.into(),
            location: None,
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.location {
            Some(loc) => write!(f, "{}:{}: {}", loc.line, loc.column, self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

/// Errors raised by model-level operations.
#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("answer constant not in domain: {0}")]
    AnswerConstantNotInDomain(Name),
    #[error("arity mismatch: {0}")]
    ArityMismatch(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("dialect constraint: {0}")]
    Dialect(String),
}

/// Checks every structural invariant of a specification and reports all
/// violations. An empty list means the spec is well formed.
pub fn validate_spec(spec: &ObdaSpec) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    // mappings
    for (i, m) in spec.mappings.iter().enumerate() {
        let body_vars = m.body_vars();
        for v in &m.head_args {
            if !body_vars.contains(v) {
                out.push(Diagnostic::new(format!(
                    "mapping {}: head var not in body: {}",
                    i, v
                )));
            }
        }
        if m.head_args.is_empty() || m.head_args.len() > 2 {
            out.push(Diagnostic::new(format!(
                "mapping {}: head relation must be unary or binary",
                i
            )));
        }
        if m.head_args.len() == 2 && m.head_args[0] == m.head_args[1] && m.head_args[0].is_empty() {
            out.push(Diagnostic::new(format!("mapping {}: empty head variable", i)));
        }
        for a in &m.body {
            match a {
                Atom::Rel { rel, args } => match spec.source_schema.arity(rel) {
                    None => out.push(Diagnostic::new(format!(
                        "mapping {}: body uses undeclared relation {}",
                        i, rel
                    ))),
                    Some(k) if k != args.len() => out.push(Diagnostic::new(format!(
                        "mapping {}: arity mismatch for {} (declared {}, used {})",
                        i,
                        rel,
                        k,
                        args.len()
                    ))),
                    _ => {}
                },
                Atom::Eq { .. } => out.push(Diagnostic::new(format!(
                    "mapping {}: equality atom not allowed in mapping body",
                    i
                ))),
            }
        }
    }
    // head relations must not collide with one arity vs another
    {
        let mut seen: BTreeMap<&Name, usize> = BTreeMap::new();
        for m in &spec.mappings {
            match seen.get(&m.head_rel) {
                Some(&a) if a != m.head_args.len() => out.push(Diagnostic::new(format!(
                    "head relation {} used with arities {} and {}",
                    m.head_rel,
                    a,
                    m.head_args.len()
                ))),
                _ => {
                    seen.insert(&m.head_rel, m.head_args.len());
                }
            }
        }
    }
    // ontology dialect constraints
    let o = &spec.ontology;
    match o.dialect {
        Dialect::El => {
            for (l, r) in &o.concept_inclusions {
                if l.uses_inverse() || r.uses_inverse() {
                    out.push(Diagnostic::new("inverse role in EL ontology"));
                }
            }
            if !o.role_inclusions.is_empty() {
                out.push(Diagnostic::new("role inclusion in EL"));
            }
            if !o.role_disjointness.is_empty() {
                out.push(Diagnostic::new("role disjointness in EL"));
            }
        }
        Dialect::Elhi => {
            if !o.role_disjointness.is_empty() {
                out.push(Diagnostic::new("role disjointness in ELHI"));
            }
        }
        Dialect::DlLiteRHorn => {
            for (l, r) in &o.concept_inclusions {
                let lhs_ok = l.conjuncts().iter().all(|c| c.is_basic());
                if !lhs_ok {
                    out.push(Diagnostic::new(
                        "DL-Lite lhs must be a conjunction of basic concepts",
                    ));
                }
                if !r.is_basic() {
                    out.push(Diagnostic::new("DL-Lite rhs must be a basic concept"));
                }
            }
            for set in &o.role_disjointness {
                if set.is_empty() {
                    out.push(Diagnostic::new("empty role disjointness constraint"));
                }
            }
        }
    }
    // the ontology's vocabulary must be compatible with sch(M) arities
    let sch_m = spec.mapped_schema();
    for n in o.concept_names() {
        if let Some(a) = sch_m.arity(&n) {
            if a != 1 {
                out.push(Diagnostic::new(format!(
                    "name {} is a concept in the ontology but has arity {} in sch(M)",
                    n, a
                )));
            }
        }
    }
    for n in o.role_names() {
        if let Some(a) = sch_m.arity(&n) {
            if a != 2 {
                out.push(Diagnostic::new(format!(
                    "name {} is a role in the ontology but has arity {} in sch(M)",
                    n, a
                )));
            }
        }
    }
    out
}

/// Validates a UCQ against a schema.
pub fn validate_query(q: &Ucq, schema: &Schema) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let arity = q.disjuncts[0].arity();
    for (i, cq) in q.disjuncts.iter().enumerate() {
        if cq.arity() != arity {
            out.push(Diagnostic::new(format!(
                "disjunct {} has arity {} but expected {}",
                i,
                cq.arity(),
                arity
            )));
        }
        for v in &cq.answer_vars {
            if cq.quantified_vars.contains(v) {
                out.push(Diagnostic::new(format!(
                    "disjunct {}: variable {} both answer and quantified",
                    i, v
                )));
            }
        }
        for (rel, args) in cq.relational_atoms() {
            match schema.arity(rel) {
                None => out.push(Diagnostic::new(format!(
                    "disjunct {}: undeclared relation {}",
                    i, rel
                ))),
                Some(k) if k != args.len() => out.push(Diagnostic::new(format!(
                    "disjunct {}: arity mismatch for {} (declared {}, used {})",
                    i,
                    rel,
                    k,
                    args.len()
                ))),
                _ => {}
            }
        }
    }
    out
}

/// Validates a database against a schema.
pub fn validate_database(d: &Database, schema: &Schema) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for f in &d.facts {
        match schema.arity(&f.rel) {
            None => out.push(Diagnostic::new(format!("undeclared relation {}", f.rel))),
            Some(k) if k != f.args.len() => out.push(Diagnostic::new(format!(
                "arity mismatch for {} (declared {}, used {})",
                f.rel,
                k,
                f.args.len()
            ))),
            _ => {}
        }
    }
    out
}

/// Views (D, ā) as a CQ: n fresh answer variables, all constants read as
/// quantified variables, facts as atoms, plus equality atoms xi = ai.
pub fn view_as_cq(d: &Database, tuple: &[Name]) -> Result<Cq, ModelError> {
    let adom = d.adom();
    for a in tuple {
        if !adom.contains(a) {
            return Err(ModelError::AnswerConstantNotInDomain(a.clone()));
        }
    }
    // fresh answer variable names x1..xn avoiding the active domain
    let mut answer = Vec::with_capacity(tuple.len());
    let mut atoms: BTreeSet<Atom> = d
        .facts
        .iter()
        .map(|f| Atom::rel(f.rel.clone(), f.args.clone()))
        .collect();
    let mut counter = 1usize;
    #[allow(clippy::explicit_counter_loop)]
    for a in tuple {
        let mut x = format!("x{}", counter);
        while adom.contains(&x) || answer.contains(&x) {
            x.push('_');
        }
        counter += 1;
        atoms.insert(Atom::eq(x.clone(), a.clone()));
        answer.push(x);
    }
    Ok(Cq::new(answer, atoms))
}

/// Views a CQ as a database: variables become constants of the same name
/// and equality atoms are dropped. Callers that need equality-aware
/// semantics quotient first (see [`Cq::quotient`]).
pub fn view_as_database(q: &Cq) -> Database {
    Database::new(
        q.relational_atoms()
            .map(|(rel, args)| Fact::new(rel.clone(), args.clone())),
    )
}

/// True iff every variable of q is reachable from an answer variable in the
/// hypergraph whose edges are the variable sets of relational atoms.
pub fn is_rooted(q: &Cq) -> bool {
    let all = q.all_vars();
    if all.is_empty() {
        return true;
    }
    if q.answer_vars.is_empty() {
        return false;
    }
    let mut reached: BTreeSet<&Name> = q.answer_vars.iter().collect();
    loop {
        let mut grew = false;
        for (_, args) in q.relational_atoms() {
            if args.iter().any(|v| reached.contains(v)) {
                for v in args {
                    if reached.insert(v) {
                        grew = true;
                    }
                }
            }
        }
        if !grew {
            break;
        }
    }
    all.iter().all(|v| reached.contains(v))
}

/// A UCQ is rooted iff all its disjuncts are.
pub fn is_rooted_ucq(q: &Ucq) -> bool {
    q.disjuncts.iter().all(is_rooted)
}
