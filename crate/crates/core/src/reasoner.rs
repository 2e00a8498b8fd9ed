//! Ontology reasoning: normal-form conversion, role-inclusion closure,
//! subsumption, ABox saturation, finite universal-model unravelings and
//! certain answers for DL-Lite^R_horn and ELHI OMQs.
//!
//! The anonymous part of the universal model is represented as a type
//! graph: in normal form the subtree below an element is determined by the
//! element's saturated concept set together with the entering role, so the
//! (possibly infinite) chase folds into finitely many type nodes. CQ
//! answering materializes a depth-bounded unraveling; a depth of
//! (#reachable types + #query variables) reproduces every match of the
//! infinite model.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Mutex;

use crate::homomorphism::evaluate;
use crate::model::{Abox, Concept, Cq, Database, Dialect, Fact, Name, Ontology, Role, Schema, Ucq};

/// Errors raised by reasoning operations.
#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum ReasonerError {
    #[error("normalize expects an EL or ELHI ontology; DL-Lite is handled natively")]
    DlLiteNormalForm,
    #[error("inconsistent ABox (role disjointness violated)")]
    Inconsistent,
    #[error("unknown relation in query or ABox: {0}")]
    UnknownRelation(Name),
}

/// A normal-form axiom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NfAxiom {
    /// ⊤ ⊑ A
    TopSub(Name),
    /// A1 ⊓ ... ⊓ An ⊑ B (n ≥ 1)
    ConjSub(Vec<Name>, Name),
    /// A ⊑ ∃r.B, r a role, possibly inverse
    SubExists(Name, Role, Name),
    /// ∃r.A ⊑ B
    ExistsSub(Role, Name, Name),
}

/// An ontology in normal form: a conservative extension of the input,
/// possibly with fresh concept names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalFormOntology {
    pub axioms: Vec<NfAxiom>,
    pub role_inclusions: Vec<(Name, Role)>,
    pub role_disjointness: Vec<BTreeSet<Name>>,
    /// Concept names introduced by normalization or the DL-Lite encoding;
    /// they never appear in user-visible output.
    pub internal_concepts: BTreeSet<Name>,
}

impl NormalFormOntology {
    pub fn empty() -> NormalFormOntology {
        NormalFormOntology {
            axioms: Vec::new(),
            role_inclusions: Vec::new(),
            role_disjointness: Vec::new(),
            internal_concepts: BTreeSet::new(),
        }
    }

    pub fn concept_names(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        for ax in &self.axioms {
            match ax {
                NfAxiom::TopSub(a) => {
                    out.insert(a.clone());
                }
                NfAxiom::ConjSub(ls, r) => {
                    out.extend(ls.iter().cloned());
                    out.insert(r.clone());
                }
                NfAxiom::SubExists(a, _, b) | NfAxiom::ExistsSub(_, a, b) => {
                    out.insert(a.clone());
                    out.insert(b.clone());
                }
            }
        }
        out
    }

    pub fn role_names(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        for ax in &self.axioms {
            match ax {
                NfAxiom::SubExists(_, r, _) | NfAxiom::ExistsSub(r, _, _) => {
                    out.insert(r.name.clone());
                }
                _ => {}
            }
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
}

fn fresh_name(base: &str, used: &mut BTreeSet<Name>) -> Name {
    let mut i = 0usize;
    loop {
        let candidate = format!("{}{}", base, i);
        if !used.contains(&candidate) {
            used.insert(candidate.clone());
            return candidate;
        }
        i += 1;
    }
}

/// Structural normal-form conversion for EL and ELHI ontologies. Linear in
/// the input and model-conservative.
pub fn normalize(o: &Ontology) -> Result<NormalFormOntology, ReasonerError> {
    if o.dialect == Dialect::DlLiteRHorn {
        return Err(ReasonerError::DlLiteNormalForm);
    }
    let mut used: BTreeSet<Name> = o.concept_names();
    used.extend(o.role_names());
    let mut nf = NormalFormOntology::empty();
    for (l, r) in &o.concept_inclusions {
        norm_ci(l.clone(), r.clone(), &mut nf, &mut used);
    }
    nf.role_inclusions = o.role_inclusions.clone();
    nf.role_disjointness = o.role_disjointness.to_vec();
    Ok(nf)
}

fn norm_ci(l: Concept, r: Concept, nf: &mut NormalFormOntology, used: &mut BTreeSet<Name>) {
    match r {
        Concept::Top => {} // trivial
        Concept::And(r1, r2) => {
            norm_ci(l.clone(), *r1, nf, used);
            norm_ci(l, *r2, nf, used);
        }
        Concept::Exists(role, body) => match *body {
            Concept::Name(b) => norm_lhs(l, Rhs::Exists(role, b), nf, used),
            Concept::Top => {
                // ∃r.⊤ on the right: give the successor a universally true name
                let t = intern_fresh(nf, used, "_nf");
                nf.axioms.push(NfAxiom::TopSub(t.clone()));
                norm_lhs(l, Rhs::Exists(role, t), nf, used);
            }
            complex => {
                let x = intern_fresh(nf, used, "_nf");
                norm_ci(Concept::Name(x.clone()), complex, nf, used);
                norm_lhs(l, Rhs::Exists(role, x), nf, used);
            }
        },
        Concept::Name(b) => norm_lhs(l, Rhs::Name(b), nf, used),
    }
}

enum Rhs {
    Name(Name),
    Exists(Role, Name),
}

fn intern_fresh(nf: &mut NormalFormOntology, used: &mut BTreeSet<Name>, base: &str) -> Name {
    let n = fresh_name(base, used);
    nf.internal_concepts.insert(n.clone());
    n
}

/// Reduces the lhs to ⊤, a conjunction of names, or ∃r.A and emits the
/// final axiom.
fn norm_lhs(l: Concept, r: Rhs, nf: &mut NormalFormOntology, used: &mut BTreeSet<Name>) {
    // name the lhs if it is a top-level existential
    if let Concept::Exists(role, body) = &l {
        let body_name = match &**body {
            Concept::Name(n) => n.clone(),
            Concept::Top => {
                let t = intern_fresh(nf, used, "_nf");
                nf.axioms.push(NfAxiom::TopSub(t.clone()));
                t
            }
            complex => {
                let x = intern_fresh(nf, used, "_nf");
                norm_ci(complex.clone(), Concept::Name(x.clone()), nf, used);
                x
            }
        };
        match r {
            Rhs::Name(b) => nf
                .axioms
                .push(NfAxiom::ExistsSub(role.clone(), body_name, b)),
            Rhs::Exists(s, b) => {
                let x = intern_fresh(nf, used, "_nf");
                nf.axioms
                    .push(NfAxiom::ExistsSub(role.clone(), body_name, x.clone()));
                nf.axioms.push(NfAxiom::SubExists(x, s, b));
            }
        }
        return;
    }
    // otherwise flatten the lhs into a conjunction of names
    let mut names = Vec::new();
    for c in l.conjuncts() {
        match c {
            Concept::Top => {}
            Concept::Name(n) => names.push(n.clone()),
            Concept::Exists(role, body) => {
                let body_name = match &**body {
                    Concept::Name(n) => n.clone(),
                    Concept::Top => {
                        let t = intern_fresh(nf, used, "_nf");
                        nf.axioms.push(NfAxiom::TopSub(t.clone()));
                        t
                    }
                    complex => {
                        let x = intern_fresh(nf, used, "_nf");
                        norm_ci(complex.clone(), Concept::Name(x.clone()), nf, used);
                        x
                    }
                };
                let x = intern_fresh(nf, used, "_nf");
                nf.axioms
                    .push(NfAxiom::ExistsSub(role.clone(), body_name, x.clone()));
                names.push(x);
            }
            Concept::And(_, _) => unreachable!("conjuncts() flattens"),
        }
    }
    match (names.is_empty(), r) {
        (true, Rhs::Name(b)) => nf.axioms.push(NfAxiom::TopSub(b)),
        (true, Rhs::Exists(s, b)) => {
            let x = intern_fresh(nf, used, "_nf");
            nf.axioms.push(NfAxiom::TopSub(x.clone()));
            nf.axioms.push(NfAxiom::SubExists(x, s, b));
        }
        (false, Rhs::Name(b)) => nf.axioms.push(NfAxiom::ConjSub(names, b)),
        (false, Rhs::Exists(s, b)) => {
            if names.len() == 1 {
                nf.axioms
                    .push(NfAxiom::SubExists(names.pop().unwrap(), s, b));
            } else {
                let x = intern_fresh(nf, used, "_nf");
                nf.axioms.push(NfAxiom::ConjSub(names, x.clone()));
                nf.axioms.push(NfAxiom::SubExists(x, s, b));
            }
        }
    }
}

/// Encodes a DL-Lite^R_horn ontology over the normal-form fragment:
/// ∃r.⊤ / ∃r⁻.⊤ become internal concept names with detection and
/// generation axioms. Role disjointness is carried through.
pub fn dllite_normal_form(o: &Ontology, schema: &Schema) -> NormalFormOntology {
    let mut used: BTreeSet<Name> = o.concept_names();
    used.extend(o.role_names());
    for (n, _) in schema.iter() {
        used.insert(n.clone());
    }
    let mut nf = NormalFormOntology::empty();
    let topc = fresh_name("_topc", &mut used);
    nf.internal_concepts.insert(topc.clone());
    nf.axioms.push(NfAxiom::TopSub(topc.clone()));

    let mut roles: BTreeSet<Name> = o.role_names();
    roles.extend(schema.binary_names().cloned());
    let mut exists_name: BTreeMap<(Name, bool), Name> = BTreeMap::new();
    for r in &roles {
        for inverse in [false, true] {
            let base = if inverse { "_exi_" } else { "_ex_" };
            let n = fresh_name(&format!("{}{}", base, r), &mut used);
            nf.internal_concepts.insert(n.clone());
            let role = Role {
                name: r.clone(),
                inverse,
            };
            // E ≡ ∃role.⊤
            nf.axioms
                .push(NfAxiom::SubExists(n.clone(), role.clone(), topc.clone()));
            nf.axioms
                .push(NfAxiom::ExistsSub(role, topc.clone(), n.clone()));
            exists_name.insert((r.clone(), inverse), n);
        }
    }
    let basic_name = |c: &Concept, exists_name: &BTreeMap<(Name, bool), Name>| -> Option<Name> {
        match c {
            Concept::Top => None,
            Concept::Name(n) => Some(n.clone()),
            Concept::Exists(role, body) if matches!(**body, Concept::Top) => {
                Some(exists_name[&(role.name.clone(), role.inverse)].clone())
            }
            _ => None,
        }
    };
    for (l, r) in &o.concept_inclusions {
        let mut lhs: Vec<Name> = Vec::new();
        for c in l.conjuncts() {
            match c {
                Concept::Top => {}
                other => {
                    // validated upstream: conjuncts are basic
                    if let Some(n) = basic_name(other, &exists_name) {
                        lhs.push(n);
                    }
                }
            }
        }
        let rhs = match basic_name(r, &exists_name) {
            Some(n) => n,
            None => continue, // C ⊑ ⊤ is trivial
        };
        if lhs.is_empty() {
            nf.axioms.push(NfAxiom::TopSub(rhs));
        } else {
            nf.axioms.push(NfAxiom::ConjSub(lhs, rhs));
        }
    }
    nf.role_inclusions = o.role_inclusions.clone();
    nf.role_disjointness = o.role_disjointness.to_vec();
    nf
}

/// Converts any supported ontology into the internal normal form.
pub fn core_normal_form(o: &Ontology, schema: &Schema) -> NormalFormOntology {
    match o.dialect {
        Dialect::DlLiteRHorn => dllite_normal_form(o, schema),
        _ => normalize(o).expect("EL/ELHI normalize"),
    }
}

// ---------------------------------------------------------------------------
// engine

type Cid = usize;
/// A signed role: role id with orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct SRole {
    id: usize,
    inverse: bool,
}

impl SRole {
    fn flip(self) -> SRole {
        SRole {
            id: self.id,
            inverse: !self.inverse,
        }
    }
}

type TypeId = usize;
type AnonKey = (TypeId, SRole, Cid);

#[derive(Default)]
struct TypeRegistry {
    types: Vec<BTreeSet<Cid>>,
    ids: HashMap<Vec<Cid>, TypeId>,
}

impl TypeRegistry {
    fn intern(&mut self, t: &BTreeSet<Cid>) -> TypeId {
        let key: Vec<Cid> = t.iter().copied().collect();
        if let Some(&id) = self.ids.get(&key) {
            return id;
        }
        let id = self.types.len();
        self.types.push(t.clone());
        self.ids.insert(key, id);
        id
    }

    fn get(&self, id: TypeId) -> &BTreeSet<Cid> {
        &self.types[id]
    }
}

#[derive(Default)]
struct EngineState {
    registry: TypeRegistry,
    anon: HashMap<AnonKey, BTreeSet<Cid>>,
    subsumes_memo: HashMap<Vec<Cid>, BTreeSet<Cid>>,
}

/// A compiled ontology plus memoized type computations. Immutable after
/// construction; the caches are internally synchronized.
pub struct Reasoner {
    concepts: Vec<Name>,
    concept_ids: HashMap<Name, Cid>,
    roles: Vec<Name>,
    role_ids: HashMap<Name, usize>,
    top_rules: Vec<Cid>,
    conj_rules: Vec<(Vec<Cid>, Cid)>,
    sub_exists: Vec<(Cid, SRole, Cid)>,
    exists_sub: Vec<(SRole, Cid, Cid)>,
    /// entailed super-roles of each signed role (reflexive-transitive,
    /// inverse-closed)
    role_super: Vec<BTreeSet<SRole>>,
    disjoint: Vec<Vec<usize>>,
    internal: BTreeSet<Name>,
    state: Mutex<EngineState>,
}

impl Reasoner {
    /// Builds a reasoner for a normal-form ontology over the given DL
    /// schema (ABoxes and queries may use any schema relation plus the
    /// ontology's names).
    pub fn new(nf: &NormalFormOntology, schema: &Schema) -> Reasoner {
        let mut concepts: Vec<Name> = Vec::new();
        let mut concept_ids: HashMap<Name, Cid> = HashMap::new();
        let mut roles: Vec<Name> = Vec::new();
        let mut role_ids: HashMap<Name, usize> = HashMap::new();
        let intern_c = |n: &Name, concepts: &mut Vec<Name>, ids: &mut HashMap<Name, Cid>| {
            *ids.entry(n.clone()).or_insert_with(|| {
                concepts.push(n.clone());
                concepts.len() - 1
            })
        };
        let intern_r = |n: &Name, roles: &mut Vec<Name>, ids: &mut HashMap<Name, usize>| {
            *ids.entry(n.clone()).or_insert_with(|| {
                roles.push(n.clone());
                roles.len() - 1
            })
        };
        for n in nf.concept_names() {
            intern_c(&n, &mut concepts, &mut concept_ids);
        }
        for n in nf.role_names() {
            intern_r(&n, &mut roles, &mut role_ids);
        }
        for n in schema.unary_names() {
            intern_c(n, &mut concepts, &mut concept_ids);
        }
        for n in schema.binary_names() {
            intern_r(n, &mut roles, &mut role_ids);
        }
        let srole = |r: &Role, role_ids: &HashMap<Name, usize>| SRole {
            id: role_ids[&r.name],
            inverse: r.inverse,
        };
        let mut top_rules = Vec::new();
        let mut conj_rules = Vec::new();
        let mut sub_exists = Vec::new();
        let mut exists_sub = Vec::new();
        for ax in &nf.axioms {
            match ax {
                NfAxiom::TopSub(a) => top_rules.push(concept_ids[a]),
                NfAxiom::ConjSub(ls, r) => conj_rules.push((
                    ls.iter().map(|n| concept_ids[n]).collect(),
                    concept_ids[r],
                )),
                NfAxiom::SubExists(a, r, b) => sub_exists.push((
                    concept_ids[a],
                    srole(r, &role_ids),
                    concept_ids[b],
                )),
                NfAxiom::ExistsSub(r, a, b) => exists_sub.push((
                    srole(r, &role_ids),
                    concept_ids[a],
                    concept_ids[b],
                )),
            }
        }
        // role inclusion closure over signed roles
        let nroles = roles.len();
        let mut role_super: Vec<BTreeSet<SRole>> = (0..2 * nroles)
            .map(|i| {
                let s = SRole {
                    id: i / 2,
                    inverse: i % 2 == 1,
                };
                BTreeSet::from([s])
            })
            .collect();
        let idx = |s: SRole| s.id * 2 + usize::from(s.inverse);
        let declared: Vec<(SRole, SRole)> = nf
            .role_inclusions
            .iter()
            .flat_map(|(l, r)| {
                let ls = SRole {
                    id: role_ids[l],
                    inverse: false,
                };
                let rs = srole(r, &role_ids);
                [(ls, rs), (ls.flip(), rs.flip())]
            })
            .collect();
        loop {
            let mut grew = false;
            for &(l, r) in &declared {
                let supers: Vec<SRole> = role_super[idx(r)].iter().copied().collect();
                for s in supers {
                    if role_super[idx(l)].insert(s) {
                        grew = true;
                    }
                }
            }
            if !grew {
                break;
            }
        }
        // transitive closure
        loop {
            let mut grew = false;
            for i in 0..2 * nroles {
                let supers: Vec<SRole> = role_super[i].iter().copied().collect();
                for s in supers {
                    let more: Vec<SRole> = role_super[idx(s)].iter().copied().collect();
                    for m in more {
                        if role_super[i].insert(m) {
                            grew = true;
                        }
                    }
                }
            }
            if !grew {
                break;
            }
        }
        let disjoint = nf
            .role_disjointness
            .iter()
            .map(|set| set.iter().map(|n| role_ids[n]).collect())
            .collect();
        Reasoner {
            concepts,
            concept_ids,
            roles,
            role_ids,
            top_rules,
            conj_rules,
            sub_exists,
            exists_sub,
            role_super,
            disjoint,
            internal: nf.internal_concepts.clone(),
            state: Mutex::new(EngineState::default()),
        }
    }

    fn srole_supers(&self, s: SRole) -> &BTreeSet<SRole> {
        &self.role_super[s.id * 2 + usize::from(s.inverse)]
    }

    /// O ⊨ r ⊑ s on roles (reflexive-transitive, inverse-closed).
    pub fn role_entailed(&self, r: &Role, s: &Role) -> bool {
        let (Some(&ri), Some(&si)) = (self.role_ids.get(&r.name), self.role_ids.get(&s.name))
        else {
            return r == s;
        };
        let rs = SRole {
            id: ri,
            inverse: r.inverse,
        };
        let ss = SRole {
            id: si,
            inverse: s.inverse,
        };
        self.srole_supers(rs).contains(&ss)
    }

    /// Closes a concept set under ⊤-rules and conjunction rules only.
    fn close_local(&self, t: &mut BTreeSet<Cid>) {
        for &a in &self.top_rules {
            t.insert(a);
        }
        loop {
            let mut grew = false;
            for (premise, conclusion) in &self.conj_rules {
                if !t.contains(conclusion) && premise.iter().all(|p| t.contains(p)) {
                    t.insert(*conclusion);
                    grew = true;
                }
            }
            if !grew {
                break;
            }
        }
    }

    /// One improvement pass for the anonymous node identified by `key`,
    /// reading current table entries for children. Returns the improved
    /// concept set.
    fn anon_pass(&self, key: AnonKey, state: &mut EngineState) -> BTreeSet<Cid> {
        let (parent_ty, enter, seed) = key;
        let mut t = state
            .anon
            .get(&key)
            .cloned()
            .unwrap_or_else(|| BTreeSet::from([seed]));
        t.insert(seed);
        self.close_local(&mut t);
        // upward-looking: the node sees its parent through enter⁻
        let parent = state.registry.get(parent_ty).clone();
        for &(s, x, y) in &self.exists_sub {
            if parent.contains(&x) && self.srole_supers(enter.flip()).contains(&s) {
                t.insert(y);
            }
        }
        self.close_local(&mut t);
        // downward: demanded children contribute through their entailed types
        loop {
            let mut grew = false;
            let self_ty = state.registry.intern(&t);
            let demands: Vec<(SRole, Cid)> = self
                .sub_exists
                .iter()
                .filter(|(a, _, _)| t.contains(a))
                .map(|&(_, r, b)| (r, b))
                .collect();
            for (r, b) in demands {
                let child_key = (self_ty, r, b);
                let child = match state.anon.get(&child_key) {
                    Some(c) => c.clone(),
                    None => {
                        let mut base = BTreeSet::from([b]);
                        self.close_local(&mut base);
                        state.anon.insert(child_key, base.clone());
                        base
                    }
                };
                for &(s, x, y) in &self.exists_sub {
                    if child.contains(&x)
                        && self.srole_supers(r).contains(&s)
                        && t.insert(y)
                    {
                        grew = true;
                    }
                }
            }
            if grew {
                self.close_local(&mut t);
            } else {
                break;
            }
        }
        t
    }

    /// Runs anonymous-table passes until the whole table is stable.
    fn stabilize_anon(&self, state: &mut EngineState) {
        loop {
            let keys: Vec<AnonKey> = state.anon.keys().copied().collect();
            let mut changed = false;
            for key in keys {
                let improved = self.anon_pass(key, state);
                let entry = state.anon.get_mut(&key).unwrap();
                if *entry != improved {
                    *entry = improved;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }

    /// Entailed type of the anonymous successor demanded by (parent type,
    /// role, seed concept). The table is grown and stabilized on demand.
    fn anon_type(&self, parent: &BTreeSet<Cid>, role: SRole, seed: Cid) -> BTreeSet<Cid> {
        let mut state = self.state.lock().unwrap();
        let pid = state.registry.intern(parent);
        let key = (pid, role, seed);
        if !state.anon.contains_key(&key) {
            let mut base = BTreeSet::from([seed]);
            self.close_local(&mut base);
            state.anon.insert(key, base);
            // seed one pass so the stabilization loop sees the children
            let t = self.anon_pass(key, &mut state);
            state.anon.insert(key, t);
        }
        self.stabilize_anon(&mut state);
        state.anon[&key].clone()
    }

    fn concept_id(&self, n: &str) -> Option<Cid> {
        self.concept_ids.get(n).copied()
    }

    /// O ⊨ A1 ⊓ ... ⊓ An ⊑ a, computed via the universal model of the
    /// singleton ABox {Ai(c)} and memoized per premise set.
    pub fn subsumes(&self, premise: &BTreeSet<Name>, a: &Name) -> bool {
        let Some(target) = self.concept_id(a) else {
            return premise.contains(a);
        };
        let ids: BTreeSet<Cid> = premise
            .iter()
            .filter_map(|n| self.concept_id(n))
            .collect();
        let key: Vec<Cid> = ids.iter().copied().collect();
        {
            let state = self.state.lock().unwrap();
            if let Some(t) = state.subsumes_memo.get(&key) {
                return t.contains(&target);
            }
        }
        let closure = self.saturate_type(&ids);
        let mut state = self.state.lock().unwrap();
        let result = closure.contains(&target);
        state.subsumes_memo.insert(key, closure);
        result
    }

    /// Saturates a standalone element carrying the given concepts: local
    /// closure plus everything flowing back from its anonymous subtree.
    fn saturate_type(&self, start: &BTreeSet<Cid>) -> BTreeSet<Cid> {
        let mut t = start.clone();
        self.close_local(&mut t);
        loop {
            let mut grew = false;
            let demands: Vec<(SRole, Cid)> = self
                .sub_exists
                .iter()
                .filter(|(a, _, _)| t.contains(a))
                .map(|&(_, r, b)| (r, b))
                .collect();
            for (r, b) in demands {
                let child = self.anon_type(&t, r, b);
                for &(s, x, y) in &self.exists_sub {
                    if child.contains(&x)
                        && self.srole_supers(r).contains(&s)
                        && t.insert(y)
                    {
                        grew = true;
                    }
                }
            }
            if grew {
                self.close_local(&mut t);
            } else {
                break;
            }
        }
        t
    }

    fn is_internal(&self, id: Cid) -> bool {
        self.internal.contains(&self.concepts[id])
    }
}

/// The saturation of an ABox: per-constant entailed concept sets, the
/// role-closure of the asserted binary facts, and a consistency flag.
pub struct Saturation<'r> {
    reasoner: &'r Reasoner,
    pub constants: Vec<Name>,
    /// constant index → entailed concept ids
    types: Vec<BTreeSet<Cid>>,
    /// entailed signed edges: (from, to) → signed roles
    edges: BTreeMap<(usize, usize), BTreeSet<SRole>>,
    pub consistent: bool,
}

impl<'r> Saturation<'r> {
    /// Entailed atomic facts over the original vocabulary, restricted to
    /// adom(A).
    pub fn atomic_facts(&self) -> Database {
        let mut facts = BTreeSet::new();
        for (i, t) in self.types.iter().enumerate() {
            for &c in t {
                if !self.reasoner.is_internal(c) {
                    facts.insert(Fact::new(
                        self.reasoner.concepts[c].clone(),
                        vec![self.constants[i].clone()],
                    ));
                }
            }
        }
        for ((a, b), roles) in &self.edges {
            for s in roles {
                let (x, y) = if s.inverse { (*b, *a) } else { (*a, *b) };
                facts.insert(Fact::new(
                    self.reasoner.roles[s.id].clone(),
                    vec![self.constants[x].clone(), self.constants[y].clone()],
                ));
            }
        }
        Database { facts }
    }

    pub fn concepts_of(&self, constant: &str) -> BTreeSet<Name> {
        match self.constants.iter().position(|c| c == constant) {
            Some(i) => self.types[i]
                .iter()
                .map(|&c| self.reasoner.concepts[c].clone())
                .collect(),
            None => BTreeSet::new(),
        }
    }
}

impl Reasoner {
    /// Saturates an ABox (with optional additional isolated constants):
    /// the least fixpoint of the completion rules restricted to adom,
    /// with the rule for ∃r.B ⊑ A fired both across asserted edges and
    /// through demanded anonymous successors.
    pub fn saturate(&self, abox: &Abox, extra_constants: &[Name]) -> Saturation<'_> {
        let mut constants: Vec<Name> = abox.adom().into_iter().collect();
        for c in extra_constants {
            if !constants.contains(c) {
                constants.push(c.clone());
            }
        }
        let index: HashMap<&Name, usize> = constants
            .iter()
            .enumerate()
            .map(|(i, c)| (c, i))
            .collect();
        let mut types: Vec<BTreeSet<Cid>> = vec![BTreeSet::new(); constants.len()];
        let mut edges: BTreeMap<(usize, usize), BTreeSet<SRole>> = BTreeMap::new();
        for f in &abox.facts {
            match f.args.len() {
                1 => {
                    if let Some(c) = self.concept_id(&f.rel) {
                        types[index[&f.args[0]]].insert(c);
                    }
                }
                2 => {
                    if let Some(&r) = self.role_ids.get(&f.rel) {
                        let a = index[&f.args[0]];
                        let b = index[&f.args[1]];
                        let base = SRole {
                            id: r,
                            inverse: false,
                        };
                        for &s in self.srole_supers(base) {
                            if s.inverse {
                                edges.entry((b, a)).or_default().insert(s.flip());
                                // store positively oriented
                            } else {
                                edges.entry((a, b)).or_default().insert(s);
                            }
                        }
                    }
                }
                _ => {}
            }
        }
        // normalize edge map: only positive orientations stored
        let edge_list: Vec<((usize, usize), BTreeSet<SRole>)> = edges
            .iter()
            .map(|(k, v)| (*k, v.clone()))
            .collect();

        loop {
            let mut grew = false;
            for t in types.iter_mut() {
                let before = t.len();
                self.close_local(t);
                if t.len() != before {
                    grew = true;
                }
            }
            // direct edge rule: ∃s.X ⊑ Y with an entailed s-edge a→b, X at b
            for ((a, b), roles) in &edge_list {
                for &(s, x, y) in &self.exists_sub {
                    // edge a→b with positive role ρ covers s if ρ ⊑ s;
                    // the same edge read backwards covers s via ρ⁻ ⊑ s
                    let forward = roles.iter().any(|&rho| self.srole_supers(rho).contains(&s));
                    if forward && types[*b].contains(&x) && types[*a].insert(y) {
                        grew = true;
                    }
                    let backward = roles
                        .iter()
                        .any(|&rho| self.srole_supers(rho.flip()).contains(&s));
                    if backward && types[*a].contains(&x) && types[*b].insert(y) {
                        grew = true;
                    }
                }
            }
            // anonymous-successor mediated rule
            #[allow(clippy::needless_range_loop)]
            for i in 0..types.len() {
                let t = types[i].clone();
                let demands: Vec<(SRole, Cid)> = self
                    .sub_exists
                    .iter()
                    .filter(|(a, _, _)| t.contains(a))
                    .map(|&(_, r, b)| (r, b))
                    .collect();
                for (r, b) in demands {
                    let child = self.anon_type(&t, r, b);
                    for &(s, x, y) in &self.exists_sub {
                        if child.contains(&x)
                            && self.srole_supers(r).contains(&s)
                            && types[i].insert(y)
                        {
                            grew = true;
                        }
                    }
                }
            }
            if !grew {
                break;
            }
        }

        // consistency: role disjointness over asserted-edge closures and
        // over demanded anonymous edges
        let mut consistent = true;
        'check: for set in &self.disjoint {
            for roles in edges.values() {
                let names: BTreeSet<usize> = roles
                    .iter()
                    .filter(|s| !s.inverse)
                    .map(|s| s.id)
                    .collect();
                if set.iter().all(|r| names.contains(r)) {
                    consistent = false;
                    break 'check;
                }
            }
        }
        if consistent {
            // anonymous edges demanded anywhere reachable
            let mut seen_types: BTreeSet<Vec<Cid>> = BTreeSet::new();
            let mut stack: Vec<BTreeSet<Cid>> = types.clone();
            'outer: while let Some(t) = stack.pop() {
                let key: Vec<Cid> = t.iter().copied().collect();
                if !seen_types.insert(key) {
                    continue;
                }
                let demands: Vec<(SRole, Cid)> = self
                    .sub_exists
                    .iter()
                    .filter(|(a, _, _)| t.contains(a))
                    .map(|&(_, r, b)| (r, b))
                    .collect();
                for (r, b) in demands {
                    let names: BTreeSet<usize> = self
                        .srole_supers(r)
                        .iter()
                        .filter(|s| !s.inverse)
                        .map(|s| s.id)
                        .collect();
                    for set in &self.disjoint {
                        if set.iter().all(|x| names.contains(x)) {
                            consistent = false;
                            break 'outer;
                        }
                    }
                    stack.push(self.anon_type(&t, r, b));
                }
            }
        }

        Saturation {
            reasoner: self,
            constants,
            types,
            edges,
            consistent,
        }
    }

    /// Number of distinct anonymous types reachable from the saturation
    /// (a walk over the type graph; nothing is materialized).
    pub fn reachable_anon_types(&self, sat: &Saturation) -> usize {
        let mut seen: BTreeSet<Vec<Cid>> = BTreeSet::new();
        let mut stack: Vec<BTreeSet<Cid>> = Vec::new();
        for t in &sat.types {
            for &(a, r, b) in &self.sub_exists {
                if t.contains(&a) {
                    stack.push(self.anon_type(t, r, b));
                }
            }
        }
        while let Some(t) = stack.pop() {
            let key: Vec<Cid> = t.iter().copied().collect();
            if !seen.insert(key) {
                continue;
            }
            for &(a, r, b) in &self.sub_exists {
                if t.contains(&a) {
                    stack.push(self.anon_type(&t, r, b));
                }
            }
        }
        seen.len()
    }

    /// Materializes the universal model as a finite database: the saturated
    /// ABox part plus the anonymous forest unraveled to `depth` edges below
    /// the ABox constants. Anonymous elements get fresh `_a<i>` names.
    pub fn universal_model(&self, sat: &Saturation, depth: usize) -> UnraveledModel {
        let mut facts: BTreeSet<Fact> = sat.atomic_facts().facts;
        let mut anon_constants: BTreeSet<Name> = BTreeSet::new();
        let mut counter = 0usize;
        let forbidden: BTreeSet<Name> = sat.constants.iter().cloned().collect();
        let mut prefix = String::from("_a");
        while forbidden.iter().any(|n| n.starts_with(&prefix)) {
            prefix.push('a');
        }
        // frontier: (element name, its concept set, remaining depth)
        let mut frontier: Vec<(Name, BTreeSet<Cid>, usize)> = sat
            .constants
            .iter()
            .zip(sat.types.iter())
            .map(|(c, t)| (c.clone(), t.clone(), depth))
            .collect();
        while let Some((elem, t, left)) = frontier.pop() {
            if left == 0 {
                continue;
            }
            let mut demands: BTreeSet<(SRole, Cid)> = BTreeSet::new();
            for &(a, r, b) in &self.sub_exists {
                if t.contains(&a) {
                    demands.insert((r, b));
                }
            }
            for (r, b) in demands {
                let child_t = self.anon_type(&t, r, b);
                let child = format!("{}{}", prefix, counter);
                counter += 1;
                anon_constants.insert(child.clone());
                for &c in &child_t {
                    if !self.is_internal(c) {
                        facts.insert(Fact::new(
                            self.concepts[c].clone(),
                            vec![child.clone()],
                        ));
                    }
                }
                for &s in self.srole_supers(r) {
                    let (x, y) = if s.inverse {
                        (child.clone(), elem.clone())
                    } else {
                        (elem.clone(), child.clone())
                    };
                    facts.insert(Fact::new(self.roles[s.id].clone(), vec![x, y]));
                }
                frontier.push((child, child_t, left - 1));
            }
        }
        UnraveledModel {
            db: Database { facts },
            anonymous: anon_constants,
        }
    }
}

/// A depth-bounded unraveling of the universal model.
pub struct UnraveledModel {
    pub db: Database,
    pub anonymous: BTreeSet<Name>,
}

impl Reasoner {
    /// Materializes the universal model far enough to reproduce every
    /// match of a CQ with `query_vars` variables: along each path the
    /// unraveling descends while node types are pairwise distinct, plus
    /// `query_vars + 1` further levels once types repeat. Matches below a
    /// repeated type shift up along the subtree isomorphism, so answers
    /// over adom(A) are exactly those of the infinite model.
    pub fn universal_model_for_matching(
        &self,
        sat: &Saturation,
        query_vars: usize,
    ) -> UnraveledModel {
        let mut facts: BTreeSet<Fact> = sat.atomic_facts().facts;
        let mut anon_constants: BTreeSet<Name> = BTreeSet::new();
        let mut counter = 0usize;
        let forbidden: BTreeSet<Name> = sat.constants.iter().cloned().collect();
        let mut prefix = String::from("_a");
        while forbidden.iter().any(|n| n.starts_with(&prefix)) {
            prefix.push('a');
        }
        let extra_budget = query_vars + 1;
        // (element, type, types seen on the path, remaining extra levels)
        type PathNode = (Name, BTreeSet<Cid>, BTreeSet<Vec<Cid>>, usize);
        let mut frontier: Vec<PathNode> = sat
            .constants
            .iter()
            .zip(sat.types.iter())
            .map(|(c, t)| (c.clone(), t.clone(), BTreeSet::new(), extra_budget))
            .collect();
        let mut nodes = 0usize;
        while let Some((elem, t, path_types, extra)) = frontier.pop() {
            let mut demands: BTreeSet<(SRole, Cid)> = BTreeSet::new();
            for &(a, r, b) in &self.sub_exists {
                if t.contains(&a) {
                    demands.insert((r, b));
                }
            }
            for (r, b) in demands {
                let child_t = self.anon_type(&t, r, b);
                let key: Vec<Cid> = child_t.iter().copied().collect();
                let (child_path, child_extra) = if path_types.contains(&key) {
                    if extra == 0 {
                        continue;
                    }
                    (path_types.clone(), extra - 1)
                } else {
                    let mut p = path_types.clone();
                    p.insert(key);
                    (p, extra)
                };
                nodes += 1;
                assert!(
                    nodes < 1_000_000,
                    "universal model unraveling exceeds the node budget"
                );
                let child = format!("{}{}", prefix, counter);
                counter += 1;
                anon_constants.insert(child.clone());
                for &c in &child_t {
                    if !self.is_internal(c) {
                        facts.insert(Fact::new(
                            self.concepts[c].clone(),
                            vec![child.clone()],
                        ));
                    }
                }
                for &s in self.srole_supers(r) {
                    let (x, y) = if s.inverse {
                        (child.clone(), elem.clone())
                    } else {
                        (elem.clone(), child.clone())
                    };
                    facts.insert(Fact::new(self.roles[s.id].clone(), vec![x, y]));
                }
                frontier.push((child, child_t, child_path, child_extra));
            }
        }
        UnraveledModel {
            db: Database { facts },
            anonymous: anon_constants,
        }
    }
}

/// An ontology-mediated query (O, S, q).
#[derive(Debug, Clone)]
pub struct Omq {
    pub ontology: Ontology,
    pub schema: Schema,
    pub query: Ucq,
}

/// Certain answers, or the inconsistency marker for DL-Lite ABoxes that
/// violate a role disjointness constraint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Certain {
    Consistent(BTreeSet<Vec<Name>>),
    Inconsistent,
}

impl Certain {
    /// Materializes the answer set, expanding the inconsistent case to all
    /// tuples over adom(A) of the query's arity.
    pub fn tuples(&self, abox: &Abox, arity: usize) -> BTreeSet<Vec<Name>> {
        match self {
            Certain::Consistent(t) => t.clone(),
            Certain::Inconsistent => all_tuples(&abox.adom(), arity),
        }
    }
}

pub fn all_tuples(domain: &BTreeSet<Name>, arity: usize) -> BTreeSet<Vec<Name>> {
    let elems: Vec<&Name> = domain.iter().collect();
    let mut out = BTreeSet::new();
    let mut current = vec![0usize; arity];
    if arity == 0 {
        out.insert(Vec::new());
        return out;
    }
    if elems.is_empty() {
        return out;
    }
    loop {
        out.insert(current.iter().map(|&i| elems[i].clone()).collect());
        let mut pos = arity;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            current[pos] += 1;
            if current[pos] < elems.len() {
                break;
            }
            current[pos] = 0;
        }
    }
}

/// A reasoner bundled with an OMQ for repeated certain-answer queries.
pub struct OmqEngine {
    pub reasoner: Reasoner,
    pub query: Ucq,
}

/// Drops quantified variables whose equality class touches no relational
/// atom and no answer variable. Interpretation domains are nonempty, so
/// such variables never constrain certainty; keeping them would make
/// matches against a materialized (finite, fact-based) model spuriously
/// fail when the element they need carries no facts.
fn drop_vacuous_floats(q: &Ucq) -> Ucq {
    let disjuncts = q
        .disjuncts
        .iter()
        .map(|cq| {
            let reps = cq.equality_representatives();
            let mut anchored: BTreeSet<&Name> = BTreeSet::new();
            for (_, args) in cq.relational_atoms() {
                anchored.extend(args.iter().map(|v| &reps[v]));
            }
            for v in &cq.answer_vars {
                anchored.insert(&reps[v]);
            }
            let keep = |v: &Name| anchored.contains(&reps[v]);
            let atoms: Vec<crate::model::Atom> = cq
                .atoms
                .iter()
                .filter(|a| match a {
                    crate::model::Atom::Rel { .. } => true,
                    crate::model::Atom::Eq { left, right } => keep(left) && keep(right),
                })
                .cloned()
                .collect();
            Cq::new(cq.answer_vars.clone(), atoms)
        })
        .collect();
    Ucq::new(disjuncts)
}

impl OmqEngine {
    pub fn new(omq: &Omq) -> OmqEngine {
        let nf = core_normal_form(&omq.ontology, &omq.schema);
        OmqEngine {
            reasoner: Reasoner::new(&nf, &omq.schema),
            query: drop_vacuous_floats(&omq.query),
        }
    }

    /// Certain answers of the OMQ on an ABox: evaluation over a
    /// sufficiently deep unraveling, restricted to adom(A).
    pub fn certain(&self, abox: &Abox) -> Certain {
        // a Boolean query can be certain over the empty ABox because
        // interpretation domains are nonempty: chase one generic element
        let extra: Vec<Name> = if abox.is_empty() && self.query.arity() == 0 {
            vec!["_g0".to_string()]
        } else {
            Vec::new()
        };
        let sat = self.reasoner.saturate(abox, &extra);
        if !sat.consistent {
            return Certain::Inconsistent;
        }
        let max_vars = self
            .query
            .disjuncts
            .iter()
            .map(|q| q.all_vars().len())
            .max()
            .unwrap_or(0);
        let model = self.reasoner.universal_model_for_matching(&sat, max_vars);
        let adom = abox.adom();
        let answers: BTreeSet<Vec<Name>> = evaluate(&self.query, &model.db)
            .into_iter()
            .filter(|tuple| tuple.iter().all(|c| adom.contains(c)))
            .collect();
        Certain::Consistent(answers)
    }
}

/// Certain answers of an OMQ on an ABox (one-shot convenience wrapper).
pub fn certain_answers(omq: &Omq, abox: &Abox) -> Certain {
    OmqEngine::new(omq).certain(abox)
}

/// Entailed unary facts computed by derivation-tree search: the
/// cross-oracle for saturation. A fact A(a) is derivable iff it is
/// asserted, or ⊤ ⊑ A is an axiom, or some premise set derivable at a is
/// subsumed below A, or an edge rule ∃s.B ⊑ A fires across an asserted
/// role edge whose role entails s.
pub fn derivation_tree_facts(reasoner: &Reasoner, abox: &Abox) -> Database {
    let constants: Vec<Name> = abox.adom().into_iter().collect();
    let mut derived: BTreeMap<Name, BTreeSet<Name>> = constants
        .iter()
        .map(|c| (c.clone(), BTreeSet::new()))
        .collect();
    for f in &abox.facts {
        if f.args.len() == 1 {
            derived.get_mut(&f.args[0]).unwrap().insert(f.rel.clone());
        }
    }
    // signed edges from asserted facts only
    let mut edges: Vec<(Name, Name, Role)> = Vec::new();
    for f in &abox.facts {
        if f.args.len() == 2 {
            edges.push((f.args[0].clone(), f.args[1].clone(), Role::new(f.rel.clone())));
            edges.push((f.args[1].clone(), f.args[0].clone(), Role::inv(f.rel.clone())));
        }
    }
    let all_concepts: BTreeSet<Name> = reasoner
        .concepts
        .iter()
        .filter(|n| !reasoner.internal.contains(*n))
        .cloned()
        .collect();
    let edge_rules: Vec<(Role, Name, Name)> = reasoner
        .exists_sub
        .iter()
        .map(|&(s, x, y)| {
            (
                Role {
                    name: reasoner.roles[s.id].clone(),
                    inverse: s.inverse,
                },
                reasoner.concepts[x].clone(),
                reasoner.concepts[y].clone(),
            )
        })
        .collect();
    loop {
        let mut grew = false;
        for c in &constants {
            let premise = derived[c].clone();
            for a in &all_concepts {
                if !derived[c].contains(a) && reasoner.subsumes(&premise, a) {
                    derived.get_mut(c).unwrap().insert(a.clone());
                    grew = true;
                }
            }
        }
        for (from, to, rho) in &edges {
            for (s, b, a) in &edge_rules {
                if reasoner.role_entailed(rho, s)
                    && derived[to].contains(b)
                    && derived.get_mut(from).unwrap().insert(a.clone())
                {
                    grew = true;
                }
            }
        }
        if !grew {
            break;
        }
    }
    let mut facts = BTreeSet::new();
    for (c, set) in derived {
        for a in set {
            facts.insert(Fact::new(a, vec![c.clone()]));
        }
    }
    Database { facts }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Concept, Fact, Ontology, Role};

    fn v(s: &str) -> Name {
        s.to_string()
    }

    fn example2_ontology() -> Ontology {
        let mut o = Ontology::empty(Dialect::El);
        o.concept_inclusions.push((
            Concept::name("Manager"),
            Concept::name("Employee"),
        ));
        o.concept_inclusions.push((
            Concept::name("Manager"),
            Concept::exists(Role::new("manages"), Concept::name("Secretary")),
        ));
        o
    }

    fn dl_schema() -> Schema {
        Schema::from_pairs([
            (v("Manager"), 1),
            (v("Employee"), 1),
            (v("Secretary"), 1),
            (v("manages"), 2),
        ])
    }

    #[test]
    fn normalize_keeps_normal_axioms() {
        let nf = normalize(&example2_ontology()).unwrap();
        assert_eq!(nf.axioms.len(), 2);
        assert!(nf.internal_concepts.is_empty());
    }

    #[test]
    fn normalize_splits_nested() {
        let mut o = Ontology::empty(Dialect::El);
        // A ⊑ ∃r.(B ⊓ C)
        o.concept_inclusions.push((
            Concept::name("A"),
            Concept::exists(
                Role::new("r"),
                Concept::and(Concept::name("B"), Concept::name("C")),
            ),
        ));
        let nf = normalize(&o).unwrap();
        assert_eq!(nf.internal_concepts.len(), 1);
        assert_eq!(nf.axioms.len(), 3);

        let mut o2 = Ontology::empty(Dialect::Elhi);
        // ∃r.∃s.A ⊑ B
        o2.concept_inclusions.push((
            Concept::exists(
                Role::new("r"),
                Concept::exists(Role::new("s"), Concept::name("A")),
            ),
            Concept::name("B"),
        ));
        let nf2 = normalize(&o2).unwrap();
        assert_eq!(nf2.axioms.len(), 2);
        assert!(nf2
            .axioms
            .iter()
            .all(|a| matches!(a, NfAxiom::ExistsSub(_, _, _))));
    }

    #[test]
    fn role_closure_with_inverses() {
        let mut o = Ontology::empty(Dialect::Elhi);
        o.role_inclusions.push((v("r"), Role::inv("s")));
        let nf = normalize(&o).unwrap();
        let r = Reasoner::new(&nf, &Schema::from_pairs([(v("r"), 2), (v("s"), 2)]));
        assert!(r.role_entailed(&Role::new("r"), &Role::new("r")));
        assert!(r.role_entailed(&Role::new("r"), &Role::inv("s")));
        assert!(r.role_entailed(&Role::inv("r"), &Role::new("s")));
        assert!(!r.role_entailed(&Role::new("s"), &Role::new("r")));

        let mut o2 = Ontology::empty(Dialect::Elhi);
        o2.role_inclusions.push((v("r"), Role::new("s")));
        o2.role_inclusions.push((v("s"), Role::new("t")));
        let nf2 = normalize(&o2).unwrap();
        let r2 = Reasoner::new(
            &nf2,
            &Schema::from_pairs([(v("r"), 2), (v("s"), 2), (v("t"), 2)]),
        );
        assert!(r2.role_entailed(&Role::new("r"), &Role::new("t")));
    }

    #[test]
    fn subsumption_examples() {
        let nf = normalize(&example2_ontology()).unwrap();
        let r = Reasoner::new(&nf, &dl_schema());
        assert!(r.subsumes(&BTreeSet::from([v("Manager")]), &v("Employee")));
        assert!(r.subsumes(&BTreeSet::from([v("A")]), &v("A")));
        // {A ⊑ ∃r.B, ∃r.B ⊑ C} ⊨ A ⊑ C via the anonymous successor
        let mut o = Ontology::empty(Dialect::El);
        o.concept_inclusions.push((
            Concept::name("A"),
            Concept::exists(Role::new("r"), Concept::name("B")),
        ));
        o.concept_inclusions.push((
            Concept::exists(Role::new("r"), Concept::name("B")),
            Concept::name("C"),
        ));
        let nf2 = normalize(&o).unwrap();
        let r2 = Reasoner::new(
            &nf2,
            &Schema::from_pairs([(v("A"), 1), (v("B"), 1), (v("C"), 1), (v("r"), 2)]),
        );
        assert!(r2.subsumes(&BTreeSet::from([v("A")]), &v("C")));
        assert!(!r2.subsumes(&BTreeSet::from([v("B")]), &v("C")));
    }

    #[test]
    fn saturate_example2() {
        let nf = normalize(&example2_ontology()).unwrap();
        let r = Reasoner::new(&nf, &dl_schema());
        let abox = Abox::new([Fact::new("Manager", vec![v("a")])]);
        let sat = r.saturate(&abox, &[]);
        let facts = sat.atomic_facts();
        assert!(facts.facts.contains(&Fact::new("Employee", vec![v("a")])));
        assert!(sat.consistent);
    }

    #[test]
    fn saturate_empty_ontology_is_identity() {
        let nf = NormalFormOntology::empty();
        let schema = Schema::from_pairs([(v("A"), 1), (v("r"), 2)]);
        let r = Reasoner::new(&nf, &schema);
        let abox = Abox::new([
            Fact::new("A", vec![v("a")]),
            Fact::new("r", vec![v("a"), v("b")]),
        ]);
        let sat = r.saturate(&abox, &[]);
        assert_eq!(sat.atomic_facts(), abox);
    }

    #[test]
    fn saturate_through_anonymous_successor() {
        let mut o = Ontology::empty(Dialect::El);
        o.concept_inclusions.push((
            Concept::name("A"),
            Concept::exists(Role::new("r"), Concept::name("B")),
        ));
        o.concept_inclusions.push((
            Concept::exists(Role::new("r"), Concept::name("B")),
            Concept::name("C"),
        ));
        let nf = normalize(&o).unwrap();
        let r = Reasoner::new(
            &nf,
            &Schema::from_pairs([(v("A"), 1), (v("B"), 1), (v("C"), 1), (v("r"), 2)]),
        );
        let abox = Abox::new([Fact::new("A", vec![v("a")])]);
        let sat = r.saturate(&abox, &[]);
        assert!(sat
            .atomic_facts()
            .facts
            .contains(&Fact::new("C", vec![v("a")])));
    }

    #[test]
    fn universal_model_example2() {
        let nf = normalize(&example2_ontology()).unwrap();
        let r = Reasoner::new(&nf, &dl_schema());
        let abox = Abox::new([Fact::new("Manager", vec![v("a")])]);
        let sat = r.saturate(&abox, &[]);
        let model = r.universal_model(&sat, 1);
        assert_eq!(model.anonymous.len(), 1);
        let anon = model.anonymous.iter().next().unwrap().clone();
        assert!(model.db.facts.contains(&Fact::new("Manager", vec![v("a")])));
        assert!(model.db.facts.contains(&Fact::new("Employee", vec![v("a")])));
        assert!(model
            .db
            .facts
            .contains(&Fact::new("manages", vec![v("a"), anon.clone()])));
        assert!(model.db.facts.contains(&Fact::new("Secretary", vec![anon])));
    }

    #[test]
    fn universal_model_chain_unfolds() {
        let mut o = Ontology::empty(Dialect::El);
        o.concept_inclusions.push((
            Concept::name("A"),
            Concept::exists(Role::new("r"), Concept::name("A")),
        ));
        let nf = normalize(&o).unwrap();
        let r = Reasoner::new(&nf, &Schema::from_pairs([(v("A"), 1), (v("r"), 2)]));
        let abox = Abox::new([Fact::new("A", vec![v("a")])]);
        let sat = r.saturate(&abox, &[]);
        let model = r.universal_model(&sat, 3);
        assert_eq!(model.anonymous.len(), 3);
        let r_facts = model.db.facts.iter().filter(|f| f.rel == "r").count();
        assert_eq!(r_facts, 3);
    }

    #[test]
    fn certain_answers_example2() {
        let omq = Omq {
            ontology: example2_ontology(),
            schema: dl_schema(),
            query: Ucq::singleton(crate::model::Cq::new(
                vec![v("x")],
                [crate::model::Atom::rel("Employee", vec![v("x")])],
            )),
        };
        let abox = Abox::new([Fact::new("Manager", vec![v("a")])]);
        let ans = certain_answers(&omq, &abox);
        assert_eq!(
            ans,
            Certain::Consistent(BTreeSet::from([vec![v("a")]]))
        );
    }

    #[test]
    fn certain_answers_match_into_anonymous_part() {
        // O = {A ⊑ ∃r.B}, q(x) = ∃y r(x,y) ∧ B(y), A = {A(a)} → {(a)}
        let mut o = Ontology::empty(Dialect::El);
        o.concept_inclusions.push((
            Concept::name("A"),
            Concept::exists(Role::new("r"), Concept::name("B")),
        ));
        let omq = Omq {
            ontology: o,
            schema: Schema::from_pairs([(v("A"), 1), (v("B"), 1), (v("r"), 2)]),
            query: Ucq::singleton(crate::model::Cq::new(
                vec![v("x")],
                [
                    crate::model::Atom::rel("r", vec![v("x"), v("y")]),
                    crate::model::Atom::rel("B", vec![v("y")]),
                ],
            )),
        };
        let abox = Abox::new([Fact::new("A", vec![v("a")])]);
        let ans = certain_answers(&omq, &abox);
        assert_eq!(ans, Certain::Consistent(BTreeSet::from([vec![v("a")]])));
        // anonymous witnesses are never returned as certain answers
        let omq2 = Omq {
            query: Ucq::singleton(crate::model::Cq::new(
                vec![v("x"), v("y")],
                [crate::model::Atom::rel("r", vec![v("x"), v("y")])],
            )),
            ..omq
        };
        let ans2 = certain_answers(&omq2, &abox);
        assert_eq!(ans2, Certain::Consistent(BTreeSet::new()));
    }

    #[test]
    fn dllite_inconsistency_marker() {
        let mut o = Ontology::empty(Dialect::DlLiteRHorn);
        o.role_disjointness
            .push(BTreeSet::from([v("r"), v("s")]));
        o.role_inclusions.push((v("r"), Role::new("s")));
        let schema = Schema::from_pairs([(v("r"), 2), (v("s"), 2)]);
        let omq = Omq {
            ontology: o,
            schema,
            query: Ucq::singleton(crate::model::Cq::new(
                vec![v("x")],
                [crate::model::Atom::rel("r", vec![v("x"), v("y")])],
            )),
        };
        // r ⊑ s makes every r-edge an s-edge, violating disjoint(r,s)
        let abox = Abox::new([Fact::new("r", vec![v("a"), v("b")])]);
        let ans = certain_answers(&omq, &abox);
        assert_eq!(ans, Certain::Inconsistent);
        assert_eq!(
            ans.tuples(&abox, 1),
            BTreeSet::from([vec![v("a")], vec![v("b")]])
        );
    }

    #[test]
    fn dllite_exists_top_reasoning() {
        // DL-Lite: ∃r.⊤ ⊑ A over asserted edges, plus A ⊑ ∃s.⊤ generation
        let mut o = Ontology::empty(Dialect::DlLiteRHorn);
        o.concept_inclusions.push((
            Concept::exists(Role::new("r"), Concept::Top),
            Concept::name("A"),
        ));
        o.concept_inclusions.push((
            Concept::name("A"),
            Concept::exists(Role::new("s"), Concept::Top),
        ));
        o.concept_inclusions.push((
            Concept::exists(Role::inv("s"), Concept::Top),
            Concept::name("B"),
        ));
        let schema = Schema::from_pairs([(v("A"), 1), (v("B"), 1), (v("r"), 2), (v("s"), 2)]);
        let omq = Omq {
            ontology: o,
            schema,
            query: Ucq::singleton(crate::model::Cq::new(
                vec![v("x")],
                [
                    crate::model::Atom::rel("s", vec![v("x"), v("y")]),
                    crate::model::Atom::rel("B", vec![v("y")]),
                ],
            )),
        };
        let abox = Abox::new([Fact::new("r", vec![v("a"), v("b")])]);
        let ans = certain_answers(&omq, &abox);
        assert_eq!(ans, Certain::Consistent(BTreeSet::from([vec![v("a")]])));
    }

    #[test]
    fn derivation_trees_agree_with_saturation() {
        let mut o = Ontology::empty(Dialect::Elhi);
        o.concept_inclusions.push((
            Concept::name("A"),
            Concept::exists(Role::new("r"), Concept::name("B")),
        ));
        o.concept_inclusions.push((
            Concept::exists(Role::new("r"), Concept::name("B")),
            Concept::name("C"),
        ));
        o.concept_inclusions
            .push((Concept::name("C"), Concept::name("D")));
        o.role_inclusions.push((v("p"), Role::new("r")));
        let nf = normalize(&o).unwrap();
        let schema = Schema::from_pairs([
            (v("A"), 1),
            (v("B"), 1),
            (v("C"), 1),
            (v("D"), 1),
            (v("r"), 2),
            (v("p"), 2),
        ]);
        let r = Reasoner::new(&nf, &schema);
        let abox = Abox::new([
            Fact::new("A", vec![v("a")]),
            Fact::new("p", vec![v("a"), v("b")]),
            Fact::new("B", vec![v("b")]),
        ]);
        let sat = r.saturate(&abox, &[]);
        let sat_unary: BTreeSet<Fact> = sat
            .atomic_facts()
            .facts
            .into_iter()
            .filter(|f| f.args.len() == 1)
            .collect();
        let derived = derivation_tree_facts(&r, &abox);
        assert_eq!(sat_unary, derived.facts);
        // C(a) must be in: p ⊑ r and B(b) fire ∃r.B ⊑ C
        assert!(derived.facts.contains(&Fact::new("C", vec![v("a")])));
    }
}
