//! Forward application M(·) of GAV mappings to databases and queries and
//! backward application M⁻(·) via most general unifiers of mapping heads
//! with facts.
//!
//! Backward application enumerates one disjunct per choice of a suitable
//! mapping for every fact; the choices stream lazily so callers can
//! short-circuit.

use std::collections::{BTreeMap, BTreeSet};

use crate::homomorphism::evaluate_cq;
use crate::model::{view_as_database, Abox, Atom, Cq, Database, Fact, GavMapping, Name, Ucq};

/// Applies the mappings to a database: one head fact per match of a
/// mapping body.
pub fn apply_forward_db(mappings: &[GavMapping], d: &Database) -> Abox {
    let mut facts = BTreeSet::new();
    for m in mappings {
        let q = Cq::new(m.head_args.clone(), m.body.iter().cloned());
        for tuple in evaluate_cq(&q, d) {
            facts.insert(Fact::new(m.head_rel.clone(), tuple));
        }
    }
    Abox { facts }
}

/// Applies the mappings to a CQ: the query is quotiented by its equality
/// atoms, viewed as a database, mapped forward, and the result is read back
/// as a CQ with the original answer variables and equality atoms.
pub fn apply_forward_query(mappings: &[GavMapping], q: &Cq) -> Cq {
    let (qq, _) = q.quotient();
    let db = view_as_database(&qq);
    let image = apply_forward_db(mappings, &db);
    let mut atoms: Vec<Atom> = image
        .facts
        .into_iter()
        .map(|f| Atom::rel(f.rel, f.args))
        .collect();
    for (l, r) in q.equality_atoms() {
        atoms.push(Atom::eq(l.clone(), r.clone()));
    }
    Cq::new(q.answer_vars.clone(), atoms)
}

/// Disjunct-wise forward application to a UCQ, deduplicating equal
/// disjuncts.
pub fn apply_forward_ucq(mappings: &[GavMapping], q: &Ucq) -> Ucq {
    let mut disjuncts: Vec<Cq> = Vec::new();
    for cq in &q.disjuncts {
        let image = apply_forward_query(mappings, cq);
        if !disjuncts.contains(&image) {
            disjuncts.push(image);
        }
    }
    Ucq::new(disjuncts)
}

/// The most general unifier of a mapping's head with a fact: a map from
/// head variables to the fact's constants, if one exists.
pub fn suitable(mapping: &GavMapping, fact: &Fact) -> Option<BTreeMap<Name, Name>> {
    if mapping.head_rel != fact.rel || mapping.head_args.len() != fact.args.len() {
        return None;
    }
    let mut sigma: BTreeMap<Name, Name> = BTreeMap::new();
    for (v, c) in mapping.head_args.iter().zip(fact.args.iter()) {
        match sigma.get(v) {
            Some(bound) if bound != c => return None,
            _ => {
                sigma.insert(v.clone(), c.clone());
            }
        }
    }
    Some(sigma)
}

/// One disjunct of M⁻(A, ā): the instantiated source database, the CQ view
/// with answer tuple ā, and the per-fact mapping choice that produced it.
#[derive(Debug, Clone)]
pub struct BackwardDisjunct {
    /// Union of the instantiated mapping bodies, as a source database.
    pub source_db: Database,
    /// The disjunct as a CQ with the preserved answer tuple and equalities.
    pub cq: Cq,
    /// Index into the mapping list chosen for each fact, fact-sorted.
    pub choice: Vec<(Fact, usize)>,
}

/// Streaming enumeration of the disjuncts of M⁻(A, ā).
pub struct BackwardChoices {
    facts: Vec<Fact>,
    /// per fact: (mapping index, mgu)
    options: Vec<Vec<(usize, BTreeMap<Name, Name>)>>,
    mappings: Vec<GavMapping>,
    answer: Vec<Name>,
    equalities: Vec<(Name, Name)>,
    forbidden: BTreeSet<Name>,
    /// odometer over `options`; None once exhausted
    cursor: Option<Vec<usize>>,
    dead_fact: Option<Fact>,
}

impl BackwardChoices {
    /// True iff some fact of the ABox has no suitable mapping, which makes
    /// the disjunct set empty (callers treat an empty M⁻ as the
    /// unsatisfiable query).
    pub fn dead_fact(&self) -> Option<&Fact> {
        self.dead_fact.as_ref()
    }

    /// Number of disjuncts: the product of per-fact option counts.
    pub fn total_choices(&self) -> u128 {
        if self.dead_fact.is_some() {
            return 0;
        }
        self.options
            .iter()
            .map(|o| o.len() as u128)
            .product::<u128>()
    }

    fn build(&self, idxs: &[usize]) -> BackwardDisjunct {
        let mut fresh_prefix = String::from("_f");
        while self.forbidden.iter().any(|n| n.starts_with(&fresh_prefix)) {
            fresh_prefix.push('f');
        }
        let mut counter = 0usize;
        let mut facts: BTreeSet<Fact> = BTreeSet::new();
        let mut choice = Vec::with_capacity(self.facts.len());
        for (fact, &opt) in self.facts.iter().zip(idxs.iter()) {
            let (midx, sigma) = &self.options_for(fact)[opt];
            let mapping = &self.mappings[*midx];
            let mut sigma = sigma.clone();
            // extend the mgu to send body-only variables to fresh constants,
            // in first-occurrence order over the sorted body
            for atom in &mapping.body {
                for v in atom.vars() {
                    if !sigma.contains_key(v) {
                        let name = format!("{}{}", fresh_prefix, counter);
                        counter += 1;
                        sigma.insert(v.clone(), name);
                    }
                }
            }
            for atom in &mapping.body {
                if let Atom::Rel { rel, args } = atom {
                    facts.insert(Fact::new(
                        rel.clone(),
                        args.iter().map(|v| sigma[v].clone()).collect(),
                    ));
                }
            }
            choice.push((fact.clone(), *midx));
        }
        let db = Database { facts };
        let mut atoms: Vec<Atom> = db
            .facts
            .iter()
            .map(|f| Atom::rel(f.rel.clone(), f.args.clone()))
            .collect();
        let mut answer_vars: Vec<Name> = Vec::with_capacity(self.answer.len());
        let adom = db.adom();
        let mut used: BTreeSet<Name> = adom.clone();
        for (i, a) in self.answer.iter().enumerate() {
            let mut x = format!("x{}", i + 1);
            while used.contains(&x) {
                x.push('_');
            }
            used.insert(x.clone());
            atoms.push(Atom::eq(x.clone(), a.clone()));
            answer_vars.push(x);
        }
        for (l, r) in &self.equalities {
            atoms.push(Atom::eq(l.clone(), r.clone()));
        }
        BackwardDisjunct {
            cq: Cq::new(answer_vars, atoms),
            source_db: db,
            choice,
        }
    }

    fn options_for(&self, fact: &Fact) -> &Vec<(usize, BTreeMap<Name, Name>)> {
        let idx = self.facts.iter().position(|f| f == fact).unwrap();
        &self.options[idx]
    }
}

impl Iterator for BackwardChoices {
    type Item = BackwardDisjunct;

    fn next(&mut self) -> Option<BackwardDisjunct> {
        if self.dead_fact.is_some() {
            return None;
        }
        let cursor = self.cursor.as_ref()?.clone();
        let result = self.build(&cursor);
        // advance odometer
        let mut next = cursor;
        let mut i = next.len();
        loop {
            if i == 0 {
                self.cursor = None;
                break;
            }
            i -= 1;
            next[i] += 1;
            if next[i] < self.options[i].len() {
                self.cursor = Some(next);
                break;
            }
            next[i] = 0;
        }
        // an empty fact list yields exactly one (empty) disjunct
        if self.facts.is_empty() {
            self.cursor = None;
        }
        Some(result)
    }
}

/// M⁻(A, ā): one disjunct per choice of a suitable mapping for each fact.
/// Every fact constant is preserved; body-only variables become fresh
/// constants that are pairwise distinct across facts.
pub fn apply_backward(mappings: &[GavMapping], abox: &Abox, tuple: &[Name]) -> BackwardChoices {
    let facts: Vec<Fact> = abox.facts.iter().cloned().collect();
    let mut options = Vec::with_capacity(facts.len());
    let mut dead_fact = None;
    for f in &facts {
        let opts: Vec<(usize, BTreeMap<Name, Name>)> = mappings
            .iter()
            .enumerate()
            .filter_map(|(i, m)| suitable(m, f).map(|sigma| (i, sigma)))
            .collect();
        if opts.is_empty() && dead_fact.is_none() {
            dead_fact = Some(f.clone());
        }
        options.push(opts);
    }
    let mut forbidden: BTreeSet<Name> = abox.adom();
    forbidden.extend(tuple.iter().cloned());
    let cursor = if dead_fact.is_some() {
        None
    } else {
        Some(vec![0; facts.len()])
    };
    BackwardChoices {
        facts,
        options,
        mappings: mappings.to_vec(),
        answer: tuple.to_vec(),
        equalities: Vec::new(),
        forbidden,
        cursor,
        dead_fact,
    }
}

/// M⁻ applied to a CQ over sch(M): the query is quotiented, viewed as an
/// ABox, translated backwards, and each disjunct keeps the original answer
/// variables and equality atoms.
pub fn apply_backward_query(mappings: &[GavMapping], r: &Cq) -> BackwardChoices {
    let (rq, reps) = r.quotient();
    let db = view_as_database(&rq);
    let facts: Vec<Fact> = db.facts.iter().cloned().collect();
    let mut options = Vec::with_capacity(facts.len());
    let mut dead_fact = None;
    for f in &facts {
        let opts: Vec<(usize, BTreeMap<Name, Name>)> = mappings
            .iter()
            .enumerate()
            .filter_map(|(i, m)| suitable(m, f).map(|sigma| (i, sigma)))
            .collect();
        if opts.is_empty() && dead_fact.is_none() {
            dead_fact = Some(f.clone());
        }
        options.push(opts);
    }
    let mut forbidden: BTreeSet<Name> = r.all_vars();
    forbidden.extend(db.adom());
    let cursor = if dead_fact.is_some() {
        None
    } else {
        Some(vec![0; facts.len()])
    };
    BackwardChoices {
        facts,
        options,
        mappings: mappings.to_vec(),
        // answer variables are kept verbatim: reattach them through the
        // original equality atoms rather than fresh x_i = a_i ties
        answer: Vec::new(),
        equalities: {
            let mut eqs: Vec<(Name, Name)> = r
                .equality_atoms()
                .map(|(l, r)| (l.clone(), r.clone()))
                .collect();
            // tie each answer variable to its representative so the
            // disjunct keeps the same answer tuple semantics as r
            for v in &r.answer_vars {
                let rep = &reps[v];
                if rep != v {
                    eqs.push((v.clone(), rep.clone()));
                }
            }
            eqs
        },
        forbidden,
        cursor,
        dead_fact,
    }
}

/// Materializes M⁻(r) for a UCQ r as a UCQ, with an optional cap on the
/// number of disjuncts. Returns None if the cap is exceeded.
pub fn backward_ucq(mappings: &[GavMapping], r: &Ucq, cap: usize) -> Option<Ucq> {
    let mut disjuncts = Vec::new();
    for cq in &r.disjuncts {
        let mut it = apply_backward_query(mappings, cq).peekable();
        if it.peek().is_none() {
            continue; // dead disjunct: contributes nothing
        }
        for d in it {
            let mut p = d.cq;
            p.answer_vars = cq.answer_vars.clone();
            // answer vars of r may not occur in atoms; reconstruct
            p = Cq::new(cq.answer_vars.clone(), p.atoms);
            if disjuncts.len() >= cap {
                return None;
            }
            if !disjuncts.contains(&p) {
                disjuncts.push(p);
            }
        }
    }
    if disjuncts.is_empty() {
        return None;
    }
    Some(Ucq::new(disjuncts))
}
