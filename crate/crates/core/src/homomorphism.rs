//! Homomorphism search between CQs and into databases, CQ/UCQ containment,
//! and query evaluation.
//!
//! Equality atoms of the target query are handled through a union-find
//! closure computed once per target: relational atoms match modulo that
//! closure and answer variables match positionally modulo it.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::model::{Cq, Database, ModelError, Name, Ucq};

/// A homomorphism: a total map on the variables of the source CQ,
/// including answer variables that occur in no atom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Homomorphism {
    pub assignment: BTreeMap<Name, Name>,
}

/// The target of a homomorphism search: relational atoms over
/// representatives, the universe of representative values, and the
/// representative of each target answer position.
struct Target {
    atoms_by_rel: HashMap<Name, Vec<Vec<Name>>>,
    universe: Vec<Name>,
    answer_reps: Vec<Name>,
}

fn cq_target(q: &Cq) -> Target {
    let reps = q.equality_representatives();
    let mut atoms_by_rel: HashMap<Name, Vec<Vec<Name>>> = HashMap::new();
    for (rel, args) in q.relational_atoms() {
        let image: Vec<Name> = args.iter().map(|v| reps[v].clone()).collect();
        atoms_by_rel.entry(rel.clone()).or_default().push(image);
    }
    let mut universe: BTreeSet<Name> = reps.values().cloned().collect();
    // representatives only; mapping into a representative is always enough
    universe.extend(q.all_vars().iter().map(|v| reps[v].clone()));
    Target {
        atoms_by_rel,
        universe: universe.into_iter().collect(),
        answer_reps: q.answer_vars.iter().map(|v| reps[v].clone()).collect(),
    }
}

fn db_target(d: &Database, tuple: Option<&[Name]>) -> Target {
    let mut atoms_by_rel: HashMap<Name, Vec<Vec<Name>>> = HashMap::new();
    for f in &d.facts {
        atoms_by_rel
            .entry(f.rel.clone())
            .or_default()
            .push(f.args.clone());
    }
    Target {
        atoms_by_rel,
        universe: d.adom().into_iter().collect(),
        answer_reps: tuple.map(|t| t.to_vec()).unwrap_or_default(),
    }
}

/// Source side, quotiented by its own equality atoms: search assigns the
/// class representatives; other variables follow their representative.
struct Source {
    reps: BTreeMap<Name, Name>,
    /// relational atoms with args replaced by representatives
    atoms: Vec<(Name, Vec<Name>)>,
    /// all representative variables, in search order
    search_vars: Vec<Name>,
    answer_reps: Vec<Name>,
}

fn source_of(q: &Cq) -> Source {
    let reps = q.equality_representatives();
    let atoms: Vec<(Name, Vec<Name>)> = q
        .relational_atoms()
        .map(|(rel, args)| (rel.clone(), args.iter().map(|v| reps[v].clone()).collect()))
        .collect();
    // most-constrained-first: variables occurring in many atoms first
    let mut occ: BTreeMap<&Name, usize> = BTreeMap::new();
    for (_, args) in &atoms {
        for v in args {
            *occ.entry(v).or_insert(0) += 1;
        }
    }
    let mut in_atoms: Vec<Name> = occ.keys().map(|v| (*v).clone()).collect();
    in_atoms.sort_by_key(|v| std::cmp::Reverse(occ[v]));
    let mut search_vars = in_atoms;
    let mut seen: BTreeSet<Name> = search_vars.iter().cloned().collect();
    for v in q.all_vars() {
        let r = reps[&v].clone();
        if seen.insert(r.clone()) {
            search_vars.push(r);
        }
    }
    Source {
        answer_reps: q.answer_vars.iter().map(|v| reps[v].clone()).collect(),
        reps,
        atoms,
        search_vars,
    }
}

/// Backtracking search for an assignment of source representatives into the
/// target. `answers_fixed` constrains answer positions to the target's
/// answer representatives; otherwise `collect` receives every complete
/// assignment (used for evaluation) and can stop the search by returning
/// false.
fn search(
    src: &Source,
    tgt: &Target,
    answers_fixed: bool,
    collect: &mut dyn FnMut(&BTreeMap<Name, Name>) -> bool,
) -> bool {
    let mut assign: BTreeMap<Name, Name> = BTreeMap::new();
    if answers_fixed {
        debug_assert_eq!(src.answer_reps.len(), tgt.answer_reps.len());
        for (s, t) in src.answer_reps.iter().zip(tgt.answer_reps.iter()) {
            match assign.get(s) {
                Some(v) if v != t => return false,
                _ => {
                    assign.insert(s.clone(), t.clone());
                }
            }
        }
    }
    // order atoms greedily: most bound variables first at each step
    let mut remaining: Vec<usize> = (0..src.atoms.len()).collect();
    let mut order: Vec<usize> = Vec::with_capacity(remaining.len());
    let mut bound: BTreeSet<Name> = assign.keys().cloned().collect();
    while !remaining.is_empty() {
        let (pos, &best) = remaining
            .iter()
            .enumerate()
            .max_by_key(|(_, &i)| {
                src.atoms[i]
                    .1
                    .iter()
                    .filter(|v| bound.contains(*v))
                    .count()
            })
            .unwrap();
        bound.extend(src.atoms[best].1.iter().cloned());
        order.push(best);
        remaining.remove(pos);
    }

    fn rec(
        src: &Source,
        tgt: &Target,
        order: &[usize],
        depth: usize,
        assign: &mut BTreeMap<Name, Name>,
        collect: &mut dyn FnMut(&BTreeMap<Name, Name>) -> bool,
    ) -> bool {
        if depth == order.len() {
            // assign floating representatives over the target universe
            let floating: Vec<&Name> = src
                .search_vars
                .iter()
                .filter(|v| !assign.contains_key(*v))
                .collect();
            if floating.is_empty() {
                return !collect(assign);
            }
            if tgt.universe.is_empty() {
                return false;
            }
            fn float_rec(
                floating: &[&Name],
                universe: &[Name],
                assign: &mut BTreeMap<Name, Name>,
                collect: &mut dyn FnMut(&BTreeMap<Name, Name>) -> bool,
            ) -> bool {
                match floating.split_first() {
                    None => !collect(assign),
                    Some((v, rest)) => {
                        for val in universe {
                            assign.insert((*v).clone(), val.clone());
                            if float_rec(rest, universe, assign, collect) {
                                assign.remove(*v);
                                return true;
                            }
                        }
                        assign.remove(*v);
                        false
                    }
                }
            }
            return float_rec(&floating, &tgt.universe, assign, collect);
        }
        let (rel, args) = &src.atoms[order[depth]];
        let Some(candidates) = tgt.atoms_by_rel.get(rel) else {
            return false;
        };
        'cand: for cand in candidates {
            debug_assert_eq!(cand.len(), args.len());
            let mut added: Vec<&Name> = Vec::new();
            for (v, val) in args.iter().zip(cand.iter()) {
                match assign.get(v) {
                    Some(existing) if existing != val => {
                        for a in added {
                            assign.remove(a);
                        }
                        continue 'cand;
                    }
                    Some(_) => {}
                    None => {
                        assign.insert(v.clone(), val.clone());
                        added.push(v);
                    }
                }
            }
            if rec(src, tgt, order, depth + 1, assign, collect) {
                return true;
            }
            for a in added {
                assign.remove(a);
            }
        }
        false
    }

    rec(src, tgt, &order, 0, &mut assign, collect)
}

fn total_assignment(src: &Source, partial: &BTreeMap<Name, Name>) -> BTreeMap<Name, Name> {
    let mut out = BTreeMap::new();
    for (v, rep) in &src.reps {
        if let Some(val) = partial.get(rep) {
            out.insert(v.clone(), val.clone());
        }
    }
    out
}

/// Searches for a homomorphism from `from` into `into` witnessing
/// `into ⊆ from`: relational atoms land in `into`'s atoms modulo its
/// equality closure, equality atoms of `from` land inside one class, and
/// answer variables match positionally modulo the closure.
pub fn find_cq_hom(from: &Cq, into: &Cq) -> Result<Option<Homomorphism>, ModelError> {
    if from.arity() != into.arity() {
        return Err(ModelError::ArityMismatch(format!(
            "{} vs {}",
            from.arity(),
            into.arity()
        )));
    }
    let src = source_of(from);
    let tgt = cq_target(into);
    let mut found: Option<BTreeMap<Name, Name>> = None;
    search(&src, &tgt, true, &mut |assign| {
        found = Some(total_assignment(&src, assign));
        false // stop at the first hit
    });
    Ok(found.map(|assignment| Homomorphism { assignment }))
}

/// q1 ⊆ q2 for CQs: a homomorphism from q2 into q1 exists.
pub fn cq_contained(q1: &Cq, q2: &Cq) -> Result<bool, ModelError> {
    Ok(find_cq_hom(q2, q1)?.is_some())
}

/// u1 ⊆ u2 for UCQs: every disjunct of u1 is contained in some disjunct
/// of u2.
pub fn ucq_contained(u1: &Ucq, u2: &Ucq) -> Result<bool, ModelError> {
    if u1.arity() != u2.arity() {
        return Err(ModelError::ArityMismatch(format!(
            "{} vs {}",
            u1.arity(),
            u2.arity()
        )));
    }
    for q1 in &u1.disjuncts {
        let mut ok = false;
        for q2 in &u2.disjuncts {
            if find_cq_hom(q2, q1)?.is_some() {
                ok = true;
                break;
            }
        }
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Two UCQs are equivalent iff they contain each other.
pub fn ucq_equivalent(u1: &Ucq, u2: &Ucq) -> Result<bool, ModelError> {
    Ok(ucq_contained(u1, u2)? && ucq_contained(u2, u1)?)
}

/// Evaluates a CQ over a database: all answer tuples over adom(D).
/// Answer variables not occurring in any atom range over the whole active
/// domain; a variable-free Boolean query holds on every database.
pub fn evaluate_cq(q: &Cq, d: &Database) -> BTreeSet<Vec<Name>> {
    let src = source_of(q);
    let tgt = db_target(d, None);
    let mut out: BTreeSet<Vec<Name>> = BTreeSet::new();
    search(&src, &tgt, false, &mut |assign| {
        let tuple: Vec<Name> = src
            .answer_reps
            .iter()
            .map(|v| assign.get(v).expect("complete assignment").clone())
            .collect();
        out.insert(tuple);
        true // keep enumerating
    });
    out
}

/// Evaluates a UCQ over a database.
pub fn evaluate(u: &Ucq, d: &Database) -> BTreeSet<Vec<Name>> {
    let mut out = BTreeSet::new();
    for cq in &u.disjuncts {
        out.extend(evaluate_cq(cq, d));
    }
    out
}

/// Decides whether `tuple` is an answer to `q` on `d` without enumerating
/// the full answer set.
pub fn satisfies(q: &Cq, d: &Database, tuple: &[Name]) -> Result<bool, ModelError> {
    if q.arity() != tuple.len() {
        return Err(ModelError::ArityMismatch(format!(
            "{} vs {}",
            q.arity(),
            tuple.len()
        )));
    }
    let adom = d.adom();
    if !tuple.iter().all(|c| adom.contains(c)) {
        return Ok(false);
    }
    let src = source_of(q);
    // answer reps must be consistent with the tuple up front
    let mut fixed: BTreeMap<&Name, &Name> = BTreeMap::new();
    for (rep, val) in src.answer_reps.iter().zip(tuple.iter()) {
        match fixed.get(rep) {
            Some(existing) if *existing != val => return Ok(false),
            _ => {
                fixed.insert(rep, val);
            }
        }
    }
    let tgt = db_target(d, Some(tuple));
    let mut found = false;
    search(&src, &tgt, true, &mut |_| {
        found = true;
        false
    });
    Ok(found)
}
