//! Deterministic random instance generators for property and oracle
//! testing: OBDA specifications, source/target queries, and normal-form
//! ontologies with ABoxes.

use std::collections::BTreeSet;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::model::{
    Atom, Concept, Cq, Database, Dialect, Fact, GavMapping, Name, ObdaSpec, Ontology, Role,
    Schema, Ucq,
};
use crate::reasoner::{NfAxiom, NormalFormOntology};

/// Size limits for generated instances.
#[derive(Debug, Clone)]
pub struct GenProfile {
    pub max_relations: usize,
    pub max_arity: usize,
    pub max_mappings: usize,
    pub max_body_atoms: usize,
    /// pool sizes for head relations; small pools make backward choices
    /// branch
    pub head_concepts: usize,
    pub head_roles: usize,
    pub max_cis: usize,
    pub dialect: Dialect,
    pub max_query_atoms: usize,
    pub max_answer_vars: usize,
    pub rooted: bool,
    pub equality_prob: f64,
    /// Allow binary mapping heads of the form r(x,x).
    pub allow_repeated_heads: bool,
}

impl Default for GenProfile {
    fn default() -> GenProfile {
        GenProfile {
            max_relations: 3,
            max_arity: 2,
            max_mappings: 4,
            max_body_atoms: 2,
            head_concepts: 2,
            head_roles: 1,
            max_cis: 3,
            dialect: Dialect::El,
            max_query_atoms: 3,
            max_answer_vars: 2,
            rooted: true,
            equality_prob: 0.15,
            allow_repeated_heads: false,
        }
    }
}

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generates a well-formed specification and a source query, deterministic
/// in the seed.
pub fn random_instance(seed: u64, profile: &GenProfile) -> (ObdaSpec, Ucq) {
    let mut rng = rng_for(seed);
    let spec = random_spec(&mut rng, profile);
    let q_s = random_source_query(&mut rng, profile, &spec.source_schema);
    (spec, q_s)
}

fn random_spec(rng: &mut ChaCha8Rng, profile: &GenProfile) -> ObdaSpec {
    // source schema
    let nrel = rng.gen_range(1..=profile.max_relations);
    let mut schema = Schema::new();
    for i in 0..nrel {
        let arity = rng.gen_range(1..=profile.max_arity);
        schema.add(format!("R{}", i), arity);
    }
    let relations: Vec<(Name, usize)> = schema.iter().map(|(n, a)| (n.clone(), a)).collect();

    // mappings
    let concept_pool: Vec<Name> = (0..profile.head_concepts.max(1))
        .map(|i| format!("P{}", i))
        .collect();
    let role_pool: Vec<Name> = (0..profile.head_roles.max(1))
        .map(|i| format!("p{}", i))
        .collect();
    let nmap = rng.gen_range(1..=profile.max_mappings);
    let mut mappings = Vec::new();
    for _ in 0..nmap {
        let natoms = rng.gen_range(1..=profile.max_body_atoms);
        let nvars = rng.gen_range(1..=(natoms * profile.max_arity).max(1));
        let vars: Vec<Name> = (0..nvars).map(|i| format!("v{}", i)).collect();
        let mut body = Vec::new();
        let mut used: BTreeSet<Name> = BTreeSet::new();
        for _ in 0..natoms {
            let (rel, arity) = relations[rng.gen_range(0..relations.len())].clone();
            let args: Vec<Name> = (0..arity)
                .map(|_| vars[rng.gen_range(0..vars.len())].clone())
                .collect();
            used.extend(args.iter().cloned());
            body.push(Atom::rel(rel, args));
        }
        let used: Vec<Name> = used.into_iter().collect();
        let binary = rng.gen_bool(0.5) && (profile.allow_repeated_heads || used.len() > 1);
        let (head_rel, head_args) = if binary {
            let r = role_pool[rng.gen_range(0..role_pool.len())].clone();
            let x = used[rng.gen_range(0..used.len())].clone();
            let mut y = used[rng.gen_range(0..used.len())].clone();
            if !profile.allow_repeated_heads {
                while y == x {
                    y = used[rng.gen_range(0..used.len())].clone();
                }
            }
            (r, vec![x, y])
        } else {
            let c = concept_pool[rng.gen_range(0..concept_pool.len())].clone();
            let x = used[rng.gen_range(0..used.len())].clone();
            (c, vec![x])
        };
        mappings.push(GavMapping::new(body, head_rel, head_args));
    }

    let spec_sch_m: Schema = {
        let mut s = Schema::new();
        for m in &mappings {
            s.add(m.head_rel.clone(), m.head_args.len());
        }
        s
    };
    let ontology = random_ontology(rng, profile, &spec_sch_m);
    ObdaSpec {
        ontology,
        mappings,
        source_schema: schema,
    }
}

fn random_ontology(rng: &mut ChaCha8Rng, profile: &GenProfile, sch_m: &Schema) -> Ontology {
    let mut o = Ontology::empty(profile.dialect);
    let mut concepts: Vec<Name> = sch_m.unary_names().cloned().collect();
    concepts.push("X0".to_string());
    concepts.push("X1".to_string());
    let mut roles: Vec<Name> = sch_m.binary_names().cloned().collect();
    if roles.is_empty() || rng.gen_bool(0.3) {
        roles.push("x0".to_string());
    }
    let ncis = rng.gen_range(0..=profile.max_cis);
    for _ in 0..ncis {
        match profile.dialect {
            Dialect::DlLiteRHorn => {
                // basic-concept inclusions, role inclusions, rare disjointness
                let kind = rng.gen_range(0..10);
                if kind < 6 {
                    let lhs_n = rng.gen_range(1..=2);
                    let mut lhs = random_basic(rng, &concepts, &roles);
                    for _ in 1..lhs_n {
                        lhs = Concept::and(lhs, random_basic(rng, &concepts, &roles));
                    }
                    let rhs = random_basic(rng, &concepts, &roles);
                    o.concept_inclusions.push((lhs, rhs));
                } else if kind < 9 && roles.len() >= 2 {
                    let l = roles[rng.gen_range(0..roles.len())].clone();
                    let r = roles[rng.gen_range(0..roles.len())].clone();
                    let inv = rng.gen_bool(0.3);
                    o.role_inclusions
                        .push((l, if inv { Role::inv(r) } else { Role::new(r) }));
                } else if roles.len() >= 2 {
                    let a = roles[rng.gen_range(0..roles.len())].clone();
                    let b = roles[rng.gen_range(0..roles.len())].clone();
                    if a != b {
                        o.role_disjointness.push(BTreeSet::from([a, b]));
                    }
                }
            }
            Dialect::El | Dialect::Elhi => {
                let allow_inv = profile.dialect == Dialect::Elhi;
                let lhs = random_el_concept(rng, &concepts, &roles, allow_inv, 2);
                let rhs = random_el_concept(rng, &concepts, &roles, allow_inv, 2);
                o.concept_inclusions.push((lhs, rhs));
                if profile.dialect == Dialect::Elhi && roles.len() >= 2 && rng.gen_bool(0.3) {
                    let l = roles[rng.gen_range(0..roles.len())].clone();
                    let r = roles[rng.gen_range(0..roles.len())].clone();
                    let inv = rng.gen_bool(0.3);
                    o.role_inclusions
                        .push((l, if inv { Role::inv(r) } else { Role::new(r) }));
                }
            }
        }
    }
    o
}

fn random_basic(rng: &mut ChaCha8Rng, concepts: &[Name], roles: &[Name]) -> Concept {
    match rng.gen_range(0..6) {
        0 if !roles.is_empty() => Concept::exists(
            Role::new(roles[rng.gen_range(0..roles.len())].clone()),
            Concept::Top,
        ),
        1 if !roles.is_empty() => Concept::exists(
            Role::inv(roles[rng.gen_range(0..roles.len())].clone()),
            Concept::Top,
        ),
        _ => Concept::Name(concepts[rng.gen_range(0..concepts.len())].clone()),
    }
}

fn random_el_concept(
    rng: &mut ChaCha8Rng,
    concepts: &[Name],
    roles: &[Name],
    allow_inv: bool,
    depth: usize,
) -> Concept {
    let choice = rng.gen_range(0..10);
    if depth == 0 || choice < 5 {
        return Concept::Name(concepts[rng.gen_range(0..concepts.len())].clone());
    }
    if choice < 7 {
        return Concept::and(
            random_el_concept(rng, concepts, roles, allow_inv, depth - 1),
            random_el_concept(rng, concepts, roles, allow_inv, depth - 1),
        );
    }
    if roles.is_empty() {
        return Concept::Top;
    }
    let name = roles[rng.gen_range(0..roles.len())].clone();
    let role = if allow_inv && rng.gen_bool(0.3) {
        Role::inv(name)
    } else {
        Role::new(name)
    };
    Concept::exists(
        role,
        random_el_concept(rng, concepts, roles, allow_inv, depth - 1),
    )
}

/// A random source query over the schema. With `rooted` set, every
/// variable is connected to an answer variable through the atom graph.
pub fn random_source_query(rng: &mut ChaCha8Rng, profile: &GenProfile, schema: &Schema) -> Ucq {
    let relations: Vec<(Name, usize)> = schema.iter().map(|(n, a)| (n.clone(), a)).collect();
    // rooted queries need at least one answer variable to reach from
    let min_arity = usize::from(profile.rooted);
    let arity = rng.gen_range(min_arity..=profile.max_answer_vars.max(min_arity));
    let answer: Vec<Name> = (0..arity).map(|i| format!("x{}", i)).collect();
    let natoms = rng.gen_range(1..=profile.max_query_atoms);
    let mut vars: Vec<Name> = answer.clone();
    if vars.is_empty() {
        vars.push("y0".to_string());
    }
    let mut atoms: Vec<Atom> = Vec::new();
    let mut fresh = 0usize;
    for _ in 0..natoms {
        let (rel, k) = relations[rng.gen_range(0..relations.len())].clone();
        let mut args = Vec::with_capacity(k);
        for j in 0..k {
            // for rooted queries keep atoms attached to existing variables
            let attach = profile.rooted && j == 0 && !vars.is_empty();
            if attach || rng.gen_bool(0.7) {
                args.push(vars[rng.gen_range(0..vars.len())].clone());
            } else {
                let v = format!("y{}", fresh + 1);
                fresh += 1;
                vars.push(v.clone());
                args.push(v);
            }
        }
        atoms.push(Atom::rel(rel, args));
    }
    if rng.gen_bool(profile.equality_prob) && vars.len() >= 2 {
        let a = vars[rng.gen_range(0..vars.len())].clone();
        let b = vars[rng.gen_range(0..vars.len())].clone();
        atoms.push(Atom::eq(a, b));
    }
    let mut cq = Cq::new(answer, atoms);
    // equality atoms do not connect the query hypergraph, so rooting is
    // repaired by substituting stray variables into the reachable part
    while profile.rooted && !crate::model::is_rooted(&cq) {
        let reachable = {
            let mut r: BTreeSet<Name> = cq.answer_vars.iter().cloned().collect();
            loop {
                let mut grew = false;
                for (_, args) in cq.relational_atoms() {
                    if args.iter().any(|v| r.contains(v)) {
                        for v in args {
                            if r.insert(v.clone()) {
                                grew = true;
                            }
                        }
                    }
                }
                if !grew {
                    break;
                }
            }
            r
        };
        let stray = match cq.all_vars().into_iter().find(|v| !reachable.contains(v)) {
            Some(s) => s,
            None => break,
        };
        let target = cq.answer_vars[0].clone();
        let atoms: Vec<Atom> = cq
            .atoms
            .iter()
            .map(|a| match a {
                Atom::Rel { rel, args } => Atom::rel(
                    rel.clone(),
                    args.iter()
                        .map(|v| if *v == stray { target.clone() } else { v.clone() })
                        .collect(),
                ),
                Atom::Eq { left, right } => Atom::eq(
                    if *left == stray { target.clone() } else { left.clone() },
                    if *right == stray { target.clone() } else { right.clone() },
                ),
            })
            .collect();
        cq = Cq::new(cq.answer_vars, atoms);
    }
    Ucq::singleton(cq)
}

/// A random target query over sch(M) (used by the containment property
/// suites).
pub fn random_target_query(rng: &mut ChaCha8Rng, schema: &Schema, max_atoms: usize, arity: usize) -> Ucq {
    let relations: Vec<(Name, usize)> = schema.iter().map(|(n, a)| (n.clone(), a)).collect();
    let ndis = rng.gen_range(1..=2);
    let answer: Vec<Name> = (0..arity).map(|i| format!("x{}", i)).collect();
    let mut disjuncts = Vec::new();
    for _ in 0..ndis {
        let natoms = rng.gen_range(1..=max_atoms);
        let mut vars = answer.clone();
        if vars.is_empty() {
            vars.push("y0".to_string());
        }
        let mut atoms = Vec::new();
        let mut fresh = 0usize;
        for _ in 0..natoms {
            if relations.is_empty() {
                break;
            }
            let (rel, k) = relations[rng.gen_range(0..relations.len())].clone();
            let args: Vec<Name> = (0..k)
                .map(|_| {
                    if rng.gen_bool(0.75) {
                        vars[rng.gen_range(0..vars.len())].clone()
                    } else {
                        fresh += 1;
                        let v = format!("y{}", fresh);
                        vars.push(v.clone());
                        v
                    }
                })
                .collect();
            atoms.push(Atom::rel(rel, args));
        }
        disjuncts.push(Cq::new(answer.clone(), atoms));
    }
    Ucq::new(disjuncts)
}

/// A random ELHI ontology already in normal form, over `P0..`, `r0..`.
pub fn random_normal_form(
    rng: &mut ChaCha8Rng,
    concepts: usize,
    roles: usize,
    axioms: usize,
    allow_inverse: bool,
) -> (NormalFormOntology, Schema) {
    let cn: Vec<Name> = (0..concepts).map(|i| format!("P{}", i)).collect();
    let rn: Vec<Name> = (0..roles).map(|i| format!("r{}", i)).collect();
    let mut nf = NormalFormOntology::empty();
    for _ in 0..axioms {
        let axiom = match rng.gen_range(0..10) {
            0 => NfAxiom::TopSub(cn[rng.gen_range(0..cn.len())].clone()),
            1..=3 => {
                let n = rng.gen_range(1..=2);
                let lhs: Vec<Name> = (0..n)
                    .map(|_| cn[rng.gen_range(0..cn.len())].clone())
                    .collect();
                NfAxiom::ConjSub(lhs, cn[rng.gen_range(0..cn.len())].clone())
            }
            4..=6 => {
                let mut r = Role { name: rn[rng.gen_range(0..rn.len())].clone(), inverse: false };
                if allow_inverse && rng.gen_bool(0.3) {
                    r.inverse = true;
                }
                NfAxiom::SubExists(
                    cn[rng.gen_range(0..cn.len())].clone(),
                    r,
                    cn[rng.gen_range(0..cn.len())].clone(),
                )
            }
            7..=8 => {
                let mut r = Role { name: rn[rng.gen_range(0..rn.len())].clone(), inverse: false };
                if allow_inverse && rng.gen_bool(0.3) {
                    r.inverse = true;
                }
                NfAxiom::ExistsSub(
                    r,
                    cn[rng.gen_range(0..cn.len())].clone(),
                    cn[rng.gen_range(0..cn.len())].clone(),
                )
            }
            _ => {
                if rn.len() >= 2 && allow_inverse {
                    let l = rn[rng.gen_range(0..rn.len())].clone();
                    let r = rn[rng.gen_range(0..rn.len())].clone();
                    let inv = rng.gen_bool(0.3);
                    nf.role_inclusions
                        .push((l, if inv { Role::inv(r) } else { Role::new(r) }));
                }
                continue;
            }
        };
        nf.axioms.push(axiom);
    }
    let mut schema = Schema::new();
    for c in &cn {
        schema.add(c.clone(), 1);
    }
    for r in &rn {
        schema.add(r.clone(), 2);
    }
    (nf, schema)
}

/// A random ABox over a DL schema.
pub fn random_abox(rng: &mut ChaCha8Rng, schema: &Schema, constants: usize, facts: usize) -> Database {
    let pool: Vec<Name> = (0..constants.max(1)).map(|i| format!("a{}", i)).collect();
    let relations: Vec<(Name, usize)> = schema.iter().map(|(n, a)| (n.clone(), a)).collect();
    let mut out = BTreeSet::new();
    for _ in 0..facts {
        let (rel, k) = relations[rng.gen_range(0..relations.len())].clone();
        let args: Vec<Name> = (0..k)
            .map(|_| pool[rng.gen_range(0..pool.len())].clone())
            .collect();
        out.insert(Fact::new(rel, args));
    }
    Database { facts: out }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{is_rooted_ucq, validate_spec};
    use crate::textio::render_spec;

    #[test]
    fn generated_specs_validate() {
        let profile = GenProfile::default();
        for seed in 0..100 {
            let (spec, q_s) = random_instance(seed, &profile);
            assert!(
                validate_spec(&spec).is_empty(),
                "seed {} produced invalid spec",
                seed
            );
            assert!(crate::model::validate_query(&q_s, &spec.source_schema).is_empty());
        }
    }

    #[test]
    fn seed_stability() {
        let profile = GenProfile::default();
        let (s1, q1) = random_instance(42, &profile);
        let (s2, q2) = random_instance(42, &profile);
        assert_eq!(render_spec(&s1), render_spec(&s2));
        assert_eq!(q1, q2);
    }

    #[test]
    fn zero_cis_means_empty_ontology() {
        let profile = GenProfile {
            max_cis: 0,
            ..GenProfile::default()
        };
        for seed in 0..20 {
            let (spec, _) = random_instance(seed, &profile);
            assert!(spec.ontology.is_empty());
        }
    }

    #[test]
    fn rooted_profile_produces_rooted_queries() {
        let profile = GenProfile {
            rooted: true,
            ..GenProfile::default()
        };
        for seed in 0..200 {
            let (_, q_s) = random_instance(seed, &profile);
            assert!(is_rooted_ucq(&q_s), "seed {} produced unrooted query", seed);
        }
    }
}
