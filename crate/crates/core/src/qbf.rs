//! The ∀∃-3SAT reduction to CQ-to-CQ expressibility over the empty
//! ontology, plus a brute-force QBF evaluator that serves as the
//! independent oracle for it.
//!
//! For ∀x0..xn ∃y0..ym ψ in 3CNF, the instance has one relation
//! C_{u1u2u3} per triple over U = {x_i, ¬x_i, n, p} (arity = number of
//! n/p positions) plus a binary Z. The source query encodes the clauses
//! and Z(y0,y1); every universal variable contributes three mappings with
//! head r_i(z0,z1): one copying the query and two template bodies for the
//! two truth values.

use std::collections::BTreeSet;

use crate::model::{Atom, Cq, Dialect, GavMapping, Name, ObdaSpec, Ontology, Schema, Ucq};

/// A literal: variable index within its block, with polarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Literal {
    /// universally quantified variable x_i
    Universal { index: usize, positive: bool },
    /// existentially quantified variable y_j
    Existential { index: usize, positive: bool },
}

/// ∀x0..xn ∃y0..ym ψ with ψ a 3CNF over the two blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QbfFormula {
    pub universal_count: usize,
    pub existential_count: usize,
    pub clauses: Vec<[Literal; 3]>,
}

/// Errors for malformed formulas.
#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum QbfError {
    #[error("the reduction requires at least one universal variable")]
    NoUniversal,
    #[error("the reduction requires at least two existential variables")]
    FewExistentials,
    #[error("literal index out of range")]
    BadIndex,
}

impl QbfFormula {
    pub fn validate(&self) -> Result<(), QbfError> {
        if self.universal_count == 0 {
            return Err(QbfError::NoUniversal);
        }
        if self.existential_count < 2 {
            return Err(QbfError::FewExistentials);
        }
        for clause in &self.clauses {
            for lit in clause {
                let ok = match lit {
                    Literal::Universal { index, .. } => *index < self.universal_count,
                    Literal::Existential { index, .. } => *index < self.existential_count,
                };
                if !ok {
                    return Err(QbfError::BadIndex);
                }
            }
        }
        Ok(())
    }
}

/// Truth of ∀x̄ ∃ȳ ψ by exhaustive assignment enumeration.
pub fn qbf_brute_eval(phi: &QbfFormula) -> bool {
    let n = phi.universal_count;
    let m = phi.existential_count;
    for xbits in 0u64..(1u64 << n) {
        let mut satisfied = false;
        for ybits in 0u64..(1u64 << m) {
            let value = |lit: &Literal| -> bool {
                match lit {
                    Literal::Universal { index, positive } => {
                        (xbits >> index) & 1 == u64::from(*positive)
                    }
                    Literal::Existential { index, positive } => {
                        (ybits >> index) & 1 == u64::from(*positive)
                    }
                }
            };
            if phi
                .clauses
                .iter()
                .all(|clause| clause.iter().any(&value))
            {
                satisfied = true;
                break;
            }
        }
        if !satisfied {
            return false;
        }
    }
    true
}

/// One symbol of the alphabet U = {x_i, ¬x_i, n, p}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum U {
    X(usize, bool), // x_i / ¬x_i
    N,
    P,
}

impl U {
    fn token(self) -> String {
        match self {
            U::X(i, true) => format!("x{}", i),
            U::X(i, false) => format!("nx{}", i),
            U::N => "n".to_string(),
            U::P => "p".to_string(),
        }
    }
}

fn relation_name(triple: &[U; 3]) -> Name {
    format!(
        "C_{}_{}_{}",
        triple[0].token(),
        triple[1].token(),
        triple[2].token()
    )
}

fn relation_arity(triple: &[U; 3]) -> usize {
    triple
        .iter()
        .filter(|u| matches!(u, U::N | U::P))
        .count()
}

fn all_u(universals: usize) -> Vec<U> {
    let mut out = Vec::with_capacity(2 * universals + 2);
    for i in 0..universals {
        out.push(U::X(i, true));
        out.push(U::X(i, false));
    }
    out.push(U::N);
    out.push(U::P);
    out
}

/// The template body τ for universal variable `i` and truth value `value`:
/// atoms over {z0, z1} plus all four Z-atoms.
fn template_body(phi: &QbfFormula, i: usize, value: bool) -> BTreeSet<Atom> {
    let z0 = "z0".to_string();
    let z1 = "z1".to_string();
    let mut atoms: BTreeSet<Atom> = BTreeSet::new();
    let us = all_u(phi.universal_count);
    for u1 in &us {
        for u2 in &us {
            for u3 in &us {
                let triple = [*u1, *u2, *u3];
                let arity = relation_arity(&triple);
                let rel = relation_name(&triple);
                // every sequence over {z0,z1} of length = arity
                for bits in 0u32..(1u32 << arity) {
                    let seq: Vec<Name> = (0..arity)
                        .map(|k| {
                            if (bits >> k) & 1 == 1 {
                                z1.clone()
                            } else {
                                z0.clone()
                            }
                        })
                        .collect();
                    // (a) the literal made true by assigning `value`:
                    // ¬x_i for the 0-template, x_i for the 1-template
                    let wanted = U::X(i, value);
                    let cond_a = triple.contains(&wanted);
                    // (b)/(c): the k-th n/p position agrees with the
                    // sequence element at k
                    let mut cond_bc = false;
                    let mut k = 0usize;
                    for u in &triple {
                        match u {
                            U::N => {
                                if seq[k] == z0 {
                                    cond_bc = true;
                                }
                                k += 1;
                            }
                            U::P => {
                                if seq[k] == z1 {
                                    cond_bc = true;
                                }
                                k += 1;
                            }
                            U::X(_, _) => {}
                        }
                    }
                    if cond_a || cond_bc {
                        atoms.insert(Atom::rel(rel.clone(), seq));
                    }
                }
            }
        }
    }
    for (a, b) in [(&z0, &z0), (&z0, &z1), (&z1, &z0), (&z1, &z1)] {
        atoms.insert(Atom::rel("Z", vec![a.clone(), b.clone()]));
    }
    atoms
}

/// The source query: one clause atom per clause over the existential
/// variables of the clause (in order of appearance), plus Z(y0, y1).
pub fn source_query(phi: &QbfFormula) -> Cq {
    let mut atoms: Vec<Atom> = Vec::new();
    for clause in &phi.clauses {
        let mut triple = [U::N, U::N, U::N];
        let mut args: Vec<Name> = Vec::new();
        for (k, lit) in clause.iter().enumerate() {
            match lit {
                Literal::Universal { index, positive } => {
                    triple[k] = U::X(*index, *positive);
                }
                Literal::Existential { index, positive } => {
                    triple[k] = if *positive { U::P } else { U::N };
                    args.push(format!("y{}", index));
                }
            }
        }
        atoms.push(Atom::rel(relation_name(&triple), args));
    }
    atoms.push(Atom::rel("Z", vec!["y0".to_string(), "y1".to_string()]));
    Cq::new(Vec::new(), atoms)
}

/// Builds the appendix reduction: an OBDA specification with the empty
/// ontology and a Boolean source CQ such that φ is true iff the CQ is
/// CQ-expressible in the specification.
pub fn qbf_to_instance(phi: &QbfFormula) -> Result<(ObdaSpec, Ucq), QbfError> {
    phi.validate()?;
    let mut schema = Schema::new();
    let us = all_u(phi.universal_count);
    for u1 in &us {
        for u2 in &us {
            for u3 in &us {
                let triple = [*u1, *u2, *u3];
                schema.add(relation_name(&triple), relation_arity(&triple));
            }
        }
    }
    schema.add("Z", 2);

    let q_s = source_query(phi);
    let mut mappings = Vec::new();
    for i in 0..phi.universal_count {
        // q_s with y0, y1 renamed to z0, z1 (quantifiers dropped)
        let rename = |v: &Name| -> Name {
            match v.as_str() {
                "y0" => "z0".to_string(),
                "y1" => "z1".to_string(),
                other => other.to_string(),
            }
        };
        let copied: Vec<Atom> = q_s
            .atoms
            .iter()
            .map(|a| match a {
                Atom::Rel { rel, args } => {
                    Atom::rel(rel.clone(), args.iter().map(rename).collect())
                }
                Atom::Eq { left, right } => Atom::eq(rename(left), rename(right)),
            })
            .collect();
        let head = format!("r{}", i);
        mappings.push(GavMapping::new(
            copied,
            head.clone(),
            vec!["z0".to_string(), "z1".to_string()],
        ));
        for value in [false, true] {
            mappings.push(GavMapping::new(
                template_body(phi, i, value),
                head.clone(),
                vec!["z0".to_string(), "z1".to_string()],
            ));
        }
    }
    let spec = ObdaSpec {
        ontology: Ontology::empty(Dialect::El),
        mappings,
        source_schema: schema,
    };
    Ok((spec, Ucq::singleton(q_s)))
}

/// Parses a DIMACS-like prefix+clauses format:
///
/// ```text
/// a 1 2 0      # universal block
/// e 3 4 5 0    # existential block
/// 1 -3 4 0     # clauses: positive/negative variable numbers
/// ```
pub fn parse_qdimacs(text: &str) -> Result<QbfFormula, String> {
    let mut universals: Vec<i64> = Vec::new();
    let mut existentials: Vec<i64> = Vec::new();
    let mut clauses: Vec<[Literal; 3]> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('c') || line.starts_with('p') || line.starts_with('#')
        {
            continue;
        }
        let mut parts: Vec<&str> = line.split_whitespace().collect();
        let kind = if parts[0] == "a" || parts[0] == "e" {
            let k = parts.remove(0);
            Some(k)
        } else {
            None
        };
        let nums: Result<Vec<i64>, _> = parts.iter().map(|p| p.parse::<i64>()).collect();
        let mut nums = nums.map_err(|e| format!("line {}: {}", lineno + 1, e))?;
        if nums.last() == Some(&0) {
            nums.pop();
        }
        match kind {
            Some("a") => universals.extend(nums),
            Some("e") => existentials.extend(nums),
            _ => {
                if nums.len() != 3 {
                    return Err(format!(
                        "line {}: clauses must have exactly 3 literals",
                        lineno + 1
                    ));
                }
                let lit = |n: i64| -> Result<Literal, String> {
                    let var = n.unsigned_abs() as i64;
                    if let Some(i) = universals.iter().position(|&u| u == var) {
                        Ok(Literal::Universal {
                            index: i,
                            positive: n > 0,
                        })
                    } else if let Some(j) = existentials.iter().position(|&e| e == var) {
                        Ok(Literal::Existential {
                            index: j,
                            positive: n > 0,
                        })
                    } else {
                        Err(format!("line {}: undeclared variable {}", lineno + 1, var))
                    }
                };
                clauses.push([lit(nums[0])?, lit(nums[1])?, lit(nums[2])?]);
            }
        }
    }
    Ok(QbfFormula {
        universal_count: universals.len(),
        existential_count: existentials.len(),
        clauses,
    })
}
