//! Finite UCQ rewritings and rewriting-witness enumerators: the canonical
//! DL-Lite rewriting of bounded size, pseudo-tree-shaped ABox enumeration
//! with frontier closure, and the canonical-growth database enumeration
//! shared with the brute-force oracle.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::model::{view_as_cq, Abox, Cq, Database, Dialect, Fact, Name, Schema, Ucq};
use crate::reasoner::{Omq, OmqEngine, ReasonerError};

/// Budgets for rewriting enumeration. `exhaustive` asserts that the budget
/// reaches the relevant completeness bound; a verdict computed under a
/// non-exhaustive budget that finds no counterexample is Unknown, not Yes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewritingBudget {
    /// Maximum number of facts per enumerated ABox.
    pub max_abox_size: usize,
    /// Maximum number of core constants.
    pub max_core: usize,
    pub max_outdegree: usize,
    pub max_depth: usize,
    pub exhaustive: bool,
}

impl Default for RewritingBudget {
    fn default() -> RewritingBudget {
        RewritingBudget {
            max_abox_size: 4,
            max_core: 3,
            max_outdegree: 2,
            max_depth: 2,
            exhaustive: false,
        }
    }
}

// ---------------------------------------------------------------------------
// canonical forms

/// Renames the constants of a database to `c0..cn` so that isomorphic
/// databases map to equal values. Exact up to 9 constants (class-respecting
/// permutation search); beyond that the refinement order is used as-is,
/// which is deterministic but may keep distinct representatives for
/// isomorphic inputs.
pub fn canonical_database(db: &Database) -> Database {
    let constants: Vec<Name> = db.adom().into_iter().collect();
    if constants.is_empty() {
        return db.clone();
    }
    // iterated refinement: color constants by their occurrence profile
    type Profile = Vec<(String, usize, Vec<u64>)>;
    let mut colors: BTreeMap<&Name, u64> = constants.iter().map(|c| (c, 0u64)).collect();
    for _ in 0..constants.len() {
        let mut profiles: BTreeMap<&Name, Profile> = BTreeMap::new();
        for f in &db.facts {
            for (i, a) in f.args.iter().enumerate() {
                profiles.entry(a).or_default().push((
                    f.rel.clone(),
                    i,
                    f.args.iter().map(|b| colors[b]).collect(),
                ));
            }
        }
        let mut keys: Vec<(Profile, &Name)> = constants
            .iter()
            .map(|c| {
                let mut p = profiles.remove(c).unwrap_or_default();
                p.sort();
                (p, c)
            })
            .collect();
        keys.sort();
        let mut next: BTreeMap<&Name, u64> = BTreeMap::new();
        let mut color = 0u64;
        for (i, (p, c)) in keys.iter().enumerate() {
            if i > 0 && *p != keys[i - 1].0 {
                color += 1;
            }
            next.insert(c, color);
        }
        if next == colors {
            break;
        }
        colors = next;
    }
    // group constants by final color
    let mut classes: BTreeMap<u64, Vec<&Name>> = BTreeMap::new();
    for c in &constants {
        classes.entry(colors[c]).or_default().push(c);
    }
    let class_list: Vec<Vec<&Name>> = classes.into_values().collect();
    let search_space: usize = class_list
        .iter()
        .map(|cl| (1..=cl.len()).product::<usize>())
        .product();
    let rename = |order: &[&Name]| -> Database {
        let map: BTreeMap<&Name, Name> = order
            .iter()
            .enumerate()
            .map(|(i, c)| (*c, format!("c{}", i)))
            .collect();
        Database::new(
            db.facts
                .iter()
                .map(|f| Fact::new(f.rel.clone(), f.args.iter().map(|a| map[a].clone()).collect())),
        )
    };
    if search_space > 20_000 || constants.len() > 9 {
        let order: Vec<&Name> = class_list.into_iter().flatten().collect();
        return rename(&order);
    }
    // minimize over class-respecting orders
    let mut best: Option<Database> = None;
    let perms: Vec<Vec<Vec<&Name>>> = class_list.iter().map(|cl| permutations(cl)).collect();
    let mut idx = vec![0usize; perms.len()];
    loop {
        let order: Vec<&Name> = idx
            .iter()
            .enumerate()
            .flat_map(|(i, &j)| perms[i][j].clone())
            .collect();
        let candidate = rename(&order);
        if best.as_ref().map(|b| candidate < *b).unwrap_or(true) {
            best = Some(candidate);
        }
        let mut pos = perms.len();
        loop {
            if pos == 0 {
                return best.unwrap();
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < perms[pos].len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

fn permutations<'a>(items: &[&'a Name]) -> Vec<Vec<&'a Name>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (i, x) in items.iter().enumerate() {
        let mut rest: Vec<&Name> = items.to_vec();
        rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, *x);
            out.push(p);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// canonical-growth database enumeration

/// Enumerates databases over the schema with at most `max_constants`
/// constants (pool `c1..`) and at most `max_facts` facts, introducing
/// constants in first-use order. The callback returns false to stop.
/// Returns false iff the enumeration was stopped.
pub fn for_each_database(
    schema: &Schema,
    max_constants: usize,
    max_facts: usize,
    dedupe: bool,
    f: &mut dyn FnMut(&Database) -> bool,
) -> bool {
    let pool: Vec<Name> = (1..=max_constants).map(|i| format!("c{}", i)).collect();
    let mut all_facts: Vec<Fact> = Vec::new();
    for (rel, arity) in schema.iter() {
        if arity == 0 {
            all_facts.push(Fact::new(rel.clone(), Vec::new()));
            continue;
        }
        if pool.is_empty() {
            continue;
        }
        let mut tuple = vec![0usize; arity];
        loop {
            all_facts.push(Fact::new(
                rel.clone(),
                tuple.iter().map(|&i| pool[i].clone()).collect(),
            ));
            let mut pos = arity;
            let mut done = true;
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                tuple[pos] += 1;
                if tuple[pos] < pool.len() {
                    done = false;
                    break;
                }
                tuple[pos] = 0;
            }
            if done {
                break;
            }
        }
    }
    all_facts.sort();
    all_facts.dedup();
    let mut seen: HashSet<Database> = HashSet::new();
    let mut current: Vec<Fact> = Vec::new();

    #[allow(clippy::too_many_arguments)]
    fn rec(
        all: &[Fact],
        start: usize,
        pool: &[Name],
        used: usize,
        max_facts: usize,
        dedupe: bool,
        current: &mut Vec<Fact>,
        seen: &mut HashSet<Database>,
        f: &mut dyn FnMut(&Database) -> bool,
    ) -> bool {
        let db = Database::new(current.iter().cloned());
        let emit = if dedupe {
            seen.insert(canonical_database(&db))
        } else {
            true
        };
        if emit && !f(&db) {
            return false;
        }
        if current.len() >= max_facts {
            return true;
        }
        for i in start..all.len() {
            // first-use order: new constants only in pool order
            let mut frontier = used;
            let mut ok = true;
            for a in &all[i].args {
                match pool.iter().position(|p| p == a) {
                    Some(j) if j < frontier => {}
                    Some(j) if j == frontier => frontier += 1,
                    _ => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                continue;
            }
            current.push(all[i].clone());
            let go = rec(
                all,
                i + 1,
                pool,
                frontier,
                max_facts,
                dedupe,
                current,
                seen,
                f,
            );
            current.pop();
            if !go {
                return false;
            }
        }
        true
    }

    rec(
        &all_facts,
        0,
        &pool,
        0,
        max_facts,
        dedupe,
        &mut current,
        &mut seen,
        f,
    )
}

// ---------------------------------------------------------------------------
// DL-Lite canonical rewriting

/// The canonical UCQ-rewriting of bounded size: all pairs (A, ā) with
/// |A| ≤ `size_bound` facts and ā a certain answer, viewed as CQs. Returns
/// None when no pair qualifies (the empty rewriting). If the OMQ has a
/// UCQ-rewriting whose CQs fit the bound, the result is a rewriting.
pub fn canonical_rewriting_dllite(
    omq: &Omq,
    size_bound: usize,
) -> Result<Option<Ucq>, ReasonerError> {
    if omq.ontology.dialect != Dialect::DlLiteRHorn && !omq.ontology.is_empty() {
        return Err(ReasonerError::DlLiteNormalForm);
    }
    let engine = OmqEngine::new(omq);
    let arity = omq.query.arity();
    let max_arity = omq.schema.iter().map(|(_, a)| a).max().unwrap_or(1);
    let mut disjuncts: Vec<Cq> = Vec::new();
    for_each_database(
        &omq.schema,
        size_bound * max_arity.max(1),
        size_bound,
        true,
        &mut |abox| {
            let certain = engine.certain(abox).tuples(abox, arity);
            for tuple in certain {
                let cq = view_as_cq(abox, &tuple).expect("tuple over adom");
                if !disjuncts.contains(&cq) {
                    disjuncts.push(cq);
                }
            }
            true
        },
    );
    if disjuncts.is_empty() {
        Ok(None)
    } else {
        Ok(Some(Ucq::new(disjuncts)))
    }
}

// ---------------------------------------------------------------------------
// pseudo-tree ABoxes

/// A node of a tree-shaped ABox: unary labels plus children reached by a
/// single role fact each (outward `r(parent, child)` or inward
/// `r(child, parent)`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct TreeNode {
    pub labels: BTreeSet<Name>,
    pub children: Vec<(Name, bool, TreeNode)>,
}

impl TreeNode {
    pub fn leaf(labels: BTreeSet<Name>) -> TreeNode {
        TreeNode {
            labels,
            children: Vec::new(),
        }
    }

    pub fn fact_count(&self) -> usize {
        self.labels.len()
            + self
                .children
                .iter()
                .map(|(_, _, c)| 1 + c.fact_count())
                .sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        self.children
            .iter()
            .map(|(_, _, c)| 1 + c.depth())
            .max()
            .unwrap_or(0)
    }

    pub fn outdegree(&self) -> usize {
        let mine = self.children.len();
        self.children
            .iter()
            .map(|(_, _, c)| c.outdegree())
            .max()
            .unwrap_or(0)
            .max(mine)
    }
}

/// A pseudo tree-shaped ABox: a core plus one tree per core constant,
/// with mutually disjoint tree domains.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PseudoTreeAbox {
    pub core: Database,
    pub trees: BTreeMap<Name, TreeNode>,
}

impl PseudoTreeAbox {
    pub fn core_only(core: Database) -> PseudoTreeAbox {
        PseudoTreeAbox {
            core,
            trees: BTreeMap::new(),
        }
    }

    pub fn depth(&self) -> usize {
        self.trees.values().map(TreeNode::depth).max().unwrap_or(0)
    }

    pub fn outdegree(&self) -> usize {
        self.trees
            .values()
            .map(TreeNode::outdegree)
            .max()
            .unwrap_or(0)
    }

    pub fn fact_count(&self) -> usize {
        self.core.len()
            + self
                .trees
                .values()
                .map(TreeNode::fact_count)
                .sum::<usize>()
    }

    /// Materializes core ∪ trees, naming tree nodes `t0, t1, ...` in
    /// depth-first order, and records each constant's distance from the
    /// core.
    pub fn materialize(&self) -> (Abox, BTreeMap<Name, usize>) {
        let mut facts: BTreeSet<Fact> = self.core.facts.clone();
        let mut distance: BTreeMap<Name, usize> = self
            .core
            .adom()
            .into_iter()
            .map(|c| (c, 0usize))
            .collect();
        for root in self.trees.keys() {
            distance.entry(root.clone()).or_insert(0);
        }
        let mut counter = 0usize;
        fn rec(
            node: &TreeNode,
            name: &Name,
            depth: usize,
            facts: &mut BTreeSet<Fact>,
            distance: &mut BTreeMap<Name, usize>,
            counter: &mut usize,
        ) {
            distance.entry(name.clone()).or_insert(depth);
            for l in &node.labels {
                facts.insert(Fact::new(l.clone(), vec![name.clone()]));
            }
            for (role, outward, child) in &node.children {
                let child_name = format!("t{}", counter);
                *counter += 1;
                let (x, y) = if *outward {
                    (name.clone(), child_name.clone())
                } else {
                    (child_name.clone(), name.clone())
                };
                facts.insert(Fact::new(role.clone(), vec![x, y]));
                rec(child, &child_name, depth + 1, facts, distance, counter);
            }
        }
        for (root, tree) in &self.trees {
            rec(tree, root, 0, &mut facts, &mut distance, &mut counter);
        }
        (Abox { facts }, distance)
    }

    pub fn abox(&self) -> Abox {
        self.materialize().0
    }

    /// All tuples of the given arity over the core constants.
    pub fn core_tuples(&self, arity: usize) -> BTreeSet<Vec<Name>> {
        crate::reasoner::all_tuples(&self.core.adom(), arity)
    }
}

/// Removes all facts containing a constant of distance > `frontier_depth`
/// from the core and marks every constant at exactly that distance with
/// every concept name and a self-loop for every role name of the schema.
pub fn frontier_closure(a: &PseudoTreeAbox, frontier_depth: usize, schema: &Schema) -> Abox {
    let (abox, distance) = a.materialize();
    let mut facts: BTreeSet<Fact> = abox
        .facts
        .into_iter()
        .filter(|f| f.args.iter().all(|c| distance[c] <= frontier_depth))
        .collect();
    for (c, &d) in &distance {
        if d == frontier_depth {
            for n in schema.unary_names() {
                facts.insert(Fact::new(n.clone(), vec![c.clone()]));
            }
            for n in schema.binary_names() {
                facts.insert(Fact::new(n.clone(), vec![c.clone(), c.clone()]));
            }
        }
    }
    Abox { facts }
}

/// Enumerates pseudo-tree ABoxes over a DL schema within the budget, up to
/// isomorphism of the materialized ABox. The callback returns false to
/// stop early; the function returns false iff it was stopped.
pub fn for_each_pseudo_tree(
    schema: &Schema,
    budget: &RewritingBudget,
    f: &mut dyn FnMut(&PseudoTreeAbox) -> bool,
) -> bool {
    if budget.max_abox_size == 0 {
        return true;
    }
    let unary: Vec<Name> = schema.unary_names().cloned().collect();
    let binary: Vec<Name> = schema.binary_names().cloned().collect();
    let label_sets = subsets(&unary);
    let mut tree_memo: BTreeMap<(usize, usize), Vec<TreeNode>> = BTreeMap::new();

    fn gen_trees(
        depth: usize,
        max_facts: usize,
        max_outdegree: usize,
        label_sets: &[BTreeSet<Name>],
        binary: &[Name],
        memo: &mut BTreeMap<(usize, usize), Vec<TreeNode>>,
    ) -> Vec<TreeNode> {
        if let Some(v) = memo.get(&(depth, max_facts)) {
            return v.clone();
        }
        let mut out: Vec<TreeNode> = Vec::new();
        for labels in label_sets {
            if labels.len() > max_facts {
                continue;
            }
            let mut shapes = vec![TreeNode::leaf(labels.clone())];
            if depth > 0 {
                for _ in 0..max_outdegree {
                    let mut next = shapes.clone();
                    for node in &shapes {
                        let used = node.fact_count();
                        if used + 1 > max_facts {
                            continue;
                        }
                        for role in binary {
                            for outward in [true, false] {
                                let remaining = max_facts - used - 1;
                                for sub in gen_trees(
                                    depth - 1,
                                    remaining,
                                    max_outdegree,
                                    label_sets,
                                    binary,
                                    memo,
                                ) {
                                    let child = (role.clone(), outward, sub);
                                    if let Some(last) = node.children.last() {
                                        // non-decreasing child sequences
                                        // avoid ordered duplicates
                                        if child < *last {
                                            continue;
                                        }
                                    }
                                    let mut n = node.clone();
                                    n.children.push(child);
                                    next.push(n);
                                }
                            }
                        }
                    }
                    next.sort();
                    next.dedup();
                    if next.len() == shapes.len() {
                        shapes = next;
                        break;
                    }
                    shapes = next;
                }
            }
            out.extend(shapes);
        }
        out.sort();
        out.dedup();
        memo.insert((depth, max_facts), out.clone());
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn forests(
        roots: &[Name],
        remaining: usize,
        depth: usize,
        max_outdegree: usize,
        label_sets: &[BTreeSet<Name>],
        binary: &[Name],
        memo: &mut BTreeMap<(usize, usize), Vec<TreeNode>>,
        current: &mut BTreeMap<Name, TreeNode>,
        out: &mut dyn FnMut(&BTreeMap<Name, TreeNode>) -> bool,
    ) -> bool {
        match roots.split_first() {
            None => out(current),
            Some((root, rest)) => {
                for tree in gen_trees(depth, remaining, max_outdegree, label_sets, binary, memo) {
                    let used = tree.fact_count();
                    if used > remaining {
                        continue;
                    }
                    let trivial = tree.labels.is_empty() && tree.children.is_empty();
                    if !trivial {
                        current.insert(root.clone(), tree.clone());
                    }
                    let go = forests(
                        rest,
                        remaining - used,
                        depth,
                        max_outdegree,
                        label_sets,
                        binary,
                        memo,
                        current,
                        out,
                    );
                    current.remove(root);
                    if !go {
                        return false;
                    }
                }
                true
            }
        }
    }

    let mut stop = false;
    let mut seen: HashSet<Database> = HashSet::new();
    // core constants form a fixed pool; a pool constant may root a tree
    // without occurring in any core fact
    let pool: Vec<Name> = (1..=budget.max_core).map(|i| format!("c{}", i)).collect();
    for_each_database(
        schema,
        budget.max_core,
        budget.max_abox_size,
        true,
        &mut |core| {
            let roots: Vec<Name> = pool.clone();
            let remaining = budget.max_abox_size - core.len();
            let mut current = BTreeMap::new();
            let go = forests(
                &roots,
                remaining,
                budget.max_depth,
                budget.max_outdegree,
                &label_sets,
                &binary,
                &mut tree_memo,
                &mut current,
                &mut |forest| {
                    let pta = PseudoTreeAbox {
                        core: core.clone(),
                        trees: forest.clone(),
                    };
                    if seen.insert(canonical_database(&pta.abox())) && !f(&pta) {
                        stop = true;
                        return false;
                    }
                    true
                },
            );
            go && !stop
        },
    );
    !stop
}

fn subsets(items: &[Name]) -> Vec<BTreeSet<Name>> {
    let mut out = vec![BTreeSet::new()];
    for item in items {
        let mut grown: Vec<BTreeSet<Name>> = out
            .iter()
            .map(|s| {
                let mut t = s.clone();
                t.insert(item.clone());
                t
            })
            .collect();
        out.append(&mut grown);
    }
    out.sort_by_key(|s| (s.len(), s.iter().cloned().collect::<Vec<_>>()));
    out
}
