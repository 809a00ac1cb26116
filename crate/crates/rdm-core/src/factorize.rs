//! Minimal factorization of the provenance DNF.
//!
//! A query plan is a rooted forest over the query's variables; each atom
//! sits at the deepest of its variables, and all of an atom's variables
//! must lie on one root-to-node path. Assigning a plan to every witness
//! groups witnesses by shared value prefixes, and the factorization's
//! length is the number of distinct (plan, atom, prefix) occurrences
//! that assignment activates. Minimizing that count is an integer
//! program; extraction turns its solution back into a sum-product
//! expression over tuple ids.
//!
//! `read_once_factorize` is independent of all that: it decomposes the
//! DNF directly, succeeding exactly when every tuple can appear once.

use std::collections::{BTreeMap, BTreeSet};

use lpcore::{is_integral, solve_lp, solve_mip_with, Status, VarId};
use serde_json::json;
use thiserror::Error;

use crate::query::Query;
use crate::witness::ProvenanceDnf;
use crate::{rat, Model, Rat, SolveOptions};

/// Plan enumeration is exponential in the variable count; queries this
/// small cover every bundled example with room to spare.
pub const MAX_PLAN_VARIABLES: usize = 8;

#[derive(Debug, Error)]
pub enum FactorizeError {
    #[error("factorization requires a self-join-free query")]
    SelfJoin,
    #[error("plan enumeration supports at most {MAX_PLAN_VARIABLES} variables, query has {0}")]
    TooManyVariables(usize),
    #[error("expansion exceeded {0} products")]
    ExpansionLimit(usize),
    #[error("witness {0} was not assigned a plan")]
    UnassignedWitness(usize),
    #[error("solver error: {0}")]
    Lp(#[from] lpcore::LpError),
    #[error("internal check failed: {0}")]
    Inconsistent(String),
}

/// Rooted variable forest with atom placements. Every tree edge joins
/// two variables sharing an atom, each atom's variables lie on one
/// root-to-node path, and the atom sits at the deepest of them.
/// Variable indices refer to [`plan_variables`] order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryPlan {
    /// Parent of each variable; `None` for roots.
    pub parent: Vec<Option<usize>>,
    /// Deepest variable of each atom; `None` for constants-only atoms.
    pub placement: Vec<Option<usize>>,
    /// Per atom, the variables on the root-to-placement path, root
    /// first, placement last. Empty for constants-only atoms.
    pub paths: Vec<Vec<usize>>,
    /// Canonical serialization; plans are ordered and deduplicated by it.
    pub id: String,
}

/// The query's variables in sorted order; plans index into this list.
pub fn plan_variables(q: &Query) -> Vec<String> {
    q.variables().into_iter().map(str::to_string).collect()
}

/// Every forest satisfying the plan invariants, in canonical id order.
pub fn enumerate_plans(q: &Query) -> Result<Vec<QueryPlan>, FactorizeError> {
    if !q.is_self_join_free() {
        return Err(FactorizeError::SelfJoin);
    }
    let vars = plan_variables(q);
    let n = vars.len();
    if n > MAX_PLAN_VARIABLES {
        return Err(FactorizeError::TooManyVariables(n));
    }
    // Atom variables as index sets, fixed once.
    let atom_vars: Vec<BTreeSet<usize>> = q
        .atoms
        .iter()
        .map(|a| {
            a.variable_set()
                .iter()
                .map(|v| vars.binary_search(&v.to_string()).unwrap())
                .collect()
        })
        .collect();

    // vars u, v may be parent and child only when some atom holds both.
    let mut co_occur = vec![vec![false; n]; n];
    for avars in &atom_vars {
        for &u in avars {
            for &v in avars {
                co_occur[u][v] = true;
            }
        }
    }

    let mut plans = Vec::new();
    // Odometer over parent choices: digit 0 is "root", digit j >= 1 is
    // parent j-1, skipping self-loops below.
    let mut digits = vec![0usize; n];
    loop {
        if let Some(plan) = build_plan(&vars, &digits, &atom_vars, &co_occur) {
            plans.push(plan);
        }
        let mut k = 0;
        loop {
            if k == n {
                // n == 0 still ran the body once: the empty forest.
                plans.sort_by(|a, b| a.id.cmp(&b.id));
                plans.dedup_by(|a, b| a.id == b.id);
                return Ok(plans);
            }
            digits[k] += 1;
            if digits[k] <= n {
                break;
            }
            digits[k] = 0;
            k += 1;
        }
    }
}

fn build_plan(
    vars: &[String],
    digits: &[usize],
    atom_vars: &[BTreeSet<usize>],
    co_occur: &[Vec<bool>],
) -> Option<QueryPlan> {
    let n = vars.len();
    let mut parent: Vec<Option<usize>> = Vec::with_capacity(n);
    for (i, &d) in digits.iter().enumerate() {
        if d == 0 {
            parent.push(None);
        } else {
            let p = d - 1;
            if p == i || !co_occur[i][p] {
                return None;
            }
            parent.push(Some(p));
        }
    }
    // Depth doubles as the cycle check: a parent chain longer than n
    // must repeat.
    let mut depth = vec![0usize; n];
    for i in 0..n {
        let mut d = 0;
        let mut cur = parent[i];
        while let Some(p) = cur {
            d += 1;
            if d > n {
                return None;
            }
            cur = parent[p];
        }
        depth[i] = d;
    }
    // Each atom's variables must form one ancestor chain; the deepest
    // one is the placement.
    let mut placement = Vec::with_capacity(atom_vars.len());
    let mut paths = Vec::with_capacity(atom_vars.len());
    for avars in atom_vars {
        if avars.is_empty() {
            placement.push(None);
            paths.push(Vec::new());
            continue;
        }
        let &deepest = avars.iter().max_by_key(|&&v| (depth[v], v)).unwrap();
        let mut chain = Vec::with_capacity(depth[deepest] + 1);
        let mut cur = Some(deepest);
        while let Some(v) = cur {
            chain.push(v);
            cur = parent[v];
        }
        chain.reverse();
        let chain_set: BTreeSet<usize> = chain.iter().copied().collect();
        if !avars.is_subset(&chain_set) {
            return None;
        }
        placement.push(Some(deepest));
        paths.push(chain);
    }
    let id = canonical_id(vars, &parent);
    Some(QueryPlan {
        parent,
        placement,
        paths,
        id,
    })
}

/// Serializes a forest with children ordered by their own
/// serialization, so structurally equal forests get equal ids.
fn canonical_id(vars: &[String], parent: &[Option<usize>]) -> String {
    let n = vars.len();
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut roots = Vec::new();
    for (i, p) in parent.iter().enumerate() {
        match p {
            Some(p) => children[*p].push(i),
            None => roots.push(i),
        }
    }
    fn ser(v: usize, vars: &[String], children: &[Vec<usize>]) -> String {
        let mut subs: Vec<String> = children[v]
            .iter()
            .map(|&c| ser(c, vars, children))
            .collect();
        subs.sort();
        if subs.is_empty() {
            vars[v].clone()
        } else {
            format!("{}({})", vars[v], subs.join(" "))
        }
    }
    let mut tops: Vec<String> = roots.iter().map(|&r| ser(r, vars, &children)).collect();
    tops.sort();
    tops.join("; ")
}

/// Drops plans that some other plan dominates: `p2` dominates `p1` when
/// every atom's prefix variable set under `p2` is a subset of the one
/// under `p1`, so any witness grouped by `p1` groups at least as well
/// under `p2`. Between plans with identical prefix sets the canonically
/// first id survives. A pruned optimum never worsens; the oracle suite
/// cross-checks this against the unpruned search.
pub fn prune_plans(plans: &[QueryPlan]) -> Vec<QueryPlan> {
    let prefix_sets: Vec<Vec<BTreeSet<usize>>> = plans
        .iter()
        .map(|p| {
            p.paths
                .iter()
                .map(|path| path.iter().copied().collect())
                .collect()
        })
        .collect();
    let mut kept = Vec::new();
    'outer: for (i, plan) in plans.iter().enumerate() {
        for j in 0..plans.len() {
            if i == j {
                continue;
            }
            let dominates = prefix_sets[j]
                .iter()
                .zip(&prefix_sets[i])
                .all(|(pj, pi)| pj.is_subset(pi));
            if !dominates {
                continue;
            }
            let strict = prefix_sets[j]
                .iter()
                .zip(&prefix_sets[i])
                .any(|(pj, pi)| pj != pi);
            // Plans are sorted by id, so equal prefix sets keep index
            // min(i, j).
            if strict || j < i {
                continue 'outer;
            }
        }
        kept.push(plan.clone());
    }
    kept
}

/// A distinct tuple occurrence: assigning plan `plan` to a witness
/// makes atom `atom` appear under the value prefix `prefix`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct OccurrenceKey {
    pub plan: usize,
    pub atom: usize,
    pub prefix: Vec<String>,
}

/// The key activated when witness term `term` takes plan `plan`.
pub(crate) fn occurrence_key(
    term: &crate::witness::DnfTerm,
    vars: &[String],
    plan_idx: usize,
    plan: &QueryPlan,
    atom: usize,
) -> OccurrenceKey {
    let prefix = plan.paths[atom]
        .iter()
        .map(|&v| term.assignment[&vars[v]].clone())
        .collect();
    OccurrenceKey {
        plan: plan_idx,
        atom,
        prefix,
    }
}

/// Variable layout of the factorization ILP.
pub struct MinfacEncoding {
    pub model: Model,
    /// `choice[w][p]`: witness term w is written under plan p.
    pub choice: Vec<Vec<VarId>>,
    /// One variable per distinct occurrence key, in key order.
    pub occurrences: Vec<(OccurrenceKey, VarId)>,
}

/// Covering formulation: every witness picks at least one plan, and a
/// picked plan forces all occurrence keys it activates. The objective
/// counts activated keys.
pub fn build_minfac_model(
    q: &Query,
    dnf: &ProvenanceDnf,
    plans: &[QueryPlan],
) -> MinfacEncoding {
    let vars = plan_variables(q);
    let mut model = Model::new();
    let choice: Vec<Vec<VarId>> = (0..dnf.terms.len())
        .map(|w| {
            (0..plans.len())
                .map(|p| {
                    model
                        .add_binary(format!("q_w{w}_p{p}"), true, rat(0))
                        .unwrap()
                })
                .collect()
        })
        .collect();
    let mut keys: BTreeSet<OccurrenceKey> = BTreeSet::new();
    for term in &dnf.terms {
        for (p, plan) in plans.iter().enumerate() {
            for atom in 0..q.atoms.len() {
                keys.insert(occurrence_key(term, &vars, p, plan, atom));
            }
        }
    }
    let occurrences: Vec<(OccurrenceKey, VarId)> = keys
        .into_iter()
        .enumerate()
        .map(|(i, key)| {
            let var = model.add_binary(format!("o_{i}"), true, rat(1)).unwrap();
            (key, var)
        })
        .collect();
    let key_var: BTreeMap<&OccurrenceKey, VarId> =
        occurrences.iter().map(|(k, v)| (k, *v)).collect();

    for (w, term) in dnf.terms.iter().enumerate() {
        let cover: Vec<(VarId, Rat)> =
            (0..plans.len()).map(|p| (choice[w][p], rat(1))).collect();
        model
            .add_constraint(cover, lpcore::Sense::Ge, rat(1))
            .unwrap();
        for (p, plan) in plans.iter().enumerate() {
            for atom in 0..q.atoms.len() {
                let key = occurrence_key(term, &vars, p, plan, atom);
                let o = key_var[&key];
                // choice - occurrence <= 0
                model
                    .add_constraint(
                        [(choice[w][p], rat(1)), (o, rat(-1))],
                        lpcore::Sense::Le,
                        rat(0),
                    )
                    .unwrap();
            }
        }
    }
    MinfacEncoding {
        model,
        choice,
        occurrences,
    }
}

/// Factorized provenance: leaves are tuple ids, inner nodes alternate
/// sums and products. Length counts leaves; operators are free.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum FactorExpr {
    Leaf(String),
    Product(Vec<FactorExpr>),
    Sum(Vec<FactorExpr>),
}

impl FactorExpr {
    pub fn leaf(id: impl Into<String>) -> FactorExpr {
        FactorExpr::Leaf(id.into())
    }

    /// Product of `children`, flattening nested products and unwrapping
    /// a single child.
    pub fn product(children: Vec<FactorExpr>) -> FactorExpr {
        let mut flat = Vec::new();
        for c in children {
            match c {
                FactorExpr::Product(grand) => flat.extend(grand),
                other => flat.push(other),
            }
        }
        match flat.len() {
            1 => flat.pop().unwrap(),
            _ => FactorExpr::Product(flat),
        }
    }

    /// Sum of `children`, flattening nested sums and unwrapping a
    /// single child.
    pub fn sum(children: Vec<FactorExpr>) -> FactorExpr {
        let mut flat = Vec::new();
        for c in children {
            match c {
                FactorExpr::Sum(grand) => flat.extend(grand),
                other => flat.push(other),
            }
        }
        match flat.len() {
            1 => flat.pop().unwrap(),
            _ => FactorExpr::Sum(flat),
        }
    }

    /// Number of tuple-literal occurrences.
    pub fn length(&self) -> usize {
        match self {
            FactorExpr::Leaf(_) => 1,
            FactorExpr::Product(cs) | FactorExpr::Sum(cs) => {
                cs.iter().map(FactorExpr::length).sum()
            }
        }
    }

    /// Sorts children recursively so structurally equal expressions
    /// print identically.
    pub fn normalize(self) -> FactorExpr {
        match self {
            FactorExpr::Leaf(id) => FactorExpr::Leaf(id),
            FactorExpr::Product(cs) => {
                let mut cs: Vec<FactorExpr> =
                    cs.into_iter().map(FactorExpr::normalize).collect();
                cs.sort();
                FactorExpr::Product(cs)
            }
            FactorExpr::Sum(cs) => {
                let mut cs: Vec<FactorExpr> =
                    cs.into_iter().map(FactorExpr::normalize).collect();
                cs.sort();
                FactorExpr::Sum(cs)
            }
        }
    }

    /// `Oscar:1*Spouse:1*(ActsIn:1*DirectedBy:1 + ActsIn:2*DirectedBy:2)`
    pub fn text(&self) -> String {
        match self {
            FactorExpr::Leaf(id) => id.clone(),
            FactorExpr::Product(cs) => cs
                .iter()
                .map(|c| match c {
                    FactorExpr::Sum(_) => format!("({})", c.text()),
                    _ => c.text(),
                })
                .collect::<Vec<_>>()
                .join("*"),
            FactorExpr::Sum(cs) => cs
                .iter()
                .map(FactorExpr::text)
                .collect::<Vec<_>>()
                .join(" + "),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            FactorExpr::Leaf(id) => json!({ "leaf": id }),
            FactorExpr::Product(cs) => {
                json!({ "product": cs.iter().map(FactorExpr::to_json).collect::<Vec<_>>() })
            }
            FactorExpr::Sum(cs) => {
                json!({ "sum": cs.iter().map(FactorExpr::to_json).collect::<Vec<_>>() })
            }
        }
    }

    /// Distributes into a set of products. `limit` bounds the working
    /// set size.
    pub fn expand(&self, limit: usize) -> Result<BTreeSet<BTreeSet<String>>, FactorizeError> {
        match self {
            FactorExpr::Leaf(id) => Ok([[id.clone()].into()].into()),
            FactorExpr::Sum(cs) => {
                let mut out = BTreeSet::new();
                for c in cs {
                    out.extend(c.expand(limit)?);
                    if out.len() > limit {
                        return Err(FactorizeError::ExpansionLimit(limit));
                    }
                }
                Ok(out)
            }
            FactorExpr::Product(cs) => {
                let mut acc: BTreeSet<BTreeSet<String>> = [BTreeSet::new()].into();
                for c in cs {
                    let rhs = c.expand(limit)?;
                    let mut next = BTreeSet::new();
                    for a in &acc {
                        for b in &rhs {
                            let mut t = a.clone();
                            t.extend(b.iter().cloned());
                            next.insert(t);
                            if next.len() > limit {
                                return Err(FactorizeError::ExpansionLimit(limit));
                            }
                        }
                    }
                    acc = next;
                }
                Ok(acc)
            }
        }
    }
}

/// Removes terms that strictly contain another term (absorption).
pub fn absorb(terms: BTreeSet<BTreeSet<String>>) -> BTreeSet<BTreeSet<String>> {
    terms
        .iter()
        .filter(|t| !terms.iter().any(|u| *u != **t && u.is_subset(t)))
        .cloned()
        .collect()
}

pub const EXPANSION_LIMIT: usize = 1_000_000;

/// True iff `e` and the DNF denote the same monotone boolean function,
/// checked by expansion and absorption on both sides.
pub fn expand_and_compare(e: &FactorExpr, dnf: &ProvenanceDnf) -> Result<bool, FactorizeError> {
    let expanded = absorb(e.expand(EXPANSION_LIMIT)?);
    let reference = absorb(dnf.terms.iter().map(|t| t.tuple_set.clone()).collect());
    Ok(expanded == reference)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinFacResult {
    pub length: usize,
    /// `None` exactly when the provenance is empty.
    pub expression: Option<FactorExpr>,
    /// Chosen plan index per witness term (into the pruned plan list).
    pub assignment: Vec<usize>,
    pub plan_ids: Vec<String>,
    pub lp_bound: Rat,
    pub lp_integral: bool,
    pub stats: lpcore::SolveStats,
}

/// Minimal factorization of the query's provenance on this instance:
/// LP relaxation first, branch-and-bound only when fractional.
pub fn solve_minfac(
    q: &Query,
    inst: &crate::instance::Instance,
    options: &SolveOptions,
) -> Result<MinFacResult, FactorizeError> {
    let witnesses = crate::witness::enumerate_witnesses(q, inst);
    let dnf = crate::witness::provenance_dnf(&witnesses);
    solve_minfac_dnf(q, &dnf, options)
}

pub fn solve_minfac_dnf(
    q: &Query,
    dnf: &ProvenanceDnf,
    options: &SolveOptions,
) -> Result<MinFacResult, FactorizeError> {
    let plans = prune_plans(&enumerate_plans(q)?);
    if dnf.is_empty() {
        return Ok(MinFacResult {
            length: 0,
            expression: None,
            assignment: Vec::new(),
            plan_ids: plans.iter().map(|p| p.id.clone()).collect(),
            lp_bound: rat(0),
            lp_integral: true,
            stats: lpcore::SolveStats::default(),
        });
    }
    if plans.is_empty() {
        return Err(FactorizeError::Inconsistent(
            "no valid query plan for this query".into(),
        ));
    }
    let enc = build_minfac_model(q, dnf, &plans);
    let lp = solve_lp(&enc.model)?;
    if lp.status != Status::Optimal {
        return Err(FactorizeError::Inconsistent(
            "factorization LP cannot be infeasible".into(),
        ));
    }
    let lp_bound = lp.objective.clone();
    let lp_integral = is_integral(&lp, &enc.model.integral_vars());
    let mut stats = lp.stats.clone();
    let solution = if lp_integral {
        lp
    } else {
        let mip = solve_mip_with(&enc.model, &options.mip())?;
        stats.simplex_iterations += mip.stats.simplex_iterations;
        stats.branch_nodes = mip.stats.branch_nodes;
        mip
    };
    // Lowest selected plan per witness; over-coverage is harmless.
    let one = rat(1);
    let assignment: Vec<usize> = (0..dnf.terms.len())
        .map(|w| {
            (0..plans.len())
                .find(|&p| *solution.value(enc.choice[w][p]) == one)
                .ok_or(FactorizeError::UnassignedWitness(w))
        })
        .collect::<Result<_, _>>()?;
    let vars = plan_variables(q);
    let expression = extract_expression(q, &vars, dnf, &plans, &assignment)?;
    let length_rat = solution.objective.clone();
    if !<Rat as lpcore::Scalar>::is_integer(&length_rat) {
        return Err(FactorizeError::Inconsistent(
            "integral solve returned a fractional objective".into(),
        ));
    }
    let length = length_to_usize(&length_rat)?;
    let leaf_count = expression.as_ref().map_or(0, FactorExpr::length);
    if leaf_count != length {
        return Err(FactorizeError::Inconsistent(format!(
            "expression has {leaf_count} leaves but the objective is {length}"
        )));
    }
    Ok(MinFacResult {
        length,
        expression,
        assignment,
        plan_ids: plans.iter().map(|p| p.id.clone()).collect(),
        lp_bound,
        lp_integral,
        stats,
    })
}

fn length_to_usize(r: &Rat) -> Result<usize, FactorizeError> {
    use num_traits::ToPrimitive;
    r.to_integer()
        .to_usize()
        .ok_or_else(|| FactorizeError::Inconsistent("objective out of range".into()))
}

/// Rebuilds the expression a plan assignment denotes: per plan, group
/// its witnesses top-down by the values at each forest node, emitting
/// the atoms placed there once per distinct prefix; subtrees multiply,
/// value groups sum, and plans sum at the top.
pub fn extract_expression(
    q: &Query,
    vars: &[String],
    dnf: &ProvenanceDnf,
    plans: &[QueryPlan],
    assignment: &[usize],
) -> Result<Option<FactorExpr>, FactorizeError> {
    if dnf.terms.len() != assignment.len() {
        return Err(FactorizeError::UnassignedWitness(assignment.len()));
    }
    if dnf.terms.is_empty() {
        return Ok(None);
    }
    let mut by_plan: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (w, &p) in assignment.iter().enumerate() {
        by_plan.entry(p).or_default().push(w);
    }
    let mut plan_exprs = Vec::new();
    for (&p, group) in &by_plan {
        let plan = &plans[p];
        let n = vars.len();
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut roots = Vec::new();
        for (v, par) in plan.parent.iter().enumerate() {
            match par {
                Some(par) => children[*par].push(v),
                None => roots.push(v),
            }
        }
        let mut factors: Vec<FactorExpr> = roots
            .iter()
            .map(|&r| subtree_expr(q, vars, dnf, plan, &children, r, group))
            .collect();
        // Constants-only atoms sit above every root and appear once per
        // plan; their support is shared by all witnesses.
        for (atom, placement) in plan.placement.iter().enumerate() {
            if placement.is_none() {
                factors.push(FactorExpr::leaf(dnf.terms[group[0]].support[atom].clone()));
            }
        }
        plan_exprs.push(FactorExpr::product(factors));
    }
    Ok(Some(FactorExpr::sum(plan_exprs)))
}

fn subtree_expr(
    q: &Query,
    vars: &[String],
    dnf: &ProvenanceDnf,
    plan: &QueryPlan,
    children: &[Vec<usize>],
    v: usize,
    group: &[usize],
) -> FactorExpr {
    let mut by_value: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for &w in group {
        by_value
            .entry(dnf.terms[w].assignment[&vars[v]].as_str())
            .or_default()
            .push(w);
    }
    let summands: Vec<FactorExpr> = by_value
        .values()
        .map(|sub| {
            let mut factors = Vec::new();
            for atom in 0..q.atoms.len() {
                if plan.placement[atom] == Some(v) {
                    // All witnesses in `sub` agree on the atom's
                    // variables (they lie on the path to v), so they
                    // share the supporting tuple.
                    factors.push(FactorExpr::leaf(dnf.terms[sub[0]].support[atom].clone()));
                }
            }
            for &c in &children[v] {
                factors.push(subtree_expr(q, vars, dnf, plan, children, c, sub));
            }
            FactorExpr::product(factors)
        })
        .collect();
    FactorExpr::sum(summands)
}

/// Read-once decomposition of the DNF: alternately split independent
/// term groups into sums and independent tuple groups into products.
/// Returns `None` when some tuple would have to repeat (or the DNF is
/// empty).
pub fn read_once_factorize(dnf: &ProvenanceDnf) -> Option<FactorExpr> {
    if dnf.is_empty() {
        return None;
    }
    let terms: Vec<BTreeSet<String>> = absorb(
        dnf.terms.iter().map(|t| t.tuple_set.clone()).collect(),
    )
    .into_iter()
    .collect();
    decompose(&terms)
}

fn decompose(terms: &[BTreeSet<String>]) -> Option<FactorExpr> {
    if terms.len() == 1 {
        let leaves = terms[0].iter().map(FactorExpr::leaf).collect();
        return Some(FactorExpr::product(leaves));
    }
    // Sum step: terms sharing no tuples split into independent groups.
    let groups = connected_groups(terms.len(), |i, j| {
        !terms[i].is_disjoint(&terms[j])
    });
    if groups.len() > 1 {
        let mut summands = Vec::new();
        for g in groups {
            let sub: Vec<BTreeSet<String>> = g.iter().map(|&i| terms[i].clone()).collect();
            summands.push(decompose(&sub)?);
        }
        return Some(FactorExpr::sum(summands));
    }
    // Product step: tuples that never co-occur in a term may live in
    // different factors, so factor candidates are the connected groups
    // of the complement of the co-occurrence relation.
    let tuples: Vec<&String> = {
        let mut set = BTreeSet::new();
        for t in terms {
            set.extend(t.iter());
        }
        set.into_iter().collect()
    };
    let co_occur = |i: usize, j: usize| {
        terms
            .iter()
            .any(|t| t.contains(tuples[i]) && t.contains(tuples[j]))
    };
    let factors = connected_groups(tuples.len(), |i, j| !co_occur(i, j));
    if factors.len() < 2 {
        return None;
    }
    // The split is only a product if the term set is exactly the
    // cartesian product of its per-factor projections.
    let mut parts: Vec<Vec<BTreeSet<String>>> = Vec::new();
    for f in &factors {
        let names: BTreeSet<&String> = f.iter().map(|&i| tuples[i]).collect();
        let mut proj: BTreeSet<BTreeSet<String>> = BTreeSet::new();
        for t in terms {
            let piece: BTreeSet<String> =
                t.iter().filter(|x| names.contains(x)).cloned().collect();
            if piece.is_empty() {
                return None; // a term missing a factor breaks the product
            }
            proj.insert(piece);
        }
        parts.push(proj.into_iter().collect());
    }
    let combinations: usize = parts.iter().map(Vec::len).product();
    if combinations != terms.len() {
        return None;
    }
    let mut factors_exprs = Vec::new();
    for part in &parts {
        factors_exprs.push(decompose(part)?);
    }
    Some(FactorExpr::product(factors_exprs))
}

/// Connected components of `{0..n}` under a symmetric adjacency
/// predicate, each sorted, in order of their smallest element.
fn connected_groups(n: usize, adjacent: impl Fn(usize, usize) -> bool) -> Vec<Vec<usize>> {
    let mut seen = vec![false; n];
    let mut groups = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut stack = vec![start];
        let mut group = Vec::new();
        seen[start] = true;
        while let Some(i) = stack.pop() {
            group.push(i);
            for j in 0..n {
                if !seen[j] && adjacent(i, j) {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        group.sort_unstable();
        groups.push(group);
    }
    groups
}
