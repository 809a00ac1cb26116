//! Structural analysis of a query and tractability predictions.
//!
//! The checks are purely syntactic: hierarchy and linearity look at
//! which atoms each variable touches, domination compares variable
//! sets, and a triad is a trio of independent-but-connected atoms.
//! Predictions map those shapes to PTIME, NPC, or OPEN per problem and
//! semantics; anything the known boundaries do not cover stays OPEN.

use std::collections::BTreeMap;

use serde_json::json;
use thiserror::Error;

use crate::factorize::{enumerate_plans, prune_plans, FactorizeError};
use crate::query::Query;

#[derive(Debug, Error, PartialEq)]
pub enum ClassifyError {
    #[error("structural checks require a self-join-free query")]
    SelfJoin,
}

/// True iff every two variables have nested or disjoint atom sets.
pub fn is_hierarchical(q: &Query) -> Result<bool, ClassifyError> {
    if !q.is_self_join_free() {
        return Err(ClassifyError::SelfJoin);
    }
    let vars: Vec<&str> = q.variables().into_iter().collect();
    for (i, u) in vars.iter().enumerate() {
        let au = q.atoms_of_variable(u).unwrap();
        for v in &vars[i + 1..] {
            let av = q.atoms_of_variable(v).unwrap();
            let nested = au.is_subset(&av) || av.is_subset(&au);
            let disjoint = au.is_disjoint(&av);
            if !nested && !disjoint {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// True iff some total order of the atoms keeps every variable's atoms
/// consecutive. Exhaustive search with early pruning; queries are tiny.
pub fn is_linear(q: &Query) -> Result<bool, ClassifyError> {
    if !q.is_self_join_free() {
        return Err(ClassifyError::SelfJoin);
    }
    let n = q.atoms.len();
    let atom_vars: Vec<std::collections::BTreeSet<&str>> =
        q.atoms.iter().map(|a| a.variable_set()).collect();
    let mut used = vec![false; n];
    let mut placed: Vec<usize> = Vec::with_capacity(n);

    fn extend(
        atom_vars: &[std::collections::BTreeSet<&str>],
        used: &mut [bool],
        placed: &mut Vec<usize>,
        seen_count: &mut BTreeMap<String, usize>,
    ) -> bool {
        let n = atom_vars.len();
        if placed.len() == n {
            return true;
        }
        for cand in 0..n {
            if used[cand] {
                continue;
            }
            // A variable seen before must still be open: its atoms so
            // far must end at the previous position.
            let ok = atom_vars[cand].iter().all(|v| {
                match seen_count.get(*v) {
                    None => true,
                    Some(_) => placed
                        .last()
                        .map_or(false, |&prev| atom_vars[prev].contains(v)),
                }
            });
            if !ok {
                continue;
            }
            used[cand] = true;
            placed.push(cand);
            for v in &atom_vars[cand] {
                *seen_count.entry(v.to_string()).or_insert(0) += 1;
            }
            if extend(atom_vars, used, placed, seen_count) {
                return true;
            }
            for v in &atom_vars[cand] {
                let c = seen_count.get_mut(*v).unwrap();
                *c -= 1;
                if *c == 0 {
                    seen_count.remove(*v);
                }
            }
            placed.pop();
            used[cand] = false;
        }
        false
    }

    let mut seen = BTreeMap::new();
    Ok(extend(&atom_vars, &mut used, &mut placed, &mut seen))
}

/// Endogenous atoms whose variable set strictly contains some other
/// atom's variable set (exogenous atoms count as dominators).
pub fn dominated_atoms(q: &Query) -> Result<Vec<usize>, ClassifyError> {
    if !q.is_self_join_free() {
        return Err(ClassifyError::SelfJoin);
    }
    let var_sets: Vec<std::collections::BTreeSet<&str>> =
        q.atoms.iter().map(|a| a.variable_set()).collect();
    let mut out = Vec::new();
    for i in q.endogenous_atom_indices() {
        let dominated = var_sets.iter().enumerate().any(|(j, vj)| {
            j != i && vj.len() < var_sets[i].len() && vj.is_subset(&var_sets[i])
        });
        if dominated {
            out.push(i);
        }
    }
    Ok(out)
}

/// Three non-dominated endogenous atoms, each pair linked by an atom
/// path that stays clear of the third atom's variables. Returns the
/// first such triple by atom index, if any.
pub fn has_triad(q: &Query) -> Result<Option<[usize; 3]>, ClassifyError> {
    let dominated = dominated_atoms(q)?;
    let candidates: Vec<usize> = q
        .endogenous_atom_indices()
        .into_iter()
        .filter(|i| !dominated.contains(i))
        .collect();
    let var_sets: Vec<std::collections::BTreeSet<&str>> =
        q.atoms.iter().map(|a| a.variable_set()).collect();

    // Path from `from` to `to`: consecutive atoms share a variable
    // outside `forbidden`, and interior atoms avoid `forbidden`
    // entirely. Endpoints are exempt from the interior rule.
    let connected = |from: usize, to: usize, forbidden: &std::collections::BTreeSet<&str>| {
        let n = q.atoms.len();
        let step_ok = |a: usize, b: usize| {
            var_sets[a]
                .intersection(&var_sets[b])
                .any(|v| !forbidden.contains(v))
        };
        let interior_ok =
            |a: usize| a == from || a == to || var_sets[a].is_disjoint(forbidden);
        let mut seen = vec![false; n];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(a) = stack.pop() {
            if a == to {
                return true;
            }
            for b in 0..n {
                if !seen[b] && interior_ok(b) && step_ok(a, b) {
                    seen[b] = true;
                    stack.push(b);
                }
            }
        }
        false
    };

    for (ii, &i) in candidates.iter().enumerate() {
        for (jj, &j) in candidates.iter().enumerate().skip(ii + 1) {
            for &k in candidates.iter().skip(jj + 1) {
                if connected(i, j, &var_sets[k])
                    && connected(i, k, &var_sets[j])
                    && connected(j, k, &var_sets[i])
                {
                    return Ok(Some([i, j, k]));
                }
            }
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Ptime,
    Npc,
    Open,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Ptime => "PTIME",
            Verdict::Npc => "NPC",
            Verdict::Open => "OPEN",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prediction {
    pub verdict: Verdict,
    pub justification: String,
}

fn predict(verdict: Verdict, justification: impl Into<String>) -> Prediction {
    Prediction {
        verdict,
        justification: justification.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryClassification {
    pub self_join_free: bool,
    /// `None` when the checks do not apply (self-join).
    pub hierarchical: Option<bool>,
    pub linear: Option<bool>,
    pub dominated_atoms: Vec<usize>,
    pub triad: Option<[usize; 3]>,
    /// Pruned plan count; `None` when unknown (self-join or too many
    /// variables to enumerate).
    pub canonical_plan_count: Option<usize>,
    /// Keyed by problem and semantics: resilience_set, resilience_bag,
    /// responsibility_set, responsibility_bag, factorization.
    pub predictions: BTreeMap<&'static str, Prediction>,
    pub notes: Vec<String>,
}

impl QueryClassification {
    pub fn to_json(&self) -> serde_json::Value {
        let count = match self.canonical_plan_count {
            Some(c) => json!(c),
            None => json!("unknown"),
        };
        let predictions: serde_json::Map<String, serde_json::Value> = self
            .predictions
            .iter()
            .map(|(k, p)| {
                (
                    k.to_string(),
                    json!({
                        "verdict": p.verdict.name(),
                        "justification": p.justification,
                    }),
                )
            })
            .collect();
        json!({
            "self_join_free": self.self_join_free,
            "hierarchical": self.hierarchical,
            "linear": self.linear,
            "dominated_atoms": self.dominated_atoms,
            "triad": self.triad,
            "canonical_plan_count": count,
            "predictions": predictions,
            "notes": self.notes,
        })
    }
}

/// Structural classification plus tractability predictions for
/// resilience, responsibility, and factorization.
pub fn predict_complexity(q: &Query) -> QueryClassification {
    let mut notes = Vec::new();
    if q.atoms.iter().any(|a| a.variables().count() < a.arity()) {
        notes.push(
            "constant arguments are ignored by the structural checks; \
             only variable positions matter"
                .to_string(),
        );
    }
    if !q.is_self_join_free() {
        notes.push(
            "the query repeats a relation; the known complexity boundaries \
             cover only self-join-free queries"
                .to_string(),
        );
        let mut predictions = BTreeMap::new();
        for key in [
            "resilience_set",
            "resilience_bag",
            "responsibility_set",
            "responsibility_bag",
            "factorization",
        ] {
            predictions.insert(
                key,
                predict(Verdict::Open, "self-join queries are outside the known boundaries"),
            );
        }
        return QueryClassification {
            self_join_free: false,
            hierarchical: None,
            linear: None,
            dominated_atoms: Vec::new(),
            triad: None,
            canonical_plan_count: None,
            predictions,
            notes,
        };
    }

    let hierarchical = is_hierarchical(q).unwrap();
    let linear = is_linear(q).unwrap();
    let dominated = dominated_atoms(q).unwrap();
    let triad = has_triad(q).unwrap();
    let plan_count = match enumerate_plans(q) {
        Ok(plans) => Some(prune_plans(&plans).len()),
        Err(FactorizeError::TooManyVariables(_)) => None,
        Err(e) => unreachable!("self-join-free enumeration cannot fail otherwise: {e}"),
    };

    let mut predictions = BTreeMap::new();
    predictions.insert(
        "resilience_set",
        match triad {
            None => predict(
                Verdict::Ptime,
                "no triad among the non-dominated endogenous atoms",
            ),
            Some([i, j, k]) => predict(
                Verdict::Npc,
                format!("atoms {i}, {j}, {k} form a triad"),
            ),
        },
    );
    let bag = |problem: &str| {
        if linear {
            predict(
                Verdict::Ptime,
                format!("linear queries keep weighted {problem} tractable"),
            )
        } else {
            predict(
                Verdict::Npc,
                format!("non-linear queries make weighted {problem} intractable"),
            )
        }
    };
    predictions.insert("resilience_bag", bag("resilience"));
    predictions.insert("responsibility_bag", bag("responsibility"));
    predictions.insert(
        "responsibility_set",
        if linear && triad.is_none() {
            predict(
                Verdict::Ptime,
                "linear and triad-free: unit weights are a special case of the \
                 tractable weighted problem",
            )
        } else {
            predict(
                Verdict::Open,
                "set-semantics responsibility is only settled for linear \
                 triad-free queries; it can differ per target relation",
            )
        },
    );
    predictions.insert(
        "factorization",
        match plan_count {
            Some(c) if c <= 2 => predict(
                Verdict::Ptime,
                format!("{c} pruned plan(s); at most two means the relaxation is exact (heuristic count)"),
            ),
            Some(c) => predict(
                Verdict::Open,
                format!("{c} pruned plans; no general boundary is known beyond two"),
            ),
            None => predict(Verdict::Open, "plan count unknown for this query"),
        },
    );
    if predictions["responsibility_set"].verdict == Verdict::Open {
        notes.push(
            "set-semantics responsibility can be tractable for some target \
             relations and intractable for others within the same query"
                .to_string(),
        );
    }

    QueryClassification {
        self_join_free: true,
        hierarchical: Some(hierarchical),
        linear: Some(linear),
        dominated_atoms: dominated,
        triad,
        canonical_plan_count: plan_count,
        predictions,
        notes,
    }
}
