//! Brute-force reference implementations.
//!
//! Everything here answers the same questions as the solver modules by
//! exhaustive search, so the test suites can compare the two on any
//! instance small enough to enumerate. Budgets keep the searches
//! bounded; a cooperative token lets callers abort long sweeps.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use thiserror::Error;

use crate::factorize::{enumerate_plans, occurrence_key, plan_variables};
use crate::instance::Instance;
use crate::query::Query;
use crate::witness::{enumerate_witnesses, provenance_dnf};
use crate::Rat;

/// Caps on exhaustive search sizes.
#[derive(Debug, Clone)]
pub struct OracleBudget {
    /// Deletion searches enumerate subsets of the endogenous tuples.
    pub max_endogenous_tuples: usize,
    /// Factorization searches enumerate witness-to-plan assignments.
    pub max_witnesses: usize,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget {
            max_endogenous_tuples: 14,
            max_witnesses: 64,
        }
    }
}

/// Plan-assignment search additionally caps plans^witnesses.
pub const MAX_ASSIGNMENTS: u128 = 2_000_000;

/// Cooperative cancellation shared between a caller and a running
/// search. Cloning shares the flag.
#[derive(Debug, Clone, Default)]
pub struct CancelToken(Arc<AtomicBool>);

impl CancelToken {
    pub fn new() -> CancelToken {
        CancelToken::default()
    }

    pub fn cancel(&self) {
        self.0.store(true, Ordering::Relaxed);
    }

    pub fn is_cancelled(&self) -> bool {
        self.0.load(Ordering::Relaxed)
    }
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("search space too large: {0}")]
    BudgetExceeded(String),
    #[error("resilience is undefined: a witness has no endogenous tuple")]
    Undefined,
    #[error("search cancelled")]
    Cancelled,
    #[error("target tuple {0} is not an endogenous tuple of the instance")]
    BadTarget(String),
    #[error("unsupported query: {0}")]
    Unsupported(String),
}

/// Endogenous tuples as bit positions plus the witnesses as bit masks.
struct Ground {
    /// Deletion weight per endogenous tuple, by bit position.
    weights: Vec<u64>,
    ids: Vec<String>,
    /// Deduplicated witness masks over the endogenous bits.
    masks: Vec<u64>,
}

fn ground(q: &Query, inst: &Instance, budget: &OracleBudget) -> Result<Ground, OracleError> {
    let endo = inst.endogenous_tuples(q);
    if endo.len() > budget.max_endogenous_tuples {
        return Err(OracleError::BudgetExceeded(format!(
            "{} endogenous tuples exceed the budget of {}",
            endo.len(),
            budget.max_endogenous_tuples
        )));
    }
    let ids: Vec<String> = endo.iter().map(|t| t.id()).collect();
    let index: BTreeMap<&str, usize> = ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let dnf = provenance_dnf(&enumerate_witnesses(q, inst));
    let masks = dnf
        .terms
        .iter()
        .map(|t| {
            t.tuple_set
                .iter()
                .filter_map(|id| index.get(id.as_str()))
                .fold(0u64, |m, &i| m | 1 << i)
        })
        .collect();
    Ok(Ground {
        weights: endo.iter().map(|t| inst.weight(t)).collect(),
        ids,
        masks,
    })
}

fn mask_weight(mask: u64, weights: &[u64]) -> u64 {
    weights
        .iter()
        .enumerate()
        .filter(|(i, _)| mask >> i & 1 == 1)
        .map(|(_, w)| w)
        .sum()
}

/// All deletion candidates in increasing weight order, ties by mask.
fn masks_by_weight(n: usize, weights: &[u64]) -> Vec<(u64, u64)> {
    let mut out: Vec<(u64, u64)> = (0..1u64 << n)
        .map(|m| (mask_weight(m, weights), m))
        .collect();
    out.sort_unstable();
    out
}

/// Minimum total weight of endogenous tuples whose deletion eliminates
/// every witness.
pub fn brute_resilience(
    q: &Query,
    inst: &Instance,
    budget: &OracleBudget,
    cancel: &CancelToken,
) -> Result<Rat, OracleError> {
    let g = ground(q, inst, budget)?;
    if g.masks.is_empty() {
        return Ok(crate::rat(0));
    }
    if g.masks.contains(&0) {
        return Err(OracleError::Undefined);
    }
    for (step, (w, m)) in masks_by_weight(g.ids.len(), &g.weights).into_iter().enumerate() {
        if step % 1024 == 0 && cancel.is_cancelled() {
            return Err(OracleError::Cancelled);
        }
        if g.masks.iter().all(|wm| wm & m != 0) {
            return Ok(weight_rat(w));
        }
    }
    unreachable!("deleting every endogenous tuple eliminates all witnesses")
}

/// Minimum total weight of a deletion set excluding `target` after
/// which the query still holds but every remaining witness uses
/// `target`. `None` when no such set exists.
pub fn brute_responsibility(
    q: &Query,
    inst: &Instance,
    target: &str,
    budget: &OracleBudget,
    cancel: &CancelToken,
) -> Result<Option<Rat>, OracleError> {
    let g = ground(q, inst, budget)?;
    let ti = g
        .ids
        .iter()
        .position(|id| id == target)
        .ok_or_else(|| OracleError::BadTarget(target.to_string()))?;
    let target_bit = 1u64 << ti;
    for (step, (w, m)) in masks_by_weight(g.ids.len(), &g.weights).into_iter().enumerate() {
        if step % 1024 == 0 && cancel.is_cancelled() {
            return Err(OracleError::Cancelled);
        }
        if m & target_bit != 0 {
            continue;
        }
        let mut survivors = g.masks.iter().filter(|wm| *wm & m == 0).peekable();
        if survivors.peek().is_some() && survivors.all(|wm| wm & target_bit != 0) {
            return Ok(Some(weight_rat(w)));
        }
    }
    Ok(None)
}

fn weight_rat(w: u64) -> Rat {
    Rat::from_integer(w.into())
}

/// Minimum activated-occurrence count over every assignment of plans
/// to witnesses, searching all plans rather than the pruned list.
pub fn brute_minfac_min(
    q: &Query,
    inst: &Instance,
    budget: &OracleBudget,
    cancel: &CancelToken,
) -> Result<usize, OracleError> {
    let dnf = provenance_dnf(&enumerate_witnesses(q, inst));
    if dnf.is_empty() {
        return Ok(0);
    }
    let plans = enumerate_plans(q).map_err(|e| OracleError::Unsupported(e.to_string()))?;
    if plans.is_empty() {
        return Err(OracleError::Unsupported(
            "query admits no valid plan".into(),
        ));
    }
    let terms = dnf.terms.len();
    if terms > budget.max_witnesses {
        return Err(OracleError::BudgetExceeded(format!(
            "{} witnesses exceed the budget of {}",
            terms, budget.max_witnesses
        )));
    }
    let total = (plans.len() as u128)
        .checked_pow(terms as u32)
        .filter(|&t| t <= MAX_ASSIGNMENTS)
        .ok_or_else(|| {
            OracleError::BudgetExceeded(format!(
                "{}^{} plan assignments exceed {}",
                plans.len(),
                terms,
                MAX_ASSIGNMENTS
            ))
        })?;

    // Intern each reachable occurrence key so an assignment's cost is a
    // popcount over a small bitset.
    let vars = plan_variables(q);
    let mut intern = BTreeMap::new();
    let key_lists: Vec<Vec<Vec<usize>>> = dnf
        .terms
        .iter()
        .map(|term| {
            plans
                .iter()
                .enumerate()
                .map(|(p, plan)| {
                    (0..q.atoms.len())
                        .map(|atom| {
                            let key = occurrence_key(term, &vars, p, plan, atom);
                            let next = intern.len();
                            *intern.entry(key).or_insert(next)
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let words = intern.len().div_ceil(64);

    let mut best = usize::MAX;
    let mut assignment = vec![0usize; terms];
    let mut bits = vec![0u64; words];
    for step in 0..total {
        if step % 4096 == 0 && cancel.is_cancelled() {
            return Err(OracleError::Cancelled);
        }
        bits.fill(0);
        for (w, &p) in assignment.iter().enumerate() {
            for &k in &key_lists[w][p] {
                bits[k / 64] |= 1 << (k % 64);
            }
        }
        let cost: usize = bits.iter().map(|b| b.count_ones() as usize).sum();
        best = best.min(cost);
        for slot in assignment.iter_mut() {
            *slot += 1;
            if *slot < plans.len() {
                break;
            }
            *slot = 0;
        }
    }
    Ok(best)
}

/// True iff the exhaustive plan-assignment minimum equals
/// `claimed_length`.
pub fn brute_minfac_check(
    q: &Query,
    inst: &Instance,
    claimed_length: usize,
    budget: &OracleBudget,
    cancel: &CancelToken,
) -> Result<bool, OracleError> {
    Ok(brute_minfac_min(q, inst, budget, cancel)? == claimed_length)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Semantics;
    use crate::query::{parse_query, Atom, Term};
    use crate::testutil::{
        cycle3_instance, edge_path_query, instance_from_rows, mcdormand_instance, oscar_query,
    };
    use crate::rat;

    fn defaults() -> (OracleBudget, CancelToken) {
        (OracleBudget::default(), CancelToken::new())
    }

    #[test]
    fn mcdormand_resilience_is_one() {
        let (budget, cancel) = defaults();
        let q = oscar_query();
        let inst = mcdormand_instance(Semantics::Set, 1);
        assert_eq!(brute_resilience(&q, &inst, &budget, &cancel).unwrap(), rat(1));
    }

    #[test]
    fn mcdormand_bag_resilience_is_still_one() {
        // Doubling the Oscar tuple makes Spouse:1 the unique cheapest cut.
        let (budget, cancel) = defaults();
        let q = oscar_query();
        let inst = mcdormand_instance(Semantics::Bag, 2);
        assert_eq!(brute_resilience(&q, &inst, &budget, &cancel).unwrap(), rat(1));
    }

    #[test]
    fn cycle_resilience_is_two() {
        let (budget, cancel) = defaults();
        let q = edge_path_query();
        let inst = cycle3_instance();
        assert_eq!(brute_resilience(&q, &inst, &budget, &cancel).unwrap(), rat(2));
    }

    #[test]
    fn no_witnesses_means_resilience_zero() {
        let (budget, cancel) = defaults();
        let q = oscar_query();
        let inst = instance_from_rows(
            Semantics::Set,
            &[
                ("Oscar", &[&["f"]]),
                ("ActsIn", &[]),
                ("DirectedBy", &[]),
                ("Spouse", &[]),
            ],
        );
        assert_eq!(brute_resilience(&q, &inst, &budget, &cancel).unwrap(), rat(0));
    }

    #[test]
    fn witness_without_endogenous_tuple_is_undefined() {
        // Built directly: validation rejects fully exogenous queries,
        // but the oracle still guards the case.
        let (budget, cancel) = defaults();
        let q = Query {
            atoms: vec![Atom {
                relation: "R".into(),
                terms: vec![Term::Variable("x".into())],
            }],
            exogenous: ["R".to_string()].into(),
        };
        let inst = instance_from_rows(Semantics::Set, &[("R", &[&["a"]])]);
        assert!(matches!(
            brute_resilience(&q, &inst, &budget, &cancel),
            Err(OracleError::Undefined)
        ));
    }

    #[test]
    fn budget_rejects_large_instances() {
        let (_, cancel) = defaults();
        let budget = OracleBudget {
            max_endogenous_tuples: 2,
            max_witnesses: 64,
        };
        let q = edge_path_query();
        let inst = cycle3_instance();
        assert!(matches!(
            brute_resilience(&q, &inst, &budget, &cancel),
            Err(OracleError::BudgetExceeded(_))
        ));
    }

    #[test]
    fn cancellation_stops_the_search() {
        let (budget, cancel) = defaults();
        cancel.cancel();
        let q = edge_path_query();
        let inst = cycle3_instance();
        assert!(matches!(
            brute_resilience(&q, &inst, &budget, &cancel),
            Err(OracleError::Cancelled)
        ));
    }

    #[test]
    fn oscar_tuple_has_cost_zero() {
        // Oscar:1 is in both witnesses, so no deletions are needed.
        let (budget, cancel) = defaults();
        let q = oscar_query();
        let inst = mcdormand_instance(Semantics::Set, 1);
        assert_eq!(
            brute_responsibility(&q, &inst, "Oscar:1", &budget, &cancel).unwrap(),
            Some(rat(0))
        );
    }

    #[test]
    fn acts_in_tuple_has_cost_one() {
        // Deleting the other movie's chain makes ActsIn:1 counterfactual.
        let (budget, cancel) = defaults();
        let q = oscar_query();
        let inst = mcdormand_instance(Semantics::Set, 1);
        assert_eq!(
            brute_responsibility(&q, &inst, "ActsIn:1", &budget, &cancel).unwrap(),
            Some(rat(1))
        );
    }

    #[test]
    fn target_outside_every_witness_is_impossible() {
        // ActsIn:3 joins nothing, so it can never become counterfactual.
        let (budget, cancel) = defaults();
        let q = oscar_query();
        let inst = instance_from_rows(
            Semantics::Set,
            &[
                ("Oscar", &[&["frances_mcdormand"]]),
                (
                    "ActsIn",
                    &[
                        &["frances_mcdormand", "fargo"],
                        &["frances_mcdormand", "blood_simple"],
                        &["nobody", "raising_arizona"],
                    ],
                ),
                (
                    "DirectedBy",
                    &[&["fargo", "joel_coen"], &["blood_simple", "joel_coen"]],
                ),
                ("Spouse", &[&["frances_mcdormand", "joel_coen"]]),
            ],
        );
        assert_eq!(
            brute_responsibility(&q, &inst, "ActsIn:3", &budget, &cancel).unwrap(),
            None
        );
    }

    #[test]
    fn unknown_target_is_rejected() {
        let (budget, cancel) = defaults();
        let q = oscar_query();
        let inst = mcdormand_instance(Semantics::Set, 1);
        assert!(matches!(
            brute_responsibility(&q, &inst, "Oscar:9", &budget, &cancel),
            Err(OracleError::BadTarget(_))
        ));
    }

    #[test]
    fn mcdormand_minimum_length_is_six() {
        let (budget, cancel) = defaults();
        let q = oscar_query();
        let inst = mcdormand_instance(Semantics::Set, 1);
        assert!(brute_minfac_check(&q, &inst, 6, &budget, &cancel).unwrap());
        assert!(!brute_minfac_check(&q, &inst, 5, &budget, &cancel).unwrap());
    }

    #[test]
    fn single_witness_minimum_is_one_per_atom() {
        let (budget, cancel) = defaults();
        let q = oscar_query();
        let inst = instance_from_rows(
            Semantics::Set,
            &[
                ("Oscar", &[&["f"]]),
                ("ActsIn", &[&["f", "m1"]]),
                ("DirectedBy", &[&["m1", "j"]]),
                ("Spouse", &[&["f", "j"]]),
            ],
        );
        assert!(brute_minfac_check(&q, &inst, 4, &budget, &cancel).unwrap());
    }

    #[test]
    fn shared_root_minimum_is_three() {
        let (budget, cancel) = defaults();
        let q = parse_query("q() :- R(x), S(x,y).").unwrap();
        let inst = instance_from_rows(
            Semantics::Set,
            &[("R", &[&["c1"]]), ("S", &[&["c1", "a"], &["c1", "b"]])],
        );
        assert_eq!(brute_minfac_min(&q, &inst, &budget, &cancel).unwrap(), 3);
    }

    #[test]
    fn empty_provenance_minimum_is_zero() {
        let (budget, cancel) = defaults();
        let q = parse_query("q() :- R(x), S(x,y).").unwrap();
        let inst = instance_from_rows(Semantics::Set, &[("R", &[]), ("S", &[])]);
        assert_eq!(brute_minfac_min(&q, &inst, &budget, &cancel).unwrap(), 0);
    }

    #[test]
    fn self_join_is_unsupported() {
        let (budget, cancel) = defaults();
        let q = edge_path_query();
        let inst = cycle3_instance();
        assert!(matches!(
            brute_minfac_min(&q, &inst, &budget, &cancel),
            Err(OracleError::Unsupported(_))
        ));
    }
}
