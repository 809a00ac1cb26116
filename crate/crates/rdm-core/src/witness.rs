//! Witness enumeration and the provenance DNF.
//!
//! A witness is a variable assignment that satisfies every atom of the
//! query against the instance, together with the tuples supporting each
//! atom. The provenance DNF deduplicates witnesses by their tuple sets:
//! two assignments supported by the same tuples contribute a single
//! disjunct (and a single solver constraint downstream).

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::instance::Instance;
use crate::query::{Query, Term};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub assignment: BTreeMap<String, String>,
    /// Tuple id per atom, in atom order.
    pub support: Vec<String>,
    /// Deduplicated support; the same tuple may serve several atoms of a
    /// self-join query.
    pub tuple_set: BTreeSet<String>,
}

/// One disjunct of the provenance DNF: a distinct witness tuple set with
/// a representative assignment and per-atom support kept for
/// factorization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DnfTerm {
    pub tuple_set: BTreeSet<String>,
    pub support: Vec<String>,
    pub assignment: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ProvenanceDnf {
    pub terms: Vec<DnfTerm>,
}

impl ProvenanceDnf {
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// The distinct tuples appearing anywhere in the DNF.
    pub fn tuple_universe(&self) -> BTreeSet<&str> {
        self.terms
            .iter()
            .flat_map(|t| t.tuple_set.iter().map(|s| s.as_str()))
            .collect()
    }
}

/// All assignments satisfying the query, sorted lexicographically by
/// assignment. Relations missing from the instance are treated as empty.
pub fn enumerate_witnesses(q: &Query, inst: &Instance) -> Vec<Witness> {
    let mut out = Vec::new();
    let mut assignment: BTreeMap<String, String> = BTreeMap::new();
    let mut support: Vec<String> = Vec::with_capacity(q.atoms.len());
    scan(q, inst, 0, &mut assignment, &mut support, &mut out);
    out.sort_by(|a, b| a.assignment.cmp(&b.assignment));
    out
}

fn scan(
    q: &Query,
    inst: &Instance,
    atom_idx: usize,
    assignment: &mut BTreeMap<String, String>,
    support: &mut Vec<String>,
    out: &mut Vec<Witness>,
) {
    if atom_idx == q.atoms.len() {
        let tuple_set: BTreeSet<String> = support.iter().cloned().collect();
        out.push(Witness {
            assignment: assignment.clone(),
            support: support.clone(),
            tuple_set,
        });
        return;
    }
    let atom = &q.atoms[atom_idx];
    'tuples: for tuple in inst.tuples_of(&atom.relation) {
        let mut bound_here: Vec<&str> = Vec::new();
        for (term, value) in atom.terms.iter().zip(&tuple.values) {
            let ok = match term {
                Term::Constant(c) => c == value,
                Term::Variable(v) => match assignment.get(v.as_str()) {
                    Some(existing) => existing == value,
                    None => {
                        assignment.insert(v.clone(), value.clone());
                        bound_here.push(v);
                        true
                    }
                },
            };
            if !ok {
                for v in &bound_here {
                    assignment.remove(*v);
                }
                continue 'tuples;
            }
        }
        support.push(tuple.id());
        scan(q, inst, atom_idx + 1, assignment, support, out);
        support.pop();
        for v in &bound_here {
            assignment.remove(*v);
        }
    }
}

/// Deduplicates witnesses by tuple set, keeping the first witness (in
/// the given order) as the representative for support and assignment.
pub fn provenance_dnf(witnesses: &[Witness]) -> ProvenanceDnf {
    let mut seen: BTreeSet<&BTreeSet<String>> = BTreeSet::new();
    let mut terms = Vec::new();
    for w in witnesses {
        if seen.insert(&w.tuple_set) {
            terms.push(DnfTerm {
                tuple_set: w.tuple_set.clone(),
                support: w.support.clone(),
                assignment: w.assignment.clone(),
            });
        }
    }
    ProvenanceDnf { terms }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{random_instance, Semantics};
    use crate::query::parse_query;
    use crate::testutil::{cycle3_instance, edge_path_query, mcdormand_instance, oscar_query};

    #[test]
    fn single_join_witness() {
        let q = parse_query("q() :- R(x,y), S(y,z).").unwrap();
        let inst = crate::testutil::instance_from_rows(
            Semantics::Set,
            &[("R", &[&["1", "2"]]), ("S", &[&["2", "3"]])],
        );
        let ws = enumerate_witnesses(&q, &inst);
        assert_eq!(ws.len(), 1);
        let w = &ws[0];
        assert_eq!(w.assignment["x"], "1");
        assert_eq!(w.assignment["y"], "2");
        assert_eq!(w.assignment["z"], "3");
        assert_eq!(w.support, ["R:1", "S:1"]);
    }

    #[test]
    fn mcdormand_has_two_witnesses() {
        let q = oscar_query();
        let inst = mcdormand_instance(Semantics::Set, 1);
        let ws = enumerate_witnesses(&q, &inst);
        assert_eq!(ws.len(), 2);
        let sets: Vec<Vec<&str>> = ws
            .iter()
            .map(|w| w.tuple_set.iter().map(|s| s.as_str()).collect())
            .collect();
        assert!(sets.contains(&vec!["ActsIn:1", "DirectedBy:1", "Oscar:1", "Spouse:1"]));
        assert!(sets.contains(&vec!["ActsIn:2", "DirectedBy:2", "Oscar:1", "Spouse:1"]));
    }

    #[test]
    fn self_join_path_on_directed_cycle() {
        let q = edge_path_query();
        let inst = cycle3_instance();
        let ws = enumerate_witnesses(&q, &inst);
        assert_eq!(ws.len(), 3);
        // Each witness walks two consecutive edges of the cycle.
        for w in &ws {
            assert_eq!(w.tuple_set.len(), 2);
        }
    }

    #[test]
    fn witness_order_is_lexicographic_by_assignment() {
        let q = edge_path_query();
        let inst = cycle3_instance();
        let ws = enumerate_witnesses(&q, &inst);
        let xs: Vec<&str> = ws.iter().map(|w| w.assignment["x"].as_str()).collect();
        assert_eq!(xs, ["1", "2", "3"]);
    }

    #[test]
    fn constants_filter_matches() {
        let q = parse_query("q() :- R(x, \"two\").").unwrap();
        let inst = crate::testutil::instance_from_rows(
            Semantics::Set,
            &[("R", &[&["a", "one"], &["b", "two"], &["c", "two"]])],
        );
        let ws = enumerate_witnesses(&q, &inst);
        assert_eq!(ws.len(), 2);
        assert!(ws.iter().all(|w| w.support[0] != "R:1"));
    }

    #[test]
    fn repeated_variable_requires_equal_columns() {
        let q = parse_query("q() :- R(x,x).").unwrap();
        let inst = crate::testutil::instance_from_rows(
            Semantics::Set,
            &[("R", &[&["a", "a"], &["a", "b"]])],
        );
        let ws = enumerate_witnesses(&q, &inst);
        assert_eq!(ws.len(), 1);
        assert_eq!(ws[0].support, ["R:1"]);
    }

    #[test]
    fn provenance_merges_equal_tuple_sets() {
        // Both directions of the symmetric pair use the same two edges.
        let q = parse_query("q() :- E(x,y), E(y,x).").unwrap();
        let inst = crate::testutil::instance_from_rows(
            Semantics::Set,
            &[("E", &[&["1", "2"], &["2", "1"]])],
        );
        let ws = enumerate_witnesses(&q, &inst);
        assert_eq!(ws.len(), 2);
        let dnf = provenance_dnf(&ws);
        assert_eq!(dnf.terms.len(), 1);
        // The representative is the first witness in enumeration order.
        assert_eq!(ws[0].assignment, dnf.terms[0].assignment);
    }

    #[test]
    fn empty_instance_has_no_witnesses() {
        let q = parse_query("q() :- R(x,y), S(y,z).").unwrap();
        let inst = random_instance(&q, 0, 3, 1, Semantics::Set);
        assert!(enumerate_witnesses(&q, &inst).is_empty());
        assert!(provenance_dnf(&[]).is_empty());
    }

    /// Cross-check the backtracking scan against a naive product
    /// enumeration on small random instances.
    #[test]
    fn agrees_with_naive_product_enumeration() {
        let queries = [
            parse_query("q() :- R(x,y), S(y,z).").unwrap(),
            oscar_query(),
            edge_path_query(),
        ];
        for q in &queries {
            for seed in 0..40 {
                let inst = random_instance(q, 4, 3, seed, Semantics::Set);
                let fast = enumerate_witnesses(q, &inst);
                let slow = naive_witnesses(q, &inst);
                assert_eq!(fast.len(), slow.len(), "query {q} seed {seed}");
                for w in &fast {
                    assert!(slow.contains(&w.support), "query {q} seed {seed}");
                }
            }
        }
    }

    /// Deleting one tuple removes exactly the witnesses containing it.
    #[test]
    fn deletion_removes_exactly_covering_witnesses() {
        let q = oscar_query();
        let inst = mcdormand_instance(Semantics::Set, 1);
        let before = enumerate_witnesses(&q, &inst);
        for t in inst.all_tuples() {
            let id = t.id();
            let smaller = inst
                .delete_tuples(&std::iter::once(id.clone()).collect())
                .unwrap();
            let after = enumerate_witnesses(&q, &smaller);
            let expected: Vec<&Witness> =
                before.iter().filter(|w| !w.tuple_set.contains(&id)).collect();
            assert_eq!(after.len(), expected.len());
            for (a, e) in after.iter().zip(expected) {
                assert_eq!(a.support, e.support);
            }
        }
    }

    fn naive_witnesses(q: &Query, inst: &Instance) -> Vec<Vec<String>> {
        // Cartesian product over per-atom tuple choices, checked whole.
        let choices: Vec<&[crate::instance::TupleRef]> = q
            .atoms
            .iter()
            .map(|a| inst.tuples_of(&a.relation))
            .collect();
        let mut out = Vec::new();
        let mut idx = vec![0usize; q.atoms.len()];
        if choices.iter().any(|c| c.is_empty()) {
            return out;
        }
        loop {
            let picked: Vec<&crate::instance::TupleRef> =
                idx.iter().zip(&choices).map(|(&i, c)| &c[i]).collect();
            let mut assignment: BTreeMap<&str, &str> = BTreeMap::new();
            let mut ok = true;
            'atoms: for (atom, tuple) in q.atoms.iter().zip(&picked) {
                for (term, value) in atom.terms.iter().zip(&tuple.values) {
                    match term {
                        Term::Constant(c) => {
                            if c != value {
                                ok = false;
                                break 'atoms;
                            }
                        }
                        Term::Variable(v) => match assignment.get(v.as_str()) {
                            Some(existing) => {
                                if *existing != value {
                                    ok = false;
                                    break 'atoms;
                                }
                            }
                            None => {
                                assignment.insert(v, value);
                            }
                        },
                    }
                }
            }
            if ok {
                out.push(picked.iter().map(|t| t.id()).collect());
            }
            let mut k = q.atoms.len();
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < choices[k].len() {
                    break;
                }
                idx[k] = 0;
            }
        }
    }
}
