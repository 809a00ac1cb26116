//! The bundled fixture files must load cleanly and describe exactly the
//! instances the unit tests build in code.

mod common;

use common::{fixture_instance, fixture_query, fixture_root};
use rdm_core::instance::{load_instance, Semantics};

#[test]
fn query_files_parse() {
    for name in ["two_chain", "oscar_spouse", "spouse_triangle", "edge_path"] {
        let q = fixture_query(name);
        assert!(!q.atoms.is_empty(), "{name}");
    }
}

#[test]
fn oscar_fixture_matches_the_expected_rows() {
    let q = fixture_query("oscar_spouse");
    let inst = fixture_instance("oscar_spouse", &q, Semantics::Set);
    assert_eq!(inst.tuples_of("Oscar").len(), 1);
    assert_eq!(inst.tuples_of("ActsIn").len(), 2);
    assert_eq!(inst.tuples_of("DirectedBy").len(), 2);
    assert_eq!(inst.tuples_of("Spouse").len(), 1);
    let oscar = &inst.tuples_of("Oscar")[0];
    assert_eq!(oscar.values, vec!["frances_mcdormand"]);
    assert_eq!(oscar.multiplicity, 1);
    let acts = inst.tuples_of("ActsIn");
    assert_eq!(acts[0].values, vec!["frances_mcdormand", "fargo"]);
    assert_eq!(acts[1].values, vec!["frances_mcdormand", "blood_simple"]);
}

#[test]
fn bag_fixture_doubles_only_the_oscar_tuple() {
    let q = fixture_query("oscar_spouse");
    let inst = fixture_instance("oscar_spouse_bag", &q, Semantics::Bag);
    assert_eq!(inst.tuples_of("Oscar")[0].multiplicity, 2);
    for rel in ["ActsIn", "DirectedBy", "Spouse"] {
        for t in inst.tuples_of(rel) {
            assert_eq!(t.multiplicity, 1, "{rel}");
        }
    }
}

#[test]
fn bag_fixture_is_rejected_under_set_semantics() {
    let q = fixture_query("oscar_spouse");
    let dir = fixture_root().join("data/oscar_spouse_bag");
    assert!(load_instance(&dir, &q, Semantics::Set).is_err());
}

#[test]
fn cycle_fixture_is_a_directed_three_cycle() {
    let q = fixture_query("edge_path");
    let inst = fixture_instance("cycle3", &q, Semantics::Set);
    let rows: Vec<&Vec<String>> = inst.tuples_of("E").iter().map(|t| &t.values).collect();
    assert_eq!(
        rows,
        vec![&vec!["1".to_string(), "2".to_string()],
             &vec!["2".to_string(), "3".to_string()],
             &vec!["3".to_string(), "1".to_string()]]
    );
}
