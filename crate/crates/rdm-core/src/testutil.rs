//! Shared fixtures for unit tests. Mirrors the CSV fixtures bundled
//! under `fixtures/` so unit tests need no filesystem access.

use crate::instance::{Instance, Semantics, TupleRef};
use crate::query::{parse_query, Query};

pub fn instance_from_rows(
    semantics: Semantics,
    relations: &[(&str, &[&[&str]])],
) -> Instance {
    let mut inst = Instance::new(semantics);
    for (name, rows) in relations {
        let tuples = rows
            .iter()
            .enumerate()
            .map(|(i, values)| TupleRef {
                relation: name.to_string(),
                row: i + 1,
                values: values.iter().map(|v| v.to_string()).collect(),
                multiplicity: 1,
            })
            .collect();
        inst.add_relation(name, tuples);
    }
    inst
}

/// `q() :- Oscar(a), ActsIn(a,m), DirectedBy(m,d), Spouse(a,d).`
pub fn oscar_query() -> Query {
    parse_query("q() :- Oscar(a), ActsIn(a,m), DirectedBy(m,d), Spouse(a,d).").unwrap()
}

/// `q() :- ActsIn(a,m), DirectedBy(m,d), Spouse(a,d).` (all three
/// variable pairs co-occur)
pub fn triangle_query() -> Query {
    parse_query("q() :- ActsIn(a,m), DirectedBy(m,d), Spouse(a,d).").unwrap()
}

pub fn two_chain_query() -> Query {
    parse_query("q() :- R(x,y), S(y,z).").unwrap()
}

/// `q() :- E(x,y), E(y,z).`
pub fn edge_path_query() -> Query {
    parse_query("q() :- E(x,y), E(y,z).").unwrap()
}

/// One Oscar winner in two movies by the same director she is married
/// to. Provenance: o1 s1 a1 d1 + o1 s1 a2 d2. `oscar_mult` sets the
/// Oscar tuple's multiplicity for bag fixtures.
pub fn mcdormand_instance(semantics: Semantics, oscar_mult: u32) -> Instance {
    let mut inst = instance_from_rows(
        semantics,
        &[
            ("Oscar", &[&["frances_mcdormand"]]),
            (
                "ActsIn",
                &[
                    &["frances_mcdormand", "fargo"],
                    &["frances_mcdormand", "blood_simple"],
                ],
            ),
            (
                "DirectedBy",
                &[&["fargo", "joel_coen"], &["blood_simple", "joel_coen"]],
            ),
            ("Spouse", &[&["frances_mcdormand", "joel_coen"]]),
        ],
    );
    if oscar_mult != 1 {
        let mut tuples = inst.tuples_of("Oscar").to_vec();
        tuples[0].multiplicity = oscar_mult;
        inst.add_relation("Oscar", tuples);
    }
    inst
}

/// Directed 3-cycle 1 -> 2 -> 3 -> 1.
pub fn cycle3_instance() -> Instance {
    instance_from_rows(
        Semantics::Set,
        &[("E", &[&["1", "2"], &["2", "3"], &["3", "1"]])],
    )
}
