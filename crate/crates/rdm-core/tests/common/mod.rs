//! Helpers shared by the integration tests: locating the bundled
//! fixtures and loading query/data pairs from them. Each test binary
//! uses its own subset.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use rdm_core::instance::{load_instance, Instance, Semantics};
use rdm_core::query::{parse_query, Query};

pub fn fixture_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture_query(name: &str) -> Query {
    let path = fixture_root().join("queries").join(format!("{name}.dl"));
    let text = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("reading {}: {e}", path.display()));
    parse_query(&text).unwrap_or_else(|e| panic!("parsing {}: {e}", path.display()))
}

pub fn fixture_instance(name: &str, q: &Query, semantics: Semantics) -> Instance {
    let dir = fixture_root().join("data").join(name);
    let (inst, warnings) = load_instance(&dir, q, semantics)
        .unwrap_or_else(|e| panic!("loading {}: {e}", dir.display()));
    assert!(warnings.is_empty(), "unexpected warnings: {warnings:?}");
    inst
}

pub fn golden(name: &str) -> serde_json::Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(format!("{name}.json"));
    let text = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("reading {}: {e}", path.display()));
    serde_json::from_str(&text).unwrap_or_else(|e| panic!("parsing {}: {e}", path.display()))
}
