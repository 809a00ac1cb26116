//! Database instances: CSV ingestion, bag multiplicities, deterministic
//! random generation, and tuple deletion.
//!
//! A tuple's identity is its relation name plus its 1-based row index
//! (`ActsIn:2`), never its values. Under bag semantics the copies of a
//! tuple are one row with a `_mult` count, so deleting the tuple removes
//! every copy at once.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use thiserror::Error;

use crate::query::Query;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("no file for relation {relation}: expected {path}")]
    MissingRelation { relation: String, path: PathBuf },
    #[error("{file}:{line}: {msg}")]
    Malformed {
        file: String,
        line: usize,
        msg: String,
    },
    #[error("{file}:{line}: multiplicity must be a positive integer, got `{value}`")]
    BadMultiplicity {
        file: String,
        line: usize,
        value: String,
    },
    #[error("{file}: a _mult column requires bag semantics")]
    MultUnderSet { file: String },
    #[error("unknown tuple id {0}")]
    UnknownTupleId(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Semantics {
    Set,
    Bag,
}

impl Semantics {
    pub fn name(self) -> &'static str {
        match self {
            Semantics::Set => "set",
            Semantics::Bag => "bag",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TupleRef {
    pub relation: String,
    /// 1-based row index within the relation; stable under deletion of
    /// other tuples.
    pub row: usize,
    pub values: Vec<String>,
    pub multiplicity: u32,
}

impl TupleRef {
    pub fn id(&self) -> String {
        format!("{}:{}", self.relation, self.row)
    }
}

/// `"ActsIn:2"` -> `("ActsIn", 2)`.
pub fn parse_tuple_id(id: &str) -> Option<(&str, usize)> {
    let (rel, row) = id.rsplit_once(':')?;
    if rel.is_empty() {
        return None;
    }
    Some((rel, row.parse().ok()?))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub semantics: Semantics,
    relations: BTreeMap<String, Vec<TupleRef>>,
}

impl Instance {
    pub fn new(semantics: Semantics) -> Instance {
        Instance {
            semantics,
            relations: BTreeMap::new(),
        }
    }

    /// Registers a relation, possibly empty. Rows keep their insertion
    /// order; their `row` fields must already be set and increasing.
    pub fn add_relation(&mut self, name: &str, tuples: Vec<TupleRef>) {
        debug_assert!(tuples.windows(2).all(|w| w[0].row < w[1].row));
        self.relations.insert(name.to_string(), tuples);
    }

    pub fn relation_names(&self) -> impl Iterator<Item = &str> {
        self.relations.keys().map(|s| s.as_str())
    }

    pub fn tuples_of(&self, relation: &str) -> &[TupleRef] {
        self.relations.get(relation).map_or(&[], |v| v.as_slice())
    }

    /// All tuples, ordered by relation name then row.
    pub fn all_tuples(&self) -> impl Iterator<Item = &TupleRef> {
        self.relations.values().flatten()
    }

    pub fn get(&self, relation: &str, row: usize) -> Option<&TupleRef> {
        self.relations
            .get(relation)?
            .iter()
            .find(|t| t.row == row)
    }

    pub fn get_by_id(&self, id: &str) -> Option<&TupleRef> {
        let (rel, row) = parse_tuple_id(id)?;
        self.get(rel, row)
    }

    pub fn tuple_count(&self) -> usize {
        self.relations.values().map(|v| v.len()).sum()
    }

    /// Tuples of relations the query may delete from, ordered by
    /// relation then row. This ordering fixes solver variable order.
    pub fn endogenous_tuples(&self, q: &Query) -> Vec<&TupleRef> {
        self.all_tuples()
            .filter(|t| !q.is_exogenous(&t.relation))
            .collect()
    }

    /// Deletion cost of one tuple: 1 under set semantics, the
    /// multiplicity under bag semantics.
    pub fn weight(&self, t: &TupleRef) -> u64 {
        match self.semantics {
            Semantics::Set => 1,
            Semantics::Bag => u64::from(t.multiplicity),
        }
    }

    /// Returns a copy without the named tuples. Row indices of the
    /// remaining tuples are unchanged.
    pub fn delete_tuples(&self, ids: &BTreeSet<String>) -> Result<Instance, InstanceError> {
        for id in ids {
            if self.get_by_id(id).is_none() {
                return Err(InstanceError::UnknownTupleId(id.clone()));
            }
        }
        let relations = self
            .relations
            .iter()
            .map(|(name, tuples)| {
                let kept = tuples
                    .iter()
                    .filter(|t| !ids.contains(&t.id()))
                    .cloned()
                    .collect();
                (name.clone(), kept)
            })
            .collect();
        Ok(Instance {
            semantics: self.semantics,
            relations,
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        let relations: serde_json::Map<String, serde_json::Value> = self
            .relations
            .iter()
            .map(|(name, tuples)| {
                let rows: Vec<serde_json::Value> = tuples
                    .iter()
                    .map(|t| {
                        json!({
                            "row": t.row,
                            "values": t.values,
                            "mult": t.multiplicity,
                        })
                    })
                    .collect();
                (name.clone(), serde_json::Value::Array(rows))
            })
            .collect();
        json!({
            "semantics": self.semantics.name(),
            "relations": relations,
        })
    }
}

/// Loads `<Relation>.csv` for every relation of the query. Returns the
/// instance together with warnings about collapsed duplicate rows.
pub fn load_instance(
    dir: &Path,
    q: &Query,
    semantics: Semantics,
) -> Result<(Instance, Vec<String>), InstanceError> {
    let mut inst = Instance::new(semantics);
    let mut warnings = Vec::new();
    for relation in q.relations() {
        let arity = q.relation_arity(relation).unwrap();
        let path = dir.join(format!("{relation}.csv"));
        if !path.exists() {
            return Err(InstanceError::MissingRelation {
                relation: relation.to_string(),
                path,
            });
        }
        let text = fs::read_to_string(&path)?;
        let file = path.display().to_string();
        let tuples = parse_relation_csv(&file, &text, relation, arity, semantics, &mut warnings)?;
        inst.add_relation(relation, tuples);
    }
    Ok((inst, warnings))
}

fn parse_relation_csv(
    file: &str,
    text: &str,
    relation: &str,
    arity: usize,
    semantics: Semantics,
    warnings: &mut Vec<String>,
) -> Result<Vec<TupleRef>, InstanceError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| InstanceError::Malformed {
        file: file.into(),
        line: 1,
        msg: "empty file; expected a header row".into(),
    })?;
    let cols: Vec<&str> = header.split(',').collect();
    let has_mult = cols.last() == Some(&"_mult");
    let value_cols = if has_mult { cols.len() - 1 } else { cols.len() };
    if has_mult && semantics == Semantics::Set {
        return Err(InstanceError::MultUnderSet { file: file.into() });
    }
    if value_cols != arity {
        return Err(InstanceError::Malformed {
            file: file.into(),
            line: 1,
            msg: format!(
                "relation {relation} has arity {arity} in the query but {value_cols} \
                 value columns in the file"
            ),
        });
    }
    let expected: Vec<String> = (1..=arity).map(|i| format!("c{i}")).collect();
    if cols[..value_cols] != expected[..] {
        return Err(InstanceError::Malformed {
            file: file.into(),
            line: 1,
            msg: format!("header must be {}[,_mult]", expected.join(",")),
        });
    }

    let mut tuples: Vec<TupleRef> = Vec::new();
    let mut seen: BTreeMap<Vec<String>, usize> = BTreeMap::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.is_empty() {
            return Err(InstanceError::Malformed {
                file: file.into(),
                line: line_no,
                msg: "empty row".into(),
            });
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(InstanceError::Malformed {
                file: file.into(),
                line: line_no,
                msg: format!("expected {} fields, found {}", cols.len(), fields.len()),
            });
        }
        let values: Vec<String> = fields[..value_cols].iter().map(|s| s.to_string()).collect();
        let multiplicity = if has_mult {
            let raw = fields[value_cols];
            match raw.parse::<u32>() {
                Ok(m) if m >= 1 => m,
                _ => {
                    return Err(InstanceError::BadMultiplicity {
                        file: file.into(),
                        line: line_no,
                        value: raw.into(),
                    })
                }
            }
        } else {
            1
        };
        let row = idx; // data row index, 1-based: header was line 1
        match seen.get(&values) {
            Some(&first_row) => {
                // Duplicate value-rows collapse onto the first row id so
                // a tuple is never two deletable objects.
                match semantics {
                    Semantics::Set => warnings.push(format!(
                        "{file}: row {row} duplicates row {first_row}; collapsed"
                    )),
                    Semantics::Bag => {
                        let t = tuples.iter_mut().find(|t| t.row == first_row).unwrap();
                        t.multiplicity += multiplicity;
                        warnings.push(format!(
                            "{file}: row {row} duplicates row {first_row}; multiplicities summed"
                        ));
                    }
                }
            }
            None => {
                seen.insert(values.clone(), row);
                tuples.push(TupleRef {
                    relation: relation.to_string(),
                    row,
                    values,
                    multiplicity,
                });
            }
        }
    }
    Ok(tuples)
}

/// Writes one `<Relation>.csv` per relation in canonical form: header
/// `c1..ck`, plus a `_mult` column under bag semantics, rows in row-id
/// order, trailing newline.
pub fn save_instance(inst: &Instance, dir: &Path) -> Result<(), InstanceError> {
    fs::create_dir_all(dir)?;
    for relation in inst.relation_names().map(str::to_string).collect::<Vec<_>>() {
        let tuples = inst.tuples_of(&relation);
        let arity = tuples.first().map_or(1, |t| t.values.len());
        let mut out = String::new();
        let mut header: Vec<String> = (1..=arity).map(|i| format!("c{i}")).collect();
        if inst.semantics == Semantics::Bag {
            header.push("_mult".into());
        }
        out.push_str(&header.join(","));
        out.push('\n');
        for t in tuples {
            out.push_str(&t.values.join(","));
            if inst.semantics == Semantics::Bag {
                out.push_str(&format!(",{}", t.multiplicity));
            }
            out.push('\n');
        }
        let mut f = fs::File::create(dir.join(format!("{relation}.csv")))?;
        f.write_all(out.as_bytes())?;
    }
    Ok(())
}

/// Deterministic random instance: values uniform over `c1..c<domain>`,
/// bag multiplicities uniform in 1..=3. Per relation, rows are drawn
/// first, duplicates dropped, then multiplicities assigned, so the
/// tuple sets under set and bag semantics agree for a given seed.
pub fn random_instance(
    q: &Query,
    tuples_per_relation: usize,
    domain_size: usize,
    seed: u64,
    semantics: Semantics,
) -> Instance {
    assert!(domain_size >= 1, "domain_size must be at least 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inst = Instance::new(semantics);
    for relation in q.relations() {
        let arity = q.relation_arity(relation).unwrap();
        let mut rows: Vec<Vec<String>> = Vec::new();
        let mut seen: BTreeSet<Vec<String>> = BTreeSet::new();
        for _ in 0..tuples_per_relation {
            let values: Vec<String> = (0..arity)
                .map(|_| format!("c{}", 1 + rng.gen_range(0..domain_size)))
                .collect();
            if seen.insert(values.clone()) {
                rows.push(values);
            }
        }
        let tuples = rows
            .into_iter()
            .enumerate()
            .map(|(i, values)| {
                let multiplicity = match semantics {
                    Semantics::Set => 1,
                    Semantics::Bag => rng.gen_range(1..=3),
                };
                TupleRef {
                    relation: relation.to_string(),
                    row: i + 1,
                    values,
                    multiplicity,
                }
            })
            .collect();
        inst.add_relation(relation, tuples);
    }
    inst
}
