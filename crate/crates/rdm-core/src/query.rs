//! Conjunctive queries and their textual format.
//!
//! A query file holds one boolean rule plus optional exogenous
//! declarations:
//!
//! ```text
//! % movies with an Oscar-winning actor
//! exogenous: Oscar.
//! q() :- Oscar(a), ActsIn(a, m).
//! ```
//!
//! Variables start with a lowercase letter; constants are double-quoted
//! strings or bare integers. Relations listed in `exogenous:` lines hold
//! facts that interventions may not delete. Only boolean queries are
//! accepted: the head is always `q()`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QueryError {
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("relation {relation} is used with arity {first} and with arity {second}")]
    ArityMismatch {
        relation: String,
        first: usize,
        second: usize,
    },
    #[error("query head must be q() with no arguments; only boolean queries are supported")]
    NonBooleanHead,
    #[error("every atom is exogenous; at least one endogenous atom is required")]
    AllExogenous,
    #[error("exogenous declaration names {0}, which appears in no atom")]
    UnknownExogenous(String),
    #[error("variable {0} does not occur in the query")]
    UnknownVariable(String),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Term {
    Variable(String),
    Constant(String),
}

impl Term {
    pub fn as_variable(&self) -> Option<&str> {
        match self {
            Term::Variable(v) => Some(v),
            Term::Constant(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Variable(v) => write!(f, "{v}"),
            // Integer constants round-trip bare; everything else needs
            // quotes so it cannot be mistaken for a variable.
            Term::Constant(c) => {
                if !c.is_empty() && c.chars().all(|ch| ch.is_ascii_digit()) {
                    write!(f, "{c}")
                } else {
                    write!(f, "\"{c}\"")
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub relation: String,
    pub terms: Vec<Term>,
}

impl Atom {
    pub fn arity(&self) -> usize {
        self.terms.len()
    }

    /// Variables in term order, repeats included.
    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().filter_map(|t| t.as_variable())
    }

    pub fn variable_set(&self) -> BTreeSet<&str> {
        self.variables().collect()
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.relation)?;
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{t}")?;
        }
        write!(f, ")")
    }
}

/// A boolean conjunctive query: a conjunction of atoms plus the set of
/// relations whose tuples are exogenous (not deletable).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub atoms: Vec<Atom>,
    pub exogenous: BTreeSet<String>,
}

impl Query {
    pub fn variables(&self) -> BTreeSet<&str> {
        self.atoms.iter().flat_map(|a| a.variables()).collect()
    }

    /// Distinct relation names, sorted.
    pub fn relations(&self) -> BTreeSet<&str> {
        self.atoms.iter().map(|a| a.relation.as_str()).collect()
    }

    pub fn relation_arity(&self, relation: &str) -> Option<usize> {
        self.atoms
            .iter()
            .find(|a| a.relation == relation)
            .map(|a| a.arity())
    }

    pub fn is_exogenous(&self, relation: &str) -> bool {
        self.exogenous.contains(relation)
    }

    pub fn endogenous_atom_indices(&self) -> Vec<usize> {
        (0..self.atoms.len())
            .filter(|&i| !self.is_exogenous(&self.atoms[i].relation))
            .collect()
    }

    /// True when no relation name occurs in two distinct atoms.
    pub fn is_self_join_free(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.atoms.iter().all(|a| seen.insert(&a.relation))
    }

    /// Indices of the atoms whose term list contains `v`.
    pub fn atoms_of_variable(&self, v: &str) -> Result<BTreeSet<usize>, QueryError> {
        let indices: BTreeSet<usize> = (0..self.atoms.len())
            .filter(|&i| self.atoms[i].variables().any(|x| x == v))
            .collect();
        if indices.is_empty() {
            return Err(QueryError::UnknownVariable(v.to_string()));
        }
        Ok(indices)
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.exogenous.is_empty() {
            write!(f, "exogenous: ")?;
            for (i, r) in self.exogenous.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{r}")?;
            }
            writeln!(f, ".")?;
        }
        write!(f, "q() :- ")?;
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ".")
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(String),
    Str(String),
    LParen,
    RParen,
    Comma,
    Period,
    Colon,
    Turnstile,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(s) => format!("integer `{s}`"),
            Tok::Str(s) => format!("string \"{s}\""),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Period => "`.`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Turnstile => "`:-`".into(),
        }
    }
}

struct Scanner {
    line: usize,
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Scanner {
    fn tokenize(line_no: usize, text: &str) -> Result<Scanner, QueryError> {
        let chars: Vec<char> = text.chars().collect();
        let mut toks = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            let col = i + 1;
            let c = chars[i];
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            match c {
                '(' => toks.push((Tok::LParen, col)),
                ')' => toks.push((Tok::RParen, col)),
                ',' => toks.push((Tok::Comma, col)),
                '.' => toks.push((Tok::Period, col)),
                ':' => {
                    if chars.get(i + 1) == Some(&'-') {
                        toks.push((Tok::Turnstile, col));
                        i += 1;
                    } else {
                        toks.push((Tok::Colon, col));
                    }
                }
                '"' => {
                    let start = i + 1;
                    let mut j = start;
                    while j < chars.len() && chars[j] != '"' {
                        j += 1;
                    }
                    if j == chars.len() {
                        return Err(QueryError::Syntax {
                            line: line_no,
                            col,
                            msg: "unterminated string constant".into(),
                        });
                    }
                    toks.push((Tok::Str(chars[start..j].iter().collect()), col));
                    i = j;
                }
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let start = i;
                    let mut j = i;
                    while j < chars.len()
                        && (chars[j].is_ascii_alphanumeric() || chars[j] == '_')
                    {
                        j += 1;
                    }
                    toks.push((Tok::Ident(chars[start..j].iter().collect()), col));
                    i = j - 1;
                }
                c if c.is_ascii_digit() => {
                    let start = i;
                    let mut j = i;
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    toks.push((Tok::Int(chars[start..j].iter().collect()), col));
                    i = j - 1;
                }
                other => {
                    return Err(QueryError::Syntax {
                        line: line_no,
                        col,
                        msg: format!("unexpected character `{other}`"),
                    });
                }
            }
            i += 1;
        }
        Ok(Scanner {
            line: line_no,
            toks,
            pos: 0,
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn col(&self) -> usize {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map(|(_, c)| *c)
            .unwrap_or(1)
    }

    fn next(&mut self, expecting: &str) -> Result<Tok, QueryError> {
        match self.toks.get(self.pos) {
            Some((t, _)) => {
                self.pos += 1;
                Ok(t.clone())
            }
            None => Err(self.err(format!("expected {expecting}, found end of line"))),
        }
    }

    fn expect(&mut self, want: Tok) -> Result<(), QueryError> {
        let got = self.next(&want.describe())?;
        if got == want {
            Ok(())
        } else {
            self.pos -= 1;
            Err(self.err(format!(
                "expected {}, found {}",
                want.describe(),
                got.describe()
            )))
        }
    }

    fn err(&self, msg: String) -> QueryError {
        QueryError::Syntax {
            line: self.line,
            col: self.col(),
            msg,
        }
    }

    fn done(&self) -> bool {
        self.pos == self.toks.len()
    }
}

/// Cuts a `%` comment, ignoring `%` inside string constants.
fn strip_comment(line: &str) -> &str {
    let mut in_str = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => in_str = !in_str,
            '%' if !in_str => return &line[..i],
            _ => {}
        }
    }
    line
}

pub fn parse_query(text: &str) -> Result<Query, QueryError> {
    let mut exogenous: BTreeSet<String> = BTreeSet::new();
    let mut atoms: Option<Vec<Atom>> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        let mut sc = Scanner::tokenize(line_no, line)?;
        match sc.peek() {
            Some(Tok::Ident(name)) if name == "exogenous" => {
                sc.next("identifier")?;
                sc.expect(Tok::Colon)?;
                loop {
                    match sc.next("relation name")? {
                        Tok::Ident(rel) => exogenous.insert(rel),
                        other => {
                            return Err(sc.err(format!(
                                "expected relation name, found {}",
                                other.describe()
                            )))
                        }
                    };
                    match sc.next("`,` or `.`")? {
                        Tok::Comma => continue,
                        Tok::Period => break,
                        other => {
                            return Err(sc.err(format!(
                                "expected `,` or `.`, found {}",
                                other.describe()
                            )))
                        }
                    }
                }
                if !sc.done() {
                    return Err(sc.err("trailing input after `.`".into()));
                }
            }
            _ => {
                if atoms.is_some() {
                    return Err(sc.err("a query file may contain only one rule".into()));
                }
                atoms = Some(parse_rule(&mut sc)?);
            }
        }
    }

    let atoms = atoms.ok_or(QueryError::Syntax {
        line: text.lines().count().max(1),
        col: 1,
        msg: "no rule found; expected `q() :- ...`".into(),
    })?;

    // Arity must be consistent across every atom of a relation.
    let mut arities: BTreeMap<&str, usize> = BTreeMap::new();
    for atom in &atoms {
        match arities.get(atom.relation.as_str()) {
            None => {
                arities.insert(&atom.relation, atom.arity());
            }
            Some(&first) if first != atom.arity() => {
                return Err(QueryError::ArityMismatch {
                    relation: atom.relation.clone(),
                    first,
                    second: atom.arity(),
                });
            }
            Some(_) => {}
        }
    }
    for rel in &exogenous {
        if !arities.contains_key(rel.as_str()) {
            return Err(QueryError::UnknownExogenous(rel.clone()));
        }
    }
    if atoms.iter().all(|a| exogenous.contains(&a.relation)) {
        return Err(QueryError::AllExogenous);
    }

    Ok(Query { atoms, exogenous })
}

fn parse_rule(sc: &mut Scanner) -> Result<Vec<Atom>, QueryError> {
    match sc.next("rule head `q`")? {
        Tok::Ident(h) if h == "q" => {}
        other => {
            return Err(sc.err(format!(
                "expected rule head `q`, found {}",
                other.describe()
            )))
        }
    }
    sc.expect(Tok::LParen)?;
    if sc.peek() != Some(&Tok::RParen) {
        return Err(QueryError::NonBooleanHead);
    }
    sc.expect(Tok::RParen)?;
    sc.expect(Tok::Turnstile)?;

    let mut atoms = Vec::new();
    loop {
        atoms.push(parse_atom(sc)?);
        match sc.next("`,` or `.`")? {
            Tok::Comma => continue,
            Tok::Period => break,
            other => {
                return Err(sc.err(format!(
                    "expected `,` or `.`, found {}",
                    other.describe()
                )))
            }
        }
    }
    if !sc.done() {
        return Err(sc.err("trailing input after `.`".into()));
    }
    Ok(atoms)
}

fn parse_atom(sc: &mut Scanner) -> Result<Atom, QueryError> {
    let relation = match sc.next("relation name")? {
        Tok::Ident(r) => r,
        other => {
            return Err(sc.err(format!(
                "expected relation name, found {}",
                other.describe()
            )))
        }
    };
    sc.expect(Tok::LParen)?;
    let mut terms = Vec::new();
    loop {
        match sc.next("variable or constant")? {
            Tok::Ident(name) => {
                let starts_lower = name.chars().next().is_some_and(|c| c.is_ascii_lowercase());
                if !starts_lower {
                    return Err(sc.err(format!(
                        "`{name}` is not a variable (variables start with a lowercase \
                         letter) nor a constant (constants are quoted or integers)"
                    )));
                }
                terms.push(Term::Variable(name));
            }
            Tok::Int(digits) => terms.push(Term::Constant(digits)),
            Tok::Str(s) => terms.push(Term::Constant(s)),
            other => {
                return Err(sc.err(format!(
                    "expected variable or constant, found {}",
                    other.describe()
                )))
            }
        }
        match sc.next("`,` or `)`")? {
            Tok::Comma => continue,
            Tok::RParen => break,
            other => {
                return Err(sc.err(format!(
                    "expected `,` or `)`, found {}",
                    other.describe()
                )))
            }
        }
    }
    Ok(Atom { relation, terms })
}
