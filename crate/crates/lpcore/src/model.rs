use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::{LpError, Scalar};

/// Handle to a model variable. Only valid for the model that issued it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub(crate) usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Constraint sense.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

/// A decision variable with finite bounds.
#[derive(Debug, Clone)]
pub struct Variable<S> {
    pub name: String,
    pub lower: S,
    pub upper: S,
    /// Branch-and-bound enforces integrality only for flagged variables.
    pub integral: bool,
    pub objective: S,
}

/// A linear constraint; `terms` holds each variable at most once.
#[derive(Debug, Clone)]
pub struct Constraint<S> {
    pub terms: Vec<(VarId, S)>,
    pub sense: Sense,
    pub rhs: S,
}

/// A minimization model: variables with finite bounds, linear constraints,
/// a linear objective. The builder validates as it goes, so a constructed
/// model is always internally consistent.
#[derive(Debug, Clone, Default)]
pub struct LinearModel<S> {
    vars: Vec<Variable<S>>,
    constraints: Vec<Constraint<S>>,
}

impl<S: Scalar> LinearModel<S> {
    pub fn new() -> Self {
        LinearModel {
            vars: Vec::new(),
            constraints: Vec::new(),
        }
    }

    /// Adds a variable. `lower <= upper` is required; both bounds must be
    /// finite values of `S`, which the type already guarantees.
    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        lower: S,
        upper: S,
        integral: bool,
        objective: S,
    ) -> Result<VarId, LpError> {
        let name = name.into();
        if lower > upper {
            return Err(LpError::InvalidModel(format!(
                "variable {name}: lower bound {lower} exceeds upper bound {upper}"
            )));
        }
        self.vars.push(Variable {
            name,
            lower,
            upper,
            integral,
            objective,
        });
        Ok(VarId(self.vars.len() - 1))
    }

    /// Convenience for a `[0, 1]` variable.
    pub fn add_binary(
        &mut self,
        name: impl Into<String>,
        integral: bool,
        objective: S,
    ) -> Result<VarId, LpError> {
        self.add_var(name, S::zero(), S::one(), integral, objective)
    }

    /// Adds a constraint. Repeated variables are merged by summing their
    /// coefficients; an empty term list is allowed and encodes the
    /// constant constraint `0 <sense> rhs`.
    pub fn add_constraint(
        &mut self,
        terms: impl IntoIterator<Item = (VarId, S)>,
        sense: Sense,
        rhs: S,
    ) -> Result<(), LpError> {
        let mut merged: BTreeMap<VarId, S> = BTreeMap::new();
        for (var, coeff) in terms {
            if var.index() >= self.vars.len() {
                return Err(LpError::InvalidModel(format!(
                    "constraint references unknown variable index {}",
                    var.index()
                )));
            }
            let entry = merged.entry(var).or_insert_with(S::zero);
            *entry = entry.clone() + coeff;
        }
        self.constraints.push(Constraint {
            terms: merged.into_iter().collect(),
            sense,
            rhs,
        });
        Ok(())
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn var(&self, id: VarId) -> &Variable<S> {
        &self.vars[id.index()]
    }

    pub fn vars(&self) -> &[Variable<S>] {
        &self.vars
    }

    pub fn constraints(&self) -> &[Constraint<S>] {
        &self.constraints
    }

    pub fn var_ids(&self) -> impl Iterator<Item = VarId> {
        (0..self.vars.len()).map(VarId)
    }

    /// Ids of the variables flagged integral.
    pub fn integral_vars(&self) -> Vec<VarId> {
        self.var_ids()
            .filter(|v| self.vars[v.index()].integral)
            .collect()
    }

    /// Evaluates the objective at a full assignment.
    pub fn objective_value(&self, values: &[S]) -> S {
        let mut total = S::zero();
        for (var, value) in self.vars.iter().zip(values) {
            total = total + var.objective.clone() * value.clone();
        }
        total
    }

    /// Exact feasibility check of a full assignment against bounds and
    /// constraints. Returns the first violation as an error string.
    pub fn check_feasible(&self, values: &[S]) -> Result<(), String> {
        if values.len() != self.vars.len() {
            return Err(format!(
                "assignment has {} values for {} variables",
                values.len(),
                self.vars.len()
            ));
        }
        for (var, value) in self.vars.iter().zip(values) {
            if *value < var.lower || *value > var.upper {
                return Err(format!(
                    "variable {} = {} violates bounds [{}, {}]",
                    var.name, value, var.lower, var.upper
                ));
            }
        }
        for (idx, con) in self.constraints.iter().enumerate() {
            let mut lhs = S::zero();
            for (var, coeff) in &con.terms {
                lhs = lhs + coeff.clone() * values[var.index()].clone();
            }
            let ok = match con.sense {
                Sense::Le => lhs <= con.rhs,
                Sense::Ge => lhs >= con.rhs,
                Sense::Eq => lhs == con.rhs,
            };
            if !ok {
                return Err(format!(
                    "constraint c{idx}: lhs {} violates {} {}",
                    lhs,
                    con.sense.symbol(),
                    con.rhs
                ));
            }
        }
        Ok(())
    }

    /// Renders the model in LP text format for eyeballing and for
    /// cross-checking against external solvers. Variable names are
    /// sanitized to `[A-Za-z0-9_]`; numbers print as exact decimals where
    /// possible and `p/q` otherwise.
    pub fn dump_lp(&self) -> String {
        let name = |i: usize| -> String {
            let raw = &self.vars[i].name;
            let mut s: String = raw
                .chars()
                .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
                .collect();
            if s.is_empty() || s.chars().next().unwrap().is_ascii_digit() {
                s.insert(0, 'v');
            }
            s
        };
        let mut out = String::new();
        out.push_str("Minimize\n obj:");
        let mut first = true;
        for (i, v) in self.vars.iter().enumerate() {
            if v.objective.is_zero() {
                continue;
            }
            write_term(&mut out, &mut first, &v.objective, &name(i));
        }
        if first {
            out.push_str(" 0");
        }
        out.push_str("\nSubject To\n");
        for (idx, con) in self.constraints.iter().enumerate() {
            let _ = write!(out, " c{idx}:");
            let mut first = true;
            for (var, coeff) in &con.terms {
                write_term(&mut out, &mut first, coeff, &name(var.index()));
            }
            if first {
                out.push_str(" 0");
            }
            let _ = writeln!(out, " {} {}", con.sense.symbol(), con.rhs.lp_literal());
        }
        out.push_str("Bounds\n");
        for (i, v) in self.vars.iter().enumerate() {
            let _ = writeln!(
                out,
                " {} <= {} <= {}",
                v.lower.lp_literal(),
                name(i),
                v.upper.lp_literal()
            );
        }
        let integrals: Vec<String> = self
            .vars
            .iter()
            .enumerate()
            .filter(|(_, v)| v.integral)
            .map(|(i, _)| name(i))
            .collect();
        if !integrals.is_empty() {
            out.push_str("General\n");
            for n in integrals {
                let _ = writeln!(out, " {n}");
            }
        }
        out.push_str("End\n");
        out
    }
}

fn write_term<S: Scalar>(out: &mut String, first: &mut bool, coeff: &S, name: &str) {
    if coeff.is_negative() {
        let _ = write!(out, " - {} {}", (-coeff.clone()).lp_literal(), name);
    } else if *first {
        let _ = write!(out, " {} {}", coeff.lp_literal(), name);
    } else {
        let _ = write!(out, " + {} {}", coeff.lp_literal(), name);
    }
    *first = false;
}
