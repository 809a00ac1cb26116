//! Exact linear and mixed-integer programming for small, adversarial models.
//!
//! This crate provides a dense two-phase primal simplex and a best-bound
//! branch-and-bound on top of it. Everything is generic over an ordered
//! scalar type ([`Scalar`]); the intended instantiation is an
//! arbitrary-precision rational, for which solutions are exact: no
//! tolerances, no rounding, and integrality of a value is a decidable
//! question rather than a threshold test.
//!
//! Design constraints that shaped the implementation:
//!
//! * Determinism. Identical models produce identical solutions, bases and
//!   statistics. Entering/leaving variables follow Bland's rule (lowest
//!   index), branch nodes are explored best-bound with FIFO tie-breaking,
//!   and branching picks the most fractional variable with ties broken by
//!   the lowest variable id.
//! * Exactness over speed. The tableau is dense, there is no presolve, no
//!   cut generation and no floating-point fast path. Models with a few
//!   hundred rows solve quickly; anything much larger is out of scope.
//! * Every returned solution is re-checked against the original model
//!   (bounds, constraints, objective) before it is handed back. A failed
//!   audit is a hard error, never a silent misreport.
//!
//! All variables carry finite lower and upper bounds, which keeps every
//! relaxation bounded and makes the bounded-variable simplex the natural
//! formulation.

mod branch;
mod model;
mod simplex;

use std::fmt;

use num_traits::{Num, Signed};

pub use branch::{solve_mip, solve_mip_with, MipOptions, DEFAULT_NODE_LIMIT};
pub use model::{Constraint, LinearModel, Sense, VarId, Variable};
pub use simplex::solve_lp;

/// Scalar type the solver computes in.
///
/// `Num + Signed + Ord` covers field arithmetic with exact comparisons; the
/// extra methods expose integrality, rounding and construction from small
/// integers, which the branch-and-bound needs. Implementations must be
/// exact: `floor_int`/`ceil_int` return the enclosing integers as scalars,
/// and `is_integer` must be precise, not approximate.
pub trait Scalar: Num + Signed + Ord + Clone + fmt::Debug + fmt::Display + 'static {
    /// Embeds a small integer.
    fn from_i64(n: i64) -> Self;

    /// True when the value is an integer.
    fn is_integer(&self) -> bool;

    /// Largest integer `<= self`, as a scalar.
    fn floor_int(&self) -> Self;

    /// Smallest integer `>= self`, as a scalar.
    fn ceil_int(&self) -> Self;

    /// Distance to the nearest integer, in `[0, 1/2]`.
    fn frac_distance(&self) -> Self {
        let f = self.clone() - self.floor_int();
        let g = Self::one() - f.clone();
        if f <= g {
            f
        } else {
            g
        }
    }

    /// Renders the value for LP-format dumps: an exact decimal expansion
    /// when one exists, otherwise the raw representation.
    fn lp_literal(&self) -> String {
        self.to_string()
    }
}

/// The standard exact instantiation.
pub type Rational = num_rational::BigRational;

impl Scalar for Rational {
    fn from_i64(n: i64) -> Self {
        Rational::from_integer(n.into())
    }

    fn is_integer(&self) -> bool {
        num_rational::BigRational::is_integer(self)
    }

    fn floor_int(&self) -> Self {
        self.floor()
    }

    fn ceil_int(&self) -> Self {
        self.ceil()
    }

    fn lp_literal(&self) -> String {
        rational_decimal(self)
    }
}

/// Prints a rational exactly: as a plain decimal when the reduced
/// denominator is of the form 2^a * 5^b, otherwise as `p/q`.
pub fn rational_decimal(r: &Rational) -> String {
    use num_bigint::BigInt;
    use num_traits::{One, Zero};

    if r.is_integer() {
        return r.numer().to_string();
    }
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    let mut den = r.denom().clone();
    let mut twos = 0u32;
    let mut fives = 0u32;
    while (&den % &two).is_zero() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    if !den.is_one() {
        return format!("{}/{}", r.numer(), r.denom());
    }
    let k = twos.max(fives);
    let scale = BigInt::from(10).pow(k);
    let scaled = (r.numer() * &scale) / r.denom();
    let neg = scaled < BigInt::zero();
    let digits = scaled.magnitude().to_string();
    let k = k as usize;
    let (int_part, frac_part) = if digits.len() > k {
        let (a, b) = digits.split_at(digits.len() - k);
        (a.to_string(), b.to_string())
    } else {
        ("0".to_string(), format!("{:0>width$}", digits, width = k))
    };
    let sign = if neg { "-" } else { "" };
    format!("{sign}{int_part}.{frac_part}")
}

/// Solver outcome for both LP and MIP solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    /// An optimal solution was found.
    Optimal,
    /// No assignment satisfies the constraints (for MIP: no integral one).
    Infeasible,
}

/// Work counters reported with every solution.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SolveStats {
    /// Simplex pivots (bound flips included) across all LP solves.
    pub simplex_iterations: u64,
    /// LP relaxations solved during branch-and-bound; zero for plain LP
    /// solves, one for a MIP whose root relaxation was already integral.
    pub branch_nodes: u64,
}

/// Result of a solve.
///
/// When `status` is [`Status::Infeasible`], `objective` is zero and
/// `values` is empty; callers must check the status first.
#[derive(Debug, Clone)]
pub struct LinearSolution<S> {
    pub status: Status,
    pub objective: S,
    /// One value per model variable, in declaration order.
    pub values: Vec<S>,
    /// True when the assignment is a vertex (basic solution) of the
    /// model's own LP relaxation. LP solves always return vertices;
    /// branch-and-bound incumbents found below the root are vertices of a
    /// tightened subproblem instead, and report `false`.
    pub basic: bool,
    pub stats: SolveStats,
}

impl<S: Scalar> LinearSolution<S> {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    /// Value of one variable. Panics on an infeasible solution.
    pub fn value(&self, var: VarId) -> &S {
        &self.values[var.index()]
    }

    fn infeasible(stats: SolveStats) -> Self {
        LinearSolution {
            status: Status::Infeasible,
            objective: S::zero(),
            values: Vec::new(),
            basic: false,
            stats,
        }
    }
}

/// True when every listed variable takes an integer value.
pub fn is_integral<S: Scalar>(solution: &LinearSolution<S>, vars: &[VarId]) -> bool {
    vars.iter().all(|v| solution.values[v.index()].is_integer())
}

/// Errors reported by model construction and solving.
#[derive(Debug, thiserror::Error)]
pub enum LpError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("objective is unbounded below")]
    Unbounded,
    #[error("branch-and-bound node limit exceeded ({limit} nodes)")]
    NodeLimitExceeded { limit: u64 },
    #[error("solution failed the exact feasibility audit: {0}")]
    AuditFailed(String),
}
