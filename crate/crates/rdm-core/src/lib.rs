//! Resilience, causal responsibility, and minimal provenance
//! factorization for conjunctive queries over concrete database
//! instances.
//!
//! The pipeline is: parse a query ([`query`]), load or generate an
//! instance ([`instance`]), enumerate witnesses ([`witness`]), then
//! either intervene ([`interventions`]: how few tuples must go to kill
//! every witness, or to make one tuple counterfactual) or compress
//! ([`factorize`]: the shortest factorized form of the provenance).
//! All solving goes through exact-rational linear programs, relaxation
//! first, branch-and-bound only when the relaxed vertex is fractional.
//! [`oracle`] holds brute-force references used by the test suites, and
//! [`classify`] predicts tractability from query shape alone.

pub mod classify;
pub mod factorize;
pub mod instance;
pub mod interventions;
pub mod oracle;
pub mod query;
pub mod report;
pub mod witness;

#[cfg(test)]
pub(crate) mod testutil;

/// The scalar every solver in this crate computes with.
pub type Rat = lpcore::Rational;
/// Minimization model over [`Rat`].
pub type Model = lpcore::LinearModel<Rat>;
/// Solver output over [`Rat`].
pub type Solution = lpcore::LinearSolution<Rat>;

/// Shorthand for integer-valued rationals.
pub fn rat(n: i64) -> Rat {
    Rat::from_integer(n.into())
}

/// Options shared by the solving entry points.
#[derive(Debug, Clone, Default)]
pub struct SolveOptions {
    /// Branch-and-bound node cap; `None` uses the solver default.
    pub node_limit: Option<u64>,
}

impl SolveOptions {
    pub(crate) fn mip(&self) -> lpcore::MipOptions {
        let mut o = lpcore::MipOptions::default();
        if let Some(limit) = self.node_limit {
            o.node_limit = limit;
        }
        o
    }
}
