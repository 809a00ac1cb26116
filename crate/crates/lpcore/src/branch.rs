//! Best-bound branch-and-bound over the exact simplex.
//!
//! Nodes are LP relaxations with tightened variable bounds. The search
//! pops the node with the smallest LP bound (FIFO among ties), branches
//! on the most fractional integral variable (lowest id among ties) and
//! prunes any node whose bound is not strictly better than the incumbent.
//! With exact arithmetic the first incumbent found at a given objective
//! is kept, which makes the reported solution deterministic.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::model::{LinearModel, VarId};
use crate::simplex::solve_lp_bounded;
use crate::{LinearSolution, LpError, Scalar, SolveStats, Status};

/// Default cap on branch-and-bound nodes (LP relaxations solved).
pub const DEFAULT_NODE_LIMIT: u64 = 1_000_000;

/// Branch-and-bound knobs.
#[derive(Debug, Clone)]
pub struct MipOptions {
    /// Hard cap on nodes; exceeding it is an error, never a silent
    /// best-effort answer.
    pub node_limit: u64,
}

impl Default for MipOptions {
    fn default() -> Self {
        MipOptions {
            node_limit: DEFAULT_NODE_LIMIT,
        }
    }
}

/// Solves `model` with integrality enforced on every flagged variable,
/// using the default options.
pub fn solve_mip<S: Scalar>(model: &LinearModel<S>) -> Result<LinearSolution<S>, LpError> {
    solve_mip_with(model, &MipOptions::default())
}

struct Node<S> {
    bound: S,
    bounds: Vec<(S, S)>,
    values: Vec<S>,
}

/// Solves `model` as a MIP. If the root relaxation is already integral
/// the result is identical to [`crate::solve_lp`] apart from counting one
/// branch node.
pub fn solve_mip_with<S: Scalar>(
    model: &LinearModel<S>,
    options: &MipOptions,
) -> Result<LinearSolution<S>, LpError> {
    let integral = model.integral_vars();
    let root_bounds: Vec<(S, S)> = model
        .vars()
        .iter()
        .map(|v| (v.lower.clone(), v.upper.clone()))
        .collect();
    let mut stats = SolveStats::default();

    let solve_node =
        |bounds: &[(S, S)], stats: &mut SolveStats| -> Result<Option<(Vec<S>, S)>, LpError> {
            if stats.branch_nodes >= options.node_limit {
                return Err(LpError::NodeLimitExceeded {
                    limit: options.node_limit,
                });
            }
            stats.branch_nodes += 1;
            let (outcome, iterations) = solve_lp_bounded(model, bounds)?;
            stats.simplex_iterations += iterations;
            Ok(outcome)
        };

    let root = match solve_node(&root_bounds, &mut stats)? {
        None => return Ok(LinearSolution::infeasible(stats)),
        Some(sol) => sol,
    };
    if all_integral(&root.0, &integral) {
        return Ok(LinearSolution {
            status: Status::Optimal,
            objective: root.1,
            values: root.0,
            basic: true,
            stats,
        });
    }

    let mut heap: BinaryHeap<Reverse<HeapKey<S>>> = BinaryHeap::new();
    let mut seq = 0u64;
    let mut nodes: Vec<Node<S>> = Vec::new();
    nodes.push(Node {
        bound: root.1,
        bounds: root_bounds,
        values: root.0,
    });
    heap.push(Reverse(HeapKey {
        bound: nodes[0].bound.clone(),
        seq,
        index: 0,
    }));
    let mut incumbent: Option<(Vec<S>, S)> = None;

    while let Some(Reverse(key)) = heap.pop() {
        if let Some((_, best)) = &incumbent {
            // Best-bound order: once the smallest open bound cannot beat
            // the incumbent, nothing later can either.
            if key.bound >= *best {
                break;
            }
        }
        let node = &nodes[key.index];
        let branch_var = most_fractional(&node.values, &integral)
            .expect("non-integral node was queued");
        let value = node.values[branch_var.index()].clone();
        let node_bounds = node.bounds.clone();
        for side in 0..2 {
            let mut child = node_bounds.clone();
            let (lo, up) = child[branch_var.index()].clone();
            if side == 0 {
                let new_up = value.floor_int();
                if new_up < lo {
                    continue;
                }
                child[branch_var.index()] = (lo, new_up);
            } else {
                let new_lo = value.ceil_int();
                if new_lo > up {
                    continue;
                }
                child[branch_var.index()] = (new_lo, up);
            }
            let solved = match solve_node(&child, &mut stats)? {
                None => continue,
                Some(s) => s,
            };
            if let Some((_, best)) = &incumbent {
                if solved.1 >= *best {
                    continue;
                }
            }
            if all_integral(&solved.0, &integral) {
                incumbent = Some((solved.0, solved.1));
            } else {
                seq += 1;
                nodes.push(Node {
                    bound: solved.1.clone(),
                    bounds: child,
                    values: solved.0,
                });
                heap.push(Reverse(HeapKey {
                    bound: solved.1,
                    seq,
                    index: nodes.len() - 1,
                }));
            }
        }
    }

    match incumbent {
        None => Ok(LinearSolution::infeasible(stats)),
        Some((values, objective)) => Ok(LinearSolution {
            status: Status::Optimal,
            objective,
            values,
            // Vertex of a tightened subproblem, not of the root polytope.
            basic: false,
            stats,
        }),
    }
}

fn all_integral<S: Scalar>(values: &[S], vars: &[VarId]) -> bool {
    vars.iter().all(|v| values[v.index()].is_integer())
}

/// Most fractional flagged variable; ties go to the lowest variable id.
fn most_fractional<S: Scalar>(values: &[S], vars: &[VarId]) -> Option<VarId> {
    let mut best: Option<(S, VarId)> = None;
    for &v in vars {
        let d = values[v.index()].frac_distance();
        if d.is_zero() {
            continue;
        }
        match &best {
            Some((bd, _)) if *bd >= d => {}
            _ => best = Some((d, v)),
        }
    }
    best.map(|(_, v)| v)
}

#[derive(PartialEq, Eq)]
struct HeapKey<S> {
    bound: S,
    seq: u64,
    index: usize,
}

impl<S: Ord> Ord for HeapKey<S> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.bound
            .cmp(&other.bound)
            .then(self.seq.cmp(&other.seq))
    }
}

impl<S: Ord> PartialOrd for HeapKey<S> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
