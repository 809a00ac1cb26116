//! Bounded-variable two-phase primal simplex, dense tableau, Bland's rule.
//!
//! All variables are shifted so their lower bound is zero, and nonbasic
//! variables sitting at their upper bound are handled by flipping the
//! column (substituting `x -> width - x`), which restores the invariant
//! that every nonbasic variable is at zero. Phase 1 minimizes the sum of
//! artificial variables; phase 2 minimizes the real objective with the
//! artificials pinned to zero.

use crate::model::{LinearModel, Sense};
use crate::{LinearSolution, LpError, Scalar, SolveStats, Status};

/// Solves the LP relaxation of `model` exactly (integrality flags are
/// ignored). Returns a vertex solution; infeasibility is reported in the
/// solution status, unboundedness as an error.
pub fn solve_lp<S: Scalar>(model: &LinearModel<S>) -> Result<LinearSolution<S>, LpError> {
    let bounds: Vec<(S, S)> = model
        .vars()
        .iter()
        .map(|v| (v.lower.clone(), v.upper.clone()))
        .collect();
    let (outcome, iterations) = solve_lp_bounded(model, &bounds)?;
    let stats = SolveStats {
        simplex_iterations: iterations,
        branch_nodes: 0,
    };
    match outcome {
        None => Ok(LinearSolution::infeasible(stats)),
        Some((values, objective)) => Ok(LinearSolution {
            status: Status::Optimal,
            objective,
            values,
            basic: true,
            stats,
        }),
    }
}

/// Core solve with explicit variable bounds (branch-and-bound tightens
/// them without touching the model). Returns `None` for infeasible,
/// otherwise the full assignment and exact objective, plus the pivot
/// count. Every optimal outcome is audited against the constraints and
/// the given bounds before being returned.
pub(crate) fn solve_lp_bounded<S: Scalar>(
    model: &LinearModel<S>,
    bounds: &[(S, S)],
) -> Result<(Option<(Vec<S>, S)>, u64), LpError> {
    debug_assert_eq!(bounds.len(), model.num_vars());
    for (lo, up) in bounds {
        if lo > up {
            return Ok((None, 0));
        }
    }
    let mut t = Tableau::build(model, bounds);
    t.run_phase(Phase::One)?;
    if !t.phase_one_feasible() {
        return Ok((None, t.iterations));
    }
    t.pin_artificials();
    t.run_phase(Phase::Two)?;
    let values = t.extract(bounds);
    let objective = model.objective_value(&values);

    // Exact audit: a returned "optimal" assignment must satisfy the model.
    for (i, (value, (lo, up))) in values.iter().zip(bounds).enumerate() {
        if value < lo || value > up {
            return Err(LpError::AuditFailed(format!(
                "variable {} = {} outside [{}, {}]",
                model.vars()[i].name,
                value,
                lo,
                up
            )));
        }
    }
    for (idx, con) in model.constraints().iter().enumerate() {
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
            return Err(LpError::AuditFailed(format!(
                "constraint c{idx} violated by optimal assignment"
            )));
        }
    }
    Ok((Some((values, objective)), t.iterations))
}

#[derive(Clone, Copy, PartialEq)]
enum Phase {
    One,
    Two,
}

struct Tableau<S> {
    ncols: usize,
    nstruct: usize,
    rows: Vec<Vec<S>>,
    rhs: Vec<S>,
    /// Phase-1 and phase-2 reduced-cost rows, updated by every pivot.
    obj1: Vec<S>,
    obj2: Vec<S>,
    /// Row index -> basic column.
    basis: Vec<usize>,
    /// Column -> row it is basic in, if any.
    basic_row: Vec<Option<usize>>,
    /// Column width (upper bound in shifted space); `None` is unbounded.
    width: Vec<Option<S>>,
    flipped: Vec<bool>,
    artificial: Vec<bool>,
    iterations: u64,
}

enum Step {
    Flip(usize),
    /// (entering col, row, leaving var goes to its upper bound)
    Pivot(usize, usize, bool),
}

impl<S: Scalar> Tableau<S> {
    fn build(model: &LinearModel<S>, bounds: &[(S, S)]) -> Self {
        let nstruct = model.num_vars();
        let m = model.num_constraints();
        // Column layout: structural, then one slack per inequality row,
        // then one artificial per row that needs one.
        let mut nslack = 0;
        for con in model.constraints() {
            if con.sense != Sense::Eq {
                nslack += 1;
            }
        }
        let max_cols = nstruct + nslack + m;
        let mut rows: Vec<Vec<S>> = Vec::with_capacity(m);
        let mut rhs: Vec<S> = Vec::with_capacity(m);
        let mut basis: Vec<usize> = Vec::with_capacity(m);
        let mut width: Vec<Option<S>> = bounds
            .iter()
            .map(|(lo, up)| Some(up.clone() - lo.clone()))
            .collect();
        width.resize(max_cols, None);
        let mut artificial = vec![false; max_cols];
        let mut next_col = nstruct;

        struct PendingRow<S> {
            coeffs: Vec<(usize, S)>,
            rhs: S,
            slack: Option<(usize, bool)>, // (col, coeff is +1)
        }
        let mut pending: Vec<PendingRow<S>> = Vec::with_capacity(m);
        for con in model.constraints() {
            // Shift structural variables to zero lower bound.
            let mut b = con.rhs.clone();
            let mut coeffs = Vec::with_capacity(con.terms.len());
            for (var, coeff) in &con.terms {
                b = b - coeff.clone() * bounds[var.index()].0.clone();
                if !coeff.is_zero() {
                    coeffs.push((var.index(), coeff.clone()));
                }
            }
            let slack = match con.sense {
                Sense::Le => {
                    let c = next_col;
                    next_col += 1;
                    Some((c, true))
                }
                Sense::Ge => {
                    let c = next_col;
                    next_col += 1;
                    Some((c, false))
                }
                Sense::Eq => None,
            };
            pending.push(PendingRow { coeffs, rhs: b, slack });
        }
        for p in &mut pending {
            // Normalize to a nonnegative right-hand side.
            if p.rhs < S::zero() {
                p.rhs = -p.rhs.clone();
                for (_, c) in &mut p.coeffs {
                    *c = -c.clone();
                }
                if let Some((_, pos)) = &mut p.slack {
                    *pos = !*pos;
                }
            }
        }
        for p in pending {
            let mut row = vec![S::zero(); max_cols];
            for (j, c) in p.coeffs {
                row[j] = c;
            }
            let basic_col = match p.slack {
                Some((col, true)) => {
                    row[col] = S::one();
                    col
                }
                other => {
                    if let Some((col, false)) = other {
                        row[col] = -S::one();
                    }
                    let art = next_col;
                    next_col += 1;
                    artificial[art] = true;
                    row[art] = S::one();
                    art
                }
            };
            rows.push(row);
            rhs.push(p.rhs);
            basis.push(basic_col);
        }
        let ncols = next_col;
        for row in &mut rows {
            row.truncate(ncols);
        }
        width.truncate(ncols);
        artificial.truncate(ncols);

        let mut basic_row = vec![None; ncols];
        for (i, &col) in basis.iter().enumerate() {
            basic_row[col] = Some(i);
        }
        // Phase-1 reduced costs: cost 1 on artificials, priced out over
        // the rows where an artificial starts basic.
        let mut obj1 = vec![S::zero(); ncols];
        for (j, flag) in artificial.iter().enumerate() {
            if *flag {
                obj1[j] = S::one();
            }
        }
        for (i, &col) in basis.iter().enumerate() {
            if artificial[col] {
                for j in 0..ncols {
                    if !rows[i][j].is_zero() {
                        obj1[j] = obj1[j].clone() - rows[i][j].clone();
                    }
                }
            }
        }
        let mut obj2 = vec![S::zero(); ncols];
        for (j, var) in model.vars().iter().enumerate() {
            obj2[j] = var.objective.clone();
        }
        Tableau {
            ncols,
            nstruct,
            rows,
            rhs,
            obj1,
            obj2,
            basis,
            basic_row,
            width,
            flipped: vec![false; ncols],
            artificial,
            iterations: 0,
        }
    }

    fn objective_row(&self, phase: Phase) -> &[S] {
        match phase {
            Phase::One => &self.obj1,
            Phase::Two => &self.obj2,
        }
    }

    /// Bland's rule: the lowest-index nonbasic column with a strictly
    /// negative reduced cost. Artificials never re-enter; fixed columns
    /// (zero width) cannot move and are skipped.
    fn choose_entering(&self, phase: Phase) -> Option<usize> {
        let obj = self.objective_row(phase);
        (0..self.ncols).find(|&j| {
            self.basic_row[j].is_none()
                && !self.artificial[j]
                && self.width[j] != Some(S::zero())
                && obj[j] < S::zero()
        })
    }

    /// Ratio test for an entering column. Candidates: the entering
    /// variable reaching its own upper bound (a bound flip), a basic
    /// variable dropping to zero, or a basic variable reaching its upper
    /// bound. Ties break on the lowest involved variable index.
    fn choose_step(&self, entering: usize) -> Result<Step, LpError> {
        let mut best: Option<(S, usize, Step)> = None;
        let consider = |t: S, var_idx: usize, step: Step, best: &mut Option<(S, usize, Step)>| {
            let replace = match best {
                None => true,
                Some((bt, bidx, _)) => t < *bt || (t == *bt && var_idx < *bidx),
            };
            if replace {
                *best = Some((t, var_idx, step));
            }
        };
        if let Some(w) = &self.width[entering] {
            consider(w.clone(), entering, Step::Flip(entering), &mut best);
        }
        for i in 0..self.rows.len() {
            let a = &self.rows[i][entering];
            if a.is_positive() {
                let t = self.rhs[i].clone() / a.clone();
                consider(t, self.basis[i], Step::Pivot(entering, i, false), &mut best);
            } else if a.is_negative() {
                if let Some(w) = &self.width[self.basis[i]] {
                    let t = (w.clone() - self.rhs[i].clone()) / (-a.clone());
                    consider(t, self.basis[i], Step::Pivot(entering, i, true), &mut best);
                }
            }
        }
        match best {
            Some((_, _, step)) => Ok(step),
            None => Err(LpError::Unbounded),
        }
    }

    fn run_phase(&mut self, phase: Phase) -> Result<(), LpError> {
        loop {
            let entering = match self.choose_entering(phase) {
                None => return Ok(()),
                Some(e) => e,
            };
            match self.choose_step(entering)? {
                Step::Flip(col) => self.flip(col),
                Step::Pivot(col, row, leaving_to_upper) => {
                    if leaving_to_upper {
                        // Send the leaving variable to its upper bound,
                        // then re-normalize the row before pivoting.
                        let old = self.basis[row];
                        self.flip(old);
                        self.negate_row(row);
                    }
                    self.pivot(col, row);
                }
            }
            self.iterations += 1;
        }
    }

    /// Substitutes `x -> width - x` for one column, keeping every
    /// nonbasic variable at zero in transformed coordinates.
    fn flip(&mut self, col: usize) {
        let w = self.width[col].clone().expect("flip of unbounded column");
        for i in 0..self.rows.len() {
            if !self.rows[i][col].is_zero() {
                self.rhs[i] = self.rhs[i].clone() - self.rows[i][col].clone() * w.clone();
                self.rows[i][col] = -self.rows[i][col].clone();
            }
        }
        self.obj1[col] = -self.obj1[col].clone();
        self.obj2[col] = -self.obj2[col].clone();
        self.flipped[col] = !self.flipped[col];
    }

    fn negate_row(&mut self, row: usize) {
        for v in &mut self.rows[row] {
            if !v.is_zero() {
                *v = -v.clone();
            }
        }
        self.rhs[row] = -self.rhs[row].clone();
    }

    fn pivot(&mut self, col: usize, row: usize) {
        let pv = self.rows[row][col].clone();
        debug_assert!(!pv.is_zero());
        if pv != S::one() {
            for v in &mut self.rows[row] {
                if !v.is_zero() {
                    *v = v.clone() / pv.clone();
                }
            }
            self.rhs[row] = self.rhs[row].clone() / pv;
        }
        let nz: Vec<usize> = (0..self.ncols)
            .filter(|&j| !self.rows[row][j].is_zero())
            .collect();
        let pivot_rhs = self.rhs[row].clone();
        for i in 0..self.rows.len() {
            if i == row {
                continue;
            }
            let f = self.rows[i][col].clone();
            if f.is_zero() {
                continue;
            }
            for &j in &nz {
                let delta = f.clone() * self.rows[row][j].clone();
                self.rows[i][j] = self.rows[i][j].clone() - delta;
            }
            self.rhs[i] = self.rhs[i].clone() - f * pivot_rhs.clone();
        }
        for obj in [&mut self.obj1, &mut self.obj2] {
            let f = obj[col].clone();
            if !f.is_zero() {
                for &j in &nz {
                    let delta = f.clone() * self.rows[row][j].clone();
                    obj[j] = obj[j].clone() - delta;
                }
            }
        }
        let old = self.basis[row];
        self.basic_row[old] = None;
        self.basis[row] = col;
        self.basic_row[col] = Some(row);
    }

    /// After phase 1: feasible iff every artificial sits at zero.
    fn phase_one_feasible(&self) -> bool {
        for (i, &col) in self.basis.iter().enumerate() {
            if self.artificial[col] && !self.rhs[i].is_zero() {
                return false;
            }
        }
        true
    }

    /// Fixes all artificial columns at zero so phase 2 cannot move them.
    fn pin_artificials(&mut self) {
        for j in 0..self.ncols {
            if self.artificial[j] {
                self.width[j] = Some(S::zero());
            }
        }
    }

    fn extract(&self, bounds: &[(S, S)]) -> Vec<S> {
        let mut values = Vec::with_capacity(self.nstruct);
        for j in 0..self.nstruct {
            let raw = match self.basic_row[j] {
                Some(i) => self.rhs[i].clone(),
                None => S::zero(),
            };
            let shifted = if self.flipped[j] {
                self.width[j].clone().expect("structural widths are finite") - raw
            } else {
                raw
            };
            values.push(bounds[j].0.clone() + shifted);
        }
        values
    }
}
