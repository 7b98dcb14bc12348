//! Dense two-phase simplex, generic over [`Scalar`].
//!
//! Problems are `maximize c.x` subject to linear rows and `x >= 0`. Entering
//! columns follow Dantzig's rule; after a run of degenerate pivots the solver
//! switches to Bland's rule until the objective moves again.

use crate::num::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct Constraint<T> {
    pub coeffs: Vec<(usize, T)>,
    pub sense: Sense,
    pub rhs: T,
}

#[derive(Debug, Clone)]
pub struct LinearProgram<T> {
    num_vars: usize,
    objective: Vec<T>,
    constraints: Vec<Constraint<T>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex iteration cap of {0} exceeded")]
    IterationCap(usize),
    #[error("invalid linear program: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone)]
pub struct LpSolution<T> {
    pub value: T,
    pub x: Vec<T>,
    /// One multiplier per constraint, in input order.
    pub duals: Vec<T>,
    pub iterations: usize,
}

impl<T: Scalar> LinearProgram<T> {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            num_vars,
            objective: vec![T::zero_val(); num_vars],
            constraints: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn constraints(&self) -> &[Constraint<T>] {
        &self.constraints
    }

    pub fn objective(&self) -> &[T] {
        &self.objective
    }

    /// Appends fresh variables and returns the index of the first.
    pub fn add_vars(&mut self, count: usize) -> usize {
        let first = self.num_vars;
        self.num_vars += count;
        self.objective.resize(self.num_vars, T::zero_val());
        first
    }

    pub fn set_objective(&mut self, var: usize, coeff: T) {
        self.objective[var] = coeff;
    }

    pub fn add_objective(&mut self, var: usize, coeff: &T) {
        self.objective[var] = self.objective[var].add(coeff);
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, T)>, sense: Sense, rhs: T) {
        self.constraints.push(Constraint { coeffs, sense, rhs });
    }

    /// Same problem with the objective negated.
    pub fn negated(&self) -> Self {
        let mut lp = self.clone();
        lp.objective = lp.objective.iter().map(Scalar::neg).collect();
        lp
    }

    fn validate(&self) -> Result<(), LpError> {
        if self.objective.len() != self.num_vars {
            return Err(LpError::Invalid("objective length differs from variable count".into()));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if let Some((v, _)) = c.coeffs.iter().find(|(v, _)| *v >= self.num_vars) {
                return Err(LpError::Invalid(format!("row {} references variable {}", i, v)));
            }
            if !c.rhs.as_f64().is_finite() {
                return Err(LpError::Invalid(format!("row {} has non-finite rhs", i)));
            }
        }
        Ok(())
    }

    /// Objective value at `x`.
    pub fn evaluate(&self, x: &[T]) -> T {
        self.objective
            .iter()
            .zip(x)
            .fold(T::zero_val(), |acc, (c, v)| acc.add(&c.mul(v)))
    }

    pub fn solve(&self) -> Result<LpSolution<T>, LpError> {
        simplex_solve(self)
    }
}

struct Tableau<T> {
    rows: Vec<Vec<T>>,
    obj: Vec<T>,
    basis: Vec<usize>,
    width: usize,
    iterations: usize,
    cap: usize,
}

const DEGENERATE_RUN: usize = 20;

impl<T: Scalar> Tableau<T> {
    fn rhs(&self, row: usize) -> &T {
        &self.rows[row][self.width]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let pivot = self.rows[row][col].clone();
        for v in self.rows[row].iter_mut() {
            *v = v.div(&pivot);
        }
        let pivot_row = self.rows[row].clone();
        for (r, other) in self.rows.iter_mut().enumerate() {
            if r == row {
                continue;
            }
            let factor = other[col].clone();
            if factor.is_nil() {
                continue;
            }
            for (v, p) in other.iter_mut().zip(&pivot_row) {
                if !p.is_nil() {
                    *v = v.sub(&factor.mul(p));
                }
            }
            other[col] = T::zero_val();
        }
        let factor = self.obj[col].clone();
        if !factor.is_nil() {
            for (v, p) in self.obj.iter_mut().zip(&pivot_row) {
                if !p.is_nil() {
                    *v = v.sub(&factor.mul(p));
                }
            }
            self.obj[col] = T::zero_val();
        }
        self.basis[row] = col;
    }

    /// Optimizes the current objective row over columns where `allowed` holds.
    fn optimize(&mut self, allowed: &dyn Fn(usize) -> bool) -> Result<(), LpError> {
        let mut degenerate = 0usize;
        loop {
            let bland = degenerate >= DEGENERATE_RUN;
            let mut entering: Option<usize> = None;
            for j in 0..self.width {
                if !allowed(j) || !self.obj[j].is_neg() {
                    continue;
                }
                match entering {
                    None => entering = Some(j),
                    Some(e) if !bland && self.obj[j] < self.obj[e] => entering = Some(j),
                    _ => {}
                }
                if bland {
                    break;
                }
            }
            let Some(col) = entering else {
                return Ok(());
            };
            let mut leaving: Option<(usize, T)> = None;
            for (r, row) in self.rows.iter().enumerate() {
                if !row[col].is_pos() {
                    continue;
                }
                let ratio = row[self.width].div(&row[col]);
                let better = match &leaving {
                    None => true,
                    Some((l, best)) => {
                        let diff = ratio.sub(best);
                        diff.is_neg() || (diff.is_nil() && self.basis[r] < self.basis[*l])
                    }
                };
                if better {
                    leaving = Some((r, ratio));
                }
            }
            let Some((row, ratio)) = leaving else {
                return Err(LpError::Unbounded);
            };
            self.iterations += 1;
            if self.iterations > self.cap {
                return Err(LpError::IterationCap(self.cap));
            }
            if ratio.is_nil() {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(row, col);
        }
    }
}

/// Solves `lp` to optimality.
pub fn simplex_solve<T: Scalar>(lp: &LinearProgram<T>) -> Result<LpSolution<T>, LpError> {
    lp.validate()?;
    let n = lp.num_vars;
    let m = lp.constraints.len();
    let cap = 10 * (m + n) * (m + n);

    // Column layout: original vars, one identity column per row (slack or
    // artificial), then surplus columns for >= rows.
    let mut flipped = vec![false; m];
    let mut senses = Vec::with_capacity(m);
    for (i, c) in lp.constraints.iter().enumerate() {
        let mut sense = c.sense;
        if c.rhs.is_neg() {
            flipped[i] = true;
            sense = match sense {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            };
        }
        senses.push(sense);
    }
    let surplus_count = senses.iter().filter(|s| **s == Sense::Ge).count();
    let width = n + m + surplus_count;
    let mut rows = Vec::with_capacity(m);
    let mut surplus_col = n + m;
    let mut artificial = vec![false; width];
    for (i, c) in lp.constraints.iter().enumerate() {
        let mut row = vec![T::zero_val(); width + 1];
        for (v, coeff) in &c.coeffs {
            row[*v] = row[*v].add(coeff);
        }
        row[width] = c.rhs.clone();
        if flipped[i] {
            for v in row.iter_mut() {
                *v = v.neg();
            }
        }
        row[n + i] = T::one_val();
        match senses[i] {
            Sense::Le => {}
            Sense::Eq => artificial[n + i] = true,
            Sense::Ge => {
                artificial[n + i] = true;
                row[surplus_col] = T::one_val().neg();
                surplus_col += 1;
            }
        }
        rows.push(row);
    }
    let basis: Vec<usize> = (0..m).map(|i| n + i).collect();
    let mut tab = Tableau {
        rows,
        obj: vec![T::zero_val(); width + 1],
        basis,
        width,
        iterations: 0,
        cap,
    };

    // Phase 1: maximize minus the sum of artificials.
    if artificial.iter().any(|a| *a) {
        for j in 0..width {
            if artificial[j] {
                tab.obj[j] = T::one_val();
            }
        }
        for r in 0..m {
            if artificial[tab.basis[r]] {
                let row = tab.rows[r].clone();
                for (v, p) in tab.obj.iter_mut().zip(&row) {
                    *v = v.sub(p);
                }
            }
        }
        tab.optimize(&|_| true)?;
        if tab.obj[width].is_neg() {
            return Err(LpError::Infeasible);
        }
        // Drive remaining artificials out of the basis.
        for r in 0..m {
            if artificial[tab.basis[r]] {
                let col = (0..width).find(|&j| !artificial[j] && !tab.rows[r][j].is_nil());
                // A row with no such column is redundant; its artificial stays
                // basic at zero and never affects phase 2.
                if let Some(j) = col {
                    tab.pivot(r, j);
                }
            }
        }
    }

    // Phase 2.
    let mut obj = vec![T::zero_val(); width + 1];
    for (j, c) in lp.objective.iter().enumerate() {
        obj[j] = c.neg();
    }
    for r in 0..tab.rows.len() {
        let b = tab.basis[r];
        let factor = obj[b].clone();
        if !factor.is_nil() {
            for (v, p) in obj.iter_mut().zip(&tab.rows[r]) {
                *v = v.sub(&factor.mul(p));
            }
        }
    }
    tab.obj = obj;
    tab.optimize(&|j| !artificial[j])?;

    let mut x = vec![T::zero_val(); n];
    for (r, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] = tab.rhs(r).clone();
        }
    }
    let duals = (0..m)
        .map(|i| {
            let y = tab.obj[n + i].clone();
            if flipped[i] {
                y.neg()
            } else {
                y
            }
        })
        .collect();
    Ok(LpSolution {
        value: tab.obj[width].clone(),
        x,
        duals,
        iterations: tab.iterations,
    })
}

/// Checks an optimal solution against its duals: primal feasibility, dual
/// feasibility with the right multiplier signs, and equal objective values.
pub fn certify_optimal<T: Scalar>(lp: &LinearProgram<T>, sol: &LpSolution<T>) -> bool {
    if sol.x.len() != lp.num_vars || sol.duals.len() != lp.constraints.len() {
        return false;
    }
    if sol.x.iter().any(Scalar::is_neg) {
        return false;
    }
    let mut reduced: Vec<T> = lp.objective.iter().map(Scalar::neg).collect();
    let mut dual_value = T::zero_val();
    for (c, y) in lp.constraints.iter().zip(&sol.duals) {
        let lhs = c
            .coeffs
            .iter()
            .fold(T::zero_val(), |acc, (v, a)| acc.add(&a.mul(&sol.x[*v])));
        let slack = c.rhs.sub(&lhs);
        let ok = match c.sense {
            Sense::Le => !slack.is_neg() && !y.is_neg(),
            Sense::Ge => !slack.is_pos() && !y.is_pos(),
            Sense::Eq => slack.is_nil(),
        };
        if !ok {
            return false;
        }
        for (v, a) in &c.coeffs {
            reduced[*v] = reduced[*v].add(&a.mul(y));
        }
        dual_value = dual_value.add(&c.rhs.mul(y));
    }
    reduced.iter().all(|r| !r.is_neg())
        && dual_value.sub(&sol.value).is_nil()
        && lp.evaluate(&sol.x).sub(&sol.value).is_nil()
}
