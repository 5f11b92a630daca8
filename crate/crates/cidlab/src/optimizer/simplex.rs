//! Dense bounded-variable primal simplex.
//!
//! Solves `maximize c'x` subject to `lo_i <= a_i'x <= hi_i` per row and
//! `l_j <= x_j <= u_j` per variable, all bounds finite. Rows become
//! equalities through bounded slacks, infeasibility is driven out in a
//! phase with explicit artificial columns, and pricing is Dantzig with a
//! switch to Bland's rule after a degenerate streak. Problem sizes here are
//! a few hundred variables at most, so the basis inverse is kept dense.

use thiserror::Error;

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-7;
const DEGENERATE_STREAK: usize = 40;

#[derive(Debug, Error)]
pub enum LpError {
    #[error("iteration limit reached after {0} pivots")]
    IterationLimit(usize),
    #[error("problem is infeasible (residual {0:.3e})")]
    Infeasible(f64),
}

/// Row constraint `lo <= coeffs . x <= hi`; equalities have `lo == hi`.
#[derive(Debug, Clone)]
pub struct LpRow {
    pub coeffs: Vec<(usize, f64)>,
    pub lo: f64,
    pub hi: f64,
}

/// A bounded LP in `maximize` form.
#[derive(Debug, Clone, Default)]
pub struct Lp {
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<LpRow>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

struct Tableau {
    /// Column-major constraint matrix over all variables.
    cols: Vec<Vec<(usize, f64)>>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    x: Vec<f64>,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    binv: Vec<Vec<f64>>,
    m: usize,
    iterations: usize,
}

impl Tableau {
    fn column(&self, j: usize) -> &[(usize, f64)] {
        &self.cols[j]
    }

    /// `binv * A_j`.
    fn ftran(&self, j: usize) -> Vec<f64> {
        let mut d = vec![0.0; self.m];
        for &(i, a) in self.column(j) {
            if a == 0.0 {
                continue;
            }
            for r in 0..self.m {
                d[r] += self.binv[r][i] * a;
            }
        }
        d
    }

    fn duals(&self) -> Vec<f64> {
        let mut y = vec![0.0; self.m];
        for (r, &b) in self.basis.iter().enumerate() {
            let c = self.cost[b];
            if c == 0.0 {
                continue;
            }
            for i in 0..self.m {
                y[i] += c * self.binv[r][i];
            }
        }
        y
    }

    fn reduced_cost(&self, j: usize, y: &[f64]) -> f64 {
        let mut z = self.cost[j];
        for &(i, a) in self.column(j) {
            z -= y[i] * a;
        }
        z
    }

    /// Recomputes basic values from the nonbasic bounds to shed pivot drift.
    fn refresh_basics(&mut self) {
        let mut rhs = vec![0.0; self.m];
        for j in 0..self.cols.len() {
            if self.in_basis[j] || self.x[j] == 0.0 {
                continue;
            }
            for &(i, a) in self.column(j) {
                rhs[i] -= a * self.x[j];
            }
        }
        for r in 0..self.m {
            let mut v = 0.0;
            for i in 0..self.m {
                v += self.binv[r][i] * rhs[i];
            }
            self.x[self.basis[r]] = v;
        }
    }

    fn pivot(&mut self, entering: usize, leaving_row: usize, d: &[f64]) {
        let pivot = d[leaving_row];
        let leaving = self.basis[leaving_row];
        for i in 0..self.m {
            self.binv[leaving_row][i] /= pivot;
        }
        for r in 0..self.m {
            if r == leaving_row || d[r] == 0.0 {
                continue;
            }
            let f = d[r];
            for i in 0..self.m {
                self.binv[r][i] -= f * self.binv[leaving_row][i];
            }
        }
        self.basis[leaving_row] = entering;
        self.in_basis[entering] = true;
        self.in_basis[leaving] = false;
    }

    /// One simplex phase over the current cost vector.
    fn optimize(&mut self, iteration_cap: usize) -> Result<(), LpError> {
        let n = self.cols.len();
        let mut degenerate_streak = 0;
        loop {
            if self.iterations > iteration_cap {
                return Err(LpError::IterationLimit(self.iterations));
            }
            let bland = degenerate_streak >= DEGENERATE_STREAK;
            let y = self.duals();

            // Entering variable: a nonbasic column whose reduced cost
            // improves the objective off its current bound.
            let mut entering = None;
            let mut best = COST_TOL;
            for j in 0..n {
                if self.in_basis[j] || self.lower[j] == self.upper[j] {
                    continue;
                }
                let z = self.reduced_cost(j, &y);
                let at_lower = (self.x[j] - self.lower[j]).abs() <= 1e-7 * (1.0 + self.lower[j].abs());
                let gain = if at_lower { z } else { -z };
                if gain > best {
                    entering = Some((j, at_lower));
                    if bland {
                        break;
                    }
                    best = gain;
                }
            }
            let Some((q, from_lower)) = entering else {
                self.refresh_basics();
                return Ok(());
            };

            let dir = if from_lower { 1.0 } else { -1.0 };
            let d = self.ftran(q);

            // Ratio test: how far can x_q move before a basic variable or
            // x_q itself hits a bound. Ties prefer the larger pivot for
            // stability, or the smallest variable index under Bland's rule.
            let mut t_max = self.upper[q] - self.lower[q];
            let mut leaving: Option<(usize, bool)> = None; // (row, to_upper)
            for r in 0..self.m {
                let delta = dir * d[r];
                if delta.abs() <= PIVOT_TOL {
                    continue;
                }
                let b = self.basis[r];
                let (limit, to_upper) = if delta > 0.0 {
                    (self.x[b] - self.lower[b], false)
                } else {
                    (self.upper[b] - self.x[b], true)
                };
                let ratio = limit.max(0.0) / delta.abs();
                let better = match leaving {
                    None => ratio < t_max - PIVOT_TOL,
                    Some((lr, _)) => {
                        if ratio < t_max - PIVOT_TOL {
                            true
                        } else if ratio < t_max + PIVOT_TOL {
                            if bland {
                                self.basis[r] < self.basis[lr]
                            } else {
                                d[r].abs() > d[lr].abs()
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    t_max = ratio.max(0.0).min(t_max);
                    leaving = Some((r, to_upper));
                }
            }

            self.iterations += 1;
            degenerate_streak = if t_max <= PIVOT_TOL { degenerate_streak + 1 } else { 0 };

            match leaving {
                None => {
                    // Bound flip: x_q runs to its opposite bound.
                    let t = t_max;
                    for r in 0..self.m {
                        let b = self.basis[r];
                        self.x[b] -= dir * t * d[r];
                    }
                    self.x[q] = if from_lower { self.upper[q] } else { self.lower[q] };
                }
                Some((r, to_upper)) => {
                    let t = t_max;
                    for rr in 0..self.m {
                        let b = self.basis[rr];
                        self.x[b] -= dir * t * d[rr];
                    }
                    self.x[q] += dir * t;
                    let b = self.basis[r];
                    self.x[b] = if to_upper { self.upper[b] } else { self.lower[b] };
                    self.pivot(q, r, &d);
                }
            }
        }
    }
}

/// Solves the LP. Returns the optimal point, its objective value, and the
/// pivot count; `LpError::Infeasible` when no point satisfies the rows.
pub fn solve(lp: &Lp) -> Result<LpSolution, LpError> {
    let n = lp.objective.len();
    debug_assert_eq!(lp.lower.len(), n);
    debug_assert_eq!(lp.upper.len(), n);
    let m = lp.rows.len();

    if m == 0 {
        // Pure box problem: each variable sits at its profitable bound.
        let x: Vec<f64> = (0..n)
            .map(|j| if lp.objective[j] > 0.0 { lp.upper[j] } else { lp.lower[j] })
            .collect();
        let objective = dot(&lp.objective, &x);
        return Ok(LpSolution { x, objective, iterations: 0 });
    }

    // Layout: structural 0..n, slacks n..n+m, artificials appended as needed.
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n + m];
    for (i, row) in lp.rows.iter().enumerate() {
        for &(j, a) in &row.coeffs {
            debug_assert!(j < n);
            if a != 0.0 {
                cols[j].push((i, a));
            }
        }
        cols[n + i].push((i, 1.0));
    }
    let mut lower = lp.lower.clone();
    let mut upper = lp.upper.clone();
    // Slack s_i = -a_i'x, so its bounds are the negated row range.
    for row in &lp.rows {
        lower.push(-row.hi);
        upper.push(-row.lo);
    }

    let mut x = vec![0.0; n + m];
    for j in 0..n {
        x[j] = lower[j];
    }
    let mut raw = vec![0.0; m];
    for j in 0..n {
        if x[j] != 0.0 {
            for &(i, a) in &cols[j] {
                raw[i] -= a * x[j];
            }
        }
    }

    let mut basis = Vec::with_capacity(m);
    let mut artificials = Vec::new();
    for i in 0..m {
        let clamped = raw[i].clamp(lower[n + i], upper[n + i]);
        x[n + i] = clamped;
        let resid = raw[i] - clamped;
        if resid.abs() > 0.0 {
            let idx = cols.len();
            cols.push(vec![(i, resid.signum())]);
            lower.push(0.0);
            upper.push(resid.abs());
            x.push(resid.abs());
            artificials.push(idx);
            basis.push(idx);
        } else {
            basis.push(n + i);
        }
    }

    let total = cols.len();
    let mut in_basis = vec![false; total];
    for &b in &basis {
        in_basis[b] = true;
    }
    let mut binv = vec![vec![0.0; m]; m];
    for (r, &b) in basis.iter().enumerate() {
        // Initial basis columns are +-unit vectors.
        let &(i, a) = &cols[b][0];
        binv[r][i] = 1.0 / a;
    }

    let mut tab = Tableau {
        cols,
        lower,
        upper,
        cost: vec![0.0; total],
        x,
        basis,
        in_basis,
        binv,
        m,
        iterations: 0,
    };
    let iteration_cap = 200 * (total + m) + 1000;

    if !artificials.is_empty() {
        for &a in &artificials {
            tab.cost[a] = -1.0;
        }
        tab.optimize(iteration_cap)?;
        let infeas: f64 = artificials.iter().map(|&a| tab.x[a]).sum();
        if infeas > FEAS_TOL {
            return Err(LpError::Infeasible(infeas));
        }
        for &a in &artificials {
            tab.cost[a] = 0.0;
            tab.lower[a] = 0.0;
            tab.upper[a] = 0.0;
            tab.x[a] = 0.0;
        }
        tab.refresh_basics();
    }

    for j in 0..n {
        tab.cost[j] = lp.objective[j];
    }
    tab.optimize(iteration_cap)?;

    let x_out: Vec<f64> = tab.x[..n]
        .iter()
        .enumerate()
        .map(|(j, &v)| v.clamp(lp.lower[j], lp.upper[j]))
        .collect();
    let objective = dot(&lp.objective, &x_out);
    Ok(LpSolution { x: x_out, objective, iterations: tab.iterations })
}

fn dot(c: &[f64], x: &[f64]) -> f64 {
    c.iter().zip(x).map(|(a, b)| a * b).sum()
}
