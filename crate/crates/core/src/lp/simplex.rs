//! Dense two-phase revised simplex for `min cᵀx, Ax ≤ b, x ≥ 0`.
//!
//! Columns of the working problem are `[A | I | -E]`: structural columns,
//! one slack per row, and artificials for rows with negative right-hand side.
//! The basis inverse is kept explicitly and refactored periodically.

use super::{LpProblem, LpSolution, LpStatus, Tolerances};
use crate::error::LpError;
use crate::linalg::{dot, Matrix};

const REFACTOR_EVERY: usize = 40;
const STALL_THRESHOLD: usize = 50;
const ROWGEN_MIN_ROWS: usize = 48;

/// Solves the LP with default tolerances.
pub fn solve_lp(problem: &LpProblem) -> Result<LpSolution, LpError> {
    solve_lp_with(problem, &Tolerances::default())
}

pub fn solve_lp_with(problem: &LpProblem, tol: &Tolerances) -> Result<LpSolution, LpError> {
    problem.check_dims()?;
    let (m, n) = problem.constraints.shape();
    if m > ROWGEN_MIN_ROWS && m > 4 * n {
        return solve_by_row_generation(problem, tol);
    }
    let raw = solve_dense(&problem.constraints, &problem.rhs, &problem.objective, tol)?;
    Ok(raw.solution)
}

pub(crate) struct RawSolve {
    pub solution: LpSolution,
    /// Direction of unboundedness in structural space, when unbounded.
    pub ray: Option<Vec<f64>>,
}

enum Outcome {
    Optimal,
    Unbounded(Vec<f64>),
}

struct Revised<'a> {
    a: &'a Matrix,
    b: &'a [f64],
    m: usize,
    n: usize,
    /// Row of each artificial column.
    art_rows: Vec<usize>,
    head: Vec<usize>,
    is_basic: Vec<bool>,
    binv: Matrix,
    since_refactor: usize,
    col_scale: Vec<f64>,
    tol: Tolerances,
    iterations: usize,
    max_iterations: usize,
}

impl<'a> Revised<'a> {
    fn column(&self, j: usize) -> Vec<f64> {
        let mut col = vec![0.0; self.m];
        if j < self.n {
            for (i, c) in col.iter_mut().enumerate() {
                *c = self.a[(i, j)];
            }
        } else if j < self.n + self.m {
            col[j - self.n] = 1.0;
        } else {
            col[self.art_rows[j - self.n - self.m]] = -1.0;
        }
        col
    }

    /// `B⁻¹ a_j`
    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        if j < self.n {
            let col = self.column(j);
            self.binv.mul_vec(&col)
        } else if j < self.n + m {
            self.binv.column(j - self.n)
        } else {
            let r = self.art_rows[j - self.n - m];
            (0..m).map(|i| -self.binv[(i, r)]).collect()
        }
    }

    fn basic_values(&self) -> Vec<f64> {
        self.binv.mul_vec(self.b)
    }

    fn refactor(&mut self) -> Result<(), LpError> {
        let mut bmat = Matrix::zeros(self.m, self.m);
        for (k, &j) in self.head.iter().enumerate() {
            let col = self.column(j);
            for i in 0..self.m {
                bmat[(i, k)] = col[i];
            }
        }
        match bmat.inverse(self.tol.pivot) {
            Some(inv) => {
                self.binv = inv;
                self.since_refactor = 0;
                Ok(())
            }
            None => {
                let mut basis = self.head.clone();
                basis.sort_unstable();
                Err(LpError::SingularBasis { basis })
            }
        }
    }

    fn pivot(&mut self, row: usize, entering: usize, w: &[f64]) -> Result<(), LpError> {
        let m = self.m;
        let wr = w[row];
        for k in 0..m {
            self.binv[(row, k)] /= wr;
        }
        for i in 0..m {
            if i != row && w[i] != 0.0 {
                let f = w[i];
                for k in 0..m {
                    let v = self.binv[(row, k)];
                    self.binv[(i, k)] -= f * v;
                }
            }
        }
        let leaving = self.head[row];
        self.is_basic[leaving] = false;
        self.is_basic[entering] = true;
        self.head[row] = entering;
        self.since_refactor += 1;
        if self.since_refactor >= REFACTOR_EVERY {
            self.refactor()?;
        }
        Ok(())
    }

    /// Simplex duals `y = c_Bᵀ B⁻¹`.
    fn duals(&self, cost: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.m];
        for (i, &j) in self.head.iter().enumerate() {
            let cb = cost[j];
            if cb != 0.0 {
                for (k, yk) in y.iter_mut().enumerate() {
                    *yk += cb * self.binv[(i, k)];
                }
            }
        }
        y
    }

    fn reduced_cost(&self, j: usize, cost: &[f64], y: &[f64], aty: &[f64]) -> f64 {
        if j < self.n {
            cost[j] - aty[j]
        } else if j < self.n + self.m {
            cost[j] - y[j - self.n]
        } else {
            cost[j] + y[self.art_rows[j - self.n - self.m]]
        }
    }

    fn run(&mut self, cost: &[f64], allowed: usize) -> Result<Outcome, LpError> {
        let cscale = 1.0 + cost.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        let dtol = 1e-9 * cscale;
        let mut stall = 0usize;
        let mut last_obj = f64::INFINITY;
        loop {
            if self.iterations >= self.max_iterations {
                return Err(LpError::MaxIterations(self.iterations));
            }
            self.iterations += 1;
            let y = self.duals(cost);
            let aty = self.a.tr_mul_vec(&y);
            let bland = stall >= STALL_THRESHOLD;
            let mut entering = None;
            let mut best = -dtol;
            for j in 0..allowed {
                if self.is_basic[j] {
                    continue;
                }
                let d = self.reduced_cost(j, cost, &y, &aty);
                if d < -dtol {
                    if bland {
                        entering = Some(j);
                        break;
                    }
                    let score = if j < self.n { d / self.col_scale[j] } else { d };
                    if score < best {
                        best = score;
                        entering = Some(j);
                    }
                }
            }
            let Some(q) = entering else {
                return Ok(Outcome::Optimal);
            };
            let w = self.ftran(q);
            let xb = self.basic_values();
            let mut leave: Option<usize> = None;
            let mut ratio = f64::INFINITY;
            for i in 0..self.m {
                if w[i] > self.tol.pivot {
                    let r = xb[i].max(0.0) / w[i];
                    let better = match leave {
                        None => true,
                        Some(l) => {
                            if r < ratio - 1e-12 {
                                true
                            } else if r <= ratio + 1e-12 {
                                if bland {
                                    self.head[i] < self.head[l]
                                } else {
                                    w[i] > w[l]
                                }
                            } else {
                                false
                            }
                        }
                    };
                    if better {
                        leave = Some(i);
                        ratio = r;
                    }
                }
            }
            let Some(row) = leave else {
                let mut ray = vec![0.0; self.n];
                if q < self.n {
                    ray[q] = 1.0;
                }
                for (i, &j) in self.head.iter().enumerate() {
                    if j < self.n {
                        ray[j] = -w[i];
                    }
                }
                return Ok(Outcome::Unbounded(ray));
            };
            self.pivot(row, q, &w)?;
            let obj: f64 = self
                .head
                .iter()
                .zip(self.basic_values())
                .map(|(&j, v)| cost[j] * v)
                .sum();
            if obj < last_obj - 1e-12 * (1.0 + obj.abs()) {
                stall = 0;
                last_obj = obj;
            } else {
                stall += 1;
            }
        }
    }

    /// Pivots remaining artificials out of the basis after phase one.
    fn drive_out_artificials(&mut self) -> Result<(), LpError> {
        let first_art = self.n + self.m;
        for row in 0..self.m {
            if self.head[row] < first_art {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for k in 0..self.m {
                let slack = self.n + k;
                if self.is_basic[slack] {
                    continue;
                }
                let v = self.binv[(row, k)].abs();
                if best.is_none_or(|(_, bv)| v > bv) {
                    best = Some((slack, v));
                }
            }
            for j in 0..self.n {
                if self.is_basic[j] {
                    continue;
                }
                let v = dot(self.binv.row(row), &self.column(j)).abs();
                if best.is_none_or(|(_, bv)| v > bv) {
                    best = Some((j, v));
                }
            }
            match best {
                Some((j, v)) if v > self.tol.pivot => {
                    let w = self.ftran(j);
                    self.pivot(row, j, &w)?;
                }
                _ => {
                    let mut basis = self.head.clone();
                    basis.sort_unstable();
                    return Err(LpError::SingularBasis { basis });
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn solve_dense(
    a: &Matrix,
    b: &[f64],
    c: &[f64],
    tol: &Tolerances,
) -> Result<RawSolve, LpError> {
    let (m, n) = a.shape();
    let art_rows: Vec<usize> = (0..m).filter(|&i| b[i] < 0.0).collect();
    let mut head = Vec::with_capacity(m);
    let mut binv = Matrix::identity(m);
    let mut k = 0;
    for (i, &bi) in b.iter().enumerate() {
        if bi < 0.0 {
            head.push(n + m + k);
            binv[(i, i)] = -1.0;
            k += 1;
        } else {
            head.push(n + i);
        }
    }
    let total = n + m + art_rows.len();
    let mut is_basic = vec![false; total];
    for &j in &head {
        is_basic[j] = true;
    }
    let mut lp = Revised {
        a,
        b,
        m,
        n,
        art_rows,
        head,
        is_basic,
        binv,
        since_refactor: 0,
        col_scale: (0..n)
            .map(|j| 1.0 + (0..m).map(|i| a[(i, j)] * a[(i, j)]).sum::<f64>().sqrt())
            .collect(),
        tol: *tol,
        iterations: 0,
        max_iterations: 200 * (m + n) + 2000,
    };

    if !lp.art_rows.is_empty() {
        let mut cost1 = vec![0.0; total];
        for c in cost1.iter_mut().skip(n + m) {
            *c = 1.0;
        }
        lp.run(&cost1, total)?;
        lp.refactor()?;
        let xb = lp.basic_values();
        let infeas: f64 = lp
            .head
            .iter()
            .zip(&xb)
            .filter(|(&j, _)| j >= n + m)
            .map(|(_, v)| v.max(0.0))
            .sum();
        let bscale = 1.0 + b.iter().fold(0.0_f64, |s, v| s.max(v.abs()));
        if infeas > tol.feas * bscale {
            let primal = structural_values(&lp);
            return Ok(RawSolve {
                solution: LpSolution {
                    status: LpStatus::Infeasible,
                    objective: f64::NAN,
                    dual: vec![0.0; m],
                    basis: Vec::new(),
                    primal,
                },
                ray: None,
            });
        }
        lp.drive_out_artificials()?;
    }

    let mut cost2 = vec![0.0; total];
    cost2[..n].copy_from_slice(c);
    let outcome = lp.run(&cost2, n + m)?;
    lp.refactor()?;
    let primal = structural_values(&lp);
    match outcome {
        Outcome::Unbounded(ray) => Ok(RawSolve {
            solution: LpSolution {
                status: LpStatus::Unbounded,
                objective: f64::NEG_INFINITY,
                dual: vec![0.0; m],
                basis: Vec::new(),
                primal,
            },
            ray: Some(ray),
        }),
        Outcome::Optimal => {
            let mut dual = lp.duals(&cost2);
            for y in dual.iter_mut() {
                if *y > 0.0 && *y <= 1e-9 {
                    *y = 0.0;
                }
            }
            let mut basis = lp.head.clone();
            basis.sort_unstable();
            let objective = dot(c, &primal);
            Ok(RawSolve {
                solution: LpSolution {
                    status: LpStatus::Optimal,
                    objective,
                    dual,
                    basis,
                    primal,
                },
                ray: None,
            })
        }
    }
}

fn structural_values(lp: &Revised<'_>) -> Vec<f64> {
    let xb = lp.basic_values();
    let mut x = vec![0.0; lp.n];
    for (i, &j) in lp.head.iter().enumerate() {
        if j < lp.n {
            x[j] = xb[i].max(0.0);
        }
    }
    x
}

/// Cutting-plane driver for LPs with many more rows than columns. Rows left
/// out of the final restricted problem are slack-basic with zero duals.
fn solve_by_row_generation(problem: &LpProblem, tol: &Tolerances) -> Result<LpSolution, LpError> {
    let a = &problem.constraints;
    let b = &problem.rhs;
    let (m, n) = a.shape();
    let batch = n.max(8);
    let mut in_set = vec![false; m];
    let mut rows: Vec<usize> = Vec::new();
    // Seed with the rows most violated at the origin.
    let mut seeds: Vec<usize> = (0..m).filter(|&i| b[i] < 0.0).collect();
    seeds.sort_by(|&i, &j| b[i].total_cmp(&b[j]));
    for &i in seeds.iter().take(batch) {
        in_set[i] = true;
        rows.push(i);
    }
    let row_norm: Vec<f64> = (0..m)
        .map(|i| 1.0 + a.row(i).iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    for _round in 0..(m + 10) {
        rows.sort_unstable();
        let mut sub = Matrix::zeros(rows.len(), n);
        let mut sub_b = Vec::with_capacity(rows.len());
        for (k, &i) in rows.iter().enumerate() {
            sub.row_mut(k).copy_from_slice(a.row(i));
            sub_b.push(b[i]);
        }
        let raw = solve_dense(&sub, &sub_b, &problem.objective, tol)?;
        let mut candidates: Vec<(f64, usize)> = Vec::new();
        match raw.solution.status {
            LpStatus::Infeasible => {
                let mut sol = raw.solution;
                sol.dual = vec![0.0; m];
                return Ok(sol);
            }
            LpStatus::Unbounded => {
                let ray = raw.ray.expect("unbounded solve carries a ray");
                for i in 0..m {
                    if !in_set[i] {
                        let v = dot(a.row(i), &ray) / row_norm[i];
                        if v > 1e-9 {
                            candidates.push((v, i));
                        }
                    }
                }
                if candidates.is_empty() {
                    let mut sol = raw.solution;
                    sol.dual = vec![0.0; m];
                    return Ok(sol);
                }
            }
            LpStatus::Optimal => {
                let x = &raw.solution.primal;
                for i in 0..m {
                    if !in_set[i] {
                        let v = (dot(a.row(i), x) - b[i]) / row_norm[i];
                        if v > tol.feas * 0.1 {
                            candidates.push((v, i));
                        }
                    }
                }
                if candidates.is_empty() {
                    let sol = raw.solution;
                    let mut dual = vec![0.0; m];
                    for (k, &i) in rows.iter().enumerate() {
                        dual[i] = sol.dual[k];
                    }
                    let mut basis = Vec::with_capacity(m);
                    for &j in &sol.basis {
                        if j < n {
                            basis.push(j);
                        } else {
                            basis.push(n + rows[j - n]);
                        }
                    }
                    for i in 0..m {
                        if !in_set[i] {
                            basis.push(n + i);
                        }
                    }
                    basis.sort_unstable();
                    return Ok(LpSolution {
                        status: LpStatus::Optimal,
                        objective: sol.objective,
                        primal: sol.primal,
                        dual,
                        basis,
                    });
                }
            }
        }
        candidates.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
        for &(_, i) in candidates.iter().take(batch) {
            in_set[i] = true;
            rows.push(i);
        }
    }
    Err(LpError::MaxIterations(m + 10))
}
