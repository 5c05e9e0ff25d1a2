//! Primal active-set method for `min cᵀz + σ/2‖z[..r] − ẑ‖²` over
//! `{z ≥ 0 : A z ≤ b}`. The Hessian is diagonal and may be singular (epigraph
//! variables carry no curvature), so zero-curvature directions are followed
//! as rays until a constraint blocks them.

use super::{solve_lp, LpProblem, LpSolution, LpStatus, QpProblem, Tolerances};
use crate::error::LpError;
use crate::linalg::{axpy, dot, norm2};
use nalgebra::{DMatrix, DVector, SymmetricEigen};

pub fn solve_qp(problem: &QpProblem) -> Result<LpSolution, LpError> {
    solve_qp_from(problem, None)
}

/// Solves the QP starting from `start` when it is feasible, otherwise from a
/// vertex of the feasible set.
pub fn solve_qp_from(problem: &QpProblem, start: Option<&[f64]>) -> Result<LpSolution, LpError> {
    let tol = Tolerances::default();
    let lp = &problem.lp;
    lp.check_dims()?;
    if problem.sigma < 1.0 || !problem.sigma.is_finite() {
        return Err(LpError::BadSigma(problem.sigma));
    }
    let n = lp.num_vars();
    if problem.center.len() > n {
        return Err(LpError::Dimension(format!(
            "center of length {} for {} variables",
            problem.center.len(),
            n
        )));
    }
    let m = lp.num_rows();
    let bscale = 1.0 + lp.rhs.iter().fold(0.0_f64, |s, v| s.max(v.abs()));
    let feas_tol = tol.feas * bscale;

    let z0 = match start {
        Some(s) if s.len() == n && lp.infeasibility(s) <= feas_tol => s.to_vec(),
        _ => {
            let phase1 = LpProblem::new(vec![0.0; n], lp.constraints.clone(), lp.rhs.clone());
            let sol = solve_lp(&phase1)?;
            if sol.status != LpStatus::Optimal {
                return Ok(LpSolution {
                    status: LpStatus::Infeasible,
                    primal: sol.primal,
                    dual: vec![0.0; m],
                    objective: f64::NAN,
                    basis: Vec::new(),
                });
            }
            sol.primal
        }
    };

    let mut solver = ActiveSet::new(problem, z0, feas_tol);
    solver.run()
}

struct ActiveSet<'a> {
    p: &'a QpProblem,
    m: usize,
    n: usize,
    z: Vec<f64>,
    working: Vec<usize>,
    feas_tol: f64,
}

impl<'a> ActiveSet<'a> {
    fn new(p: &'a QpProblem, z: Vec<f64>, feas_tol: f64) -> Self {
        let m = p.lp.num_rows();
        let n = p.lp.num_vars();
        let mut s = Self {
            p,
            m,
            n,
            z,
            working: Vec::new(),
            feas_tol,
        };
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for i in 0..m + n {
            if s.working.len() >= n {
                break;
            }
            if s.slack(i).abs() <= feas_tol {
                let row = s.row(i);
                if let Some(q) = orthogonal_residual(&basis, &row, 1e-9) {
                    basis.push(q);
                    s.working.push(i);
                }
            }
        }
        s
    }

    fn row(&self, i: usize) -> Vec<f64> {
        if i < self.m {
            self.p.lp.constraints.row(i).to_vec()
        } else {
            let mut r = vec![0.0; self.n];
            r[i - self.m] = -1.0;
            r
        }
    }

    fn row_dot(&self, i: usize, v: &[f64]) -> f64 {
        if i < self.m {
            dot(self.p.lp.constraints.row(i), v)
        } else {
            -v[i - self.m]
        }
    }

    /// `h_i − g_i·z`, nonnegative when feasible.
    fn slack(&self, i: usize) -> f64 {
        if i < self.m {
            self.p.lp.rhs[i] - dot(self.p.lp.constraints.row(i), &self.z)
        } else {
            self.z[i - self.m]
        }
    }

    fn hess(&self, j: usize) -> f64 {
        if j < self.p.center.len() {
            self.p.sigma
        } else {
            0.0
        }
    }

    fn run(&mut self) -> Result<LpSolution, LpError> {
        let n = self.n;
        let max_iter = 2000 + 50 * (n + self.m.min(4 * n + 100));
        let gscale0 = 1.0 + crate::linalg::norm_inf(&self.p.lp.objective);
        for _ in 0..max_iter {
            let grad = self.p.gradient(&self.z);
            let gscale = gscale0 + crate::linalg::norm_inf(&grad);
            let w_rows: Vec<Vec<f64>> = self.working.iter().map(|&i| self.row(i)).collect();
            let null = null_space(&w_rows, n);
            let k = null.len();

            let mut direction: Option<(Vec<f64>, bool)> = None;
            if k > 0 {
                let mut mred = DMatrix::<f64>::zeros(k, k);
                for a in 0..k {
                    for b in a..k {
                        let v: f64 = (0..n).map(|j| null[a][j] * self.hess(j) * null[b][j]).sum();
                        mred[(a, b)] = v;
                        mred[(b, a)] = v;
                    }
                }
                let rgrad = DVector::from_iterator(k, null.iter().map(|q| dot(q, &grad)));
                let eig = SymmetricEigen::new(mred);
                let curv_tol = 1e-10 * self.p.sigma.max(1.0);
                let mut y = DVector::<f64>::zeros(k);
                let mut ray = DVector::<f64>::zeros(k);
                let mut ray_slope = 0.0;
                for e in 0..k {
                    let v = eig.eigenvectors.column(e);
                    let proj = v.dot(&rgrad);
                    let lam = eig.eigenvalues[e];
                    if lam > curv_tol {
                        y -= v * (proj / lam);
                    } else if proj.abs() > 0.0 {
                        ray -= v * proj;
                        ray_slope += proj * proj;
                    }
                }
                if ray_slope.sqrt() > 1e-11 * gscale {
                    direction = Some((lift(&null, &ray, n), true));
                } else {
                    let step = lift(&null, &y, n);
                    if norm2(&step) > 1e-12 * (1.0 + norm2(&self.z)) {
                        direction = Some((step, false));
                    }
                }
            }

            match direction {
                Some((d, is_ray)) => {
                    let mut alpha = if is_ray { f64::INFINITY } else { 1.0 };
                    let mut blocking = None;
                    let dnorm = norm2(&d);
                    for i in 0..self.m + n {
                        if self.working.contains(&i) {
                            continue;
                        }
                        let gd = self.row_dot(i, &d);
                        if gd > 1e-12 * dnorm {
                            let a = self.slack(i).max(0.0) / gd;
                            if a < alpha {
                                alpha = a;
                                blocking = Some(i);
                            }
                        }
                    }
                    if alpha.is_infinite() {
                        return Ok(LpSolution {
                            status: LpStatus::Unbounded,
                            primal: self.z.clone(),
                            dual: vec![0.0; self.m],
                            objective: f64::NEG_INFINITY,
                            basis: Vec::new(),
                        });
                    }
                    axpy(alpha, &d, &mut self.z);
                    if let Some(i) = blocking {
                        self.working.push(i);
                    }
                }
                None => {
                    let lambda = self.multipliers(&w_rows, &grad);
                    let mut worst: Option<(usize, f64)> = None;
                    for (pos, &l) in lambda.iter().enumerate() {
                        if l < -1e-10 * gscale && worst.is_none_or(|(_, wl)| l < wl) {
                            worst = Some((pos, l));
                        }
                    }
                    match worst {
                        Some((pos, _)) => {
                            self.working.remove(pos);
                        }
                        None => return Ok(self.finish(&lambda)),
                    }
                }
            }
        }
        Err(LpError::MaxIterations(max_iter))
    }

    /// Solves `A_W A_Wᵀ λ = −A_W g`.
    fn multipliers(&self, rows: &[Vec<f64>], grad: &[f64]) -> Vec<f64> {
        let w = rows.len();
        if w == 0 {
            return Vec::new();
        }
        let mut gram = DMatrix::<f64>::zeros(w, w);
        let mut rhs = DVector::<f64>::zeros(w);
        for a in 0..w {
            for b in a..w {
                let v = dot(&rows[a], &rows[b]);
                gram[(a, b)] = v;
                gram[(b, a)] = v;
            }
            rhs[a] = -dot(&rows[a], grad);
        }
        match gram.clone().cholesky() {
            Some(ch) => ch.solve(&rhs).iter().copied().collect(),
            None => gram
                .svd(true, true)
                .solve(&rhs, 1e-12)
                .map(|v| v.iter().copied().collect())
                .unwrap_or_else(|_| vec![0.0; w]),
        }
    }

    fn finish(&self, lambda: &[f64]) -> LpSolution {
        let mut z = self.z.clone();
        for v in z.iter_mut() {
            if *v < 0.0 && *v > -self.feas_tol {
                *v = 0.0;
            }
        }
        let mut dual = vec![0.0; self.m];
        for (pos, &i) in self.working.iter().enumerate() {
            if i < self.m {
                dual[i] = -lambda[pos].max(0.0);
            }
        }
        let mut basis = self.working.clone();
        basis.sort_unstable();
        LpSolution {
            status: LpStatus::Optimal,
            objective: self.p.value(&z),
            primal: z,
            dual,
            basis,
        }
    }
}

/// Component of `row` orthogonal to the orthonormal `basis`, normalized, or
/// `None` when `row` is (numerically) in their span.
fn orthogonal_residual(basis: &[Vec<f64>], row: &[f64], rel_tol: f64) -> Option<Vec<f64>> {
    let norm0 = norm2(row);
    if norm0 == 0.0 {
        return None;
    }
    let mut r = row.to_vec();
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, &r);
            axpy(-c, q, &mut r);
        }
    }
    let nr = norm2(&r);
    if nr <= rel_tol * norm0 {
        return None;
    }
    r.iter_mut().for_each(|v| *v /= nr);
    Some(r)
}

/// Orthonormal basis of the null space of the given rows.
fn null_space(rows: &[Vec<f64>], n: usize) -> Vec<Vec<f64>> {
    let mut range: Vec<Vec<f64>> = Vec::new();
    for r in rows {
        if let Some(q) = orthogonal_residual(&range, r, 1e-9) {
            range.push(q);
        }
    }
    let mut all = range.clone();
    let mut null = Vec::new();
    for j in 0..n {
        if all.len() >= n {
            break;
        }
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        if let Some(q) = orthogonal_residual(&all, &e, 1e-3) {
            all.push(q.clone());
            null.push(q);
        }
    }
    null
}

fn lift(null: &[Vec<f64>], coeffs: &DVector<f64>, n: usize) -> Vec<f64> {
    let mut d = vec![0.0; n];
    for (q, &c) in null.iter().zip(coeffs.iter()) {
        axpy(c, q, &mut d);
    }
    d
}
