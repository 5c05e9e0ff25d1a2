//! Embedded LP and convex QP engines.
//!
//! Both solve problems over `{z ≥ 0 : A z ≤ b}` and report duals with the
//! sign convention `y ≤ 0`, so that for an LP `objective = bᵀy`.

mod basis;
mod qp;
mod simplex;

pub use basis::{basis_inverse, basis_reconstruct, basis_reconstruct_with};
pub use qp::{solve_qp, solve_qp_from};
pub use simplex::{solve_lp, solve_lp_with};

use crate::error::LpError;
use crate::linalg::{dot, Matrix};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub feas: f64,
    pub comp: f64,
    pub obj: f64,
    pub pivot: f64,
    pub kkt: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            feas: 1e-8,
            comp: 1e-8,
            obj: 1e-7,
            pivot: 1e-10,
            kkt: 1e-7,
        }
    }
}

/// `min objectiveᵀ z  s.t.  constraints · z ≤ rhs,  z ≥ 0`
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub constraints: Matrix,
    pub rhs: Vec<f64>,
}

impl LpProblem {
    pub fn new(objective: Vec<f64>, constraints: Matrix, rhs: Vec<f64>) -> Self {
        Self {
            objective,
            constraints,
            rhs,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rhs.len()
    }

    pub(crate) fn check_dims(&self) -> Result<(), LpError> {
        let (m, n) = self.constraints.shape();
        if m != self.rhs.len() || (m > 0 && n != self.objective.len()) {
            return Err(LpError::Dimension(format!(
                "matrix {}x{}, {} costs, {} right-hand sides",
                m,
                n,
                self.objective.len(),
                self.rhs.len()
            )));
        }
        Ok(())
    }

    /// Largest violation of `A z ≤ b` and `z ≥ 0`.
    pub fn infeasibility(&self, z: &[f64]) -> f64 {
        let mut worst = z.iter().fold(0.0_f64, |w, &v| w.max(-v));
        for i in 0..self.num_rows() {
            worst = worst.max(dot(self.constraints.row(i), z) - self.rhs[i]);
        }
        worst
    }
}

/// Linear cost plus `σ/2 ‖z[..r] − center‖²` where `r = center.len()`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QpProblem {
    pub lp: LpProblem,
    pub center: Vec<f64>,
    pub sigma: f64,
}

impl QpProblem {
    pub fn value(&self, z: &[f64]) -> f64 {
        let lin = dot(&self.lp.objective, z);
        let quad: f64 = self
            .center
            .iter()
            .zip(z)
            .map(|(c, v)| (v - c) * (v - c))
            .sum();
        lin + 0.5 * self.sigma * quad
    }

    pub fn gradient(&self, z: &[f64]) -> Vec<f64> {
        let mut g = self.lp.objective.clone();
        for (i, c) in self.center.iter().enumerate() {
            g[i] += self.sigma * (z[i] - c);
        }
        g
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub primal: Vec<f64>,
    /// Row multipliers, `≤ 0`.
    pub dual: Vec<f64>,
    pub objective: f64,
    /// For LPs: sorted basic columns of `[A | I]` (structural `0..n`, slack
    /// of row `i` at `n + i`). For QPs: sorted working set, rows `0..m`
    /// then bounds `m..m+n`.
    pub basis: Vec<usize>,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// KKT residuals of a solution to the LP (`sigma = 0`) or QP.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KktReport {
    pub stationarity: f64,
    pub primal: f64,
    pub complementarity: f64,
    pub dual_sign: f64,
}

impl KktReport {
    pub fn max(&self) -> f64 {
        self.stationarity
            .max(self.primal)
            .max(self.complementarity)
            .max(self.dual_sign)
    }
}

/// Evaluates the KKT conditions using the solution's row duals; bound
/// multipliers are recovered from the stationarity equation.
pub fn kkt_residual(problem: &QpProblem, sol: &LpSolution) -> KktReport {
    let lp = &problem.lp;
    let z = &sol.primal;
    let grad = problem.gradient(z);
    let lambda: Vec<f64> = sol.dual.iter().map(|y| -y).collect();
    let atl = if lp.num_rows() > 0 {
        lp.constraints.tr_mul_vec(&lambda)
    } else {
        vec![0.0; z.len()]
    };
    let scale = 1.0 + crate::linalg::norm_inf(&grad);
    let mut rep = KktReport {
        primal: lp.infeasibility(z).max(0.0),
        ..Default::default()
    };
    for j in 0..z.len() {
        let mu = grad[j] + atl[j];
        rep.stationarity = rep.stationarity.max((-mu).max(0.0) / scale);
        rep.complementarity = rep.complementarity.max((mu * z[j]).abs() / scale);
    }
    for i in 0..lp.num_rows() {
        let slack = lp.rhs[i] - dot(lp.constraints.row(i), z);
        rep.complementarity = rep.complementarity.max((lambda[i] * slack).abs() / scale);
        rep.dual_sign = rep.dual_sign.max((-lambda[i]).max(0.0));
    }
    rep
}
