#![allow(dead_code)]

use mslp_core::io::parse_str;
use mslp_core::instance::MslpInstance;
use mslp_core::linalg::{dot, Matrix};
use mslp_core::lp::{LpProblem, QpProblem};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Newsvendor: order `u ≤ 10` at unit cost, then pay 3 per unit short of a
/// demand drawn from `demands` with equal probability.
pub fn newsvendor(demands: &[f64]) -> MslpInstance {
    let p = 1.0 / demands.len() as f64;
    let mut obs = String::new();
    for d in demands {
        obs.push_str(&format!("  observation {}\n    rhs {}\n  end\n", p, -d));
    }
    let text = format!(
        "mslp-instance v1
name newsvendor
initial_state 0
stage 0
  state_cost 0
  decision_cost 1
  recourse 1 1
    1
  rhs 10
  technology 1 1
    0
end
stage 1
  state_cost 0
  decision_cost 3
  recourse 1 1
    -1
  rhs -1
  technology 1 1
    -1
  transition 1 1
    0
  input 1 1
    1
end
support 1
{}end
",
        obs
    );
    parse_str("newsvendor", &text).unwrap()
}

/// Three-stage 1-D chain: stage 0 stocks `u ≤ 1` (earning 1 per unit),
/// stage 1 carries `y ≤ x` forward and covers a demand of 2 with shortfall
/// `z` at cost 4, stage 2 covers a demand of 3 at shortfall cost 2.
pub const CHAIN_TEXT: &str = "mslp-instance v1
name chain
initial_state 0
stage 0
  state_cost 0
  decision_cost -1
  recourse 1 1
    1
  rhs 1
  technology 1 1
    0
end
stage 1
  state_cost 0
  decision_cost 0 4
  recourse 2 2
    1 0
    1 -1
  rhs 0 -2
  technology 2 1
    -1
    -1
  transition 1 1
    0
  input 1 1
    1
end
stage 2
  state_cost 0
  decision_cost 2
  recourse 1 1
    -1
  rhs -3
  technology 1 1
    -1
  transition 1 1
    0
  input 1 2
    1 0
end
";

pub fn chain() -> MslpInstance {
    parse_str("chain", CHAIN_TEXT).unwrap()
}

/// Best dual vertex of `min ⟨cost, u⟩, u ≥ 0, D u ≤ rhs` by enumerating all
/// vertices of `{π ≤ 0 : Dᵀπ ≤ cost}`; returns `(π, value)`.
pub fn dual_by_enumeration(d: &[Vec<f64>], cost: &[f64], rhs: &[f64]) -> Option<(Vec<f64>, f64)> {
    let m = d.len();
    let n = cost.len();
    // Constraints g_i·π ≤ h_i: the n columns of D, then π_r ≤ 0.
    let mut g: Vec<Vec<f64>> = (0..n).map(|j| (0..m).map(|r| d[r][j]).collect()).collect();
    let mut h = cost.to_vec();
    for r in 0..m {
        let mut e = vec![0.0; m];
        e[r] = 1.0;
        g.push(e);
        h.push(0.0);
    }
    let mut best: Option<(Vec<f64>, f64)> = None;
    for subset in subsets(g.len(), m) {
        let a = DMatrix::from_fn(m, m, |i, j| g[subset[i]][j]);
        let b = DVector::from_iterator(m, subset.iter().map(|&i| h[i]));
        let Some(pi) = a.lu().solve(&b) else { continue };
        let pi: Vec<f64> = pi.iter().copied().collect();
        let feasible = g
            .iter()
            .zip(&h)
            .all(|(gi, hi)| gi.iter().zip(&pi).map(|(x, y)| x * y).sum::<f64>() <= hi + 1e-9);
        if !feasible {
            continue;
        }
        let v: f64 = pi.iter().zip(rhs).map(|(x, y)| x * y).sum();
        if best.as_ref().is_none_or(|(_, b)| v > *b + 1e-12) {
            best = Some((pi, v));
        }
    }
    best
}

pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

pub fn rows(m: &mslp_core::linalg::Matrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

/// FISTA on the dual of a strictly convex QP: the primal minimizer for
/// multipliers λ is `ẑ − (c + Gᵀλ)/σ`.
pub fn projected_gradient_oracle(p: &QpProblem, iters: usize) -> Vec<f64> {
    let n = p.lp.num_vars();
    let m = p.lp.num_rows();
    let mut g = Matrix::zeros(m + n, n);
    let mut h = vec![0.0; m + n];
    for i in 0..m {
        g.row_mut(i).copy_from_slice(p.lp.constraints.row(i));
        h[i] = p.lp.rhs[i];
    }
    for j in 0..n {
        g[(m + j, j)] = -1.0;
    }
    let gn = g.to_nalgebra();
    let lip = (&gn * gn.transpose()).symmetric_eigenvalues().max() / p.sigma;
    let step = 1.0 / lip;
    let primal = |lam: &[f64]| -> Vec<f64> {
        let gt = g.tr_mul_vec(lam);
        (0..n)
            .map(|j| p.center[j] - (p.lp.objective[j] + gt[j]) / p.sigma)
            .collect()
    };
    let mut lam = vec![0.0; m + n];
    let mut y = lam.clone();
    let mut t = 1.0_f64;
    for _ in 0..iters {
        let z = primal(&y);
        let gz = g.mul_vec(&z);
        let next: Vec<f64> = (0..m + n)
            .map(|i| (y[i] + step * (gz[i] - h[i])).max(0.0))
            .collect();
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        for i in 0..m + n {
            y[i] = next[i] + (t - 1.0) / t_next * (next[i] - lam[i]);
        }
        lam = next;
        t = t_next;
    }
    primal(&lam)
}

pub fn random_feasible_lp(rng: &mut ChaCha8Rng, n: usize, m: usize, degenerate: bool) -> LpProblem {
    let mut a = Matrix::zeros(m + 1, n);
    let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0)).collect();
    let mut b = Vec::with_capacity(m + 1);
    for i in 0..m {
        for j in 0..n {
            a[(i, j)] = if degenerate {
                rng.gen_range(-2i32..=2) as f64
            } else {
                rng.gen_range(-1.0..1.0)
            };
        }
        let slack = if degenerate && rng.gen_bool(0.5) {
            0.0
        } else {
            rng.gen_range(0.0..1.0)
        };
        b.push(dot(a.row(i), &x0) + slack);
    }
    for j in 0..n {
        a[(m, j)] = 1.0;
    }
    b.push(x0.iter().sum::<f64>() + 5.0);
    let c = (0..n)
        .map(|_| {
            if degenerate {
                rng.gen_range(-2i32..=2) as f64
            } else {
                rng.gen_range(-1.0..1.0)
            }
        })
        .collect();
    LpProblem::new(c, a, b)
}
