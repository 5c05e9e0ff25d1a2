use super::MslpInstance;
use crate::error::{MslpError, Result};
use crate::linalg::Matrix;
use crate::lp::{solve_lp, LpProblem, LpStatus};

/// Interval box for the endogenous state of one stage.
#[derive(Debug, Clone)]
struct StateBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

/// Lower bound of `⟨c_t, x⟩ + ⟨d_t, u⟩` per stage over a box relaxation of
/// the reachable states (offsets excluded).
pub fn stage_cost_lower_bounds(inst: &MslpInstance) -> Result<Vec<f64>> {
    let mut bounds = Vec::with_capacity(inst.stages.len());
    let mut cur = StateBox {
        lo: inst.initial_state.clone(),
        hi: inst.initial_state.clone(),
    };
    for t in 0..inst.stages.len() {
        let s = &inst.stages[t];
        let n = s.decision_dim();
        let mut lb = f64::INFINITY;
        let mut u_hi = vec![0.0_f64; n];
        for obs in &inst.support[t].observations {
            let cost = joint_min(inst, t, obs, &cur, &s.state_cost, &s.decision_cost)?;
            lb = lb.min(cost.ok_or(MslpError::UnboundedCost(t))?);
            for (i, hi) in u_hi.iter_mut().enumerate() {
                if hi.is_infinite() {
                    continue;
                }
                let mut c = vec![0.0; n];
                c[i] = -1.0;
                match joint_min(inst, t, obs, &cur, &vec![0.0; s.state_dim()], &c)? {
                    Some(v) => *hi = hi.max(-v),
                    None => *hi = f64::INFINITY,
                }
            }
        }
        bounds.push(lb);
        if t + 1 < inst.stages.len() {
            cur = next_box(inst, t + 1, &cur, &u_hi);
        }
    }
    Ok(bounds)
}

/// Adds `max(0, −lb_t)` to the offset of each stage so every stage cost, and
/// hence every cost-to-go, is nonnegative. Returns the shifted instance and
/// the per-stage shifts; their sum is the total offset.
pub fn shift_nonneg(inst: &MslpInstance) -> Result<(MslpInstance, Vec<f64>)> {
    let bounds = stage_cost_lower_bounds(inst)?;
    let mut out = inst.clone();
    let mut shifts = Vec::with_capacity(bounds.len());
    for (t, lb) in bounds.iter().enumerate() {
        let total = lb + inst.stages[t].offset;
        let shift = if total < 0.0 { -total } else { 0.0 };
        out.stages[t].offset += shift;
        shifts.push(shift);
    }
    Ok((out, shifts))
}

/// `min ⟨cx, x⟩ + ⟨cu, u⟩` over `x ∈ box`, `u ≥ 0`, `D u ≤ b − C x`;
/// `None` when unbounded below.
fn joint_min(
    inst: &MslpInstance,
    t: usize,
    obs: &super::Observation,
    bx: &StateBox,
    cx: &[f64],
    cu: &[f64],
) -> Result<Option<f64>> {
    let s = &inst.stages[t];
    let (n, sd, m) = (s.decision_dim(), s.state_dim(), s.rows());
    // x = lo + y, with 0 ≤ y ≤ hi − lo where finite.
    let finite: Vec<usize> = (0..sd).filter(|&j| bx.hi[j].is_finite()).collect();
    let lo: Vec<f64> = bx.lo.iter().map(|v| if v.is_finite() { *v } else { 0.0 }).collect();
    if bx.lo.iter().any(|v| !v.is_finite()) {
        return Ok(None);
    }
    let mut a = Matrix::zeros(m + finite.len(), n + sd);
    let mut rhs = obs.rhs_at(&lo);
    for i in 0..m {
        for j in 0..n {
            a[(i, j)] = s.recourse[(i, j)];
        }
        for j in 0..sd {
            a[(i, n + j)] = obs.technology[(i, j)];
        }
    }
    for (k, &j) in finite.iter().enumerate() {
        a[(m + k, n + j)] = 1.0;
        rhs.push(bx.hi[j] - lo[j]);
    }
    let mut c = cu.to_vec();
    c.extend_from_slice(cx);
    let sol = solve_lp(&LpProblem::new(c, a, rhs))?;
    let constant: f64 = cx.iter().zip(&lo).map(|(a, b)| a * b).sum();
    Ok(match sol.status {
        LpStatus::Optimal => Some(sol.objective + constant),
        LpStatus::Unbounded => None,
        LpStatus::Infeasible => Some(f64::INFINITY),
    })
}

/// Interval image of `a + A x + B u` over all observations of stage `t`.
fn next_box(inst: &MslpInstance, t: usize, cur: &StateBox, u_hi: &[f64]) -> StateBox {
    let sd = inst.stages[t].state_dim();
    let mut lo = vec![f64::INFINITY; sd];
    let mut hi = vec![f64::NEG_INFINITY; sd];
    for obs in &inst.support[t].observations {
        for i in 0..sd {
            let (mut l, mut h) = (obs.drift[i], obs.drift[i]);
            for j in 0..cur.lo.len() {
                let a = obs.transition[(i, j)];
                let (p, q) = interval_mul(a, cur.lo[j], cur.hi[j]);
                l += p;
                h += q;
            }
            for (j, &uh) in u_hi.iter().enumerate() {
                let b = obs.input[(i, j)];
                let (p, q) = interval_mul(b, 0.0, uh);
                l += p;
                h += q;
            }
            lo[i] = lo[i].min(l);
            hi[i] = hi[i].max(h);
        }
    }
    StateBox { lo, hi }
}

fn interval_mul(a: f64, lo: f64, hi: f64) -> (f64, f64) {
    if a == 0.0 {
        return (0.0, 0.0);
    }
    let (p, q) = (a * lo, a * hi);
    (p.min(q), p.max(q))
}
