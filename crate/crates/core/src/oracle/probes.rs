//! Probe-state checks of the lower-bounding and stability properties.

use super::sample_average::eval_h;
use crate::error::Result;
use crate::instance::MslpInstance;
use crate::linalg::{norm2, sub, Matrix};
use crate::lp::{solve_lp, solve_qp, LpProblem, QpProblem};
use crate::sdlp::SdlpRunState;
use crate::stage::solve_myopic;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// A probe: stage, state and observation-pool index.
#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub stage: usize,
    pub x: Vec<f64>,
    pub obs: usize,
}

/// `n` states per stage `1..=T` drawn uniformly from `[lo, hi]^d`, each
/// paired with a random pooled observation.
pub fn box_probes(run: &SdlpRunState, inst: &MslpInstance, n: usize, lo: f64, hi: f64, rng: &mut impl Rng) -> Vec<Probe> {
    let mut out = Vec::new();
    for t in 1..=run.horizon {
        let m = run.stages[t].observations.len();
        if m == 0 {
            continue;
        }
        let sd = inst.stages[t].state_dim();
        for _ in 0..n {
            out.push(Probe {
                stage: t,
                x: (0..sd).map(|_| rng.gen_range(lo..=hi)).collect(),
                obs: rng.gen_range(0..m),
            });
        }
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub probes: usize,
    /// `h_t^k > H_t^k + 1e−6`
    pub lower_bound: usize,
    /// `h_t^k < ((k−1)/k)^{T−t} h_t^{k−1} − 1e−9`
    pub monotonicity: usize,
    /// `h_T^k > h_T + 1e−6`
    pub terminal_exact: usize,
    pub max_excess: f64,
}

impl ProbeReport {
    pub fn violations(&self) -> usize {
        self.lower_bound + self.monotonicity + self.terminal_exact
    }
}

/// Checks `run` (at iteration `k`) against `previous` (at `k − 1`).
pub fn check_minorants(
    inst: &MslpInstance,
    previous: &SdlpRunState,
    run: &SdlpRunState,
    probes: &[Probe],
) -> Result<ProbeReport> {
    let mut rep = ProbeReport::default();
    let k = run.iteration;
    for p in probes {
        let t = p.stage;
        let pool = &run.stages[t];
        let obs = pool.observations.observation(p.obs);
        let h = pool.minorants.value(p.obs, &p.x);
        let h_prev = previous.cost_to_go(t, obs, &p.x);
        rep.probes += 1;
        let factor = if k > 0 { pool.minorants.factor(k) } else { 1.0 };
        if h < factor * h_prev - 1e-9 {
            rep.monotonicity += 1;
        }
        let reference = if t == run.horizon {
            let exact = solve_myopic(inst, t, obs, &p.x)?.value;
            if h > exact + 1e-6 {
                rep.terminal_exact += 1;
            }
            exact
        } else {
            let big_h = eval_h(inst, run, t, &p.x, obs)?;
            if h > big_h + 1e-6 {
                rep.lower_bound += 1;
            }
            big_h
        };
        rep.max_excess = rep.max_excess.max(h - reference);
    }
    Ok(rep)
}

/// `dist(u(x), U(x')) / ‖x − x'‖`, where `u(x)` minimizes `⟨cost, u⟩` over
/// `{u ≥ 0 : D u ≤ rhs_x}` and the distance is measured to the feasible set
/// with right-hand side `rhs_x2`.
pub fn hoffman_ratio(
    recourse: &Matrix,
    cost: &[f64],
    rhs_x: &[f64],
    rhs_x2: &[f64],
    state_gap: f64,
) -> Result<f64> {
    let u = solve_lp(&LpProblem::new(cost.to_vec(), recourse.clone(), rhs_x.to_vec()))?;
    if !u.is_optimal() {
        return Ok(f64::NAN);
    }
    let proj = solve_qp(&QpProblem {
        lp: LpProblem::new(vec![0.0; cost.len()], recourse.clone(), rhs_x2.to_vec()),
        center: u.primal.clone(),
        sigma: 1.0,
    })?;
    if !proj.is_optimal() {
        return Ok(f64::INFINITY);
    }
    Ok(norm2(&sub(&proj.primal, &u.primal)) / state_gap)
}

/// `n` states per stage `1..=T` reached by random rollouts: observations
/// are drawn from the pools and each stage minimizes a random nonnegative
/// cost over its feasible set.
pub fn reachable_probes(inst: &MslpInstance, run: &SdlpRunState, n: usize, rng: &mut impl Rng) -> Result<Vec<Probe>> {
    let mut out = Vec::new();
    if (1..=run.horizon).any(|t| run.stages[t].observations.is_empty()) {
        return Ok(out);
    }
    for _ in 0..n {
        let mut x = inst.initial_state.clone();
        let mut obs = inst.root_observation().clone();
        let mut u: Vec<f64> = Vec::new();
        for t in 0..=run.horizon {
            if t > 0 {
                let pool = &run.stages[t].observations;
                let j = rng.gen_range(0..pool.len());
                obs = pool.observation(j).clone();
                x = crate::instance::apply_dynamics(&x, &obs, &u)?;
                out.push(Probe {
                    stage: t,
                    x: x.clone(),
                    obs: j,
                });
            }
            let s = &inst.stages[t];
            let cost: Vec<f64> = (0..s.decision_dim()).map(|_| rng.gen_range(0.0..1.0)).collect();
            let sol = solve_lp(&LpProblem::new(cost, s.recourse.clone(), obs.rhs_at(&x)))?;
            if !sol.is_optimal() {
                break;
            }
            u = sol.primal;
        }
    }
    Ok(out)
}
