//! Stochastic dual dynamic programming on the known finite support.

use crate::error::{MslpError, Result};
use crate::instance::{apply_dynamics, MslpInstance, Observation};
use crate::process::SupportSampler;
use crate::stage::{build_stage_problem, Affine, AffineDual, FutureTerm, StageSolution};
use serde::{Deserialize, Serialize};

/// An outer linearization of `h_t(·, ω)` for every `ω` of the stage support.
/// The duals are observation independent; coefficients per observation are
/// derived once at creation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cut {
    pub stage: usize,
    pub origin: usize,
    pub dual: AffineDual,
    /// Indexed like `instance.support[stage].observations`.
    pub coefficients: Vec<Affine>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CutPool {
    pub stage: usize,
    pub cuts: Vec<Cut>,
}

impl CutPool {
    pub fn new(stage: usize) -> Self {
        Self {
            stage,
            cuts: Vec::new(),
        }
    }

    /// `max(0, max_cuts α + ⟨β, x⟩)` at observation `obs_index`.
    pub fn value(&self, obs_index: usize, x: &[f64]) -> f64 {
        self.cuts
            .iter()
            .map(|c| c.coefficients[obs_index].eval(x))
            .fold(0.0, f64::max)
    }

    pub fn pieces(&self, obs_index: usize) -> Vec<Affine> {
        self.cuts.iter().map(|c| c.coefficients[obs_index].clone()).collect()
    }

    fn contains(&self, coefficients: &[Affine]) -> bool {
        self.cuts.iter().any(|c| {
            c.coefficients.iter().zip(coefficients).all(|(a, b)| {
                (a.alpha - b.alpha).abs() <= 1e-12 * (1.0 + a.alpha.abs())
                    && a.beta.iter().zip(&b.beta).all(|(p, q)| (p - q).abs() <= 1e-12 * (1.0 + p.abs()))
            })
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SddpConfig {
    pub max_iterations: usize,
    pub n_paths: usize,
    /// Relative lower-bound change counted as stalled.
    pub lb_tol: f64,
    pub patience: usize,
    pub seed: u64,
}

impl Default for SddpConfig {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            n_paths: 3,
            lb_tol: 1e-10,
            patience: 20,
            seed: 0,
        }
    }
}

/// One forward trajectory: states `x_0..x_T`, decisions `u_0..u_T` and the
/// support index of each stage observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<Vec<f64>>,
    pub decisions: Vec<Vec<f64>>,
    pub observations: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SddpResult {
    pub root_decision: Vec<f64>,
    pub lower_bounds: Vec<f64>,
    /// Pools for stages `0..=T`; entry 0 is always empty.
    pub pools: Vec<CutPool>,
    pub converged: bool,
    pub iterations: usize,
}

pub fn empty_pools(inst: &MslpInstance) -> Vec<CutPool> {
    (0..inst.stages.len()).map(CutPool::new).collect()
}

fn future_terms<'a>(inst: &'a MslpInstance, pools: &[CutPool], t: usize) -> Vec<FutureTerm<'a>> {
    if t >= inst.horizon() {
        return Vec::new();
    }
    let sup = &inst.support[t + 1];
    sup.observations
        .iter()
        .zip(&sup.probabilities)
        .enumerate()
        .map(|(j, (o, &p))| FutureTerm {
            observation: o,
            probability: p,
            pieces: pools[t + 1].pieces(j),
        })
        .collect()
}

/// Minimizes `f_t^k(x, ω, ·)` with the cut pools as cost-to-go.
pub fn solve_stage(
    inst: &MslpInstance,
    pools: &[CutPool],
    t: usize,
    obs: &Observation,
    x: &[f64],
) -> Result<(StageSolution, AffineDual)> {
    let future = future_terms(inst, pools, t);
    let prob = build_stage_problem(inst, t, obs, x, &future)?;
    let sol = prob.solve(t, x)?;
    let dual = prob.affine_dual(&sol);
    Ok((sol, dual))
}

/// Simulates `n_paths` trajectories greedily with respect to the pools.
pub fn sddp_forward(
    inst: &MslpInstance,
    pools: &[CutPool],
    n_paths: usize,
    sampler: &mut SupportSampler,
) -> Result<Vec<Trajectory>> {
    (0..n_paths)
        .map(|_| {
            let idx = sampler.sample_indices();
            let mut observations = vec![0];
            observations.extend(idx);
            simulate(inst, pools, &observations)
        })
        .collect()
}

/// Greedy trajectory along given support indices (`observations[0]` = root).
pub fn simulate(inst: &MslpInstance, pools: &[CutPool], observations: &[usize]) -> Result<Trajectory> {
    let mut x = inst.initial_state.clone();
    let mut states = Vec::new();
    let mut decisions: Vec<Vec<f64>> = Vec::new();
    for t in 0..=inst.horizon() {
        let obs = &inst.support[t].observations[observations[t]];
        if t > 0 {
            x = apply_dynamics(&x, obs, decisions.last().expect("previous decision"))?;
        }
        let (sol, _) = solve_stage(inst, pools, t, obs, &x)?;
        states.push(x.clone());
        decisions.push(sol.decision);
    }
    Ok(Trajectory {
        states,
        decisions,
        observations: observations.to_vec(),
    })
}

/// Adds, for each stage `T..1`, each trajectory and each observation, a cut
/// derived from the stage problem at the trajectory's next state.
pub fn sddp_backward(
    inst: &MslpInstance,
    pools: &mut [CutPool],
    trajectories: &[Trajectory],
    iteration: usize,
) -> Result<usize> {
    let mut added = 0;
    for t in (1..=inst.horizon()).rev() {
        let mut fresh = Vec::new();
        for tr in trajectories {
            for obs in &inst.support[t].observations {
                let x = apply_dynamics(&tr.states[t - 1], obs, &tr.decisions[t - 1])?;
                let (_, dual) = solve_stage(inst, pools, t, obs, &x)?;
                fresh.push(dual);
            }
        }
        for dual in fresh {
            let coefficients: Vec<Affine> = inst.support[t]
                .observations
                .iter()
                .map(|o| dual.coefficients(inst, t, o))
                .collect();
            if pools[t].contains(&coefficients) {
                continue;
            }
            pools[t].cuts.push(Cut {
                stage: t,
                origin: iteration,
                dual,
                coefficients,
            });
            added += 1;
        }
    }
    Ok(added)
}

/// Root value `f_0^k(x_0, u_0^k)` with the current pools.
pub fn lower_bound(inst: &MslpInstance, pools: &[CutPool]) -> Result<(f64, Vec<f64>)> {
    let (sol, _) = solve_stage(inst, pools, 0, inst.root_observation(), &inst.initial_state)?;
    Ok((sol.value, sol.decision))
}

pub fn sddp_run(inst: &MslpInstance, config: &SddpConfig) -> Result<SddpResult> {
    sddp_run_with(inst, config, |_, _| {})
}

/// Runs SDDP, calling `on_iteration(k, lower_bound)` after each iteration.
pub fn sddp_run_with(
    inst: &MslpInstance,
    config: &SddpConfig,
    mut on_iteration: impl FnMut(usize, f64),
) -> Result<SddpResult> {
    if config.n_paths == 0 || config.max_iterations == 0 {
        return Err(MslpError::Config("SDDP needs at least one path and one iteration".into()));
    }
    let mut sampler = SupportSampler::new(inst, config.seed);
    let mut pools = empty_pools(inst);
    let mut lower_bounds = Vec::new();
    let mut stalled = 0;
    let mut converged = false;
    let mut root = Vec::new();
    for k in 1..=config.max_iterations {
        let trajectories = sddp_forward(inst, &pools, config.n_paths, &mut sampler)?;
        sddp_backward(inst, &mut pools, &trajectories, k)?;
        let (lb, u0) = lower_bound(inst, &pools)?;
        root = u0;
        if let Some(&prev) = lower_bounds.last() {
            let prev: f64 = prev;
            if (lb - prev).abs() <= config.lb_tol * prev.abs().max(1.0) {
                stalled += 1;
            } else {
                stalled = 0;
            }
        }
        lower_bounds.push(lb);
        on_iteration(k, lb);
        log::debug!("sddp iteration {} lower bound {}", k, lb);
        if stalled >= config.patience {
            converged = true;
            break;
        }
    }
    Ok(SddpResult {
        root_decision: root,
        iterations: lower_bounds.len(),
        lower_bounds,
        pools,
        converged,
    })
}
