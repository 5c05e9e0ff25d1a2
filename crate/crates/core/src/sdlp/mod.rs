//! Stochastic dynamic linear programming: regularized forward passes with
//! basic-feasible-policy incumbents, and a sequentially sampled backward
//! pass that keeps scaled minorants of a growing sample average.

mod pools;

pub use pools::{
    BasisEntry, BasisIndexPool, DualVertex, DualVertexPool, Minorant, MinorantPool, PieceKind,
};

use crate::error::{MslpError, Result};
use crate::instance::{apply_dynamics, MslpInstance, Observation};
use crate::linalg::{dot, norm2};
use crate::lp::{basis_reconstruct_with, kkt_residual, solve_lp, LpProblem, LpStatus, Tolerances};
use crate::process::{ObservationPool, SamplePath, ScenarioSource};
use crate::stage::{build_stage_problem, solve_myopic, Affine, FutureTerm, StageProblem};
use serde::{Deserialize, Serialize};

/// How the state cost `c_t` (and offset `e_t`) enter pieces formed from a
/// stored dual vertex rather than a fresh solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StateCostConvention {
    AddUnscaled,
    Omitted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdlpConfig {
    pub sigma: f64,
    pub q: f64,
    pub max_pieces: Option<usize>,
    pub state_cost: StateCostConvention,
}

impl Default for SdlpConfig {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            q: 0.2,
            max_pieces: None,
            state_cost: StateCostConvention::AddUnscaled,
        }
    }
}

impl SdlpConfig {
    pub fn check(&self) -> Result<()> {
        if !(self.sigma >= 1.0 && self.sigma.is_finite()) {
            return Err(MslpError::Config(format!("sigma must be at least 1, got {}", self.sigma)));
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(MslpError::Config(format!("q must lie in (0, 1), got {}", self.q)));
        }
        Ok(())
    }
}

/// Pools owned by one stage `t ≥ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StagePools {
    pub observations: ObservationPool,
    pub minorants: MinorantPool,
    pub duals: DualVertexPool,
    pub bases: BasisIndexPool,
}

/// States `x_0..x_T` and decisions `u_0..u_{T}` (the incumbent has no
/// terminal decision).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PathDecisions {
    pub states: Vec<Vec<f64>>,
    pub decisions: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub incumbent_changes: usize,
    pub descent_violations: usize,
    pub root_solves: usize,
    pub max_kkt_residual: f64,
    pub bfp_emitted: usize,
    pub bfp_fallbacks: usize,
    pub max_bfp_residual: f64,
}

/// Per-iteration trace values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    /// `f_0^k(s_0, û_0^k)`
    pub incumbent_value: f64,
    /// `f_0^k(s_0, u_0^k)`
    pub candidate_value: f64,
    /// `‖u_0^k − û_0^{k−1}‖`
    pub step: f64,
    pub incumbent_changed: bool,
    /// `|Ω_t^k|` for `t = 1..=T`.
    pub pool_sizes: Vec<usize>,
    /// `F_t^{k−1}` along the candidate path for `t = 0..T−1`.
    pub forward_costs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdlpRunState {
    pub config: SdlpConfig,
    /// Completed iterations.
    pub iteration: usize,
    pub horizon: usize,
    pub root_incumbent: Vec<f64>,
    pub root_candidate: Vec<f64>,
    /// Entry `t` holds the pools of stage `t`; entry 0 is unused.
    pub stages: Vec<StagePools>,
    pub incumbent: PathDecisions,
    pub candidate: PathDecisions,
    pub stats: RunStats,
    pub last: IterationRecord,
}

/// Outcome of one BFP selection.
#[derive(Debug, Clone, PartialEq)]
pub struct BfpChoice {
    pub decision: Vec<f64>,
    pub value: f64,
    /// Index into the stage's basis pool; `None` for the fallback LP.
    pub entry: Option<usize>,
}

impl SdlpRunState {
    pub fn new(inst: &MslpInstance, config: SdlpConfig) -> Result<Self> {
        config.check()?;
        let horizon = inst.horizon();
        let stages = (0..=horizon)
            .map(|t| StagePools {
                observations: ObservationPool::new(t),
                minorants: MinorantPool::new(t, horizon),
                duals: DualVertexPool {
                    stage: t,
                    vertices: Vec::new(),
                },
                bases: BasisIndexPool {
                    stage: t,
                    entries: Vec::new(),
                },
            })
            .collect();
        let root = solve_myopic(inst, 0, inst.root_observation(), &inst.initial_state)?;
        Ok(Self {
            config,
            iteration: 0,
            horizon,
            root_incumbent: root.decision.clone(),
            root_candidate: root.decision,
            stages,
            incumbent: PathDecisions::default(),
            candidate: PathDecisions::default(),
            stats: RunStats::default(),
            last: IterationRecord::default(),
        })
    }

    /// `h_t^k(x, ω)`; zero for observations not in the pool.
    pub fn cost_to_go(&self, t: usize, obs: &Observation, x: &[f64]) -> f64 {
        let sp = &self.stages[t];
        sp.observations
            .find(obs)
            .map_or(0.0, |j| sp.minorants.value(j, x))
    }

    /// Future terms of stage `t` built from the pools of stage `t + 1`.
    pub fn future_terms(&self, t: usize) -> Vec<FutureTerm<'_>> {
        if t >= self.horizon {
            return Vec::new();
        }
        let sp = &self.stages[t + 1];
        (0..sp.observations.len())
            .map(|j| FutureTerm {
                observation: sp.observations.observation(j),
                probability: sp.observations.frequency_at(j),
                pieces: sp.minorants.pieces_for(j),
            })
            .collect()
    }

    pub fn stage_problem(&self, inst: &MslpInstance, t: usize, obs: &Observation, x: &[f64]) -> Result<StageProblem> {
        build_stage_problem(inst, t, obs, x, &self.future_terms(t))
    }

    /// `f_t(x, ω, u) = e + ⟨c, x⟩ + ⟨d, u⟩ + Σ p h_{t+1}(a + Ax + Bu, ω')`
    /// with the current pools.
    pub fn approx_value(&self, inst: &MslpInstance, t: usize, x: &[f64], u: &[f64]) -> Result<f64> {
        let mut v = inst.stage_cost(t, x, u);
        if t < self.horizon {
            let sp = &self.stages[t + 1];
            for j in 0..sp.observations.len() {
                let o = sp.observations.observation(j);
                let xn = apply_dynamics(x, o, u)?;
                v += sp.observations.frequency_at(j) * sp.minorants.value(j, &xn);
            }
        }
        Ok(v)
    }

    pub fn root_value(&self, inst: &MslpInstance, u: &[f64]) -> Result<f64> {
        self.approx_value(inst, 0, &inst.initial_state, u)
    }

    /// Largest `‖(α, β)‖∞` over the scaled pieces of stage `t`.
    pub fn max_coefficient(&self, t: usize) -> f64 {
        self.stages[t].minorants.max_abs_coefficient()
    }
}

/// Regularized root solve; returns the candidate and the pre-update values
/// `(f^{k−1}(u_0^k), f^{k−1}(û_0^{k−1}))`.
pub fn solve_root(inst: &MslpInstance, run: &mut SdlpRunState) -> Result<(Vec<f64>, f64, f64)> {
    let x0 = &inst.initial_state;
    let prob = run.stage_problem(inst, 0, inst.root_observation(), x0)?;
    let (sol, qp) = prob.solve_proximal(0, x0, &run.root_incumbent, run.config.sigma)?;
    let kkt = kkt_residual(&qp, &sol.raw).max();
    run.stats.max_kkt_residual = run.stats.max_kkt_residual.max(kkt);
    let u = sol.decision;
    let f_cand = run.root_value(inst, &u)?;
    let f_inc = run.root_value(inst, &run.root_incumbent)?;
    let step = crate::linalg::sub(&u, &run.root_incumbent);
    let tol = Tolerances::default().kkt;
    run.stats.root_solves += 1;
    if f_cand - f_inc > -dot(&step, &step) + tol * (1.0 + f_inc.abs()) {
        run.stats.descent_violations += 1;
        log::warn!(
            "descent condition violated at iteration {}: {} vs {}",
            run.iteration + 1,
            f_cand - f_inc,
            -dot(&step, &step)
        );
    }
    run.root_candidate = u.clone();
    Ok((u, f_cand, f_inc))
}

/// Reconstructs the decision of every pooled basis at `(x, ω)`, keeps the
/// feasible ones and returns the one with the least `f_t` (earliest on
/// ties), or `None` when no pooled basis is feasible.
pub fn bfp_select(
    inst: &MslpInstance,
    run: &SdlpRunState,
    t: usize,
    obs: &Observation,
    x: &[f64],
) -> Result<Option<BfpChoice>> {
    let s = &inst.stages[t];
    let rhs = obs.rhs_at(x);
    let n = s.decision_dim();
    let mut best: Option<BfpChoice> = None;
    for (i, e) in run.stages[t].bases.entries.iter().enumerate() {
        let u = basis_reconstruct_with(&e.basis, &e.inverse, n, &rhs);
        if !bfp_feasible(inst, t, &rhs, &u) {
            continue;
        }
        let v = run.approx_value(inst, t, x, &u)?;
        if best.as_ref().is_none_or(|b| v < b.value - 1e-12 * (1.0 + b.value.abs())) {
            best = Some(BfpChoice {
                decision: u,
                value: v,
                entry: Some(i),
            });
        }
    }
    Ok(best)
}

/// `D û ≤ b − C x + 1e−8` and `û ≥ −1e−10`.
pub fn bfp_feasible(inst: &MslpInstance, t: usize, rhs: &[f64], u: &[f64]) -> bool {
    bfp_residual(inst, t, rhs, u) <= 1e-8 && u.iter().all(|&v| v >= -1e-10)
}

pub fn bfp_residual(inst: &MslpInstance, t: usize, rhs: &[f64], u: &[f64]) -> f64 {
    let du = inst.stages[t].recourse.mul_vec(u);
    du.iter().zip(rhs).fold(0.0_f64, |w, (a, b)| w.max(a - b))
}

/// Incumbent trajectory along `path` from the current root incumbent.
pub fn prediction_pass(inst: &MslpInstance, run: &mut SdlpRunState, path: &SamplePath) -> Result<PathDecisions> {
    let mut states = vec![inst.initial_state.clone()];
    let mut decisions = vec![run.root_incumbent.clone()];
    for t in 1..=run.horizon {
        let obs = path.at(t);
        let x = apply_dynamics(&states[t - 1], obs, &decisions[t - 1])?;
        if t < run.horizon {
            let choice = match bfp_select(inst, run, t, obs, &x)? {
                Some(c) => c,
                None => {
                    log::warn!("stage {}: no pooled basis is feasible, using the stage LP", t);
                    run.stats.bfp_fallbacks += 1;
                    let sol = solve_myopic(inst, t, obs, &x)?;
                    let k = run.iteration + 1;
                    run.stages[t].bases.add(&sol.raw.basis, k, &inst.stages[t].recourse, &Tolerances::default());
                    BfpChoice {
                        value: run.approx_value(inst, t, &x, &sol.decision)?,
                        decision: sol.decision,
                        entry: None,
                    }
                }
            };
            let residual = bfp_residual(inst, t, &obs.rhs_at(&x), &choice.decision);
            run.stats.bfp_emitted += 1;
            run.stats.max_bfp_residual = run.stats.max_bfp_residual.max(residual);
            decisions.push(choice.decision);
        }
        states.push(x);
    }
    Ok(PathDecisions { states, decisions })
}

/// Candidate trajectory: regularized stage problems centered at the
/// incumbent decisions, then the terminal LP. Returns the path and the
/// forward costs `F_t^{k−1}` for `t = 1..T−1`.
pub fn optimization_pass(
    inst: &MslpInstance,
    run: &mut SdlpRunState,
    path: &SamplePath,
    incumbent: &PathDecisions,
    root_candidate: &[f64],
) -> Result<(PathDecisions, Vec<f64>)> {
    let mut states = vec![inst.initial_state.clone()];
    let mut decisions = vec![root_candidate.to_vec()];
    let mut costs = Vec::new();
    for t in 1..=run.horizon {
        let obs = path.at(t);
        let x = apply_dynamics(&states[t - 1], obs, &decisions[t - 1])?;
        let u = if t < run.horizon {
            let prob = run.stage_problem(inst, t, obs, &x)?;
            let (sol, qp) = prob.solve_proximal(t, &x, &incumbent.decisions[t], run.config.sigma)?;
            let kkt = kkt_residual(&qp, &sol.raw).max();
            run.stats.max_kkt_residual = run.stats.max_kkt_residual.max(kkt);
            costs.push(sol.value);
            sol.decision
        } else {
            solve_myopic(inst, t, obs, &x)?.decision
        };
        states.push(x);
        decisions.push(u);
    }
    Ok((PathDecisions { states, decisions }, costs))
}

/// Dual of `min ⟨d_T, u⟩` over `U_T(x, ω)`.
fn terminal_dual(inst: &MslpInstance, t: usize, obs: &Observation, x: &[f64]) -> Result<Vec<f64>> {
    let sol = solve_myopic(inst, t, obs, x)?;
    Ok(sol.raw.dual)
}

/// `α = e + ⟨π, b⟩ + ᾱ`, `β = c − Cᵀπ + β̄`.
pub fn exact_coefficients(inst: &MslpInstance, t: usize, obs: &Observation, v: &DualVertex) -> Affine {
    let s = &inst.stages[t];
    let ctp = obs.technology.tr_mul_vec(&v.pi);
    Affine {
        alpha: s.offset + dot(&v.pi, &obs.rhs) + v.alpha_bar,
        beta: (0..s.state_dim())
            .map(|j| s.state_cost[j] - ctp[j] + v.beta_bar[j])
            .collect(),
    }
}

/// Coefficients at `ω` from the best stored dual vertex, ranked by
/// `(i/k)^{T−t} ⟨π, b − Cx⟩` (newest on ties).
pub fn argmax_dual_scaled(
    inst: &MslpInstance,
    run: &SdlpRunState,
    t: usize,
    k: usize,
    obs: &Observation,
    x: &[f64],
) -> Affine {
    let s = &inst.stages[t];
    let rhs = obs.rhs_at(x);
    let exponent = (run.horizon - t) as i32;
    let mut best: Option<(&DualVertex, f64, f64)> = None;
    for v in &run.stages[t].duals.vertices {
        let scale = (v.origin as f64 / k as f64).powi(exponent);
        let score = scale * dot(&v.pi, &rhs);
        if best.is_none_or(|(_, b, _)| score >= b) {
            best = Some((v, score, scale));
        }
    }
    let Some((v, _, scale)) = best else {
        return Affine::zero(s.state_dim());
    };
    let ctp = obs.technology.tr_mul_vec(&v.pi);
    let mut coef = Affine {
        alpha: scale * (dot(&v.pi, &obs.rhs) + v.alpha_bar),
        beta: (0..s.state_dim()).map(|j| scale * (v.beta_bar[j] - ctp[j])).collect(),
    };
    if run.config.state_cost == StateCostConvention::AddUnscaled {
        coef.alpha += s.offset;
        for (b, c) in coef.beta.iter_mut().zip(&s.state_cost) {
            *b += c;
        }
    }
    coef
}

/// Aggregates of the stagewise-dual approximation at stage `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SdaData {
    pub alpha_bar: f64,
    pub beta_bar: Vec<f64>,
    pub rho_bar: Vec<f64>,
}

/// Selects, for every `ω' ∈ Ω_{t+1}`, the maximizing piece of `h_{t+1}` at
/// `a' + A'x + B'u` and aggregates with the current frequencies.
pub fn sda_build(inst: &MslpInstance, run: &SdlpRunState, t: usize, x: &[f64], u: &[f64]) -> Result<SdaData> {
    let s = &inst.stages[t];
    let mut data = SdaData {
        alpha_bar: 0.0,
        beta_bar: vec![0.0; s.state_dim()],
        rho_bar: s.decision_cost.clone(),
    };
    if t >= run.horizon {
        return Ok(data);
    }
    let next = &run.stages[t + 1];
    for j in 0..next.observations.len() {
        let o = next.observations.observation(j);
        let p = next.observations.frequency_at(j);
        let xn = apply_dynamics(x, o, u)?;
        let Some(i) = next.minorants.select(j, &xn) else {
            continue;
        };
        let piece = next.minorants.pieces[i].effective(j).expect("selected pieces are defined");
        data.alpha_bar += p * piece.eval(&o.drift);
        let at = o.transition.tr_mul_vec(&piece.beta);
        let bt = o.input.tr_mul_vec(&piece.beta);
        for (b, v) in data.beta_bar.iter_mut().zip(at) {
            *b += p * v;
        }
        for (r, v) in data.rho_bar.iter_mut().zip(bt) {
            *r += p * v;
        }
    }
    Ok(data)
}

/// Solves `min ⟨ρ̄, u⟩` over `U_t(x, ω)`; returns the dual vertex and basis.
pub fn sda_solve(
    inst: &MslpInstance,
    t: usize,
    obs: &Observation,
    x: &[f64],
    sda: &SdaData,
    origin: usize,
) -> Result<(DualVertex, Vec<usize>, f64)> {
    let s = &inst.stages[t];
    let lp = LpProblem::new(sda.rho_bar.clone(), s.recourse.clone(), obs.rhs_at(x));
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Err(MslpError::Infeasible {
                stage: t,
                state: x.to_vec(),
            })
        }
        LpStatus::Unbounded => return Err(MslpError::Unbounded { stage: t }),
    }
    Ok((
        DualVertex {
            pi: sol.dual,
            origin,
            alpha_bar: sda.alpha_bar,
            beta_bar: sda.beta_bar.clone(),
            rho_bar: sda.rho_bar.clone(),
        },
        sol.basis,
        sol.objective,
    ))
}

/// Builds a piece: exact coefficients at the current observation, argmax
/// coefficients at every other pooled observation using the states
/// `a + A x_prev + B u_prev`.
#[allow(clippy::too_many_arguments)]
fn form_piece(
    inst: &MslpInstance,
    run: &SdlpRunState,
    t: usize,
    k: usize,
    current: usize,
    vertex: &DualVertex,
    prev_state: &[f64],
    prev_decision: &[f64],
    kind: PieceKind,
) -> Result<Minorant> {
    let pool = &run.stages[t].observations;
    let mut coefficients = Vec::with_capacity(pool.len());
    for j in 0..pool.len() {
        let o = pool.observation(j);
        let c = if j == current {
            exact_coefficients(inst, t, o, vertex)
        } else {
            let x = apply_dynamics(prev_state, o, prev_decision)?;
            argmax_dual_scaled(inst, run, t, k, o, &x)
        };
        coefficients.push(Some(c));
    }
    Ok(Minorant {
        stage: t,
        origin: k,
        kind,
        scale: 1.0,
        coefficients,
    })
}

fn finish_stage(run: &mut SdlpRunState, t: usize, k: usize, pieces: [Minorant; 2], current: usize) {
    let cap = run.config.max_pieces;
    let x_hat = run.incumbent.states.get(t).cloned();
    let pool = &mut run.stages[t].minorants;
    pool.pieces.extend(pieces);
    pool.scale_pool(k);
    if let (Some(cap), Some(x)) = (cap, x_hat) {
        pool.truncate(cap, k, current, &x);
    }
}

/// Terminal stage: exact duals at the candidate and incumbent states, two
/// new unscaled pieces.
pub fn terminal_update(inst: &MslpInstance, run: &mut SdlpRunState, path: &SamplePath) -> Result<()> {
    let t = run.horizon;
    let k = run.iteration + 1;
    let obs = path.at(t);
    let current = run.stages[t]
        .observations
        .find(obs)
        .ok_or(MslpError::UnknownObservation(t))?;
    let sd = inst.stages[t].state_dim();
    let mut vertices = Vec::with_capacity(2);
    for traj in [&run.candidate, &run.incumbent] {
        let pi = terminal_dual(inst, t, obs, &traj.states[t])?;
        vertices.push(DualVertex {
            pi,
            origin: k,
            alpha_bar: 0.0,
            beta_bar: vec![0.0; sd],
            rho_bar: inst.stages[t].decision_cost.clone(),
        });
    }
    run.stages[t].duals.vertices.extend(vertices.iter().cloned());
    let cand = form_piece(
        inst,
        run,
        t,
        k,
        current,
        &vertices[0],
        &run.candidate.states[t - 1],
        &run.candidate.decisions[t - 1],
        PieceKind::Candidate,
    )?;
    let inc = form_piece(
        inst,
        run,
        t,
        k,
        current,
        &vertices[1],
        &run.incumbent.states[t - 1],
        &run.incumbent.decisions[t - 1],
        PieceKind::Incumbent,
    )?;
    finish_stage(run, t, k, [cand, inc], current);
    Ok(())
}

/// Non-terminal stage `t`: SDA solves at the candidate and incumbent
/// states, pools updated, two new pieces, older pieces scaled.
pub fn nonterminal_update(inst: &MslpInstance, run: &mut SdlpRunState, path: &SamplePath, t: usize) -> Result<()> {
    let k = run.iteration + 1;
    let obs = path.at(t);
    let current = run.stages[t]
        .observations
        .find(obs)
        .ok_or(MslpError::UnknownObservation(t))?;
    let mut vertices = Vec::with_capacity(2);
    for traj in [&run.candidate, &run.incumbent] {
        let sda = sda_build(inst, run, t, &traj.states[t], &traj.decisions[t])?;
        vertices.push(sda_solve(inst, t, obs, &traj.states[t], &sda, k)?);
    }
    let tol = Tolerances::default();
    for (v, basis, _) in &vertices {
        run.stages[t].duals.vertices.push(v.clone());
        run.stages[t].bases.add(basis, k, &inst.stages[t].recourse, &tol);
    }
    let cand = form_piece(
        inst,
        run,
        t,
        k,
        current,
        &vertices[0].0,
        &run.candidate.states[t - 1],
        &run.candidate.decisions[t - 1],
        PieceKind::Candidate,
    )?;
    let inc = form_piece(
        inst,
        run,
        t,
        k,
        current,
        &vertices[1].0,
        &run.incumbent.states[t - 1],
        &run.incumbent.decisions[t - 1],
        PieceKind::Incumbent,
    )?;
    finish_stage(run, t, k, [cand, inc], current);
    Ok(())
}

/// Sufficient-decrease test; returns whether the candidate was accepted.
pub fn root_incumbent_test(
    run: &mut SdlpRunState,
    new_candidate: f64,
    new_incumbent: f64,
    old_candidate: f64,
    old_incumbent: f64,
) -> bool {
    let accept = new_candidate - new_incumbent <= run.config.q * (old_candidate - old_incumbent);
    if accept {
        if run.root_candidate != run.root_incumbent {
            run.stats.incumbent_changes += 1;
        }
        run.root_incumbent = run.root_candidate.clone();
    }
    accept
}

/// One full iteration.
pub fn sdlp_iterate(inst: &MslpInstance, run: &mut SdlpRunState, source: &mut dyn ScenarioSource) -> Result<()> {
    let k = run.iteration + 1;
    let previous_incumbent = run.root_incumbent.clone();
    let (u0, f_cand_old, f_inc_old) = solve_root(inst, run)?;
    let path = source.sample();
    if path.observations.len() != run.horizon {
        return Err(MslpError::Dimension(format!(
            "sample path has {} stages, expected {}",
            path.observations.len(),
            run.horizon
        )));
    }
    let incumbent = prediction_pass(inst, run, &path)?;
    let (candidate, forward) = optimization_pass(inst, run, &path, &incumbent, &u0)?;
    run.incumbent = incumbent;
    run.candidate = candidate;
    for t in 1..=run.horizon {
        run.stages[t].observations.record(path.at(t))?;
    }
    terminal_update(inst, run, &path)?;
    for t in (1..run.horizon).rev() {
        nonterminal_update(inst, run, &path, t)?;
    }
    let f_cand = run.root_value(inst, &u0)?;
    let f_inc = run.root_value(inst, &previous_incumbent)?;
    let changed = root_incumbent_test(run, f_cand, f_inc, f_cand_old, f_inc_old);
    let root_forward = f_cand_old;
    run.iteration = k;
    run.last = IterationRecord {
        k,
        incumbent_value: if changed { f_cand } else { f_inc },
        candidate_value: f_cand,
        step: norm2(&crate::linalg::sub(&u0, &previous_incumbent)),
        incumbent_changed: changed,
        pool_sizes: (1..=run.horizon).map(|t| run.stages[t].observations.len()).collect(),
        forward_costs: std::iter::once(root_forward).chain(forward).collect(),
    };
    Ok(())
}

/// Runs `iterations` iterations, calling `on_iteration` after each.
pub fn sdlp_run(
    inst: &MslpInstance,
    run: &mut SdlpRunState,
    source: &mut dyn ScenarioSource,
    iterations: usize,
    mut on_iteration: impl FnMut(&SdlpRunState),
) -> Result<()> {
    for _ in 0..iterations {
        sdlp_iterate(inst, run, source)?;
        on_iteration(run);
    }
    Ok(())
}
