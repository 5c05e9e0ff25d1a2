//! Monte-Carlo evaluation of trained policies on fresh sample paths.

use crate::error::{MslpError, Result};
use crate::instance::{apply_dynamics, MslpInstance};
use crate::process::ScenarioSource;
use crate::sddp::{solve_stage, CutPool};
use crate::sdlp::{bfp_select, SdlpRunState};
use crate::stage::solve_myopic;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PolicyKind {
    /// Minimize the final approximation `f_t` at each stage.
    Greedy,
    /// Root incumbent, then the basic feasible policy.
    Bfp,
}

#[derive(Debug, Clone, Copy)]
pub enum TrainedModel<'a> {
    Sdlp(&'a SdlpRunState),
    Sddp(&'a [CutPool]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyEvalReport {
    pub mean: f64,
    pub std_err: f64,
    pub rollouts: usize,
    /// Discarded rollouts by the stage where they became infeasible.
    pub infeasible: Vec<usize>,
}

pub fn evaluate_policy(
    inst: &MslpInstance,
    model: TrainedModel<'_>,
    kind: PolicyKind,
    n_rollouts: usize,
    source: &mut dyn ScenarioSource,
) -> Result<PolicyEvalReport> {
    if matches!((model, kind), (TrainedModel::Sddp(_), PolicyKind::Bfp)) {
        return Err(MslpError::Config("the basic feasible policy needs an SDLP run".into()));
    }
    let horizon = inst.horizon();
    let mut costs = Vec::with_capacity(n_rollouts);
    let mut infeasible = vec![0; horizon + 1];
    for _ in 0..n_rollouts {
        let path = source.sample();
        match rollout(inst, model, kind, &path) {
            Ok(c) => costs.push(c),
            Err(MslpError::Infeasible { stage, .. }) => infeasible[stage] += 1,
            Err(e) => return Err(e),
        }
    }
    let n = costs.len();
    let mean = if n > 0 { costs.iter().sum::<f64>() / n as f64 } else { f64::NAN };
    let std_err = if n > 1 {
        let var = costs.iter().map(|c| (c - mean) * (c - mean)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    Ok(PolicyEvalReport {
        mean,
        std_err,
        rollouts: n,
        infeasible,
    })
}

fn rollout(
    inst: &MslpInstance,
    model: TrainedModel<'_>,
    kind: PolicyKind,
    path: &crate::process::SamplePath,
) -> Result<f64> {
    let horizon = inst.horizon();
    let mut x = inst.initial_state.clone();
    let mut u: Vec<f64> = Vec::new();
    let mut total = 0.0;
    for t in 0..=horizon {
        let obs = if t == 0 { inst.root_observation() } else { path.at(t) };
        if t > 0 {
            x = apply_dynamics(&x, obs, &u)?;
        }
        u = match (model, kind) {
            (TrainedModel::Sdlp(run), PolicyKind::Bfp) if t == 0 => run.root_incumbent.clone(),
            (TrainedModel::Sdlp(run), PolicyKind::Bfp) if t < horizon => match bfp_select(inst, run, t, obs, &x)? {
                Some(c) => c.decision,
                None => solve_myopic(inst, t, obs, &x)?.decision,
            },
            (TrainedModel::Sdlp(run), _) => run.stage_problem(inst, t, obs, &x)?.solve(t, &x)?.decision,
            (TrainedModel::Sddp(pools), _) => solve_stage(inst, pools, t, obs, &x)?.0.decision,
        };
        total += inst.stage_cost(t, &x, &u);
    }
    Ok(total)
}
