//! Cost-to-go of the sample average defined by an SDLP run's pools.

use super::extensive::{solve_extensive, DEFAULT_PATH_CAP};
use crate::error::Result;
use crate::instance::{MslpInstance, Observation, Support};
use crate::sdlp::SdlpRunState;
use crate::stage::solve_myopic;

/// Branching laws `Ω_t^k` with frequencies `p^k`, indexed by stage; entry 0
/// is the root support.
pub fn pool_laws(inst: &MslpInstance, run: &SdlpRunState) -> Vec<Support> {
    let mut laws = vec![inst.support[0].clone()];
    for t in 1..=run.horizon {
        let pool = &run.stages[t].observations;
        laws.push(Support {
            observations: pool.observations().to_vec(),
            probabilities: pool.frequencies(),
        });
    }
    laws
}

/// `H_t^k(x, ω)`: one stage solved exactly with `Σ p^k h_{t+1}^k` as the
/// future cost; the exact terminal LP at `t = T`.
pub fn eval_h(inst: &MslpInstance, run: &SdlpRunState, t: usize, x: &[f64], obs: &Observation) -> Result<f64> {
    if t == run.horizon {
        return Ok(solve_myopic(inst, t, obs, x)?.value);
    }
    let prob = run.stage_problem(inst, t, obs, x)?;
    Ok(prob.solve(t, x)?.value)
}

/// The benchmark `𝓗_t^k(x, ω)`: the deterministic equivalent of the pooled
/// sample average from stage `t` on.
pub fn benchmark_h(inst: &MslpInstance, run: &SdlpRunState, t: usize, x: &[f64], obs: &Observation) -> Result<f64> {
    let laws = pool_laws(inst, run);
    Ok(solve_extensive(inst, &laws, t, x, obs, DEFAULT_PATH_CAP)?.value)
}
