//! Nested Benders recursion: each stage solves a Kelley master whose cuts
//! come from recursively evaluated successor values.

use crate::error::{MslpError, Result};
use crate::instance::{apply_dynamics, MslpInstance, Observation, Support};
use crate::stage::{build_stage_problem, Affine, FutureTerm};

const MAX_MASTER_ITERATIONS: usize = 500;

/// Value and a subgradient in `x` of the cost-to-go at `(t, x, obs)` under
/// the branching laws `laws[s]` for `s > t`.
pub fn nested_value(
    inst: &MslpInstance,
    laws: &[Support],
    t: usize,
    x: &[f64],
    obs: &Observation,
    tol: f64,
) -> Result<(f64, Vec<f64>)> {
    let horizon = inst.horizon();
    let law = laws.get(t + 1).filter(|_| t < horizon);
    let mut cuts: Vec<Vec<Affine>> = vec![Vec::new(); law.map_or(0, |l| l.observations.len())];
    for _ in 0..MAX_MASTER_ITERATIONS {
        let future: Vec<FutureTerm<'_>> = match law {
            Some(l) => l
                .observations
                .iter()
                .zip(&l.probabilities)
                .zip(&cuts)
                .map(|((o, &p), c)| FutureTerm {
                    observation: o,
                    probability: p,
                    pieces: c.clone(),
                })
                .collect(),
            None => Vec::new(),
        };
        let prob = build_stage_problem(inst, t, obs, x, &future)?;
        let sol = prob.solve(t, x)?;
        let grad = prob.affine_dual(&sol).coefficients(inst, t, obs).beta;
        let Some(l) = law else {
            return Ok((sol.value, grad));
        };
        let mut upper = sol.value - sol.epigraph.iter().zip(&l.probabilities).map(|(th, p)| th * p).sum::<f64>();
        let mut new_cuts = Vec::new();
        for (j, o) in l.observations.iter().enumerate() {
            let xn = apply_dynamics(x, o, &sol.decision)?;
            let (v, g) = nested_value(inst, laws, t + 1, &xn, o, tol)?;
            upper += l.probabilities[j] * v;
            if v > sol.epigraph[j] + tol * (1.0 + v.abs()) {
                let alpha = v - g.iter().zip(&xn).map(|(a, b)| a * b).sum::<f64>();
                new_cuts.push((j, Affine { alpha, beta: g }));
            }
        }
        if upper - sol.value <= tol * (1.0 + upper.abs()) || new_cuts.is_empty() {
            return Ok((sol.value, grad));
        }
        for (j, c) in new_cuts {
            cuts[j].push(c);
        }
    }
    Err(MslpError::Lp(crate::error::LpError::MaxIterations(MAX_MASTER_ITERATIONS)))
}
