//! Deterministic equivalent over an explicitly enumerated scenario tree.

use crate::error::{MslpError, Result};
use crate::instance::{MslpInstance, Observation, Support};
use crate::linalg::{dot, Matrix};
use crate::lp::{solve_lp, LpProblem, LpStatus};

pub const DEFAULT_PATH_CAP: usize = 10_000;

#[derive(Debug, Clone)]
pub struct ExtensiveSolution {
    /// Expected cost from stage `t` on, stage-`t` cost included.
    pub value: f64,
    pub root_decision: Vec<f64>,
    pub paths: usize,
    pub nodes: usize,
}

struct Node {
    stage: usize,
    prob: f64,
    var: usize,
    x_const: Vec<f64>,
    /// `x = x_const + Σ M u_anc` as `(ancestor var offset, M)`.
    x_terms: Vec<(usize, Matrix)>,
}

/// Solves the tree rooted at `(t, x, obs)` whose stage `s > t` branches on
/// `laws[s]` (indexed by stage).
pub fn solve_extensive(
    inst: &MslpInstance,
    laws: &[Support],
    t: usize,
    x: &[f64],
    obs: &Observation,
    path_cap: usize,
) -> Result<ExtensiveSolution> {
    let horizon = inst.horizon();
    let paths = laws[t + 1..=horizon]
        .iter()
        .map(|s| s.observations.len())
        .fold(1usize, |a, b| a.saturating_mul(b));
    if paths > path_cap {
        return Err(MslpError::TooManyPaths { paths, cap: path_cap });
    }

    let mut nodes = vec![Node {
        stage: t,
        prob: 1.0,
        var: 0,
        x_const: x.to_vec(),
        x_terms: Vec::new(),
    }];
    let mut node_obs: Vec<&Observation> = vec![obs];
    let mut n_vars = inst.stages[t].decision_dim();
    let mut frontier = vec![0usize];
    for s in t + 1..=horizon {
        let mut next = Vec::new();
        for &parent in &frontier {
            for (o, &p) in laws[s].observations.iter().zip(&laws[s].probabilities) {
                let pn = &nodes[parent];
                let x_const: Vec<f64> = {
                    let ax = o.transition.mul_vec(&pn.x_const);
                    o.drift.iter().zip(ax).map(|(a, b)| a + b).collect()
                };
                let mut x_terms: Vec<(usize, Matrix)> =
                    pn.x_terms.iter().map(|(v, m)| (*v, o.transition.mul(m))).collect();
                x_terms.push((pn.var, o.input.clone()));
                let node = Node {
                    stage: s,
                    prob: pn.prob * p,
                    var: n_vars,
                    x_const,
                    x_terms,
                };
                n_vars += inst.stages[s].decision_dim();
                nodes.push(node);
                node_obs.push(o);
                next.push(nodes.len() - 1);
            }
        }
        frontier = next;
    }

    let mut objective = vec![0.0; n_vars];
    let mut constant = 0.0;
    let mut a = Matrix::zeros(0, n_vars);
    let mut rhs = Vec::new();
    for (node, o) in nodes.iter().zip(&node_obs) {
        let st = &inst.stages[node.stage];
        let n = st.decision_dim();
        constant += node.prob * (st.offset + dot(&st.state_cost, &node.x_const));
        for j in 0..n {
            objective[node.var + j] += node.prob * st.decision_cost[j];
        }
        for (v, m) in &node.x_terms {
            let cm = m.tr_mul_vec(&st.state_cost);
            for (j, val) in cm.iter().enumerate() {
                objective[v + j] += node.prob * val;
            }
        }
        let base = o.rhs_at(&node.x_const);
        let blocks: Vec<(usize, Matrix)> = node.x_terms.iter().map(|(v, m)| (*v, o.technology.mul(m))).collect();
        for i in 0..st.rows() {
            let mut row = vec![0.0; n_vars];
            row[node.var..node.var + n].copy_from_slice(st.recourse.row(i));
            for (v, cm) in &blocks {
                for (j, val) in cm.row(i).iter().enumerate() {
                    row[v + j] += val;
                }
            }
            a.push_row(&row);
            rhs.push(base[i]);
        }
    }
    let sol = solve_lp(&LpProblem::new(objective, a, rhs))?;
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
    let n0 = inst.stages[t].decision_dim();
    Ok(ExtensiveSolution {
        value: sol.objective + constant,
        root_decision: sol.primal[..n0].to_vec(),
        paths,
        nodes: nodes.len(),
    })
}

/// Ground-truth optimum `V*` of the whole instance.
pub fn solve_instance(inst: &MslpInstance) -> Result<ExtensiveSolution> {
    solve_extensive(
        inst,
        &inst.support,
        0,
        &inst.initial_state,
        inst.root_observation(),
        DEFAULT_PATH_CAP,
    )
}

/// True expected cost of fixing the root decision to `u0` and acting
/// optimally afterwards.
pub fn root_decision_value(inst: &MslpInstance, u0: &[f64]) -> Result<f64> {
    let x0 = &inst.initial_state;
    let mut v = inst.stage_cost(0, x0, u0);
    if inst.horizon() == 0 {
        return Ok(v);
    }
    let sup = &inst.support[1];
    for (o, &p) in sup.observations.iter().zip(&sup.probabilities) {
        let x1 = crate::instance::apply_dynamics(x0, o, u0)?;
        v += p * solve_extensive(inst, &inst.support, 1, &x1, o, DEFAULT_PATH_CAP)?.value;
    }
    Ok(v)
}
