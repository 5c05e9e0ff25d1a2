//! Stage problems with a piecewise-affine cost-to-go, shared by every method.
//!
//! Variables are `u` followed by one epigraph variable `θ` per next-stage
//! observation. Each affine piece `(α, β)` attached to observation `ω'`
//! contributes the row `⟨B'ᵀβ, u⟩ − θ_{ω'} ≤ −α − ⟨β, a' + A'x⟩`; `θ ≥ 0`
//! stands in for the zero piece.

use crate::error::{MslpError, Result};
use crate::instance::{MslpInstance, Observation};
use crate::linalg::{dot, Matrix};
use crate::lp::{solve_lp, solve_qp_from, LpProblem, LpSolution, LpStatus, QpProblem};
use serde::{Deserialize, Serialize};

/// Affine function `α + ⟨β, x⟩`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub alpha: f64,
    pub beta: Vec<f64>,
}

impl Affine {
    pub fn zero(dim: usize) -> Self {
        Self {
            alpha: 0.0,
            beta: vec![0.0; dim],
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.alpha + dot(&self.beta, x)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            alpha: s * self.alpha,
            beta: self.beta.iter().map(|b| s * b).collect(),
        }
    }
}

/// Cost-to-go approximation for one next-stage observation.
#[derive(Debug, Clone)]
pub struct FutureTerm<'a> {
    pub observation: &'a Observation,
    pub probability: f64,
    pub pieces: Vec<Affine>,
}

/// Dual information of a solved stage problem, in a form that yields a valid
/// affine minorant for any observation of the same stage:
/// `e + ⟨π, b⟩ + const + ⟨c − Cᵀπ + grad, x⟩`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineDual {
    pub pi: Vec<f64>,
    pub future_const: f64,
    pub future_grad: Vec<f64>,
}

impl AffineDual {
    /// Minorant coefficients at observation `obs` of stage `t`.
    pub fn coefficients(&self, inst: &MslpInstance, t: usize, obs: &Observation) -> Affine {
        let s = &inst.stages[t];
        let ctp = if s.rows() > 0 {
            obs.technology.tr_mul_vec(&self.pi)
        } else {
            vec![0.0; s.state_dim()]
        };
        Affine {
            alpha: s.offset + dot(&self.pi, &obs.rhs) + self.future_const,
            beta: (0..s.state_dim())
                .map(|j| s.state_cost[j] - ctp[j] + self.future_grad[j])
                .collect(),
        }
    }
}

/// An assembled stage LP at a fixed state and observation.
#[derive(Debug, Clone)]
pub struct StageProblem {
    pub lp: LpProblem,
    /// `e + ⟨c, x⟩`, excluded from the LP objective.
    pub constant: f64,
    pub decision_dim: usize,
    pub state_dim: usize,
    pub recourse_rows: usize,
    /// `(future term, piece)` of each epigraph row.
    pub piece_rows: Vec<(usize, usize)>,
    /// Per future term: `a'` and `A'ᵀ`, kept for dual aggregation.
    drift_at: Vec<Vec<f64>>,
    transition_t: Vec<Matrix>,
    pieces: Vec<Vec<Affine>>,
}

/// Stage outcome.
#[derive(Debug, Clone)]
pub struct StageSolution {
    pub decision: Vec<f64>,
    /// Epigraph values, one per future term.
    pub epigraph: Vec<f64>,
    /// `e + ⟨c, x⟩ + ⟨d, u⟩ + Σ p θ` (without any proximal term).
    pub value: f64,
    pub raw: LpSolution,
}

pub fn build_stage_problem(
    inst: &MslpInstance,
    t: usize,
    obs: &Observation,
    x: &[f64],
    future: &[FutureTerm<'_>],
) -> Result<StageProblem> {
    let s = &inst.stages[t];
    let (n, m, k) = (s.decision_dim(), s.rows(), future.len());
    if x.len() != s.state_dim() {
        return Err(MslpError::Dimension(format!(
            "stage {} state has length {}, expected {}",
            t,
            x.len(),
            s.state_dim()
        )));
    }
    let total_pieces: usize = future.iter().map(|f| f.pieces.len()).sum();
    let mut a = Matrix::zeros(0, n + k);
    let mut rhs = obs.rhs_at(x);
    for i in 0..m {
        let mut row = s.recourse.row(i).to_vec();
        row.resize(n + k, 0.0);
        a.push_row(&row);
    }
    let mut piece_rows = Vec::with_capacity(total_pieces);
    let mut drift_at = Vec::with_capacity(k);
    let mut transition_t = Vec::with_capacity(k);
    for (j, term) in future.iter().enumerate() {
        let o = term.observation;
        let ax = o.transition.mul_vec(x);
        let base: Vec<f64> = o.drift.iter().zip(&ax).map(|(a, b)| a + b).collect();
        for (p, piece) in term.pieces.iter().enumerate() {
            let btb = o.input.tr_mul_vec(&piece.beta);
            let mut row = btb;
            row.resize(n + k, 0.0);
            row[n + j] = -1.0;
            a.push_row(&row);
            rhs.push(-piece.eval(&base));
            piece_rows.push((j, p));
        }
        drift_at.push(o.drift.clone());
        transition_t.push(o.transition.transpose());
    }
    if a.rows() == 0 {
        a = Matrix::zeros(0, n + k);
    }
    let mut objective = s.decision_cost.clone();
    objective.extend(future.iter().map(|f| f.probability));
    Ok(StageProblem {
        lp: LpProblem::new(objective, a, rhs),
        constant: s.offset + dot(&s.state_cost, x),
        decision_dim: n,
        state_dim: x.len(),
        recourse_rows: m,
        piece_rows,
        drift_at,
        transition_t,
        pieces: future.iter().map(|f| f.pieces.clone()).collect(),
    })
}

impl StageProblem {
    pub fn solve(&self, t: usize, x: &[f64]) -> Result<StageSolution> {
        let raw = solve_lp(&self.lp)?;
        self.finish(t, x, raw)
    }

    /// Solves with `σ/2 ‖u − center‖²` added; `value` excludes that term.
    pub fn solve_proximal(
        &self,
        t: usize,
        x: &[f64],
        center: &[f64],
        sigma: f64,
    ) -> Result<(StageSolution, QpProblem)> {
        let qp = QpProblem {
            lp: self.lp.clone(),
            center: center.to_vec(),
            sigma,
        };
        let start = self.start_point(center);
        let raw = solve_qp_from(&qp, Some(&start))?;
        Ok((self.finish(t, x, raw)?, qp))
    }

    /// `center` with each `θ` at the smallest feasible value.
    fn start_point(&self, center: &[f64]) -> Vec<f64> {
        let n = self.decision_dim;
        let mut z = center.to_vec();
        z.resize(self.lp.num_vars(), 0.0);
        for (r, &(j, _)) in self.piece_rows.iter().enumerate() {
            let row = self.lp.constraints.row(self.recourse_rows + r);
            let need = dot(&row[..n], center) - self.lp.rhs[self.recourse_rows + r];
            if need > z[n + j] {
                z[n + j] = need;
            }
        }
        z
    }

    fn finish(&self, t: usize, x: &[f64], raw: LpSolution) -> Result<StageSolution> {
        match raw.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => {
                return Err(MslpError::Infeasible {
                    stage: t,
                    state: x.to_vec(),
                })
            }
            LpStatus::Unbounded => return Err(MslpError::Unbounded { stage: t }),
        }
        let n = self.decision_dim;
        let decision = raw.primal[..n].iter().map(|v| v.max(0.0)).collect::<Vec<_>>();
        let epigraph = raw.primal[n..].to_vec();
        let value = self.constant + dot(&self.lp.objective, &raw.primal);
        Ok(StageSolution {
            decision,
            epigraph,
            value,
            raw,
        })
    }

    /// Aggregates the row duals of a solved problem into an [`AffineDual`].
    pub fn affine_dual(&self, sol: &StageSolution) -> AffineDual {
        let y = &sol.raw.dual;
        let m = self.recourse_rows;
        let sd = self.state_dim;
        let mut future_const = 0.0;
        let mut future_grad = vec![0.0; sd];
        for (r, &(j, p)) in self.piece_rows.iter().enumerate() {
            let w = -y[m + r];
            if w == 0.0 {
                continue;
            }
            let piece = &self.pieces[j][p];
            future_const += w * piece.eval(&self.drift_at[j]);
            let g = self.transition_t[j].mul_vec(&piece.beta);
            for (fg, gv) in future_grad.iter_mut().zip(g) {
                *fg += w * gv;
            }
        }
        AffineDual {
            pi: y[..m].to_vec(),
            future_const,
            future_grad,
        }
    }
}

/// `AffineDual` of a stage with no future (terminal, or myopic).
pub fn terminal_dual(pi: Vec<f64>, state_dim: usize) -> AffineDual {
    AffineDual {
        pi,
        future_const: 0.0,
        future_grad: vec![0.0; state_dim],
    }
}

/// Solves the stage LP with no future: `min ⟨d, u⟩` over `U_t(x, ω)`.
pub fn solve_myopic(inst: &MslpInstance, t: usize, obs: &Observation, x: &[f64]) -> Result<StageSolution> {
    build_stage_problem(inst, t, obs, x, &[])?.solve(t, x)
}
