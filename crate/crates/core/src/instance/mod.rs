//! Multistage stochastic LP in state-variable form.
//!
//! Stage `t` chooses `u_t ≥ 0` with `D_t u_t ≤ b_t − C_t x_t` at cost
//! `e_t + ⟨c_t, x_t⟩ + ⟨d_t, u_t⟩`, and the endogenous state moves by
//! `x_{t+1} = a_{t+1} + A_{t+1} x_t + B_{t+1} u_t`. The exogenous data
//! `(a, A, B, b, C)` of stages `1..=T` is drawn stagewise independently from
//! finite supports.

mod shift;
mod validate;

pub use shift::{shift_nonneg, stage_cost_lower_bounds};
pub use validate::{validate, Assumption, ValidationReport, Violation};

use crate::error::{MslpError, Result};
use crate::linalg::{bits_eq, Matrix};
use serde::{Deserialize, Serialize};
use std::hash::{Hash, Hasher};

/// Deterministic data of one stage; random components hold their defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageTemplate {
    /// Constant added to the stage cost (nonzero after shifting).
    pub offset: f64,
    pub state_cost: Vec<f64>,
    pub decision_cost: Vec<f64>,
    pub recourse: Matrix,
    pub rhs: Vec<f64>,
    pub technology: Matrix,
    pub drift: Vec<f64>,
    pub transition: Matrix,
    pub input: Matrix,
}

impl StageTemplate {
    pub fn state_dim(&self) -> usize {
        self.state_cost.len()
    }

    pub fn decision_dim(&self) -> usize {
        self.decision_cost.len()
    }

    pub fn rows(&self) -> usize {
        self.rhs.len()
    }
}

/// A realization of the exogenous data of one stage.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Observation {
    pub stage: usize,
    pub drift: Vec<f64>,
    pub transition: Matrix,
    pub input: Matrix,
    pub rhs: Vec<f64>,
    pub technology: Matrix,
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv_word(h: u64, w: u64) -> u64 {
    let mut h = h;
    for byte in w.to_le_bytes() {
        h ^= byte as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

impl Observation {
    /// Stable identity key: FNV-1a over the stage, shapes and bit patterns.
    pub fn key(&self) -> u64 {
        let mut h = fnv_word(FNV_OFFSET, self.stage as u64);
        let mut feed = |shape: (usize, usize), data: &[f64]| {
            h = fnv_word(h, shape.0 as u64);
            h = fnv_word(h, shape.1 as u64);
            for v in data {
                h = fnv_word(h, v.to_bits());
            }
        };
        feed((self.drift.len(), 1), &self.drift);
        feed(self.transition.shape(), self.transition.data());
        feed(self.input.shape(), self.input.data());
        feed((self.rhs.len(), 1), &self.rhs);
        feed(self.technology.shape(), self.technology.data());
        h
    }

    /// `b − C x`
    pub fn rhs_at(&self, x: &[f64]) -> Vec<f64> {
        let cx = self.technology.mul_vec(x);
        self.rhs.iter().zip(cx).map(|(b, c)| b - c).collect()
    }
}

impl PartialEq for Observation {
    fn eq(&self, other: &Self) -> bool {
        self.stage == other.stage
            && bits_eq(&self.drift, &other.drift)
            && self.transition.bit_eq(&other.transition)
            && self.input.bit_eq(&other.input)
            && bits_eq(&self.rhs, &other.rhs)
            && self.technology.bit_eq(&other.technology)
    }
}

impl Eq for Observation {}

impl Hash for Observation {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.key());
    }
}

/// Finite support of one stage.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Support {
    pub observations: Vec<Observation>,
    pub probabilities: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MslpInstance {
    pub name: String,
    pub initial_state: Vec<f64>,
    /// Templates for stages `0..=T`.
    pub stages: Vec<StageTemplate>,
    /// Supports for stages `0..=T`; entry 0 is the deterministic root.
    pub support: Vec<Support>,
}

impl MslpInstance {
    pub fn horizon(&self) -> usize {
        self.stages.len() - 1
    }

    pub fn root_observation(&self) -> &Observation {
        &self.support[0].observations[0]
    }

    /// Number of scenario paths through stages `from..=T`.
    pub fn path_count(&self, from: usize) -> usize {
        self.support[from..]
            .iter()
            .map(|s| s.observations.len())
            .fold(1usize, |a, b| a.saturating_mul(b))
    }

    /// Builds the root singleton support from the stage-0 template.
    pub fn root_support(stage0: &StageTemplate) -> Support {
        let sd = stage0.state_dim();
        Support {
            observations: vec![Observation {
                stage: 0,
                drift: vec![0.0; sd],
                transition: Matrix::zeros(sd, 0),
                input: Matrix::zeros(sd, 0),
                rhs: stage0.rhs.clone(),
                technology: stage0.technology.clone(),
            }],
            probabilities: vec![1.0],
        }
    }

    /// Observation built from the template defaults of stage `t`.
    pub fn default_observation(&self, t: usize) -> Observation {
        let s = &self.stages[t];
        Observation {
            stage: t,
            drift: s.drift.clone(),
            transition: s.transition.clone(),
            input: s.input.clone(),
            rhs: s.rhs.clone(),
            technology: s.technology.clone(),
        }
    }

    /// Stage cost `e_t + ⟨c_t, x⟩ + ⟨d_t, u⟩`.
    pub fn stage_cost(&self, t: usize, x: &[f64], u: &[f64]) -> f64 {
        let s = &self.stages[t];
        s.offset + crate::linalg::dot(&s.state_cost, x) + crate::linalg::dot(&s.decision_cost, u)
    }

    /// Checks that `u ∈ U_t(x, ω)` up to `tol`.
    pub fn is_feasible(&self, t: usize, obs: &Observation, x: &[f64], u: &[f64], tol: f64) -> bool {
        if u.iter().any(|&v| v < -tol) {
            return false;
        }
        let du = self.stages[t].recourse.mul_vec(u);
        let rhs = obs.rhs_at(x);
        du.iter().zip(&rhs).all(|(a, b)| *a <= b + tol)
    }
}

/// Endogenous state at stage `t` plus the exogenous observation revealed there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub stage: usize,
    pub x: Vec<f64>,
    pub observation: Observation,
}

/// `a + A x + B u` using the next stage's observation.
pub fn apply_dynamics(x: &[f64], next: &Observation, u: &[f64]) -> Result<Vec<f64>> {
    let (ar, ac) = next.transition.shape();
    let (br, bc) = next.input.shape();
    if ac != x.len() || bc != u.len() || ar != next.drift.len() || br != next.drift.len() {
        return Err(MslpError::Dimension(format!(
            "dynamics of stage {}: drift {}, transition {}x{}, input {}x{}, state {}, decision {}",
            next.stage,
            next.drift.len(),
            ar,
            ac,
            br,
            bc,
            x.len(),
            u.len()
        )));
    }
    let ax = next.transition.mul_vec(x);
    let bu = next.input.mul_vec(u);
    Ok((0..ar).map(|i| next.drift[i] + ax[i] + bu[i]).collect())
}

/// Same as [`apply_dynamics`] for a [`State`].
pub fn apply_dynamics_state(state: &State, next: &Observation, u: &[f64]) -> Result<Vec<f64>> {
    apply_dynamics(&state.x, next, u)
}
