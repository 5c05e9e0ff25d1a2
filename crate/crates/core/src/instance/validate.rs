use super::{apply_dynamics, MslpInstance};
use crate::linalg::Matrix;
use crate::lp::{solve_lp, LpProblem, LpStatus};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::fmt;

const PROBE_TRAJECTORIES: usize = 200;
const PROBE_SEED: u64 = 0x5eed_a2a2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Assumption {
    /// Compact root feasible set.
    A1,
    /// Complete recourse.
    A2,
    /// Fixed, full row rank recourse matrices.
    A3,
    /// Nonnegative cost-to-go.
    A4,
    /// Finite, stagewise independent support.
    A5,
    Dimensions,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub assumption: Assumption,
    pub stage: Option<usize>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.stage {
            Some(t) => write!(f, "{:?} (stage {}): {}", self.assumption, t, self.message),
            None => write!(f, "{:?}: {}", self.assumption, self.message),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, a: Assumption) -> bool {
        self.violations.iter().any(|v| v.assumption == a)
    }

    fn push(&mut self, assumption: Assumption, stage: Option<usize>, message: impl Into<String>) {
        self.violations.push(Violation {
            assumption,
            stage,
            message: message.into(),
        });
    }
}

/// Checks dimensions, A1, A3, A5 and probes A2 on random trajectories.
pub fn validate(inst: &MslpInstance) -> ValidationReport {
    let mut rep = ValidationReport::default();
    check_dimensions(inst, &mut rep);
    if !rep.is_clean() {
        return rep;
    }
    check_support(inst, &mut rep);
    for (t, s) in inst.stages.iter().enumerate() {
        if s.rows() > 0 && s.recourse.rank(1e-10) < s.rows() {
            rep.push(Assumption::A3, Some(t), "recourse matrix is rank deficient");
        }
    }
    check_root_bounded(inst, &mut rep);
    if rep.is_clean() {
        probe_recourse(inst, &mut rep);
    }
    rep
}

fn check_dimensions(inst: &MslpInstance, rep: &mut ValidationReport) {
    let dim = Assumption::Dimensions;
    if inst.stages.is_empty() {
        rep.push(dim, None, "no stages");
        return;
    }
    if inst.support.len() != inst.stages.len() {
        rep.push(dim, None, "one support per stage is required");
        return;
    }
    if inst.initial_state.len() != inst.stages[0].state_dim() {
        rep.push(dim, Some(0), "initial state length differs from stage 0 state dimension");
    }
    for (t, s) in inst.stages.iter().enumerate() {
        let (m, n, sd) = (s.rows(), s.decision_dim(), s.state_dim());
        if s.recourse.shape() != (m, n) && !(m == 0 && s.recourse.rows() == 0) {
            rep.push(dim, Some(t), format!("recourse is {:?}, expected {}x{}", s.recourse.shape(), m, n));
        }
        for (k, o) in inst.support[t].observations.iter().enumerate() {
            if o.stage != t {
                rep.push(dim, Some(t), format!("observation {} is labelled stage {}", k, o.stage));
            }
            if o.rhs.len() != m || o.technology.rows() != m || (m > 0 && o.technology.cols() != sd) {
                rep.push(dim, Some(t), format!("observation {} right-hand side does not match", k));
            }
            if t > 0 {
                let prev = &inst.stages[t - 1];
                if o.drift.len() != sd
                    || o.transition.shape() != (sd, prev.state_dim())
                    || o.input.shape() != (sd, prev.decision_dim())
                {
                    rep.push(dim, Some(t), format!("observation {} dynamics do not match", k));
                }
            }
        }
    }
}

fn check_support(inst: &MslpInstance, rep: &mut ValidationReport) {
    if inst.support[0].observations.len() != 1 {
        rep.push(Assumption::A5, Some(0), "root support must be a singleton");
    }
    for (t, s) in inst.support.iter().enumerate() {
        if s.observations.is_empty() {
            rep.push(Assumption::A5, Some(t), "empty support");
            continue;
        }
        if s.probabilities.len() != s.observations.len() {
            rep.push(Assumption::A5, Some(t), "probability count differs from observation count");
            continue;
        }
        if s.probabilities.iter().any(|p| !p.is_finite() || *p < 0.0) {
            rep.push(Assumption::A5, Some(t), "negative or non-finite probability");
        }
        let total: f64 = s.probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            rep.push(
                Assumption::A5,
                Some(t),
                format!("probabilities sum to {} instead of 1 (normalization)", total),
            );
        }
        for (i, a) in s.observations.iter().enumerate() {
            if s.observations[..i].iter().any(|b| b == a) {
                rep.push(Assumption::A5, Some(t), format!("observation {} is duplicated", i));
            }
        }
    }
}

/// A1: maximize each root decision over `U_0`.
fn check_root_bounded(inst: &MslpInstance, rep: &mut ValidationReport) {
    let s0 = &inst.stages[0];
    let n = s0.decision_dim();
    let rhs = inst.root_observation().rhs_at(&inst.initial_state);
    for i in 0..n {
        let mut c = vec![0.0; n];
        c[i] = -1.0;
        let lp = LpProblem::new(c, s0.recourse.clone(), rhs.clone());
        match solve_lp(&lp) {
            Ok(sol) => match sol.status {
                LpStatus::Optimal => {}
                LpStatus::Unbounded => {
                    rep.push(Assumption::A1, Some(0), format!("root decision {} is unbounded", i));
                }
                LpStatus::Infeasible => {
                    rep.push(Assumption::A1, Some(0), "root feasible set is empty");
                    return;
                }
            },
            Err(e) => rep.push(Assumption::A1, Some(0), format!("boundedness check failed: {}", e)),
        }
    }
}

/// A2 probe: random feasible trajectories must find every stage feasible.
fn probe_recourse(inst: &MslpInstance, rep: &mut ValidationReport) {
    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
    let horizon = inst.horizon();
    for _ in 0..PROBE_TRAJECTORIES {
        let mut x = inst.initial_state.clone();
        let mut obs = inst.root_observation().clone();
        for t in 0..=horizon {
            let s = &inst.stages[t];
            let rhs = obs.rhs_at(&x);
            let Some(u) = random_vertex(&mut rng, &s.recourse, &rhs) else {
                rep.push(
                    Assumption::A2,
                    Some(t),
                    format!("complete recourse not certified: infeasible at state {:?}", x),
                );
                return;
            };
            if t == horizon {
                break;
            }
            let sup = &inst.support[t + 1];
            let k = sample_index(&mut rng, &sup.probabilities);
            obs = sup.observations[k].clone();
            x = match apply_dynamics(&x, &obs, &u) {
                Ok(x) => x,
                Err(e) => {
                    rep.push(Assumption::Dimensions, Some(t + 1), e.to_string());
                    return;
                }
            };
        }
    }
}

fn random_vertex(rng: &mut ChaCha8Rng, d: &Matrix, rhs: &[f64]) -> Option<Vec<f64>> {
    let n = d.cols();
    let signed: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let nonneg: Vec<f64> = signed.iter().map(|v| v.abs()).collect();
    for cost in [signed, nonneg] {
        let lp = LpProblem::new(cost, d.clone(), rhs.to_vec());
        match solve_lp(&lp) {
            Ok(sol) if sol.status == LpStatus::Optimal => return Some(sol.primal),
            Ok(sol) if sol.status == LpStatus::Infeasible => return None,
            _ => {}
        }
    }
    None
}

pub(crate) fn sample_index(rng: &mut impl Rng, probs: &[f64]) -> usize {
    let r: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if r < acc {
            return i;
        }
    }
    probs.len() - 1
}
