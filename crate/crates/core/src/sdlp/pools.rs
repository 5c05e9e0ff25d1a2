use crate::linalg::Matrix;
use crate::lp::{basis_inverse, Tolerances};
use crate::stage::Affine;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PieceKind {
    Candidate,
    Incumbent,
}

/// One affine minorant of the stage cost-to-go, stored unscaled with its
/// cumulative scale factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Minorant {
    pub stage: usize,
    pub origin: usize,
    pub kind: PieceKind,
    pub scale: f64,
    /// Indexed by observation-pool index; `None` for observations first seen
    /// after the piece was formed.
    pub coefficients: Vec<Option<Affine>>,
}

impl Minorant {
    pub fn value(&self, obs: usize, x: &[f64]) -> Option<f64> {
        self.coefficients
            .get(obs)?
            .as_ref()
            .map(|c| self.scale * c.eval(x))
    }

    /// Coefficients with the scale applied.
    pub fn effective(&self, obs: usize) -> Option<Affine> {
        self.coefficients
            .get(obs)?
            .as_ref()
            .map(|c| c.scaled(self.scale))
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.coefficients
            .iter()
            .flatten()
            .map(|c| {
                c.beta
                    .iter()
                    .fold(c.alpha.abs(), |m, b| m.max(b.abs()))
                    * self.scale
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinorantPool {
    pub stage: usize,
    pub horizon: usize,
    pub iteration: usize,
    pub pieces: Vec<Minorant>,
}

impl MinorantPool {
    pub fn new(stage: usize, horizon: usize) -> Self {
        Self {
            stage,
            horizon,
            iteration: 0,
            pieces: Vec::new(),
        }
    }

    /// `h_t^k(x, ω)`: the largest scaled piece, or zero.
    pub fn value(&self, obs: usize, x: &[f64]) -> f64 {
        self.pieces
            .iter()
            .filter_map(|p| p.value(obs, x))
            .fold(0.0, f64::max)
    }

    /// Index of the maximizing piece at `(x, ω)`, newest on ties; `None`
    /// when the zero piece is strictly best.
    pub fn select(&self, obs: usize, x: &[f64]) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, p) in self.pieces.iter().enumerate() {
            if let Some(v) = p.value(obs, x) {
                if v >= 0.0 && best.is_none_or(|(_, b)| v >= b) {
                    best = Some((i, v));
                }
            }
        }
        best.map(|(i, _)| i)
    }

    pub fn pieces_for(&self, obs: usize) -> Vec<Affine> {
        self.pieces.iter().filter_map(|p| p.effective(obs)).collect()
    }

    /// `((k−1)/k)^{T−t}`
    pub fn factor(&self, k: usize) -> f64 {
        let r = (k as f64 - 1.0) / k as f64;
        r.powi((self.horizon - self.stage) as i32)
    }

    /// Multiplies the scale of every piece born before iteration `k`.
    pub fn scale_pool(&mut self, k: usize) {
        let f = self.factor(k);
        if f != 1.0 {
            for p in self.pieces.iter_mut().filter(|p| p.origin < k) {
                p.scale *= f;
            }
        }
        self.iteration = k;
    }

    /// Drops low pieces until at most `cap` older pieces remain; pieces of
    /// the current iteration are kept.
    pub fn truncate(&mut self, cap: usize, k: usize, obs: usize, x: &[f64]) {
        loop {
            let old: Vec<usize> = (0..self.pieces.len()).filter(|&i| self.pieces[i].origin < k).collect();
            if old.len() <= cap {
                return;
            }
            let worst = old
                .iter()
                .copied()
                .min_by(|&a, &b| {
                    let va = self.pieces[a].value(obs, x).unwrap_or(f64::NEG_INFINITY);
                    let vb = self.pieces[b].value(obs, x).unwrap_or(f64::NEG_INFINITY);
                    va.total_cmp(&vb)
                })
                .expect("nonempty");
            self.pieces.remove(worst);
        }
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.pieces.iter().map(|p| p.max_abs_coefficient()).fold(0.0, f64::max)
    }
}

/// A dual vertex with the aggregates of the SDA that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualVertex {
    pub pi: Vec<f64>,
    pub origin: usize,
    pub alpha_bar: f64,
    pub beta_bar: Vec<f64>,
    pub rho_bar: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DualVertexPool {
    pub stage: usize,
    pub vertices: Vec<DualVertex>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisEntry {
    /// Sorted basic columns of `[D | I]`.
    pub basis: Vec<usize>,
    pub origin: usize,
    pub inverse: Matrix,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BasisIndexPool {
    pub stage: usize,
    pub entries: Vec<BasisEntry>,
}

impl BasisIndexPool {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, basis: &[usize]) -> bool {
        self.entries.iter().any(|e| e.basis == basis)
    }

    /// Adds a basis unless already present or singular; returns whether it
    /// was added.
    pub fn add(&mut self, basis: &[usize], origin: usize, recourse: &Matrix, tol: &Tolerances) -> bool {
        let mut sorted = basis.to_vec();
        sorted.sort_unstable();
        if self.contains(&sorted) {
            return false;
        }
        match basis_inverse(&sorted, recourse, tol) {
            Ok(inverse) => {
                self.entries.push(BasisEntry {
                    basis: sorted,
                    origin,
                    inverse,
                });
                true
            }
            Err(e) => {
                log::warn!("stage {}: skipping basis {:?}: {}", self.stage, sorted, e);
                false
            }
        }
    }
}
