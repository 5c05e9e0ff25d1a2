//! Problem generators shared by the benchmarks.

use mslp_core::linalg::{dot, Matrix};
use mslp_core::lp::LpProblem;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A bounded, feasible LP `min ⟨c, x⟩, Ax ≤ b, x ≥ 0` with `n` variables and
/// `m + 1` rows.
pub fn random_lp(seed: u64, n: usize, m: usize) -> LpProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x0: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0)).collect();
    let mut a = Matrix::zeros(m + 1, n);
    let mut b = Vec::with_capacity(m + 1);
    for i in 0..m {
        for j in 0..n {
            a[(i, j)] = rng.gen_range(-1.0..1.0);
        }
        b.push(dot(a.row(i), &x0) + rng.gen_range(0.0..1.0));
    }
    for j in 0..n {
        a[(m, j)] = 1.0;
    }
    b.push(x0.iter().sum::<f64>() + 5.0);
    let c = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    LpProblem::new(c, a, b)
}
