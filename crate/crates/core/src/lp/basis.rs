use super::Tolerances;
use crate::error::LpError;
use crate::linalg::Matrix;

/// Rebuilds the basic solution of `{u ≥ 0 : D u ≤ rhs}` for a basis over the
/// columns of `[D | I]`: basic structural entries come from `D_B⁻¹ rhs`,
/// everything else is zero.
pub fn basis_reconstruct(basis: &[usize], d: &Matrix, rhs: &[f64]) -> Result<Vec<f64>, LpError> {
    let inv = basis_inverse(basis, d, &Tolerances::default())?;
    Ok(basis_reconstruct_with(basis, &inv, d.cols(), rhs))
}

/// Same as [`basis_reconstruct`] with a precomputed basis inverse.
pub fn basis_reconstruct_with(basis: &[usize], inverse: &Matrix, n: usize, rhs: &[f64]) -> Vec<f64> {
    let mut u = vec![0.0; n];
    if basis.is_empty() {
        return u;
    }
    let z = inverse.mul_vec(rhs);
    for (k, &j) in basis.iter().enumerate() {
        if j < n {
            u[j] = z[k];
        }
    }
    u
}

/// Inverse of the basis matrix, columns taken in the order of `basis`.
pub fn basis_inverse(basis: &[usize], d: &Matrix, tol: &Tolerances) -> Result<Matrix, LpError> {
    let (m, n) = d.shape();
    if basis.len() != m || basis.iter().any(|&j| j >= n + m) {
        return Err(LpError::Dimension(format!(
            "basis {:?} does not fit a {}x{} matrix",
            basis, m, n
        )));
    }
    let mut bmat = Matrix::zeros(m, m);
    for (k, &j) in basis.iter().enumerate() {
        for i in 0..m {
            bmat[(i, k)] = if j < n {
                d[(i, j)]
            } else if j - n == i {
                1.0
            } else {
                0.0
            };
        }
    }
    bmat.inverse(tol.pivot).ok_or_else(|| LpError::SingularBasis {
        basis: basis.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_basis() {
        let d = Matrix::from_rows(&[vec![2.0]]);
        assert_eq!(basis_reconstruct(&[0], &d, &[6.0]).unwrap(), vec![3.0]);
    }

    #[test]
    fn empty_basis_gives_zero() {
        let d = Matrix::from_row_major(0, 3, vec![]);
        assert_eq!(basis_reconstruct(&[], &d, &[]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn all_slack_basis_gives_zero() {
        let d = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, -1.0]]);
        assert_eq!(basis_reconstruct(&[2, 3], &d, &[4.0, 1.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn singular_basis_reports_identity() {
        let d = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        match basis_reconstruct(&[0, 1], &d, &[1.0, 1.0]) {
            Err(LpError::SingularBasis { basis }) => assert_eq!(basis, vec![0, 1]),
            other => panic!("expected singular basis, got {:?}", other),
        }
    }
}
