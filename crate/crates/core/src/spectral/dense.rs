use faer::{c64, Mat, Side};

use super::{Spectrum, SpectrumSource};
use crate::ensembles::{Alpha, DenseMatrix};
use crate::error::{Error, Result};

/// All eigenvalues of a dense Hermitian/symmetric matrix.
pub fn eig_dense(m: &DenseMatrix) -> Result<Spectrum> {
    let n = m.n;
    let values = match m.alpha {
        Alpha::Real => {
            let a = Mat::<f64>::from_fn(n, n, |i, j| m.re[i * n + j]);
            a.self_adjoint_eigenvalues(Side::Lower)
        }
        Alpha::Complex => {
            let a = Mat::<c64>::from_fn(n, n, |i, j| c64::new(m.re[i * n + j], m.im[i * n + j]));
            a.self_adjoint_eigenvalues(Side::Lower)
        }
    }
    .map_err(|_| Error::NoConvergence { index: 0 })?;
    Spectrum::new(values, SpectrumSource::FullDense, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::TridiagonalMatrix;

    #[test]
    fn dense_matches_tridiagonal() {
        let t = TridiagonalMatrix::new(vec![0.1, -0.4, 0.9, 0.3], vec![0.5, 0.7, 0.2]).unwrap();
        let a = eig_dense(&DenseMatrix::from_tridiagonal(Alpha::Real, &t)).unwrap();
        let b = crate::spectral::eig_full(&t).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn complex_two_by_two() {
        // [[0, i], [−i, 0]] has eigenvalues ±1.
        let mut m = DenseMatrix::zeros(Alpha::Complex, 2);
        m.im[1] = 1.0;
        m.im[2] = -1.0;
        let s = eig_dense(&m).unwrap();
        assert!((s.values[0] - 1.0).abs() < 1e-14 && (s.values[1] + 1.0).abs() < 1e-14);
    }
}
