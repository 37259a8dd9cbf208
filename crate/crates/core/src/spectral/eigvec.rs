use serde::{Deserialize, Serialize};

use super::tridiag::{largest_eigenvalue, shifted_solve};
use crate::ensembles::TridiagonalMatrix;
use crate::error::{Error, Result};

pub const DEFAULT_INVERSE_ITERATIONS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrincipalEigenvector {
    pub lambda1: f64,
    /// Unit vector, sign fixed so the last component is non-negative.
    pub vector: Vec<f64>,
    /// Components with 1-based index ≤ this bound count as "early".
    pub early_cutoff: usize,
    /// max over early components of |v_i| (0 when there are none).
    pub early_max: f64,
    pub iterations: usize,
}

/// Principal eigenvector by inverse iteration at the bisection value of λ₁,
/// with the decay diagnostic over indices ≤ N − ⌈50N^{1/3}⌉.
pub fn principal_eigenvector(
    t: &TridiagonalMatrix,
    max_iter: usize,
) -> Result<PrincipalEigenvector> {
    let n = t.len();
    let lambda1 = largest_eigenvalue(t);
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        let mut w = v.clone();
        shifted_solve(t, lambda1, &mut w);
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::NoConvergence { index: 0 });
        }
        let sign = if w[n - 1] < 0.0 { -1.0 } else { 1.0 };
        for x in &mut w {
            *x *= sign / norm;
        }
        let diff = w
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        v = w;
        if diff < 1e-14 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence { index: 0 });
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in &mut v {
        *x /= norm;
    }
    let nf = n as f64;
    let early_cutoff = n.saturating_sub((50.0 * nf.cbrt()).ceil() as usize);
    let early_max = v[..early_cutoff]
        .iter()
        .map(|x| x.abs())
        .fold(0.0, f64::max);
    Ok(PrincipalEigenvector {
        lambda1,
        vector: v,
        early_cutoff,
        early_max,
        iterations,
    })
}
