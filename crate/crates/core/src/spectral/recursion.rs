//! Linear-time approximation of the shifted log-determinant
//! Σ log|2 + N^{-2/3}σ̄_N − μ_i| from the tridiagonal entries, via the
//! recursion L_i = α_i + β_i + γ_i·L_{i−1}.

use serde::{Deserialize, Serialize};

use crate::ensembles::{Alpha, TridiagonalMatrix};
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

/// σ̄_N = (log log N)³.
pub fn sigma_bar(n: usize) -> f64 {
    (n as f64).ln().ln().powi(3)
}

/// Deterministic coefficients of the recursion for a given N, plus the
/// running partial sums of L_i once [`RecursionState::run`] is called.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecursionState {
    pub n: usize,
    pub sigma_bar: f64,
    /// θ_N = 1 + N^{-2/3}σ̄_N/2.
    pub theta: f64,
    pub r: Vec<f64>,
    pub m: Vec<f64>,
    pub gamma: Vec<f64>,
    /// Σ_{k≤i} L_k.
    pub partial_sums: Vec<f64>,
}

impl RecursionState {
    pub fn new(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::invalid(format!("recursion needs N ≥ 3, got {n}")));
        }
        let nf = n as f64;
        let sb = sigma_bar(n);
        let theta = 1.0 + nf.powf(-2.0 / 3.0) * sb / 2.0;
        let denom = nf * theta * theta;
        let mut r = Vec::with_capacity(n);
        let mut m = Vec::with_capacity(n);
        let mut gamma = Vec::with_capacity(n);
        for i in 1..=n {
            let s = (1.0 - (i - 1) as f64 / denom).sqrt();
            let (ri, mi) = (1.0 + s, 1.0 - s);
            r.push(ri);
            m.push(mi);
            gamma.push(mi / ri);
        }
        Ok(RecursionState {
            n,
            sigma_bar: sb,
            theta,
            r,
            m,
            gamma,
            partial_sums: Vec::new(),
        })
    }

    /// Runs the recursion on one matrix, filling `partial_sums`, and returns
    /// Σ L_i.
    pub fn run(&mut self, t: &TridiagonalMatrix) -> Result<f64> {
        if t.len() != self.n {
            return Err(Error::invalid(format!(
                "matrix size {} does not match recursion size {}",
                t.len(),
                self.n
            )));
        }
        let sqrt_n = (self.n as f64).sqrt();
        let mut total = CompensatedSum::new();
        let mut prev_l = 0.0;
        let mut prev_c = 0.0;
        self.partial_sums.clear();
        self.partial_sums.reserve(self.n);
        for i in 1..=self.n {
            let k = i - 1;
            let a = t.diag[k] * sqrt_n;
            let alpha_i = a / (sqrt_n * self.theta * self.r[k]);
            let beta_i = if i == 1 {
                0.0
            } else {
                (self.gamma[k] / self.n as f64).sqrt() * prev_c / (self.theta * self.r[k - 1])
            };
            let l = alpha_i + beta_i + self.gamma[k] * prev_l;
            total.add(l);
            self.partial_sums.push(total.value());
            prev_l = l;
            if i < self.n {
                let b = t.offdiag[k] * sqrt_n;
                prev_c = (b * b - i as f64) / (i as f64).sqrt();
            }
        }
        Ok(total.value())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecursionOutput {
    pub sum_l: f64,
    /// Estimate of Σ log|2 + N^{-2/3}σ̄_N − μ_i|.
    pub shifted: f64,
    /// The same minus N^{1/3}σ̄_N, an estimate of Σ log|2 − μ_i|.
    pub at_two: f64,
    /// The shifted evaluation point 2 + N^{-2/3}σ̄_N.
    pub point: f64,
}

/// N/2 + N^{1/3}σ̄_N − ((α−1)/6)log N − Σ L_i, in one pass over the entries.
pub fn log_det_recursion(t: &TridiagonalMatrix, alpha: Alpha) -> Result<RecursionOutput> {
    let mut state = RecursionState::new(t.len())?;
    let sum_l = state.run(t)?;
    let nf = t.len() as f64;
    let shift = nf.cbrt() * state.sigma_bar;
    let shifted = nf / 2.0 + shift - (alpha.value() - 1.0) / 6.0 * nf.ln() - sum_l;
    Ok(RecursionOutput {
        sum_l,
        shifted,
        at_two: shifted - shift,
        point: 2.0 + nf.powf(-2.0 / 3.0) * state.sigma_bar,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficient_identities() {
        let s = RecursionState::new(4000).unwrap();
        assert_eq!(s.r[0], 2.0);
        assert_eq!(s.gamma[0], 0.0);
        for i in 0..s.n {
            assert!((s.r[i] + s.m[i] - 2.0).abs() < 1e-15);
            let target = i as f64 / (s.n as f64 * s.theta * s.theta);
            assert!((s.m[i] * s.r[i] - target).abs() < 1e-14);
            assert!(s.r[i] > 1.0 && s.r[i] <= 2.0);
            assert!((0.0..1.0).contains(&s.m[i]));
            assert!((0.0..1.0).contains(&s.gamma[i]));
        }
    }

    #[test]
    fn zero_noise_reduces_to_shift() {
        // a_i = 0 and b_i² = i make every ξ_i vanish.
        let n = 50;
        let s = (n as f64).sqrt();
        let t = TridiagonalMatrix::new(
            vec![0.0; n],
            (1..n).map(|i| (i as f64).sqrt() / s).collect(),
        )
        .unwrap();
        let out = log_det_recursion(&t, Alpha::Real).unwrap();
        assert!(out.sum_l.abs() < 1e-12);
    }
}
