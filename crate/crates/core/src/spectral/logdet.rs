//! Sums Σ_j log(z − λ_j) either from an explicit spectrum or directly from a
//! tridiagonal matrix through the pivots q_k of the LDLᵀ factorization of
//! z − T, which costs O(N) and needs no eigenvalues.
//!
//! For Im z > 0 every pivot lies in the upper half plane (−1/q_k is a
//! diagonal resolvent entry of a leading minor), so Σ arg q_k equals
//! Σ arg(z − λ_j) with each term in (0, π), the same branch as the
//! eigenvalue sum.

use num_complex::Complex64;

use super::tridiag::largest_eigenvalue;
use super::Spectrum;
use crate::ensembles::TridiagonalMatrix;
use crate::error::{Error, Result};
use crate::numeric::{CompensatedSum, ComplexSum};

/// What the free-energy code needs to know about a spectrum.
pub trait SpectralData: Sync {
    fn dim(&self) -> usize;
    fn lambda1(&self) -> f64;
    /// Any number at or below the smallest eigenvalue.
    fn lower_bound(&self) -> f64;
    /// Σ_j log(z − λ_j), principal branch per factor; on the real axis the
    /// limit from the upper half plane. `z` must not be an eigenvalue.
    fn sum_log(&self, z: Complex64) -> Complex64;
    /// (1/N)Σ_j (x − λ_j)^{-1} for real x > λ₁.
    fn mean_inverse(&self, x: f64) -> f64;
    /// (Σ_j log(z − λ_j), Σ_j (z − λ_j)^{-1}) for z off the real axis.
    fn sum_log_with_derivative(&self, z: Complex64) -> (Complex64, Complex64);
}

impl SpectralData for Spectrum {
    fn dim(&self) -> usize {
        self.len()
    }

    fn lambda1(&self) -> f64 {
        self.values[0]
    }

    fn lower_bound(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    fn sum_log(&self, z: Complex64) -> Complex64 {
        let mut re = CompensatedSum::new();
        let mut im = CompensatedSum::new();
        for &v in &self.values {
            let w = z - v;
            re.add(w.norm().ln());
            im.add(w.im.atan2(w.re));
        }
        Complex64::new(re.value(), im.value())
    }

    fn sum_log_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut re = CompensatedSum::new();
        let mut im = CompensatedSum::new();
        let mut d = ComplexSum::default();
        for &v in &self.values {
            let w = z - v;
            re.add(w.norm().ln());
            im.add(w.im.atan2(w.re));
            d.add(w.inv());
        }
        (Complex64::new(re.value(), im.value()), d.value())
    }

    fn mean_inverse(&self, x: f64) -> f64 {
        let s: CompensatedSum = self.values.iter().map(|v| 1.0 / (x - v)).collect();
        s.value() / self.len() as f64
    }
}

/// A tridiagonal matrix with its top eigenvalue, evaluated through pivots.
#[derive(Debug, Clone)]
pub struct TridiagonalLogDet {
    t: TridiagonalMatrix,
    b2: Vec<f64>,
    lambda1: f64,
}

const RESCALE_HI: f64 = 1e150;
const RESCALE_LO: f64 = 1e-150;

impl TridiagonalLogDet {
    pub fn new(t: TridiagonalMatrix) -> Self {
        let lambda1 = largest_eigenvalue(&t);
        let b2 = t.offdiag.iter().map(|b| b * b).collect();
        TridiagonalLogDet { t, b2, lambda1 }
    }

    pub fn matrix(&self) -> &TridiagonalMatrix {
        &self.t
    }

    fn nudge(&self) -> f64 {
        f64::EPSILON * self.t.norm_bound().max(f64::MIN_POSITIVE)
    }

    /// Σ log|x − λ_j| and #{j : λ_j > x} for real x.
    fn real_pivots(&self, x: f64) -> (f64, usize, bool) {
        let nudge = self.nudge();
        let mut prod = 1.0f64;
        let mut log_scale = 0.0;
        let mut negatives = 0;
        let mut q_prev = 1.0;
        let mut singular = false;
        for k in 0..self.t.len() {
            let mut q = x - self.t.diag[k];
            if k > 0 {
                q -= self.b2[k - 1] / q_prev;
            }
            if q == 0.0 {
                if k + 1 == self.t.len() {
                    singular = true;
                }
                q = nudge;
            }
            if q < 0.0 {
                negatives += 1;
            }
            prod *= q.abs();
            if !(RESCALE_LO..=RESCALE_HI).contains(&prod) {
                log_scale += prod.ln();
                prod = 1.0;
            }
            q_prev = q;
        }
        (log_scale + prod.ln(), negatives, singular)
    }

    /// Σ log|x − λ_j| in O(N); an exact zero of the determinant is an error.
    pub fn log_abs_det(&self, x: f64) -> Result<f64> {
        let (v, _, singular) = self.real_pivots(x);
        if singular {
            return Err(Error::Singularity { point: x });
        }
        Ok(v)
    }
}

impl SpectralData for TridiagonalLogDet {
    fn dim(&self) -> usize {
        self.t.len()
    }

    fn lambda1(&self) -> f64 {
        self.lambda1
    }

    fn lower_bound(&self) -> f64 {
        -self.t.norm_bound()
    }

    fn sum_log(&self, z: Complex64) -> Complex64 {
        if z.im == 0.0 {
            let (re, negatives, _) = self.real_pivots(z.re);
            return Complex64::new(re, std::f64::consts::PI * negatives as f64);
        }
        // Work in the upper half plane and conjugate at the end.
        let flip = z.im < 0.0;
        let z = if flip { z.conj() } else { z };
        let nudge = self.nudge();
        let mut prod = Complex64::new(1.0, 0.0);
        let mut log_scale = 0.0;
        let mut arg = CompensatedSum::new();
        let mut q_prev = Complex64::new(1.0, 0.0);
        for k in 0..self.t.len() {
            let mut q = z - self.t.diag[k];
            if k > 0 {
                q -= self.b2[k - 1] / q_prev;
            }
            if q.re == 0.0 && q.im == 0.0 {
                q = Complex64::new(nudge, 0.0);
            }
            arg.add(q.im.atan2(q.re));
            prod *= q;
            let size = prod.re.abs() + prod.im.abs();
            if !(RESCALE_LO..=RESCALE_HI).contains(&size) {
                log_scale += size.ln();
                prod /= size;
            }
            q_prev = q;
        }
        let out = Complex64::new(log_scale + prod.norm().ln(), arg.value());
        if flip {
            out.conj()
        } else {
            out
        }
    }

    fn sum_log_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let flip = z.im < 0.0;
        let z = if flip { z.conj() } else { z };
        let nudge = self.nudge();
        let mut prod = Complex64::new(1.0, 0.0);
        let mut log_scale = 0.0;
        let mut arg = CompensatedSum::new();
        let mut deriv = ComplexSum::default();
        let one = Complex64::new(1.0, 0.0);
        let (mut q_prev, mut dq_prev) = (one, Complex64::new(0.0, 0.0));
        for k in 0..self.t.len() {
            let mut q = z - self.t.diag[k];
            let mut dq = one;
            if k > 0 {
                let r = self.b2[k - 1] / q_prev;
                q -= r;
                dq += r * dq_prev / q_prev;
            }
            if q.re == 0.0 && q.im == 0.0 {
                q = Complex64::new(nudge, 0.0);
            }
            arg.add(q.im.atan2(q.re));
            deriv.add(dq / q);
            prod *= q;
            let size = prod.re.abs() + prod.im.abs();
            if !(RESCALE_LO..=RESCALE_HI).contains(&size) {
                log_scale += size.ln();
                prod /= size;
            }
            q_prev = q;
            dq_prev = dq;
        }
        let s = Complex64::new(log_scale + prod.norm().ln(), arg.value());
        let d = deriv.value();
        if flip {
            (s.conj(), d.conj())
        } else {
            (s, d)
        }
    }

    fn mean_inverse(&self, x: f64) -> f64 {
        // d/dx log det(x − T) = Σ q_k'/q_k.
        let mut acc = CompensatedSum::new();
        let (mut q_prev, mut dq_prev) = (1.0, 0.0);
        for k in 0..self.t.len() {
            let mut q = x - self.t.diag[k];
            let mut dq = 1.0;
            if k > 0 {
                q -= self.b2[k - 1] / q_prev;
                dq += self.b2[k - 1] * dq_prev / (q_prev * q_prev);
            }
            acc.add(dq / q);
            q_prev = q;
            dq_prev = dq;
        }
        acc.value() / self.t.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{sample_tridiag, Alpha};
    use crate::seed::SeedPlan;
    use crate::spectral::eig_full;

    #[test]
    fn pivot_route_matches_eigenvalues() {
        for (alpha, n) in [(Alpha::Real, 60), (Alpha::Complex, 200)] {
            let t = sample_tridiag(alpha, n, &SeedPlan::new(4, 0)).unwrap();
            let spec = eig_full(&t).unwrap();
            let det = TridiagonalLogDet::new(t);
            assert!((det.lambda1() - spec.lambda1()).abs() < 1e-13);
            for z in [
                Complex64::new(2.3, 0.0),
                Complex64::new(0.1, 0.0),
                Complex64::new(2.05, 0.01),
                Complex64::new(1.9, 1e-6),
                Complex64::new(-0.5, -0.7),
                Complex64::new(2.0, 30.0),
            ] {
                let a = spec.sum_log(z);
                let b = det.sum_log(z);
                assert!(
                    (a - b).norm() < 1e-9 * (1.0 + a.norm()),
                    "z={z}: {a} vs {b}"
                );
            }
            let z = Complex64::new(1.2, 0.3);
            let (sa, da) = spec.sum_log_with_derivative(z);
            let (sb, db) = det.sum_log_with_derivative(z);
            assert!((sa - sb).norm() < 1e-9 * (1.0 + sa.norm()));
            assert!((da - db).norm() < 1e-9 * (1.0 + da.norm()));
            let x = spec.lambda1() + 0.05;
            assert!((spec.mean_inverse(x) - det.mean_inverse(x)).abs() < 1e-11);
            let e = 2.0;
            let ld = crate::spectral::log_det_stat(&spec, e).unwrap();
            assert!((det.log_abs_det(e).unwrap() - ld).abs() < 1e-9);
        }
    }
}
