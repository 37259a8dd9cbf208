//! Spectra and linear statistics.

mod dense;
mod eigvec;
mod logdet;
mod recursion;
pub mod tridiag;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensembles::TridiagonalMatrix;
use crate::error::{Error, Result};
use crate::numeric::compensated_sum;

pub use dense::eig_dense;
pub use eigvec::{principal_eigenvector, PrincipalEigenvector, DEFAULT_INVERSE_ITERATIONS};
pub use logdet::{SpectralData, TridiagonalLogDet};
pub use recursion::{log_det_recursion, sigma_bar, RecursionOutput, RecursionState};
pub use tridiag::{count_below, kth_largest, largest_eigenvalue};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectrumSource {
    FullTridiag,
    FullDense,
    CornerMinor {
        l: usize,
    },
    /// Values supplied directly by the caller.
    External,
}

/// Eigenvalues in descending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub source: SpectrumSource,
    pub n: usize,
}

impl Spectrum {
    /// Sorts `values` into descending order.
    pub fn new(mut values: Vec<f64>, source: SpectrumSource, n: usize) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("empty spectrum"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("spectrum contains non-finite values"));
        }
        values.sort_by(|a, b| b.total_cmp(a));
        Ok(Spectrum { values, source, n })
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        Self::new(values, SpectrumSource::External, n)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn lambda1(&self) -> f64 {
        self.values[0]
    }

    pub fn lambda2(&self) -> Option<f64> {
        self.values.get(1).copied()
    }

    /// λ₁ − λ₂ (0 for a single eigenvalue).
    pub fn top_gap(&self) -> f64 {
        self.lambda2().map_or(0.0, |l2| self.values[0] - l2)
    }

    /// The spectrum with every eigenvalue shifted by `c`.
    pub fn shifted(&self, c: f64) -> Spectrum {
        Spectrum {
            values: self.values.iter().map(|v| v + c).collect(),
            ..self.clone()
        }
    }
}

/// Full spectrum of a tridiagonal matrix.
pub fn eig_full(t: &TridiagonalMatrix) -> Result<Spectrum> {
    let values = tridiag::ql_eigenvalues(t)?;
    Spectrum::new(values, SpectrumSource::FullTridiag, t.len())
}

/// Top `k` eigenvalues of the bottom-right `l`×`l` minor.
pub fn top_eigs_corner(t: &TridiagonalMatrix, l: usize, k: usize) -> Result<Spectrum> {
    if k == 0 || k > l || l > t.len() {
        return Err(Error::invalid(format!(
            "need 1 ≤ k ≤ l ≤ N, got k={k}, l={l}, N={}",
            t.len()
        )));
    }
    let minor = crate::ensembles::corner_minor(t, l)?;
    let mut values = tridiag::ql_eigenvalues(&minor)?;
    values.reverse();
    values.truncate(k);
    let source = if l == t.len() {
        SpectrumSource::FullTridiag
    } else {
        SpectrumSource::CornerMinor { l }
    };
    Ok(Spectrum {
        values,
        source,
        n: t.len(),
    })
}

/// How the corner-minor size is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CornerRule {
    /// ⌈multiplier·N^{1/3}⌉.
    Practical { multiplier: f64 },
    /// ⌈2N^{1/3}log³N⌉, exceeds N until N is astronomically large.
    Conservative,
}

impl Default for CornerRule {
    fn default() -> Self {
        CornerRule::Practical { multiplier: 10.0 }
    }
}

impl CornerRule {
    pub fn size(self, n: usize) -> usize {
        match self {
            CornerRule::Practical { multiplier } => choose_corner_size(n, multiplier),
            CornerRule::Conservative => {
                let nf = n as f64;
                let l = (2.0 * nf.cbrt() * nf.ln().powi(3)).ceil();
                (l as usize).clamp(1, n)
            }
        }
    }
}

/// l = min(n, ⌈multiplier·n^{1/3}⌉).
pub fn choose_corner_size(n: usize, multiplier: f64) -> usize {
    let nf = n as f64;
    // The cube root of a perfect cube may round just above the integer.
    let raw = multiplier * nf.cbrt();
    let l = if (raw - raw.round()).abs() < 1e-9 * raw.max(1.0) {
        raw.round()
    } else {
        raw.ceil()
    };
    (l.max(1.0) as usize).min(n)
}

/// Semicircle Stieltjes transform m(z) = (−z + √(z²−4))/2 on the branch
/// with m(z) → 0 at infinity.
pub fn stieltjes_sc(z: Complex64) -> Result<Complex64> {
    if z.im == 0.0 && z.re.abs() < 2.0 {
        return Err(Error::Domain(format!(
            "stieltjes_sc: z = {} lies on the cut (−2, 2)",
            z.re
        )));
    }
    // √(z−2)·√(z+2) ~ z at infinity; the product form avoids cancellation.
    let s = (z - 2.0).sqrt() * (z + 2.0).sqrt();
    Ok(-2.0 / (z + s))
}

/// Σ_j log|E − λ_j|.
pub fn log_det_stat(spectrum: &Spectrum, e: f64) -> Result<f64> {
    if let Some(&hit) = spectrum.values.iter().find(|&&v| v == e) {
        return Err(Error::Singularity { point: hit });
    }
    Ok(compensated_sum(
        spectrum.values.iter().map(|v| (e - v).abs().ln()),
    ))
}

/// (1/N)Σ_j (γ − λ_j)^{−l}, requiring γ > λ₁.
pub fn inverse_moment(spectrum: &Spectrum, gamma: f64, l: i32) -> Result<f64> {
    if gamma <= spectrum.lambda1() {
        return Err(Error::Domain(format!(
            "inverse_moment: γ = {gamma} must exceed λ₁ = {}",
            spectrum.lambda1()
        )));
    }
    let n = spectrum.len() as f64;
    Ok(compensated_sum(spectrum.values.iter().map(|v| (gamma - v).powi(-l))) / n)
}

/// (1/N)Σ_{j≥2} (λ₁ − λ_j)^{−l}.
pub fn inverse_moment_lambda1(spectrum: &Spectrum, l: i32) -> Result<f64> {
    let l1 = spectrum.lambda1();
    if spectrum.len() < 2 {
        return Err(Error::invalid(
            "λ₁-centered moment needs at least two eigenvalues",
        ));
    }
    let gap = spectrum.top_gap();
    if gap <= 0.0 {
        return Err(Error::DegenerateGap {
            gap,
            threshold: 0.0,
        });
    }
    let n = spectrum.len() as f64;
    Ok(compensated_sum(spectrum.values[1..].iter().map(|v| (l1 - v).powi(-l))) / n)
}

/// l-th derivative of G(z) = βz − (1/N)Σ log(z − λ_j) at real z > λ₁.
pub fn g_derivative(spectrum: &Spectrum, beta: f64, z: f64, l: u32) -> Result<f64> {
    if l == 0 {
        return Err(Error::invalid("g_derivative needs l ≥ 1"));
    }
    let m = inverse_moment(spectrum, z, l as i32)?;
    let factorial: f64 = (1..l).map(f64::from).product();
    let sign = if l.is_multiple_of(2) { 1.0 } else { -1.0 };
    let lead = if l == 1 { beta } else { 0.0 };
    Ok(lead + sign * factorial * m)
}

/// #{j : λ_j ≥ E}.
pub fn counting(spectrum: &Spectrum, e: f64) -> usize {
    spectrum.values.partition_point(|&v| v >= e)
}

/// Edge observables of one spectrum (N is the originating dimension).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeObservables {
    pub xi2: f64,
    pub gap: f64,
    pub theta: f64,
    /// (x, #{j : λ_j ≥ 2 − xN^{-2/3}}) for each configured threshold.
    pub counts: Vec<(f64, usize)>,
}

impl EdgeObservables {
    pub fn from_spectrum(spectrum: &Spectrum, thresholds: &[f64]) -> Self {
        let scale = (spectrum.n as f64).powf(2.0 / 3.0);
        let gap = scale * spectrum.top_gap();
        EdgeObservables {
            xi2: scale * (spectrum.lambda1() - 2.0),
            gap,
            theta: gap / 2.0,
            counts: thresholds
                .iter()
                .map(|&x| (x, counting(spectrum, 2.0 - x / scale)))
                .collect(),
        }
    }

    pub fn count_at(&self, x: f64) -> Option<usize> {
        self.counts.iter().find(|(t, _)| *t == x).map(|&(_, c)| c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(v: &[f64]) -> Spectrum {
        Spectrum::from_values(v.to_vec()).unwrap()
    }

    #[test]
    fn spectrum_sorted_descending() {
        let s = spec(&[1.0, 3.0, 2.0]);
        assert_eq!(s.values, vec![3.0, 2.0, 1.0]);
        let json = serde_json::to_string(&s).unwrap();
        assert!(json.contains("\"values\":[3.0,2.0,1.0]"));
        assert!(json.contains("\"kind\":\"external\""));
    }

    #[test]
    fn eig_full_examples() {
        let t = TridiagonalMatrix::new(vec![0.0, 0.0], vec![1.0]).unwrap();
        let s = eig_full(&t).unwrap();
        assert!((s.values[0] - 1.0).abs() < 1e-15 && (s.values[1] + 1.0).abs() < 1e-15);
        let t = TridiagonalMatrix::new(vec![4.25], vec![]).unwrap();
        assert_eq!(eig_full(&t).unwrap().values, vec![4.25]);
    }

    #[test]
    fn corner_full_size_is_eig_full() {
        let t = TridiagonalMatrix::new(vec![0.1, -0.4, 0.9, 0.3], vec![0.5, 0.7, 0.2]).unwrap();
        let full = eig_full(&t).unwrap();
        let c = top_eigs_corner(&t, 4, 2).unwrap();
        assert_eq!(c.values, full.values[..2].to_vec());
        assert!(top_eigs_corner(&t, 2, 3).is_err());
    }

    #[test]
    fn corner_sizes() {
        assert_eq!(choose_corner_size(1000, 10.0), 100);
        assert_eq!(choose_corner_size(8, 10.0), 8);
        assert_eq!(choose_corner_size(1_000_000, 10.0), 1000);
        assert_eq!(choose_corner_size(100_000, 10.0), 465);
        assert_eq!(CornerRule::Conservative.size(10_000), 10_000);
    }

    #[test]
    fn stieltjes_examples() {
        let m = stieltjes_sc(Complex64::new(2.0, 0.0)).unwrap();
        assert!((m - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
        let m = stieltjes_sc(Complex64::new(2.5, 0.0)).unwrap();
        assert!((m - Complex64::new(-0.5, 0.0)).norm() < 1e-15);
        let m = stieltjes_sc(Complex64::new(1e6, 0.0)).unwrap();
        assert!((m.re + 1e-6).abs() < 1e-15);
        assert!(stieltjes_sc(Complex64::new(0.5, 0.0)).is_err());
        for z in [
            Complex64::new(0.3, 0.7),
            Complex64::new(-3.0, 0.0),
            Complex64::new(-1.0, -2.0),
        ] {
            let m = stieltjes_sc(z).unwrap();
            assert!((m * m + z * m + 1.0).norm() < 1e-13);
            // Herglotz: Im m has the sign of Im z.
            assert!(m.im * z.im >= 0.0);
        }
    }

    #[test]
    fn log_det_examples() {
        assert_eq!(log_det_stat(&spec(&[3.0, 1.0]), 2.0).unwrap(), 0.0);
        assert!((log_det_stat(&spec(&[0.0, 0.0]), 2.0).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-15);
        assert!(matches!(
            log_det_stat(&spec(&[2.0, 2.0]), 2.0),
            Err(Error::Singularity { .. })
        ));
    }

    #[test]
    fn inverse_moment_examples() {
        let zeros = spec(&[0.0; 5]);
        assert_eq!(inverse_moment(&zeros, 2.0, 1).unwrap(), 0.5);
        assert_eq!(inverse_moment(&zeros, 2.0, 2).unwrap(), 0.25);
        assert!(inverse_moment(&zeros, 0.0, 1).is_err());
        let s = spec(&[2.0, 1.0, 0.0]);
        assert!((inverse_moment_lambda1(&s, 1).unwrap() - (1.0 + 0.5) / 3.0).abs() < 1e-15);
    }

    #[test]
    fn g_derivative_examples() {
        let zeros = spec(&[0.0; 4]);
        assert_eq!(g_derivative(&zeros, 1.0, 2.0, 1).unwrap(), 0.5);
        assert_eq!(g_derivative(&zeros, 1.0, 2.0, 2).unwrap(), 0.25);
        assert_eq!(g_derivative(&zeros, 1.0, 2.0, 3).unwrap(), -2.0 / 8.0);
        assert!(g_derivative(&zeros, 1.0, 0.0, 1).is_err());
    }

    #[test]
    fn counting_examples() {
        let s = spec(&[3.0, 2.0, 1.0]);
        assert_eq!(counting(&s, 1.5), 2);
        assert_eq!(counting(&s, 3.5), 0);
        assert_eq!(counting(&s, 1.0), 3);
        assert_eq!(counting(&s, -7.0), 3);
    }

    #[test]
    fn edge_observables() {
        let s = Spectrum::new(vec![2.0, 1.9, 0.0], SpectrumSource::FullTridiag, 1000).unwrap();
        let e = EdgeObservables::from_spectrum(&s, &[1.0, 20.0]);
        assert_eq!(e.xi2, 0.0);
        assert!((e.gap - 10.0).abs() < 1e-9);
        assert!((e.theta - 5.0).abs() < 1e-9);
        assert_eq!(e.count_at(1.0), Some(1));
        assert_eq!(e.count_at(20.0), Some(2));
    }
}
