//! Free energy F_{α,N} = (α/2N)·log I of the spherical model from a spectrum,
//! through I = C_{α,N}·(1/2πi)∫ exp{(N/α)G(z)} dz with
//! G(z) = βz − (1/N)Σ log(z − λ_j) and C_{α,N} = Γ(N/α)/(βN/α)^{N/α−1}.

mod contour;
mod oracles;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensembles::Alpha;
use crate::error::{Error, Result};
use crate::numeric::{brent, compensated_sum, ln_gamma, QuadOptions};
use crate::spectral::{SpectralData, Spectrum};

pub use contour::{f_keyhole, f_steepest, f_vertical, steepest_y0, vertical_line_integral};
pub use oracles::{f_residue_oracle, f_sphere_mc_oracle, RESIDUE_CONDITION_LIMIT, RESIDUE_MAX_N};

/// β = 1 + bN^{-1/3}√log N.
pub fn beta_from_b(b: f64, n: usize) -> f64 {
    let nf = n as f64;
    1.0 + b * nf.powf(-1.0 / 3.0) * nf.ln().sqrt()
}

/// γ̂ = 2 + b²N^{-2/3}log N.
pub fn gamma_hat(b: f64, n: usize) -> f64 {
    let nf = n as f64;
    2.0 + b * b * nf.powf(-2.0 / 3.0) * nf.ln()
}

/// Inverse of [`beta_from_b`].
pub fn b_from_beta(beta: f64, n: usize) -> f64 {
    let nf = n as f64;
    (beta - 1.0) * nf.cbrt() / nf.ln().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub alpha: Alpha,
    pub n: usize,
    pub b: f64,
    pub beta: f64,
    pub j_spike: f64,
    pub gamma_hat: f64,
}

impl ModelParams {
    pub fn from_b(alpha: Alpha, n: usize, b: f64, j_spike: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::invalid(format!(
                "the b parametrization needs n ≥ 3, got {n}"
            )));
        }
        let beta = beta_from_b(b, n);
        Self::checked(alpha, n, b, beta, j_spike)
    }

    /// Parametrize directly by β (b is back-computed; n ≥ 2).
    pub fn from_beta(alpha: Alpha, n: usize, beta: f64, j_spike: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("n must be at least 2, got {n}")));
        }
        Self::checked(alpha, n, b_from_beta(beta, n), beta, j_spike)
    }

    fn checked(alpha: Alpha, n: usize, b: f64, beta: f64, j_spike: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::invalid(format!(
                "β must be positive, got {beta} (b = {b}, n = {n})"
            )));
        }
        if !(0.0..1.0).contains(&j_spike) {
            return Err(Error::invalid(format!(
                "J must lie in [0, 1), got {j_spike}"
            )));
        }
        Ok(ModelParams {
            alpha,
            n,
            b,
            beta,
            j_spike,
            gamma_hat: gamma_hat(b, n),
        })
    }

    pub fn a(&self) -> f64 {
        self.alpha.value()
    }

    /// N/α.
    pub fn weight(&self) -> f64 {
        self.n as f64 / self.alpha.value()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Vertical,
    Keyhole,
    SteepestDescent,
    ResidueOracle,
    SphereMcOracle,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Method::Vertical => "vertical",
            Method::Keyhole => "keyhole",
            Method::SteepestDescent => "steepest_descent",
            Method::ResidueOracle => "residue_oracle",
            Method::SphereMcOracle => "sphere_mc_oracle",
        };
        f.write_str(s)
    }
}

/// Method-specific numbers kept next to the result.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Real-axis crossing of the contour (γ, μ, or the saddle).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub crossing: Option<f64>,
    /// Where the integrand was cut off, in the contour's own parameter.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation: Option<f64>,
    /// True when a ray tail replaced the far part of a vertical line.
    #[serde(default)]
    pub ray_tail: bool,
    #[serde(default)]
    pub panels: usize,
    #[serde(default = "yes")]
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k3_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k3_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k3_skipped: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y0: Option<f64>,
    /// |X(y₀) − λ₁| for the traced steepest-descent path.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_check: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub condition: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ill_conditioned: Option<bool>,
    /// Monte Carlo standard error of log I.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeEnergyResult {
    pub f: f64,
    pub log_i: f64,
    /// log I − log C_{α,N}, the log of the normalized contour integral.
    pub log_i_over_c: f64,
    pub method: Method,
    /// Error estimate for log I (relative error of the integral).
    pub quad_error: f64,
    pub rejected: bool,
    pub diagnostics: Diagnostics,
}

impl FreeEnergyResult {
    pub(crate) fn assemble(
        params: &ModelParams,
        n: usize,
        log_j: f64,
        method: Method,
        quad_error: f64,
        diagnostics: Diagnostics,
    ) -> Self {
        let log_i = log_c(params.alpha, n, params.beta) + log_j;
        FreeEnergyResult {
            f: params.a() / (2.0 * n as f64) * log_i,
            log_i,
            log_i_over_c: log_j,
            method,
            quad_error,
            rejected: false,
            diagnostics,
        }
    }

    /// Placeholder for a replica rejected before any evaluation.
    pub fn rejected(method: Method) -> Self {
        FreeEnergyResult {
            f: f64::NAN,
            log_i: f64::NAN,
            log_i_over_c: f64::NAN,
            method,
            quad_error: f64::NAN,
            rejected: true,
            diagnostics: Diagnostics::default(),
        }
    }
}

/// Where the vertical contour crosses the real axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum Abscissa {
    /// The real saddle γ* of G (root of β = (1/N)Σ(γ−λ_j)^{-1}), where the
    /// integrand has no linear phase.
    #[default]
    Saddle,
    /// max(γ̂, λ₁ + b²N^{-2/3}).
    GammaHat,
    Fixed(f64),
}

/// Whether the vertical tail through μ is evaluated on the keyhole contour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum K3Mode {
    /// Skipped when its a-priori bound is below 1e-12 of the main term.
    #[default]
    Auto,
    Always,
    Never,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourOptions {
    pub quad: QuadOptions,
    /// Integrand cut-off relative to its peak.
    pub truncation: f64,
    pub abscissa: Abscissa,
    pub k3: K3Mode,
    /// The steepest-descent trace must stay within this distance of the
    /// spectrum.
    pub trace_box: f64,
    /// Keyhole gap threshold below which the replica is rejected.
    pub min_gap: f64,
}

impl Default for ContourOptions {
    fn default() -> Self {
        ContourOptions {
            quad: QuadOptions::default(),
            truncation: 1e-18,
            abscissa: Abscissa::Saddle,
            k3: K3Mode::Auto,
            trace_box: 1e4,
            min_gap: 1e-13,
        }
    }
}

/// Regime of the leading-order free energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    SpinGlass,
    Paramagnetic,
    Ferromagnetic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Leading {
    pub value: f64,
    pub regime: Regime,
    /// Two regimes tie; their formulas agree there.
    pub boundary: bool,
}

/// Leading-order free energy, regime chosen by the largest of {1, 1/β, J}.
/// On a tie the paramagnetic branch wins when it is involved, otherwise the
/// spin-glass one.
pub fn f_leading(beta: f64, j: f64) -> Leading {
    let inv = 1.0 / beta;
    let top = 1f64.max(inv).max(j);
    let para = inv == top;
    let sg = top == 1.0;
    let ferro = j == top;
    let boundary = [para, sg, ferro].iter().filter(|&&x| x).count() > 1;
    let regime = if para {
        Regime::Paramagnetic
    } else if sg {
        Regime::SpinGlass
    } else {
        Regime::Ferromagnetic
    };
    let value = match regime {
        Regime::SpinGlass => spin_glass(beta),
        Regime::Paramagnetic => beta * beta / 4.0,
        Regime::Ferromagnetic => {
            beta / 2.0 * (j + 1.0 / j) - 0.5 * (beta * j).ln() - 0.25 / (j * j) - 0.5
        }
    };
    Leading {
        value,
        regime,
        boundary,
    }
}

fn spin_glass(beta: f64) -> f64 {
    beta - 0.5 * beta.ln() - 0.75
}

/// The centering F(β) of the fluctuation statistic: spin-glass branch for
/// b ≥ 0, paramagnetic for b < 0 (they agree at b = 0).
pub fn centering(params: &ModelParams) -> f64 {
    if params.b >= 0.0 {
        spin_glass(params.beta)
    } else {
        params.beta * params.beta / 4.0
    }
}

/// (N/√((α/12)log N))·(F − F(β) + log N/(12N)).
pub fn fluctuation_stat(f: f64, params: &ModelParams) -> f64 {
    let nf = params.n as f64;
    let scale = nf / (params.a() / 12.0 * nf.ln()).sqrt();
    scale * (f - centering(params) + nf.ln() / (12.0 * nf))
}

/// log C_{α,N} = log Γ(N/α) − (N/α − 1)·log(βN/α).
pub fn log_c(alpha: Alpha, n: usize, beta: f64) -> f64 {
    let m = n as f64 / alpha.value();
    ln_gamma(m) - (m - 1.0) * (beta * m).ln()
}

/// −(N/α)(1 + log β) + ½log N, the Stirling form of [`log_c`] up to O(1).
pub fn log_c_stirling(alpha: Alpha, n: usize, beta: f64) -> f64 {
    let nf = n as f64;
    -nf / alpha.value() * (1.0 + beta.ln()) + 0.5 * nf.ln()
}

/// G(z) = βz − (1/N)Σ log(z − λ_j), principal branch per factor and the
/// upper-half-plane limit on the real axis.
pub fn g_eval(z: Complex64, beta: f64, spectrum: &Spectrum) -> Result<Complex64> {
    if z.im == 0.0 {
        if let Some(&hit) = spectrum.values.iter().find(|&&v| v == z.re) {
            return Err(Error::Singularity { point: hit });
        }
    }
    Ok(g_of(spectrum, beta, z))
}

pub(crate) fn g_of<S: SpectralData + ?Sized>(data: &S, beta: f64, z: Complex64) -> Complex64 {
    beta * z - data.sum_log(z) / data.dim() as f64
}

/// Ĝ(λ₁) = βλ₁ − (1/N)Σ_{j≥2} log(λ₁ − λ_j).
pub fn g_hat(spectrum: &Spectrum, beta: f64) -> Result<f64> {
    g_hat_checked(spectrum, beta, ContourOptions::default().min_gap)
}

pub(crate) fn g_hat_checked(spectrum: &Spectrum, beta: f64, min_gap: f64) -> Result<f64> {
    if spectrum.len() < 2 {
        return Err(Error::invalid("Ĝ(λ₁) needs at least two eigenvalues"));
    }
    let gap = spectrum.top_gap();
    if gap < min_gap {
        return Err(Error::DegenerateGap {
            gap,
            threshold: min_gap,
        });
    }
    let l1 = spectrum.lambda1();
    let s = compensated_sum(spectrum.values[1..].iter().map(|v| (l1 - v).ln()));
    Ok(beta * l1 - s / spectrum.len() as f64)
}

/// The real saddle γ* > λ₁ of G: the unique root of (1/N)Σ(γ−λ_j)^{-1} = β.
pub fn saddle_point<S: SpectralData + ?Sized>(data: &S, beta: f64) -> Result<f64> {
    let l1 = data.lambda1();
    let n = data.dim() as f64;
    // mean_inverse ≥ 1/(N(γ−λ₁)) and ≤ 1/(γ−λ₁).
    let lo = l1 + 0.5 / (n * beta);
    let hi = l1 + 1.0 / beta;
    let root = brent(
        |g| data.mean_inverse(g) - beta,
        lo,
        hi,
        1e-16 * (1.0 + l1.abs()),
    )?;
    Ok(root)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parametrization_examples() {
        assert_eq!(beta_from_b(0.0, 1000), 1.0);
        assert_eq!(gamma_hat(0.0, 1000), 2.0);
        assert!((beta_from_b(1.0, 1000) - 1.262_83).abs() < 1e-5);
        assert!((gamma_hat(-1.0, 1000) - 2.069_078).abs() < 1e-6);
        let p = ModelParams::from_b(Alpha::Real, 1000, -0.7, 0.0).unwrap();
        let n = 1000f64;
        assert!(((p.beta - 1.0) - p.b * n.powf(-1.0 / 3.0) * n.ln().sqrt()).abs() < 1e-15);
        assert!(p.gamma_hat >= 2.0);
        let q = ModelParams::from_beta(Alpha::Real, 1000, p.beta, 0.0).unwrap();
        assert!((q.b - p.b).abs() < 1e-12);
        assert!(ModelParams::from_b(Alpha::Real, 1000, -100.0, 0.0).is_err());
    }

    #[test]
    fn leading_examples() {
        let at_one = f_leading(1.0, 0.3);
        assert!((at_one.value - 0.25).abs() < 1e-15);
        assert!(at_one.boundary);
        assert_eq!(at_one.regime, Regime::Paramagnetic);
        assert!((spin_glass(1.0) - 0.25).abs() < 1e-15);
        let sg = f_leading(2.0, 0.0);
        assert_eq!(sg.regime, Regime::SpinGlass);
        assert!((sg.value - 0.903_426_4).abs() < 1e-7);
        let fm = f_leading(1.0, 2.0);
        assert_eq!(fm.regime, Regime::Ferromagnetic);
        assert!((fm.value - 0.340_926_4).abs() < 1e-7);
        // Ferromagnetic and paramagnetic branches meet at βJ = 1.
        let beta = 0.5;
        let tie = f_leading(beta, 2.0);
        assert!(tie.boundary);
        let ferro = beta / 2.0 * (2.0 + 0.5) - 0.0 - 0.25 / 4.0 - 0.5;
        assert!((tie.value - ferro).abs() < 1e-15);
    }

    #[test]
    fn log_c_examples() {
        assert!((log_c(Alpha::Complex, 2, 1.0) + 2f64.ln()).abs() < 1e-15);
        assert!(log_c(Alpha::Real, 2, 1.0).abs() < 1e-15);
        for n in [1000, 10_000, 100_000] {
            let d = log_c(Alpha::Real, n, 1.0) - log_c_stirling(Alpha::Real, n, 1.0);
            assert!(d.abs() < 2.0);
        }
    }

    #[test]
    fn g_eval_examples() {
        let s = Spectrum::from_values(vec![1.0, -1.0]).unwrap();
        let g = g_eval(Complex64::new(2.0, 0.0), 1.0, &s).unwrap();
        assert!((g.re - (2.0 - 0.5 * 3f64.ln())).abs() < 1e-15 && g.im == 0.0);
        let z = Complex64::new(0.3, 0.8);
        let a = g_eval(z, 1.3, &s).unwrap();
        let b = g_eval(z.conj(), 1.3, &s).unwrap();
        assert!((a - b.conj()).norm() < 1e-15);
        // Between λ₂ and λ₁ the λ₁ factor contributes −iπ/N to G.
        let mid = g_eval(Complex64::new(0.0, 0.0), 1.0, &s).unwrap();
        assert!((mid.im + std::f64::consts::PI / 2.0).abs() < 1e-15);
        assert!(g_eval(Complex64::new(1.0, 0.0), 1.0, &s).is_err());
    }

    #[test]
    fn g_hat_examples() {
        let s = Spectrum::from_values(vec![2.0, 0.0]).unwrap();
        assert!((g_hat(&s, 1.0).unwrap() - 1.653_426_4).abs() < 1e-7);
        let d = Spectrum::from_values(vec![1.0, 1.0 - 1e-15]).unwrap();
        assert!(matches!(g_hat(&d, 1.0), Err(Error::DegenerateGap { .. })));
        let t = Spectrum::from_values(vec![0.7, 0.1, -0.4]).unwrap();
        let diff = g_hat(&t, 1.5).unwrap() - g_hat(&t, 0.5).unwrap();
        assert!((diff - 0.7).abs() < 1e-15);
    }

    #[test]
    fn fluctuation_centering() {
        let p = ModelParams::from_b(Alpha::Real, 2000, -1.0, 0.0).unwrap();
        let n = 2000f64;
        let f = centering(&p) - n.ln() / (12.0 * n);
        assert!(fluctuation_stat(f, &p).abs() < 1e-9);
        let slope = n / (2.0 / 12.0 * n.ln()).sqrt();
        let d = fluctuation_stat(f + 1e-3, &p) - fluctuation_stat(f, &p);
        assert!((d - slope * 1e-3).abs() < 1e-8);
        let zero = ModelParams::from_b(Alpha::Real, 2000, 0.0, 0.0).unwrap();
        assert!((centering(&zero) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn saddle_solves_equation() {
        let s = Spectrum::from_values(vec![1.9, 0.5, -0.3, -1.8]).unwrap();
        let g = saddle_point(&s, 1.1).unwrap();
        assert!(g > 1.9);
        assert!((s.mean_inverse(g) - 1.1).abs() < 1e-12);
    }
}
