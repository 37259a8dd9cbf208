//! Reference evaluations that do not use contour quadrature.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{Diagnostics, FreeEnergyResult, Method, ModelParams};
use crate::ensembles::Alpha;
use crate::error::{Error, Result};
use crate::numeric::{CompensatedSum, LogMeanExp};
use crate::par;
use crate::seed::SeedPlan;
use crate::spectral::Spectrum;

pub const RESIDUE_MAX_N: usize = 40;
/// Condition estimates above this are flagged in the diagnostics.
pub const RESIDUE_CONDITION_LIMIT: f64 = 1e6;
/// Beyond this the sum carries no reliable digits and is refused.
const RESIDUE_CONDITION_MAX: f64 = 1e12;

/// For α = 1 the integrand has simple poles and
/// J = Σ_k exp{Nβλ_k} / Π_{j≠k}(λ_k − λ_j), summed in log space.
pub fn f_residue_oracle(spectrum: &Spectrum, params: &ModelParams) -> Result<FreeEnergyResult> {
    if params.alpha != Alpha::Complex {
        return Err(Error::invalid("the residue oracle needs α = 1"));
    }
    let n = spectrum.len();
    if n != params.n || !(2..=RESIDUE_MAX_N).contains(&n) {
        return Err(Error::invalid(format!(
            "the residue oracle needs 2 ≤ N ≤ {RESIDUE_MAX_N} eigenvalues matching the model, got {n}"
        )));
    }
    let v = &spectrum.values;
    let min_gap = v
        .windows(2)
        .map(|p| p[0] - p[1])
        .fold(f64::INFINITY, f64::min);
    if !(min_gap > 0.0) {
        return Err(Error::DegenerateGap {
            gap: min_gap,
            threshold: 0.0,
        });
    }
    let nb = n as f64 * params.beta;
    // Descending order: term k has k − 1 negative factors.
    let logs: Vec<f64> = (0..n)
        .map(|k| {
            let s: CompensatedSum = (0..n)
                .filter(|&j| j != k)
                .map(|j| (v[k] - v[j]).abs().ln())
                .collect();
            nb * v[k] - s.value()
        })
        .collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = CompensatedSum::new();
    let mut abs = 0.0;
    for (k, l) in logs.iter().enumerate() {
        let t = (l - top).exp();
        abs += t;
        sum.add(if k % 2 == 0 { t } else { -t });
    }
    let total = sum.value();
    let condition = abs / total.abs();
    if !(total > 0.0) || condition > RESIDUE_CONDITION_MAX {
        return Err(Error::IllConditioned { condition });
    }
    let diagnostics = Diagnostics {
        condition: Some(condition),
        ill_conditioned: Some(condition > RESIDUE_CONDITION_LIMIT),
        ..Diagnostics::default()
    };
    Ok(FreeEnergyResult::assemble(
        params,
        n,
        top + total.ln(),
        Method::ResidueOracle,
        condition * f64::EPSILON,
        diagnostics,
    ))
}

const MC_CHUNKS: usize = 64;
/// The estimator's variance grows like exp{cN}; beyond this it is useless.
pub const SPHERE_MAX_N: usize = 32;
pub const SPHERE_MIN_SAMPLES: u64 = 100_000;

/// I = E exp{(βN/α) Σ_j λ_j|u_j|²} for u uniform on the unit sphere of R^N
/// (α = 2) or C^N (α = 1), by Monte Carlo. Deterministic for a given seed
/// regardless of the number of worker threads.
pub fn f_sphere_mc_oracle(
    spectrum: &Spectrum,
    params: &ModelParams,
    samples: u64,
    seed: u64,
) -> Result<FreeEnergyResult> {
    let n = spectrum.len();
    if n != params.n {
        return Err(Error::invalid(format!(
            "spectrum has {n} eigenvalues but the model has N = {}",
            params.n
        )));
    }
    if n > SPHERE_MAX_N || samples < SPHERE_MIN_SAMPLES {
        return Err(Error::invalid(format!(
            "the sphere oracle needs N ≤ {SPHERE_MAX_N} and at least {SPHERE_MIN_SAMPLES} samples"
        )));
    }
    let nb = params.weight() * params.beta;
    let complex = params.alpha == Alpha::Complex;
    let per = samples / MC_CHUNKS as u64;
    let extra = samples % MC_CHUNKS as u64;
    let parts = par::map_indexed(MC_CHUNKS, |c| {
        let count = per + u64::from((c as u64) < extra);
        let mut rng = SeedPlan::new(seed, c as u64).rng();
        let mut acc = LogMeanExp::default();
        for _ in 0..count {
            let mut norm = 0.0;
            let mut quad = 0.0;
            for &lam in &spectrum.values {
                let mut m: f64 = rng.sample::<f64, _>(StandardNormal).powi(2);
                if complex {
                    m += rng.sample::<f64, _>(StandardNormal).powi(2);
                }
                norm += m;
                quad += lam * m;
            }
            acc.push(nb * quad / norm);
        }
        acc
    });
    let mut acc = LogMeanExp::default();
    for p in &parts {
        acc.merge(p);
    }
    let se = acc.log_mean_std_error();
    let log_i = acc.log_mean();
    let a = params.a();
    Ok(FreeEnergyResult {
        f: a / (2.0 * n as f64) * log_i,
        log_i,
        log_i_over_c: log_i - super::log_c(params.alpha, n, params.beta),
        method: Method::SphereMcOracle,
        quad_error: se,
        rejected: false,
        diagnostics: Diagnostics {
            std_error: Some(se),
            samples: Some(samples),
            ..Diagnostics::default()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::free_energy::log_c;

    #[test]
    fn residue_two_point() {
        let s = Spectrum::from_values(vec![1.0, -1.0]).unwrap();
        let p = ModelParams::from_beta(Alpha::Complex, 2, 1.0, 0.0).unwrap();
        let r = f_residue_oracle(&s, &p).unwrap();
        let sinh2 = 2f64.sinh();
        assert!((r.log_i_over_c - sinh2.ln()).abs() < 1e-14);
        assert!((r.log_i_over_c - 1.288_367_372_614_168).abs() < 1e-13);
        assert!((r.log_i - (sinh2 / 2.0).ln()).abs() < 1e-14);
        // The complex 2-sphere: |u₁|² is uniform, so I = ∫₀¹ e^{2β(2t−1)} dt.
        for beta in [0.3, 1.0, 1.7] {
            let p = ModelParams::from_beta(Alpha::Complex, 2, beta, 0.0).unwrap();
            let r = f_residue_oracle(&s, &p).unwrap();
            let direct = (2.0 * beta).sinh() / (2.0 * beta);
            assert!((r.log_i - direct.ln()).abs() < 1e-13);
            assert!((log_c(Alpha::Complex, 2, beta) + (2.0 * beta).ln()).abs() < 1e-14);
        }
    }

    #[test]
    fn residue_shift_and_guards() {
        let s = Spectrum::from_values(vec![1.3, 0.2, -0.4, -1.1]).unwrap();
        let p = ModelParams::from_beta(Alpha::Complex, 4, 0.8, 0.0).unwrap();
        let a = f_residue_oracle(&s, &p).unwrap();
        let b = f_residue_oracle(&s.shifted(0.37), &p).unwrap();
        assert!((b.log_i - a.log_i - 4.0 * 0.8 * 0.37).abs() < 1e-12);
        let dup = Spectrum::from_values(vec![1.0, 1.0, -1.0]).unwrap();
        let p3 = ModelParams::from_beta(Alpha::Complex, 3, 1.0, 0.0).unwrap();
        assert!(matches!(
            f_residue_oracle(&dup, &p3),
            Err(Error::DegenerateGap { .. })
        ));
        let real = ModelParams::from_beta(Alpha::Real, 4, 0.8, 0.0).unwrap();
        assert!(f_residue_oracle(&s, &real).is_err());
    }

    #[test]
    fn sphere_trivial_cases() {
        let zero = Spectrum::from_values(vec![0.0; 5]).unwrap();
        let one = Spectrum::from_values(vec![1.0; 5]).unwrap();
        for alpha in [Alpha::Complex, Alpha::Real] {
            let p = ModelParams::from_beta(alpha, 5, 1.4, 0.0).unwrap();
            let r = f_sphere_mc_oracle(&zero, &p, SPHERE_MIN_SAMPLES, 1).unwrap();
            assert_eq!(r.f, 0.0);
            let r = f_sphere_mc_oracle(&one, &p, SPHERE_MIN_SAMPLES, 1).unwrap();
            assert!((r.f - 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn sphere_matches_two_point_closed_form() {
        let s = Spectrum::from_values(vec![1.0, -1.0]).unwrap();
        let p = ModelParams::from_beta(Alpha::Complex, 2, 1.0, 0.0).unwrap();
        let r = f_sphere_mc_oracle(&s, &p, 200_000, 5).unwrap();
        let exact = (2f64.sinh() / 2.0).ln();
        assert!((2f64.sinh() / 2.0 - 1.813_430).abs() < 1e-6);
        assert!(
            (r.log_i - exact).abs() < 3.0 * r.quad_error,
            "{} vs {exact}",
            r.log_i
        );
        let again = f_sphere_mc_oracle(&s, &p, 200_000, 5).unwrap();
        assert_eq!(r.log_i, again.log_i);
        assert!(f_sphere_mc_oracle(&s, &p, 10, 5).is_err());
    }
}
