//! Fast invariant suite: closed-form examples and structural properties of
//! every module, cheap enough for CI (well under a minute in release mode).

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::ensembles::{
    chi_dof, corner_minor, sample_dense, sample_tridiag, spike_term, Alpha, DenseMatrix,
    EnsembleSpec, EntryLaw, SpikeVector, TridiagonalMatrix,
};
use crate::error::{Error, Result};
use crate::experiments::{
    clt_centering, load_records, run_suite, summarize, CltKind, ExperimentConfig, Suite,
};
use crate::free_energy::{
    beta_from_b, centering, f_keyhole, f_leading, f_residue_oracle, f_sphere_mc_oracle, f_steepest,
    f_vertical, fluctuation_stat, g_eval, g_hat, gamma_hat, log_c, saddle_point, steepest_y0,
    vertical_line_integral, ContourOptions, K3Mode, ModelParams,
};
use crate::limit_laws::{
    convolution_cdf, joint_independence_report, ks_distance, ks_two_sample, tw_table_unchecked,
    ReferenceDistribution,
};
use crate::numeric::QuadOptions;
use crate::par;
use crate::seed::SeedPlan;
use crate::spectral::{
    choose_corner_size, counting, eig_dense, eig_full, g_derivative, inverse_moment, log_det_stat,
    principal_eigenvector, stieltjes_sc, top_eigs_corner, RecursionState, Spectrum,
};

#[derive(Debug, Clone, Serialize)]
pub struct VerifyCheck {
    pub module: &'static str,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<VerifyCheck>,
    pub seconds: f64,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &VerifyCheck> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

type Outcome = Result<(bool, String)>;

struct Runner {
    checks: Vec<VerifyCheck>,
}

impl Runner {
    fn run(&mut self, module: &'static str, name: &'static str, f: impl FnOnce() -> Outcome) {
        let (pass, detail) = match f() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        self.checks.push(VerifyCheck {
            module,
            name,
            pass,
            detail,
        });
    }
}

fn spec(v: &[f64]) -> Result<Spectrum> {
    Spectrum::from_values(v.to_vec())
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

fn gaussian_spectrum(alpha: Alpha, n: usize, seed: u64) -> Result<Spectrum> {
    eig_full(&sample_tridiag(alpha, n, &SeedPlan::new(seed, 0))?)
}

fn semicircle_cdf(x: f64) -> f64 {
    let x = x.clamp(-2.0, 2.0);
    0.5 + x * (4.0 - x * x).sqrt() / (4.0 * PI) + (x / 2.0).asin() / PI
}

/// Runs every check and reports each one; never panics on a failed check.
pub fn verify() -> VerifyReport {
    let start = Instant::now();
    let mut r = Runner { checks: Vec::new() };
    ensembles_checks(&mut r);
    spectral_checks(&mut r);
    free_energy_checks(&mut r);
    limit_law_checks(&mut r);
    experiment_checks(&mut r);
    VerifyReport {
        checks: r.checks,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn ensembles_checks(r: &mut Runner) {
    const M: &str = "ensembles";
    r.run(M, "chi degrees of freedom are 2i/α", || {
        let ok =
            (1..50).all(|i| chi_dof(Alpha::Complex, i) == 2 * i && chi_dof(Alpha::Real, i) == i);
        Ok((ok, "i = 1..49".into()))
    });
    r.run(M, "zero spike leaves W unchanged", || {
        let plain = EnsembleSpec::gaussian(Alpha::Real, 12);
        let spiked = plain.clone().with_spike(0.0, SpikeVector::Uniform);
        let seed = SeedPlan::new(3, 1);
        let same = sample_dense(&plain, &seed)? == sample_dense(&spiked, &seed)?;
        let zero = spike_term(&spiked) == DenseMatrix::zeros(Alpha::Real, 12);
        Ok((same && zero, format!("same={same} zero_term={zero}")))
    });
    r.run(M, "Rademacher off-diagonal entries are ±N^{-1/2}", || {
        let n = 9;
        let s = EnsembleSpec::gaussian(Alpha::Real, n).with_law(EntryLaw::Rademacher);
        let m = sample_dense(&s, &SeedPlan::new(5, 0))?;
        let target = 1.0 / (n as f64).sqrt();
        let ok = (0..n).all(|i| {
            (0..n)
                .filter(|&j| j != i)
                .all(|j| close(m.get(i, j).re.abs(), target, 1e-15))
        });
        Ok((ok, format!("n = {n}")))
    });
    r.run(M, "entry laws match Gaussian moments 1..3", || {
        let ok = EntryLaw::ALL
            .iter()
            .all(|law| (1..=3).all(|k| law.raw_moment(k) == EntryLaw::Gaussian.raw_moment(k)));
        Ok((ok, "gaussian, rademacher, custom-moment-matched".into()))
    });
    r.run(M, "corner minor bookkeeping", || {
        let t = TridiagonalMatrix::new(vec![1.0, 2.0, 3.0, 4.0, 5.0], vec![0.1, 0.2, 0.3, 0.4])?;
        let full = corner_minor(&t, 5)? == t;
        let one = corner_minor(&t, 1)?;
        let two = corner_minor(&t, 2)?;
        let ok = full
            && one.diag == [5.0]
            && one.offdiag.is_empty()
            && two.diag == [4.0, 5.0]
            && two.offdiag == [0.4];
        Ok((ok, format!("l=2 → {:?} / {:?}", two.diag, two.offdiag)))
    });
    r.run(
        M,
        "same SeedPlan gives identical samples across pools",
        || {
            let seed = SeedPlan::new(21, 4);
            let a = par::with_threads(Some(1), || sample_tridiag(Alpha::Complex, 300, &seed))?;
            let b = par::with_threads(Some(3), || sample_tridiag(Alpha::Complex, 300, &seed))?;
            let s = EnsembleSpec::gaussian(Alpha::Complex, 20).with_law(EntryLaw::MomentMatched);
            let c = par::with_threads(Some(1), || sample_dense(&s, &seed))?;
            let d = par::with_threads(Some(2), || sample_dense(&s, &seed))?;
            Ok((a == b && c == d, String::new()))
        },
    );
    r.run(M, "dense samples are exactly Hermitian", || {
        let ok = [Alpha::Complex, Alpha::Real].iter().all(|&a| {
            EntryLaw::ALL.iter().all(|&law| {
                let s = EnsembleSpec::gaussian(a, 15)
                    .with_law(law)
                    .with_spike(0.4, SpikeVector::Uniform);
                sample_dense(&s, &SeedPlan::new(9, 2)).is_ok_and(|m| m.is_hermitian())
            })
        });
        Ok((ok, String::new()))
    });
    r.run(
        M,
        "tridiagonal spectral distribution is semicircular",
        || {
            let (n, m) = (200, 10_000);
            let spectra: Result<Vec<Vec<f64>>> = par::map_indexed(m, |i| {
                Ok(gaussian_spectrum(Alpha::Real, n, 1000 + i as u64)?.values)
            })
            .into_iter()
            .collect();
            let mut all: Vec<f64> = spectra?.into_iter().flatten().collect();
            all.sort_by(f64::total_cmp);
            let total = all.len() as f64;
            let d = all
                .iter()
                .enumerate()
                .map(|(k, &x)| {
                    let f = semicircle_cdf(x);
                    (f - k as f64 / total)
                        .abs()
                        .max(((k + 1) as f64 / total - f).abs())
                })
                .fold(0.0, f64::max);
            Ok((d < 0.05, format!("KS = {d:.4} (N=200, M=10⁴)")))
        },
    );
}

fn spectral_checks(r: &mut Runner) {
    const M: &str = "spectral";
    r.run(M, "2×2 and 1×1 spectra", || {
        let two = eig_full(&TridiagonalMatrix::new(vec![0.0, 0.0], vec![1.0])?)?;
        let one = eig_full(&TridiagonalMatrix::new(vec![0.7], vec![])?)?;
        let ok = close(two.values[0], 1.0, 1e-15)
            && close(two.values[1], -1.0, 1e-15)
            && one.values == [0.7];
        Ok((ok, format!("{:?}", two.values)))
    });
    r.run(M, "full-size corner equals the full spectrum", || {
        let t = sample_tridiag(Alpha::Real, 60, &SeedPlan::new(4, 0))?;
        let full = eig_full(&t)?;
        let top = top_eigs_corner(&t, 60, 5)?;
        let ok = top
            .values
            .iter()
            .zip(&full.values)
            .all(|(a, b)| close(*a, *b, 1e-13));
        Ok((ok, String::new()))
    });
    r.run(
        M,
        "corner λ₁ is monotone in l and bounded by the full λ₁",
        || {
            let t = sample_tridiag(Alpha::Real, 2000, &SeedPlan::new(6, 0))?;
            let full = crate::spectral::largest_eigenvalue(&t);
            let mut last = f64::NEG_INFINITY;
            let mut ok = true;
            for l in [5, 10, 20, 40, 80, 160, 320, 640, 1280, 2000] {
                let v = crate::spectral::largest_eigenvalue(&corner_minor(&t, l)?);
                ok &= v >= last - 1e-14 && v <= full + 1e-14;
                last = v;
            }
            ok &= last == full;
            Ok((ok, format!("λ₁ = {full:.12}")))
        },
    );
    r.run(M, "corner size rule", || {
        let got = [
            choose_corner_size(1000, 10.0),
            choose_corner_size(8, 10.0),
            choose_corner_size(1_000_000, 10.0),
        ];
        Ok((got == [100, 8, 1000], format!("{got:?}")))
    });
    r.run(M, "semicircle Stieltjes transform examples", || {
        let a = stieltjes_sc(Complex64::new(2.0, 0.0))?;
        let b = stieltjes_sc(Complex64::new(2.5, 0.0))?;
        let c = stieltjes_sc(Complex64::new(1e6, 0.0))?;
        let ok =
            close(a.re, -1.0, 1e-15) && close(b.re, -0.5, 1e-15) && (c.re + 1e-6).abs() < 1e-15;
        Ok((ok, format!("{a} {b} {c}")))
    });
    r.run(M, "log-det statistic examples", || {
        let ok = log_det_stat(&spec(&[3.0, 1.0])?, 2.0)? == 0.0
            && close(
                log_det_stat(&spec(&[0.0, 0.0])?, 2.0)?,
                2.0 * 2f64.ln(),
                1e-15,
            )
            && matches!(
                log_det_stat(&spec(&[2.0, 2.0])?, 2.0),
                Err(Error::Singularity { .. })
            );
        Ok((ok, String::new()))
    });
    r.run(M, "recursion coefficient identities", || {
        let s = RecursionState::new(500)?;
        let nt2 = 500.0 * s.theta * s.theta;
        let first = s.r[0] == 2.0 && s.gamma[0] == 0.0;
        let worst = (0..500)
            .map(|k| {
                let a = (s.r[k] + s.m[k] - 2.0).abs();
                let b = (s.m[k] * s.r[k] - k as f64 / nt2).abs();
                a.max(b)
            })
            .fold(0.0, f64::max);
        Ok((first && worst < 1e-14, format!("max deviation {worst:e}")))
    });
    r.run(
        M,
        "inverse moments and G derivatives at zero spectrum",
        || {
            let z = spec(&[0.0; 6])?;
            let ok = inverse_moment(&z, 2.0, 1)? == 0.5
                && inverse_moment(&z, 2.0, 2)? == 0.25
                && g_derivative(&z, 1.0, 2.0, 1)? == 0.5
                && g_derivative(&z, 1.0, 2.0, 2)? == 0.25;
            Ok((ok, String::new()))
        },
    );
    r.run(M, "counting function examples", || {
        let s = spec(&[3.0, 2.0, 1.0])?;
        let got = [counting(&s, 1.5), counting(&s, 3.5), counting(&s, 1.0)];
        Ok((got == [2, 0, 3], format!("{got:?}")))
    });
    r.run(M, "principal eigenvector of the 2×2 example", || {
        let t = TridiagonalMatrix::new(vec![0.0, 0.0], vec![1.0])?;
        let v = principal_eigenvector(&t, 50)?;
        let h = 0.5f64.sqrt();
        let ok = close(v.lambda1, 1.0, 1e-14) && v.vector.iter().all(|x| (x - h).abs() < 1e-12);
        Ok((ok, format!("{:?}", v.vector)))
    });
    r.run(M, "principal eigenvector has unit norm", || {
        let mut worst: f64 = 0.0;
        for seed in 0..5 {
            let t = sample_tridiag(Alpha::Real, 400, &SeedPlan::new(seed, 0))?;
            let v = principal_eigenvector(&t, 50)?;
            let norm = v.vector.iter().map(|x| x * x).sum::<f64>().sqrt();
            worst = worst.max((norm - 1.0).abs());
        }
        Ok((worst < 1e-12, format!("max |‖v‖−1| = {worst:e}")))
    });
    r.run(M, "G derivative finite differences", || {
        let s = gaussian_spectrum(Alpha::Real, 80, 2)?;
        let z = s.lambda1() + 0.3;
        let h = 1e-5;
        let fd = (g_derivative(&s, 1.0, z + h, 1)? - g_derivative(&s, 1.0, z - h, 1)?) / (2.0 * h);
        let exact = g_derivative(&s, 1.0, z, 2)?;
        let rel = (fd - exact).abs() / exact.abs();
        Ok((rel < 1e-6, format!("relative error {rel:e}")))
    });
    r.run(
        M,
        "log-det gradient is N times the first inverse moment",
        || {
            let s = gaussian_spectrum(Alpha::Complex, 80, 3)?;
            let e = s.lambda1() + 0.2;
            let h = 1e-5;
            let fd = (log_det_stat(&s, e + h)? - log_det_stat(&s, e - h)?) / (2.0 * h);
            let exact = 80.0 * inverse_moment(&s, e, 1)?;
            let rel = (fd - exact).abs() / exact.abs();
            Ok((rel < 1e-6, format!("relative error {rel:e}")))
        },
    );
    r.run(M, "rank-one spike interlacing", || {
        let mut ok = true;
        for (k, alpha) in [Alpha::Complex, Alpha::Real].into_iter().enumerate() {
            let base = EnsembleSpec::gaussian(alpha, 30);
            let mut rng = ChaCha8Rng::seed_from_u64(k as u64);
            let v = SpikeVector::random_unit(30, &mut rng);
            let spiked = base.clone().with_spike(0.7, v);
            let seed = SeedPlan::new(40 + k as u64, 0);
            let lam = eig_dense(&sample_dense(&spiked, &seed)?)?.values;
            let mu = eig_dense(&sample_dense(&base, &seed)?)?.values;
            for j in 0..30 {
                ok &= lam[j] >= mu[j] - 1e-12;
                if j + 1 < 30 {
                    ok &= mu[j] >= lam[j + 1] - 1e-12;
                }
            }
        }
        Ok((ok, "N = 30, J = 0.7".into()))
    });
    r.run(
        M,
        "stickiness pair: J = 0 is exact, J > 0 is ordered",
        || {
            let t = sample_tridiag(Alpha::Real, 300, &SeedPlan::new(8, 0))?;
            let base = eig_full(&t)?;
            let zero = eig_full(&t.clone().with_edge_spike(0.0))?;
            let up = eig_full(&t.with_edge_spike(0.5))?;
            let ok = zero == base && up.values.iter().zip(&base.values).all(|(a, b)| a >= b);
            Ok((ok, String::new()))
        },
    );
    r.run(M, "top gap is positive over many samples", || {
        let gaps: Result<Vec<f64>> = par::map_indexed(300, |i| {
            Ok(gaussian_spectrum(Alpha::Real, 100, 500 + i as u64)?.top_gap())
        })
        .into_iter()
        .collect();
        let min = gaps?.into_iter().fold(f64::INFINITY, f64::min);
        Ok((min > 0.0, format!("min gap {min:e}")))
    });
}

fn free_energy_checks(r: &mut Runner) {
    const M: &str = "free_energy";
    let o = ContourOptions::default();
    r.run(M, "b = 0 gives β = 1 and γ̂ = 2", || {
        Ok((
            beta_from_b(0.0, 500) == 1.0 && gamma_hat(0.0, 500) == 2.0,
            String::new(),
        ))
    });
    r.run(M, "leading branches agree at β = 1", || {
        let l = f_leading(1.0, 0.5);
        Ok((l.value == 0.25 && l.boundary, format!("{l:?}")))
    });
    r.run(M, "normalizing constant examples", || {
        let a = log_c(Alpha::Complex, 2, 1.0);
        let b = log_c(Alpha::Real, 2, 1.0);
        Ok((
            close(a, -(2f64.ln()), 1e-14) && b.abs() < 1e-14,
            format!("{a} {b}"),
        ))
    });
    r.run(
        M,
        "G at the two-point spectrum and Schwarz symmetry",
        || {
            let s = spec(&[1.0, -1.0])?;
            let g = g_eval(Complex64::new(2.0, 0.0), 1.0, &s)?;
            let z = Complex64::new(0.3, 0.8);
            let sym = (g_eval(z.conj(), 1.3, &s)? - g_eval(z, 1.3, &s)?.conj()).norm();
            let ok = close(g.re, 2.0 - 0.5 * 3f64.ln(), 1e-15) && sym < 1e-15;
            Ok((ok, format!("G(2) = {g}")))
        },
    );
    r.run(M, "unfolded vertical integral is real", || {
        let s = gaussian_spectrum(Alpha::Real, 30, 2)?;
        let gamma = saddle_point(&s, 0.9)?;
        let opts = QuadOptions {
            max_panels: 20_000,
            ..QuadOptions::default()
        };
        let j = vertical_line_integral(&s, 0.9, 15.0, gamma, 40.0, &opts);
        let ratio = j.im.abs() / j.re.abs();
        Ok((ratio < 1e-10, format!("|Im|/|Re| = {ratio:e}")))
    });
    r.run(
        M,
        "α = 1 keyhole without tail is the residue at λ₁",
        || {
            let s = gaussian_spectrum(Alpha::Complex, 9, 3)?;
            let p = ModelParams::from_beta(Alpha::Complex, 9, 1.2, 0.0)?;
            let opts = ContourOptions {
                k3: K3Mode::Never,
                ..o
            };
            let k = f_keyhole(&s, &p, &opts)?;
            let target = 9.0 * g_hat(&s, 1.2)?;
            Ok((
                k.log_i_over_c == target,
                format!("{} vs {target}", k.log_i_over_c),
            ))
        },
    );
    r.run(M, "steepest-descent height function", || {
        let ok = [4usize, 10, 50, 200].iter().enumerate().all(|(k, &n)| {
            gaussian_spectrum(Alpha::Real, n, 70 + k as u64).is_ok_and(|s| {
                let l1 = s.lambda1();
                let nf = n as f64;
                let h0 = -PI / (2.0 * nf)
                    - s.values[1..]
                        .iter()
                        .map(|v| (0.0 / (l1 - v)).atan())
                        .sum::<f64>()
                        / nf;
                steepest_y0(&s, 1.0).is_ok_and(|y| y > 0.0 && y < 1.0) && h0 < 0.0
            })
        });
        Ok((ok, "N ∈ {4, 10, 50, 200}".into()))
    });
    r.run(
        M,
        "Ĝ rejects near-degenerate tops and is linear in β",
        || {
            let bad = g_hat(&spec(&[1.0, 1.0 - 1e-15, 0.0])?, 1.0).is_err();
            let s = gaussian_spectrum(Alpha::Real, 40, 1)?;
            let d = g_hat(&s, 1.4)? - g_hat(&s, 0.9)?;
            let lin = (d - 0.5 * s.lambda1()).abs() < 1e-12;
            Ok((bad && lin, String::new()))
        },
    );
    r.run(
        M,
        "fluctuation statistic: zero at centering, affine slope",
        || {
            let p = ModelParams::from_b(Alpha::Real, 1000, -1.0, 0.0)?;
            let c = centering(&p) - 1000f64.ln() / 12000.0;
            let zero = fluctuation_stat(c, &p).abs() < 1e-9;
            let slope = 1000.0 / (2.0 / 12.0 * 1000f64.ln()).sqrt();
            let got = fluctuation_stat(c + 1e-3, &p) - fluctuation_stat(c, &p);
            Ok((
                zero && close(got, slope * 1e-3, 1e-8),
                format!("slope {}", got / 1e-3),
            ))
        },
    );
    r.run(M, "residue sum at the two-point spectrum", || {
        let s = spec(&[1.0, -1.0])?;
        let p = ModelParams::from_beta(Alpha::Complex, 2, 1.0, 0.0)?;
        let got = f_residue_oracle(&s, &p)?.log_i_over_c;
        let want = 2f64.sinh().ln();
        Ok((close(got, want, 1e-13), format!("log I/C = {got:.7}")))
    });
    r.run(M, "sphere oracle at W = 0 and W = I", || {
        let p = ModelParams::from_beta(Alpha::Real, 4, 1.3, 0.0)?;
        let zero = f_sphere_mc_oracle(&spec(&[0.0; 4])?, &p, 100_000, 1)?.f;
        let id = f_sphere_mc_oracle(&spec(&[1.0; 4])?, &p, 100_000, 1)?.f;
        Ok((
            zero.abs() < 1e-12 && close(id, 0.65, 1e-12),
            format!("{zero} {id}"),
        ))
    });
    r.run(M, "contours agree with the residue oracle (α = 1)", || {
        let mut worst: f64 = 0.0;
        for (k, n) in [2usize, 5, 10, 20, 30].into_iter().enumerate() {
            let s = gaussian_spectrum(Alpha::Complex, n, 90 + k as u64)?;
            for beta in [0.5, 1.0, 1.5] {
                let p = ModelParams::from_beta(Alpha::Complex, n, beta, 0.0)?;
                let exact = f_residue_oracle(&s, &p)?.log_i;
                for got in [f_vertical(&s, &p, &o)?.log_i, f_keyhole(&s, &p, &o)?.log_i] {
                    worst = worst.max((got - exact).abs() / exact.abs().max(1.0));
                }
            }
        }
        Ok((worst < 1e-6, format!("max relative error {worst:e}")))
    });
    r.run(
        M,
        "contours inside the sphere Monte Carlo band (α = 2)",
        || {
            let s = gaussian_spectrum(Alpha::Real, 8, 12)?;
            let p = ModelParams::from_beta(Alpha::Real, 8, 1.0, 0.0)?;
            let mc = f_sphere_mc_oracle(&s, &p, 400_000, 9)?;
            let v = f_vertical(&s, &p, &o)?.log_i;
            let k = f_keyhole(&s, &p, &o)?.log_i;
            let band = 3.0 * mc.quad_error;
            let ok = (v - mc.log_i).abs() < band && (k - mc.log_i).abs() < band;
            Ok((
                ok,
                format!("{v:.6} / {k:.6} vs {:.6} ± {band:.2e}", mc.log_i),
            ))
        },
    );
    r.run(
        M,
        "free energy is nondecreasing in β at zero trace",
        || {
            let raw = gaussian_spectrum(Alpha::Real, 60, 6)?;
            let s = raw.shifted(-raw.values.iter().sum::<f64>() / 60.0);
            let fs: Result<Vec<f64>> = [0.6, 0.8, 1.0, 1.2, 1.4]
                .iter()
                .map(|&b| {
                    Ok(f_vertical(&s, &ModelParams::from_beta(Alpha::Real, 60, b, 0.0)?, &o)?.f)
                })
                .collect();
            let fs = fs?;
            Ok((fs.windows(2).all(|w| w[1] >= w[0]), format!("{fs:?}")))
        },
    );
    r.run(M, "shifting the spectrum by c shifts F by βc/2", || {
        let s = gaussian_spectrum(Alpha::Real, 50, 5)?;
        let c = 0.31;
        let mut worst: f64 = 0.0;
        for b in [-1.0, 0.0, 1.0] {
            let p = ModelParams::from_b(Alpha::Real, 50, b, 0.0)?;
            let pairs = [
                (
                    f_vertical(&s, &p, &o)?.f,
                    f_vertical(&s.shifted(c), &p, &o)?.f,
                ),
                (
                    f_keyhole(&s, &p, &o)?.f,
                    f_keyhole(&s.shifted(c), &p, &o)?.f,
                ),
                (
                    f_steepest(&s, &p, &o, steepest_y0(&s, p.beta).ok())?.f,
                    f_steepest(
                        &s.shifted(c),
                        &p,
                        &o,
                        steepest_y0(&s.shifted(c), p.beta).ok(),
                    )?
                    .f,
                ),
            ];
            for (a, moved) in pairs {
                worst = worst.max((moved - a - p.beta * c / 2.0).abs());
            }
        }
        Ok((worst < 1e-10, format!("max deviation {worst:e}")))
    });
}

fn limit_law_checks(r: &mut Runner) {
    const M: &str = "limit_laws";
    let tw = tw_table_unchecked(Alpha::Real, 2000, 2000, 11, 10.0);
    r.run(M, "empirical CDF is monotone within [0, 1]", || {
        let tw = tw.as_ref().map_err(|e| Error::invalid(e.to_string()))?;
        let conv = convolution_cdf(1.0, tw)?;
        let ok = [tw, &conv].iter().all(|d| {
            let vals: Vec<f64> = (-400..=400).map(|k| d.cdf(k as f64 * 0.05)).collect();
            vals.windows(2).all(|w| w[1] >= w[0]) && vals.iter().all(|v| (0.0..=1.0).contains(v))
        });
        Ok((ok, String::new()))
    });
    r.run(M, "convolution with c = 0 is the standard normal", || {
        let tw = tw.as_ref().map_err(|e| Error::invalid(e.to_string()))?;
        let g = convolution_cdf(0.0, tw)?;
        let worst = (-100..=100)
            .map(|k| {
                let x = k as f64 * 0.1;
                (g.cdf(x) - crate::numeric::normal_cdf(x)).abs()
            })
            .fold(0.0, f64::max);
        Ok((
            g.cdf(0.0) == 0.5 && worst < 1e-12,
            format!("max deviation {worst:e}"),
        ))
    });
    r.run(M, "convolution mean is c times the TW mean", || {
        let tw = tw.as_ref().map_err(|e| Error::invalid(e.to_string()))?;
        let c = 1.5;
        let m = convolution_cdf(c, tw)?.mean();
        let want = c * tw.mean();
        Ok(((m - want).abs() < 0.01, format!("{m:.4} vs {want:.4}")))
    });
    r.run(M, "TW tables from disjoint seeds agree", || {
        let tw = tw.as_ref().map_err(|e| Error::invalid(e.to_string()))?;
        let other = tw_table_unchecked(Alpha::Real, 2000, 2000, 12, 10.0)?;
        let d = ks_two_sample(tw.samples().unwrap_or(&[]), other.samples().unwrap_or(&[]))?;
        let bound = 3.0 * ((2.0f64 / 0.01).ln() / (2.0 * 2000.0)).sqrt();
        Ok((
            d.statistic < bound,
            format!("KS = {:.4} < {bound:.4}", d.statistic),
        ))
    });
    r.run(M, "KS edge cases", || {
        let n = ReferenceDistribution::standard_normal();
        let half = ks_distance(&[0.0], &n)?.statistic;
        let below: Vec<f64> = (0..50).map(|k| -100.0 - k as f64).collect();
        let one = ks_distance(&below, &n)?.statistic;
        Ok((half == 0.5 && one > 1.0 - 1e-12, format!("{half} {one}")))
    });
    r.run(M, "KS is invariant under a common affine map", || {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let xs: Vec<f64> = (0..400).map(|_| StandardNormal.sample(&mut rng)).collect();
        let n = ReferenceDistribution::standard_normal();
        let a = ks_distance(&xs, &n)?.statistic;
        let moved: Vec<f64> = xs.iter().map(|x| 2.5 * x - 1.0).collect();
        let b = ks_distance(&moved, &n.affine(2.5, -1.0)?)?.statistic;
        Ok(((a - b).abs() < 1e-12, format!("{a} {b}")))
    });
    r.run(
        M,
        "dependent pairs are flagged, independent pairs are not",
        || {
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let xs: Vec<f64> = (0..2000).map(|_| StandardNormal.sample(&mut rng)).collect();
            let ys: Vec<f64> = (0..2000).map(|_| StandardNormal.sample(&mut rng)).collect();
            let same: Vec<(f64, f64)> = xs.iter().map(|&x| (x, x)).collect();
            let dep = joint_independence_report(&same)?;
            let ind: Vec<(f64, f64)> = xs.iter().copied().zip(ys.iter().copied()).collect();
            let ind = joint_independence_report(&ind)?;
            let mut shuffled = ys.clone();
            shuffled.shuffle(&mut rng);
            let sh: Vec<(f64, f64)> = xs.iter().copied().zip(shuffled).collect();
            let sh = joint_independence_report(&sh)?;
            let ok = dep.pearson.abs() == 1.0
                && dep.p_value < 1e-6
                && ind.p_value > 1e-3
                && sh.p_value > 1e-3;
            Ok((
                ok,
                format!(
                    "p: dependent {:e}, independent {:.3}, shuffled {:.3}",
                    dep.p_value, ind.p_value, sh.p_value
                ),
            ))
        },
    );
}

fn experiment_checks(r: &mut Runner) {
    const M: &str = "experiments";
    r.run(M, "CLT2 centering at C = 0", || {
        let n = 1000;
        let got = clt_centering(CltKind::Clt2, Alpha::Real, n, 0.0);
        let want = 500.0 - 1.0 / 6.0 * 1000f64.ln();
        Ok((close(got, want, 1e-14), format!("{got}")))
    });
    r.run(M, "replay, resume and summary order", || {
        let dir = std::env::temp_dir().join(format!("ssk-verify-{}", std::process::id()));
        std::fs::create_dir_all(&dir).map_err(|e| Error::io("creating temp dir", e))?;
        let out = replay_resume(&dir);
        let _ = std::fs::remove_dir_all(&dir);
        out
    });
}

fn replay_resume(dir: &std::path::Path) -> Outcome {
    let mut cfg =
        ExperimentConfig::new(Suite::Clt2, EnsembleSpec::gaussian(Alpha::Real, 300), 16, 5);
    cfg.params.spike_values = vec![0.0, 0.3];
    cfg.threads = Some(1);
    let first = run_suite(&cfg)?;
    cfg.threads = Some(3);
    let again = run_suite(&cfg)?;
    let same = |a: &[crate::experiments::ReplicaRecord],
                b: &[crate::experiments::ReplicaRecord]| {
        let key = |r: &crate::experiments::ReplicaRecord| (r.cell.clone(), r.replica_index);
        let mut a = a.to_vec();
        let mut b = b.to_vec();
        a.sort_by_key(key);
        b.sort_by_key(key);
        a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| x.same_result(y))
    };
    let replay = same(&first.records, &again.records);

    // Interrupt: keep 7 complete lines plus half of the eighth.
    let path = dir.join("records.jsonl");
    let mut text = String::new();
    for rec in first.records.iter().take(7) {
        text.push_str(&serde_json::to_string(rec)?);
        text.push('\n');
    }
    let eighth = serde_json::to_string(&first.records[7])?;
    text.push_str(&eighth[..eighth.len() / 2]);
    std::fs::write(&path, text).map_err(|e| Error::io("writing records", e))?;
    cfg.output.records = Some(path.clone());
    let resumed = run_suite(&cfg)?;
    let on_disk = load_records(&path)?;
    let resume = same(&first.records, &resumed.records) && same(&first.records, &on_disk);

    let mut reversed = first.records.clone();
    reversed.reverse();
    let order = summarize(&cfg, &reversed)?.to_json() == first.summary.to_json();
    Ok((
        replay && resume && order,
        format!("replay={replay} resume={resume} order_independent={order}"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn semicircle_cdf_endpoints() {
        assert_eq!(semicircle_cdf(-3.0), 0.0);
        assert!((semicircle_cdf(2.0) - 1.0).abs() < 1e-15);
        assert!((semicircle_cdf(0.0) - 0.5).abs() < 1e-15);
    }
}
