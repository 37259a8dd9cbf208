use std::collections::BTreeMap;
use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{ContourChoice, ExperimentConfig, Suite};
use crate::ensembles::{
    corner_minor, sample_dense_with, sample_tridiag_with, Alpha, DenseMatrix, EnsembleSpec,
    EntryLaw, TridiagonalMatrix,
};
use crate::error::{Error, Result};
use crate::free_energy::{
    beta_from_b, f_keyhole, f_steepest, f_vertical, fluctuation_stat, gamma_hat, steepest_y0,
    ContourOptions, Diagnostics, FreeEnergyResult, Method, ModelParams,
};
use crate::seed::{derive_seed, SeedPlan};
use crate::spectral::{
    choose_corner_size, count_below, eig_dense, eig_full, g_derivative, inverse_moment_lambda1,
    kth_largest, largest_eigenvalue, log_det_stat, principal_eigenvector, EdgeObservables,
    SpectralData, Spectrum, TridiagonalLogDet, DEFAULT_INVERSE_ITERATIONS,
};

/// Replacement draws tried after a degenerate gap before giving up.
pub const MAX_RESAMPLES: u32 = 8;
/// Top eigenvalues compared by the stickiness suite.
pub const STICKY_TOP: usize = 5;

/// One point of a suite's parameter grid, with its own seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub label: String,
    pub alpha: Alpha,
    pub n: usize,
    pub b: Option<f64>,
    pub law: EntryLaw,
    pub spike_j: f64,
    /// CLT constant C.
    pub c: Option<f64>,
    /// Universality: `control` marks the disjoint-seed rerun.
    pub control: bool,
    pub seed: u64,
}

/// Expands a configuration into its grid cells, in a fixed order.
pub fn cells(cfg: &ExperimentConfig) -> Vec<Cell> {
    let suite = cfg.suite;
    let law = cfg.ensemble.entry_law;
    let mut out = Vec::new();
    // Universality cells share a seed tag across entry laws; everything else
    // is seeded by its own label.
    let mut push = |label: String, tag: Option<String>, alpha, n, b, law, spike_j, c, control| {
        let seed = derive_seed(
            cfg.master_seed,
            &format!("{suite}/{}", tag.as_deref().unwrap_or(&label)),
        );
        out.push(Cell {
            label,
            alpha,
            n,
            b,
            law,
            spike_j,
            c,
            control,
            seed,
        });
    };
    for alpha in cfg.alphas() {
        let a = alpha.as_int();
        for n in cfg.n_values() {
            match suite {
                Suite::Transition | Suite::GDerivatives => {
                    for &b in &cfg.b_grid {
                        for j in cfg.spike_values() {
                            push(
                                format!("a{a}/n{n}/b{b}/j{j}"),
                                None,
                                alpha,
                                n,
                                Some(b),
                                law,
                                j,
                                None,
                                false,
                            );
                        }
                    }
                }
                Suite::Universality => {
                    for &b in &cfg.b_grid {
                        let j = cfg.ensemble.spike_j;
                        for &l in &cfg.params.laws {
                            push(
                                format!("a{a}/n{n}/b{b}/{l}"),
                                Some(format!("a{a}/n{n}/b{b}")),
                                alpha,
                                n,
                                Some(b),
                                l,
                                j,
                                None,
                                false,
                            );
                        }
                        if cfg.params.control {
                            let l = cfg.params.laws[0];
                            push(
                                format!("a{a}/n{n}/b{b}/{l}/control"),
                                None,
                                alpha,
                                n,
                                Some(b),
                                l,
                                j,
                                None,
                                true,
                            );
                        }
                    }
                }
                Suite::Clt1 | Suite::Clt2 => {
                    for &c in &cfg.params.clt_c {
                        for j in cfg.spike_values() {
                            push(
                                format!("a{a}/n{n}/c{c}/j{j}"),
                                None,
                                alpha,
                                n,
                                None,
                                law,
                                j,
                                Some(c),
                                false,
                            );
                        }
                    }
                }
                Suite::Stickiness => {
                    for j in cfg.spike_values() {
                        push(
                            format!("a{a}/n{n}/j{j}"),
                            None,
                            alpha,
                            n,
                            None,
                            law,
                            j,
                            None,
                            false,
                        );
                    }
                }
                Suite::Independence | Suite::Edge | Suite::CornerAccuracy | Suite::EigvecDecay => {
                    let j = cfg.ensemble.spike_j;
                    push(
                        format!("a{a}/n{n}/j{j}"),
                        None,
                        alpha,
                        n,
                        None,
                        law,
                        j,
                        None,
                        false,
                    );
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodDiagnostics {
    pub method: Method,
    pub log_i: f64,
    pub quad_error: f64,
    pub details: Diagnostics,
}

/// One replica's output, one line of the records file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaRecord {
    pub cell: String,
    pub replica_index: u64,
    pub n: usize,
    pub b: Option<f64>,
    pub seed: u64,
    /// 0 for the primary stream, k for the k-th reserved replacement.
    pub attempt: u32,
    pub rejected: bool,
    #[serde(default)]
    pub error: Option<String>,
    pub f: Option<f64>,
    pub fluct_stat: Option<f64>,
    pub xi1: Option<f64>,
    pub xi2: Option<f64>,
    pub gap: Option<f64>,
    /// (x, #{j : λ_j ≥ 2 − xN^{-2/3}}).
    #[serde(default)]
    pub counts: Vec<(f64, usize)>,
    /// Suite-specific scalars.
    #[serde(default)]
    pub extra: BTreeMap<String, f64>,
    pub diagnostics: Option<MethodDiagnostics>,
    pub wall_time: f64,
}

impl ReplicaRecord {
    pub fn key(&self) -> (&str, u64) {
        (&self.cell, self.replica_index)
    }

    /// True when two records agree in everything but timing.
    pub fn same_result(&self, other: &ReplicaRecord) -> bool {
        let mut a = self.clone();
        a.wall_time = 0.0;
        let mut b = other.clone();
        b.wall_time = 0.0;
        a == b
    }
}

#[derive(Debug, Default)]
struct Outcome {
    f: Option<f64>,
    fluct_stat: Option<f64>,
    xi1: Option<f64>,
    xi2: Option<f64>,
    gap: Option<f64>,
    counts: Vec<(f64, usize)>,
    extra: BTreeMap<String, f64>,
    diagnostics: Option<MethodDiagnostics>,
}

impl Outcome {
    fn all_finite(&self) -> bool {
        let opts = [self.f, self.fluct_stat, self.xi1, self.xi2, self.gap];
        opts.iter().flatten().all(|v| v.is_finite()) && self.extra.values().all(|v| v.is_finite())
    }
}

/// Runs replica `index` of `cell`, resampling from reserved streams after a
/// degenerate gap.
pub fn run_replica(cfg: &ExperimentConfig, cell: &Cell, index: u64) -> ReplicaRecord {
    let start = Instant::now();
    let plan = SeedPlan::new(cell.seed, index);
    let mut attempt = 0;
    let result = loop {
        let mut rng = if attempt == 0 {
            plan.rng()
        } else {
            plan.reserve_rng(attempt)
        };
        match compute(cfg, cell, &mut rng) {
            Err(Error::DegenerateGap { .. }) if attempt < MAX_RESAMPLES => attempt += 1,
            Ok(out) if !out.all_finite() => {
                break Err(Error::Domain("non-finite replica output".into()))
            }
            other => break other,
        }
    };
    let mut rec = ReplicaRecord {
        cell: cell.label.clone(),
        replica_index: index,
        n: cell.n,
        b: cell.b,
        seed: cell.seed,
        attempt,
        rejected: false,
        error: None,
        f: None,
        fluct_stat: None,
        xi1: None,
        xi2: None,
        gap: None,
        counts: Vec::new(),
        extra: BTreeMap::new(),
        diagnostics: None,
        wall_time: 0.0,
    };
    match result {
        Ok(out) => {
            rec.f = out.f;
            rec.fluct_stat = out.fluct_stat;
            rec.xi1 = out.xi1;
            rec.xi2 = out.xi2;
            rec.gap = out.gap;
            rec.counts = out.counts;
            rec.extra = out.extra;
            rec.diagnostics = out.diagnostics;
        }
        Err(e) => {
            rec.rejected = true;
            rec.error = Some(e.to_string());
        }
    }
    rec.wall_time = start.elapsed().as_secs_f64();
    rec
}

fn compute(cfg: &ExperimentConfig, cell: &Cell, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    match cfg.suite {
        Suite::Transition | Suite::Universality => transition(cfg, cell, rng),
        Suite::Clt1 => clt(cfg, cell, rng, CltKind::Clt1),
        Suite::Clt2 => clt(cfg, cell, rng, CltKind::Clt2),
        Suite::Independence | Suite::Edge => edge(cfg, cell, rng),
        Suite::GDerivatives => g_derivatives(cfg, cell, rng),
        Suite::CornerAccuracy => corner_accuracy(cfg, cell, rng),
        Suite::EigvecDecay => eigvec_decay(cell, rng),
        Suite::Stickiness => stickiness(cfg, cell, rng),
    }
}

/// ξ₁N = (N/2 − ((α−1)/6)log N − Σ log|2 − λ_j|)/√((α/3)log N).
pub fn xi1_stat(alpha: Alpha, n: usize, log_det_at_two: f64) -> f64 {
    let nf = n as f64;
    let l = nf.ln();
    (nf / 2.0 - (alpha.value() - 1.0) / 6.0 * l - log_det_at_two) / (alpha.value() / 3.0 * l).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CltKind {
    /// γ = 2 + CN^{-2/3}log N, C > 0.
    Clt1,
    /// γ = 2 + CN^{-2/3}.
    Clt2,
}

pub fn clt_point(kind: CltKind, n: usize, c: f64) -> f64 {
    let nf = n as f64;
    match kind {
        CltKind::Clt1 => 2.0 + c * nf.powf(-2.0 / 3.0) * nf.ln(),
        CltKind::Clt2 => 2.0 + c * nf.powf(-2.0 / 3.0),
    }
}

/// The deterministic part subtracted from Σ log|γ − λ_j|.
pub fn clt_centering(kind: CltKind, alpha: Alpha, n: usize, c: f64) -> f64 {
    let nf = n as f64;
    let l = nf.ln();
    let base = nf / 2.0 - (alpha.value() - 1.0) / 6.0 * l;
    match kind {
        CltKind::Clt1 => base + nf.cbrt() * c * l - 2.0 / 3.0 * (c * l).powf(1.5),
        CltKind::Clt2 => base + nf.cbrt() * c,
    }
}

pub fn clt_stat(kind: CltKind, alpha: Alpha, n: usize, c: f64, log_det: f64) -> f64 {
    let l = (n as f64).ln();
    (log_det - clt_centering(kind, alpha, n, c)) / (alpha.value() / 3.0 * l).sqrt()
}

enum Disorder {
    Tridiagonal(TridiagonalMatrix),
    Dense(DenseMatrix),
}

fn cell_spec(cfg: &ExperimentConfig, cell: &Cell, spike_j: f64) -> EnsembleSpec {
    EnsembleSpec {
        alpha: cell.alpha,
        n: cell.n,
        entry_law: cell.law,
        diag_variance: cfg.ensemble.diag_variance.clone(),
        spike_j,
        spike_vector: cfg.ensemble.spike_vector.clone(),
    }
}

/// Gaussian laws with the default diagonal use the tridiagonal model, which
/// has the same spectrum law; the spike then sits on the last diagonal entry.
fn uses_tridiagonal(cfg: &ExperimentConfig, cell: &Cell) -> bool {
    !cfg.method.dense && cell_spec(cfg, cell, 0.0).has_tridiagonal_model()
}

fn sample(cfg: &ExperimentConfig, cell: &Cell, rng: &mut ChaCha8Rng) -> Result<Disorder> {
    if uses_tridiagonal(cfg, cell) {
        return Ok(Disorder::Tridiagonal(
            sample_tridiag_with(cell.alpha, cell.n, rng).with_edge_spike(cell.spike_j),
        ));
    }
    let spec = cell_spec(cfg, cell, cell.spike_j);
    spec.validate()?;
    Ok(Disorder::Dense(sample_dense_with(&spec, rng)))
}

impl Disorder {
    fn spectrum(&self) -> Result<Spectrum> {
        match self {
            Disorder::Tridiagonal(t) => eig_full(t),
            Disorder::Dense(m) => eig_dense(m),
        }
    }
}

fn edge_from_spectrum(out: &mut Outcome, s: &Spectrum, thresholds: &[f64]) {
    let e = EdgeObservables::from_spectrum(s, thresholds);
    out.xi2 = Some(e.xi2);
    out.gap = Some(e.gap);
    out.counts = e.counts;
}

fn edge_from_tridiag(
    out: &mut Outcome,
    t: &TridiagonalMatrix,
    lambda1: f64,
    thresholds: &[f64],
) -> Result<()> {
    let n = t.len();
    let scale = (n as f64).powf(2.0 / 3.0);
    let lambda2 = kth_largest(t, 2)?;
    out.xi2 = Some(scale * (lambda1 - 2.0));
    out.gap = Some(scale * (lambda1 - lambda2));
    out.counts = thresholds
        .iter()
        .map(|&x| (x, n - count_below(t, 2.0 - x / scale)))
        .collect();
    Ok(())
}

fn contour<S: SpectralData + ?Sized>(
    data: &S,
    params: &ModelParams,
    opts: &ContourOptions,
    choice: ContourChoice,
) -> Result<FreeEnergyResult> {
    match choice {
        ContourChoice::Steepest => {
            f_steepest(data, params, opts, steepest_y0(data, params.beta).ok())
        }
        _ => f_vertical(data, params, opts),
    }
}

fn transition(cfg: &ExperimentConfig, cell: &Cell, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let b = cell
        .b
        .ok_or_else(|| Error::invalid("transition cell without b"))?;
    let params = ModelParams::from_b(cell.alpha, cell.n, b, cell.spike_j)?;
    let opts = ContourOptions {
        k3: cfg.method.k3,
        abscissa: cfg.method.abscissa,
        ..ContourOptions::default()
    };
    let choice = cfg.method.resolve(b);
    let thresholds = &cfg.params.count_thresholds;
    let mut out = Outcome::default();
    let result = match sample(cfg, cell, rng)? {
        Disorder::Tridiagonal(t) if choice != ContourChoice::Keyhole => {
            let det = TridiagonalLogDet::new(t);
            edge_from_tridiag(&mut out, det.matrix(), det.lambda1(), thresholds)?;
            out.xi1 = Some(xi1_stat(cell.alpha, cell.n, det.log_abs_det(2.0)?));
            contour(&det, &params, &opts, choice)?
        }
        d => {
            let s = d.spectrum()?;
            edge_from_spectrum(&mut out, &s, thresholds);
            out.xi1 = Some(xi1_stat(cell.alpha, cell.n, log_det_stat(&s, 2.0)?));
            match choice {
                ContourChoice::Keyhole => f_keyhole(&s, &params, &opts)?,
                other => contour(&s, &params, &opts, other)?,
            }
        }
    };
    out.f = Some(result.f);
    out.fluct_stat = Some(fluctuation_stat(result.f, &params));
    out.diagnostics = Some(MethodDiagnostics {
        method: result.method,
        log_i: result.log_i,
        quad_error: result.quad_error,
        details: result.diagnostics,
    });
    Ok(out)
}

/// The CLT statistic goes to `extra["clt"]`, γ to `extra["gamma"]`.
fn clt(
    cfg: &ExperimentConfig,
    cell: &Cell,
    rng: &mut ChaCha8Rng,
    kind: CltKind,
) -> Result<Outcome> {
    let c = cell.c.ok_or_else(|| Error::invalid("CLT cell without C"))?;
    let gamma = clt_point(kind, cell.n, c);
    let thresholds = &cfg.params.count_thresholds;
    let mut out = Outcome::default();
    let (at_gamma, at_two) = match sample(cfg, cell, rng)? {
        Disorder::Tridiagonal(t) => {
            let det = TridiagonalLogDet::new(t);
            edge_from_tridiag(&mut out, det.matrix(), det.lambda1(), thresholds)?;
            (det.log_abs_det(gamma)?, det.log_abs_det(2.0)?)
        }
        d => {
            let s = d.spectrum()?;
            edge_from_spectrum(&mut out, &s, thresholds);
            (log_det_stat(&s, gamma)?, log_det_stat(&s, 2.0)?)
        }
    };
    out.xi1 = Some(xi1_stat(cell.alpha, cell.n, at_two));
    out.extra.insert(
        "clt".into(),
        clt_stat(kind, cell.alpha, cell.n, c, at_gamma),
    );
    out.extra.insert("gamma".into(), gamma);
    out.extra.insert("log_det".into(), at_gamma);
    Ok(out)
}

/// Edge observables and ξ₁N (independence and edge suites).
fn edge(cfg: &ExperimentConfig, cell: &Cell, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let thresholds = &cfg.params.count_thresholds;
    let mut out = Outcome::default();
    match sample(cfg, cell, rng)? {
        Disorder::Tridiagonal(t) => {
            let det = TridiagonalLogDet::new(t);
            edge_from_tridiag(&mut out, det.matrix(), det.lambda1(), thresholds)?;
            out.xi1 = Some(xi1_stat(cell.alpha, cell.n, det.log_abs_det(2.0)?));
        }
        d => {
            let s = d.spectrum()?;
            edge_from_spectrum(&mut out, &s, thresholds);
            out.xi1 = Some(xi1_stat(cell.alpha, cell.n, log_det_stat(&s, 2.0)?));
        }
    }
    Ok(out)
}

/// G^{(l)}(γ̂) for l = 1, 2, 3 as `g1`..`g3` (absent when γ̂ ≤ λ₁) and the
/// λ₁-centered inverse moment as `inv_lambda1`.
fn g_derivatives(cfg: &ExperimentConfig, cell: &Cell, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let b = cell
        .b
        .ok_or_else(|| Error::invalid("g_derivatives cell without b"))?;
    let s = sample(cfg, cell, rng)?.spectrum()?;
    let mut out = Outcome::default();
    edge_from_spectrum(&mut out, &s, &cfg.params.count_thresholds);
    out.extra
        .insert("inv_lambda1".into(), inverse_moment_lambda1(&s, 1)?);
    let z = gamma_hat(b, cell.n);
    out.extra.insert("gamma_hat".into(), z);
    if z > s.lambda1() {
        let beta = beta_from_b(b, cell.n);
        for l in 1..=3u32 {
            out.extra
                .insert(format!("g{l}"), g_derivative(&s, beta, z, l)?);
        }
    }
    Ok(out)
}

pub fn multiplier_key(m: f64) -> String {
    format!("err_m{m}")
}

/// λ₁(full) − λ₁(corner) per multiplier, both by bisection on the same
/// matrix.
fn corner_accuracy(cfg: &ExperimentConfig, cell: &Cell, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let t = match sample(cfg, cell, rng)? {
        Disorder::Tridiagonal(t) => t,
        Disorder::Dense(_) => {
            return Err(Error::invalid(
                "corner accuracy needs the tridiagonal model",
            ))
        }
    };
    let full = largest_eigenvalue(&t);
    let mut out = Outcome {
        xi2: Some((cell.n as f64).powf(2.0 / 3.0) * (full - 2.0)),
        ..Outcome::default()
    };
    for &m in &cfg.params.corner_multipliers {
        let l = choose_corner_size(cell.n, m);
        let corner = largest_eigenvalue(&corner_minor(&t, l)?);
        out.extra.insert(multiplier_key(m), (full - corner).abs());
        out.extra.insert(format!("l_m{m}"), l as f64);
    }
    Ok(out)
}

fn eigvec_decay(cell: &Cell, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let t = sample_tridiag_with(cell.alpha, cell.n, rng).with_edge_spike(cell.spike_j);
    let v = principal_eigenvector(&t, DEFAULT_INVERSE_ITERATIONS)?;
    let mut out = Outcome {
        xi2: Some((cell.n as f64).powf(2.0 / 3.0) * (v.lambda1 - 2.0)),
        ..Outcome::default()
    };
    out.extra.insert("early_max".into(), v.early_max);
    out.extra
        .insert("early_cutoff".into(), v.early_cutoff as f64);
    out.extra.insert("iterations".into(), v.iterations as f64);
    Ok(out)
}

/// Spiked and unspiked matrices from one noise draw; `max_diff` is
/// max_{j≤5}|λ_j − μ_j| and `ordered` is 1 when every λ_j ≥ μ_j.
///
/// On the tridiagonal route the pair (T, T + J·e_N e_Nᵀ) has the joint law
/// of (W, W + J·vv*): tridiagonalizing W from v maps v to e_N.
fn stickiness(cfg: &ExperimentConfig, cell: &Cell, rng: &mut ChaCha8Rng) -> Result<Outcome> {
    let k = STICKY_TOP.min(cell.n);
    let (spiked, plain): (Vec<f64>, Vec<f64>) = if uses_tridiagonal(cfg, cell) {
        let t = sample_tridiag_with(cell.alpha, cell.n, rng);
        let s = t.clone().with_edge_spike(cell.spike_j);
        let top = |m: &TridiagonalMatrix| {
            (1..=k)
                .map(|j| kth_largest(m, j))
                .collect::<Result<Vec<f64>>>()
        };
        (top(&s)?, top(&t)?)
    } else {
        let spec = cell_spec(cfg, cell, 0.0);
        spec.validate()?;
        let w = sample_dense_with(&spec, rng);
        let mut s = w.clone();
        s.add_rank_one(cell.spike_j, &cfg.ensemble.spike_vector.materialize(cell.n));
        let a = eig_dense(&s)?;
        let b = eig_dense(&w)?;
        (a.values[..k].to_vec(), b.values[..k].to_vec())
    };
    let max_diff = spiked
        .iter()
        .zip(&plain)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let ordered = spiked.iter().zip(&plain).all(|(a, b)| a >= b);
    let mut out = Outcome {
        xi2: Some((cell.n as f64).powf(2.0 / 3.0) * (spiked[0] - 2.0)),
        ..Outcome::default()
    };
    out.extra.insert("max_diff".into(), max_diff);
    out.extra
        .insert("ordered".into(), if ordered { 1.0 } else { 0.0 });
    Ok(out)
}
