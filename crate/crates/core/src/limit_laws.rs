//! Reference laws (standard normal, empirical Tracy–Widom, Gaussian plus a
//! scaled Tracy–Widom) and the distances used to compare replica samples
//! with them.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::ensembles::{sample_tridiag_corner, Alpha};
use crate::error::{Error, Result};
use crate::numeric::{mean_var, normal_cdf};
use crate::par;
use crate::seed::SeedPlan;
use crate::spectral::{choose_corner_size, largest_eigenvalue};

pub const TW_MIN_N: usize = 10_000;
pub const TW_MIN_SAMPLES: usize = 10_000;
/// Corner size multiplier used for table generation.
pub const TW_CORNER_MULTIPLIER: f64 = 10.0;
pub const CONVOLUTION_NODES: usize = 2001;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReferenceKind {
    Gaussian,
    TwEmpirical {
        alpha: Alpha,
    },
    Convolution {
        c: f64,
    },
    /// Anything built directly from samples or a grid.
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub n_internal: usize,
    pub samples: usize,
    pub seed: u64,
    pub corner_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Repr {
    Normal {
        mean: f64,
        sd: f64,
    },
    /// Sorted sample; the CDF is the right-continuous empirical one.
    Empirical {
        sorted: Vec<f64>,
    },
    /// Piecewise-linear CDF through (x_k, F_k); 0 below and 1 above.
    Grid {
        x: Vec<f64>,
        cdf: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceDistribution {
    pub kind: ReferenceKind,
    pub provenance: Option<Provenance>,
    repr: Repr,
}

impl ReferenceDistribution {
    pub fn standard_normal() -> Self {
        ReferenceDistribution {
            kind: ReferenceKind::Gaussian,
            provenance: None,
            repr: Repr::Normal { mean: 0.0, sd: 1.0 },
        }
    }

    pub fn empirical(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() || samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid(
                "empirical law needs a non-empty finite sample",
            ));
        }
        samples.sort_by(f64::total_cmp);
        Ok(ReferenceDistribution {
            kind: ReferenceKind::Custom,
            provenance: None,
            repr: Repr::Empirical { sorted: samples },
        })
    }

    pub fn from_grid(x: Vec<f64>, cdf: Vec<f64>) -> Result<Self> {
        if x.len() != cdf.len() || x.len() < 2 {
            return Err(Error::invalid(
                "grid CDF needs matching node and value arrays",
            ));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) || cdf.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::invalid(
                "grid CDF must have increasing nodes and nondecreasing values",
            ));
        }
        if cdf[0] < 0.0 || cdf[cdf.len() - 1] > 1.0 {
            return Err(Error::invalid("grid CDF values must lie in [0, 1]"));
        }
        Ok(ReferenceDistribution {
            kind: ReferenceKind::Custom,
            provenance: None,
            repr: Repr::Grid { x, cdf },
        })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Normal { mean, sd } => normal_cdf((x - mean) / sd),
            Repr::Empirical { sorted } => {
                sorted.partition_point(|&s| s <= x) as f64 / sorted.len() as f64
            }
            Repr::Grid { x: xs, cdf } => {
                let k = xs.partition_point(|&v| v <= x);
                if k == 0 {
                    0.0
                } else if k == xs.len() {
                    1.0
                } else {
                    let t = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
                    cdf[k - 1] + t * (cdf[k] - cdf[k - 1])
                }
            }
        }
    }

    /// lim_{y↑x} F(y); differs from [`Self::cdf`] only at atoms.
    pub fn cdf_left(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Empirical { sorted } => {
                sorted.partition_point(|&s| s < x) as f64 / sorted.len() as f64
            }
            Repr::Grid { x: xs, .. } if x <= xs[0] => 0.0,
            _ => self.cdf(x),
        }
    }

    pub fn mean(&self) -> f64 {
        self.moments().0
    }

    pub fn variance(&self) -> f64 {
        self.moments().1
    }

    /// Mean and variance; for grids by treating each cell's mass as sitting
    /// uniformly on the cell.
    pub fn moments(&self) -> (f64, f64) {
        match &self.repr {
            Repr::Normal { mean, sd } => (*mean, sd * sd),
            Repr::Empirical { sorted } => {
                let (m, v) = mean_var(sorted);
                // Population variance of the table.
                let n = sorted.len() as f64;
                (m, v * (n - 1.0) / n)
            }
            Repr::Grid { x, cdf } => {
                let mut m1 = 0.0;
                let mut m2 = 0.0;
                let mut mass = 0.0;
                for k in 1..x.len() {
                    let p = cdf[k] - cdf[k - 1];
                    let (a, b) = (x[k - 1], x[k]);
                    m1 += p * 0.5 * (a + b);
                    m2 += p * (a * a + a * b + b * b) / 3.0;
                    mass += p;
                }
                let m = m1 / mass;
                (m, m2 / mass - m * m)
            }
        }
    }

    /// The law of aX + b for a > 0.
    pub fn affine(&self, a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0) {
            return Err(Error::invalid("affine map must be increasing"));
        }
        let repr = match &self.repr {
            Repr::Normal { mean, sd } => Repr::Normal {
                mean: a * mean + b,
                sd: a * sd,
            },
            Repr::Empirical { sorted } => Repr::Empirical {
                sorted: sorted.iter().map(|s| a * s + b).collect(),
            },
            Repr::Grid { x, cdf } => Repr::Grid {
                x: x.iter().map(|s| a * s + b).collect(),
                cdf: cdf.clone(),
            },
        };
        Ok(ReferenceDistribution {
            kind: ReferenceKind::Custom,
            provenance: self.provenance,
            repr,
        })
    }

    /// Support of the stored representation (infinite for the normal law).
    pub fn support(&self) -> (f64, f64) {
        match &self.repr {
            Repr::Normal { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Repr::Empirical { sorted } => (sorted[0], sorted[sorted.len() - 1]),
            Repr::Grid { x, .. } => (x[0], x[x.len() - 1]),
        }
    }

    pub fn samples(&self) -> Option<&[f64]> {
        match &self.repr {
            Repr::Empirical { sorted } => Some(sorted),
            _ => None,
        }
    }

    /// Points where the CDF should be inspected (jumps or grid nodes).
    fn breakpoints(&self) -> &[f64] {
        match &self.repr {
            Repr::Normal { .. } => &[],
            Repr::Empirical { sorted } => sorted,
            Repr::Grid { x, .. } => x,
        }
    }

    /// CSV with `#`-prefixed provenance lines followed by `x,cdf` rows. For an
    /// empirical table the rows are the jump points of its CDF.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# kind: {}",
            serde_json::to_string(&self.kind).unwrap_or_default()
        );
        if let Some(p) = &self.provenance {
            let _ = writeln!(
                out,
                "# n_internal: {}\n# samples: {}\n# seed: {}\n# corner_size: {}",
                p.n_internal, p.samples, p.seed, p.corner_size
            );
        }
        out.push_str("x,cdf\n");
        match &self.repr {
            Repr::Normal { mean, sd } => {
                for k in 0..=200 {
                    let x = mean + sd * (-8.0 + 0.08 * k as f64);
                    let _ = writeln!(out, "{x:?},{:?}", self.cdf(x));
                }
            }
            Repr::Empirical { sorted } => {
                let m = sorted.len();
                for (i, x) in sorted.iter().enumerate() {
                    if i + 1 < m && sorted[i + 1] == *x {
                        continue;
                    }
                    let _ = writeln!(out, "{x:?},{:?}", (i + 1) as f64 / m as f64);
                }
            }
            Repr::Grid { x, cdf } => {
                for (a, b) in x.iter().zip(cdf) {
                    let _ = writeln!(out, "{a:?},{b:?}");
                }
            }
        }
        out
    }

    /// Reads a table written by [`Self::to_csv`] for an empirical TW law.
    pub fn tw_from_csv(text: &str) -> Result<Self> {
        let mut kind = ReferenceKind::Custom;
        let mut prov = Provenance {
            n_internal: 0,
            samples: 0,
            seed: 0,
            corner_size: 0,
        };
        let mut has_prov = false;
        let mut sorted = Vec::new();
        let mut prev = 0usize;
        let mut total = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line == "x,cdf" {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let (key, value) = rest.split_once(':').unwrap_or((rest, ""));
                let value = value.trim();
                let bad = |_| Error::Config {
                    field: format!("line {}", lineno + 1),
                    message: format!("bad header value `{value}`"),
                };
                match key.trim() {
                    "kind" => kind = serde_json::from_str(value)?,
                    "n_internal" => {
                        prov.n_internal = value.parse().map_err(bad)?;
                        has_prov = true;
                    }
                    "samples" => {
                        prov.samples = value.parse().map_err(bad)?;
                        total = Some(prov.samples);
                    }
                    "seed" => prov.seed = value.parse().map_err(bad)?,
                    "corner_size" => prov.corner_size = value.parse().map_err(bad)?,
                    _ => {}
                }
                continue;
            }
            let err = || Error::Config {
                field: format!("line {}", lineno + 1),
                message: format!("expected `x,cdf`, got `{line}`"),
            };
            let (xs, fs) = line.split_once(',').ok_or_else(err)?;
            let x: f64 = xs.trim().parse().map_err(|_| err())?;
            let f: f64 = fs.trim().parse().map_err(|_| err())?;
            let m = total.ok_or_else(|| Error::Config {
                field: "samples".into(),
                message: "header must state the sample count".into(),
            })?;
            let upto = (f * m as f64).round() as usize;
            if upto < prev || upto > m {
                return Err(err());
            }
            sorted.extend(std::iter::repeat_n(x, upto - prev));
            prev = upto;
        }
        if sorted.is_empty() || Some(sorted.len()) != total {
            return Err(Error::Config {
                field: "rows".into(),
                message: "table rows do not account for every sample".into(),
            });
        }
        Ok(ReferenceDistribution {
            kind,
            provenance: has_prov.then_some(prov),
            repr: Repr::Empirical { sorted },
        })
    }
}

/// One edge draw N^{2/3}(λ₁ − 2) from the bottom-right corner of the
/// tridiagonal model.
pub fn tw_draw(alpha: Alpha, n: usize, corner: usize, seed: &SeedPlan) -> Result<f64> {
    let t = sample_tridiag_corner(alpha, n, corner, seed)?;
    Ok((n as f64).powf(2.0 / 3.0) * (largest_eigenvalue(&t) - 2.0))
}

/// Empirical Tracy–Widom (TW₂ for α = 1, TW₁ for α = 2) table.
pub fn tw_table(
    alpha: Alpha,
    n_internal: usize,
    m_samples: usize,
    seed: u64,
) -> Result<ReferenceDistribution> {
    if n_internal < TW_MIN_N || m_samples < TW_MIN_SAMPLES {
        return Err(Error::invalid(format!(
            "tw_table needs n_internal ≥ {TW_MIN_N} and m_samples ≥ {TW_MIN_SAMPLES}"
        )));
    }
    tw_table_unchecked(alpha, n_internal, m_samples, seed, TW_CORNER_MULTIPLIER)
}

/// [`tw_table`] with a chosen corner multiplier.
pub fn tw_table_with_corner(
    alpha: Alpha,
    n_internal: usize,
    m_samples: usize,
    seed: u64,
    multiplier: f64,
) -> Result<ReferenceDistribution> {
    if n_internal < TW_MIN_N || m_samples < TW_MIN_SAMPLES || !(multiplier > 0.0) {
        return Err(Error::invalid(format!(
            "tw_table needs n_internal ≥ {TW_MIN_N}, m_samples ≥ {TW_MIN_SAMPLES} and a positive multiplier"
        )));
    }
    tw_table_unchecked(alpha, n_internal, m_samples, seed, multiplier)
}

pub(crate) fn tw_table_unchecked(
    alpha: Alpha,
    n: usize,
    m: usize,
    seed: u64,
    multiplier: f64,
) -> Result<ReferenceDistribution> {
    let corner = choose_corner_size(n, multiplier);
    let draws: Result<Vec<f64>> = par::map_indexed(m, |i| {
        tw_draw(alpha, n, corner, &SeedPlan::new(seed, i as u64))
    })
    .into_iter()
    .collect();
    let mut table = ReferenceDistribution::empirical(draws?)?;
    table.kind = ReferenceKind::TwEmpirical { alpha };
    table.provenance = Some(Provenance {
        n_internal: n,
        samples: m,
        seed,
        corner_size: corner,
    });
    Ok(table)
}

/// CDF of Z + c·T with Z standard normal independent of T drawn from
/// `tw`, on a grid of [`CONVOLUTION_NODES`] points spanning
/// [−10 − 6c, 10 + 6c]. c = 0 returns the normal law itself.
pub fn convolution_cdf(c: f64, tw: &ReferenceDistribution) -> Result<ReferenceDistribution> {
    if !(c >= 0.0) {
        return Err(Error::invalid(format!(
            "convolution scale must be ≥ 0, got {c}"
        )));
    }
    if c == 0.0 {
        let mut g = ReferenceDistribution::standard_normal();
        g.kind = ReferenceKind::Convolution { c };
        return Ok(g);
    }
    let samples = tw
        .samples()
        .ok_or_else(|| Error::invalid("convolution needs an empirical Tracy–Widom table"))?;
    // Bin the table finely; Φ varies on the scale 1 ≫ bin width × c.
    let width = 0.002 / c.max(1.0);
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let w = 1.0 / samples.len() as f64;
    let mut i = 0;
    while i < samples.len() {
        let cell = (samples[i] / width).floor();
        let mut j = i;
        let mut sum = 0.0;
        while j < samples.len() && (samples[j] / width).floor() == cell {
            sum += samples[j];
            j += 1;
        }
        let count = (j - i) as f64;
        bins.push((sum / count, count * w));
        i = j;
    }
    let lo = -10.0 - 6.0 * c;
    let hi = 10.0 + 6.0 * c;
    let step = (hi - lo) / (CONVOLUTION_NODES - 1) as f64;
    let x: Vec<f64> = (0..CONVOLUTION_NODES)
        .map(|k| lo + step * k as f64)
        .collect();
    let cdf: Vec<f64> = par::map_items(&x, |&xk| {
        bins.iter()
            .map(|&(t, p)| p * normal_cdf(xk - c * t))
            .sum::<f64>()
            .min(1.0)
    });
    // Rounding can break monotonicity in the last bit.
    let mut fixed = cdf;
    for k in 1..fixed.len() {
        if fixed[k] < fixed[k - 1] {
            fixed[k] = fixed[k - 1];
        }
    }
    let mut out = ReferenceDistribution::from_grid(x, fixed)?;
    out.kind = ReferenceKind::Convolution { c };
    out.provenance = tw.provenance;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsReport {
    pub statistic: f64,
    pub n_samples: usize,
    pub p_value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
}

impl KsReport {
    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = Some(threshold);
        self.pass = Some(self.statistic < threshold);
        self
    }
}

/// Asymptotic Kolmogorov tail P(√n·D > λ) with Stephens' small-sample
/// correction.
pub fn kolmogorov_p_value(d: f64, n_eff: f64) -> f64 {
    let sn = n_eff.sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Exact sup-distance between the empirical CDF of `samples` and `reference`.
pub fn ks_distance(samples: &[f64], reference: &ReferenceDistribution) -> Result<KsReport> {
    if samples.is_empty() || samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("KS needs a non-empty finite sample"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    // Both CDFs are monotone; between consecutive inspection points the
    // empirical one is constant and the reference moves monotonically, so
    // the supremum is attained at an inspection point or as a one-sided
    // limit there.
    let mut points: Vec<f64> = sorted.clone();
    points.extend_from_slice(reference.breakpoints());
    points.sort_by(f64::total_cmp);
    points.dedup();
    let mut d: f64 = 0.0;
    for &p in &points {
        let right = sorted.partition_point(|&s| s <= p) as f64 / n;
        let left = sorted.partition_point(|&s| s < p) as f64 / n;
        d = d.max((right - reference.cdf(p)).abs());
        d = d.max((left - reference.cdf_left(p)).abs());
    }
    Ok(KsReport {
        statistic: d.min(1.0),
        n_samples: samples.len(),
        p_value: kolmogorov_p_value(d, n),
        threshold: None,
        pass: None,
    })
}

/// Two-sample KS distance between empirical CDFs.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsReport> {
    let rb = ReferenceDistribution::empirical(b.to_vec())?;
    let mut r = ks_distance(a, &rb)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    r.p_value = kolmogorov_p_value(r.statistic, na * nb / (na + nb));
    Ok(r)
}

pub const INDEPENDENCE_MIN_PAIRS: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependenceReport {
    pub n: usize,
    pub pearson: f64,
    /// 4×4 table of counts over quantile bins of the two margins.
    pub counts: [[usize; 4]; 4],
    pub chi_square: f64,
    pub dof: usize,
    pub p_value: f64,
}

fn quartile_bins(values: &[f64]) -> Vec<usize> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]).then(i.cmp(&j)));
    let mut bins = vec![0; n];
    for (rank, &i) in order.iter().enumerate() {
        bins[i] = (4 * rank / n).min(3);
    }
    bins
}

/// Pearson correlation and a chi-square test of independence on
/// equiprobable 4×4 bins.
pub fn joint_independence_report(pairs: &[(f64, f64)]) -> Result<IndependenceReport> {
    let n = pairs.len();
    if n < INDEPENDENCE_MIN_PAIRS {
        return Err(Error::invalid(format!(
            "independence report needs at least {INDEPENDENCE_MIN_PAIRS} pairs, got {n}"
        )));
    }
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let (mx, vx) = mean_var(&xs);
    let (my, vy) = mean_var(&ys);
    let cov = pairs.iter().map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / (n as f64 - 1.0);
    let pearson = (cov / (vx * vy).sqrt()).clamp(-1.0, 1.0);
    let (bx, by) = (quartile_bins(&xs), quartile_bins(&ys));
    let mut counts = [[0usize; 4]; 4];
    for (i, j) in bx.iter().zip(&by) {
        counts[*i][*j] += 1;
    }
    let rows: Vec<f64> = (0..4)
        .map(|i| counts[i].iter().sum::<usize>() as f64)
        .collect();
    let cols: Vec<f64> = (0..4)
        .map(|j| (0..4).map(|i| counts[i][j]).sum::<usize>() as f64)
        .collect();
    let mut chi = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let e = rows[i] * cols[j] / n as f64;
            if e > 0.0 {
                chi += (counts[i][j] as f64 - e).powi(2) / e;
            }
        }
    }
    let dof = 9;
    let p_value = ChiSquared::new(dof as f64)
        .map(|d| d.sf(chi))
        .map_err(|e| Error::invalid(e.to_string()))?;
    Ok(IndependenceReport {
        n,
        pearson,
        counts,
        chi_square: chi,
        dof,
        p_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn normals(seed: u64, m: usize) -> Vec<f64> {
        let mut rng = SeedPlan::new(seed, 0).rng();
        (0..m).map(|_| rng.sample(StandardNormal)).collect()
    }

    #[test]
    fn ks_trivial_cases() {
        let g = ReferenceDistribution::standard_normal();
        assert_eq!(ks_distance(&[0.0], &g).unwrap().statistic, 0.5);
        let far = ks_distance(&vec![-50.0; 60], &g).unwrap();
        assert!(far.statistic > 1.0 - 1e-12);
        let r = ks_distance(&normals(1, 10_000), &g).unwrap();
        assert!(r.statistic < 0.025 && r.p_value > 0.01);
        assert!(ks_distance(&[], &g).is_err());
    }

    #[test]
    fn ks_against_steps() {
        let reference = ReferenceDistribution::empirical(vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(
            ks_distance(&[0.0, 1.0, 2.0, 3.0], &reference)
                .unwrap()
                .statistic,
            0.0
        );
        // Sample {1.5}: at 1.5 the empirical CDF is 1, the reference 0.5.
        assert_eq!(ks_distance(&[1.5], &reference).unwrap().statistic, 0.5);
        let r = ks_two_sample(&[0.0, 1.0], &[2.0, 3.0]).unwrap();
        assert_eq!(r.statistic, 1.0);
    }

    #[test]
    fn ks_affine_invariance() {
        let sample = normals(3, 500);
        let reference = ReferenceDistribution::empirical(normals(4, 700)).unwrap();
        let grid = convolution_cdf(0.7, &reference).unwrap();
        let g = ReferenceDistribution::standard_normal();
        for r in [&reference, &grid, &g] {
            let base = ks_distance(&sample, r).unwrap().statistic;
            let moved: Vec<f64> = sample.iter().map(|x| 2.5 * x - 1.0).collect();
            let d = ks_distance(&moved, &r.affine(2.5, -1.0).unwrap())
                .unwrap()
                .statistic;
            assert!((d - base).abs() < 1e-12, "{base} vs {d}");
        }
    }

    #[test]
    fn kolmogorov_tail() {
        // P(K > 1.358) ≈ 0.05.
        let p = kolmogorov_p_value(1.358 / 1e4f64.sqrt(), 1e4);
        assert!((p - 0.05).abs() < 2e-3);
        assert_eq!(kolmogorov_p_value(0.0, 100.0), 1.0);
    }

    #[test]
    fn convolution_identities() {
        let tw = tw_table_unchecked(Alpha::Real, 2000, 4000, 5, TW_CORNER_MULTIPLIER).unwrap();
        let zero = convolution_cdf(0.0, &tw).unwrap();
        assert_eq!(zero.cdf(0.0), 0.5);
        for x in [-3.0, -0.4, 1.7] {
            assert_eq!(zero.cdf(x), normal_cdf(x));
        }
        let c = 1.3;
        let conv = convolution_cdf(c, &tw).unwrap();
        let (m, v) = conv.moments();
        let (tm, tv) = tw.moments();
        assert!((m - c * tm).abs() < 1e-3, "{m} vs {}", c * tm);
        assert!((v / (1.0 + c * c * tv) - 1.0).abs() < 0.02);
        let (lo, hi) = conv.support();
        assert!(conv.cdf(lo) < 1e-5 && conv.cdf(hi) > 1.0 - 1e-5);
        let mut prev = 0.0;
        for k in 0..400 {
            let f = conv.cdf(-15.0 + 0.1 * k as f64);
            assert!(f >= prev && (0.0..=1.0).contains(&f));
            prev = f;
        }
        assert!(convolution_cdf(-1.0, &tw).is_err());
    }

    #[test]
    fn tw_csv_round_trip() {
        let tw = tw_table_unchecked(Alpha::Complex, 1000, 300, 2, TW_CORNER_MULTIPLIER).unwrap();
        let back = ReferenceDistribution::tw_from_csv(&tw.to_csv()).unwrap();
        assert_eq!(back, tw);
        assert!(tw_table(Alpha::Real, 100, 20_000, 1).is_err());
    }

    #[test]
    fn independence_examples() {
        let x = normals(7, 5000);
        let same: Vec<(f64, f64)> = x.iter().map(|&v| (v, v)).collect();
        let r = joint_independence_report(&same).unwrap();
        assert!((r.pearson - 1.0).abs() < 1e-12 && r.p_value < 1e-6);
        let y = normals(8, 5000);
        let pairs: Vec<(f64, f64)> = x.iter().copied().zip(y).collect();
        let r = joint_independence_report(&pairs).unwrap();
        assert!(r.pearson.abs() < 0.05 && r.p_value > 0.001);
        assert_eq!(r.counts.iter().flatten().sum::<usize>(), 5000);
        assert!(joint_independence_report(&pairs[..100]).is_err());
    }
}
