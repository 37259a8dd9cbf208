use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::config::{ExperimentConfig, Suite, TwSettings};
use super::replica::{cells, multiplier_key, Cell, ReplicaRecord};
use crate::ensembles::Alpha;
use crate::error::{Error, Result};
use crate::limit_laws::{
    convolution_cdf, joint_independence_report, ks_distance, ks_two_sample, tw_table_with_corner,
    KsReport, Provenance, ReferenceDistribution,
};
use crate::numeric::{mean_var, quantile_sorted};
use crate::seed::{derive_seed, SeedPlan};

/// One line of the summary CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub suite: Suite,
    pub cell: String,
    pub b: Option<f64>,
    pub n: usize,
    pub m: usize,
    pub ks: Option<f64>,
    pub ks_p: Option<f64>,
    pub mean: Option<f64>,
    pub var: Option<f64>,
    pub pass: bool,
}

/// A thresholded quantity: passes when low < value < high (bounds that are
/// present), or within the closed interval when `inclusive`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub low: Option<f64>,
    pub high: Option<f64>,
    pub inclusive: bool,
    pub pass: bool,
}

impl Check {
    fn new(
        name: impl Into<String>,
        value: f64,
        low: Option<f64>,
        high: Option<f64>,
        inclusive: bool,
    ) -> Self {
        let ok_low = low.is_none_or(|l| if inclusive { value >= l } else { value > l });
        let ok_high = high.is_none_or(|h| if inclusive { value <= h } else { value < h });
        Check {
            name: name.into(),
            value,
            low,
            high,
            inclusive,
            pass: value.is_finite() && ok_low && ok_high,
        }
    }

    pub fn below(name: impl Into<String>, value: f64, high: f64) -> Self {
        Self::new(name, value, None, Some(high), false)
    }

    pub fn above(name: impl Into<String>, value: f64, low: f64) -> Self {
        Self::new(name, value, Some(low), None, false)
    }

    pub fn at_most(name: impl Into<String>, value: f64, high: f64) -> Self {
        Self::new(name, value, None, Some(high), true)
    }

    pub fn within(name: impl Into<String>, value: f64, low: f64, high: f64) -> Self {
        Self::new(name, value, Some(low), Some(high), true)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryProvenance {
    pub config_hash: String,
    pub code_version: String,
    pub tw_tables: Vec<Provenance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub suite: Suite,
    pub rows: Vec<SummaryRow>,
    pub checks: Vec<Check>,
    pub details: BTreeMap<String, Value>,
    pub replicas: usize,
    pub rejected: usize,
    pub resampled: usize,
    pub rejection_rate: f64,
    pub pass: bool,
    pub provenance: SummaryProvenance,
}

pub const CSV_HEADER: &str = "suite,b,n,m,ks,ks_p,mean,var,pass,cell";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl SuiteSummary {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                r.suite,
                opt(r.b),
                r.n,
                r.m,
                opt(r.ks),
                opt(r.ks_p),
                opt(r.mean),
                opt(r.var),
                r.pass,
                r.cell
            ));
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }

    /// Writes the CSV at `path` and the JSON sidecar next to it.
    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
        let side = path.with_extension("json");
        std::fs::write(&side, self.to_json())
            .map_err(|e| Error::io(format!("writing {}", side.display()), e))
    }
}

/// Empirical Tracy–Widom table for α, reused from the cache directory when
/// one is configured.
pub fn tw_reference(
    tw: &TwSettings,
    alpha: Alpha,
    multiplier: f64,
) -> Result<ReferenceDistribution> {
    let build = || tw_table_with_corner(alpha, tw.n_internal, tw.samples, tw.seed, multiplier);
    let Some(dir) = &tw.cache else {
        return build();
    };
    let file = dir.join(format!(
        "tw-a{}-n{}-m{}-s{}-c{}.csv",
        alpha.as_int(),
        tw.n_internal,
        tw.samples,
        tw.seed,
        multiplier
    ));
    if let Ok(text) = std::fs::read_to_string(&file) {
        if let Ok(t) = ReferenceDistribution::tw_from_csv(&text) {
            return Ok(t);
        }
    }
    let table = build()?;
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    std::fs::write(&file, table.to_csv())
        .map_err(|e| Error::io(format!("writing {}", file.display()), e))?;
    Ok(table)
}

struct Group<'a> {
    cell: Cell,
    recs: Vec<&'a ReplicaRecord>,
}

impl Group<'_> {
    fn values(&self, f: impl Fn(&ReplicaRecord) -> Option<f64>) -> Vec<f64> {
        self.recs
            .iter()
            .filter(|r| !r.rejected)
            .filter_map(|r| f(r))
            .collect()
    }

    fn extra(&self, key: &str) -> Vec<f64> {
        self.values(|r| r.extra.get(key).copied())
    }
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    rows: Vec<SummaryRow>,
    checks: Vec<Check>,
    details: BTreeMap<String, Value>,
    tw: BTreeMap<u8, ReferenceDistribution>,
}

impl Ctx<'_> {
    fn tw(&mut self, alpha: Alpha) -> Result<&ReferenceDistribution> {
        let key = alpha.as_int();
        if !self.tw.contains_key(&key) {
            let t = tw_reference(
                &self.cfg.params.tw,
                alpha,
                self.cfg.method.corner_multiplier,
            )?;
            self.tw.insert(key, t);
        }
        Ok(&self.tw[&key])
    }

    fn row(&mut self, g: &Group, xs: &[f64], ks: Option<&KsReport>, pass: bool) {
        let (mean, var) = moments(xs);
        self.rows.push(SummaryRow {
            suite: self.cfg.suite,
            cell: g.cell.label.clone(),
            b: g.cell.b,
            n: g.cell.n,
            m: xs.len(),
            ks: ks.map(|k| k.statistic),
            ks_p: ks.map(|k| k.p_value),
            mean,
            var,
            pass,
        });
    }

    /// Reference law of the fluctuation statistic at b.
    fn transition_reference(&mut self, alpha: Alpha, b: f64) -> Result<ReferenceDistribution> {
        if b <= 0.0 {
            return Ok(ReferenceDistribution::standard_normal());
        }
        let c = (3.0 / alpha.value()).sqrt() * b;
        convolution_cdf(c, self.tw(alpha)?)
    }
}

fn moments(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    match xs.len() {
        0 => (None, None),
        1 => (Some(xs[0]), None),
        _ => {
            let (m, v) = mean_var(xs);
            (Some(m), Some(v))
        }
    }
}

fn ks(xs: &[f64], reference: &ReferenceDistribution) -> Option<KsReport> {
    (!xs.is_empty())
        .then(|| ks_distance(xs, reference).ok())
        .flatten()
}

fn median(xs: &[f64]) -> f64 {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    if s.is_empty() {
        f64::NAN
    } else {
        quantile_sorted(&s, 0.5)
    }
}

/// Aggregates a record set. Records are sorted and deduplicated first, so
/// the result does not depend on their order.
pub fn summarize(cfg: &ExperimentConfig, records: &[ReplicaRecord]) -> Result<SuiteSummary> {
    cfg.validate()?;
    let m = cfg.m_replicas as u64;
    let mut by_cell: HashMap<&str, Vec<&ReplicaRecord>> = HashMap::new();
    for r in records.iter().filter(|r| r.replica_index < m) {
        by_cell.entry(r.cell.as_str()).or_default().push(r);
    }
    let mut groups = Vec::new();
    for cell in cells(cfg) {
        let mut recs = by_cell.remove(cell.label.as_str()).unwrap_or_default();
        recs.sort_by(|a, b| {
            a.replica_index.cmp(&b.replica_index).then_with(|| {
                serde_json::to_string(a)
                    .ok()
                    .cmp(&serde_json::to_string(b).ok())
            })
        });
        recs.dedup_by_key(|r| r.replica_index);
        groups.push(Group { cell, recs });
    }
    let replicas: usize = groups.iter().map(|g| g.recs.len()).sum();
    let rejected = groups
        .iter()
        .flat_map(|g| &g.recs)
        .filter(|r| r.rejected)
        .count();
    let resampled = groups
        .iter()
        .flat_map(|g| &g.recs)
        .filter(|r| !r.rejected && r.attempt > 0)
        .count();
    let rejection_rate = if replicas == 0 {
        0.0
    } else {
        (rejected + resampled) as f64 / replicas as f64
    };
    let mut ctx = Ctx {
        cfg,
        rows: Vec::new(),
        checks: Vec::new(),
        details: BTreeMap::new(),
        tw: BTreeMap::new(),
    };
    let expected = groups.len() * cfg.m_replicas;
    ctx.checks.push(Check::within(
        "replicas present / expected",
        replicas as f64 / expected as f64,
        1.0,
        1.0,
    ));
    ctx.checks.push(Check::at_most(
        "rejection rate",
        rejection_rate,
        cfg.thresholds.rejection_rate,
    ));
    match cfg.suite {
        Suite::Transition => transition(&mut ctx, &groups)?,
        Suite::Universality => universality(&mut ctx, &groups)?,
        Suite::Clt1 | Suite::Clt2 => clt(&mut ctx, &groups)?,
        Suite::Independence => independence(&mut ctx, &groups)?,
        Suite::Edge => edge(&mut ctx, &groups),
        Suite::GDerivatives => g_derivatives(&mut ctx, &groups),
        Suite::CornerAccuracy => corner(&mut ctx, &groups),
        Suite::EigvecDecay => eigvec(&mut ctx, &groups),
        Suite::Stickiness => stickiness(&mut ctx, &groups),
    }
    let pass = ctx.checks.iter().all(|c| c.pass);
    Ok(SuiteSummary {
        suite: cfg.suite,
        rows: ctx.rows,
        checks: ctx.checks,
        details: ctx.details,
        replicas,
        rejected,
        resampled,
        rejection_rate,
        pass,
        provenance: SummaryProvenance {
            config_hash: cfg.hash(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            tw_tables: ctx.tw.values().filter_map(|t| t.provenance).collect(),
        },
    })
}

/// KS must not grow along the N grid within each family.
fn trend(ctx: &mut Ctx, families: BTreeMap<String, Vec<(usize, f64)>>) {
    if !ctx.cfg.thresholds.trend {
        return;
    }
    for (family, mut pts) in families {
        pts.sort_by_key(|p| p.0);
        for w in pts.windows(2) {
            ctx.checks.push(Check::at_most(
                format!("{family}: KS at N={} vs N={}", w[1].0, w[0].0),
                w[1].1,
                w[0].1,
            ));
        }
    }
}

fn transition(ctx: &mut Ctx, groups: &[Group]) -> Result<()> {
    let th = ctx.cfg.thresholds.clone();
    let mut families: BTreeMap<String, Vec<(usize, f64)>> = BTreeMap::new();
    for g in groups {
        let xs = g.values(|r| r.fluct_stat);
        let b = g.cell.b.unwrap_or(0.0);
        let label = &g.cell.label;
        let normal = ks(&xs, &ReferenceDistribution::standard_normal());
        let (report, pass) = if b <= 0.0 {
            let pass = normal.is_some_and(|k| k.statistic < th.ks);
            if let Some(k) = &normal {
                ctx.checks.push(Check::below(
                    format!("{label}: KS vs N(0,1)"),
                    k.statistic,
                    th.ks,
                ));
            }
            (normal, pass)
        } else {
            let reference = ctx.transition_reference(g.cell.alpha, b)?;
            let conv = ks(&xs, &reference);
            let tw_var = ctx.tw(g.cell.alpha)?.variance();
            let target = 1.0 + 3.0 / g.cell.alpha.value() * b * b * tw_var;
            let (_, var) = moments(&xs);
            let ratio = var.unwrap_or(f64::NAN) / target;
            let mut pass = false;
            if let (Some(c), Some(nk)) = (&conv, &normal) {
                let a = Check::below(
                    format!("{label}: KS vs convolution < KS vs N(0,1)"),
                    c.statistic,
                    nk.statistic,
                );
                let v = Check::within(
                    format!("{label}: variance / (1 + (3/α)b²Var(TW))"),
                    ratio,
                    1.0 - th.variance_band,
                    1.0 + th.variance_band,
                );
                pass = a.pass && v.pass;
                ctx.checks.push(a);
                ctx.checks.push(v);
            }
            ctx.details.insert(
                format!("{label}/mixture"),
                json!({
                    "c": (3.0 / g.cell.alpha.value()).sqrt() * b,
                    "ks_normal": normal.map(|k| k.statistic),
                    "ks_convolution": conv.map(|k| k.statistic),
                    "variance_target": target,
                    "tw_variance": tw_var,
                }),
            );
            (conv, pass)
        };
        if let Some(k) = &report {
            families
                .entry(format!(
                    "a{}/b{b}/j{}",
                    g.cell.alpha.as_int(),
                    g.cell.spike_j
                ))
                .or_default()
                .push((g.cell.n, k.statistic));
        }
        ctx.row(g, &xs, report.as_ref(), pass);
    }
    trend(ctx, families);
    Ok(())
}

fn universality(ctx: &mut Ctx, groups: &[Group]) -> Result<()> {
    let th = ctx.cfg.thresholds.clone();
    let laws = ctx.cfg.params.laws.clone();
    for g in groups {
        let xs = g.values(|r| r.fluct_stat);
        let reference = ctx.transition_reference(g.cell.alpha, g.cell.b.unwrap_or(0.0))?;
        let k = ks(&xs, &reference);
        let pass = k.is_some_and(|k| k.statistic < th.ks);
        ctx.row(g, &xs, k.as_ref(), pass);
    }
    let first_law = laws[0];
    let same_point = |a: &Cell, b: &Cell| a.alpha == b.alpha && a.n == b.n && a.b == b.b;
    for base in groups
        .iter()
        .filter(|g| !g.cell.control && g.cell.law == first_law)
    {
        let xs = base.values(|r| r.fluct_stat);
        let stem = format!(
            "a{}/n{}/b{}",
            base.cell.alpha.as_int(),
            base.cell.n,
            base.cell.b.unwrap_or(0.0)
        );
        for other in groups
            .iter()
            .filter(|g| same_point(&g.cell, &base.cell) && g.cell.label != base.cell.label)
        {
            let Ok(k) = ks_two_sample(&xs, &other.values(|r| r.fluct_stat)) else {
                continue;
            };
            let (name, limit) = if other.cell.control {
                (format!("{stem}: same-law control KS"), th.mutual_ks)
            } else {
                (
                    format!("{stem}: {} vs {} KS", first_law, other.cell.law),
                    th.universality_ks,
                )
            };
            ctx.checks.push(Check::below(name, k.statistic, limit));
        }
    }
    Ok(())
}

fn clt(ctx: &mut Ctx, groups: &[Group]) -> Result<()> {
    let th = ctx.cfg.thresholds.clone();
    let normal = ReferenceDistribution::standard_normal();
    let mut families: BTreeMap<String, Vec<(usize, f64)>> = BTreeMap::new();
    for g in groups {
        let xs = g.extra("clt");
        let k = ks(&xs, &normal);
        let pass = k.is_some_and(|k| k.statistic < th.ks);
        if let Some(k) = &k {
            ctx.checks.push(Check::below(
                format!("{}: KS vs N(0,1)", g.cell.label),
                k.statistic,
                th.ks,
            ));
            families
                .entry(format!(
                    "a{}/c{}/j{}",
                    g.cell.alpha.as_int(),
                    g.cell.c.unwrap_or(0.0),
                    g.cell.spike_j
                ))
                .or_default()
                .push((g.cell.n, k.statistic));
        }
        ctx.row(g, &xs, k.as_ref(), pass);
    }
    for g in groups.iter().filter(|g| g.cell.spike_j > 0.0) {
        let plain = groups.iter().find(|h| {
            h.cell.spike_j == 0.0
                && h.cell.alpha == g.cell.alpha
                && h.cell.n == g.cell.n
                && h.cell.c == g.cell.c
        });
        if let Some(h) = plain {
            if let Ok(k) = ks_two_sample(&g.extra("clt"), &h.extra("clt")) {
                ctx.checks.push(Check::below(
                    format!("{} vs {}: mutual KS", g.cell.label, h.cell.label),
                    k.statistic,
                    th.mutual_ks,
                ));
            }
        }
    }
    trend(ctx, families);
    Ok(())
}

fn independence(ctx: &mut Ctx, groups: &[Group]) -> Result<()> {
    let th = ctx.cfg.thresholds.clone();
    let normal = ReferenceDistribution::standard_normal();
    for g in groups {
        let label = g.cell.label.clone();
        let pairs: Vec<(f64, f64)> = g
            .recs
            .iter()
            .filter(|r| !r.rejected)
            .filter_map(|r| Some((r.xi1?, r.xi2?)))
            .collect();
        let xi1: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let xi2: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let k1 = ks(&xi1, &normal);
        let k2 = ks(&xi2, ctx.tw(g.cell.alpha)?);
        ctx.row(
            g,
            &xi1,
            k1.as_ref(),
            k1.is_some_and(|k| k.statistic < th.ks),
        );
        if let Some(k) = &k1 {
            ctx.checks.push(Check::below(
                format!("{label}: ξ₁ KS vs N(0,1)"),
                k.statistic,
                th.ks,
            ));
        }
        if let Some(k) = &k2 {
            ctx.checks.push(Check::below(
                format!("{label}: ξ₂ KS vs TW"),
                k.statistic,
                th.ks,
            ));
        }
        let Ok(report) = joint_independence_report(&pairs) else {
            ctx.checks.push(Check::above(
                format!("{label}: pairs"),
                pairs.len() as f64,
                499.0,
            ));
            continue;
        };
        ctx.checks.push(Check::below(
            format!("{label}: |corr(ξ₁, ξ₂)|"),
            report.pearson.abs(),
            th.corr,
        ));
        ctx.checks.push(Check::above(
            format!("{label}: chi-square p"),
            report.p_value,
            th.chi_p,
        ));
        // Shuffled control: re-pair ξ₂ at random.
        let mut shuffled = xi2.clone();
        let seed = derive_seed(ctx.cfg.master_seed, &format!("shuffle/{label}"));
        shuffled.shuffle(&mut SeedPlan::new(seed, 0).rng());
        let control =
            joint_independence_report(&xi1.iter().copied().zip(shuffled).collect::<Vec<_>>())?;
        ctx.details.insert(
            label,
            json!({
                "independence": report,
                "shuffled_control": control,
                "xi2_ks_tw": k2,
            }),
        );
    }
    Ok(())
}

const QUANTILES: [f64; 5] = [0.05, 0.25, 0.5, 0.75, 0.95];

fn quantiles(xs: &[f64]) -> Vec<f64> {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    if s.is_empty() {
        return Vec::new();
    }
    QUANTILES.iter().map(|&q| quantile_sorted(&s, q)).collect()
}

fn count_at(r: &ReplicaRecord, x: f64) -> Option<f64> {
    r.counts.iter().find(|c| c.0 == x).map(|c| c.1 as f64)
}

fn edge(ctx: &mut Ctx, groups: &[Group]) {
    let th = ctx.cfg.thresholds.clone();
    let xs_grid = ctx.cfg.params.count_thresholds.clone();
    let mut stability: BTreeMap<u8, Vec<(usize, f64)>> = BTreeMap::new();
    for g in groups {
        let label = g.cell.label.clone();
        let xi2 = g.values(|r| r.xi2);
        let gaps = g.values(|r| r.gap);
        ctx.row(g, &xi2, None, true);
        let min_gap = gaps.iter().copied().fold(f64::INFINITY, f64::min);
        ctx.checks
            .push(Check::above(format!("{label}: min gap"), min_gap, 0.0));
        let mean_counts: Vec<Value> = xs_grid
            .iter()
            .map(|&x| {
                let c = g.values(|r| count_at(r, x));
                let mean = moments(&c).0;
                json!({ "x": x, "mean": mean, "mean_over_x32": mean.map(|m| m / x.powf(1.5)) })
            })
            .collect();
        if xs_grid.contains(&th.count_x) {
            let c = g.values(|r| count_at(r, th.count_x));
            let bound = th.count_kappa * th.count_x.powf(1.5);
            let frac = c.iter().filter(|&&v| v > bound).count() as f64 / c.len().max(1) as f64;
            ctx.checks.push(Check::within(
                format!("{label}: fraction with count({}) > {bound:.3}", th.count_x),
                frac,
                th.count_fraction,
                1.0,
            ));
        }
        if xs_grid.contains(&th.count_stability_x) {
            let c = g.values(|r| count_at(r, th.count_stability_x));
            if let Some(mean) = moments(&c).0 {
                stability
                    .entry(g.cell.alpha.as_int())
                    .or_default()
                    .push((g.cell.n, mean));
            }
        }
        ctx.details.insert(
            label,
            json!({
                "quantile_levels": QUANTILES,
                "xi2_quantiles": quantiles(&xi2),
                "gap_quantiles": quantiles(&gaps),
                "min_gap": min_gap,
                "mean_counts": mean_counts,
            }),
        );
    }
    for (a, mut pts) in stability {
        pts.sort_by_key(|p| p.0);
        if let (Some(lo), Some(hi)) = (pts.first(), pts.last()) {
            if lo.0 != hi.0 {
                ctx.checks.push(Check::at_most(
                    format!(
                        "a{a}: mean count({}) N={} vs N={} relative change",
                        th.count_stability_x, hi.0, lo.0
                    ),
                    (hi.1 / lo.1 - 1.0).abs(),
                    th.count_stability,
                ));
            }
        }
    }
}

/// (1/2)·N^{1/3}/(2|b|√log N).
pub fn g2_target(n: usize, b: f64) -> f64 {
    let nf = n as f64;
    0.5 * nf.cbrt() / (2.0 * b.abs() * nf.ln().sqrt())
}

fn g_derivatives(ctx: &mut Ctx, groups: &[Group]) {
    let th = ctx.cfg.thresholds.clone();
    for g in groups {
        let label = g.cell.label.clone();
        let g2 = g.extra("g2");
        let inv = g.extra("inv_lambda1");
        let b = g.cell.b.unwrap_or(0.0);
        let mut pass = true;
        if b < 0.0 && !g2.is_empty() {
            let ratio = median(&g2) / g2_target(g.cell.n, b);
            let c = Check::within(
                format!("{label}: median G''(γ̂) / target"),
                ratio,
                1.0 / th.g2_factor,
                th.g2_factor,
            );
            pass &= c.pass;
            ctx.checks.push(c);
        }
        if let Some(mean) = moments(&inv).0 {
            let c = Check::within(
                format!("{label}: mean λ₁-centered inverse moment"),
                mean,
                th.inverse_moment_low,
                th.inverse_moment_high,
            );
            pass &= c.pass;
            ctx.checks.push(c);
        }
        ctx.row(g, &g2, None, pass);
        ctx.details.insert(
            label,
            json!({
                "g2_target": g2_target(g.cell.n, b),
                "g2_median": median(&g2),
                "gamma_hat_above_lambda1": g2.len(),
                "g1_median": median(&g.extra("g1")),
                "g3_median": median(&g.extra("g3")),
                "inv_lambda1_mean": moments(&inv).0,
            }),
        );
    }
}

fn corner(ctx: &mut Ctx, groups: &[Group]) {
    let th = ctx.cfg.thresholds.clone();
    let mut mults = ctx.cfg.params.corner_multipliers.clone();
    mults.sort_by(f64::total_cmp);
    for g in groups {
        let label = g.cell.label.clone();
        let mut per = Vec::new();
        for &m in &mults {
            let mut e = g.extra(&multiplier_key(m));
            e.sort_by(f64::total_cmp);
            if e.is_empty() {
                continue;
            }
            let (med, p99, max) = (
                quantile_sorted(&e, 0.5),
                quantile_sorted(&e, 0.99),
                e[e.len() - 1],
            );
            if m == th.corner_multiplier {
                ctx.checks.push(Check::below(
                    format!("{label}: median error at multiplier {m}"),
                    med,
                    th.corner_median,
                ));
                ctx.checks.push(Check::below(
                    format!("{label}: 99th percentile at multiplier {m}"),
                    p99,
                    th.corner_p99,
                ));
            }
            per.push(json!({ "multiplier": m, "median": med, "p99": p99, "max": max }));
        }
        let ok: Vec<f64> = g.values(|r| {
            let errs: Option<Vec<f64>> = mults
                .iter()
                .map(|&m| r.extra.get(&multiplier_key(m)).copied())
                .collect();
            errs.map(|e| {
                if e.windows(2).all(|w| w[1] <= w[0]) {
                    1.0
                } else {
                    0.0
                }
            })
        });
        let frac = ok.iter().sum::<f64>() / ok.len().max(1) as f64;
        let mono = Check::within(
            format!("{label}: monotone decay fraction"),
            frac,
            th.corner_monotone,
            1.0,
        );
        let main = g.extra(&multiplier_key(th.corner_multiplier));
        ctx.row(g, &main, None, mono.pass);
        ctx.checks.push(mono);
        ctx.details.insert(label, json!({ "per_multiplier": per }));
    }
}

fn eigvec(ctx: &mut Ctx, groups: &[Group]) {
    let th = ctx.cfg.thresholds.clone();
    for g in groups {
        let e = g.extra("early_max");
        let frac = e.iter().filter(|&&v| v < th.eigvec).count() as f64 / e.len().max(1) as f64;
        let c = Check::within(
            format!(
                "{}: fraction with early max < {:e}",
                g.cell.label, th.eigvec
            ),
            frac,
            th.eigvec_fraction,
            1.0,
        );
        ctx.row(g, &e, None, c.pass);
        ctx.checks.push(c);
        ctx.details.insert(
            g.cell.label.clone(),
            json!({
                "median": median(&e),
                "max": e.iter().copied().fold(0.0, f64::max),
            }),
        );
    }
}

fn stickiness(ctx: &mut Ctx, groups: &[Group]) {
    let th = ctx.cfg.thresholds.clone();
    let mut scaling: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for g in groups {
        let label = g.cell.label.clone();
        let d = g.extra("max_diff");
        let ordered = g.extra("ordered");
        let mut pass;
        if g.cell.spike_j == 0.0 {
            let max = d.iter().copied().fold(0.0, f64::max);
            let c = Check::within(
                format!("{label}: max difference without spike"),
                max,
                0.0,
                0.0,
            );
            pass = c.pass;
            ctx.checks.push(c);
        } else {
            let bound = th.stickiness_const * (g.cell.n as f64).powf(-th.stickiness_exponent);
            let frac = d.iter().filter(|&&v| v < bound).count() as f64 / d.len().max(1) as f64;
            let c = Check::within(
                format!("{label}: fraction with max_j≤5 |λ_j − μ_j| < {bound:.3e}"),
                frac,
                th.stickiness_fraction,
                1.0,
            );
            pass = c.pass;
            ctx.checks.push(c);
            scaling
                .entry(format!("a{}/j{}", g.cell.alpha.as_int(), g.cell.spike_j))
                .or_default()
                .push(((g.cell.n as f64).ln(), median(&d).ln()));
        }
        let all_ordered = ordered.iter().all(|&o| o == 1.0);
        let c = Check::within(
            format!("{label}: fraction with λ_j ≥ μ_j"),
            ordered.iter().sum::<f64>() / ordered.len().max(1) as f64,
            1.0,
            1.0,
        );
        pass &= all_ordered;
        ctx.checks.push(c);
        ctx.row(g, &d, None, pass);
    }
    for (family, pts) in scaling {
        if pts.len() >= 2 {
            let n = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            ctx.details
                .insert(format!("{family}/log_log_slope"), json!(sxy / sxx));
        }
    }
}
