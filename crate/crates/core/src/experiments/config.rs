use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ensembles::{Alpha, EnsembleSpec, EntryLaw};
use crate::error::{Error, Result};
use crate::free_energy::{Abscissa, K3Mode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Transition,
    Clt1,
    Clt2,
    Independence,
    Edge,
    GDerivatives,
    CornerAccuracy,
    EigvecDecay,
    Stickiness,
    Universality,
}

impl Suite {
    pub const ALL: [Suite; 10] = [
        Suite::Transition,
        Suite::Clt1,
        Suite::Clt2,
        Suite::Independence,
        Suite::Edge,
        Suite::GDerivatives,
        Suite::CornerAccuracy,
        Suite::EigvecDecay,
        Suite::Stickiness,
        Suite::Universality,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Transition => "transition",
            Suite::Clt1 => "clt1",
            Suite::Clt2 => "clt2",
            Suite::Independence => "independence",
            Suite::Edge => "edge",
            Suite::GDerivatives => "g_derivatives",
            Suite::CornerAccuracy => "corner_accuracy",
            Suite::EigvecDecay => "eigvec_decay",
            Suite::Stickiness => "stickiness",
            Suite::Universality => "universality",
        }
    }

    pub fn uses_b_grid(self) -> bool {
        matches!(
            self,
            Suite::Transition | Suite::GDerivatives | Suite::Universality
        )
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which contour the transition suites use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContourChoice {
    /// Vertical for b < 0, keyhole for b > 0, steepest descent near b = 0.
    #[default]
    Auto,
    Vertical,
    Keyhole,
    Steepest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodOverrides {
    #[serde(default)]
    pub contour: ContourChoice,
    /// |b| at or below which `auto` picks steepest descent.
    #[serde(default = "default_window")]
    pub steepest_window: f64,
    /// Corner multiplier for Tracy–Widom table draws.
    #[serde(default = "default_corner")]
    pub corner_multiplier: f64,
    #[serde(default)]
    pub k3: K3Mode,
    #[serde(default)]
    pub abscissa: Abscissa,
    /// Sample dense matrices even where a tridiagonal model exists.
    #[serde(default)]
    pub dense: bool,
}

fn default_window() -> f64 {
    0.1
}

fn default_corner() -> f64 {
    10.0
}

impl Default for MethodOverrides {
    fn default() -> Self {
        MethodOverrides {
            contour: ContourChoice::Auto,
            steepest_window: default_window(),
            corner_multiplier: default_corner(),
            k3: K3Mode::default(),
            abscissa: Abscissa::default(),
            dense: false,
        }
    }
}

impl MethodOverrides {
    pub fn resolve(&self, b: f64) -> ContourChoice {
        match self.contour {
            ContourChoice::Auto if b.abs() <= self.steepest_window => ContourChoice::Steepest,
            ContourChoice::Auto if b < 0.0 => ContourChoice::Vertical,
            ContourChoice::Auto => ContourChoice::Keyhole,
            other => other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwSettings {
    #[serde(default = "default_tw_n")]
    pub n_internal: usize,
    #[serde(default = "default_tw_n")]
    pub samples: usize,
    #[serde(default = "default_tw_seed")]
    pub seed: u64,
    /// Directory of cached tables, filled on first use.
    #[serde(default)]
    pub cache: Option<PathBuf>,
}

fn default_tw_n() -> usize {
    100_000
}

fn default_tw_seed() -> u64 {
    1
}

impl Default for TwSettings {
    fn default() -> Self {
        TwSettings {
            n_internal: default_tw_n(),
            samples: default_tw_n(),
            seed: default_tw_seed(),
            cache: None,
        }
    }
}

/// Grids that only some suites read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteParams {
    /// Defaults to the ensemble's α.
    #[serde(default)]
    pub alphas: Vec<Alpha>,
    /// Defaults to the ensemble's spike.
    #[serde(default)]
    pub spike_values: Vec<f64>,
    #[serde(default = "default_clt_c")]
    pub clt_c: Vec<f64>,
    #[serde(default = "default_counts")]
    pub count_thresholds: Vec<f64>,
    #[serde(default = "default_multipliers")]
    pub corner_multipliers: Vec<f64>,
    #[serde(default = "default_laws")]
    pub laws: Vec<EntryLaw>,
    /// Universality: add a run of the first law on disjoint seeds.
    #[serde(default = "yes")]
    pub control: bool,
    #[serde(default)]
    pub tw: TwSettings,
}

fn default_clt_c() -> Vec<f64> {
    vec![1.0]
}

fn default_counts() -> Vec<f64> {
    vec![1.0, 2.0, 3.0, 5.0, 8.0, 10.0]
}

fn default_multipliers() -> Vec<f64> {
    vec![5.0, 10.0, 20.0]
}

fn default_laws() -> Vec<EntryLaw> {
    vec![EntryLaw::Gaussian, EntryLaw::Rademacher]
}

fn yes() -> bool {
    true
}

impl Default for SuiteParams {
    fn default() -> Self {
        SuiteParams {
            alphas: Vec::new(),
            spike_values: Vec::new(),
            clt_c: default_clt_c(),
            count_thresholds: default_counts(),
            corner_multipliers: default_multipliers(),
            laws: default_laws(),
            control: true,
            tw: TwSettings::default(),
        }
    }
}

/// Pass/fail thresholds, calibrated by pilot runs at desk sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    pub ks: f64,
    /// Two-sample KS between runs that should share a law.
    pub mutual_ks: f64,
    /// Two-sample KS between different entry laws.
    pub universality_ks: f64,
    /// Relative band on the variance of the positive-b mixture.
    pub variance_band: f64,
    pub corr: f64,
    pub chi_p: f64,
    pub rejection_rate: f64,
    /// Require KS to be non-increasing along the N grid.
    pub trend: bool,
    pub count_kappa: f64,
    pub count_x: f64,
    pub count_fraction: f64,
    pub count_stability: f64,
    pub count_stability_x: f64,
    pub g2_factor: f64,
    pub inverse_moment_low: f64,
    pub inverse_moment_high: f64,
    pub corner_multiplier: f64,
    pub corner_median: f64,
    pub corner_p99: f64,
    pub corner_monotone: f64,
    pub eigvec: f64,
    pub eigvec_fraction: f64,
    pub stickiness_const: f64,
    pub stickiness_exponent: f64,
    pub stickiness_fraction: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            ks: 0.08,
            mutual_ks: 0.06,
            universality_ks: 0.10,
            variance_band: 0.30,
            corr: 0.05,
            chi_p: 0.01,
            rejection_rate: 0.01,
            trend: true,
            count_kappa: 0.1,
            count_x: 8.0,
            count_fraction: 0.95,
            count_stability: 0.15,
            count_stability_x: 5.0,
            g2_factor: 2.0,
            inverse_moment_low: 0.85,
            inverse_moment_high: 1.15,
            corner_multiplier: 10.0,
            corner_median: 1e-10,
            corner_p99: 1e-8,
            corner_monotone: 0.95,
            eigvec: 1e-8,
            eigvec_fraction: 0.95,
            stickiness_const: 10.0,
            stickiness_exponent: 0.9,
            stickiness_fraction: 0.95,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    /// JSON-lines replica records; an existing file is resumed.
    #[serde(default)]
    pub records: Option<PathBuf>,
    /// Summary CSV; the JSON sidecar goes next to it with a `.json`
    /// extension.
    #[serde(default)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub suite: Suite,
    pub ensemble: EnsembleSpec,
    #[serde(default)]
    pub b_grid: Vec<f64>,
    /// Defaults to the ensemble's N.
    #[serde(default)]
    pub n_grid: Vec<usize>,
    pub m_replicas: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub method: MethodOverrides,
    #[serde(default)]
    pub params: SuiteParams,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub output: OutputPaths,
    #[serde(default)]
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(suite: Suite, ensemble: EnsembleSpec, m_replicas: usize, master_seed: u64) -> Self {
        ExperimentConfig {
            suite,
            ensemble,
            b_grid: Vec::new(),
            n_grid: Vec::new(),
            m_replicas,
            master_seed,
            method: MethodOverrides::default(),
            params: SuiteParams::default(),
            thresholds: Thresholds::default(),
            output: OutputPaths::default(),
            threads: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config {
            field: format!("line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn alphas(&self) -> Vec<Alpha> {
        if self.params.alphas.is_empty() {
            vec![self.ensemble.alpha]
        } else {
            self.params.alphas.clone()
        }
    }

    pub fn n_values(&self) -> Vec<usize> {
        if self.n_grid.is_empty() {
            vec![self.ensemble.n]
        } else {
            self.n_grid.clone()
        }
    }

    pub fn spike_values(&self) -> Vec<f64> {
        if self.params.spike_values.is_empty() {
            vec![self.ensemble.spike_j]
        } else {
            self.params.spike_values.clone()
        }
    }

    /// SHA-256 of the settings that determine the records (output paths and
    /// thread count excluded).
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = OutputPaths::default();
        c.threads = None;
        c.params.tw.cache = None;
        let digest = Sha256::digest(serde_json::to_vec(&c).expect("config serializes"));
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, message: String| {
            Err(Error::Config {
                field: field.into(),
                message,
            })
        };
        if self.m_replicas == 0 {
            return bad("m_replicas", "must be at least 1".into());
        }
        if let Err(e) = self.ensemble.validate() {
            return bad("ensemble", e.to_string());
        }
        if self.suite.uses_b_grid() && self.b_grid.is_empty() {
            return bad(
                "b_grid",
                format!("suite {} needs a nonempty b_grid", self.suite),
            );
        }
        if let Some(b) = self.b_grid.iter().find(|b| !b.is_finite()) {
            return bad("b_grid", format!("{b} is not finite"));
        }
        if self.n_values().iter().any(|&n| n < 3) {
            return bad("n_grid", "every N must be at least 3".into());
        }
        if let Some(j) = self
            .spike_values()
            .iter()
            .find(|j| !(0.0..1.0).contains(*j))
        {
            return bad("params.spike_values", format!("J = {j} outside [0, 1)"));
        }
        if self.params.clt_c.is_empty() || self.params.clt_c.iter().any(|c| !c.is_finite()) {
            return bad("params.clt_c", "needs at least one finite C".into());
        }
        if self.suite == Suite::Clt1 && self.params.clt_c.iter().any(|&c| c <= 0.0) {
            return bad("params.clt_c", "CLT1 needs C > 0".into());
        }
        if self
            .params
            .count_thresholds
            .iter()
            .any(|x| !(x.is_finite() && *x > 0.0))
        {
            return bad(
                "params.count_thresholds",
                "thresholds must be positive".into(),
            );
        }
        if self.params.corner_multipliers.is_empty()
            || self.params.corner_multipliers.iter().any(|m| !(*m > 0.0))
        {
            return bad(
                "params.corner_multipliers",
                "multipliers must be positive".into(),
            );
        }
        if !(self.method.corner_multiplier > 0.0) {
            return bad("method.corner_multiplier", "must be positive".into());
        }
        if self.suite == Suite::Universality && self.params.laws.len() < 2 {
            return bad(
                "params.laws",
                "universality compares at least two entry laws".into(),
            );
        }
        if self.suite == Suite::CornerAccuracy && self.n_values().iter().any(|&n| n > 200_000) {
            return bad("n_grid", "corner accuracy runs at N ≤ 2·10⁵".into());
        }
        let dense = self.method.dense
            || !self.ensemble.has_tridiagonal_model()
            || self.suite == Suite::Universality;
        if dense && self.n_values().iter().any(|&n| n > 4000) {
            return bad("n_grid", "dense solves are limited to N ≤ 4000".into());
        }
        if self.threads == Some(0) {
            return bad("threads", "must be positive when given".into());
        }
        Ok(())
    }
}
