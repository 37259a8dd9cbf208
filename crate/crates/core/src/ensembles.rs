//! Disorder matrices: tridiagonal GOE/GUE models, dense Wigner matrices with
//! pluggable entry laws and diagonal profiles, and sub-critical rank-one
//! spikes.

use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::seed::SeedPlan;

/// Symmetry class. `Complex` (α = 1) is the GUE class, `Real` (α = 2) the
/// GOE class. Serialized as the integer α.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Alpha {
    Complex,
    Real,
}

impl Alpha {
    pub fn from_int(a: u8) -> Result<Alpha> {
        match a {
            1 => Ok(Alpha::Complex),
            2 => Ok(Alpha::Real),
            _ => Err(Error::invalid(format!("alpha must be 1 or 2, got {a}"))),
        }
    }

    pub fn as_int(self) -> u8 {
        match self {
            Alpha::Complex => 1,
            Alpha::Real => 2,
        }
    }

    pub fn value(self) -> f64 {
        f64::from(self.as_int())
    }

    /// Dyson index 2/α of the matching Tracy–Widom law.
    pub fn dyson_beta(self) -> u8 {
        match self {
            Alpha::Complex => 2,
            Alpha::Real => 1,
        }
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_int())
    }
}

impl Serialize for Alpha {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u8(self.as_int())
    }
}

impl<'de> Deserialize<'de> for Alpha {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let a = u8::deserialize(d)?;
        Alpha::from_int(a).map_err(serde::de::Error::custom)
    }
}

/// Law of the standardized entries ξ (mean 0, variance 1). Non-Gaussian laws
/// match the Gaussian's first three moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EntryLaw {
    #[serde(rename = "gaussian")]
    Gaussian,
    /// Symmetric ±1.
    #[serde(rename = "rademacher")]
    Rademacher,
    /// Three-point law on {−√3, 0, √3} with weights {1/6, 2/3, 1/6}.
    #[serde(rename = "custom-moment-matched")]
    MomentMatched,
}

impl EntryLaw {
    pub const ALL: [EntryLaw; 3] = [
        EntryLaw::Gaussian,
        EntryLaw::Rademacher,
        EntryLaw::MomentMatched,
    ];

    /// Exact raw moment E ξ^k of the standardized law.
    pub fn raw_moment(self, k: u32) -> f64 {
        if k == 0 {
            return 1.0;
        }
        if k % 2 == 1 {
            return 0.0;
        }
        match self {
            // (k − 1)!!
            EntryLaw::Gaussian => (1..k).step_by(2).map(f64::from).product(),
            EntryLaw::Rademacher => 1.0,
            EntryLaw::MomentMatched => 3f64.powi(k as i32 / 2 - 1),
        }
    }

    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            EntryLaw::Gaussian => rng.sample(StandardNormal),
            EntryLaw::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            EntryLaw::MomentMatched => {
                let u: u32 = rng.random_range(0..6);
                match u {
                    0 => -(3f64.sqrt()),
                    1 => 3f64.sqrt(),
                    _ => 0.0,
                }
            }
        }
    }
}

impl fmt::Display for EntryLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EntryLaw::Gaussian => "gaussian",
            EntryLaw::Rademacher => "rademacher",
            EntryLaw::MomentMatched => "custom-moment-matched",
        };
        f.write_str(s)
    }
}

/// Variance profile E ξ_ii² of the unscaled diagonal entries.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum DiagVariance {
    /// α for the Gaussian ensembles (2 for GOE, 1 for GUE).
    #[default]
    Default,
    Constant(f64),
    Profile(Vec<f64>),
}

impl DiagVariance {
    pub fn at(&self, alpha: Alpha, i: usize) -> f64 {
        match self {
            DiagVariance::Default => alpha.value(),
            DiagVariance::Constant(v) => *v,
            DiagVariance::Profile(p) => p[i],
        }
    }

    pub fn is_default(&self, alpha: Alpha) -> bool {
        match self {
            DiagVariance::Default => true,
            DiagVariance::Constant(v) => *v == alpha.value(),
            DiagVariance::Profile(p) => p.iter().all(|&v| v == alpha.value()),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum DiagVarianceRepr {
    Named(String),
    Constant(f64),
    Profile(Vec<f64>),
}

impl Serialize for DiagVariance {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            DiagVariance::Default => DiagVarianceRepr::Named("default".into()).serialize(s),
            DiagVariance::Constant(v) => DiagVarianceRepr::Constant(*v).serialize(s),
            DiagVariance::Profile(p) => DiagVarianceRepr::Profile(p.clone()).serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for DiagVariance {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match DiagVarianceRepr::deserialize(d)? {
            DiagVarianceRepr::Named(s) if s == "default" => Ok(DiagVariance::Default),
            DiagVarianceRepr::Named(s) => Err(serde::de::Error::custom(format!(
                "diag_variance: expected \"default\", a number or an array, got \"{s}\""
            ))),
            DiagVarianceRepr::Constant(v) => Ok(DiagVariance::Constant(v)),
            DiagVarianceRepr::Profile(p) => Ok(DiagVariance::Profile(p)),
        }
    }
}

/// Direction w of the rank-one spike J·ww*.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum SpikeVector {
    /// All entries n^{-1/2}.
    #[default]
    Uniform,
    Explicit(Vec<f64>),
}

impl SpikeVector {
    pub fn materialize(&self, n: usize) -> Vec<f64> {
        match self {
            SpikeVector::Uniform => vec![1.0 / (n as f64).sqrt(); n],
            SpikeVector::Explicit(v) => v.clone(),
        }
    }

    /// A uniformly random unit vector in ℝⁿ.
    pub fn random_unit<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SpikeVector {
        loop {
            let v: Vec<f64> = (0..n)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                return SpikeVector::Explicit(v.into_iter().map(|x| x / norm).collect());
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SpikeVectorRepr {
    Named(String),
    Explicit(Vec<f64>),
}

impl Serialize for SpikeVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            SpikeVector::Uniform => SpikeVectorRepr::Named("uniform".into()).serialize(s),
            SpikeVector::Explicit(v) => SpikeVectorRepr::Explicit(v.clone()).serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for SpikeVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match SpikeVectorRepr::deserialize(d)? {
            SpikeVectorRepr::Named(s) if s == "uniform" => Ok(SpikeVector::Uniform),
            SpikeVectorRepr::Named(s) => Err(serde::de::Error::custom(format!(
                "spike_vector: expected \"uniform\" or an array, got \"{s}\""
            ))),
            SpikeVectorRepr::Explicit(v) => Ok(SpikeVector::Explicit(v)),
        }
    }
}

/// Full description of a disorder law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub alpha: Alpha,
    pub n: usize,
    #[serde(default = "default_law")]
    pub entry_law: EntryLaw,
    #[serde(default)]
    pub diag_variance: DiagVariance,
    #[serde(default)]
    pub spike_j: f64,
    #[serde(default)]
    pub spike_vector: SpikeVector,
}

fn default_law() -> EntryLaw {
    EntryLaw::Gaussian
}

impl EnsembleSpec {
    pub fn gaussian(alpha: Alpha, n: usize) -> Self {
        EnsembleSpec {
            alpha,
            n,
            entry_law: EntryLaw::Gaussian,
            diag_variance: DiagVariance::Default,
            spike_j: 0.0,
            spike_vector: SpikeVector::Uniform,
        }
    }

    pub fn with_spike(mut self, j: f64, v: SpikeVector) -> Self {
        self.spike_j = j;
        self.spike_vector = v;
        self
    }

    pub fn with_law(mut self, law: EntryLaw) -> Self {
        self.entry_law = law;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("n must be positive"));
        }
        if !(0.0..1.0).contains(&self.spike_j) {
            return Err(Error::invalid(format!(
                "spike_j must lie in [0, 1), got {}",
                self.spike_j
            )));
        }
        if let SpikeVector::Explicit(v) = &self.spike_vector {
            if v.len() != self.n {
                return Err(Error::invalid(format!(
                    "spike_vector has length {}, expected {}",
                    v.len(),
                    self.n
                )));
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-12 {
                return Err(Error::invalid(format!(
                    "spike_vector must have unit norm, got {norm}"
                )));
            }
        }
        match &self.diag_variance {
            DiagVariance::Default => {}
            DiagVariance::Constant(v) => check_diag_var(*v)?,
            DiagVariance::Profile(p) => {
                if p.len() != self.n {
                    return Err(Error::invalid(format!(
                        "diag_variance profile has length {}, expected {}",
                        p.len(),
                        self.n
                    )));
                }
                for &v in p {
                    check_diag_var(v)?;
                }
            }
        }
        Ok(())
    }

    /// True when the spectrum law is that of the spiked tridiagonal model,
    /// i.e. Gaussian entries with the standard diagonal variance. The spike
    /// direction is irrelevant by orthogonal/unitary invariance.
    pub fn has_tridiagonal_model(&self) -> bool {
        self.entry_law == EntryLaw::Gaussian && self.diag_variance.is_default(self.alpha)
    }
}

fn check_diag_var(v: f64) -> Result<()> {
    if !(v.is_finite() && v >= 0.0) {
        return Err(Error::invalid(format!(
            "diagonal variance must be finite and ≥ 0, got {v}"
        )));
    }
    Ok(())
}

/// Symmetric tridiagonal matrix, already divided by √N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TridiagonalMatrix {
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
}

impl TridiagonalMatrix {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::invalid("tridiagonal matrix must have size ≥ 1"));
        }
        if offdiag.len() + 1 != diag.len() {
            return Err(Error::invalid(format!(
                "offdiag length {} inconsistent with diag length {}",
                offdiag.len(),
                diag.len()
            )));
        }
        if diag.iter().chain(&offdiag).any(|x| !x.is_finite()) {
            return Err(Error::invalid("tridiagonal entries must be finite"));
        }
        Ok(TridiagonalMatrix { diag, offdiag })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Infinity norm bound (Gershgorin).
    pub fn norm_bound(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|i| {
                let left = if i > 0 {
                    self.offdiag[i - 1].abs()
                } else {
                    0.0
                };
                let right = if i + 1 < n {
                    self.offdiag[i].abs()
                } else {
                    0.0
                };
                self.diag[i].abs() + left + right
            })
            .fold(0.0, f64::max)
    }

    /// Adds a rank-one spike J·e_N e_N^T. For the Gaussian ensembles this
    /// reproduces the spectrum law of W + J·ww* for any unit w: the
    /// Householder reduction behind the tridiagonal model keeps the last
    /// basis vector fixed, and invariance lets w be rotated onto it.
    pub fn with_edge_spike(mut self, j: f64) -> Self {
        if let Some(last) = self.diag.last_mut() {
            *last += j;
        }
        self
    }
}

/// Degrees of freedom of the χ variable behind offdiag entry `i` (1-based).
pub fn chi_dof(alpha: Alpha, i: usize) -> usize {
    match alpha {
        Alpha::Complex => 2 * i,
        Alpha::Real => i,
    }
}

fn sample_chi<R: Rng + ?Sized>(dof: usize, rng: &mut R) -> f64 {
    let gamma = Gamma::new(dof as f64 / 2.0, 2.0).expect("positive shape");
    loop {
        let x: f64 = gamma.sample(rng);
        if x > 0.0 {
            return x.sqrt();
        }
    }
}

/// Draws diag entry `i` and offdiag entry `i` (1-based) of the unscaled model.
fn draw_pair<R: Rng + ?Sized>(alpha: Alpha, i: usize, n: usize, rng: &mut R) -> (f64, Option<f64>) {
    let a = alpha.value().sqrt() * rng.sample::<f64, _>(StandardNormal);
    let b = (i < n).then(|| sample_chi(chi_dof(alpha, i), rng) / (2.0 / alpha.value()).sqrt());
    (a, b)
}

/// Tridiagonal model of scaled GUE (α = 1) or GOE (α = 2):
/// aᵢ ~ N(0, α), bᵢ ~ χ(2i/α)/√(2/α), everything divided by √N.
pub fn sample_tridiag(alpha: Alpha, n: usize, seed: &SeedPlan) -> Result<TridiagonalMatrix> {
    if n < 2 {
        return Err(Error::invalid(format!(
            "sample_tridiag needs n ≥ 2, got {n}"
        )));
    }
    let mut rng = seed.rng();
    Ok(sample_tridiag_with(alpha, n, &mut rng))
}

pub(crate) fn sample_tridiag_with<R: Rng + ?Sized>(
    alpha: Alpha,
    n: usize,
    rng: &mut R,
) -> TridiagonalMatrix {
    let scale = 1.0 / (n as f64).sqrt();
    let mut diag = Vec::with_capacity(n);
    let mut offdiag = Vec::with_capacity(n - 1);
    for i in 1..=n {
        let (a, b) = draw_pair(alpha, i, n, rng);
        diag.push(a * scale);
        if let Some(b) = b {
            offdiag.push(b * scale);
        }
    }
    TridiagonalMatrix { diag, offdiag }
}

/// Samples only the bottom-right `l`×`l` block of the N×N tridiagonal model.
/// Its law is that of `corner_minor(sample_tridiag(alpha, n, ·), l)`, at
/// O(l) cost.
pub fn sample_tridiag_corner(
    alpha: Alpha,
    n: usize,
    l: usize,
    seed: &SeedPlan,
) -> Result<TridiagonalMatrix> {
    if l == 0 || l > n {
        return Err(Error::invalid(format!("corner size {l} outside 1..={n}")));
    }
    let mut rng = seed.rng();
    Ok(sample_tridiag_corner_with(alpha, n, l, &mut rng))
}

pub(crate) fn sample_tridiag_corner_with<R: Rng + ?Sized>(
    alpha: Alpha,
    n: usize,
    l: usize,
    rng: &mut R,
) -> TridiagonalMatrix {
    let scale = 1.0 / (n as f64).sqrt();
    let mut diag = Vec::with_capacity(l);
    let mut offdiag = Vec::with_capacity(l.saturating_sub(1));
    for i in (n - l + 1)..=n {
        let (a, b) = draw_pair(alpha, i, n, rng);
        diag.push(a * scale);
        if let Some(b) = b {
            offdiag.push(b * scale);
        }
    }
    TridiagonalMatrix { diag, offdiag }
}

/// Bottom-right `l`×`l` block: diag a_{N−l+1..N}, offdiag b_{N−l+1..N−1}.
pub fn corner_minor(t: &TridiagonalMatrix, l: usize) -> Result<TridiagonalMatrix> {
    let n = t.len();
    if l == 0 || l > n {
        return Err(Error::invalid(format!("corner size {l} outside 1..={n}")));
    }
    Ok(TridiagonalMatrix {
        diag: t.diag[n - l..].to_vec(),
        offdiag: t.offdiag[n - l..].to_vec(),
    })
}

/// Dense Hermitian (α = 1) or real symmetric (α = 2) matrix stored row-major.
/// `im` is empty in the real case.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub alpha: Alpha,
    pub n: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(alpha: Alpha, n: usize) -> Self {
        DenseMatrix {
            alpha,
            n,
            re: vec![0.0; n * n],
            im: match alpha {
                Alpha::Complex => vec![0.0; n * n],
                Alpha::Real => Vec::new(),
            },
        }
    }

    pub fn identity(alpha: Alpha, n: usize) -> Self {
        let mut m = Self::zeros(alpha, n);
        for i in 0..n {
            m.re[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_tridiagonal(alpha: Alpha, t: &TridiagonalMatrix) -> Self {
        let n = t.len();
        let mut m = Self::zeros(alpha, n);
        for i in 0..n {
            m.re[i * n + i] = t.diag[i];
            if i + 1 < n {
                m.re[i * n + i + 1] = t.offdiag[i];
                m.re[(i + 1) * n + i] = t.offdiag[i];
            }
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        let k = i * self.n + j;
        Complex64::new(
            self.re[k],
            if self.im.is_empty() { 0.0 } else { self.im[k] },
        )
    }

    /// Bit-exact conjugate symmetry check.
    pub fn is_hermitian(&self) -> bool {
        let n = self.n;
        (0..n).all(|i| {
            (0..n).all(|j| {
                let (a, b) = (i * n + j, j * n + i);
                self.re[a] == self.re[b] && (self.im.is_empty() || self.im[a] == -self.im[b])
            })
        })
    }

    /// u*Mu for u = u_re + i·u_im (u_im ignored in the real case).
    pub fn quadratic_form(&self, u_re: &[f64], u_im: &[f64]) -> f64 {
        let n = self.n;
        let mut acc = 0.0;
        if self.im.is_empty() {
            for i in 0..n {
                let row = &self.re[i * n..(i + 1) * n];
                let s: f64 = row.iter().zip(u_re).map(|(m, u)| m * u).sum();
                acc += u_re[i] * s;
            }
        } else {
            // Re[(x − iy)_i (A + iB)_ij (x + iy)_j]
            for i in 0..n {
                let a = &self.re[i * n..(i + 1) * n];
                let b = &self.im[i * n..(i + 1) * n];
                let mut sr = 0.0;
                let mut si = 0.0;
                for j in 0..n {
                    sr += a[j] * u_re[j] - b[j] * u_im[j];
                    si += a[j] * u_im[j] + b[j] * u_re[j];
                }
                acc += u_re[i] * sr + u_im[i] * si;
            }
        }
        acc
    }

    pub(crate) fn add_rank_one(&mut self, j: f64, v: &[f64]) {
        let n = self.n;
        for r in 0..n {
            for c in 0..n {
                self.re[r * n + c] += j * v[r] * v[c];
            }
        }
    }
}

/// Dense spiked Wigner matrix W_{J,N} = J·vv* + W_N.
pub fn sample_dense(spec: &EnsembleSpec, seed: &SeedPlan) -> Result<DenseMatrix> {
    spec.validate()?;
    Ok(sample_dense_with(spec, &mut seed.rng()))
}

pub(crate) fn sample_dense_with<R: Rng + ?Sized>(spec: &EnsembleSpec, rng: &mut R) -> DenseMatrix {
    let n = spec.n;
    let mut m = DenseMatrix::zeros(spec.alpha, n);
    let scale = 1.0 / (n as f64).sqrt();
    let half = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..n {
        let dv = spec.diag_variance.at(spec.alpha, i);
        m.re[i * n + i] = dv.sqrt() * spec.entry_law.sample(rng) * scale;
        for j in (i + 1)..n {
            match spec.alpha {
                Alpha::Real => {
                    let x = spec.entry_law.sample(rng) * scale;
                    m.re[i * n + j] = x;
                    m.re[j * n + i] = x;
                }
                Alpha::Complex => {
                    let x = spec.entry_law.sample(rng) * scale * half;
                    let y = spec.entry_law.sample(rng) * scale * half;
                    m.re[i * n + j] = x;
                    m.re[j * n + i] = x;
                    m.im[i * n + j] = y;
                    m.im[j * n + i] = -y;
                }
            }
        }
    }
    if spec.spike_j > 0.0 {
        let v = spec.spike_vector.materialize(n);
        m.add_rank_one(spec.spike_j, &v);
    }
    m
}

/// The rank-one spike term J·vv* on its own.
pub fn spike_term(spec: &EnsembleSpec) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(spec.alpha, spec.n);
    m.add_rank_one(spec.spike_j, &spec.spike_vector.materialize(spec.n));
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_degrees_of_freedom() {
        assert_eq!(chi_dof(Alpha::Complex, 5), 10);
        assert_eq!(chi_dof(Alpha::Real, 5), 5);
    }

    #[test]
    fn tridiag_shapes_and_positivity() {
        let t = sample_tridiag(Alpha::Real, 50, &SeedPlan::new(1, 0)).unwrap();
        assert_eq!(t.diag.len(), 50);
        assert_eq!(t.offdiag.len(), 49);
        assert!(t.offdiag.iter().all(|&b| b > 0.0));
        assert!(sample_tridiag(Alpha::Real, 1, &SeedPlan::new(1, 0)).is_err());
    }

    #[test]
    fn corner_minor_bookkeeping() {
        let t = TridiagonalMatrix::new(vec![1.0, 2.0, 3.0, 4.0, 5.0], vec![0.1, 0.2, 0.3, 0.4])
            .unwrap();
        assert_eq!(corner_minor(&t, 5).unwrap(), t);
        let one = corner_minor(&t, 1).unwrap();
        assert_eq!(one.diag, vec![5.0]);
        assert!(one.offdiag.is_empty());
        let two = corner_minor(&t, 2).unwrap();
        assert_eq!(two.diag, vec![4.0, 5.0]);
        assert_eq!(two.offdiag, vec![0.4]);
        assert!(corner_minor(&t, 0).is_err());
        assert!(corner_minor(&t, 6).is_err());
    }

    #[test]
    fn moments_match_gaussian_to_order_three() {
        for law in EntryLaw::ALL {
            for k in 1..=3 {
                assert_eq!(
                    law.raw_moment(k),
                    EntryLaw::Gaussian.raw_moment(k),
                    "{law} k={k}"
                );
            }
            // Real and imaginary parts of complex entries carry variance 1/2;
            // scaling preserves the match.
            let s = std::f64::consts::FRAC_1_SQRT_2;
            for k in 1..=3 {
                let m = law.raw_moment(k) * s.powi(k as i32);
                let g = EntryLaw::Gaussian.raw_moment(k) * s.powi(k as i32);
                assert_eq!(m, g);
            }
        }
        assert_eq!(EntryLaw::Gaussian.raw_moment(4), 3.0);
        assert_eq!(EntryLaw::Rademacher.raw_moment(4), 1.0);
    }

    #[test]
    fn dense_hermitian_exactly() {
        for alpha in [Alpha::Complex, Alpha::Real] {
            for law in EntryLaw::ALL {
                let spec = EnsembleSpec::gaussian(alpha, 7)
                    .with_law(law)
                    .with_spike(0.3, SpikeVector::Uniform);
                let m = sample_dense(&spec, &SeedPlan::new(3, 1)).unwrap();
                assert!(m.is_hermitian());
            }
        }
    }

    #[test]
    fn rademacher_offdiagonal_values() {
        let n = 9;
        let spec = EnsembleSpec::gaussian(Alpha::Real, n).with_law(EntryLaw::Rademacher);
        let m = sample_dense(&spec, &SeedPlan::new(5, 0)).unwrap();
        let s = 1.0 / (n as f64).sqrt();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    assert!((m.re[i * n + j].abs() - s).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn zero_spike_equals_plain_matrix() {
        let base = EnsembleSpec::gaussian(Alpha::Real, 6);
        let spiked = base.clone().with_spike(0.0, SpikeVector::Uniform);
        let seed = SeedPlan::new(9, 2);
        assert_eq!(
            sample_dense(&base, &seed).unwrap(),
            sample_dense(&spiked, &seed).unwrap()
        );
    }

    #[test]
    fn uniform_spike_term_entries() {
        let spec = EnsembleSpec::gaussian(Alpha::Real, 4).with_spike(0.5, SpikeVector::Uniform);
        let s = spike_term(&spec);
        assert!(s.re.iter().all(|&x| (x - 0.125).abs() < 1e-15));
    }

    #[test]
    fn supercritical_spike_rejected() {
        let spec = EnsembleSpec::gaussian(Alpha::Real, 4).with_spike(1.0, SpikeVector::Uniform);
        assert!(sample_dense(&spec, &SeedPlan::new(0, 0)).is_err());
        let bad = EnsembleSpec::gaussian(Alpha::Real, 2)
            .with_spike(0.5, SpikeVector::Explicit(vec![1.0, 1.0]));
        assert!(bad.validate().is_err());
    }

    #[test]
    fn zero_diagonal_convention() {
        let mut spec = EnsembleSpec::gaussian(Alpha::Real, 5);
        spec.diag_variance = DiagVariance::Constant(0.0);
        let m = sample_dense(&spec, &SeedPlan::new(1, 1)).unwrap();
        assert!((0..5).all(|i| m.re[i * 5 + i] == 0.0));
        assert!(!spec.has_tridiagonal_model());
    }

    #[test]
    fn spec_json_schema() {
        let spec = EnsembleSpec::gaussian(Alpha::Complex, 3).with_spike(0.25, SpikeVector::Uniform);
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(
            text,
            r#"{"alpha":1,"n":3,"entry_law":"gaussian","diag_variance":"default","spike_j":0.25,"spike_vector":"uniform"}"#
        );
        let back: EnsembleSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
        let explicit: EnsembleSpec = serde_json::from_str(
            r#"{"alpha":2,"n":2,"entry_law":"rademacher","diag_variance":[0,0],"spike_j":0.5,"spike_vector":[0.6,0.8]}"#,
        )
        .unwrap();
        assert_eq!(explicit.spike_vector, SpikeVector::Explicit(vec![0.6, 0.8]));
        assert!(explicit.validate().is_ok());
        assert!(serde_json::from_str::<EnsembleSpec>(r#"{"alpha":3,"n":2}"#).is_err());
    }

    #[test]
    fn edge_spike_touches_last_entry() {
        let t = TridiagonalMatrix::new(vec![0.0, 0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let s = t.with_edge_spike(0.5);
        assert_eq!(s.diag, vec![0.0, 0.0, 0.5]);
    }
}
