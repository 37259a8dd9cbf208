//! Small numerical building blocks shared by the spectral and free-energy
//! modules: compensated summation, adaptive Gauss–Kronrod quadrature for
//! complex integrands, Brent root finding, and a handful of special functions.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// Compensated sum of complex terms (real and imaginary parts separately).
#[derive(Debug, Clone, Copy, Default)]
pub struct ComplexSum {
    re: CompensatedSum,
    im: CompensatedSum,
}

impl ComplexSum {
    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

/// Streaming log-sum-exp with a running mean of the exponentiated terms and
/// of their squares, used by the sphere Monte Carlo oracle.
#[derive(Debug, Clone, Copy)]
pub struct LogMeanExp {
    shift: f64,
    sum: f64,
    sum_sq: f64,
    count: u64,
}

impl Default for LogMeanExp {
    fn default() -> Self {
        LogMeanExp {
            shift: f64::NEG_INFINITY,
            sum: 0.0,
            sum_sq: 0.0,
            count: 0,
        }
    }
}

impl LogMeanExp {
    pub fn push(&mut self, log_term: f64) {
        self.count += 1;
        if log_term > self.shift {
            if self.shift.is_finite() {
                let r = (self.shift - log_term).exp();
                self.sum *= r;
                self.sum_sq *= r * r;
            }
            self.shift = log_term;
        }
        let e = (log_term - self.shift).exp();
        self.sum += e;
        self.sum_sq += e * e;
    }

    pub fn merge(&mut self, other: &LogMeanExp) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let shift = self.shift.max(other.shift);
        let a = (self.shift - shift).exp();
        let b = (other.shift - shift).exp();
        self.sum = self.sum * a + other.sum * b;
        self.sum_sq = self.sum_sq * a * a + other.sum_sq * b * b;
        self.shift = shift;
        self.count += other.count;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// log of the sample mean of exp(terms).
    pub fn log_mean(&self) -> f64 {
        self.shift + (self.sum / self.count as f64).ln()
    }

    /// Standard error of log(mean) by the delta method.
    pub fn log_mean_std_error(&self) -> f64 {
        let n = self.count as f64;
        let mean = self.sum / n;
        let var = (self.sum_sq / n - mean * mean).max(0.0) * n / (n - 1.0).max(1.0);
        (var / n).sqrt() / mean
    }
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS_K: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const GK_WEIGHTS_G: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

fn gk15<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> (Complex64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * GK_WEIGHTS_K[7];
    let mut gauss = fc * GK_WEIGHTS_G[3];
    for i in 0..7 {
        let dx = half * GK_NODES[i];
        let pair = f(center - dx) + f(center + dx);
        kronrod += pair * GK_WEIGHTS_K[i];
        if i % 2 == 1 {
            gauss += pair * GK_WEIGHTS_G[i / 2];
        }
    }
    let k = kronrod * half;
    let g = gauss * half;
    (k, (k - g).norm())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    /// Target error relative to the magnitude of the total integral.
    pub rel_tol: f64,
    /// Absolute error floor.
    pub abs_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            rel_tol: 1e-10,
            abs_tol: 0.0,
            max_panels: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: Complex64,
    pub error: f64,
    pub panels: usize,
    pub converged: bool,
}

/// Globally adaptive 15-point Gauss–Kronrod quadrature of a complex-valued
/// integrand over the union of the given consecutive breakpoints.
pub fn integrate<F: FnMut(f64) -> Complex64>(
    mut f: F,
    breakpoints: &[f64],
    opts: &QuadOptions,
) -> QuadResult {
    assert!(breakpoints.len() >= 2, "need at least one interval");
    let mut panels: Vec<Panel> = breakpoints
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let (value, error) = gk15(&mut f, w[0], w[1]);
            Panel {
                a: w[0],
                b: w[1],
                value,
                error,
            }
        })
        .collect();
    loop {
        let total: Complex64 = panels.iter().map(|p| p.value).sum();
        let err: f64 = panels.iter().map(|p| p.error).sum();
        let target = opts.abs_tol.max(opts.rel_tol * total.norm());
        if err <= target {
            return QuadResult {
                value: total,
                error: err,
                panels: panels.len(),
                converged: true,
            };
        }
        if panels.len() >= opts.max_panels {
            return QuadResult {
                value: total,
                error: err,
                panels: panels.len(),
                converged: false,
            };
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("non-empty panel list");
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            // Interval cannot be split further in floating point.
            panels.push(Panel { error: 0.0, ..p });
            continue;
        }
        for (a, b) in [(p.a, mid), (mid, p.b)] {
            let (value, error) = gk15(&mut f, a, b);
            panels.push(Panel { a, b, value, error });
        }
    }
}

/// Brent's method for a sign change of `f` on `[lo, hi]`.
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, xtol: f64) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Bracketing(format!(
            "no sign change on [{lo}, {hi}] (f = {fa}, {fb})"
        )));
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..300 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
    }
    Err(Error::Bracketing(format!(
        "Brent iteration limit on [{lo}, {hi}]"
    )))
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// Sample mean and unbiased variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = compensated_sum(xs.iter().copied()) / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = compensated_sum(xs.iter().map(|x| (x - mean) * (x - mean))) / (n - 1.0);
    (mean, var)
}

/// Empirical quantile by linear interpolation of the order statistics.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = pos - lo as f64;
    sorted[lo] * (1.0 - w) + sorted[hi] * w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut terms = vec![1e16, 1.0, -1e16];
        terms.extend(std::iter::repeat_n(1e-3, 1000));
        assert!((compensated_sum(terms) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn gk_integrates_oscillatory_gaussian() {
        // ∫_0^∞ e^{-t²} cos(2t) dt = (√π/2) e^{-1}
        let r = integrate(
            |t| Complex64::new((-t * t).exp() * (2.0 * t).cos(), 0.0),
            &[0.0, 1.0, 2.0, 4.0, 8.0],
            &QuadOptions::default(),
        );
        let exact = 0.5 * std::f64::consts::PI.sqrt() * (-1.0f64).exp();
        assert!(r.converged);
        assert!((r.value.re - exact).abs() < 1e-12);
    }

    #[test]
    fn gk_handles_endpoint_sqrt() {
        let r = integrate(
            |t| Complex64::new(t.sqrt(), 0.0),
            &[0.0, 1.0],
            &QuadOptions::default(),
        );
        assert!((r.value.re - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn brent_finds_root() {
        let r = brent(|x| x * x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-13);
        assert!(brent(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_err());
    }

    #[test]
    fn log_mean_exp_matches_direct() {
        let xs = [0.1, -2.0, 3.5, 0.7];
        let mut acc = LogMeanExp::default();
        for &x in &xs {
            acc.push(x);
        }
        let direct = (xs.iter().map(|x: &f64| x.exp()).sum::<f64>() / 4.0).ln();
        assert!((acc.log_mean() - direct).abs() < 1e-14);
        let (mut a, mut b) = (LogMeanExp::default(), LogMeanExp::default());
        a.push(xs[0]);
        a.push(xs[1]);
        b.push(xs[2]);
        b.push(xs[3]);
        a.merge(&b);
        assert!((a.log_mean() - direct).abs() < 1e-14);
    }

    #[test]
    fn normal_cdf_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(1.959_963_984_540_054) - 0.975).abs() < 1e-10);
        assert!((normal_cdf(-3.0) - 0.001_349_898_031_630_095).abs() < 1e-12);
    }
}
