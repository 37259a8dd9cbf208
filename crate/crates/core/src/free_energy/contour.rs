//! Contour evaluations of J = (1/2πi)∫ exp{(N/α)G(z)} dz.
//!
//! Every contour used here is symmetric under conjugation and f(z̄) = f(z)‾,
//! so J = (1/π)·Im∫_U f dz with U the half of the contour above the real axis.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;

use super::{
    g_hat_checked, g_of, saddle_point, Abscissa, ContourOptions, Diagnostics, FreeEnergyResult,
    K3Mode, Method, ModelParams,
};
use crate::error::{Error, Result};
use crate::numeric::{integrate, ln_gamma, QuadOptions};
use crate::spectral::{SpectralData, Spectrum};

/// Direction of the tail ray, up and to the left.
const RAY: Complex64 = Complex64::new(-FRAC_1_SQRT_2, FRAC_1_SQRT_2);

fn check_dim<S: SpectralData + ?Sized>(data: &S, params: &ModelParams) -> Result<usize> {
    let n = data.dim();
    if n != params.n {
        return Err(Error::invalid(format!(
            "spectrum has {n} eigenvalues but the model has N = {}",
            params.n
        )));
    }
    if n < 2 {
        return Err(Error::invalid("free energy needs N ≥ 2"));
    }
    Ok(n)
}

/// For decreasing `phi` with phi(0) ≥ level, a point where phi crosses
/// `level`, searched up to `cap`. Returns None if phi stays above on [0, cap].
fn find_level<F: FnMut(f64) -> f64>(mut phi: F, level: f64, scale: f64, cap: f64) -> Option<f64> {
    let mut lo = 0.0;
    let mut hi = scale.min(cap);
    loop {
        if phi(hi) <= level {
            break;
        }
        if hi >= cap {
            return None;
        }
        lo = hi;
        hi = (2.0 * hi).min(cap);
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-6 * hi {
            break;
        }
        if phi(mid) > level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(hi)
}

/// Breakpoints 0, s, 2s, 4s, … up to `end`.
fn geometric_breaks(first: f64, end: f64) -> Vec<f64> {
    let mut out = vec![0.0];
    let mut s = first.min(end);
    while s < end {
        out.push(s);
        s *= 2.0;
    }
    out.push(end);
    out
}

pub(crate) struct PathIntegral {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
    pub converged: bool,
    pub truncation: f64,
    pub ray: bool,
}

/// (1/π)·Im∫ exp{w(G(z) − g_ref)} dz over the upward vertical half-line from
/// x0, replaced beyond height H by a ray in direction e^{3πi/4} when the
/// integrand has not decayed by then.
pub(crate) fn upper_path_integral<S: SpectralData + ?Sized>(
    data: &S,
    beta: f64,
    w: f64,
    g_ref: f64,
    x0: f64,
    opts: &ContourOptions,
    abs_tol: f64,
) -> PathIntegral {
    let f = |z: Complex64| ((g_of(data, beta, z) - g_ref) * w).exp();
    let phi = |z: Complex64| w * (g_of(data, beta, z).re - g_ref);
    let peak = phi(Complex64::new(x0, 0.0));
    let level = opts.truncation.ln() + peak.max(0.0);
    let cap = 8f64.max(2.0 * (x0 - data.lower_bound()));
    let half = find_level(|s| phi(Complex64::new(x0, s)), peak - 0.5, 1e-3, cap).unwrap_or(cap);
    let top = find_level(|s| phi(Complex64::new(x0, s)), level, half, cap);
    let height = top.unwrap_or(cap);
    let quad = QuadOptions {
        abs_tol,
        ..opts.quad
    };
    let vertical = integrate(
        |s| Complex64::new(f(Complex64::new(x0, s)).re, 0.0),
        &geometric_breaks(half, height),
        &quad,
    );
    let mut value = vertical.value.re;
    let mut error = vertical.error;
    let mut panels = vertical.panels;
    let mut converged = vertical.converged;
    let mut truncation = height;
    if top.is_none() {
        let start = Complex64::new(x0, height);
        // |f| decreases along the ray because height ≥ x0 − λ_j for every j.
        let end = find_level(|t| phi(start + RAY * t), level, 1.0, f64::MAX).unwrap_or(f64::MAX);
        let ray_quad = QuadOptions {
            abs_tol: abs_tol.max(quad.rel_tol * value.abs()),
            ..opts.quad
        };
        let tail = integrate(
            |t| Complex64::new((RAY * f(start + RAY * t)).im, 0.0),
            &[0.0, end / 64.0, end / 16.0, end / 4.0, end],
            &ray_quad,
        );
        value += tail.value.re;
        error += tail.error;
        panels += tail.panels;
        converged &= tail.converged;
        truncation = end;
    }
    PathIntegral {
        value: value / PI,
        error: error / PI,
        panels,
        converged,
        truncation,
        ray: top.is_none(),
    }
}

fn vertical_abscissa<S: SpectralData + ?Sized>(
    data: &S,
    params: &ModelParams,
    opts: &ContourOptions,
) -> Result<f64> {
    let l1 = data.lambda1();
    let gamma = match opts.abscissa {
        Abscissa::Saddle => saddle_point(data, params.beta)?,
        Abscissa::GammaHat => {
            let nf = params.n as f64;
            params
                .gamma_hat
                .max(l1 + params.b * params.b * nf.powf(-2.0 / 3.0))
        }
        Abscissa::Fixed(x) => x,
    };
    if !(gamma - l1 >= 1e-14) {
        return Err(Error::Domain(format!(
            "vertical contour at {gamma} does not clear λ₁ = {l1}"
        )));
    }
    Ok(gamma)
}

/// Vertical line Re z = γ to the right of the spectrum.
pub fn f_vertical<S: SpectralData + ?Sized>(
    data: &S,
    params: &ModelParams,
    opts: &ContourOptions,
) -> Result<FreeEnergyResult> {
    let n = check_dim(data, params)?;
    let gamma = vertical_abscissa(data, params, opts)?;
    let w = params.weight();
    let g_ref = g_of(data, params.beta, Complex64::new(gamma, 0.0)).re;
    let path = upper_path_integral(data, params.beta, w, g_ref, gamma, opts, opts.quad.abs_tol);
    if !(path.value > 0.0) {
        return Err(Error::Quadrature(format!(
            "vertical contour at {gamma} gave non-positive J = {:e}",
            path.value
        )));
    }
    let diagnostics = Diagnostics {
        crossing: Some(gamma),
        truncation: Some(path.truncation),
        ray_tail: path.ray,
        panels: path.panels,
        converged: path.converged,
        ..Diagnostics::default()
    };
    Ok(FreeEnergyResult::assemble(
        params,
        n,
        w * g_ref + path.value.ln(),
        Method::Vertical,
        path.error / path.value,
        diagnostics,
    ))
}

/// The unfolded integral (1/2π)∫_{−H}^{H} exp{w(G(γ+is) − G(γ))} ds as a
/// complex number, for checking the conjugate symmetry of the integrand.
pub fn vertical_line_integral<S: SpectralData + ?Sized>(
    data: &S,
    beta: f64,
    w: f64,
    gamma: f64,
    height: f64,
    opts: &QuadOptions,
) -> Complex64 {
    let g_ref = g_of(data, beta, Complex64::new(gamma, 0.0)).re;
    let r = integrate(
        |s| ((g_of(data, beta, Complex64::new(gamma, s)) - g_ref) * w).exp(),
        &[-height, -height / 8.0, 0.0, height / 8.0, height],
        opts,
    );
    r.value / (2.0 * PI)
}

/// Keyhole contour: the segment [μ, λ₁] with μ = (λ₁+λ₂)/2, plus the
/// vertical line through μ. All terms relative to exp{(N/α)Ĝ(λ₁)}.
pub fn f_keyhole(
    spectrum: &Spectrum,
    params: &ModelParams,
    opts: &ContourOptions,
) -> Result<FreeEnergyResult> {
    let n = check_dim(spectrum, params)?;
    let g_hat = g_hat_checked(spectrum, params.beta, opts.min_gap)?;
    let w = params.weight();
    let l1 = spectrum.lambda1();
    let gap = spectrum.top_gap();
    let mu = l1 - 0.5 * gap;
    let rest = &spectrum.values[1..];

    let (segment, seg_err, mut panels, mut converged) = match params.alpha.as_int() {
        1 => (1.0, 0.0, 0, true),
        _ => {
            // λ₁ − x = u² removes the inverse square root at λ₁.
            let half_beta_n = 0.5 * n as f64 * params.beta;
            let upper = (0.5 * gap).sqrt();
            let r = integrate(
                |u| {
                    let u2 = u * u;
                    let s: f64 = rest.iter().map(|v| (-u2 / (l1 - v)).ln_1p()).sum();
                    Complex64::new(2.0 * (-half_beta_n * u2 - 0.5 * s).exp(), 0.0)
                },
                &[0.0, 0.25 * upper, upper],
                &opts.quad,
            );
            (r.value.re / PI, r.error / PI, r.panels, r.converged)
        }
    };

    let bound = k3_bound(spectrum, params, mu);
    let skip = match opts.k3 {
        K3Mode::Never => true,
        K3Mode::Always => false,
        K3Mode::Auto => bound.is_some_and(|b| b < 1e-12 * segment),
    };
    let mut total = segment;
    let mut error = seg_err;
    let mut k3_value = None;
    let mut truncation = None;
    let mut ray = false;
    if !skip {
        let path = upper_path_integral(spectrum, params.beta, w, g_hat, mu, opts, 1e-10 * segment);
        total += path.value;
        error += path.error;
        panels += path.panels;
        converged &= path.converged;
        k3_value = Some(path.value);
        truncation = Some(path.truncation);
        ray = path.ray;
    }
    if !(total > 0.0) || error > 1e-6 * total {
        return Err(Error::Quadrature(format!(
            "keyhole contour lost accuracy to cancellation: J = {total:e} ± {error:e}"
        )));
    }
    let diagnostics = Diagnostics {
        crossing: Some(mu),
        truncation,
        ray_tail: ray,
        panels,
        converged,
        k3_value,
        k3_bound: bound,
        k3_skipped: Some(skip),
        ..Diagnostics::default()
    };
    Ok(FreeEnergyResult::assemble(
        params,
        n,
        w * g_hat + total.ln(),
        Method::Keyhole,
        error / total,
        diagnostics,
    ))
}

/// A-priori bound on |K₃| relative to exp{(N/α)Ĝ(λ₁)}, using the k = 2α+1
/// eigenvalues nearest the top to make the t-integral converge.
fn k3_bound(spectrum: &Spectrum, params: &ModelParams, mu: f64) -> Option<f64> {
    let a = params.a();
    let k = 2 * params.alpha.as_int() as usize + 1;
    if spectrum.len() < k {
        return None;
    }
    let l1 = spectrum.lambda1();
    let gap = spectrum.top_gap();
    let w = params.weight();
    let log_prod: f64 = spectrum.values[1..]
        .iter()
        .map(|v| ((l1 - v) / (mu - v)).ln())
        .sum();
    let zeta = spectrum.values[..k]
        .iter()
        .map(|v| (mu - v).abs())
        .fold(0.0, f64::max);
    let p = k as f64 / (2.0 * a);
    let log_t = zeta.ln() + 0.5 * PI.ln() + ln_gamma(p - 0.5) - 2f64.ln() - ln_gamma(p);
    let log_b =
        -PI.ln() - w * params.beta * gap / 2.0 + log_prod / a - (0.5 * gap).ln() / a + log_t;
    Some(log_b.exp())
}

/// Height y₀ at which the steepest-descent path crosses Re z = λ₁: the root
/// of βy − π/(2N) − (1/N)Σ_{j≥2} arctan(y/(λ₁ − λ_j)), which is
/// βy − Im Σ_j log(λ₁ + iy − λ_j)/N.
pub fn steepest_y0<S: SpectralData + ?Sized>(data: &S, beta: f64) -> Result<f64> {
    let n = data.dim() as f64;
    let l1 = data.lambda1();
    let h = |y: f64| beta * y - data.sum_log(Complex64::new(l1, y)).im / n;
    let mut hi = 1.0;
    while h(hi) <= 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Bracketing(
                "no root for the crossing height y₀".into(),
            ));
        }
    }
    // At y = 0 exactly the λ₁ factor has no argument; start just above.
    crate::numeric::brent(h, f64::MIN_POSITIVE, hi, 1e-15 * hi)
}

/// Real part X(y) of the steepest-descent path Im G = 0 at height y.
struct Tracer<'a, S: SpectralData + ?Sized> {
    data: &'a S,
    beta: f64,
    gamma: f64,
    floor: f64,
    cache: BTreeMap<u64, f64>,
}

impl<S: SpectralData + ?Sized> Tracer<'_, S> {
    fn predict(&self, y: f64) -> f64 {
        let key = y.to_bits();
        let below = self.cache.range(..=key).next_back();
        let above = self.cache.range(key..).next();
        match (below, above) {
            (Some((&a, &xa)), Some((&b, &xb))) if a != b => {
                let (ya, yb) = (f64::from_bits(a), f64::from_bits(b));
                xa + (xb - xa) * (y - ya) / (yb - ya)
            }
            (Some((_, &x)), _) | (_, Some((_, &x))) => x,
            _ => self.gamma,
        }
    }

    /// h(x) = βy − Im S(x+iy)/N and h'(x) > 0.
    fn h(&self, x: f64, y: f64) -> (f64, f64, Complex64) {
        let n = self.data.dim() as f64;
        let z = Complex64::new(x, y);
        let (s, ds) = self.data.sum_log_with_derivative(z);
        (self.beta * y - s.im / n, -ds.im / n, s)
    }

    /// Returns (X(y), Σ log(z − λ_j)) at the solution.
    fn solve(&mut self, y: f64) -> Result<(f64, Complex64)> {
        let mut hi = self.gamma;
        let mut lo: Option<f64> = None;
        let mut x = self.predict(y).min(hi);
        let mut last = Complex64::new(0.0, 0.0);
        for _ in 0..200 {
            if x < self.floor {
                return Err(Error::TraceEscaped { height: y });
            }
            let (h, dh, s) = self.h(x, y);
            last = s;
            if h == 0.0 {
                break;
            }
            if h > 0.0 {
                hi = x;
            } else {
                lo = Some(x);
            }
            let mut next = x - h / dh;
            if let Some(l) = lo {
                if !(next > l && next < hi) {
                    next = 0.5 * (l + hi);
                }
            } else if !(next < hi) {
                next = hi - 2.0 * (hi - x).max(1e-3);
            }
            let done = (next - x).abs() <= 1e-15 * (1.0 + x.abs());
            x = next;
            if done {
                last = self.h(x, y).2;
                break;
            }
        }
        self.cache.insert(y.to_bits(), x);
        Ok((x, last))
    }
}

/// Path of steepest descent through the real saddle γ*, parametrized by its
/// height: J = (1/π)∫ exp{(N/α)(G(X(y)+iy) − G(γ*))} dy with a positive
/// integrand.
pub fn f_steepest<S: SpectralData + ?Sized>(
    data: &S,
    params: &ModelParams,
    opts: &ContourOptions,
    y0: Option<f64>,
) -> Result<FreeEnergyResult> {
    let n = check_dim(data, params)?;
    let beta = params.beta;
    let w = params.weight();
    let nf = n as f64;
    let gamma = saddle_point(data, beta)?;
    let g_star = g_of(data, beta, Complex64::new(gamma, 0.0)).re;
    let mut tracer = Tracer {
        data,
        beta,
        gamma,
        floor: data.lower_bound() - opts.trace_box,
        cache: BTreeMap::new(),
    };
    let y_max = PI / beta;
    let mut phi = |y: f64| -> Result<f64> {
        let (x, s) = tracer.solve(y)?;
        Ok(w * (beta * x - s.re / nf - g_star))
    };
    let level = opts.truncation.ln();
    // Far up the path the trace may leave the box; the integrand is
    // negligible there.
    let mut phi_or_floor = |y: f64| phi(y).unwrap_or(f64::NEG_INFINITY);
    let cap = y_max * (1.0 - 1e-9);
    let half = find_level(&mut phi_or_floor, -0.5, 1e-3 * y_max, cap).unwrap_or(cap);
    let top = find_level(&mut phi_or_floor, level, half, cap).unwrap_or(cap);
    let mut breaks = geometric_breaks(half, top);
    if let Some(y0) = y0.filter(|&y| y > 0.0 && y < top) {
        breaks.push(y0);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
    }
    let mut failure = None;
    let r = integrate(
        |y| match tracer.solve(y) {
            Ok((x, s)) => Complex64::new((w * (beta * x - s.re / nf - g_star)).exp(), 0.0),
            Err(e) => {
                failure.get_or_insert(e);
                Complex64::new(0.0, 0.0)
            }
        },
        &breaks,
        &opts.quad,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let value = r.value.re / PI;
    if !(value > 0.0) {
        return Err(Error::Quadrature(format!(
            "steepest descent gave J = {value:e}"
        )));
    }
    let trace_check = match y0 {
        Some(y) => Some((tracer.solve(y)?.0 - data.lambda1()).abs()),
        None => None,
    };
    let diagnostics = Diagnostics {
        crossing: Some(gamma),
        truncation: Some(top),
        panels: r.panels,
        converged: r.converged,
        y0,
        trace_check,
        ..Diagnostics::default()
    };
    Ok(FreeEnergyResult::assemble(
        params,
        n,
        w * g_star + value.ln(),
        Method::SteepestDescent,
        r.error / PI / value,
        diagnostics,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{sample_tridiag, Alpha};
    use crate::free_energy::{f_residue_oracle, f_sphere_mc_oracle};
    use crate::seed::SeedPlan;
    use crate::spectral::{eig_full, TridiagonalLogDet};

    fn spectrum(alpha: Alpha, n: usize, seed: u64) -> Spectrum {
        eig_full(&sample_tridiag(alpha, n, &SeedPlan::new(seed, 0)).unwrap()).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1.0)
    }

    #[test]
    fn two_point_against_residue() {
        let s = Spectrum::from_values(vec![1.0, -1.0]).unwrap();
        let p = ModelParams::from_beta(Alpha::Complex, 2, 1.0, 0.0).unwrap();
        let o = ContourOptions::default();
        let exact = f_residue_oracle(&s, &p).unwrap();
        for r in [
            f_vertical(&s, &p, &o).unwrap(),
            f_keyhole(&s, &p, &o).unwrap(),
        ] {
            assert!(rel(r.log_i, exact.log_i) < 1e-8, "{:?}", r.method);
        }
        let y0 = steepest_y0(&s, 1.0).ok();
        let st = f_steepest(&s, &p, &o, y0).unwrap();
        assert!(rel(st.log_i, exact.log_i) < 1e-8);
    }

    #[test]
    fn complex_methods_agree_with_residue() {
        let o = ContourOptions::default();
        for (k, n) in [3usize, 7, 12, 25].into_iter().enumerate() {
            let s = spectrum(Alpha::Complex, n, 30 + k as u64);
            for beta in [0.5, 1.0, 1.5] {
                let p = ModelParams::from_beta(Alpha::Complex, n, beta, 0.0).unwrap();
                let exact = f_residue_oracle(&s, &p).unwrap().log_i;
                let v = f_vertical(&s, &p, &o).unwrap();
                let kh = f_keyhole(&s, &p, &o).unwrap();
                let st = f_steepest(&s, &p, &o, steepest_y0(&s, beta).ok()).unwrap();
                for r in [&v, &kh, &st] {
                    assert!(
                        rel(r.log_i, exact) < 1e-6,
                        "n={n} β={beta} {:?}: {} vs {exact}",
                        r.method,
                        r.log_i
                    );
                }
            }
        }
    }

    #[test]
    fn keyhole_without_tail_is_the_residue_at_top() {
        let s = spectrum(Alpha::Complex, 9, 3);
        let p = ModelParams::from_beta(Alpha::Complex, 9, 1.2, 0.0).unwrap();
        let o = ContourOptions {
            k3: K3Mode::Never,
            ..ContourOptions::default()
        };
        let r = f_keyhole(&s, &p, &o).unwrap();
        let g = crate::free_energy::g_hat(&s, 1.2).unwrap();
        assert_eq!(r.log_i_over_c, 9.0 * g);
        assert_eq!(r.diagnostics.k3_skipped, Some(true));
    }

    #[test]
    fn keyhole_rejects_degenerate_gap() {
        let s = Spectrum::from_values(vec![1.0, 1.0 - 1e-15, 0.0, -1.0]).unwrap();
        let p = ModelParams::from_beta(Alpha::Real, 4, 1.0, 0.0).unwrap();
        let r = f_keyhole(&s, &p, &ContourOptions::default());
        assert!(matches!(r, Err(Error::DegenerateGap { .. })));
    }

    #[test]
    fn real_methods_agree() {
        let o = ContourOptions::default();
        for (n, b) in [(5usize, 0.5), (40, -1.0), (300, 1.5), (300, -1.0)] {
            let s = spectrum(Alpha::Real, n, n as u64);
            let p = ModelParams::from_b(Alpha::Real, n, b, 0.0).unwrap();
            let v = f_vertical(&s, &p, &o).unwrap();
            let st = f_steepest(&s, &p, &o, steepest_y0(&s, p.beta).ok()).unwrap();
            assert!(
                rel(st.log_i, v.log_i) < 1e-9,
                "n={n}: {} vs {}",
                st.log_i,
                v.log_i
            );
            if b > 0.0 {
                let kh = f_keyhole(&s, &p, &o).unwrap();
                assert!(rel(kh.log_i, v.log_i) < 1e-9);
            }
        }
    }

    #[test]
    fn pivot_route_matches_spectrum_route() {
        let t = sample_tridiag(Alpha::Real, 400, &SeedPlan::new(8, 0)).unwrap();
        let s = eig_full(&t).unwrap();
        let det = TridiagonalLogDet::new(t);
        let o = ContourOptions::default();
        for b in [-2.0, 0.0, 2.0] {
            let p = ModelParams::from_b(Alpha::Real, 400, b, 0.0).unwrap();
            let a = f_vertical(&s, &p, &o).unwrap();
            let c = f_vertical(&det, &p, &o).unwrap();
            assert!(rel(a.log_i, c.log_i) < 1e-11);
        }
    }

    #[test]
    fn vertical_matches_sphere_monte_carlo() {
        let s = spectrum(Alpha::Real, 8, 12);
        let p = ModelParams::from_beta(Alpha::Real, 8, 1.0, 0.0).unwrap();
        let v = f_vertical(&s, &p, &ContourOptions::default()).unwrap();
        let kh = f_keyhole(&s, &p, &ContourOptions::default()).unwrap();
        let mc = f_sphere_mc_oracle(&s, &p, 400_000, 9).unwrap();
        for r in [v, kh] {
            assert!(
                (r.log_i - mc.log_i).abs() < 3.0 * mc.quad_error,
                "{} vs {} ± {}",
                r.log_i,
                mc.log_i,
                mc.quad_error
            );
        }
    }

    #[test]
    fn unfolded_integral_is_real() {
        let s = spectrum(Alpha::Real, 30, 2);
        let beta = 0.9;
        let gamma = saddle_point(&s, beta).unwrap();
        let opts = QuadOptions {
            max_panels: 20_000,
            ..QuadOptions::default()
        };
        let j = vertical_line_integral(&s, beta, 15.0, gamma, 40.0, &opts);
        assert!(j.im.abs() < 1e-10 * j.re.abs(), "{j}");
        let folded = upper_path_integral(
            &s,
            beta,
            15.0,
            crate::free_energy::g_of(&s, beta, Complex64::new(gamma, 0.0)).re,
            gamma,
            &ContourOptions::default(),
            0.0,
        );
        assert!((folded.value - j.re).abs() < 1e-7 * j.re);
    }

    #[test]
    fn shift_covariance() {
        let s = spectrum(Alpha::Real, 50, 5);
        let c = 0.31;
        let o = ContourOptions::default();
        for b in [-1.0, 1.0] {
            let p = ModelParams::from_b(Alpha::Real, 50, b, 0.0).unwrap();
            let a = f_vertical(&s, &p, &o).unwrap();
            let moved = f_vertical(&s.shifted(c), &p, &o).unwrap();
            assert!((moved.f - a.f - p.beta * c / 2.0).abs() < 1e-10);
            let a = f_keyhole(&s, &p, &o).unwrap();
            let moved = f_keyhole(&s.shifted(c), &p, &o).unwrap();
            assert!((moved.f - a.f - p.beta * c / 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn monotone_in_beta() {
        let s = spectrum(Alpha::Real, 60, 6);
        let o = ContourOptions::default();
        let fs: Vec<f64> = [0.6, 0.8, 1.0, 1.2, 1.4]
            .iter()
            .map(|&beta| {
                f_vertical(
                    &s,
                    &ModelParams::from_beta(Alpha::Real, 60, beta, 0.0).unwrap(),
                    &o,
                )
                .unwrap()
                .f
            })
            .collect();
        assert!(fs.windows(2).all(|w| w[1] >= w[0]), "{fs:?}");
    }

    #[test]
    fn abscissa_choices() {
        let s = spectrum(Alpha::Real, 200, 9);
        let p = ModelParams::from_b(Alpha::Real, 200, -1.0, 0.0).unwrap();
        let base = f_vertical(&s, &p, &ContourOptions::default()).unwrap();
        for abscissa in [Abscissa::GammaHat, Abscissa::Fixed(s.lambda1() + 0.5)] {
            let o = ContourOptions {
                abscissa,
                ..ContourOptions::default()
            };
            let r = f_vertical(&s, &p, &o).unwrap();
            assert!(rel(r.log_i, base.log_i) < 1e-8);
        }
        let bad = ContourOptions {
            abscissa: Abscissa::Fixed(s.lambda1()),
            ..ContourOptions::default()
        };
        assert!(matches!(f_vertical(&s, &p, &bad), Err(Error::Domain(_))));
    }

    #[test]
    fn crossing_height() {
        let s = spectrum(Alpha::Real, 100, 4);
        let n = 100.0;
        let l1 = s.lambda1();
        let h = |y: f64| {
            y - PI / (2.0 * n)
                - s.values[1..]
                    .iter()
                    .map(|v| (y / (l1 - v)).atan())
                    .sum::<f64>()
                    / n
        };
        assert!(h(0.0) < 0.0);
        let y0 = steepest_y0(&s, 1.0).unwrap();
        assert!(y0 > 0.0 && y0 < 1.0);
        assert!(h(y0).abs() < 1e-14);
        let p = ModelParams::from_beta(Alpha::Real, 100, 1.0, 0.0).unwrap();
        let r = f_steepest(&s, &p, &ContourOptions::default(), Some(y0)).unwrap();
        assert!(r.diagnostics.trace_check.unwrap() < 1e-12);
    }
}
