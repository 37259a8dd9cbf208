use num_complex::Complex64;
use proptest::prelude::*;

use ssk_core::ensembles::{
    corner_minor, sample_dense, sample_tridiag, Alpha, EnsembleSpec, EntryLaw, SpikeVector,
};
use ssk_core::free_energy::{
    f_keyhole, f_residue_oracle, f_vertical, saddle_point, vertical_line_integral, ContourOptions,
    ModelParams,
};
use ssk_core::limit_laws::{ks_distance, ReferenceDistribution};
use ssk_core::numeric::QuadOptions;
use ssk_core::spectral::{
    eig_dense, eig_full, g_derivative, inverse_moment, largest_eigenvalue, log_det_stat,
    stieltjes_sc, RecursionState, Spectrum,
};
use ssk_core::SeedPlan;

fn alpha() -> impl Strategy<Value = Alpha> {
    prop_oneof![Just(Alpha::Complex), Just(Alpha::Real)]
}

fn law() -> impl Strategy<Value = EntryLaw> {
    prop_oneof![
        Just(EntryLaw::Gaussian),
        Just(EntryLaw::Rademacher),
        Just(EntryLaw::MomentMatched)
    ]
}

/// Distinct eigenvalues with spacing at least 0.05.
fn spread_spectrum(max_n: usize) -> impl Strategy<Value = Vec<f64>> {
    (prop::collection::vec(0.05f64..0.6, 1..max_n), -2.0f64..0.0).prop_map(|(gaps, start)| {
        let mut v = vec![start];
        for g in gaps {
            let last = *v.last().unwrap();
            v.push(last + g);
        }
        v
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn dense_samples_are_hermitian(a in alpha(), l in law(), n in 2usize..25, seed in any::<u64>(), j in 0.0f64..0.99) {
        let spec = EnsembleSpec::gaussian(a, n).with_law(l).with_spike(j, SpikeVector::Uniform);
        let m = sample_dense(&spec, &SeedPlan::new(seed, 0)).unwrap();
        prop_assert!(m.is_hermitian());
    }

    #[test]
    fn same_seed_same_matrix(a in alpha(), n in 2usize..200, seed in any::<u64>(), idx in any::<u64>()) {
        let p = SeedPlan::new(seed, idx);
        prop_assert_eq!(sample_tridiag(a, n, &p).unwrap(), sample_tridiag(a, n, &p).unwrap());
    }

    #[test]
    fn corner_top_eigenvalue_interlaces(a in alpha(), n in 4usize..400, seed in any::<u64>(), f1 in 0.0f64..1.0, f2 in 0.0f64..1.0) {
        let t = sample_tridiag(a, n, &SeedPlan::new(seed, 0)).unwrap();
        let (lo, hi) = if f1 < f2 { (f1, f2) } else { (f2, f1) };
        let l1 = 1 + (lo * (n - 1) as f64) as usize;
        let l2 = 1 + (hi * (n - 1) as f64) as usize;
        let a1 = largest_eigenvalue(&corner_minor(&t, l1).unwrap());
        let a2 = largest_eigenvalue(&corner_minor(&t, l2).unwrap());
        let full = largest_eigenvalue(&t);
        prop_assert!(a1 <= a2 + 1e-13 && a2 <= full + 1e-13, "{} {} {}", a1, a2, full);
    }

    #[test]
    fn spiked_spectrum_interlaces(a in alpha(), n in 2usize..20, seed in any::<u64>(), j in 0.01f64..0.99) {
        let base = EnsembleSpec::gaussian(a, n);
        let plan = SeedPlan::new(seed, 0);
        let lam = eig_dense(&sample_dense(&base.clone().with_spike(j, SpikeVector::Uniform), &plan).unwrap()).unwrap().values;
        let mu = eig_dense(&sample_dense(&base, &plan).unwrap()).unwrap().values;
        for k in 0..n {
            prop_assert!(lam[k] >= mu[k] - 1e-12);
            if k + 1 < n {
                prop_assert!(mu[k] >= lam[k + 1] - 1e-12);
            }
        }
    }

    #[test]
    fn recursion_identities(n in 3usize..5000) {
        let s = RecursionState::new(n).unwrap();
        let nt2 = n as f64 * s.theta * s.theta;
        for k in 0..n {
            prop_assert!((s.r[k] + s.m[k] - 2.0).abs() < 1e-15);
            prop_assert!((s.m[k] * s.r[k] - k as f64 / nt2).abs() < 1e-14);
        }
    }

    #[test]
    fn log_det_gradient(v in spread_spectrum(30), off in 0.2f64..3.0) {
        let s = Spectrum::from_values(v).unwrap();
        let e = s.lambda1() + off;
        let h = 1e-6 * off;
        let fd = (log_det_stat(&s, e + h).unwrap() - log_det_stat(&s, e - h).unwrap()) / (2.0 * h);
        let exact = s.len() as f64 * inverse_moment(&s, e, 1).unwrap();
        prop_assert!((fd - exact).abs() <= 1e-6 * exact.abs(), "{} {}", fd, exact);
    }

    #[test]
    fn g_derivative_finite_difference(v in spread_spectrum(30), off in 0.1f64..3.0, beta in 0.3f64..2.0) {
        let s = Spectrum::from_values(v).unwrap();
        let z = s.lambda1() + off;
        let h = 1e-6 * off;
        let fd = (g_derivative(&s, beta, z + h, 1).unwrap() - g_derivative(&s, beta, z - h, 1).unwrap()) / (2.0 * h);
        let exact = g_derivative(&s, beta, z, 2).unwrap();
        prop_assert!((fd - exact).abs() <= 1e-6 * exact.abs(), "{} {}", fd, exact);
    }

    #[test]
    fn stieltjes_solves_its_quadratic(re in -5.0f64..5.0, im in 0.01f64..5.0) {
        let z = Complex64::new(re, im);
        let m = stieltjes_sc(z).unwrap();
        prop_assert!((m * m + z * m + 1.0).norm() < 1e-12);
        // Maps the upper half plane to itself.
        prop_assert!(m.im > 0.0);
    }

    #[test]
    fn ks_affine_invariance(xs in prop::collection::vec(-4.0f64..4.0, 1..200), a in 0.1f64..10.0, b in -5.0f64..5.0) {
        let n = ReferenceDistribution::standard_normal();
        let d1 = ks_distance(&xs, &n).unwrap().statistic;
        let moved: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
        let d2 = ks_distance(&moved, &n.affine(a, b).unwrap()).unwrap().statistic;
        prop_assert!((d1 - d2).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn contours_match_residue_oracle(v in spread_spectrum(12), beta in 0.5f64..1.5) {
        let s = Spectrum::from_values(v).unwrap();
        let n = s.len();
        prop_assume!(n >= 2);
        let p = ModelParams::from_beta(Alpha::Complex, n, beta, 0.0).unwrap();
        let exact = f_residue_oracle(&s, &p).unwrap().log_i;
        let o = ContourOptions::default();
        for got in [f_vertical(&s, &p, &o).unwrap().log_i, f_keyhole(&s, &p, &o).unwrap().log_i] {
            prop_assert!((got - exact).abs() <= 1e-6 * exact.abs().max(1.0), "{} vs {}", got, exact);
        }
    }

    #[test]
    fn free_energy_shift_covariance(a in alpha(), n in 3usize..60, seed in any::<u64>(), c in -1.0f64..1.0, b in -1.5f64..1.5) {
        let s = eig_full(&sample_tridiag(a, n, &SeedPlan::new(seed, 0)).unwrap()).unwrap();
        let p = ModelParams::from_b(a, n, b, 0.0).unwrap();
        let o = ContourOptions::default();
        let f0 = f_vertical(&s, &p, &o).unwrap().f;
        let f1 = f_vertical(&s.shifted(c), &p, &o).unwrap().f;
        prop_assert!((f1 - f0 - p.beta * c / 2.0).abs() < 1e-10);
    }

    #[test]
    fn free_energy_convex_and_monotone_at_zero_trace(a in alpha(), n in 3usize..60, seed in any::<u64>(), b1 in 0.3f64..1.7, db in 0.01f64..0.5) {
        let raw = eig_full(&sample_tridiag(a, n, &SeedPlan::new(seed, 0)).unwrap()).unwrap();
        // dF/dβ at β = 0 is tr W/(2N); centring makes it zero, so convexity
        // gives monotonicity for β > 0.
        let mean = raw.values.iter().sum::<f64>() / n as f64;
        let s = raw.shifted(-mean);
        let o = ContourOptions::default();
        let f = |beta: f64| f_vertical(&s, &ModelParams::from_beta(a, n, beta, 0.0).unwrap(), &o).unwrap().f;
        let (f0, f1, f2) = (f(b1), f(b1 + db), f(b1 + 2.0 * db));
        prop_assert!(f1 >= f0 - 1e-12);
        prop_assert!(f2 - 2.0 * f1 + f0 >= -1e-10, "{} {} {}", f0, f1, f2);
    }

    #[test]
    fn vertical_integrand_is_conjugate_symmetric(n in 3usize..40, seed in any::<u64>(), beta in 0.5f64..1.5) {
        let s = eig_full(&sample_tridiag(Alpha::Real, n, &SeedPlan::new(seed, 0)).unwrap()).unwrap();
        let gamma = saddle_point(&s, beta).unwrap();
        let opts = QuadOptions { max_panels: 20_000, ..QuadOptions::default() };
        let j = vertical_line_integral(&s, beta, n as f64 / 2.0, gamma, 40.0, &opts);
        prop_assert!(j.im.abs() < 1e-9 * j.re.abs(), "{}", j);
    }
}
