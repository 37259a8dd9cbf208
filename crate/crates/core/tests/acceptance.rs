//! Acceptance runs at full size. Plain `main` rather than libtest so the
//! PASS/FAIL lines are always printed; exits nonzero if any criterion fails.

use std::path::PathBuf;
use std::time::Instant;

use ssk_core::ensembles::{sample_tridiag, Alpha, EnsembleSpec};
use ssk_core::experiments::{run_suite, ExperimentConfig, Suite, SuiteRun};
use ssk_core::free_energy::{
    f_keyhole, f_residue_oracle, f_sphere_mc_oracle, f_vertical, ContourOptions, ModelParams,
};
use ssk_core::par::map_indexed;
use ssk_core::spectral::{eig_full, log_det_recursion, log_det_stat, sigma_bar, Spectrum};
use ssk_core::SeedPlan;

const MASTER: u64 = 1;

struct Outcome {
    pass: bool,
    detail: String,
}

fn spectrum(alpha: Alpha, n: usize, tag: u64, k: u64) -> Spectrum {
    eig_full(&sample_tridiag(alpha, n, &SeedPlan::new(MASTER ^ (tag << 32), k)).unwrap()).unwrap()
}

/// β spread over [0.5, 1.5) by the golden-ratio sequence.
fn beta_at(k: usize) -> f64 {
    0.5 + (k as f64 * 0.618_033_988_749_895).fract()
}

fn tw_cache() -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("tw-cache")
}

fn suite(s: Suite, alpha: Alpha, n: usize, m: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(s, EnsembleSpec::gaussian(alpha, n), m, MASTER);
    c.params.tw.cache = Some(tw_cache());
    c
}

fn failed_checks(run: &SuiteRun) -> String {
    run.summary
        .checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| format!("{} = {:.4}", c.name, c.value))
        .collect::<Vec<_>>()
        .join("; ")
}

fn ks_of(run: &SuiteRun, cell: &str) -> f64 {
    run.summary
        .rows
        .iter()
        .find(|r| r.cell == cell)
        .and_then(|r| r.ks)
        .unwrap_or(f64::NAN)
}

fn c1() -> Outcome {
    let o = ContourOptions::default();
    let mut worst = 0.0f64;
    for n in [2, 5, 10, 20, 30] {
        let errs = map_indexed(100, |k| {
            let s = spectrum(Alpha::Complex, n, 1, k as u64);
            let p = ModelParams::from_beta(Alpha::Complex, n, beta_at(k), 0.0).unwrap();
            let exact = f_residue_oracle(&s, &p).unwrap().log_i;
            [f_vertical(&s, &p, &o), f_keyhole(&s, &p, &o)]
                .into_iter()
                .map(|r| (r.unwrap().log_i - exact).abs() / exact.abs())
                .fold(0.0, f64::max)
        });
        worst = errs.into_iter().fold(worst, f64::max);
    }
    Outcome {
        pass: worst < 1e-6,
        detail: format!("max relative error on log I {worst:.2e} (limit 1e-6)"),
    }
}

fn c2() -> Outcome {
    let o = ContourOptions::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [4, 8, 16] {
        let hits = (0..50)
            .filter(|&k| {
                let s = spectrum(Alpha::Real, n, 2, k as u64);
                let p = ModelParams::from_beta(Alpha::Real, n, beta_at(k), 0.0).unwrap();
                let seed = MASTER ^ (2 << 32) ^ ((n as u64) << 16) ^ k as u64;
                let mc = f_sphere_mc_oracle(&s, &p, 1_000_000, seed).unwrap();
                let band = 3.0 * mc.quad_error;
                [f_vertical(&s, &p, &o), f_keyhole(&s, &p, &o)]
                    .into_iter()
                    .all(|r| (r.unwrap().log_i - mc.log_i).abs() <= band)
            })
            .count();
        pass &= hits * 100 >= 95 * 50;
        parts.push(format!("N={n}: {hits}/50"));
    }
    Outcome {
        pass,
        detail: format!("inside 3σ band: {} (need ≥ 95%)", parts.join(", ")),
    }
}

fn c3() -> Outcome {
    let mut c = suite(Suite::Transition, Alpha::Real, 2000, 1000);
    c.n_grid = vec![500, 2000, 8000];
    c.b_grid = vec![-1.0];
    let run = run_suite(&c).unwrap();
    let ks: Vec<f64> = [500, 2000, 8000]
        .iter()
        .map(|n| ks_of(&run, &format!("a2/n{n}/b-1/j0")))
        .collect();
    let trend = ks.windows(2).all(|w| w[1] <= w[0]);
    Outcome {
        pass: ks[1] < 0.08 && trend,
        detail: format!(
            "KS at N=500/2000/8000 = {:.4}/{:.4}/{:.4}; need N=2000 < 0.08 and non-increasing",
            ks[0], ks[1], ks[2]
        ),
    }
}

fn c4() -> Outcome {
    let mut c = suite(Suite::Transition, Alpha::Real, 2000, 1000);
    c.b_grid = vec![2.0];
    let run = run_suite(&c).unwrap();
    let checks: Vec<String> = run
        .summary
        .checks
        .iter()
        .map(|c| format!("{} = {:.4}", c.name, c.value))
        .collect();
    Outcome {
        pass: run.summary.pass,
        detail: checks.join("; "),
    }
}

fn c5() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (s, name) in [(Suite::Clt1, "clt1"), (Suite::Clt2, "clt2")] {
        let mut c = suite(s, Alpha::Real, 4000, 2000);
        c.params.alphas = vec![Alpha::Complex, Alpha::Real];
        c.params.spike_values = vec![0.0, 0.5];
        let run = run_suite(&c).unwrap();
        for r in &run.summary.rows {
            let ks = r.ks.unwrap_or(f64::NAN);
            pass &= ks < 0.08;
            parts.push(format!("{name} {} KS {ks:.4}", r.cell));
        }
    }
    Outcome {
        pass,
        detail: format!("{} (need all < 0.08)", parts.join(", ")),
    }
}

fn suite_outcome(run: SuiteRun) -> Outcome {
    let detail = if run.summary.pass {
        run.summary
            .checks
            .iter()
            .map(|c| format!("{} = {:.4}", c.name, c.value))
            .collect::<Vec<_>>()
            .join("; ")
    } else {
        format!("failed: {}", failed_checks(&run))
    };
    Outcome {
        pass: run.summary.pass,
        detail,
    }
}

fn c6() -> Outcome {
    suite_outcome(run_suite(&suite(Suite::Independence, Alpha::Real, 4000, 4000)).unwrap())
}

fn c7() -> Outcome {
    let mut c = suite(Suite::CornerAccuracy, Alpha::Real, 100_000, 100);
    c.params.corner_multipliers = vec![2.0, 5.0, 10.0, 20.0];
    suite_outcome(run_suite(&c).unwrap())
}

fn c8() -> Outcome {
    let n = 4000;
    let diffs = map_indexed(200, |k| {
        let t =
            sample_tridiag(Alpha::Real, n, &SeedPlan::new(MASTER ^ (8 << 32), k as u64)).unwrap();
        let rec = log_det_recursion(&t, Alpha::Real).unwrap();
        let s = eig_full(&t).unwrap();
        rec.shifted - log_det_stat(&s, rec.point).unwrap()
    });
    let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
    let sd =
        (diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (diffs.len() - 1) as f64).sqrt();
    let limit = 3.0 * sigma_bar(n).powi(2);
    Outcome {
        pass: sd <= limit,
        detail: format!(
            "sd of recursion − eigenvalue route {sd:.4} (limit 3σ̄² = {limit:.2}), mean {mean:.4}"
        ),
    }
}

fn c9() -> Outcome {
    let mut c = suite(Suite::Universality, Alpha::Real, 2000, 1000);
    c.b_grid = vec![-1.0];
    suite_outcome(run_suite(&c).unwrap())
}

fn c10() -> Outcome {
    let report = ssk_core::verify::verify();
    let failed: Vec<String> = report
        .failures()
        .map(|c| format!("[{}] {}: {}", c.module, c.name, c.detail))
        .collect();
    Outcome {
        pass: failed.is_empty() && report.seconds < 60.0,
        detail: format!(
            "{} checks, {} failed, {:.1} s (limit 60 s){}",
            report.checks.len(),
            failed.len(),
            report.seconds,
            if failed.is_empty() {
                String::new()
            } else {
                format!(": {}", failed.join("; "))
            }
        ),
    }
}

type Criterion = (u32, &'static str, f64, fn() -> Outcome);

const CRITERIA: [Criterion; 10] = [
    (1, "contours vs residue oracle", 60.0, c1),
    (2, "contours vs sphere Monte Carlo", 600.0, c2),
    (3, "negative-critical Gaussian limit", 1800.0, c3),
    (4, "positive-critical mixture", 1800.0, c4),
    (5, "CLT1/CLT2 with and without spike", 1800.0, c5),
    (6, "independence of ξ₁ and ξ₂", 2700.0, c6),
    (7, "corner-minor accuracy", 600.0, c7),
    (8, "log-determinant recursion", 600.0, c8),
    (9, "universality across entry laws", 3600.0, c9),
    (10, "invariant suite", 60.0, c10),
];

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        for (k, name, _, _) in CRITERIA {
            println!("criterion_{k}: test  # {name}");
        }
        return;
    }
    // Positional arguments select criteria by number.
    let wanted: Vec<u32> = args.iter().filter_map(|a| a.parse().ok()).collect();
    let mut failures = 0;
    for (k, name, budget, f) in CRITERIA {
        if !wanted.is_empty() && !wanted.contains(&k) {
            continue;
        }
        let t = Instant::now();
        let out = f();
        let secs = t.elapsed().as_secs_f64();
        let pass = out.pass && secs < budget;
        failures += usize::from(!pass);
        println!(
            "{} criterion {k} ({name}): {} [{secs:.1} s, budget {budget:.0} s]",
            if pass { "PASS" } else { "FAIL" },
            out.detail
        );
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
