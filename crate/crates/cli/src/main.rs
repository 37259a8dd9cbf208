//! `ssk-edge`: sample disorder, evaluate free energies, build Tracy–Widom
//! tables and run or re-summarize verification suites.
//!
//! stdout carries only the JSON/CSV payload; diagnostics go to stderr.
//! Exit codes: 0 success, 1 input error, 2 suite or invariant failure.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use ssk_core::ensembles::{
    sample_dense, sample_tridiag, Alpha, EnsembleSpec, EntryLaw, SpikeVector,
};
use ssk_core::experiments::{
    config_sidecar, load_records, run_suite, summarize, ContourChoice, ExperimentConfig,
    MethodOverrides, SuiteSummary,
};
use ssk_core::free_energy::{
    f_keyhole, f_residue_oracle, f_sphere_mc_oracle, f_steepest, f_vertical, fluctuation_stat,
    steepest_y0, ContourOptions, FreeEnergyResult, ModelParams,
};
use ssk_core::limit_laws::tw_table;
use ssk_core::spectral::{eig_dense, eig_full, Spectrum};
use ssk_core::{par, Error, SeedPlan};

#[derive(Parser, Debug)]
#[command(
    name = "ssk-edge",
    version,
    about = "Spherical SK free energy near the critical temperature"
)]
struct Cli {
    /// Worker threads for replica-parallel work (0 = all cores).
    #[arg(long, global = true, env = "SSK_EDGE_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a disorder matrix (tridiagonal model or dense) or its spectrum.
    Sample(SampleArgs),
    /// Free energy of one spectrum, given or sampled.
    FreeEnergy(FreeEnergyArgs),
    /// Empirical Tracy–Widom table.
    TwTable(TwArgs),
    /// Run a suite from a JSON config.
    Experiment(ExperimentArgs),
    /// Fast invariant checks.
    Verify(VerifyArgs),
    /// Rebuild a suite summary from a records file.
    Report(ReportArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Vertical,
    Keyhole,
    Steepest,
    Residue,
    SphereMc,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum LawArg {
    Gaussian,
    Rademacher,
    CustomMomentMatched,
}

impl From<LawArg> for EntryLaw {
    fn from(l: LawArg) -> Self {
        match l {
            LawArg::Gaussian => EntryLaw::Gaussian,
            LawArg::Rademacher => EntryLaw::Rademacher,
            LawArg::CustomMomentMatched => EntryLaw::MomentMatched,
        }
    }
}

#[derive(Args, Debug)]
struct Output {
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Write the payload here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[arg(long, value_parser = parse_alpha)]
    alpha: Alpha,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.0)]
    j: f64,
    #[arg(long, value_enum, default_value = "gaussian")]
    law: LawArg,
    /// Dense matrix instead of the tridiagonal model.
    #[arg(long)]
    dense: bool,
    /// Emit eigenvalues (descending) instead of the matrix.
    #[arg(long)]
    eigenvalues: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct FreeEnergyArgs {
    #[arg(long, value_parser = parse_alpha)]
    alpha: Alpha,
    /// Required unless --spectrum is given.
    #[arg(long)]
    n: Option<usize>,
    #[arg(
        long,
        conflicts_with = "beta",
        required_unless_present = "beta",
        allow_negative_numbers = true
    )]
    b: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    j: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated eigenvalues; sampled from the Gaussian model if absent.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    spectrum: Option<Vec<f64>>,
    /// Contour; by default steepest descent near b = 0, vertical below, keyhole above.
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Sphere Monte Carlo sample count.
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
struct TwArgs {
    #[arg(long, value_parser = parse_alpha)]
    alpha: Alpha,
    /// Matrix size of the internal samples.
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// Records file (overrides the config's output.records).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args, Debug)]
struct ReportArgs {
    records: PathBuf,
    /// Defaults to the sidecar written next to the records.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_alpha(s: &str) -> Result<Alpha, String> {
    let a: u8 = s
        .parse()
        .map_err(|_| format!("alpha must be 1 or 2, got {s}"))?;
    Alpha::from_int(a).map_err(|e| e.to_string())
}

enum Failure {
    Input(String),
    Suite(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

fn emit(payload: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, payload)
            .map_err(|e| Failure::Input(format!("writing {}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(payload.as_bytes())
                .and_then(|_| {
                    if payload.ends_with('\n') {
                        Ok(())
                    } else {
                        stdout.write_all(b"\n")
                    }
                })
                .map_err(|e| Failure::Input(format!("writing stdout: {e}")))
        }
    }
}

fn values_csv(values: &[f64]) -> String {
    let mut s = String::from("value\n");
    for v in values {
        s.push_str(&format!("{v:?}\n"));
    }
    s
}

fn sample(a: &SampleArgs) -> Result<(), Failure> {
    let spec = EnsembleSpec::gaussian(a.alpha, a.n)
        .with_law(a.law.into())
        .with_spike(a.j, SpikeVector::Uniform);
    spec.validate()?;
    let seed = SeedPlan::new(a.seed, 0);
    let dense = a.dense || !spec.has_tridiagonal_model();
    let payload = if dense {
        let m = sample_dense(&spec, &seed)?;
        if a.eigenvalues {
            let s = eig_dense(&m)?;
            match a.output.format {
                Format::Json => serde_json::to_string(
                    &json!({"alpha": a.alpha, "n": a.n, "seed": a.seed, "eigenvalues": s.values}),
                )?,
                Format::Csv => values_csv(&s.values),
            }
        } else {
            match a.output.format {
                Format::Json => serde_json::to_string(
                    &json!({"alpha": a.alpha, "n": a.n, "seed": a.seed, "re": m.re, "im": m.im}),
                )?,
                Format::Csv => {
                    let mut s = String::from("i,j,re,im\n");
                    for i in 0..m.n {
                        for j in 0..m.n {
                            let z = m.get(i, j);
                            s.push_str(&format!("{i},{j},{:?},{:?}\n", z.re, z.im));
                        }
                    }
                    s
                }
            }
        }
    } else {
        let t = sample_tridiag(a.alpha, a.n, &seed)?;
        if a.eigenvalues {
            let s = eig_full(&t)?;
            match a.output.format {
                Format::Json => serde_json::to_string(
                    &json!({"alpha": a.alpha, "n": a.n, "seed": a.seed, "eigenvalues": s.values}),
                )?,
                Format::Csv => values_csv(&s.values),
            }
        } else {
            match a.output.format {
                Format::Json => serde_json::to_string(
                    &json!({"alpha": a.alpha, "n": a.n, "seed": a.seed, "diag": t.diag, "offdiag": t.offdiag}),
                )?,
                Format::Csv => {
                    let mut s = String::from("i,diag,offdiag\n");
                    for (i, d) in t.diag.iter().enumerate() {
                        let off = t
                            .offdiag
                            .get(i)
                            .map(|v| format!("{v:?}"))
                            .unwrap_or_default();
                        s.push_str(&format!("{i},{d:?},{off}\n"));
                    }
                    s
                }
            }
        }
    };
    emit(&payload, a.output.out.as_deref())
}

fn free_energy(a: &FreeEnergyArgs) -> Result<(), Failure> {
    let spectrum = match &a.spectrum {
        Some(v) => {
            if let Some(n) = a.n {
                if n != v.len() {
                    return Err(Failure::Input(format!(
                        "--n {n} does not match the {} given eigenvalues",
                        v.len()
                    )));
                }
            }
            Spectrum::from_values(v.clone())?
        }
        None => {
            let n =
                a.n.ok_or_else(|| Failure::Input("--n is required without --spectrum".into()))?;
            let spec = EnsembleSpec::gaussian(a.alpha, n).with_spike(a.j, SpikeVector::Uniform);
            spec.validate()?;
            let seed = SeedPlan::new(a.seed, 0);
            if a.j > 0.0 {
                eig_dense(&sample_dense(&spec, &seed)?)?
            } else {
                eig_full(&sample_tridiag(a.alpha, n, &seed)?)?
            }
        }
    };
    let n = spectrum.len();
    let params = match (a.b, a.beta) {
        (Some(b), _) => ModelParams::from_b(a.alpha, n, b, a.j)?,
        (None, Some(beta)) => ModelParams::from_beta(a.alpha, n, beta, a.j)?,
        (None, None) => unreachable!("clap requires --b or --beta"),
    };
    let o = ContourOptions::default();
    let method = a
        .method
        .unwrap_or(match MethodOverrides::default().resolve(params.b) {
            ContourChoice::Steepest => MethodArg::Steepest,
            ContourChoice::Vertical => MethodArg::Vertical,
            _ => MethodArg::Keyhole,
        });
    let result: FreeEnergyResult = match method {
        MethodArg::Vertical => f_vertical(&spectrum, &params, &o)?,
        MethodArg::Keyhole => f_keyhole(&spectrum, &params, &o)?,
        MethodArg::Steepest => f_steepest(
            &spectrum,
            &params,
            &o,
            steepest_y0(&spectrum, params.beta).ok(),
        )?,
        MethodArg::Residue => f_residue_oracle(&spectrum, &params)?,
        MethodArg::SphereMc => f_sphere_mc_oracle(&spectrum, &params, a.samples, a.seed)?,
    };
    let stat = if n >= 3 {
        Some(fluctuation_stat(result.f, &params))
    } else {
        None
    };
    let payload = match a.output.format {
        Format::Json => serde_json::to_string(&json!({
            "params": params,
            "result": result,
            "fluctuation_stat": stat,
        }))?,
        Format::Csv => format!(
            "alpha,n,b,beta,j,method,f,log_i,log_i_over_c,quad_error,fluctuation_stat\n{},{},{:?},{:?},{:?},{},{:?},{:?},{:?},{:?},{}\n",
            params.alpha,
            n,
            params.b,
            params.beta,
            params.j_spike,
            result.method,
            result.f,
            result.log_i,
            result.log_i_over_c,
            result.quad_error,
            stat.map(|s| format!("{s:?}")).unwrap_or_default()
        ),
    };
    emit(&payload, a.output.out.as_deref())
}

fn tw(a: &TwArgs) -> Result<(), Failure> {
    let table = tw_table(a.alpha, a.n, a.samples, a.seed)?;
    let payload = match a.format {
        Format::Csv => table.to_csv(),
        Format::Json => serde_json::to_string(&json!({
            "alpha": a.alpha,
            "n_internal": a.n,
            "samples": table.samples(),
            "mean": table.mean(),
            "variance": table.variance(),
        }))?,
    };
    emit(&payload, a.out.as_deref())
}

fn render_summary(s: &SuiteSummary, format: Format) -> String {
    match format {
        Format::Json => s.to_json(),
        Format::Csv => s.to_csv(),
    }
}

fn report_failures(s: &SuiteSummary) -> Result<(), Failure> {
    for c in s.checks.iter().filter(|c| !c.pass) {
        eprintln!(
            "FAIL {}: {} (bounds {:?}..{:?})",
            c.name, c.value, c.low, c.high
        );
    }
    if s.pass {
        Ok(())
    } else {
        Err(Failure::Suite(format!("suite {} failed", s.suite)))
    }
}

fn experiment(a: &ExperimentArgs, threads: Option<usize>) -> Result<(), Failure> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    if let Some(out) = &a.out {
        cfg.output.records = Some(out.clone());
    }
    if let Some(seed) = a.seed {
        cfg.master_seed = seed;
    }
    if threads.is_some() {
        cfg.threads = threads;
    }
    eprintln!("running suite {} (config {})", cfg.suite, cfg.hash());
    let run = run_suite(&cfg)?;
    eprintln!(
        "{} replicas, {} rejected",
        run.summary.replicas, run.summary.rejected
    );
    emit(&render_summary(&run.summary, a.format), None)?;
    report_failures(&run.summary)
}

fn verify(a: &VerifyArgs) -> Result<(), Failure> {
    let report = ssk_core::verify::verify();
    for c in report.failures() {
        eprintln!("FAIL [{}] {}: {}", c.module, c.name, c.detail);
    }
    eprintln!(
        "{} checks, {} failed, {:.1} s",
        report.checks.len(),
        report.failures().count(),
        report.seconds
    );
    let payload = match a.format {
        Format::Json => serde_json::to_string(&report)?,
        Format::Csv => {
            let mut s = String::from("module,name,pass\n");
            for c in &report.checks {
                s.push_str(&format!("{},\"{}\",{}\n", c.module, c.name, c.pass));
            }
            s
        }
    };
    emit(&payload, None)?;
    if report.all_pass() {
        Ok(())
    } else {
        Err(Failure::Suite("invariant checks failed".into()))
    }
}

fn report(a: &ReportArgs) -> Result<(), Failure> {
    let config_path = a
        .config
        .clone()
        .unwrap_or_else(|| config_sidecar(&a.records));
    let cfg = ExperimentConfig::load(&config_path)?;
    let records = load_records(&a.records)?;
    let summary = summarize(&cfg, &records)?;
    emit(&render_summary(&summary, a.format), a.out.as_deref())?;
    report_failures(&summary)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let threads = cli.threads.filter(|&t| t > 0);
    let outcome = par::with_threads(threads, || match &cli.command {
        Command::Sample(a) => sample(a),
        Command::FreeEnergy(a) => free_energy(a),
        Command::TwTable(a) => tw(a),
        Command::Experiment(a) => experiment(a, threads),
        Command::Verify(a) => verify(a),
        Command::Report(a) => report(a),
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Suite(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(2)
        }
    }
}
