//! `ifeq` command line: synthesize test signals, compute sharpened TF
//! representations and compare methods.
//!
//! Exit codes: 0 success, 1 a `--check` failed, 2 usage or input error,
//! 3 numerical failure.

mod checks;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use ifeq::bench::{bench, evaluate, MethodReport};
use ifeq::config::RunConfig;
use ifeq::estimators::FieldKind;
use ifeq::io::{
    format_report_table, read_descriptors, read_signal, write_descriptors, write_json,
    write_matrix_csv, write_pgm, write_report_csv, write_signal_csv, DescriptorFile, TfrMeta,
    DEFAULT_FLOOR_DB,
};
use ifeq::methods::{MethodRegistry, TfMethod};
use ifeq::presets::{synth, Preset, PresetParams};
use ifeq::signal::Signal;

#[derive(Parser)]
#[command(name = "ifeq", version, about = "IF-equation time-frequency analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a preset signal and its ground-truth descriptors.
    Synth(SynthArgs),
    /// Compute one TF representation of a signal file.
    Tfr(TfrArgs),
    /// Run every method on a signal and score it against its descriptors.
    Compare(CompareArgs),
    /// Time the methods on a signal (median of repeated runs).
    Bench(BenchArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    preset: Preset,
    /// Chirp start frequency, Hz (chirp preset only).
    #[arg(long)]
    b: Option<f64>,
    /// Chirp rate, Hz/s (chirp preset only).
    #[arg(long)]
    c: Option<f64>,
    /// SNR in dB of the noisy preset.
    #[arg(long)]
    snr: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1024.0)]
    fs: f64,
    #[arg(long, default_value_t = 1.0)]
    duration: f64,
    /// Signal CSV; defaults to `<preset>.csv`.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Descriptor JSON; defaults to the signal path with a `.json` extension.
    #[arg(long)]
    descriptors: Option<PathBuf>,
}

/// Analysis settings shared by `tfr`, `compare` and `bench`. Flags override
/// the config file, which overrides the defaults.
#[derive(Args)]
struct AnalysisArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Gaussian window width, s.
    #[arg(long)]
    sigma: Option<f64>,
    /// Mask threshold relative to the STFT peak.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    n_fft: Option<usize>,
    /// MSST iteration count.
    #[arg(long)]
    iters: Option<usize>,
    /// Fixed-point gain.
    #[arg(long, allow_hyphen_values = true)]
    tau: Option<f64>,
    /// Levenberg-Marquardt damping.
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Residual of the rm-if methods.
    #[arg(long)]
    residual: Option<Residual>,
    /// Sample rate for CSV files without a usable time column, Hz.
    #[arg(long)]
    fs: Option<f64>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Residual {
    HRe,
    HSet,
}

impl AnalysisArgs {
    fn config(&self, method: Option<&str>) -> anyhow::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p).map_err(usage)?,
            None => RunConfig::default(),
        };
        if let Some(m) = method {
            cfg.method = m.to_string();
        }
        if let Some(v) = self.sigma {
            cfg.sigma = v;
        }
        if let Some(v) = self.gamma {
            cfg.gamma = v;
        }
        if self.n_fft.is_some() {
            cfg.n_fft = self.n_fft;
        }
        if let Some(v) = self.iters {
            cfg.msst_iters = v;
        }
        if self.tau.is_some() {
            cfg.solver.tau = self.tau;
        }
        if let Some(v) = self.rho {
            cfg.solver.rho = v;
        }
        if let Some(v) = self.max_iter {
            cfg.solver.max_iter = v;
        }
        if let Some(r) = self.residual {
            cfg.rm_residual = match r {
                Residual::HRe => FieldKind::HRe,
                Residual::HSet => FieldKind::HSet,
            };
        }
        cfg.validate().map_err(usage)?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct TfrArgs {
    /// Signal file (CSV or WAV).
    input: PathBuf,
    #[arg(long)]
    method: Option<String>,
    #[command(flatten)]
    analysis: AnalysisArgs,
    /// Output directory; defaults to `tfr-<method>`.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Also write a log-magnitude PGM image.
    #[arg(long)]
    pgm: bool,
    /// PGM floor relative to the peak, dB.
    #[arg(long, default_value_t = DEFAULT_FLOOR_DB, allow_hyphen_values = true)]
    floor_db: f64,
}

#[derive(Args)]
struct CompareArgs {
    /// Signal file (CSV or WAV).
    input: PathBuf,
    /// Descriptor JSON; defaults to the signal path with a `.json` extension.
    #[arg(long)]
    descriptors: Option<PathBuf>,
    /// Comma-separated method names; all by default.
    #[arg(long, value_delimiter = ',')]
    methods: Vec<String>,
    #[command(flatten)]
    analysis: AnalysisArgs,
    /// Output directory for `report.csv` and the per-method images.
    #[arg(short, long, default_value = "compare")]
    output: PathBuf,
    /// Assert the expected orderings; exit 1 on a violation.
    #[arg(long)]
    check: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Signal file (CSV or WAV).
    input: PathBuf,
    #[arg(long)]
    descriptors: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    methods: Vec<String>,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    #[command(flatten)]
    analysis: AnalysisArgs,
    /// Report CSV path.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Assert the timing orderings; exit 1 on a violation.
    #[arg(long)]
    check: bool,
}

/// Error tagged with the exit code it maps to.
#[derive(Debug)]
struct Failure {
    code: u8,
    err: anyhow::Error,
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.err)
    }
}

impl std::error::Error for Failure {}

fn code_of(e: &ifeq::Error) -> u8 {
    match e {
        ifeq::Error::Numerical(_) | ifeq::Error::EmptyField(_) => 3,
        _ => 2,
    }
}

fn usage(e: ifeq::Error) -> anyhow::Error {
    let code = code_of(&e);
    Failure { code, err: e.into() }.into()
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(f) = cause.downcast_ref::<Failure>() {
            return f.code;
        }
        if let Some(e) = cause.downcast_ref::<ifeq::Error>() {
            return code_of(e);
        }
    }
    2
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    let result = match cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Tfr(a) => cmd_tfr(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn init_threads() -> anyhow::Result<()> {
    let Ok(v) = std::env::var("IFEQ_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .with_context(|| format!("IFEQ_THREADS must be a non-negative integer, got {v:?}"))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn sibling_json(path: &Path) -> PathBuf {
    path.with_extension("json")
}

fn cmd_synth(a: SynthArgs) -> anyhow::Result<u8> {
    if (a.b.is_some() || a.c.is_some()) && a.preset != Preset::Chirp {
        return Err(usage(ifeq::Error::InvalidArgument(
            "--b and --c only apply to the chirp preset".into(),
        )));
    }
    if (a.snr.is_some() || a.seed.is_some()) && a.preset != Preset::Figure1Noisy {
        log::warn!("--snr and --seed only affect the figure1-noisy preset");
    }
    let defaults = PresetParams::default();
    let params = PresetParams {
        fs: a.fs,
        duration: a.duration,
        snr_db: a.snr.unwrap_or(defaults.snr_db),
        seed: a.seed.unwrap_or(defaults.seed),
        chirp_b: a.b.unwrap_or(defaults.chirp_b),
        chirp_c: a.c.unwrap_or(defaults.chirp_c),
        ..defaults
    };
    let (s, noise) = synth(a.preset, &params).map_err(usage)?;
    let out = a.output.unwrap_or_else(|| PathBuf::from(format!("{}.csv", a.preset)));
    let desc = a.descriptors.unwrap_or_else(|| sibling_json(&out));
    write_signal_csv(&out, &s).with_context(|| format!("writing {}", out.display()))?;
    write_descriptors(&desc, &DescriptorFile::from_signal(&s, noise))
        .with_context(|| format!("writing {}", desc.display()))?;
    println!(
        "wrote {} ({} samples, {} components) and {}",
        out.display(),
        s.len(),
        s.descriptors().len(),
        desc.display()
    );
    Ok(0)
}

fn cmd_tfr(a: TfrArgs) -> anyhow::Result<u8> {
    let cfg = a.analysis.config(a.method.as_deref())?;
    let registry = MethodRegistry::builtin();
    let method = registry.get(&cfg.method).map_err(usage)?;
    let s = read_signal(&a.input, a.analysis.fs).map_err(usage)?;
    let dir = a.output.unwrap_or_else(|| PathBuf::from(format!("tfr-{}", method.name())));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let out = match method.run(&s, &cfg) {
        Ok(out) => out,
        Err(e) => {
            let code = code_of(&e);
            if code == 3 {
                fs::write(dir.join("diagnostics.txt"), format!("error {e}\n"))?;
            }
            return Err(Failure { code, err: e.into() }.into());
        }
    };
    let stem = format!("tfr_{}", method.name());
    write_matrix_csv(&dir.join(format!("{stem}.csv")), &out.values)?;
    write_json(&dir.join("meta.json"), &TfrMeta::for_tfr(method.name(), &out))?;
    fs::write(dir.join("diagnostics.txt"), out.diagnostics.render())?;
    if a.pgm {
        write_pgm(&dir.join(format!("{stem}.pgm")), &out.values, a.floor_db)?;
    }
    println!(
        "{}: {} x {} written to {} (non-converged {}, dropped {})",
        method.name(),
        out.grid.n_bins,
        out.grid.n_frames,
        dir.display(),
        out.diagnostics.non_converged,
        out.diagnostics.dropped
    );
    Ok(0)
}

fn load_scored(input: &Path, descriptors: Option<&Path>, fs: Option<f64>) -> anyhow::Result<(Signal, DescriptorFile)> {
    let s = read_signal(input, fs).map_err(usage)?;
    let path = descriptors.map(Path::to_path_buf).unwrap_or_else(|| sibling_json(input));
    let d = read_descriptors(&path)
        .map_err(usage)
        .with_context(|| format!("descriptor file {}", path.display()))?;
    Ok((s.with_descriptors(d.descriptors()), d))
}

fn select<'a>(registry: &'a MethodRegistry, names: &[String]) -> anyhow::Result<Vec<&'a dyn TfMethod>> {
    if names.is_empty() {
        return Ok(registry.iter().collect());
    }
    names
        .iter()
        .map(|n| registry.get(n).map_err(usage))
        .collect()
}

fn write_reports(path: &Path, reports: &[MethodReport]) -> anyhow::Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    write_report_csv(&mut f, reports)?;
    f.flush()?;
    Ok(())
}

fn report_checks(results: &[(String, bool)]) -> u8 {
    let mut code = 0;
    for (what, ok) in results {
        println!("check {}: {what}", if *ok { "PASS" } else { "FAIL" });
        if !ok {
            code = 1;
        }
    }
    code
}

fn cmd_compare(a: CompareArgs) -> anyhow::Result<u8> {
    let cfg = a.analysis.config(None)?;
    let (s, desc) = load_scored(&a.input, a.descriptors.as_deref(), a.analysis.fs)?;
    let registry = MethodRegistry::builtin();
    let methods = select(&registry, &a.methods)?;
    fs::create_dir_all(&a.output).with_context(|| format!("creating {}", a.output.display()))?;
    let mut reports = Vec::with_capacity(methods.len());
    for m in &methods {
        let start = Instant::now();
        let result = m.run(&s, &cfg);
        let wall = start.elapsed().as_secs_f64();
        let report = match result {
            Ok(out) => {
                write_pgm(&a.output.join(format!("{}.pgm", m.name())), &out.values, DEFAULT_FLOOR_DB)?;
                evaluate(m.name(), &out, &s, &cfg, wall)
                    .unwrap_or_else(|e| MethodReport::failed(m.name(), wall, e.to_string()))
            }
            Err(e) => {
                log::warn!("{} failed: {e}", m.name());
                MethodReport::failed(m.name(), wall, e.to_string())
            }
        };
        reports.push(report);
    }
    write_reports(&a.output.join("report.csv"), &reports)?;
    print!("{}", format_report_table(&reports));
    for r in reports.iter().filter(|r| r.error.is_some()) {
        println!("{} failed: {}", r.method, r.error.as_deref().unwrap_or_default());
    }
    if reports.iter().all(|r| r.error.is_some()) {
        return Err(Failure {
            code: 3,
            err: anyhow!("every method failed"),
        }
        .into());
    }
    if !a.check {
        return Ok(0);
    }
    let results = if desc.noise.is_some() {
        checks::noisy(&reports)
    } else {
        checks::concentration(&reports)
    };
    Ok(report_checks(&results))
}

fn cmd_bench(a: BenchArgs) -> anyhow::Result<u8> {
    let cfg = a.analysis.config(None)?;
    let (s, _) = load_scored(&a.input, a.descriptors.as_deref(), a.analysis.fs)?;
    let registry = MethodRegistry::builtin();
    let methods = select(&registry, &a.methods)?;
    let reports = bench(&methods, &s, &cfg, a.repeats).map_err(usage)?;
    if let Some(path) = &a.output {
        write_reports(path, &reports)?;
    }
    print!("{}", format_report_table(&reports));
    if !a.check {
        return Ok(0);
    }
    Ok(report_checks(&checks::timing(&reports)))
}
