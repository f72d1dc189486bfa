//! `kmsdf`: SER sweeps, figure presets and a self-test for STBC
//! decode-and-forward relaying over kappa-mu fading.

mod selftest;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kmsdf::sweep::{figure_preset, run_sweep, write_csv, LinkSnrOverrides, PresetDefaults, DEFAULT_SERIES_TERMS};
use kmsdf::{Error, Evaluator, FigureName, LinkParams, ModulationParams, NetworkParams, SweepSpec};
use serde::Deserialize;

#[derive(Parser)]
#[command(
    name = "kmsdf",
    version,
    about = "SER of STBC selective decode-and-forward relaying over kappa-mu fading"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Sweep the SNR of a network and write CSV.
    Sweep(SweepArgs),
    /// Reproduce one of the figure presets, one CSV per curve.
    Figure(FigureArgs),
    /// Run a quick invariant suite.
    Selftest,
}

#[derive(Args, Default)]
struct SweepArgs {
    /// JSON file with any of the sweep settings; flags override it.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    snr_start: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    snr_stop: Option<f64>,
    #[arg(long)]
    snr_step: Option<f64>,
    /// bpsk, bfsk, qpsk, dpsk, M-psk, M-pam or M-qam.
    #[arg(long)]
    modulation: Option<String>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    /// Antennas at source, relay and destination, e.g. 2x1x2.
    #[arg(long, value_name = "NSxNRxND")]
    antennas: Option<String>,
    /// Comma list of series, quadrature, mc_model, mc_physical.
    #[arg(long)]
    evaluators: Option<String>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    partitions: Option<u32>,
    /// Per-index term budget of the series evaluator.
    #[arg(long)]
    series_terms: Option<usize>,
    #[arg(long)]
    kappa_sr: Option<f64>,
    #[arg(long)]
    kappa_sd: Option<f64>,
    #[arg(long)]
    kappa_rd: Option<f64>,
    #[arg(long)]
    mu_sr: Option<f64>,
    #[arg(long)]
    mu_sd: Option<f64>,
    #[arg(long)]
    mu_rd: Option<f64>,
    /// Fixed mean SNR (dB) of the source-relay hop instead of the swept value.
    #[arg(long, allow_hyphen_values = true)]
    snr_sr: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    snr_sd: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    snr_rd: Option<f64>,
    /// Output CSV file (stdout when omitted).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

/// Flat JSON schema of `sweep --config`.
#[derive(Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
struct SweepFile {
    snr_start: Option<f64>,
    snr_stop: Option<f64>,
    snr_step: Option<f64>,
    modulation: Option<String>,
    kappa: Option<f64>,
    mu: Option<f64>,
    antennas: Option<String>,
    evaluators: Option<Vec<String>>,
    trials: Option<u64>,
    seed: Option<u64>,
    partitions: Option<u32>,
    series_terms: Option<usize>,
    kappa_sr: Option<f64>,
    kappa_sd: Option<f64>,
    kappa_rd: Option<f64>,
    mu_sr: Option<f64>,
    mu_sd: Option<f64>,
    mu_rd: Option<f64>,
    snr_sr: Option<f64>,
    snr_sd: Option<f64>,
    snr_rd: Option<f64>,
}

#[derive(Args)]
struct FigureArgs {
    /// fig1 .. fig5
    #[arg(long)]
    name: String,
    /// Directory receiving one CSV per curve.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// JSON file overriding the preset defaults (value sets, SNR grid, evaluators).
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    evaluators: Option<String>,
}

enum Failure {
    Usage(String),
    Numeric(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Convergence(_) | Error::Quadrature { .. } => Failure::Numeric(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("invalid config {}: {e}", path.display())))
}

fn parse_evaluators<S: AsRef<str>>(names: &[S]) -> Result<Vec<Evaluator>, Failure> {
    names
        .iter()
        .map(|s| s.as_ref().trim())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(Failure::from))
        .collect()
}

fn parse_antennas(s: &str) -> Result<[u32; 3], Failure> {
    let parts: Vec<&str> = s.split(['x', 'X']).collect();
    let bad = || usage(format!("antennas must look like NSxNRxND, got '{s}'"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let mut out = [0u32; 3];
    for (o, p) in out.iter_mut().zip(&parts) {
        *o = p.trim().parse().map_err(|_| bad())?;
        if *o == 0 {
            return Err(bad());
        }
    }
    Ok(out)
}

fn build_sweep(args: &SweepArgs) -> Result<SweepSpec, Failure> {
    let file: SweepFile = match &args.config {
        Some(p) => read_json(p)?,
        None => SweepFile::default(),
    };
    let kappa = args.kappa.or(file.kappa).unwrap_or(1.0);
    let mu = args.mu.or(file.mu).unwrap_or(1.0);
    let modulation: ModulationParams = args
        .modulation
        .clone()
        .or(file.modulation)
        .unwrap_or_else(|| "qpsk".into())
        .parse()?;
    let [ns, nr, nd] = parse_antennas(
        &args
            .antennas
            .clone()
            .or(file.antennas)
            .unwrap_or_else(|| "1x1x1".into()),
    )?;
    let link =
        |k: Option<f64>, m: Option<f64>, tx, rx| LinkParams::new(k.unwrap_or(kappa), m.unwrap_or(mu), 1.0, tx, rx);
    let net = NetworkParams {
        sr: link(args.kappa_sr.or(file.kappa_sr), args.mu_sr.or(file.mu_sr), ns, nr)?,
        sd: link(args.kappa_sd.or(file.kappa_sd), args.mu_sd.or(file.mu_sd), ns, nd)?,
        rd: link(args.kappa_rd.or(file.kappa_rd), args.mu_rd.or(file.mu_rd), nr, nd)?,
        modulation,
    };
    let evaluators = match (&args.evaluators, file.evaluators) {
        (Some(list), _) => parse_evaluators(&list.split(',').collect::<Vec<_>>())?,
        (None, Some(list)) => parse_evaluators(&list)?,
        (None, None) => vec![Evaluator::Quadrature],
    };
    let spec = SweepSpec {
        label: String::new(),
        overrides: LinkSnrOverrides {
            sr_db: args.snr_sr.or(file.snr_sr),
            sd_db: args.snr_sd.or(file.snr_sd),
            rd_db: args.snr_rd.or(file.snr_rd),
        },
        evaluators,
        trials: args.trials.or(file.trials).unwrap_or(100_000),
        seed: args.seed.or(file.seed).unwrap_or(1),
        partitions: args.partitions.or(file.partitions).unwrap_or(8),
        series_terms: args.series_terms.or(file.series_terms).unwrap_or(DEFAULT_SERIES_TERMS),
        ..SweepSpec::new(
            net,
            args.snr_start.or(file.snr_start).unwrap_or(0.0),
            args.snr_stop.or(file.snr_stop).unwrap_or(30.0),
            args.snr_step.or(file.snr_step).unwrap_or(2.5),
        )
    };
    spec.validate()?;
    Ok(spec)
}

/// Runs a sweep and writes its CSV; reports rows that failed.
fn emit(spec: &SweepSpec, out: Option<&Path>) -> Result<usize, Failure> {
    let rows = run_sweep(spec)?;
    let io_err = |e: io::Error| usage(format!("cannot write output: {e}"));
    match out {
        Some(path) => {
            let file = fs::File::create(path).map_err(|e| usage(format!("cannot create {}: {e}", path.display())))?;
            let mut w = io::BufWriter::new(file);
            write_csv(&rows, &mut w).map_err(io_err)?;
            w.flush().map_err(io_err)?;
        }
        None => write_csv(&rows, io::stdout().lock()).map_err(io_err)?,
    }
    for r in rows.iter().filter(|r| r.ser.is_none()) {
        eprintln!(
            "kmsdf: {} failed at {} dB: {}",
            r.evaluator,
            r.snr_db,
            r.error.as_deref().unwrap_or("unknown error")
        );
    }
    Ok(rows.iter().filter(|r| r.ser.is_none()).count())
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), Failure> {
    let spec = build_sweep(args)?;
    match emit(&spec, args.out.as_deref())? {
        0 => Ok(()),
        n => Err(Failure::Numeric(format!("{n} sweep rows failed"))),
    }
}

fn cmd_figure(args: &FigureArgs) -> Result<(), Failure> {
    let name: FigureName = args.name.parse()?;
    let mut defaults: PresetDefaults = match &args.config {
        Some(p) => read_json(p)?,
        None => PresetDefaults::default(),
    };
    if let Some(t) = args.trials {
        defaults.trials = t;
    }
    if let Some(s) = args.seed {
        defaults.seed = s;
    }
    if let Some(list) = &args.evaluators {
        defaults.evaluators = parse_evaluators(&list.split(',').collect::<Vec<_>>())?;
    }
    fs::create_dir_all(&args.out).map_err(|e| usage(format!("cannot create {}: {e}", args.out.display())))?;
    let mut failed = 0;
    for spec in figure_preset(name, &defaults)? {
        spec.validate()?;
        let path = args.out.join(format!("{name}_{}.csv", spec.label));
        failed += emit(&spec, Some(&path))?;
        eprintln!("kmsdf: wrote {}", path.display());
    }
    match failed {
        0 => Ok(()),
        n => Err(Failure::Numeric(format!("{n} sweep rows failed"))),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Sweep(a) => cmd_sweep(a),
        Command::Figure(a) => cmd_figure(a),
        Command::Selftest => selftest::run(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("kmsdf: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(msg)) => {
            eprintln!("kmsdf: {msg}");
            ExitCode::from(3)
        }
    }
}
