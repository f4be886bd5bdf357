//! Command-line front end for the `rabi-lattice` solvers.
//!
//! Exit codes: 0 on success, 1 when a solver fails, 2 for bad configuration
//! or command-line input.

pub mod config;
pub mod output;
pub mod reproduce;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser};
use rabi_lattice::analysis::{
    self, derivative_peak, fit_chi_scaling, fit_critical_line, numerical_derivative, DerivativePeak, ScanOptions,
};
use rabi_lattice::dmrg::{read_checkpoint, run_dmrg, write_checkpoint};
use rabi_lattice::ionplan::feasibility_report;
use rabi_lattice::{exact, perturbative, variational, FitResult, Method, ScanTable};
use serde::Serialize;

use config::{parse_range, ConfigError, OutputFormat, RunConfig, Subcommand};
use output::{emit, json, write_atomic};

pub const JOBS_ENV: &str = "RABI_LATTICE_JOBS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Solver(#[from] rabi_lattice::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    BudgetRefused(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::BudgetRefused(_) => 2,
            CliError::Solver(_) | CliError::Io { .. } | CliError::Failed(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "rabi-lattice", version, about = "Ground-state solvers for the Ising-Rabi lattice")]
pub struct Cli {
    /// TOML run configuration; command-line flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (stdout when absent).
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    /// Worker threads for scans.
    #[arg(long, global = true, env = JOBS_ENV)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Subcommand)]
pub enum Command {
    /// Exact diagonalization of a short chain.
    Ed(EdArgs),
    /// Closed-form perturbative energies and their crossing.
    Pt(PointArgs),
    /// Born-Oppenheimer mean field.
    Bo(PointArgs),
    /// Silbey-Harris variational ansatz.
    Sh(PointArgs),
    /// Two-site DMRG ground state.
    Dmrg(DmrgArgs),
    /// Order parameter over a (delta, g) grid, as CSV.
    Scan(ScanArgs),
    /// Power-law fit of the dn/dg peak positions from a scan CSV.
    FitCritical(FitArgs),
    /// Linear fit of 1/chi at the dn/dg peaks from a scan CSV.
    FitChi(FitArgs),
    /// Trapped-ion microtrap parameters and feasibility checks.
    IonPlan(IonArgs),
    /// Datasets behind the figures and the ion-trap table.
    Reproduce(ReproduceArgs),
}

impl Command {
    fn kind(&self) -> Option<Subcommand> {
        Some(match self {
            Command::Ed(_) => Subcommand::Ed,
            Command::Pt(_) => Subcommand::Pt,
            Command::Bo(_) => Subcommand::Bo,
            Command::Sh(_) => Subcommand::Sh,
            Command::Dmrg(_) => Subcommand::Dmrg,
            Command::Scan(_) => Subcommand::Scan,
            Command::FitCritical(_) => Subcommand::FitCritical,
            Command::FitChi(_) => Subcommand::FitChi,
            Command::IonPlan(_) => Subcommand::IonPlan,
            Command::Reproduce(_) => return None,
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct ChainArgs {
    #[arg(long)]
    pub n_sites: Option<usize>,
    #[arg(long)]
    pub j_ising: Option<f64>,
    #[arg(long)]
    pub n_fock: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct PointArgs {
    #[command(flatten)]
    pub chain: ChainArgs,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub g: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct EdArgs {
    #[command(flatten)]
    pub point: PointArgs,
    /// Number of lowest levels to report.
    #[arg(long, default_value_t = 2)]
    pub levels: usize,
}

#[derive(Debug, Clone, Args)]
pub struct DmrgArgs {
    #[command(flatten)]
    pub point: PointArgs,
    #[arg(long)]
    pub max_bond: Option<usize>,
    #[arg(long)]
    pub sweeps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sweep in the full local space instead of one gauge sector.
    #[arg(long)]
    pub full_space: bool,
    /// Write the final MPS here.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Start from a saved MPS instead of a random state.
    #[arg(long)]
    pub init: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub chain: ChainArgs,
    #[arg(long, value_parser = parse_method)]
    pub method: Option<Method>,
    /// Comma-separated delta values.
    #[arg(long, value_delimiter = ',')]
    pub delta: Vec<f64>,
    /// Coupling grid as lo:hi:step.
    #[arg(long)]
    pub g: Option<String>,
    #[arg(long)]
    pub max_bond: Option<usize>,
    /// Single forward warm-start chain for DMRG scans.
    #[arg(long)]
    pub one_way: bool,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// Scan CSV produced by `scan`.
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct IonArgs {
    /// Also write the text summary here (always printed to stderr).
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ReproduceArgs {
    #[arg(value_enum)]
    pub figure: reproduce::Figure,
    /// Directory for the datasets.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Acknowledge the multi-hour DMRG budget.
    #[arg(long)]
    pub long_run: bool,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: rabi_lattice::Error| e.to_string())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// Merges the config file (if any) with command-line overrides.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(kind) = cli.command.kind() {
        cfg.subcommand = Some(kind);
    }
    if cli.jobs.is_some() {
        cfg.jobs = cli.jobs;
    }
    if cli.output.is_some() {
        cfg.output.path.clone_from(&cli.output);
    }
    if cli.format.is_some() {
        cfg.output.format = cli.format;
    }
    let chain = |cfg: &mut RunConfig, c: &ChainArgs| {
        if let Some(v) = c.n_sites {
            cfg.model.n_sites = v;
        }
        if let Some(v) = c.j_ising {
            cfg.model.j_ising = v;
        }
        if let Some(v) = c.n_fock {
            cfg.model.n_fock = v;
        }
    };
    let point = |cfg: &mut RunConfig, a: &PointArgs| {
        chain(cfg, &a.chain);
        if let Some(v) = a.delta {
            cfg.model.delta = v;
        }
        if let Some(v) = a.g {
            cfg.model.g = v;
        }
    };
    match &cli.command {
        Command::Ed(a) => point(&mut cfg, &a.point),
        Command::Pt(a) | Command::Bo(a) | Command::Sh(a) => point(&mut cfg, a),
        Command::Dmrg(a) => {
            point(&mut cfg, &a.point);
            let mut d = cfg.dmrg_config();
            if let Some(v) = a.max_bond {
                d.max_bond = v;
            }
            if let Some(v) = a.sweeps {
                d.n_sweeps = v;
            }
            if let Some(v) = a.seed {
                d.seed = v;
            }
            if a.full_space {
                d.restrict_gauge_sector = false;
            }
            cfg.dmrg = Some(d);
            if a.checkpoint.is_some() {
                cfg.output.checkpoint.clone_from(&a.checkpoint);
            }
        }
        Command::Scan(a) => {
            chain(&mut cfg, &a.chain);
            if let Some(m) = a.method {
                cfg.scan.method = m;
            }
            if !a.delta.is_empty() {
                cfg.scan.deltas.clone_from(&a.delta);
            }
            if let Some(g) = &a.g {
                let (lo, hi, step) = parse_range(g).map_err(|e| ConfigError(format!("--g: {e}")))?;
                cfg.scan.g_lo = lo;
                cfg.scan.g_hi = hi;
                cfg.scan.g_step = step;
            }
            if let Some(v) = a.max_bond {
                cfg.dmrg = Some(rabi_lattice::DmrgConfig { max_bond: v, ..cfg.dmrg_config() });
            }
            if a.one_way {
                cfg.scan.bidirectional = false;
            }
        }
        Command::FitCritical(_) | Command::FitChi(_) | Command::IonPlan(_) | Command::Reproduce(_) => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Serialize)]
struct BoOutput {
    alpha0: f64,
    n: f64,
    /// Per-site energy in the thermodynamic limit.
    energy: f64,
    critical_g: f64,
}

#[derive(Debug, Serialize)]
struct DmrgOutput {
    energy: f64,
    n: f64,
    converged: bool,
    sweeps: usize,
    max_discarded_weight: f64,
    respects_cutoff: bool,
}

#[derive(Debug, Serialize)]
struct CriticalFitOutput {
    peaks: Vec<DerivativePeak>,
    /// `ln g_peak = slope · ln δ + intercept`.
    fit: FitResult,
}

#[derive(Debug, Serialize)]
struct ChiFitOutput {
    /// `(δ, χ_c)` at each peak.
    points: Vec<(f64, f64)>,
    /// `1/χ_c = slope · δ + intercept`.
    fit: FitResult,
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = resolve_config(cli)?;
    let out = cfg.output.path.as_deref();
    let jobs = cfg.jobs.unwrap_or(0);
    match &cli.command {
        Command::Ed(a) => {
            let p = cfg.model.params()?;
            emit(out, &json(&exact::ed_summary(&p, a.levels)?))
        }
        Command::Pt(_) => {
            let p = cfg.model.params()?;
            emit(out, &json(&perturbative::perturbative_energies(&p)?))
        }
        Command::Bo(_) => {
            let p = cfg.model.params()?;
            let r = variational::minimize_bo(&p)?;
            let o = BoOutput { alpha0: r.alpha0, n: r.n, energy: r.energy_per_site, critical_g: r.critical_g };
            emit(out, &json(&o))
        }
        Command::Sh(_) => {
            let p = cfg.model.params()?;
            emit(out, &json(&variational::minimize_sh(&p)?))
        }
        Command::Dmrg(a) => run_dmrg_command(&cfg, a.init.as_deref()),
        Command::Scan(_) => {
            let p = cfg.model.params()?;
            let s = &cfg.scan;
            let opts = ScanOptions { dmrg: cfg.dmrg_config(), jobs, bidirectional: s.bidirectional };
            let table = analysis::scan_order_parameter(&s.deltas, (s.g_lo, s.g_hi, s.g_step), &p, s.method, &opts)?;
            let table = numerical_derivative(&table)?;
            match cfg.output.format.unwrap_or(OutputFormat::Csv) {
                OutputFormat::Csv => emit(out, &table.to_csv()),
                OutputFormat::Json => emit(out, &json(&table)),
            }
        }
        Command::FitCritical(a) => {
            let peaks = scan_peaks(&a.input)?;
            let pts: Vec<(f64, f64)> = peaks.iter().map(|k| (k.delta, k.g_peak)).collect();
            let fit = fit_critical_line(&pts)?;
            emit(out, &json(&CriticalFitOutput { peaks, fit }))
        }
        Command::FitChi(a) => {
            let peaks = scan_peaks(&a.input)?;
            let mut points = Vec::new();
            for k in &peaks {
                let chi = k
                    .chi
                    .ok_or_else(|| CliError::Failed(format!("no correlation length at the delta = {} peak", k.delta)))?;
                points.push((k.delta, chi));
            }
            let fit = fit_chi_scaling(&points)?;
            emit(out, &json(&ChiFitOutput { points, fit }))
        }
        Command::IonPlan(a) => {
            let spec = cfg.ion.clone().unwrap_or_else(rabi_lattice::IonChainSpec::beryllium_reference);
            let report = feasibility_report(&spec)?;
            let text = report.summary_text();
            eprint!("{text}");
            if let Some(p) = &a.summary {
                write_atomic(p, text.as_bytes())?;
            }
            emit(out, &json(&report))
        }
        Command::Reproduce(a) => reproduce::reproduce(a.figure, &a.out_dir, a.long_run, jobs),
    }
}

fn run_dmrg_command(cfg: &RunConfig, init: Option<&Path>) -> Result<(), CliError> {
    let p = cfg.model.params()?;
    let dcfg = cfg.dmrg_config();
    let start = match init {
        Some(path) => {
            let io = |source| CliError::Io { path: path.to_path_buf(), source };
            Some(read_checkpoint(BufReader::new(File::open(path).map_err(io)?)).map_err(io)?)
        }
        None => None,
    };
    let run = run_dmrg(&p, &dcfg, start.as_ref())?;
    let respects_cutoff = run.respects_cutoff(&p);
    let o = DmrgOutput {
        energy: run.energy,
        n: run.observables.n,
        converged: run.converged,
        sweeps: run.sweeps,
        max_discarded_weight: run.max_discarded_weight,
        respects_cutoff,
    };
    if let Some(path) = &cfg.output.checkpoint {
        let mut bytes = Vec::new();
        write_checkpoint(&run.state, BufWriter::new(&mut bytes))
            .map_err(|source| CliError::Io { path: path.clone(), source })?;
        write_atomic(path, &bytes)?;
    }
    emit(cfg.output.path.as_deref(), &json(&o))?;
    if !run.converged {
        return Err(rabi_lattice::Error::DmrgNoConvergence { sweeps: run.sweeps, last_delta: run.last_delta }.into());
    }
    if !respects_cutoff {
        return Err(rabi_lattice::Error::CutoffViolation { two_n: 2.0 * o.n, n_fock: p.n_fock }.into());
    }
    Ok(())
}

fn scan_peaks(path: &Path) -> Result<Vec<DerivativePeak>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    let mut table = ScanTable::from_csv(&text)?;
    if table.rows.iter().all(|r| r.dn_dg.is_none()) {
        table = numerical_derivative(&table)?;
    }
    table
        .deltas()
        .into_iter()
        .map(|d| {
            derivative_peak(&table, d)
                .ok_or_else(|| CliError::Failed(format!("no usable dn/dg values for delta = {d}")))
        })
        .collect()
}
