//! The `ibvp` command: config ingestion, subcommand dispatch and report
//! emission.
//!
//! Exit status is 0 on success, 1 on a failed assertion or numeric error,
//! 2 on a configuration error.

pub mod config;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::eigen::check_hypotheses;
use crate::multiplicity::{resolve_r, run_experiment, sweep_mu, MultiplicityReport, RPolicy, Signature};
use crate::radial::{back_map, AnnulusProblem};
use crate::report;

pub use config::{Config, ConfigError, KEYS_HELP};
use config::DecompositionError;

#[derive(Debug, Parser)]
#[command(name = "ibvp", version, about = "Positive solutions of u'' + a_mu(x) g(u) = 0 with Dirichlet conditions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML config file.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Override one config key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Directory for report files (overrides `out_dir`).
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads for the parallel scans.
    #[arg(long, value_name = "K")]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalues and growth conditions as JSON on stdout.
    #[command(after_help = KEYS_HELP)]
    Check(Common),
    /// lambda0 and the hump eigenvalues as CSV.
    #[command(after_help = KEYS_HELP)]
    Eig(Common),
    /// All positive solutions in the slope range: report JSON and one
    /// trajectory CSV per solution.
    #[command(after_help = KEYS_HELP)]
    Solve(Common),
    /// Solution counts and signature coverage over a list of mu values, as CSV.
    #[command(after_help = KEYS_HELP)]
    Sweep(Common),
    /// Radial solutions on an annulus: `solve` reports plus v(r) CSVs.
    #[command(after_help = KEYS_HELP)]
    Radial(Common),
    /// Built-in two-hump reference run; expects exactly three solutions.
    #[command(name = "repro-fig1", after_help = KEYS_HELP)]
    ReproFig1(Common),
}

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Numeric(crate::Error),
    Assertion(String),
    Io(io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Numeric(e) => write!(f, "[{}] {e}", e.module()),
            CliError::Assertion(m) => write!(f, "assertion failed: {m}"),
            CliError::Io(e) => write!(f, "i/o: {e}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::Numeric(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<DecompositionError> for CliError {
    fn from(e: DecompositionError) -> Self {
        match e {
            DecompositionError::Config(c) => CliError::Config(c),
            DecompositionError::Numeric(n) => CliError::Numeric(n),
        }
    }
}

type CliResult<T = ()> = std::result::Result<T, CliError>;

/// Entry point of the `ibvp` binary.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    match run(cli.command, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn common(cmd: &Command) -> &Common {
    match cmd {
        Command::Check(c)
        | Command::Eig(c)
        | Command::Solve(c)
        | Command::Sweep(c)
        | Command::Radial(c)
        | Command::ReproFig1(c) => c,
    }
}

/// Runs one subcommand, writing its primary output to `out`.
pub fn run(cmd: Command, out: &mut dyn Write) -> CliResult {
    let c = common(&cmd).clone();
    if let Some(k) = c.threads {
        if k == 0 {
            return Err(ConfigError::new("threads", "must be >= 1").into());
        }
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    let mut cfg = match cmd {
        Command::ReproFig1(_) => {
            let mut f = Config::figure1();
            if c.config.is_some() || !c.set.is_empty() {
                let user = Config::load(c.config.as_deref(), &c.set)?;
                f.out_dir = user.out_dir;
            }
            f
        }
        _ => Config::load(c.config.as_deref(), &c.set)?,
    };
    if c.out.is_some() {
        cfg.out_dir = c.out.clone();
    }
    match cmd {
        Command::Check(_) => check(&cfg, out),
        Command::Eig(_) => eig(&cfg, out),
        Command::Solve(_) => solve(&cfg, out).map(|_| ()),
        Command::Sweep(_) => sweep(&cfg, out),
        Command::Radial(_) => radial(&cfg, out),
        Command::ReproFig1(_) => repro_fig1(&cfg, out),
    }
}

fn create(dir: &Path, name: &str) -> CliResult<BufWriter<File>> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn check(cfg: &Config, out: &mut dyn Write) -> CliResult {
    let p = cfg.problem(cfg.mu()?)?;
    let h = check_hypotheses(p.weight(), p.decomposition(), p.g(), &cfg.hypothesis_options()?)?;
    report::write_json(&mut *out, &h)?;
    if let Some(dir) = &cfg.out_dir {
        report::write_json(create(dir, "hypotheses.json")?, &h)?;
    }
    Ok(())
}

fn eig(cfg: &Config, out: &mut dyn Write) -> CliResult {
    let w = cfg.weight(cfg.mu()?)?;
    let d = cfg.decomposition(&w)?;
    let tol = cfg.hypothesis_options()?.rel_tol;
    let l0 = crate::eigen::lambda0(&w, &d, tol)?;
    let l1 = crate::eigen::hump_eigenvalues(&w, &d, tol)?;
    let humps: Vec<(f64, f64)> = d.humps().collect();
    report::write_eigen_csv(&mut *out, w.length(), &humps, l0, &l1)?;
    if let Some(dir) = &cfg.out_dir {
        report::write_eigen_csv(create(dir, "eigenvalues.csv")?, w.length(), &humps, l0, &l1)?;
    }
    Ok(())
}

fn write_solutions(dir: &Path, rep: &MultiplicityReport) -> CliResult {
    report::write_json(create(dir, "report.json")?, rep)?;
    for (k, sol) in rep.solutions.iter().enumerate() {
        report::write_trajectory_csv(create(dir, &format!("solution_{}.csv", k + 1))?, &sol.trajectory.samples)?;
    }
    Ok(())
}

fn solve(cfg: &Config, out: &mut dyn Write) -> CliResult<MultiplicityReport> {
    let p = cfg.problem(cfg.mu()?)?;
    let rep = run_experiment(
        &p,
        cfg.slopes()?,
        cfg.r_policy()?,
        &cfg.hypothesis_options()?,
        &cfg.shooting_options()?,
    )?;
    match &cfg.out_dir {
        Some(dir) => {
            write_solutions(dir, &rep)?;
            summary(out, &rep)?;
        }
        None => report::write_json(&mut *out, &rep)?,
    }
    Ok(rep)
}

fn summary(out: &mut dyn Write, rep: &MultiplicityReport) -> io::Result<()> {
    writeln!(out, "count={}", rep.count)?;
    for sol in &rep.solutions {
        let sig = sol.signature.map(|s| s.to_string()).unwrap_or_default();
        writeln!(out, "slope={} signature={sig}", report::fmt_f64(sol.slope))?;
    }
    writeln!(out, "prediction_met={}", rep.prediction_met)
}

fn sweep(cfg: &Config, out: &mut dyn Write) -> CliResult {
    let mus = cfg.mu_values()?;
    let p = cfg.problem(mus[0])?;
    let (r, _) = resolve_r(&p, cfg.r_policy()?, &cfg.hypothesis_options()?)?;
    let s = sweep_mu(&p, &mus, cfg.slopes()?, r, &cfg.shooting_options()?)?;
    report::write_sweep_csv(&mut *out, &s)?;
    if let Some(dir) = &cfg.out_dir {
        report::write_sweep_csv(create(dir, "sweep.csv")?, &s)?;
        report::write_json(create(dir, "sweep.json")?, &s)?;
    }
    match s.mu_hat {
        Some(m) => eprintln!("mu_hat={}", report::fmt_f64(m)),
        None => eprintln!("mu_hat=none"),
    }
    Ok(())
}

#[derive(Serialize)]
struct RadialEntry {
    slope: f64,
    residual: f64,
}

#[derive(Serialize)]
struct RadialReport<'a> {
    dim: u32,
    r1: f64,
    r2: f64,
    length: f64,
    radial: Vec<RadialEntry>,
    report: &'a MultiplicityReport,
}

fn radial(cfg: &Config, out: &mut dyn Write) -> CliResult {
    let ap: AnnulusProblem = cfg.annulus()?;
    let rd = cfg.annulus_decomposition(&ap)?;
    let p = ap.transform_with(&rd)?;
    let opts = cfg.shooting_options()?;
    let rep = run_experiment(&p, cfg.slopes()?, cfg.r_policy()?, &cfg.hypothesis_options()?, &opts)?;
    let breaks = rd.breakpoints();
    let mapped = rep
        .solutions
        .iter()
        .map(|s| back_map(&ap, &p, &breaks, s, &opts))
        .collect::<crate::Result<Vec<_>>>()?;
    let (r1, r2) = ap.radii();
    let full = RadialReport {
        dim: ap.dim(),
        r1,
        r2,
        length: p.length(),
        radial: mapped
            .iter()
            .map(|m| RadialEntry {
                slope: m.slope,
                residual: m.residual,
            })
            .collect(),
        report: &rep,
    };
    match &cfg.out_dir {
        Some(dir) => {
            report::write_json(create(dir, "report.json")?, &full)?;
            for (k, (sol, m)) in rep.solutions.iter().zip(&mapped).enumerate() {
                report::write_trajectory_csv(create(dir, &format!("solution_{}.csv", k + 1))?, &sol.trajectory.samples)?;
                report::write_radial_csv(create(dir, &format!("radial_{}.csv", k + 1))?, &m.samples)?;
            }
            summary(out, &rep)?;
        }
        None => report::write_json(&mut *out, &full)?,
    }
    Ok(())
}

fn repro_fig1(cfg: &Config, out: &mut dyn Write) -> CliResult {
    let p = cfg.problem(cfg.mu()?)?;
    let rep = run_experiment(
        &p,
        cfg.slopes()?,
        RPolicy::default(),
        &cfg.hypothesis_options()?,
        &cfg.shooting_options()?,
    )?;
    if let Some(dir) = &cfg.out_dir {
        write_solutions(dir, &rep)?;
    }
    summary(out, &rep)?;
    let mut sigs = rep.signatures();
    sigs.sort();
    let expected = [
        Signature::from_indices(&[1]),
        Signature::from_indices(&[2]),
        Signature::from_indices(&[1, 2]),
    ];
    let mut want = expected.to_vec();
    want.sort();
    if rep.count == 3 && sigs == want {
        writeln!(out, "PASS")?;
        Ok(())
    } else {
        writeln!(out, "FAIL")?;
        Err(CliError::Assertion(format!(
            "expected 3 solutions with signatures {{1}}, {{2}}, {{1,2}}, found {} ({:?})",
            rep.count,
            sigs.iter().map(|s| s.to_string()).collect::<Vec<_>>()
        )))
    }
}
