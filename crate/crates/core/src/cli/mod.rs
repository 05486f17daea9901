//! Command-line front end: config loading, flag overrides and exit codes.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 configuration error.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use crate::dynamics::Method;
use crate::error::{Error, Result};
use crate::protocol::{ProtocolKind, SplitterParams};
use commands::CommandOutcome;
use config::{CurvesConfig, EngineChoice, EvolveConfig, RunProtocolConfig, ScanConfig, VerifyConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERICAL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Environment variable that sets the worker-thread count.
pub const WORKERS_ENV: &str = "SPINNET_WORKERS";

#[derive(Parser, Debug)]
#[command(name = "spinnet", version, about = "Wave-packet scattering off double-dot qubits in XXZ spin networks")]
pub struct Cli {
    /// Worker threads for parallel scans (overrides the config file).
    #[arg(long, global = true, env = WORKERS_ENV)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Transmission T(h, Jz) surface for a single DD qubit.
    ScanTransmission(ScanArgs),
    /// GHZ or W generation with the closed-form and/or full-dynamics engine.
    RunProtocol(ProtocolArgs),
    /// Success-probability curves P_GHZ and P_W against T and n.
    Curves(CurvesArgs),
    /// Splitter identities and dynamical port checks.
    Verify(VerifyArgs),
    /// Free evolution of a packet on a network, with optional trajectory dump.
    Evolve(EvolveArgs),
}

#[derive(Args, Debug)]
pub struct ScanArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub h_min: Option<f64>,
    #[arg(long)]
    pub h_max: Option<f64>,
    #[arg(long)]
    pub h_steps: Option<usize>,
    #[arg(long)]
    pub jz_min: Option<f64>,
    #[arg(long)]
    pub jz_max: Option<f64>,
    #[arg(long)]
    pub jz_steps: Option<usize>,
    /// Packet inverse width.
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum KindArg {
    Ghz,
    W,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum EngineArg {
    ClosedForm,
    Dynamics,
    Both,
}

#[derive(Args, Debug)]
pub struct ProtocolArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_enum)]
    pub engine: Option<EngineArg>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub jz: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Transmission amplitude for the closed-form engine, as `re` or `re,im`.
    #[arg(long, value_parser = commands::parse_complex, allow_hyphen_values = true)]
    pub t: Option<Complex64>,
    /// GHZ splitters `alpha,beta,alpha_out,beta_out`.
    #[arg(long, value_delimiter = ',', num_args = 4)]
    pub splitters: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
pub struct CurvesArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Comma-separated transmission values.
    #[arg(long, value_delimiter = ',')]
    pub transmissions: Option<Vec<f64>>,
    #[arg(long)]
    pub n_min: Option<usize>,
    #[arg(long)]
    pub n_max: Option<usize>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Y splitter `alpha,beta` to check; repeatable, replaces the configured list.
    #[arg(long = "y-splitter", value_parser = parse_pair)]
    pub y_splitters: Vec<[f64; 2]>,
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Skip the packet-based port checks.
    #[arg(long)]
    pub skip_dynamical: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum MethodArg {
    Chebyshev,
    Krylov,
    DenseExpm,
}

#[derive(Args, Debug)]
pub struct EvolveArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub network: Option<PathBuf>,
    #[arg(long)]
    pub time: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Write trajectory.csv with (t, site, probability) rows.
    #[arg(long)]
    pub trajectory: bool,
}

fn parse_pair(s: &str) -> std::result::Result<[f64; 2], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("'{x}': {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match v.as_slice() {
        [a, b] => Ok([*a, *b]),
        _ => Err(format!("expected 'alpha,beta', got '{s}'")),
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl ScanArgs {
    pub fn resolve(self) -> Result<ScanConfig> {
        let mut c: ScanConfig = config::load(self.config.as_deref())?;
        set(&mut c.out_dir, self.out_dir);
        set(&mut c.h.min, self.h_min);
        set(&mut c.h.max, self.h_max);
        set(&mut c.h.steps, self.h_steps);
        set(&mut c.jz.min, self.jz_min);
        set(&mut c.jz.max, self.jz_max);
        set(&mut c.jz.steps, self.jz_steps);
        set(&mut c.alpha, self.alpha);
        c.validate()?;
        Ok(c)
    }
}

impl ProtocolArgs {
    pub fn resolve(self) -> Result<RunProtocolConfig> {
        let mut c: RunProtocolConfig = config::load(self.config.as_deref())?;
        set(&mut c.out_dir, self.out_dir);
        set(
            &mut c.protocol.kind,
            self.kind.map(|k| match k {
                KindArg::Ghz => ProtocolKind::Ghz,
                KindArg::W => ProtocolKind::W,
            }),
        );
        set(&mut c.protocol.n, self.n);
        set(
            &mut c.engine,
            self.engine.map(|e| match e {
                EngineArg::ClosedForm => EngineChoice::ClosedForm,
                EngineArg::Dynamics => EngineChoice::Dynamics,
                EngineArg::Both => EngineChoice::Both,
            }),
        );
        set(&mut c.protocol.h, self.h);
        set(&mut c.protocol.jz, self.jz);
        set(&mut c.protocol.alpha, self.alpha);
        if let Some(t) = self.t {
            c.protocol.t_override = Some(t);
        }
        if let Some(s) = self.splitters {
            c.protocol.splitters = Some(SplitterParams { alpha: s[0], beta: s[1], alpha_out: s[2], beta_out: s[3] });
        }
        c.validate().map_err(as_config)?;
        Ok(c)
    }
}

impl CurvesArgs {
    pub fn resolve(self) -> Result<CurvesConfig> {
        let mut c: CurvesConfig = config::load(self.config.as_deref())?;
        set(&mut c.out_dir, self.out_dir);
        set(&mut c.transmissions, self.transmissions);
        set(&mut c.n_min, self.n_min);
        set(&mut c.n_max, self.n_max);
        c.validate()?;
        Ok(c)
    }
}

impl VerifyArgs {
    pub fn resolve(self) -> Result<VerifyConfig> {
        let mut c: VerifyConfig = config::load(self.config.as_deref())?;
        set(&mut c.out_dir, self.out_dir);
        set(&mut c.alpha, self.alpha);
        set(&mut c.n_max, self.n_max);
        if !self.y_splitters.is_empty() {
            c.y_splitters = self.y_splitters;
        }
        if self.skip_dynamical {
            c.dynamical = false;
        }
        c.validate()?;
        Ok(c)
    }
}

impl EvolveArgs {
    pub fn resolve(self) -> Result<EvolveConfig> {
        let mut c: EvolveConfig = config::load(self.config.as_deref())?;
        set(&mut c.out_dir, self.out_dir);
        if self.network.is_some() {
            c.network = self.network;
        }
        set(&mut c.time, self.time);
        set(&mut c.steps, self.steps);
        set(
            &mut c.method,
            self.method.map(|m| match m {
                MethodArg::Chebyshev => Method::Chebyshev,
                MethodArg::Krylov => Method::Krylov,
                MethodArg::DenseExpm => Method::DenseExpm,
            }),
        );
        c.trajectory |= self.trajectory;
        c.validate()?;
        Ok(c)
    }
}

fn as_config(e: Error) -> Error {
    match e {
        Error::InvalidParameter(m) | Error::InvalidTopology(m) => Error::Config(m),
        other => other,
    }
}

/// Exit code for an error: parameter and topology problems are configuration
/// errors, everything else is a numerical failure.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidParameter(_) | Error::InvalidTopology(_) | Error::DimensionMismatch { .. } => {
            EXIT_CONFIG
        }
        _ => EXIT_NUMERICAL,
    }
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        Some(0) => Err(Error::Config("worker count must be >= 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

/// Run a parsed command line.
pub fn run(cli: Cli) -> Result<CommandOutcome> {
    let workers = cli.workers;
    match cli.command {
        Command::ScanTransmission(a) => {
            let cfg = a.resolve()?;
            with_workers(workers.or(cfg.workers), || commands::scan_transmission(&cfg))?
        }
        Command::RunProtocol(a) => {
            let cfg = a.resolve()?;
            with_workers(workers.or(cfg.workers), || commands::run_protocol(&cfg))?
        }
        Command::Curves(a) => commands::curves(&a.resolve()?),
        Command::Verify(a) => {
            let cfg = a.resolve()?;
            with_workers(workers.or(cfg.workers), || commands::verify(&cfg))?
        }
        Command::Evolve(a) => with_workers(workers, || commands::evolve(&a.resolve()?))?,
    }
}

/// Parse arguments, run, report errors on stderr and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(outcome) => {
            for f in &outcome.files {
                log::info!("wrote {}", f.display());
            }
            outcome.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
