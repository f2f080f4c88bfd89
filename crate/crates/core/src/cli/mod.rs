//! The `lakesim` executable: config parsing, subcommand runners and the
//! manifest written next to every run.
//!
//! Exit codes: 0 success, 2 invalid input or config, 3 inconsistent
//! configuration (for example runs on different grids), 4 numerical
//! failure, 5 I/O. Failures print one line to stderr:
//! `error kind=<kind> class=<class> message="..."`.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};

pub use commands::{random_modes, KernelOverrides};
pub use config::{
    parse_config, ConfigErrors, ConfigIssue, DepthKind, DiagnoseSection, DomainConfig, EllipticSection,
    KernelSection, RunConfig, RunSection, Shape, Spacing, TransportSection, WeightKind,
};
pub use output::{
    fmt_f64, read_field_csv, sha256_hex, FileRecord, InputRecord, OutputDir, RunManifest, SnapshotRecord,
    MANIFEST_NAME,
};

use crate::error::{ErrorClass, LakeError, Result};

pub const OUT_ENV: &str = "LAKESIM_OUT";

#[derive(Debug, Parser)]
#[command(name = "lakesim", version, about = "Lake equations with degenerate depth b = phi^a")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (default `out`).
    #[arg(long, global = true, env = OUT_ENV)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the weighted elliptic problem and write `Psi`, `Phi`, `v`.
    SolveElliptic,
    /// Run vorticity transport and write snapshots plus a diagnostics series.
    Simulate,
    /// Calibrate and check the model kernels.
    KernelCheck {
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        /// Comma-separated list.
        #[arg(long, value_delimiter = ',')]
        eps: Option<Vec<f64>>,
        /// Number of separations in the bound sweep.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Post-process one or two `simulate` manifests.
    Diagnose { manifests: Vec<PathBuf> },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SolveElliptic => "solve-elliptic",
            Command::Simulate => "simulate",
            Command::KernelCheck { .. } => "kernel-check",
            Command::Diagnose { .. } => "diagnose",
        }
    }
}

pub fn exit_code(class: ErrorClass) -> i32 {
    match class {
        ErrorClass::Validation => 2,
        ErrorClass::Configuration => 3,
        ErrorClass::Numerical => 4,
        ErrorClass::Io => 5,
    }
}

/// The single stderr line printed on failure.
pub fn failure_line(e: &LakeError) -> String {
    let class = match e.class() {
        ErrorClass::Validation => "validation",
        ErrorClass::Configuration => "configuration",
        ErrorClass::Numerical => "numerical",
        ErrorClass::Io => "io",
    };
    let msg = e.to_string().replace(['\n', '\r'], " ").replace('"', "'");
    format!("error kind={} class={class} message=\"{msg}\"", e.kind())
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            parse_config(&text).map_err(LakeError::from)?
        }
        None => match cli.command {
            Command::KernelCheck { .. } | Command::Diagnose { .. } => RunConfig {
                domain: None,
                elliptic: None,
                transport: None,
                kernels: None,
                diagnose: None,
                run: RunSection::default(),
            },
            _ => return Err(LakeError::Validation(format!("{} needs --config", cli.command.name()))),
        },
    };
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(LakeError::Validation("--threads must be positive".into()));
        }
        cfg.run.threads = Some(t);
    }
    if let Command::KernelCheck { a, n, eps, samples } = &cli.command {
        let mut k = cfg.kernels.take().unwrap_or_default();
        KernelOverrides { a: *a, n: *n, eps: eps.clone(), separations: *samples }.apply(&mut k);
        cfg.kernels = Some(k);
        // re-run range checks on the merged section
        let text = toml::to_string(&cfg).map_err(|e| LakeError::Validation(e.to_string()))?;
        parse_config(&text).map_err(LakeError::from)?;
    }
    Ok(cfg)
}

/// Runs one subcommand and writes its manifest.
pub fn run(cli: &Cli) -> Result<RunManifest> {
    let start = Instant::now();
    let cfg = load_config(cli)?;
    let out_root = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let work = || -> Result<RunManifest> {
        let mut out = OutputDir::create(&out_root)?;
        let outcome = match &cli.command {
            Command::SolveElliptic => commands::solve_elliptic(&cfg, &mut out)?,
            Command::Simulate => commands::simulate(&cfg, &mut out)?,
            Command::KernelCheck { .. } => commands::kernel_check(&cfg, &mut out)?,
            Command::Diagnose { manifests } => commands::diagnose(&cfg, manifests, &mut out)?,
        };
        out.finish(RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: cli.command.name().to_string(),
            config: cfg.clone(),
            wall_time_s: start.elapsed().as_secs_f64(),
            scalars: outcome.scalars,
            snapshots: outcome.snapshots,
            inputs: outcome.inputs,
            files: Vec::new(),
        })
    };
    match cfg.run.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| LakeError::Validation(format!("cannot start {t} threads: {e}")))?
            .install(work),
        None => work(),
    }
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(m) => {
            println!("{} ok: {} files in {}", m.subcommand, m.files.len() + 1, cli.out.as_deref().unwrap_or("out".as_ref()).display());
            0
        }
        Err(e) => {
            eprintln!("{}", failure_line(&e));
            exit_code(e.class())
        }
    }
}
