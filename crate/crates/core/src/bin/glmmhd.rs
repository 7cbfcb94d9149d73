use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use glmmhd::config::RunConfig;
use glmmhd::runner::{compare, run};
use glmmhd::Error;

#[derive(Parser)]
#[command(name = "glmmhd", version, about = "2D GLM-MHD finite volume / multiresolution solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation and write its output directory.
    Run(RunArgs),
    /// Compare a run against a reference run of the same problem.
    Compare {
        run_dir: PathBuf,
        ref_dir: PathBuf,
    },
    /// Print the effective configuration as a key = value file.
    Config(RunArgs),
}

/// Every flag mirrors a config-file key; flags override the file.
#[derive(Args)]
struct RunArgs {
    /// key = value configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// riemann2d, riemann2d-periodic or uniform
    #[arg(long)]
    problem: Option<String>,
    /// fv-uniform or mr
    #[arg(long)]
    mode: Option<String>,
    /// finest level L (grid 2^L x 2^L)
    #[arg(long)]
    level: Option<String>,
    /// constant or harten
    #[arg(long)]
    threshold_mode: Option<String>,
    /// constant detail threshold
    #[arg(long)]
    epsilon: Option<String>,
    /// level-0 threshold of the level-dependent rule
    #[arg(long)]
    epsilon0: Option<String>,
    /// adiabatic index
    #[arg(long)]
    gamma: Option<String>,
    /// CFL number
    #[arg(long)]
    cfl: Option<String>,
    /// damping ratio c_p^2 / c_h
    #[arg(long)]
    cp2_over_ch: Option<String>,
    /// final time
    #[arg(long)]
    t_end: Option<String>,
    /// comma-separated snapshot times
    #[arg(long)]
    snapshots: Option<String>,
    /// output directory
    #[arg(long)]
    out: Option<String>,
    /// damp psi after every stage instead of once per step
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    psi_damp_per_stage: Option<String>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig, Error> {
        let mut c = RunConfig::default();
        if let Some(path) = &self.config {
            c.apply_kv(&std::fs::read_to_string(path)?)?;
        }
        let flags = [
            ("problem", &self.problem),
            ("mode", &self.mode),
            ("level", &self.level),
            ("threshold-mode", &self.threshold_mode),
            ("epsilon", &self.epsilon),
            ("epsilon0", &self.epsilon0),
            ("gamma", &self.gamma),
            ("cfl", &self.cfl),
            ("cp2-over-ch", &self.cp2_over_ch),
            ("t-end", &self.t_end),
            ("snapshots", &self.snapshots),
            ("out", &self.out),
            ("psi-damp-per-stage", &self.psi_damp_per_stage),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                c.set(k, v)?;
            }
        }
        c.validate()?;
        Ok(c)
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::SolverFailure { .. } => "solver-failure",
        Error::Config(_) => "config",
        Error::IncompatibleRuns(_) => "incompatible-runs",
        Error::Io(_) | Error::Snapshot { .. } | Error::Json(_) => "io",
        _ => "numerical",
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => args.resolve().and_then(|c| run(&c)).and_then(|s| {
            println!("{}", serde_json::to_string_pretty(&s)?);
            Ok(())
        }),
        Command::Compare { run_dir, ref_dir } => compare(&run_dir, &ref_dir).and_then(|r| {
            println!("{}", serde_json::to_string_pretty(&r)?);
            Ok(())
        }),
        Command::Config(args) => args.resolve().map(|c| print!("{}", c.to_kv())),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let report = serde_json::json!({ "error": error_kind(&e), "message": e.to_string() });
            eprintln!("{report}");
            ExitCode::from(if matches!(e, Error::SolverFailure { .. }) { 2 } else { 1 })
        }
    }
}
