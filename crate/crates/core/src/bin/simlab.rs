//! `simlab <experiment> --config path [--seed u64] [--replicas k] [--out dir]`
//!
//! Exit codes: 0 pass, 1 criterion fail, 2 invalid config, 3 resource error.

use clap::{Args, Parser, Subcommand};
use simlab_core::error::SimError;
use simlab_core::harness::{report, run_experiment, ExperimentConfig, ReportStatus};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "simlab", version, about = "Exclusion-process fluctuation laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the replica count.
    #[arg(long)]
    replicas: Option<u64>,
    /// Output directory (default `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the scaling parameter n.
    #[arg(long)]
    n: Option<u32>,
    /// Override the ring size multiple N = ring_mult * n.
    #[arg(long = "ring-mult")]
    ring_mult: Option<usize>,
    /// Override the density rho.
    #[arg(long)]
    rho: Option<f64>,
    /// Override the asymmetry a.
    #[arg(long)]
    a: Option<f64>,
    /// Override the time horizon T.
    #[arg(long = "T")]
    horizon: Option<f64>,
    /// Spectral modes for the OU reference.
    #[arg(long)]
    modes: Option<usize>,
    /// Grid spacing for the stochastic-heat reference.
    #[arg(long)]
    dx: Option<f64>,
    /// Time step for the stochastic-heat reference.
    #[arg(long)]
    dt: Option<f64>,
    /// Macroscopic circumference override (adjusts the ring multiple).
    #[arg(long = "L-mac")]
    l_mac: Option<f64>,
}

macro_rules! experiments_subcommands {
    ($(($variant:ident, $name:literal)),* $(,)?) => {
        #[derive(Subcommand, Debug)]
        enum Command {
            $(
                #[command(name = $name)]
                $variant(RunArgs),
            )*
            /// Render the acceptance table from a results directory.
            Report { dir: PathBuf },
        }

        impl Command {
            fn experiment_name(&self) -> Option<&'static str> {
                match self {
                    $(Command::$variant(_) => Some($name),)*
                    Command::Report { .. } => None,
                }
            }

            fn run_args(&self) -> Option<&RunArgs> {
                match self {
                    $(Command::$variant(args) => Some(args),)*
                    Command::Report { .. } => None,
                }
            }
        }
    };
}

experiments_subcommands!(
    (VerifyModel, "verify-model"),
    (Stationarity, "stationarity"),
    (Whitenoise, "whitenoise"),
    (Bg1, "bg1"),
    (Bg2, "bg2"),
    (Qv, "qv"),
    (Energy, "energy"),
    (Holder, "holder"),
    (Eoe, "eoe"),
    (Gap, "gap"),
    (SheCompare, "she-compare"),
    (OuCompare, "ou-compare"),
    (Fm, "fm"),
    (Height, "height"),
);

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<i32, SimError> {
    match &cli.command {
        Command::Report { dir } => {
            let status = report(dir, &mut std::io::stdout())?;
            if matches!(status, ReportStatus::SomeFailed) {
                eprintln!("one or more criteria failed");
            }
            Ok(status.exit_code())
        }
        cmd => {
            let args = cmd.run_args().expect("experiment subcommand");
            let name = cmd.experiment_name().expect("experiment subcommand");
            let text = std::fs::read_to_string(&args.config).map_err(|e| {
                SimError::Config(format!("cannot read {}: {e}", args.config.display()))
            })?;
            let mut cfg = ExperimentConfig::from_json(&text)?;
            if cfg.experiment != name {
                return Err(SimError::Config(format!(
                    "config names experiment {:?} but the subcommand is {name:?}",
                    cfg.experiment
                )));
            }
            apply_overrides(&mut cfg, args);
            cfg.validate()?;
            let out_root = args.out.clone().unwrap_or_else(|| PathBuf::from("out"));
            let outcome = run_experiment(&cfg, &out_root)?;
            for c in &outcome.criteria {
                println!("{}", simlab_core::harness::criteria::render_line(c));
            }
            println!(
                "artifacts written to {} (manifest.json, results.csv, summary.json, series.jsonl)",
                outcome.out_dir.display()
            );
            Ok(if outcome.all_pass() { 0 } else { 1 })
        }
    }
}

fn apply_overrides(cfg: &mut ExperimentConfig, args: &RunArgs) {
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    if let Some(replicas) = args.replicas {
        cfg.replicas = replicas;
    }
    if let Some(n) = args.n {
        cfg.model.scale = n;
    }
    if let Some(rm) = args.ring_mult {
        cfg.model.ring_mult = rm;
    }
    if let Some(rho) = args.rho {
        cfg.model.density = rho;
    }
    if let Some(a) = args.a {
        cfg.model.asymmetry = a;
    }
    if let Some(t) = args.horizon {
        cfg.model.horizon = t;
    }
    if let Some(modes) = args.modes {
        cfg.spde.modes = Some(modes);
    }
    if let Some(dx) = args.dx {
        cfg.spde.dx = Some(dx);
    }
    if let Some(dt) = args.dt {
        cfg.spde.dt = Some(dt);
    }
    if let Some(l) = args.l_mac {
        cfg.model.ring_mult = l.round().max(1.0) as usize;
    }
}
