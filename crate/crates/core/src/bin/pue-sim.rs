//! Command-line front end.
//!
//!   pue-sim run <config> [--seed N] [--runs N] [--out PATH] [--threads N]
//!   pue-sim sweep <config> --param K|m --values 10,20,30 [same overrides]
//!   pue-sim bounds --algo pola|prola --K 10 --T 100000 [--m 1] [--constant 0.05]
//!   pue-sim validate <config>
//!
//! Exit status: 0 on success, 2 for usage or config errors, 1 for runtime failures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use pue_sim::harness::{
    run_experiment, write_csv, ConfigError, ConfigFile, ExperimentConfig, HarnessError,
};
use pue_sim::metrics::{lower_bound, pola_upper_bound, prola_upper_bound, Algorithm};

#[derive(Parser)]
#[command(
    name = "pue-sim",
    version,
    about = "Learning PUE attackers in a slotted cognitive-radio simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone, Default)]
struct Overrides {
    /// Base seed for per-run streams.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of Monte-Carlo runs.
    #[arg(long)]
    runs: Option<usize>,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its CSV.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Repeat an experiment over values of K or m, one CSV per value.
    Sweep {
        config: PathBuf,
        #[arg(long, value_enum)]
        param: SweepParam,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<usize>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Print the closed-form regret bounds.
    Bounds {
        #[arg(long, value_enum)]
        algo: Algo,
        #[arg(long = "K")]
        channels: usize,
        #[arg(long = "T")]
        horizon: u64,
        #[arg(long, default_value_t = 1)]
        m: usize,
        /// Lower-bound constant.
        #[arg(long, default_value_t = 0.05)]
        constant: f64,
    },
    /// Check a config file without running it.
    Validate { config: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepParam {
    #[value(name = "K")]
    K,
    #[value(name = "m")]
    M,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Pola,
    Prola,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Config(c) => c.into(),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("see `pue-sim --help` for usage");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run { config, overrides } => {
            let file = load(&config, &overrides)?;
            execute(&ExperimentConfig::from_file(&file)?)
        }
        Command::Sweep {
            config,
            param,
            values,
            overrides,
        } => {
            let base = load(&config, &overrides)?;
            let out = base
                .output_path
                .clone()
                .unwrap_or_else(|| PathBuf::from("results.csv"));
            // validate every point before running any of them
            let mut configs = Vec::with_capacity(values.len());
            for v in values {
                let mut file = base.clone();
                let tag = match param {
                    SweepParam::K => {
                        file.channels = v;
                        format!("K{v}")
                    }
                    SweepParam::M => {
                        file.prola_observations = Some(v);
                        format!("m{v}")
                    }
                };
                file.output_path = Some(suffixed(&out, &tag));
                configs.push(ExperimentConfig::from_file(&file)?);
            }
            for cfg in &configs {
                execute(cfg)?;
            }
            Ok(())
        }
        Command::Bounds {
            algo,
            channels,
            horizon,
            m,
            constant,
        } => {
            if channels < 2 {
                return Err(Failure::Usage(format!(
                    "--K must be at least 2, got {channels}"
                )));
            }
            if m == 0 || m >= channels {
                return Err(Failure::Usage(format!(
                    "--m must be in [1, {}]",
                    channels - 1
                )));
            }
            let (name, kind, upper) = match algo {
                Algo::Pola => ("pola", Algorithm::Pola, pola_upper_bound(channels, horizon)),
                Algo::Prola => (
                    "prola",
                    Algorithm::Prola,
                    prola_upper_bound(channels, horizon, m),
                ),
            };
            println!("algo={name} K={channels} T={horizon} m={m}");
            println!("upper_bound={upper:.4}");
            println!(
                "lower_bound={:.4} (constant {constant})",
                lower_bound(kind, channels, horizon, constant)
            );
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            println!(
                "ok: K={} T={} runs={} attacker={:?} su={:?} checkpoints={}",
                cfg.channels,
                cfg.horizon,
                cfg.runs,
                cfg.attacker,
                cfg.su_policy,
                cfg.checkpoints.len()
            );
            Ok(())
        }
    }
}

fn load(path: &Path, o: &Overrides) -> Result<ConfigFile, Failure> {
    let mut file = ConfigFile::load(path)?;
    if let Some(seed) = o.seed {
        file.base_seed = Some(seed);
    }
    if let Some(runs) = o.runs {
        file.runs = Some(runs);
    }
    if let Some(out) = &o.out {
        file.output_path = Some(out.clone());
    }
    if let Some(threads) = o.threads {
        file.threads = Some(threads);
    }
    Ok(file)
}

fn execute(cfg: &ExperimentConfig) -> Result<(), Failure> {
    let result = run_experiment(cfg)?;
    write_csv(&result, &cfg.output_path)?;
    let last = result.checkpoints.len() - 1;
    println!(
        "{}: T={} runs={} mean_regret={:.3} mean_su_traffic={:.1} ({:.1}s)",
        cfg.output_path.display(),
        cfg.horizon,
        cfg.runs,
        result.mean_regret[last],
        result.mean_su_traffic[last],
        result.metadata.wall_time_secs
    );
    Ok(())
}

/// `dir/name.csv` + `m3` -> `dir/name_m3.csv`.
fn suffixed(path: &Path, tag: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_{tag}.{}", ext.to_string_lossy()),
        None => format!("{stem}_{tag}"),
    };
    path.with_file_name(name)
}
