use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use maskdp::mechanisms::Setting;
use maskdp::par::Exec;
use maskdp_cli::commands::{
    parse_grid, run_audit_to, run_calibrate, run_release, run_replay, run_table1, to_json,
};
use maskdp_cli::config::{AuditConfig, Check, ReleaseConfig, SigmaChoice};
use maskdp_cli::{CliError, Result};

#[derive(Parser)]
#[command(
    name = "maskdp",
    version,
    about = "Noise calibration, release and audit for masked Gaussian mechanisms"
)]
struct Cli {
    /// Run every Monte Carlo and table loop on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print every σ bound for one (ε, δ, n, p) as JSON.
    Calibrate {
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: usize,
        /// Also write the JSON to this file.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Release pseudo-data from a numeric CSV.
    Release(ReleaseArgs),
    /// Re-run a recorded release or audit and compare outputs byte for byte.
    Replay {
        dir: PathBuf,
        /// Where to write the replayed artifacts (a temporary directory by default).
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Print the setting-A versus masked σ table as CSV.
    Table1 {
        /// Grid restrictions such as `epsilon=0.1,0.01` or `n=100`.
        #[arg(long, num_args = 1..)]
        grid: Vec<String>,
        /// Reference CSV to compare against at printed precision.
        #[arg(long)]
        diff: Option<PathBuf>,
        #[arg(long, default_value_t = 0.05)]
        tol_sigma: f64,
        #[arg(long, default_value_t = 0.005)]
        tol_ratio: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run one numerical check and print its report as JSON.
    Audit(AuditArgs),
}

#[derive(Args)]
struct ReleaseArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output_dir: PathBuf,
    #[arg(long)]
    setting: Setting,
    #[arg(
        long,
        conflicts_with = "auto_sigma",
        required_unless_present = "auto_sigma"
    )]
    sigma: Option<f64>,
    /// Calibrate σ from --epsilon and --delta.
    #[arg(long, requires_all = ["epsilon", "delta"])]
    auto_sigma: bool,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, env = "MASKDP_SEED", default_value_t = 0)]
    seed: u64,
    /// The first CSV line holds column names.
    #[arg(long)]
    header: bool,
    /// Write gram.json comparing YᵀY with (X+C)ᵀ(X+C) (setting B only).
    #[arg(long)]
    report_gram: bool,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long)]
    check: Check,
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    p: usize,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, default_value = "B")]
    setting: Setting,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, default_value_t = maskdp::audit::DEFAULT_INNER_SAMPLES)]
    inner_samples: usize,
    #[arg(long, env = "MASKDP_SEED", default_value_t = 0)]
    seed: u64,
    /// Dimension for g-ratio (default 5) or sphere (default 2).
    #[arg(long)]
    q: Option<u32>,
    #[arg(long, default_value_t = 1.0)]
    t1: f64,
    #[arg(long, default_value_t = 3.0)]
    t2: f64,
    /// Comma-separated projection vector for the sphere check.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    v: Option<Vec<f64>>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

fn absolute(path: &Path) -> Result<PathBuf> {
    std::path::absolute(path).map_err(|e| CliError::io(path, "resolve", e))
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    if let Some(path) = path {
        std::fs::write(path, text).map_err(|e| CliError::io(path, "write", e))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let exec = if cli.sequential {
        Exec::Sequential
    } else {
        Exec::default()
    };
    match cli.command {
        Command::Calibrate {
            epsilon,
            delta,
            n,
            p,
            output,
        } => {
            let (report, regime) = run_calibrate(epsilon, delta, n, p)?;
            let json = to_json(&report);
            print!("{json}");
            write_output(output.as_deref(), &json)?;
            regime.map_or(Ok(()), Err)
        }
        Command::Release(a) => {
            let sigma = if a.auto_sigma {
                SigmaChoice::Auto {
                    epsilon: a.epsilon.expect("required by clap"),
                    delta: a.delta.expect("required by clap"),
                }
            } else {
                SigmaChoice::Fixed {
                    sigma: a.sigma.expect("required by clap"),
                }
            };
            let cfg = ReleaseConfig {
                input: absolute(&a.input)?,
                header: a.header,
                setting: a.setting,
                sigma,
                seed: a.seed,
                report_gram: a.report_gram,
            };
            let summary = run_release(&cfg, &a.output_dir)?;
            print!("{}", to_json(&summary));
            match summary.gram_identity_holds {
                Some(false) => Err(CliError::Violation(
                    "Gram identity does not hold within tolerance".into(),
                )),
                _ => Ok(()),
            }
        }
        Command::Replay { dir, output_dir } => {
            let tmp;
            let out = match output_dir {
                Some(d) => d,
                None => {
                    tmp = tempfile::tempdir()
                        .map_err(|e| CliError::io(&std::env::temp_dir(), "create in", e))?;
                    tmp.path().to_path_buf()
                }
            };
            let summary = run_replay(&dir, &out, exec)?;
            print!("{}", to_json(&summary));
            if summary.identical {
                Ok(())
            } else {
                Err(CliError::Violation(format!(
                    "replay differs in {}",
                    summary.differing.join(", ")
                )))
            }
        }
        Command::Table1 {
            grid,
            diff,
            tol_sigma,
            tol_ratio,
            output,
        } => {
            let grid = parse_grid(&grid)?;
            let (csv, mismatches) = run_table1(&grid, diff.as_deref(), tol_sigma, tol_ratio, exec)?;
            print!("{csv}");
            write_output(output.as_deref(), &csv)?;
            if mismatches.is_empty() {
                Ok(())
            } else {
                for m in &mismatches {
                    eprintln!(
                        "mismatch eps={} delta={} p={} n={} {}: computed {} reference {}",
                        m.epsilon, m.delta, m.p, m.n, m.column, m.computed, m.reference
                    );
                }
                Err(CliError::Violation(format!(
                    "{} cells differ from the reference",
                    mismatches.len()
                )))
            }
        }
        Command::Audit(a) => {
            let cfg = AuditConfig {
                check: a.check,
                epsilon: a.epsilon,
                delta: a.delta,
                n: a.n,
                p: a.p,
                sigma: a.sigma,
                setting: a.setting,
                samples: a.samples,
                inner_samples: a.inner_samples,
                seed: a.seed,
                q: a.q,
                t1: a.t1,
                t2: a.t2,
                v: a.v,
            };
            let (report, _) = run_audit_to(&cfg, a.output_dir.as_deref(), exec)?;
            print!("{}", to_json(&report));
            if report.is_consistent() {
                Ok(())
            } else {
                Err(CliError::Violation(format!(
                    "{} check violated",
                    cfg.check.name()
                )))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
