use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cokl_gcnn::cli::{self, GradcheckConfig, LawReport, LawcheckConfig, RunConfig};
use cokl_gcnn::gcnn::NormalizeMode;
use cokl_gcnn::lens::LossKind;

/// Graph networks as parametric CoKleisli morphisms: law checks, gradient
/// checks and training.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

const CONFIG_KEYS: &str = "\
Config keys (one `key = value` per line, `#` starts a comment):
  seed            initialization seed
  n               node count, optional, checked against the adjacency
  dims            feature widths, e.g. 2,4,1
  activations     one per layer: relu, sigmoid or identity
  adjacency       n x n matrix file
  features        n x dims[0] matrix file
  targets         n x dims[last] matrix file
  learning_rate   gradient step size, >= 0
  epochs          number of steps, >= 1
  normalize       symmetric (default) or raw
  loss            mse (default) or bce
  out             output directory
Relative paths resolve against the config file's directory.";

#[derive(Subcommand)]
enum Command {
    /// Check every structural law on seeded random instances.
    Lawcheck {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Tolerance for every float law. Exact laws always use 0.
        #[arg(long)]
        tol: Option<f64>,
        /// Write the report here as well as to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare backward passes against central finite differences.
    Gradcheck {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a network from a key = value config file. Flags override the
    /// keys of the same name.
    #[command(after_help = CONFIG_KEYS)]
    Train {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long, alias = "learning_rate")]
        learning_rate: Option<f64>,
        #[arg(long)]
        normalize: Option<NormalizeMode>,
        #[arg(long)]
        loss: Option<LossKind>,
        /// Fail unless the final loss is at most this fraction of the
        /// initial loss.
        #[arg(long)]
        tol: Option<f64>,
        /// Directory for trace.csv, params_<layer>.csv and predictions.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a two-community graph with features, targets and a config.
    DemoGen {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long, default_value_t = 0.2)]
        noise: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn report(r: &LawReport, out: Option<&Path>) -> Result<ExitCode, String> {
    print!("{r}");
    if let Some(path) = out {
        fs::write(path, r.to_csv()).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    Ok(if r.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Lawcheck {
            seed,
            samples,
            tol,
            out,
        } => {
            if samples == 0 {
                return Err("--samples must be at least 1".into());
            }
            let config = LawcheckConfig {
                seed,
                samples,
                float_tol: tol,
                ..LawcheckConfig::default()
            };
            report(&cli::run_lawcheck(&config), out.as_deref())
        }
        Command::Gradcheck {
            seed,
            samples,
            eps,
            tol,
            out,
        } => {
            if !(eps > 0.0 && tol > 0.0) {
                return Err("--eps and --tol must be positive".into());
            }
            let config = GradcheckConfig {
                seed,
                samples,
                eps,
                tol,
            };
            report(&cli::run_gradcheck(&config), out.as_deref())
        }
        Command::Train {
            config,
            seed,
            epochs,
            learning_rate,
            normalize,
            loss,
            tol,
            out,
        } => {
            let mut c = RunConfig::load(&config).map_err(|e| e.to_string())?;
            c.seed = seed.unwrap_or(c.seed);
            c.epochs = epochs.unwrap_or(c.epochs);
            c.learning_rate = learning_rate.unwrap_or(c.learning_rate);
            c.normalize = normalize.unwrap_or(c.normalize);
            c.loss = loss.unwrap_or(c.loss);
            c.out = out.or(c.out);
            if c.epochs == 0 {
                return Err("--epochs must be at least 1".into());
            }
            let o = cli::run_train(&c).map_err(|e| e.to_string())?;
            println!("initial_loss,{}", o.initial_loss());
            println!("final_loss,{}", o.final_loss);
            println!("accuracy,{}/{}", o.correct, o.total);
            match tol {
                Some(t) if o.final_loss > t * o.initial_loss() => Ok(ExitCode::FAILURE),
                _ => Ok(ExitCode::SUCCESS),
            }
        }
        Command::DemoGen {
            seed,
            n,
            noise,
            out,
        } => {
            let cfg = cli::run_demo_generate(seed, n, noise, &out).map_err(|e| e.to_string())?;
            println!("{}", cfg.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    run(Cli::parse()).unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(2)
    })
}
