use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use qsearch::experiments::{self, CliError, CompareOptions, SolverChoice, VerifyOptions};
use qsearch::Prior;

#[derive(Parser)]
#[command(
    name = "qsearch",
    version,
    about = "Grover search with a prior over the solution location"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Waterfill,
    ClosedT1,
}

#[derive(Subcommand)]
enum Command {
    /// Optimal amplitude plan for a prior file ({"weights": [...]}).
    Optimize {
        #[arg(long)]
        prior: PathBuf,
        #[arg(long, short)]
        t: u32,
        #[arg(long, value_enum, default_value = "waterfill")]
        method: SolverArg,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Expected success probability of a stored plan.
    Evaluate {
        #[arg(long)]
        prior: PathBuf,
        #[arg(long)]
        plan: PathBuf,
    },
    /// Exact outcome distribution of a circuit JSON file.
    Simulate {
        #[arg(long)]
        circuit: PathBuf,
    },
    /// Classical, uniform Grover, ranking and optimal ESP on random priors.
    Compare {
        #[arg(long, default_value_t = 512)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        t_min: u32,
        #[arg(long, default_value_t = 22)]
        t_max: u32,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Use this prior for every sample instead of sampling.
        #[arg(long)]
        prior: Option<PathBuf>,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Rotation angles of the half-half family against the reference table.
    ThetaTable {
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Property suite: simulator, KKT, bounds, robustness, speedup.
    Verify {
        #[arg(long, default_value_t = 16)]
        n_max: usize,
        #[arg(long, default_value_t = 4)]
        t_max: u32,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Replace the oracle with the identity; the run must then fail.
        #[arg(long, hide = true)]
        invert_oracle: bool,
    },
    /// OpenQASM 2.0 for the 3-qubit half-half circuit.
    Emit {
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        solution: String,
        #[arg(long, short)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Optimize {
            prior,
            t,
            method,
            out,
        } => {
            let solver = match method {
                SolverArg::Waterfill => SolverChoice::Waterfill,
                SolverArg::ClosedT1 => SolverChoice::ClosedT1,
            };
            let outcome = experiments::cmd_optimize(&prior, t, solver, &out)?;
            println!("esp {}", outcome.record.esp.unwrap_or_default());
            println!(
                "kkt_residual {:e}",
                outcome.record.kkt_residual.unwrap_or_default()
            );
        }
        Command::Evaluate { prior, plan } => {
            let report = experiments::cmd_evaluate(&prior, &plan)?;
            println!(
                "{}",
                serde_json::to_string(&report).expect("report serializes")
            );
        }
        Command::Simulate { circuit } => {
            let probs = experiments::cmd_simulate(&circuit)?;
            println!(
                "{}",
                serde_json::to_string(&probs).expect("probabilities serialize")
            );
        }
        Command::Compare {
            n,
            samples,
            t_min,
            t_max,
            seed,
            prior,
            out,
        } => {
            let prior = prior.map(Prior::load).transpose()?;
            let opts = CompareOptions {
                n,
                samples,
                t_min,
                t_max,
                seed,
                prior,
            };
            let rows = experiments::cmd_compare(&opts, &out)?;
            println!("wrote {} rows to {}", rows.len(), out.display());
        }
        Command::ThetaTable { out } => {
            let result = experiments::cmd_theta_table(&out);
            if let Ok(rows) = &result {
                for r in rows {
                    println!(
                        "sigma {:.4} theta {:.8} reference {:.8} diff {:.2e}",
                        r.sigma, r.theta, r.reference, r.abs_diff
                    );
                }
            }
            result?;
        }
        Command::Verify {
            n_max,
            t_max,
            trials,
            seed,
            invert_oracle,
        } => {
            let opts = VerifyOptions {
                n_max,
                t_max,
                trials,
                seed,
                invert_oracle,
            };
            let results = experiments::cmd_verify(&opts)?;
            print!("{}", experiments::render_checks(&results));
        }
        Command::Emit {
            sigma,
            solution,
            out,
        } => {
            let outcome = experiments::cmd_emit(sigma, &solution, &out)?;
            println!("theta {}", outcome.spec.theta);
            println!("predicted_success {}", outcome.predicted_success);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
