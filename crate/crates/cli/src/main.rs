//! `mslp` command-line interface.

use clap::{Args, Parser, Subcommand, ValueEnum};
use mslp_core::io::{error_status, run, Algorithm, RunConfig};
use mslp_core::oracle::PolicyKind;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "mslp", version, about = "Multistage stochastic linear programming solvers")]
struct Cli {
    /// Log progress (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and check the structural assumptions of an instance.
    Validate(Common),
    /// Solve the extensive form exactly and print V*.
    Extensive(Common),
    /// Run SDDP on the full support.
    Sddp(Common),
    /// Run the sequential-sampling SDLP method.
    Sdlp(Common),
    /// Roll out the policy stored in a state dump.
    Evaluate(Common),
    /// Same as the named subcommand.
    Run {
        algorithm: AlgorithmArg,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Validate,
    Extensive,
    Sddp,
    Sdlp,
    Evaluate,
}

#[derive(Clone, Copy, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Greedy,
    Bfp,
}

#[derive(Args)]
struct Common {
    /// Instance file (mslp-instance v1).
    instance: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Iteration budget (SDLP default 2000, SDDP cap 200).
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0.2)]
    q: f64,
    /// Keep at most this many minorants per stage.
    #[arg(long)]
    max_pieces: Option<usize>,
    /// SDDP forward paths per iteration.
    #[arg(long, default_value_t = 3)]
    n_paths: usize,
    /// Check the minorant invariants at iterations 10, 50, 100 and 500.
    #[arg(long, value_enum, default_value = "off")]
    probe_checks: Toggle,
    #[arg(long, env = "MSLP_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
    /// Independent SDLP runs with seeds seed, seed+1, ...
    #[arg(long, default_value_t = 1)]
    replications: usize,
    /// Solve the instance as written instead of shifting costs nonnegative.
    #[arg(long)]
    no_shift: bool,
    /// Also solve the extensive form and report the gap.
    #[arg(long)]
    compare_oracle: bool,
    /// State dump to resume (sdlp) or to evaluate.
    #[arg(long)]
    state: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    rollouts: usize,
    #[arg(long, value_enum, default_value = "bfp")]
    policy: PolicyArg,
    /// Write every sampled path as JSON lines.
    #[arg(long)]
    path_log: bool,
}

impl Common {
    fn config(self, algorithm: Algorithm) -> RunConfig {
        let iterations = self.iterations.unwrap_or(match algorithm {
            Algorithm::Sddp => 200,
            _ => 2000,
        });
        RunConfig {
            algorithm,
            instance: self.instance,
            seed: self.seed,
            iterations,
            sigma: self.sigma,
            q: self.q,
            max_pieces: self.max_pieces,
            n_paths: self.n_paths,
            probe_checks: matches!(self.probe_checks, Toggle::On),
            out_dir: self.out_dir,
            replications: self.replications,
            shift: !self.no_shift,
            compare_oracle: self.compare_oracle,
            state: self.state,
            rollouts: self.rollouts,
            policy: match self.policy {
                PolicyArg::Greedy => PolicyKind::Greedy,
                PolicyArg::Bfp => PolicyKind::Bfp,
            },
            path_log: self.path_log,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let (algorithm, common) = match cli.command {
        Command::Validate(c) => (Algorithm::Validate, c),
        Command::Extensive(c) => (Algorithm::Extensive, c),
        Command::Sddp(c) => (Algorithm::Sddp, c),
        Command::Sdlp(c) => (Algorithm::Sdlp, c),
        Command::Evaluate(c) => (Algorithm::Evaluate, c),
        Command::Run { algorithm, common } => (
            match algorithm {
                AlgorithmArg::Validate => Algorithm::Validate,
                AlgorithmArg::Extensive => Algorithm::Extensive,
                AlgorithmArg::Sddp => Algorithm::Sddp,
                AlgorithmArg::Sdlp => Algorithm::Sdlp,
                AlgorithmArg::Evaluate => Algorithm::Evaluate,
            },
            common,
        ),
    };
    let config = common.config(algorithm);
    match run(&config) {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            for a in &outcome.artifacts {
                log::info!("wrote {}", a.display());
            }
            ExitCode::from(outcome.status as u8)
        }
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(error_status(&e) as u8)
        }
    }
}
