use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use scalekit_cli::{run, Mode, RunConfig};

#[derive(Parser)]
#[command(name = "scalekit", version, about = "Scale functions, exit identities and their Monte Carlo verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every task in the config.
    Run(Opts),
    /// Run only the verification tasks.
    Verify(Opts),
}

#[derive(Args)]
struct Opts {
    config: PathBuf,
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the number of Monte Carlo worker threads.
    #[arg(long)]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (opts, mode) = match cli.command {
        Command::Run(o) => (o, Mode::All),
        Command::Verify(o) => (o, Mode::VerifyOnly),
    };
    let mut cfg = match RunConfig::load(&opts.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    if let Some(o) = opts.out {
        cfg.out_dir = o;
    }
    if let Some(w) = opts.workers {
        cfg.workers = w;
    }
    match run(&cfg, mode) {
        Ok(outcome) => {
            let s = outcome.report.summary;
            if s.total > 0 {
                eprintln!("{} checks: {} passed, {} failed", s.total, s.passed, s.failed);
            }
            for row in outcome.report.rows.iter().filter(|r| !r.passed()) {
                eprintln!(
                    "FAIL {}: analytic {} oracle {} budget {}",
                    row.identity, row.analytic, row.oracle, row.budget
                );
            }
            ExitCode::from(outcome.status() as u8)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
