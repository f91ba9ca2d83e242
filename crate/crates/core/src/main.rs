use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cmjlab::config::Config;
use cmjlab::harness::{run, Command};
use cmjlab::Error;

#[derive(Parser)]
#[command(
    name = "cmjlab",
    version,
    about = "Recursive trees with fitness and CMJ branching experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Key-value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides `seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides `replicates` in the config.
    #[arg(long, global = true)]
    replicates: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Grow a recursive tree with fitness.
    TreeGrow,
    /// Run the continuous-time branching process.
    CmjRun,
    /// Compare pure-birth moments with their closed forms.
    BirthMoments,
    /// Evaluate an explosion criterion or the condensation sum.
    Criterion,
    /// Classify a linear-fitness model into its structural phase.
    Classify,
    /// Classify a grid of weight parameters.
    PhaseSweep,
    /// Search for explosion witness paths.
    Witness,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::TreeGrow => Command::TreeGrow,
            Cmd::CmjRun => Command::CmjRun,
            Cmd::BirthMoments => Command::BirthMoments,
            Cmd::Criterion => Command::Criterion,
            Cmd::Classify => Command::Classify,
            Cmd::PhaseSweep => Command::PhaseSweep,
            Cmd::Witness => Command::Witness,
        }
    }
}

fn load(cli: &Cli) -> cmjlab::Result<Config> {
    let mut cfg = match &cli.config {
        Some(path) => Config::from_file(path)?,
        None => Config::new(),
    };
    if let Some(seed) = cli.seed {
        cfg.set("seed", seed);
    }
    if let Some(r) = cli.replicates {
        cfg.set("replicates", r);
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let outcome = load(&cli).and_then(|cfg| run(cli.command.into(), &cfg, &cli.out));
    match outcome {
        Ok(report) => {
            print!("{}", report.summary);
            eprintln!(
                "wrote {} files to {} in {:.2} s",
                report.files.len() + 1,
                cli.out.display(),
                report.seconds
            );
            ExitCode::SUCCESS
        }
        Err(e @ Error::Config { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
