use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use banditplan::harness::{run_experiment, ExperimentConfig, ExperimentKind, Overrides};

#[derive(Parser)]
#[command(name = "banditplan", version, about = "Static experiment planning for contextual bandits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build plans from offline contexts.
    Plan(Common),
    /// Deploy a plan and record rewards.
    Sample(Common),
    /// Extract policies from recorded samples and score them.
    Evaluate(Common),
    /// Plan, sample, extract and score, over many trials.
    Pipeline(Common),
    /// Static versus adaptive sampling on the tree instance.
    Gap(Common),
    /// Model selection over a family of classes.
    Modsel(Common),
    /// Eluder-dimension estimates and certificates.
    Eluder(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, common) = match cli.command {
        Command::Plan(c) => (ExperimentKind::Plan, c),
        Command::Sample(c) => (ExperimentKind::Sample, c),
        Command::Evaluate(c) => (ExperimentKind::Evaluate, c),
        Command::Pipeline(c) => (ExperimentKind::Pipeline, c),
        Command::Gap(c) => (ExperimentKind::Gap, c),
        Command::Modsel(c) => (ExperimentKind::Modsel, c),
        Command::Eluder(c) => (ExperimentKind::Eluder, c),
    };
    let overrides = Overrides {
        seed: common.seed,
        trials: common.trials,
        out: common.out,
    };
    let result = ExperimentConfig::load(&common.config, &overrides).and_then(|cfg| run_experiment(kind, &cfg));
    match result {
        Ok(outcome) => {
            println!("wrote {}", outcome.out_dir.display());
            for (k, v) in outcome.summary {
                println!("{k} = {v}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("banditplan: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
