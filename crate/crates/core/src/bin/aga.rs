use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use aga_core::experiment::{self, ExperimentConfig, ExperimentError, Options};

/// Run gradient-dynamics experiments on differentiable games.
#[derive(Parser)]
#[command(name = "aga", version)]
struct Cli {
    /// Override the config's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores). Output does not depend on this.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Experiment directory; defaults to <output_dir or $AGA_OUTPUT_DIR>/<name>.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write trajectory CSVs and summary.json.
    Run { config: PathBuf },
    /// Render reward contours with the recorded trajectories.
    Plot { config: PathBuf },
    /// Print the public goods comparison table and write table1.json.
    Table1 { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = Options {
        seed: cli.seed,
        jobs: cli.jobs,
        out: cli.out,
    };
    match dispatch(cli.command, &opts) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command, opts: &Options) -> Result<(), ExperimentError> {
    match command {
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let files = experiment::run(&cfg, opts)?;
            println!(
                "wrote {} files to {}",
                files.len(),
                experiment::experiment_dir(&cfg, opts).display()
            );
        }
        Command::Plot { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            for f in experiment::plot(&cfg, opts)? {
                println!("{}", f.display());
            }
        }
        Command::Table1 { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let (table, path) = experiment::table1(&cfg, opts)?;
            print!("{table}");
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}
