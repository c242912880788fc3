use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rmtl_cli::config::Overrides;
use rmtl_cli::{plot, prepare, run_experiment, runner, CliError, EXIT_ERROR, EXIT_OK};

#[derive(Parser)]
#[command(name = "rmtl", version, about = "Multi-task bound estimation and verification runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Replace the config's seed list with this single seed.
    #[arg(long, global = true)]
    seed_override: Option<u64>,
    /// Monte-Carlo trials for estimation and verification.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Root for relative output directories.
    #[arg(long, global = true, env = "RMTL_OUTPUT_ROOT")]
    output_root: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its report, tables, verdict log and plots.
    Run { config: PathBuf },
    /// Re-render the plots of an existing output directory.
    Plot { dir: PathBuf },
    /// Parse and validate a config without running it.
    Validate { config: PathBuf },
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j).build_global() {
            eprintln!("warning: could not size the worker pool: {e}");
        }
    }
    let overrides = Overrides {
        seed: cli.seed_override,
        trials: cli.trials,
    };
    match cli.command {
        Command::Validate { config } => match prepare(&config, &overrides) {
            Ok((cfg, family)) => {
                let cells = runner::cell_keys(&cfg).len();
                println!(
                    "ok: {} tasks, {} cells, config_hash {}",
                    family.task_count(),
                    cells,
                    cfg.hash()
                );
                ExitCode::from(EXIT_OK)
            }
            Err(e) => fail(e),
        },
        Command::Run { config } => match run_experiment(&config, &overrides, cli.output_root.as_deref()) {
            Ok(out) => {
                for w in &out.warnings {
                    eprintln!("warning: {w}");
                }
                let t = out.report.tally;
                println!(
                    "{}: {} held ({} vacuous), {} violated, {} withheld; validity {:?}",
                    out.dir.display(),
                    t.held,
                    t.vacuous,
                    t.violated,
                    t.withheld,
                    out.report.validity_verdict
                );
                ExitCode::from(out.report.exit_code)
            }
            Err(e) => fail(e),
        },
        Command::Plot { dir } => match plot::emit_plots(&dir) {
            Ok(out) => {
                for w in &out.warnings {
                    eprintln!("warning: {w}");
                }
                for p in &out.written {
                    println!("{}", p.display());
                }
                ExitCode::from(EXIT_OK)
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_ERROR)
            }
        },
    }
}
