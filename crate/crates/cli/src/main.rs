use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use roughbsde_cli::run::{default_out_dir, run_config, write_config, RunOptions};
use roughbsde_cli::{builtin, config, convergence_study, CliError, Config};

#[derive(Parser)]
#[command(name = "roughbsde", version, about = "Rough quadratic BSDE scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory (default: $ROUGHBSDE_OUT or ./roughbsde-out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides every Monte Carlo seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Runs the scenarios of a config file, or the built-in acceptance suite.
    Run {
        config: Option<PathBuf>,
        #[arg(long, conflicts_with = "config")]
        all_acceptance: bool,
    },
    /// Error against the reference oracle under geometric refinement.
    Study {
        config: PathBuf,
        #[arg(long, default_value_t = 3)]
        levels: u32,
    },
    /// Writes the built-in acceptance and study configs as JSON.
    Builtin {
        #[arg(long)]
        study: bool,
        file: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let out = cli.out.unwrap_or_else(default_out_dir);
    match cli.command {
        Command::Run { config, all_acceptance } => {
            let cfg: Config = match (config, all_acceptance) {
                (_, true) => builtin::acceptance(),
                (Some(path), false) => config::load(&path)?,
                (None, false) => {
                    return Err(CliError::Validation(vec!["give a config file or --all-acceptance".into()]))
                }
            };
            let report = run_config(&cfg, &RunOptions { out, seed: cli.seed })?;
            println!("{report}");
            Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Study { config, levels } => {
            let mut cfg = config::load(&config)?;
            if let Some(seed) = cli.seed {
                cfg.scenarios.iter_mut().for_each(|s| s.task.override_seed(seed));
            }
            for (name, rows) in convergence_study(&cfg, levels, &out)? {
                println!("{name}");
                println!("  level  n_steps  n_paths  lift  estimate      se          error");
                for r in rows {
                    println!(
                        "  {:<5}  {:<7}  {:<7}  {:<4}  {:<12.6e}  {:<10.3e}  {:.3e}",
                        r.level,
                        r.n_steps,
                        r.n_paths,
                        r.lift_level.map(|l| l.to_string()).unwrap_or_else(|| "-".into()),
                        r.estimate,
                        r.se,
                        r.error
                    );
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Builtin { study, file } => {
            let cfg = if study { builtin::study() } else { builtin::acceptance() };
            write_config(&cfg, &file)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
