use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ndslab::scenario::{
    collect_summaries, fixture_text, format_summaries, list_fixtures, parse_scenario,
    run_scenario_with, RunOptions, TaskStatus,
};

#[derive(Parser)]
#[command(
    name = "ndslab",
    version,
    about = "Simulate and verify nonautonomous discrete dynamical systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file (or the name of a shipped fixture).
    Run {
        scenario: String,
        /// Output root; overrides NDSLAB_OUT and the scenario's own setting.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Tolerance for the tolerance-bearing checks.
        #[arg(long)]
        tol: Option<f64>,
        /// Worker threads for grid sweeps. Does not change any output.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// List the shipped scenarios.
    Fixtures {
        /// Also write them as JSON files into this directory.
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Pretty-print the run summaries found in a directory.
    Report { dir: PathBuf },
}

fn load(arg: &str) -> Result<Vec<u8>, String> {
    let path = Path::new(arg);
    if path.exists() {
        return fs::read(path).map_err(|e| format!("{arg}: {e}"));
    }
    fixture_text(arg)
        .map(|t| t.as_bytes().to_vec())
        .ok_or_else(|| format!("{arg}: no such file or shipped fixture"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            scenario,
            out,
            tol,
            threads,
        } => {
            let text = match load(&scenario) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            let parsed = match parse_scenario(&text) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {scenario}: {e}");
                    return ExitCode::from(2);
                }
            };
            let opts = RunOptions {
                out_dir: out,
                tol,
                threads,
            };
            match run_scenario_with(&parsed, &opts) {
                Ok(summary) => {
                    for t in &summary.tasks {
                        let status = match t.status {
                            TaskStatus::Passed => "passed",
                            TaskStatus::Failed => "FAILED",
                            TaskStatus::ReportOnly => "report",
                            TaskStatus::Error => "ERROR",
                        };
                        println!("{:02} {:<22} {status}", t.index, t.task);
                        if let Some(e) = &t.error {
                            println!("   {e}");
                        }
                    }
                    println!("reports in {}", summary.out_dir);
                    ExitCode::from(summary.exit_code() as u8)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Command::Fixtures { export } => {
            for (name, description) in list_fixtures() {
                println!("{name:<20} {description}");
            }
            if let Some(dir) = export {
                let written = fs::create_dir_all(&dir).and_then(|_| {
                    list_fixtures().iter().try_for_each(|(name, _)| {
                        let text = fixture_text(name).expect("listed fixture exists");
                        fs::write(dir.join(format!("{name}.json")), text)
                    })
                });
                if let Err(e) = written {
                    eprintln!("error: {}: {e}", dir.display());
                    return ExitCode::from(2);
                }
            }
            ExitCode::SUCCESS
        }
        Command::Report { dir } => match collect_summaries(&dir) {
            Ok(s) if s.is_empty() => {
                eprintln!("no summary.json under {}", dir.display());
                ExitCode::from(2)
            }
            Ok(s) => {
                print!("{}", format_summaries(&s));
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
    }
}
