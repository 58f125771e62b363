//! Thin command-line front end over [`minent::scenario`].

use clap::{Parser, Subcommand};
use minent::scenario;

#[derive(Parser)]
#[command(name = "minent", about = "One-shot entropy inequality verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario in FILE and report per-trial slacks.
    Verify {
        /// Scenario file (flat `key = value` lines).
        file: String,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the trial count.
        #[arg(long)]
        trials: Option<usize>,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<String>,
        /// Report format.
        #[arg(long, default_value = "table", value_parser = ["json", "table"])]
        format: String,
    },
    /// List the runnable check names.
    ListChecks,
    /// Generate a seeded instance file.
    Gen {
        /// Instance family (ginibre_mixed, haar_pure, random_classical,
        /// footnote-distribution, bell, ghz).
        family: String,
        /// Register dimensions, comma separated (e.g. `2,2`).
        dims: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: String,
    },
}

fn main() {
    let cli = Cli::parse();
    std::process::exit(match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    });
}

fn run(cli: Cli) -> minent::Result<i32> {
    match cli.command {
        Command::Verify {
            file,
            seed,
            trials,
            out,
            format,
        } => {
            let text = std::fs::read_to_string(&file)?;
            let mut sc = scenario::parse_scenario(&text)?;
            if let Some(s) = seed {
                sc.seed = s;
            }
            if let Some(t) = trials {
                sc.trials = t;
            }
            let reports = scenario::run_scenario(&sc)?;
            match out {
                Some(path) => {
                    let mut f = std::fs::File::create(path)?;
                    scenario::emit_report(&reports, &format, &mut f)?;
                }
                None => {
                    let stdout = std::io::stdout();
                    let mut lock = stdout.lock();
                    scenario::emit_report(&reports, &format, &mut lock)?;
                }
            }
            if !reports.is_empty() {
                let min_slack = reports
                    .iter()
                    .map(|r| r.slack)
                    .fold(f64::INFINITY, f64::min);
                let mean_slack =
                    reports.iter().map(|r| r.slack).sum::<f64>() / reports.len() as f64;
                eprintln!(
                    "{} trial(s): min slack {min_slack:.3e}, mean slack {mean_slack:.3e}",
                    reports.len()
                );
            }
            Ok(if reports.iter().all(|r| r.passed) { 0 } else { 1 })
        }
        Command::ListChecks => {
            use std::io::Write;
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            for c in scenario::CHECKS {
                // tolerate a closed pipe (e.g. `minent list-checks | head`)
                if writeln!(lock, "{c}").is_err() {
                    break;
                }
            }
            Ok(0)
        }
        Command::Gen {
            family,
            dims,
            seed,
            out,
        } => {
            let dims: Vec<usize> = dims
                .split(',')
                .map(|d| {
                    d.trim()
                        .parse::<usize>()
                        .map_err(|_| minent::Error::Scenario(format!("bad dimension `{d}`")))
                })
                .collect::<minent::Result<_>>()?;
            scenario::write_instance_file(&family, &dims, seed, &out)?;
            Ok(0)
        }
    }
}
