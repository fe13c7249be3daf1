//! Scenario runner: executes closed-loop episodes and writes CSVs plus a
//! gnuplot script. Scenarios come from files or from built-in presets
//! addressed as `preset:NAME`. Exit codes: 0 success, 2 scenario parse or
//! validation error, 1 runtime error.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rangeloc::output::{summarize, write_timeseries, SUMMARY_DISAGREEMENT_THRESHOLD};
use rangeloc::scenario::{self, Scenario};
use rangeloc::simulator::{run, RunOptions};

#[derive(Parser)]
#[command(name = "rangeloc", version, about = "distance-only localization and consensus simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an episode and write agents.csv, edges.csv, summary.csv, plot.gp.
    Run {
        /// Scenario file path or preset:NAME
        scenario: String,
        /// Output directory (created if missing)
        #[arg(long)]
        out: PathBuf,
        /// Override the scenario's RNG seed
        #[arg(long)]
        seed: Option<u64>,
        /// Bypass the estimator and feed ground truth to the controller
        #[arg(long)]
        exact_measurements: bool,
    },
    /// Parse and validate a scenario, printing any warnings.
    Validate {
        /// Scenario file path or preset:NAME
        scenario: String,
    },
    /// List built-in presets.
    Presets,
}

fn load_scenario(arg: &str) -> Result<Scenario, String> {
    if arg.starts_with("preset:") {
        return scenario::from_source(arg).map_err(|e| e.to_string());
    }
    let text = fs::read_to_string(arg).map_err(|e| format!("cannot read {arg}: {e}"))?;
    scenario::from_source(&text).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Presets => {
            for (name, blurb) in scenario::preset_names() {
                println!("preset:{name}  -  {blurb}");
            }
            ExitCode::SUCCESS
        }
        Command::Validate { scenario: arg } => match load_scenario(&arg) {
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
            Ok(s) => match s.validate() {
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
                Ok(warnings) => {
                    for w in &warnings {
                        println!("warning: {w}");
                    }
                    println!(
                        "ok: {} agents, {} edges, {} windows, mode {:?}",
                        s.agents.len(),
                        s.edges.len(),
                        s.windows,
                        s.mode
                    );
                    ExitCode::SUCCESS
                }
            },
        },
        Command::Run {
            scenario: arg,
            out,
            seed,
            exact_measurements,
        } => {
            let s = match load_scenario(&arg) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            if let Err(e) = s.validate() {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            let options = RunOptions {
                exact_measurements,
                seed_override: seed,
            };
            let ts = match run(&s, options) {
                Ok(ts) => ts,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::FAILURE;
                }
            };
            match write_timeseries(&ts, &out) {
                Ok(_) => {}
                Err(e) => {
                    eprintln!("error: cannot write output: {e}");
                    return ExitCode::FAILURE;
                }
            }
            let m = summarize(&ts, SUMMARY_DISAGREEMENT_THRESHOLD);
            println!("rounds:             {}", s.windows);
            println!("final disagreement: {:.6} m/s", m.final_disagreement);
            println!("final shape error:  {:.6} m", m.final_shape_error);
            match m.rounds_to_disagreement_below {
                Some(r) => println!("disagreement below {SUMMARY_DISAGREEMENT_THRESHOLD}: round {r}"),
                None => println!("disagreement below {SUMMARY_DISAGREEMENT_THRESHOLD}: never"),
            }
            println!("max |d_hat - d|:    {:.6} m", m.max_estimate_error);
            println!("wrote {}", out.display());
            ExitCode::SUCCESS
        }
    }
}
