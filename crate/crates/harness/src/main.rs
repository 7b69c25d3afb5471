use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dusa_core::lowerbound::{lower_bound_dual, LowerBoundProgram};
use dusa_harness::runner::{run_experiment, write_outputs};
use dusa_harness::validate::{validate, SUITES};
use dusa_harness::{ExperimentConfig, HarnessError};

#[derive(Parser)]
#[command(name = "dusa", version, about = "Structured bandit experiments and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the regret lower bound, rates and arm classification of each instance.
    Lowerbound { config: PathBuf },
    /// Simulate every policy on every instance and write the CSV.
    Run {
        config: PathBuf,
        /// Overrides the output path of the config.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a property suite: duality, cones, decomposition, lowerbound or concentration.
    Validate {
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write the lower-bound conic program of each instance as text.
    DumpProgram {
        config: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("BANDIT_LOG", "error")).init();
    match run(Cli::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("[{}]", parts.join(", "))
}

fn run(command: Command) -> Result<bool, HarnessError> {
    match command {
        Command::Lowerbound { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            for inst in cfg.instances()? {
                let lb = lower_bound_dual(&inst.spec, &inst.p)?;
                println!("instance {}", inst.id);
                println!("  value {:.8} ({:?})", lb.value, lb.status);
                println!("  rates {}", fmt_vec(&lb.rates));
                println!("  deceitful {:?}", lb.deceitful);
                println!("  non-deceitful {:?}", lb.non_deceitful);
            }
            Ok(true)
        }
        Command::Run { config, output } => {
            let cfg = ExperimentConfig::load(&config)?;
            let path = output
                .or_else(|| cfg.output.clone())
                .ok_or_else(|| HarnessError::Config("no output path in the config or on the command line".into()))?;
            let out = run_experiment(&cfg)?;
            write_outputs(&path, &out)?;
            let failed = out.runs.iter().filter(|r| r.error.is_some()).count();
            println!("{} runs written to {} ({failed} with errors)", out.runs.len(), path.display());
            Ok(failed == 0)
        }
        Command::Validate { suite, seed } => {
            if !SUITES.contains(&suite.as_str()) {
                return Err(HarnessError::UnknownSuite(suite));
            }
            let report = validate(&suite, seed)?;
            print!("{report}");
            Ok(report.passed())
        }
        Command::DumpProgram { config, output } => {
            let cfg = ExperimentConfig::load(&config)?;
            let mut text = String::new();
            for inst in cfg.instances()? {
                text.push_str(&format!("# instance {}\n", inst.id));
                match LowerBoundProgram::build(&inst.spec, &inst.p, None)? {
                    Some(lb) => text.push_str(&lb.program.to_text()),
                    None => text.push_str("# no deceitful arm: the bound is zero\n"),
                }
            }
            match output {
                Some(path) => std::fs::write(&path, text).map_err(|e| HarnessError::Io(e.to_string()))?,
                None => print!("{text}"),
            }
            Ok(true)
        }
    }
}
