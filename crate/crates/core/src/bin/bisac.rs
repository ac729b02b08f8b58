use std::path::PathBuf;
use std::process::ExitCode;

use bisac_core::experiments::{run, write_atomic, Experiment, RunOptions};
use bisac_core::scenario::{Scenario, SweepSpec};
use bisac_core::Error;
use clap::Parser;

/// Joint beamforming experiments for a backscatter ISAC link.
#[derive(Parser, Debug)]
#[command(name = "bisac", version)]
struct Cli {
    /// solve, convergence-trace, beampattern, power-sweep or detection-roc
    #[arg(value_parser = parse_experiment)]
    experiment: Experiment,
    /// Scenario file (TOML)
    scenario: PathBuf,
    /// Output directory, created if missing
    #[arg(long)]
    out: PathBuf,
    /// Override the scenario seed
    #[arg(long)]
    seed: Option<u64>,
    /// Sweep one numeric scenario key, e.g. p_t_dbm=0:30:5
    #[arg(long, value_parser = parse_sweep)]
    sweep: Option<SweepSpec>,
}

fn parse_experiment(s: &str) -> Result<Experiment, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_sweep(s: &str) -> Result<SweepSpec, String> {
    SweepSpec::parse(s).map_err(|e| e.to_string())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse(_) => 2,
        Error::Validation(_) | Error::InvalidArgument(_) => 3,
        Error::InfeasibleScenario { .. } => 4,
        Error::Solver { .. } => 5,
        Error::Io(_) | Error::Json(_) | Error::Csv(_) => 1,
    }
}

fn error_json(e: &Error, code: u8) -> serde_json::Value {
    let mut v = serde_json::json!({
        "error": e.kind(),
        "message": e.to_string(),
        "exit_code": code,
    });
    match e {
        Error::InfeasibleScenario { constraint, .. } => {
            v["constraint"] = serde_json::to_value(constraint).unwrap_or_default();
        }
        Error::Solver { stage, iteration, state } => {
            v["stage"] = (*stage).into();
            v["iteration"] = (*iteration).into();
            v["state"] = serde_json::to_value(state).unwrap_or_default();
        }
        _ => {}
    }
    v
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = Scenario::from_path(&cli.scenario).and_then(|scenario| {
        let opts = RunOptions {
            experiment: cli.experiment,
            out_dir: cli.out.clone(),
            seed: cli.seed,
            sweep: cli.sweep.clone(),
        };
        run(&scenario, &opts)
    });
    match result {
        Ok(manifest) => {
            for f in &manifest.files {
                println!("{}", cli.out.join(f).display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let code = exit_code(&e);
            let body = error_json(&e, code);
            eprintln!("{body}");
            if std::fs::create_dir_all(&cli.out).is_ok() {
                let mut bytes = serde_json::to_vec_pretty(&body).unwrap_or_default();
                bytes.push(b'\n');
                let _ = write_atomic(&cli.out, "error.json", &bytes);
            }
            ExitCode::from(code)
        }
    }
}
