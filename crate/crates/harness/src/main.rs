use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use lichnerowicz_core::bubbles::blowup_constants;
use lichnerowicz_harness::report::{csv_string, demo_json, suite_json, sweep_json, write_file};
use lichnerowicz_harness::sweep::run_solve;
use lichnerowicz_harness::{
    run_instability_demo, run_sweep, run_verification_suite, DemoOptions, HarnessError, SweepConfig, Verdict,
};

#[derive(Parser)]
#[command(name = "lichnerowicz", version, about = "Conformal constraint solver: sweeps, demos and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Outputs {
    /// CSV table destination (stdout when omitted)
    #[arg(long)]
    csv: Option<PathBuf>,
    /// JSON summary destination (stderr when omitted)
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the system once for the base data of a config file
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        out: Outputs,
    },
    /// Run a stability sweep
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Verdict required for a zero exit code
        #[arg(long, value_parser = ["Stable-band", "VanishingLimit", "NonConvergent"])]
        expect: Option<String>,
        #[command(flatten)]
        out: Outputs,
    },
    /// Blow-up family on the round 3-sphere
    Instability3 {
        #[arg(long, value_delimiter = ',', default_values_t = vec![1.5, 1.1, 1.01])]
        lambdas: Vec<f64>,
        #[arg(long, default_value_t = 4096)]
        nodes: usize,
        #[arg(long, default_value_t = 8)]
        substeps: usize,
        #[command(flatten)]
        out: Outputs,
    },
    /// Run the invariant suites
    Verify {
        /// `all`, a group (geometry, bubbles, constants, green, diagnostics) or a check name
        #[arg(long, default_value = "all")]
        select: String,
        #[command(flatten)]
        out: Outputs,
    },
    /// Print the blow-up constants for dimension n
    Constants {
        #[arg(long)]
        n: usize,
    },
}

fn emit<T: Serialize>(rows: &[T], json: serde_json::Value, out: &Outputs) -> Result<(), HarnessError> {
    let table = csv_string(rows)?;
    match &out.csv {
        Some(p) => write_file(p, &table)?,
        None => print!("{table}"),
    }
    let text = serde_json::to_string_pretty(&json).map_err(|e| HarnessError::Io(e.to_string()))?;
    match &out.json {
        Some(p) => write_file(p, &(text + "\n"))?,
        None => eprintln!("{text}"),
    }
    Ok(())
}

fn config_outputs(cfg: &SweepConfig, out: Outputs) -> Outputs {
    Outputs { csv: out.csv.or_else(|| cfg.output.csv.clone()), json: out.json.or_else(|| cfg.output.json.clone()) }
}

fn run(cli: Cli) -> Result<bool, HarnessError> {
    match cli.command {
        Command::Solve { config, out } => {
            let cfg = SweepConfig::from_file(&config)?;
            let out = config_outputs(&cfg, out);
            let (row, _) = run_solve(&cfg)?;
            let json = serde_json::json!({
                "kind": "solve",
                "verdict": if row.converged { "pass" } else { "fail" },
                "config_hash": cfg.hash(),
                "versions": { "lichnerowicz-core": lichnerowicz_core::VERSION, "lichnerowicz-harness": env!("CARGO_PKG_VERSION") },
            });
            emit(std::slice::from_ref(&row), json, &out)?;
            Ok(row.converged)
        }
        Command::Sweep { config, expect, out } => {
            let cfg = SweepConfig::from_file(&config)?;
            let out = config_outputs(&cfg, out);
            let report = run_sweep(&cfg)?;
            emit(&report.rows, sweep_json(&report), &out)?;
            Ok(match expect {
                Some(v) => report.summary.verdict.to_string() == v,
                None => report.summary.verdict != Verdict::NonConvergent,
            })
        }
        Command::Instability3 { lambdas, nodes, substeps, out } => {
            let opts = DemoOptions { nodes, substeps, ..Default::default() };
            let report = run_instability_demo(&lambdas, &opts)?;
            emit(&report.rows, demo_json(&report), &out)?;
            Ok(report.pass)
        }
        Command::Verify { select, out } => {
            let report = run_verification_suite(&select)?;
            emit(&report.rows, suite_json(&report), &out)?;
            Ok(report.pass)
        }
        Command::Constants { n } => {
            let c = blowup_constants(n).map_err(|e| HarnessError::Config(e.to_string()))?;
            #[derive(Serialize)]
            struct Row {
                n: usize,
                c1: f64,
                c2: f64,
                kn_inv_n: f64,
                cn: f64,
            }
            print!("{}", csv_string(&[Row { n, c1: c.c1, c2: c.c2, kn_inv_n: c.kn_inv_n, cn: c.cn }])?);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
