// Copyright 2026 chiralwg Contributors
// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use chiralwg_cli::output::write_error;
use chiralwg_cli::scenario::default_dir;
use chiralwg_cli::{configure_threads, parse_scenario_with, run_scenario, CliError, Kind, Overrides};
use clap::Parser;

/// Chiral waveguide QED simulations driven by JSON scenario files.
#[derive(Parser, Debug)]
#[command(name = "chiralwg", version)]
struct Args {
    /// scatter, spectrum, chain, evolve, steady, trajectories, field-map,
    /// transfer, dimer-scan or device
    kind: String,
    #[arg(long)]
    config: PathBuf,
    /// Override a config value, e.g. `--set t_final=20`
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

fn fail(dir: &std::path::Path, err: CliError) -> ExitCode {
    eprintln!("{}", err.to_json());
    write_error(dir, &err);
    ExitCode::from(1)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(&default_dir(), CliError::Config(e.render().to_string())),
    };
    let fallback_dir = args.out.clone().unwrap_or_else(default_dir);
    if let Err(e) = configure_threads() {
        return fail(&fallback_dir, e);
    }
    let kind = match args.kind.parse::<Kind>() {
        Ok(k) => k,
        Err(e) => return fail(&fallback_dir, e),
    };
    let overrides = Overrides {
        kind: Some(kind),
        set: args.set,
        out: args.out,
        seed: args.seed,
    };
    let scenario = match parse_scenario_with(&args.config, &overrides) {
        Ok(s) => s,
        Err(e) => return fail(&fallback_dir, e),
    };
    match run_scenario(&scenario) {
        Ok(summary) => {
            println!("{}", summary.line);
            ExitCode::SUCCESS
        }
        Err(e) => fail(&scenario.output.dir, e),
    }
}
