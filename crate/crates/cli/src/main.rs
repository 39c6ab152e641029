//! `umdlab`: run, sweep and verify experiments from JSON configs.
//!
//! Exit codes: 0 every assertion held, 1 an assertion failed, 2 usage error.

mod config;
mod defaults;
mod experiments;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::Value;
use umdlab_core::rng;
use umdlab_core::verify::{self, VerifySettings};

use config::{usage, ExperimentConfig};
use experiments::SweepPoint;
use output::Format;

#[derive(Parser)]
#[command(name = "umdlab", version, about = "Seeded Monte Carlo and Fourier experiments on sharp martingale and multiplier bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Seed; overrides the config's `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Path count; overrides `params.paths` (or every path count in verify-all).
    #[arg(long)]
    paths: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment.
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run one experiment for each value of a parameter.
    Sweep {
        config: PathBuf,
        /// Name of the `params` entry to vary.
        #[arg(long)]
        param: String,
        /// Comma-separated values, each parsed as JSON (bare words as strings).
        #[arg(long)]
        values: String,
        #[command(flatten)]
        common: Common,
    },
    /// Run the acceptance suite.
    VerifyAll {
        #[command(flatten)]
        common: Common,
    },
    /// Print the table of parameter defaults.
    Defaults,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            // every failure before an assertion is reached is a usage error
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn threads() -> anyhow::Result<()> {
    let Ok(v) = std::env::var("LAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| usage(format!("LAB_THREADS: expected a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("LAB_THREADS: cannot size the worker pool")?;
    Ok(())
}

fn read_config(path: &PathBuf, common: &Common) -> anyhow::Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    ExperimentConfig::parse(&text, common.seed, common.paths)
}

fn verdict(label: &str, pass: bool) {
    eprintln!("{label}: {}", if pass { "PASS" } else { "FAIL" });
}

fn dispatch(cli: Cli) -> anyhow::Result<bool> {
    threads()?;
    match cli.command {
        Command::Run { config, common } => {
            let cfg = read_config(&config, &common)?;
            let report = experiments::run(&cfg)?;
            let out = common.out.clone().or(cfg.output.clone());
            output::write_experiments(std::slice::from_ref(&report), common.format.unwrap_or(Format::Jsonl), &mut *output::sink(out.as_deref())?)?;
            verdict(&report.experiment, report.pass);
            Ok(report.pass)
        }
        Command::Sweep { config, param, values, common } => {
            let cfg = read_config(&config, &common)?;
            if param == "paths" && common.paths.is_some() {
                return Err(usage("--param paths conflicts with --paths"));
            }
            let points: Vec<Value> = values
                .split(',')
                .map(|v| serde_json::from_str(v.trim()).unwrap_or_else(|_| Value::String(v.trim().to_string())))
                .collect();
            let reports = points
                .par_iter()
                .enumerate()
                .map(|(i, v)| {
                    let mut c = cfg.clone();
                    c.params.insert(param.clone(), v.clone());
                    c.seed = rng::mix(cfg.seed, i as u64);
                    let mut r = experiments::run(&c).with_context(|| format!("sweep point {param}={v}"))?;
                    r.point = Some(SweepPoint { param: param.clone(), value: v.clone() });
                    Ok(r)
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            let out = common.out.clone().or(cfg.output.clone());
            output::write_experiments(&reports, common.format.unwrap_or(Format::Csv), &mut *output::sink(out.as_deref())?)?;
            let pass = reports.iter().all(|r| r.pass);
            verdict(&format!("sweep over {} points", reports.len()), pass);
            Ok(pass)
        }
        Command::VerifyAll { common } => {
            let settings = VerifySettings { seed: common.seed.unwrap_or(0), paths: common.paths };
            if settings.paths == Some(0) {
                return Err(usage("--paths: must be positive"));
            }
            let mut reports = Vec::new();
            for id in verify::CRITERIA {
                let r = verify::run_criterion(id, &settings)?;
                eprintln!("{}", r.summary_line());
                reports.push(r);
            }
            output::write_criteria(&reports, common.format.unwrap_or(Format::Jsonl), &mut *output::sink(common.out.as_deref())?)?;
            Ok(reports.iter().all(|r| r.pass))
        }
        Command::Defaults => {
            let mut w = csv::Writer::from_writer(std::io::stdout().lock());
            w.write_record(["experiment", "parameter", "default"])?;
            for (e, p, v) in defaults::table() {
                w.write_record([e, p, v.as_str()])?;
            }
            w.flush()?;
            Ok(true)
        }
    }
}
