//! CSV (RFC 4180) and JSON-lines writers.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use clap::ValueEnum;
use umdlab_core::verify::{Check, CriterionReport};

use crate::experiments::ExperimentReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Jsonl,
}

pub fn sink(out: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| crate::config::usage(format!("--out: cannot create {}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn check_row(c: &Check) -> [String; 6] {
    ["check".into(), c.name.clone(), c.value.to_string(), String::new(), opt(c.lower), opt(c.upper)]
}

pub fn write_experiments(reports: &[ExperimentReport], format: Format, w: &mut dyn Write) -> anyhow::Result<()> {
    match format {
        Format::Jsonl => {
            for r in reports {
                serde_json::to_writer(&mut *w, r)?;
                writeln!(w)?;
            }
        }
        Format::Csv => {
            let mut c = csv::Writer::from_writer(&mut *w);
            c.write_record([
                "experiment", "seed", "sweep_param", "sweep_value", "record", "name", "value", "std_error", "lower", "upper", "pass",
            ])?;
            for r in reports {
                let (sp, sv) = match &r.point {
                    Some(p) => (p.param.clone(), p.value.to_string()),
                    None => (String::new(), String::new()),
                };
                let head = [r.experiment.clone(), r.seed.to_string(), sp, sv];
                for m in &r.metrics {
                    let row = ["metric".into(), m.name.clone(), m.value.to_string(), opt(m.std_error), String::new(), String::new()];
                    c.write_record(head.iter().chain(&row).chain(std::iter::once(&String::new())))?;
                }
                for ch in &r.checks {
                    c.write_record(head.iter().chain(&check_row(ch)).chain(std::iter::once(&ch.pass.to_string())))?;
                }
            }
            c.flush()?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_criteria(reports: &[CriterionReport], format: Format, w: &mut dyn Write) -> anyhow::Result<()> {
    match format {
        Format::Jsonl => {
            for r in reports {
                serde_json::to_writer(&mut *w, r)?;
                writeln!(w)?;
            }
        }
        Format::Csv => {
            let mut c = csv::Writer::from_writer(&mut *w);
            c.write_record(["criterion", "title", "record", "name", "value", "std_error", "lower", "upper", "pass"])?;
            for r in reports {
                let head = [r.id.to_string(), r.title.clone()];
                for ch in &r.checks {
                    c.write_record(head.iter().chain(&check_row(ch)).chain(std::iter::once(&ch.pass.to_string())))?;
                }
                for o in &r.observations {
                    let row = ["observation".into(), o.name.clone(), o.value.to_string(), String::new(), String::new(), String::new()];
                    c.write_record(head.iter().chain(&row).chain(std::iter::once(&String::new())))?;
                }
            }
            c.flush()?;
        }
    }
    w.flush()?;
    Ok(())
}
