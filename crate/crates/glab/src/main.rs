//! `glab` — batch experiment runner. Reads a JSON experiment config, runs
//! the requested pipeline, and writes JSON/CSV reports plus static plots.
//!
//! Exit codes: 0 all checks passed; 1 a check failed or the solver did not
//! converge; 2 config/schema violation.

use clap::{Parser, Subcommand};
use gaudin::config::ExperimentConfig;
use gaudin::pipeline::{run, PipelineReport};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

mod plot;

#[derive(Parser)]
#[command(name = "glab", about = "Gaudin-model experiment pipelines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline selected by the config file
    Run {
        #[arg(long)]
        config: PathBuf,
        /// output directory for report.json and CSV files
        #[arg(long)]
        out: PathBuf,
        /// override the config seed
        #[arg(long)]
        seed: Option<u64>,
        /// scale every tolerance by this factor
        #[arg(long, default_value_t = 1.0)]
        tol_scale: f64,
    },
    /// Render static plots (SVG + CSV) from a report
    Plot {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config, out, seed, tol_scale } => run_cmd(&config, &out, seed, tol_scale),
        Command::Plot { report, out } => plot_cmd(&report, &out),
    }
}

fn run_cmd(config: &Path, out: &Path, seed: Option<u64>, tol_scale: f64) -> ExitCode {
    let bytes = match std::fs::read(config) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", config.display());
            return ExitCode::from(2);
        }
    };
    let raw = match ExperimentConfig::from_json_bytes(&bytes) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    let mut validated = match raw.validate() {
        Ok(v) => v,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(s) = seed {
        validated.seed = s;
    }
    if tol_scale != 1.0 {
        validated.tolerances = validated.tolerances.scaled(tol_scale);
        validated.monodromy_tol *= tol_scale;
    }
    let report = match run(&validated) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("pipeline error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Err(e) = write_report(&report, out) {
        eprintln!("error writing report: {e}");
        return ExitCode::from(1);
    }
    for c in &report.checks {
        println!(
            "[{}] {} ({}) — {}",
            if c.passed { "pass" } else { "FAIL" },
            c.id,
            c.operation,
            c.detail
        );
    }
    if report.all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn write_report(report: &PipelineReport, out: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(out)?;
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    std::fs::write(out.join("report.json"), json)?;
    // frozen CSV columns: class,color,w_re,w_im,residual
    let mut csv = String::from("class,color,w_re,w_im,residual\n");
    for (class, sol) in report.artifacts.solutions.iter().enumerate() {
        for ((color, (re, im)), res) in sol
            .coloring
            .iter()
            .zip(&sol.w)
            .zip(&sol.residual)
        {
            csv.push_str(&format!("{class},{color},{re:e},{im:e},{res:e}\n"));
        }
        if sol.coloring.is_empty() {
            csv.push_str(&format!("{class},,,,0\n"));
        }
    }
    std::fs::write(out.join("solutions.csv"), csv)?;
    Ok(())
}

fn plot_cmd(report_path: &Path, out: &Path) -> ExitCode {
    let bytes = match std::fs::read(report_path) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", report_path.display());
            return ExitCode::from(2);
        }
    };
    let report: serde_json::Value = match serde_json::from_slice(&bytes) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: bad report JSON: {e}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = plot::render(&report, out) {
        eprintln!("plot error: {e}");
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}
