//! `finsler` — curvature runs, Schwarzian-route runs and the verification
//! suite, driven by a TOML config.
//!
//! Exit status: 0 on success, 1 on configuration or evaluation errors,
//! 2 when the verification suite reports a failing group.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use finsler_core::tol;
use finsler_core::verify::{run_suite, GroupReport, VerifyOptions};

use config::{OptionsConfig, RawConfig, RunOptions};
use report::ReportHeader;

#[derive(Parser)]
#[command(
    name = "finsler",
    version,
    about = "Numerical Finsler geometry: flag curvature, Chern connection checks and the Schwarzian route"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Flag curvature at explicitly declared evaluation points
    Curvature(RunArgs),
    /// Flag curvature over the declared grid, evaluated in parallel
    Sweep(RunArgs),
    /// One-dimensional route: phi', Schwarzian, curvature
    Schwarz(RunArgs),
    /// Run the bundled verification suite and emit its JSON report
    Verify(VerifyArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Path to the TOML run configuration
    #[arg(long)]
    config: PathBuf,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format: csv (default) or json
    #[arg(long)]
    format: Option<String>,
    /// Master seed for sampled directions and flag vectors
    #[arg(long)]
    seed: Option<u64>,
    /// Comparison tolerance for the in-row status column
    #[arg(long)]
    tol: Option<f64>,
    /// Flag vectors sampled per (x, y)
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Optional config; a [metric] table adds a config-metric check group
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the JSON report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed for every group's sample stream
    #[arg(long)]
    seed: Option<u64>,
    /// Flag vectors per scalar-curvature check
    #[arg(long)]
    samples: Option<usize>,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match cli.command {
        Command::Curvature(args) => curvature(args, false),
        Command::Sweep(args) => curvature(args, true),
        Command::Schwarz(args) => schwarz(args),
        Command::Verify(args) => verify(args),
    }
}

fn resolve_options(
    options: &OptionsConfig,
    args: &RunArgs,
    default_tolerance: f64,
) -> Result<RunOptions, config::ConfigError> {
    RunOptions::resolve(
        options,
        args.seed,
        args.tol,
        args.samples,
        args.format.as_deref(),
        args.out.as_ref().map(|p| p.display().to_string()),
        default_tolerance,
    )
}

fn curvature(args: RunArgs, sweep: bool) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let (raw, hash) = config::load(&args.config)?;
    let metric = raw
        .build_metric()?
        .ok_or_else(|| config_missing("metric"))?;
    let options = resolve_options(&raw.options, &args, tol::NUMATA_MATCH)?;
    let points = if sweep {
        raw.grid_points(metric.dim())?
    } else {
        raw.explicit_points(metric.dim())?
    };
    let directions = raw.directions(metric.dim())?;
    let rows = commands::curvature_rows(&metric, &points, &directions, &options);

    let command = if sweep { "sweep" } else { "curvature" };
    let header = ReportHeader::new(command, &hash, options.seed, options.samples, options.tolerance);
    let text = match options.format {
        config::OutputFormat::Csv => {
            let cells: Vec<Vec<String>> = rows.iter().map(|r| r.cells(metric.dim())).collect();
            report::to_csv(&header, &commands::CurvatureRow::columns(metric.dim()), &cells)
        }
        config::OutputFormat::Json => report::to_json(&header, &rows),
    };
    report::emit(&text, options.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn schwarz(args: RunArgs) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let (raw, hash) = config::load(&args.config)?;
    let options = resolve_options(&raw.options, &args, tol::CONSTANT_K)?;
    let (map, target) = raw.build_map()?;
    let points = raw.map_points(map.domain())?;
    let rows = commands::schwarz_rows(&map, target, &points, &options);

    let mut header = ReportHeader::new("schwarz", &hash, options.seed, options.samples, options.tolerance);
    // the subinterval on which the map qualifies as Numata-induced
    if let Some(sub) = map.numata_admissible_subinterval()? {
        header.tolerances.push((
            "numata_admissible_lo".to_string(),
            sub.lo,
        ));
        header.tolerances.push((
            "numata_admissible_hi".to_string(),
            sub.hi,
        ));
    }
    let text = match options.format {
        config::OutputFormat::Csv => {
            let cells: Vec<Vec<String>> = rows.iter().map(|r| r.cells()).collect();
            report::to_csv(&header, &commands::SchwarzRow::columns(), &cells)
        }
        config::OutputFormat::Json => report::to_json(&header, &rows),
    };
    report::emit(&text, options.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct VerifyDocument {
    header: ReportHeader,
    groups: Vec<GroupReport>,
    passed: bool,
}

fn verify(args: VerifyArgs) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let (raw, hash) = match &args.config {
        Some(path) => config::load(path)?,
        None => (RawConfig::default(), "builtin-defaults".to_string()),
    };
    let mut options = VerifyOptions {
        seed: args.seed.or(raw.options.seed).unwrap_or(0),
        ..VerifyOptions::default()
    };
    if let Some(samples) = args.samples.or(raw.options.samples) {
        if samples == 0 {
            return Err(Box::new(config::ConfigError::Field {
                field: "options.samples",
                message: "must be at least 1".into(),
            }));
        }
        options.flag_samples = samples;
    }
    options.config_metric = raw.build_metric()?;

    let report = run_suite(&options);
    for group in &report.groups {
        eprintln!(
            "group {:<28} {}  worst {:.3e} (tol {:.0e}), {} cases",
            group.name,
            if group.passed { "pass" } else { "FAIL" },
            group.worst_residual,
            group.tolerance,
            group.cases
        );
    }
    let header = ReportHeader::new("verify", &hash, options.seed, options.flag_samples, tol::COMPATIBILITY);
    let passed = report.passed;
    let document = VerifyDocument {
        header,
        groups: report.groups,
        passed,
    };
    let mut text = serde_json::to_string_pretty(&document)?;
    text.push('\n');
    report::emit(&text, args.out.as_ref().map(|p| p.to_str().unwrap_or_default()))?;
    if passed {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("verification failed");
        Ok(ExitCode::from(2))
    }
}

fn config_missing(what: &str) -> config::ConfigError {
    config::ConfigError::Field {
        field: "config",
        message: format!("missing {what} table"),
    }
}
