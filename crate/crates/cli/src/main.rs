use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};
use sumlab_core::report::{emit_report, Format};
use sumlab_core::verify::{run_verify, SweepSpec, Target};

#[derive(Parser)]
#[command(name = "sumlab", version, about = "Verification sweeps for twisted character sums")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one verification target over a parameter sweep.
    Verify(VerifyArgs),
}

#[derive(clap::Args)]
struct VerifyArgs {
    /// eq4_3, cstar_split, lemma5, lemma6, lemma7, circle, oscillatory_bounds or quintic.
    target: String,
    /// Sweep configuration: `key = value` lines, `#` comments.
    #[arg(long)]
    config: PathBuf,
    /// Primes, comma separated.
    #[arg(long)]
    p: Option<String>,
    /// Inclusive range `a..b`, or a single value.
    #[arg(long)]
    kappa: Option<String>,
    /// `auto`, `sweep`, or a comma-separated list.
    #[arg(long)]
    lambda: Option<String>,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Defaults to the extension of `--out`, then json.
    #[arg(long)]
    format: Option<String>,
    /// Worker threads; defaults to the config, then SUMLAB_JOBS, then 1.
    #[arg(long)]
    jobs: Option<usize>,
}

fn verify(args: VerifyArgs) -> Result<bool> {
    let target: Target = args.target.parse()?;
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("cannot read config {}", args.config.display()))?;
    // precedence: flags, then the config file, then SUMLAB_JOBS
    let mut spec = SweepSpec::default();
    if let Ok(jobs) = std::env::var("SUMLAB_JOBS") {
        spec.set("jobs", &jobs).context("SUMLAB_JOBS")?;
    }
    spec.apply_config(&text)?;
    let overrides = [
        ("primes", args.p),
        ("kappa", args.kappa),
        ("lambda", args.lambda),
        ("jobs", args.jobs.map(|j| j.to_string())),
    ];
    for (key, value) in overrides {
        if let Some(value) = value {
            spec.set(key, &value)?;
        }
    }
    let format = match (&args.format, &args.out) {
        (Some(f), _) => f.parse::<Format>().map_err(|e| anyhow!(e))?,
        (None, Some(path)) if path.extension().is_some_and(|e| e == "csv") => Format::Csv,
        _ => Format::Json,
    };
    let report = run_verify(target, &spec)?;
    match &args.out {
        Some(path) => emit_report(&report, format, path)?,
        None => match format {
            Format::Csv => print!("{}", report.to_csv()),
            Format::Json => println!("{}", report.to_json()),
        },
    }
    let s = &report.summary;
    eprintln!(
        "{}: {} records, {} passed, {} failed, max ratio {:.3e}",
        target, s.total, s.passed, s.failed, s.max_ratio
    );
    Ok(report.pass())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify(args) => verify(args),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
