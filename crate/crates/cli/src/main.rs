//! `ermlab`: runs localized-complexity experiments from JSON configs and
//! writes reproducible JSON/CSV/SVG outputs.

mod config;
mod plot;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};
use ermlab_core::io::atomic_write;
use serde::Serialize;

use crate::config::ExperimentConfig;

#[derive(Parser)]
#[command(name = "ermlab", version, about = "Localized complexity and empirical minimizer experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Also write an SVG plot for every curve table.
        #[arg(long)]
        plot: bool,
        /// Override the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (falls back to ERMLAB_THREADS).
        #[arg(long)]
        threads: Option<usize>,
        /// Output directory (overrides `output_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a curve CSV as an SVG line plot.
    Plot {
        csv: PathBuf,
        svg: PathBuf,
        /// Slope of the reference line.
        #[arg(long, default_value_t = 0.25)]
        factor: f64,
    },
}

#[derive(Serialize)]
struct Report<'a> {
    tool: &'static str,
    version: &'static str,
    experiment: String,
    master_seed: u64,
    status: &'static str,
    config: &'a serde_json::Value,
    results: &'a serde_json::Value,
    provenance: &'a serde_json::Value,
    outputs: Vec<String>,
    wall_clock_seconds: f64,
}

fn configure_threads(flag: Option<usize>) -> Result<()> {
    let threads = match flag {
        Some(t) => Some(t),
        None => match std::env::var("ERMLAB_THREADS") {
            Ok(v) => Some(
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| anyhow!("ERMLAB_THREADS must be a positive integer, got `{v}`"))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(t) = threads {
        if t == 0 {
            return Err(anyhow!("thread count must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("cannot configure the thread pool")?;
    }
    Ok(())
}

fn write(path: &Path, contents: &str) -> Result<()> {
    atomic_write(path, contents.as_bytes()).map_err(|e| anyhow!("{e}"))
}

fn run(config: &Path, plot_curves: bool, seed: Option<u64>, threads: Option<usize>, out: Option<PathBuf>) -> Result<bool> {
    let start = Instant::now();
    configure_threads(threads)?;
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let dir = out
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(format!("ermlab-{}", cfg.experiment)));
    std::fs::create_dir_all(&dir).with_context(|| format!("cannot create output directory `{}`", dir.display()))?;

    let outcome = run::run_experiment(&cfg)?;
    let mut outputs = Vec::new();
    for t in &outcome.tables {
        write(&dir.join(&t.name), &t.contents)?;
        outputs.push(t.name.clone());
        if plot_curves && t.curve {
            let curve = plot::read_curve_csv(&t.contents)?;
            let svg = plot::render_svg(&curve, cfg.constants.factor)?;
            let name = t.name.replace(".csv", ".svg");
            write(&dir.join(&name), &svg)?;
            outputs.push(name);
        }
    }
    outputs.push("report.json".into());
    let passed = outcome.passed.unwrap_or(true);
    let report = Report {
        tool: "ermlab",
        version: env!("CARGO_PKG_VERSION"),
        experiment: cfg.experiment.to_string(),
        master_seed: cfg.seed,
        status: match outcome.passed {
            Some(true) => "pass",
            Some(false) => "fail",
            None => "complete",
        },
        config: &cfg.echo,
        results: &outcome.results,
        provenance: &outcome.provenance,
        outputs,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    write(&dir.join("report.json"), &text)?;
    println!(
        "{}: {} ({})",
        cfg.experiment,
        report.status,
        dir.join("report.json").display()
    );
    Ok(passed)
}

fn plot(csv: &Path, svg: &Path, factor: f64) -> Result<()> {
    let text = std::fs::read_to_string(csv).with_context(|| format!("cannot read `{}`", csv.display()))?;
    let curve = plot::read_curve_csv(&text)?;
    write(svg, &plot::render_svg(&curve, factor)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            plot,
            seed,
            threads,
            out,
        } => run(&config, plot, seed, threads, out),
        Command::Plot { csv, svg, factor } => plot(&csv, &svg, factor).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
