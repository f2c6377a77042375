//! qchaos: batch runner for quantum-chaos diagnostics. Config in, CSV/JSON/SVG
//! out; identical config + seed always reproduces identical data files.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use qchaos_cli::config::ExperimentConfig;
use qchaos_cli::output::{self, parse_csv, sha256_hex, OutputRecord, RunManifest, TaskStatus};
use qchaos_cli::runner;

#[derive(Parser)]
#[command(name = "qchaos", version, about = "quantum chaos diagnostics runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Output directory (overrides the config's `output`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for sweep parallelism; results do not depend on it.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Check a config and print diagnostics without computing anything.
    Validate { config: PathBuf },
    /// Render an SVG line plot next to a CSV produced by `run`.
    Plot {
        csv: PathBuf,
        #[arg(long)]
        log_y: bool,
    },
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    ExperimentConfig::from_toml(&text).with_context(|| format!("parsing config {}", path.display()))
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            out,
            workers,
        } => run(&config, out, workers),
        Command::Validate { config } => {
            let cfg = load_config(&config)?;
            let diags = cfg.diagnostics();
            if diags.is_empty() {
                println!("ok: config is runnable");
                Ok(())
            } else {
                for d in &diags {
                    println!("{d}");
                }
                std::process::exit(1);
            }
        }
        Command::Plot { csv, log_y } => plot(&csv, log_y),
    }
}

fn run(config_path: &Path, out_override: Option<PathBuf>, workers: Option<usize>) -> Result<()> {
    let cfg = load_config(config_path)?;
    let diags = cfg.diagnostics();
    if !diags.is_empty() {
        for d in &diags {
            eprintln!("config error: {d}");
        }
        anyhow::bail!(
            "config failed validation with {} diagnostic(s)",
            diags.len()
        );
    }
    if let Some(n) = workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("configuring worker pool")?;
    }
    let dir = out_override
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&dir)?;

    let start = Instant::now();
    let result = runner::execute(&cfg);

    let mut status = Vec::new();
    let mut outputs: Vec<OutputRecord> = Vec::new();
    let mut fits = Vec::new();
    let mut metrics = serde_json::Map::new();
    let mut failed = false;
    match result {
        Ok(run_out) => {
            fits = run_out.fits;
            metrics = run_out.metrics;
            for note in run_out.notes {
                status.push(TaskStatus {
                    task: cfg.experiment.name().into(),
                    status: "note".into(),
                    detail: Some(note),
                });
            }
            match output::write_tables(&dir, &run_out.tables) {
                Ok(records) => {
                    outputs = records;
                    status.push(TaskStatus {
                        task: cfg.experiment.name().into(),
                        status: "ok".into(),
                        detail: None,
                    });
                }
                Err(e) => {
                    failed = true;
                    status.push(TaskStatus {
                        task: cfg.experiment.name().into(),
                        status: "failed".into(),
                        detail: Some(format!("writing outputs: {e}")),
                    });
                }
            }
        }
        Err(e) => {
            failed = true;
            status.push(TaskStatus {
                task: cfg.experiment.name().into(),
                status: "failed".into(),
                detail: Some(e.to_string()),
            });
        }
    }

    let manifest = RunManifest {
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        rng_algorithm: qchaos::hilbert::RNG_ALGORITHM_ID.to_string(),
        experiment: cfg.experiment.name().to_string(),
        seed: cfg.seed,
        config: serde_json::to_value(&cfg)?,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        status,
        outputs,
        fits,
        metrics,
    };
    // the manifest is written unconditionally so partial failures stay
    // auditable
    let manifest_path = dir.join("manifest.json");
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?)
        .with_context(|| format!("writing {}", manifest_path.display()))?;
    if failed {
        anyhow::bail!("run failed; see {}", manifest_path.display());
    }
    println!(
        "wrote {} output file(s) + manifest to {}",
        manifest.outputs.len(),
        dir.display()
    );
    Ok(())
}

fn plot(csv_path: &Path, log_y: bool) -> Result<()> {
    let text = std::fs::read_to_string(csv_path)
        .with_context(|| format!("reading {}", csv_path.display()))?;
    let (headers, columns) = parse_csv(&text)?;
    anyhow::ensure!(
        columns.len() >= 2,
        "need an x column and at least one series"
    );
    let title = csv_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let svg = output::svg_line_plot(&headers, &columns, log_y, &title);
    let svg_path = csv_path.with_extension("svg");
    std::fs::write(&svg_path, &svg)?;
    println!(
        "wrote {} (sha256 {})",
        svg_path.display(),
        sha256_hex(svg.as_bytes())
    );
    Ok(())
}
