use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use patchal::orchestrator::{
    evaluate, load_results, loops_csv, render_markdown, run_dir, run_experiment_on, write_dataset,
    write_report, Dataset, EvalOptions, ExperimentConfig,
};
use patchal::simlab::{generate_dataset, SyntheticSpec};

#[derive(Parser)]
#[command(name = "patchal", version, about = "Patch-based active learning experiments on 3D volumes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset directory from a JSON spec.
    GenData {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment config for one seed, or for every seed it lists.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate finished runs and write report.json, report.md and loops.csv.
    Eval {
        #[arg(long, num_args = 1.., required = true)]
        runs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Compare method rankings by two columns, e.g. `aubc:final_dice`.
        #[arg(long)]
        kendall: Vec<String>,
    },
    /// Print a report for finished runs.
    Report {
        #[arg(long, num_args = 1.., required = true)]
        runs: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Md)]
        format: Format,
        #[arg(long)]
        kendall: Vec<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
    Md,
}

fn eval_options(pairs: &[String]) -> Result<EvalOptions> {
    let kendall = pairs
        .iter()
        .map(|p| match p.split_once(':') {
            Some((a, b)) => Ok((a.to_string(), b.to_string())),
            None => bail!("--kendall expects COLUMN:COLUMN, got {p:?}"),
        })
        .collect::<Result<_>>()?;
    Ok(EvalOptions { kendall })
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::GenData { spec, out } => {
            let spec: SyntheticSpec = serde_json::from_slice(
                &fs::read(&spec).with_context(|| format!("reading {}", spec.display()))?,
            )?;
            let generated = generate_dataset(&spec)?;
            let fg = generated.foreground_fraction();
            let data = Dataset::from_synthetic(generated, spec.seed)?;
            write_dataset(&out, &data)?;
            println!(
                "wrote {} images ({} trainpool, {} test) to {}; foreground fraction {:.4} (target {:.4})",
                data.ids.len(),
                data.split.trainpool.len(),
                data.split.test.len(),
                out.display(),
                fg,
                spec.fg_fraction_target
            );
        }
        Command::Run { config, seed } => {
            let cfg = ExperimentConfig::load(&config)
                .with_context(|| format!("loading {}", config.display()))?;
            let data = Dataset::from_source(&cfg.dataset)?;
            let seeds = seed.map_or_else(|| cfg.seeds.clone(), |s| vec![s]);
            for s in seeds {
                let result = run_experiment_on(&cfg, &data, s)?;
                let last = result.loops.last().expect("at least one loop");
                println!(
                    "{} seed {s}: {} loops, {} patches, final mean Dice {:.4} -> {}",
                    result.method,
                    result.loops.len(),
                    last.cumulative_patches,
                    last.mean_dice,
                    run_dir(&cfg, s).display()
                );
            }
        }
        Command::Eval { runs, out, kendall } => {
            let results = load_results(&runs)?;
            let report = evaluate(&results, &eval_options(&kendall)?)?;
            write_report(&out, &report, &results)?;
            println!("evaluated {} runs -> {}", results.len(), out.display());
        }
        Command::Report { runs, format, kendall } => {
            let results = load_results(&runs)?;
            match format {
                Format::Csv => print!("{}", loops_csv(&results)?),
                Format::Json => {
                    let report = evaluate(&results, &eval_options(&kendall)?)?;
                    println!("{}", serde_json::to_string_pretty(&report)?);
                }
                Format::Md => {
                    let report = evaluate(&results, &eval_options(&kendall)?)?;
                    print!("{}", render_markdown(&report));
                }
            }
        }
    }
    Ok(())
}
