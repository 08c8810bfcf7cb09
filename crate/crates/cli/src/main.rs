//! `solitonlab`: batch runs, parameter sweeps and plots.
//!
//! Exit codes: 0 when every check passes, 1 when a verification fails,
//! 2 for input errors.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod plot;
mod run;
mod scenario;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use rayon::prelude::*;

use run::SummaryRow;
use scenario::{input_err, InputError, Overrides, Scenario};

#[derive(Parser, Debug)]
#[command(name = "solitonlab", version, about = "Verify, classify and solve conformal gradient solitons on warped products")]
struct Cli {
    /// Worker threads for batches, sweeps and identity checks.
    #[arg(long, global = true, env = "SOLITONLAB_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug, Clone)]
struct CommonFlags {
    /// Override every residual tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Override the number of grid nodes (and ODE output nodes).
    #[arg(long)]
    grid: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the actions of one scenario, or of each scenario in a list.
    Run {
        config: PathBuf,
        #[command(flatten)]
        flags: CommonFlags,
    },
    /// Run a scenario once per point of its `sweep` axes.
    Sweep {
        config: PathBuf,
        #[command(flatten)]
        flags: CommonFlags,
    },
    /// Line plot of CSV columns as a standalone SVG.
    Plot {
        csv: PathBuf,
        svg: PathBuf,
        /// Comma-separated columns to plot; all but the x column by default.
        #[arg(long, value_delimiter = ',')]
        cols: Vec<String>,
        /// Column for the horizontal axis; the first column by default.
        #[arg(long)]
        x: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<InputError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<ExitCode> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(input_err("thread count must be positive"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().context("configuring the thread pool")?;
    }
    match cli.command {
        Command::Run { config, flags } => run_command(&config, overrides(flags)),
        Command::Sweep { config, flags } => sweep_command(&config, overrides(flags)),
        Command::Plot { csv, svg, cols, x } => {
            let file = fs::File::open(&csv).map_err(|e| input_err(format!("{}: {e}", csv.display())))?;
            let table = solitonlab_core::io::read_table(file).map_err(|e| input_err(format!("{}: {e}", csv.display())))?;
            let text = plot::render(&table, x.as_deref(), &cols)?;
            fs::write(&svg, text).with_context(|| format!("writing {}", svg.display()))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn overrides(f: CommonFlags) -> Overrides {
    Overrides { tol: f.tol, grid: f.grid, out: f.out }
}

fn read_config(path: &Path) -> anyhow::Result<(String, PathBuf)> {
    let text = fs::read_to_string(path).map_err(|e| input_err(format!("{}: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((text, base))
}

fn finish(out: &Path, rows: &[SummaryRow], input_failure: Option<anyhow::Error>) -> anyhow::Result<ExitCode> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    run::write_summary(&out.join("summary.csv"), rows)?;
    for r in rows.iter().filter(|r| !r.pass) {
        eprintln!("FAIL {} {} {} = {}", r.scenario, r.action, r.key, r.value);
    }
    if let Some(e) = input_failure {
        return Err(e);
    }
    Ok(if run::any_failed(rows) { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

/// Result of one scenario: its rows, or an input error paired with a row
/// that records it.
fn execute(s: &Scenario, label: &str, ov: &Overrides, base: &Path, dir: &Path) -> (Vec<SummaryRow>, Option<anyhow::Error>) {
    match run::run_scenario(s, label, ov, base, dir) {
        Ok(rows) => (rows, None),
        Err(e) => {
            let row = SummaryRow { scenario: label.to_owned(), action: "input", key: "error".into(), value: format!("{e:#}"), pass: false };
            (vec![row], Some(e))
        }
    }
}

fn run_command(config: &Path, ov: Overrides) -> anyhow::Result<ExitCode> {
    let (text, base) = read_config(config)?;
    let scenarios = scenario::parse(&text, &base)?;
    for (i, (_, s)) in scenarios.iter().enumerate() {
        if s.sweep.is_some() {
            return Err(input_err(format!("scenario {i} has sweep axes; use `solitonlab sweep`")));
        }
        run::ensure_safe_name(&run::scenario_name(s, i))?;
    }
    let first = &scenarios[0].1;
    let out = run::output_dir(first, &ov, &base);
    let single = scenarios.len() == 1;
    let results: Vec<(Vec<SummaryRow>, Option<anyhow::Error>)> = scenarios
        .par_iter()
        .enumerate()
        .map(|(i, (_, s))| {
            let name = run::scenario_name(s, i);
            let dir = if single { out.clone() } else { out.join(&name) };
            execute(s, &name, &ov, &base, &dir)
        })
        .collect();
    collect_and_finish(&out, results)
}

fn collect_and_finish(out: &Path, results: Vec<(Vec<SummaryRow>, Option<anyhow::Error>)>) -> anyhow::Result<ExitCode> {
    let mut rows = Vec::new();
    let mut input_failure = None;
    for (mut r, e) in results {
        rows.append(&mut r);
        if input_failure.is_none() {
            input_failure = e;
        }
    }
    finish(out, &rows, input_failure)
}

fn sweep_command(config: &Path, ov: Overrides) -> anyhow::Result<ExitCode> {
    let (text, base) = read_config(config)?;
    let scenarios = scenario::parse(&text, &base)?;
    if scenarios.len() != 1 {
        return Err(input_err("a sweep config holds exactly one scenario"));
    }
    let (raw, s) = &scenarios[0];
    let axes = s.sweep.as_ref().ok_or_else(|| input_err("the scenario has no `sweep` axes"))?;
    let name = run::scenario_name(s, 0);
    run::ensure_safe_name(&name)?;
    let mut stripped = raw.clone();
    if let Some(obj) = stripped.as_object_mut() {
        obj.remove("sweep");
    }
    let variants = scenario::expand_sweep(&stripped, axes)?;
    let mut parsed = Vec::with_capacity(variants.len());
    for (label, value) in variants {
        let v: Scenario = serde_json::from_value(value).map_err(|e| input_err(format!("sweep point `{label}`: {e}")))?;
        scenario::validate(&v, &text, &base).map_err(|e| input_err(format!("sweep point `{label}`: {e}")))?;
        parsed.push((label, v));
    }
    let out = run::output_dir(s, &ov, &base);
    let results: Vec<(Vec<SummaryRow>, Option<anyhow::Error>)> = parsed
        .par_iter()
        .enumerate()
        .map(|(i, (label, v))| {
            let dir = out.join(format!("{name}_{i:03}"));
            execute(v, &format!("{name}[{label}]"), &ov, &base, &dir)
        })
        .collect();
    collect_and_finish(&out, results)
}
