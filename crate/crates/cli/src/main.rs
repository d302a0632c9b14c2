// Copyright 2026 The lrst Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Command-line front end: `lrst test` and `lrst simulate`.

mod config;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use lrst::{
    analyze, parse_long_csv, CsvOptions, CsvSchema, DirectionMap, TestReport, WeightVector,
};
use serde::Serialize;

use crate::config::{Overrides, SimConfig, Tables};

#[derive(Parser)]
#[command(
    name = "lrst",
    version,
    about = "Rank-based multi-visit, multi-outcome treatment comparison"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test a long-format trial CSV.
    Test(TestArgs),
    /// Run a Monte Carlo experiment from a config file.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(clap::Args)]
struct TestArgs {
    /// Long-format CSV: one row per subject, visit and outcome.
    #[arg(long)]
    input: PathBuf,
    /// Column and arm-label overrides, e.g. `subject=pid,arm=group,control=placebo`.
    #[arg(long, default_value = "")]
    schema: String,
    /// Outcome orientation, e.g. `adas=-1,dad=+1`. Unlisted outcomes are +1.
    #[arg(long, default_value = "")]
    direction: String,
    /// `equal`, `last-visit`, or comma-separated visit weights.
    #[arg(long, default_value = "equal")]
    weights: String,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Also report the two-sided p-value.
    #[arg(long)]
    two_sided: bool,
    /// Listwise-delete subjects with missing cells.
    #[arg(long)]
    drop_incomplete: bool,
    /// Treat values as raw scores and analyze changes from this visit.
    #[arg(long)]
    baseline_visit: Option<f64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(clap::Args)]
struct SimulateArgs {
    /// TOML experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads. Results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides `experiment.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `experiment.reps`.
    #[arg(long)]
    reps: Option<usize>,
}

/// Exit codes by failure kind.
mod exit {
    pub const OTHER: u8 = 1;
    pub const INPUT: u8 = 3;
    pub const DEGENERATE: u8 = 4;
    pub const CONFIG: u8 = 5;
    pub const IO: u8 = 6;
}

/// Marks failures while loading or resolving a config file.
#[derive(Debug)]
struct ConfigError(PathBuf);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid config {}", self.0.display())
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use lrst::Error as E;
    if err.downcast_ref::<ConfigError>().is_some() {
        return exit::CONFIG;
    }
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::MissingCell { .. }
                | E::DuplicateCell { .. }
                | E::UnknownArmLabel { .. }
                | E::InconsistentArm { .. }
                | E::NonFiniteValue { .. }
                | E::InvalidField { .. }
                | E::MissingColumn(_)
                | E::MissingBaseline(_)
                | E::EmptyInput
                | E::Csv(_) => exit::INPUT,
                E::DegenerateDesign { .. }
                | E::NonPositiveVariance { .. }
                | E::AllPermutationsDegenerate { .. } => exit::DEGENERATE,
                E::InvalidModel(_) | E::NonPDCovariance => exit::CONFIG,
                E::Io(_) => exit::IO,
                _ => exit::OTHER,
            };
        }
        if cause.downcast_ref::<io::Error>().is_some() {
            return exit::IO;
        }
    }
    exit::OTHER
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Test(args) => run_test(args),
        Command::Simulate(args) => run_simulate(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

#[derive(Serialize)]
struct TestOutput<'a> {
    #[serde(flatten)]
    report: &'a TestReport,
    alpha: f64,
    reject: bool,
    dropped_subjects: &'a [String],
}

fn run_test(args: TestArgs) -> Result<()> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        bail!("--alpha must be in (0, 1), got {}", args.alpha);
    }
    let opts = CsvOptions {
        schema: CsvSchema::default().parse_overrides(&args.schema)?,
        direction: DirectionMap::parse(&args.direction)?,
        drop_incomplete: args.drop_incomplete,
        baseline_visit: args.baseline_visit,
    };
    let ingest = parse_long_csv(&args.input, &opts)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let data = &ingest.dataset;
    let weights = WeightVector::parse(&args.weights, data.n_visits())?;
    let analysis = analyze(data, &weights)?;
    let report = TestReport::new(data, &analysis, args.two_sided);
    let output = TestOutput {
        report: &report,
        alpha: args.alpha,
        reject: report.p_value <= args.alpha,
        dropped_subjects: &ingest.dropped_subjects,
    };
    let text = match args.format {
        Format::Json => serde_json::to_string_pretty(&output)? + "\n",
        Format::Text => render_text(&output),
    };
    match &args.out {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))?
        }
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn render_text(out: &TestOutput<'_>) -> String {
    use std::fmt::Write as _;
    let r = out.report;
    let mut s = String::new();
    let _ = writeln!(s, "subjects      control {}  treatment {}", r.n_x, r.n_y);
    let _ = writeln!(s, "visits        {}  outcomes {}", r.n_visits, r.n_outcomes);
    let _ = writeln!(s, "weights       {}", join(&r.weights));
    let _ = writeln!(s, "theta_t       {}", join(&r.theta_t));
    let _ = writeln!(s, "theta_bar     {:.6}", r.theta_bar);
    let _ = writeln!(s, "z             {:.6}", r.z);
    let _ = writeln!(s, "p (one-sided) {:.6e}", r.p_value);
    if let Some(p2) = r.p_value_two_sided {
        let _ = writeln!(s, "p (two-sided) {p2:.6e}");
    }
    let _ = writeln!(
        s,
        "decision      {} at alpha {}",
        if out.reject {
            "reject"
        } else {
            "do not reject"
        },
        out.alpha
    );
    let c = &r.covariance.weighted_contributions;
    let _ = writeln!(
        s,
        "N w'Sw        {:.6} (same cell {:.6}, intra-source {:.6}, inter-source {:.6}, cross {:.6})",
        r.variance, c.variance, c.intra_source, c.inter_source, c.cross
    );
    if !out.dropped_subjects.is_empty() {
        let _ = writeln!(s, "dropped       {}", out.dropped_subjects.join(", "));
    }
    s
}

fn join(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x:.6}"))
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Serialize)]
struct SimulationOutput<'a> {
    config: &'a SimConfig,
    results: &'a Tables,
}

fn run_simulate(args: SimulateArgs) -> Result<()> {
    let resolved = load_config(
        &args.config,
        Overrides {
            seed: args.seed,
            reps: args.reps,
        },
    )
    .context(ConfigError(args.config.clone()))?;
    if args.threads == Some(0) {
        bail!("--threads must be at least 1");
    }
    let results = config::run(&resolved, args.threads)?;

    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    fs::write(args.out.join("resolved.cfg"), resolved.to_toml()?)?;
    let stem = match &results {
        Tables::Type1(t) => {
            t.write_csv(create(&args.out.join("type1.csv"))?)?;
            "type1"
        }
        Tables::Power(t) => {
            t.write_csv(create(&args.out.join("power.csv"))?)?;
            t.write_long_csv(create(&args.out.join("power_long.csv"))?)?;
            "power"
        }
    };
    let json = serde_json::to_string_pretty(&SimulationOutput {
        config: &resolved,
        results: &results,
    })? + "\n";
    fs::write(args.out.join(format!("{stem}.json")), json)?;

    let mut stdout = io::stdout().lock();
    match &results {
        Tables::Type1(t) => t.write_csv(&mut stdout)?,
        Tables::Power(t) => t.write_csv(&mut stdout)?,
    }
    Ok(())
}

fn load_config(path: &Path, overrides: Overrides) -> Result<SimConfig> {
    let text = fs::read_to_string(path)?;
    SimConfig::parse(&text)?.resolve(overrides)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}
