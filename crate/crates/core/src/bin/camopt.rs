//! Command-line front end: situation generation, maneuver solving,
//! conjunction screening, benchmark sweeps, and reward-curve sampling.
//!
//! Exit codes: 0 success, 1 domain error, 2 input error.

// Validation deliberately writes `!(x > 0.0)` so NaN fails the check too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use camopt::bench::{metrics_csv, run_benchmark, BenchConfig};
use camopt::config::RunConfig;
use camopt::conjunction::{screen_situation, Conjunction};
use camopt::fixtures;
use camopt::generator::{generate_indexed, GeneratorConfig};
use camopt::optimize::{solve, Algorithm};
use camopt::reward::component_reward;
use camopt::session::{DangerousSituation, Maneuver};

/// Configuration file path fallback when --config is not given.
const CONFIG_ENV_VAR: &str = "CAMOPT_CONFIG";

#[derive(Parser)]
#[command(
    name = "camopt",
    about = "Collision-avoidance maneuver optimization toolkit",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate seeded random dangerous situations as JSON files.
    Generate {
        /// Number of situations to write.
        #[arg(long)]
        count: usize,
        /// Base RNG seed; situation i uses stream i of this seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
        /// Debris count per situation.
        #[arg(long)]
        debris: Option<usize>,
        /// JSON configuration file.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Find an avoidance maneuver for one situation with one algorithm.
    Solve {
        /// Situation JSON file.
        #[arg(long)]
        situation: PathBuf,
        /// Algorithm id (see `evaluate --help` for the list).
        #[arg(long)]
        algorithm: String,
        /// JSON configuration file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the cross-entropy RNG seed from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Output JSON file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Screen a situation for conjunctions, optionally with maneuvers applied.
    Conjunctions {
        /// Situation JSON file.
        #[arg(long)]
        situation: PathBuf,
        /// Maneuver list JSON file (array of {dvx, dvy, dvz, epoch}).
        #[arg(long)]
        maneuvers: Option<PathBuf>,
        /// Output format.
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// JSON configuration file.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run a set of algorithms over a directory of situations and write the
    /// metrics table.
    Evaluate {
        /// Directory of situation JSON files.
        #[arg(long)]
        situations: PathBuf,
        /// Comma-separated algorithm ids: baseline, gs, gs-ce,
        /// ce-in-track-half, ce-in-plane-half, ce-out-of-plane-half,
        /// ce-in-track-auto, ce-in-plane-auto, ce-out-of-plane-auto.
        #[arg(long, value_delimiter = ',')]
        algorithms: Vec<String>,
        /// JSON configuration file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the benchmark base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Metrics CSV output path.
        #[arg(long)]
        out: PathBuf,
        /// Directory for per-cell JSON results (written when given).
        #[arg(long)]
        cells: Option<PathBuf>,
    },
    /// Sample the piecewise-linear reward component as (value, penalty) CSV.
    RewardCurve {
        /// Component threshold (the knee of the curve).
        #[arg(long)]
        threshold: f64,
        /// Largest sampled component value.
        #[arg(long)]
        max: f64,
        /// Sample count before the knee point is inserted.
        #[arg(long, default_value_t = 201)]
        points: usize,
        /// CSV output path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the bundled worked-example situation as a situation JSON file.
    ExportGolden {
        /// Output file path.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// CLI failure carrying its process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    fn domain(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<camopt::Error> for Failure {
    fn from(e: camopt::Error) -> Self {
        match e {
            camopt::Error::InvalidInput(_)
            | camopt::Error::UnknownAlgorithm(_)
            | camopt::Error::ChecksumMismatch { .. } => Failure::input(e.to_string()),
            _ => Failure::domain(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Generate {
            count,
            seed,
            out,
            debris,
            config,
        } => cmd_generate(count, seed, &out, debris, config.as_deref()),
        Command::Solve {
            situation,
            algorithm,
            config,
            seed,
            out,
        } => cmd_solve(
            &situation,
            &algorithm,
            config.as_deref(),
            seed,
            out.as_deref(),
        ),
        Command::Conjunctions {
            situation,
            maneuvers,
            format,
            out,
            config,
        } => cmd_conjunctions(
            &situation,
            maneuvers.as_deref(),
            format,
            out.as_deref(),
            config.as_deref(),
        ),
        Command::Evaluate {
            situations,
            algorithms,
            config,
            seed,
            out,
            cells,
        } => cmd_evaluate(
            &situations,
            &algorithms,
            config.as_deref(),
            seed,
            &out,
            cells.as_deref(),
        ),
        Command::RewardCurve {
            threshold,
            max,
            points,
            out,
        } => cmd_reward_curve(threshold, max, points, &out),
        Command::ExportGolden { out } => cmd_export_golden(&out),
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, Failure> {
    let chosen: Option<PathBuf> = match path {
        Some(p) => Some(p.to_path_buf()),
        None => std::env::var_os(CONFIG_ENV_VAR).map(PathBuf::from),
    };
    match chosen {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(&p)
                .map_err(|e| Failure::input(format!("config {}: {e}", p.display())))?;
            RunConfig::from_json(&text).map_err(Into::into)
        }
    }
}

fn load_situation(path: &Path) -> Result<DangerousSituation, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("situation {}: {e}", path.display())))?;
    let situation: DangerousSituation = serde_json::from_str(&text)
        .map_err(|e| Failure::input(format!("situation {}: {e}", path.display())))?;
    situation.validate()?;
    Ok(situation)
}

fn write_output(path: Option<&Path>, content: &str) -> Result<(), Failure> {
    match path {
        None => {
            print!("{content}");
            Ok(())
        }
        Some(p) => {
            fs::write(p, content).map_err(|e| Failure::input(format!("write {}: {e}", p.display())))
        }
    }
}

fn pretty_json<T: Serialize>(value: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Failure::domain(format!("serialization: {e}")))
}

fn cmd_generate(
    count: usize,
    seed: Option<u64>,
    out: &Path,
    debris: Option<usize>,
    config: Option<&Path>,
) -> Result<(), Failure> {
    let cfg = load_config(config)?;
    let mut generator: GeneratorConfig = cfg.generator;
    if let Some(s) = seed {
        generator.rng_seed = s;
    }
    if let Some(k) = debris {
        generator.n_debris = k;
    }
    fs::create_dir_all(out)
        .map_err(|e| Failure::input(format!("output directory {}: {e}", out.display())))?;
    for index in 0..count as u64 {
        let situation = generate_indexed(&generator, index)?;
        let path = out.join(format!("situation_{index}.json"));
        write_output(Some(&path), &pretty_json(&situation)?)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SolveOutput {
    algorithm: Algorithm,
    maneuvers: Vec<Maneuver>,
    result: camopt::session::SessionResult,
    conjunctions_before: Vec<Conjunction>,
}

fn cmd_solve(
    situation_path: &Path,
    algorithm: &str,
    config: Option<&Path>,
    seed: Option<u64>,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let algorithm = Algorithm::parse(algorithm)?;
    let cfg = load_config(config)?;
    let situation = load_situation(situation_path)?;
    let mut ce = cfg.cross_entropy;
    if let Some(s) = seed {
        ce.rng_seed = s;
    }
    let screening = cfg.screening();
    let before = screen_situation(&situation, &[], &screening)?;
    let solution = solve(
        &situation,
        algorithm,
        &cfg.grid_search,
        &ce,
        &cfg.reward,
        &screening,
    )?;
    let output = SolveOutput {
        algorithm,
        maneuvers: solution.maneuvers,
        result: solution.result,
        conjunctions_before: before,
    };
    write_output(out, &pretty_json(&output)?)
}

/// Conjunction table CSV columns, mirroring the report layout.
fn conjunctions_csv(rows: &[Conjunction]) -> String {
    let mut out = String::from(
        "debris name,miss distance (m),epoch (mjd2000),collision probability,collision danger\n",
    );
    for c in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            c.debris_name,
            c.miss_distance,
            c.epoch,
            c.probability,
            if c.danger { "True" } else { "False" }
        ));
    }
    out
}

fn cmd_conjunctions(
    situation_path: &Path,
    maneuvers_path: Option<&Path>,
    format: Format,
    out: Option<&Path>,
    config: Option<&Path>,
) -> Result<(), Failure> {
    let cfg = load_config(config)?;
    let situation = load_situation(situation_path)?;
    let maneuvers: Vec<Maneuver> = match maneuvers_path {
        None => Vec::new(),
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| Failure::input(format!("maneuvers {}: {e}", p.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| Failure::input(format!("maneuvers {}: {e}", p.display())))?
        }
    };
    let rows = screen_situation(&situation, &maneuvers, &cfg.screening())?;
    let content = match format {
        Format::Json => pretty_json(&rows)?,
        Format::Csv => conjunctions_csv(&rows),
    };
    write_output(out, &content)
}

fn cmd_evaluate(
    situations_dir: &Path,
    algorithm_ids: &[String],
    config: Option<&Path>,
    seed: Option<u64>,
    out: &Path,
    cells_dir: Option<&Path>,
) -> Result<(), Failure> {
    if algorithm_ids.is_empty() {
        return Err(Failure::input("no algorithms given"));
    }
    let algorithms: Vec<Algorithm> = algorithm_ids
        .iter()
        .map(|s| Algorithm::parse(s))
        .collect::<camopt::Result<_>>()?;
    let mut paths: Vec<PathBuf> = fs::read_dir(situations_dir)
        .map_err(|e| Failure::input(format!("situations {}: {e}", situations_dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Failure::input(format!(
            "no situation files in {}",
            situations_dir.display()
        )));
    }
    let situations: Vec<DangerousSituation> = paths
        .iter()
        .map(|p| load_situation(p))
        .collect::<Result<_, _>>()?;
    let cfg = load_config(config)?;
    let bench = BenchConfig {
        reward: cfg.reward.clone(),
        grid_search: cfg.grid_search,
        cross_entropy: cfg.cross_entropy,
        screening: cfg.screening(),
        seed: seed.unwrap_or(cfg.cross_entropy.rng_seed),
        top10_relative: true,
    };
    let report = run_benchmark(&situations, &algorithms, &bench)?;
    write_output(Some(out), &metrics_csv(&report.metrics))?;
    if let Some(dir) = cells_dir {
        fs::create_dir_all(dir)
            .map_err(|e| Failure::input(format!("cells directory {}: {e}", dir.display())))?;
        for row in &report.cells {
            for cell in row {
                let path = dir.join(format!(
                    "cell_{}_{}.json",
                    cell.situation,
                    cell.algorithm.id()
                ));
                write_output(Some(&path), &pretty_json(cell)?)?;
            }
        }
    }
    Ok(())
}

fn cmd_reward_curve(threshold: f64, max: f64, points: usize, out: &Path) -> Result<(), Failure> {
    if !(threshold > 0.0) {
        return Err(Failure::input("threshold must be positive"));
    }
    if !(max > 0.0) || points < 2 {
        return Err(Failure::input("max must be positive and points at least 2"));
    }
    let mut values: Vec<f64> = (0..points)
        .map(|k| max * k as f64 / (points - 1) as f64)
        .collect();
    if threshold <= max && !values.contains(&threshold) {
        // The knee itself is always part of the sample.
        values.push(threshold);
        values.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    }
    let mut csv = String::from("value,penalty\n");
    for v in values {
        csv.push_str(&format!("{},{}\n", v, component_reward(v, threshold)));
    }
    write_output(Some(out), &csv)
}

fn cmd_export_golden(out: &Path) -> Result<(), Failure> {
    let json = fixtures::golden_situation_json()?;
    write_output(Some(out), &json)
}
