//! Benchmark sweeps over suite cells.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use crate::episode::{run_episode, EpisodeResult};
use crate::stats::{mean, std_error};
use crate::suite::{Cell, Suite};

pub const EPISODES_CSV: &str = "episodes.csv";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const REPORT_JSON: &str = "report.json";

#[derive(Clone, Copy, Debug, Default)]
pub struct BenchOptions {
    /// Emit measured wall times. Off by default so that CSV output depends
    /// only on the suite.
    pub timing: bool,
}

/// One row of `episodes.csv`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpisodeRow {
    pub env: String,
    pub solver: String,
    pub horizon: usize,
    pub seed: u64,
    pub episode: usize,
    pub total_reward: String,
    pub steps: String,
    pub certified_count: String,
    pub wall_ms: String,
    pub status: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellReport {
    pub cell: Cell,
    pub completed: usize,
    pub mean: Option<f64>,
    pub std_error: Option<f64>,
    pub certified_steps: usize,
    pub status: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchmarkReport {
    pub git_describe: String,
    pub timestamp: u64,
    pub threads: usize,
    pub cells: Vec<CellReport>,
    #[serde(skip)]
    pub episodes: Vec<EpisodeRow>,
    /// Completed episodes per cell, in suite order.
    #[serde(skip)]
    pub results: Vec<Vec<EpisodeResult>>,
}

impl BenchmarkReport {
    pub fn failed(&self) -> bool {
        self.cells.iter().any(|c| c.status != "ok")
    }

    /// Returns of the completed episodes of cell `i`, in episode order.
    pub fn returns(&self, i: usize) -> Vec<f64> {
        self.results[i].iter().map(|r| r.total_reward).collect()
    }
}

/// Worker count from `CERTIPOMDP_THREADS`, else the machine's parallelism.
pub fn thread_count() -> usize {
    std::env::var("CERTIPOMDP_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n: &usize| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn git_describe() -> String {
    Command::new("git")
        .args(["describe", "--always", "--dirty"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string())
        .unwrap_or_else(|| "unknown".into())
}

fn one_episode(cell: &Cell, seed: u64) -> Result<EpisodeResult, String> {
    let run = || -> Result<EpisodeResult> {
        let model = cell.env_kind()?.build(Some(cell.horizon))?;
        Ok(run_episode(&cell.env, &model, &cell.solver_config()?, seed)?)
    };
    match catch_unwind(AssertUnwindSafe(run)) {
        Ok(Ok(r)) => Ok(r),
        Ok(Err(e)) => Err(format!("{e:#}")),
        Err(panic) => Err(panic
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into())),
    }
}

/// CSV row for one episode; wall time is `NA` unless `timing`.
pub fn episode_row(
    env: &str,
    solver: &str,
    horizon: usize,
    episode: usize,
    seed: u64,
    result: &Result<EpisodeResult, String>,
    timing: bool,
) -> EpisodeRow {
    let na = || "NA".to_string();
    let mut row = EpisodeRow {
        env: env.to_string(),
        solver: solver.to_string(),
        horizon,
        seed,
        episode,
        total_reward: na(),
        steps: na(),
        certified_count: na(),
        wall_ms: na(),
        status: "ok".into(),
    };
    match result {
        Ok(r) => {
            row.total_reward = r.total_reward.to_string();
            row.steps = r.steps.to_string();
            row.certified_count = r.certified_count.to_string();
            if timing {
                row.wall_ms = format!("{:.3}", r.wall_ms());
            }
        }
        Err(e) => row.status = format!("error: {}", e.replace(['\n', '\r'], " ")),
    }
    row
}

/// Runs every episode of every cell. Episodes run in parallel; results are
/// reported in suite order.
pub fn run_benchmark(suite: &Suite, opts: &BenchOptions) -> Result<BenchmarkReport> {
    let threads = thread_count();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().context("building the worker pool")?;
    let jobs: Vec<(usize, usize)> =
        suite.cells.iter().enumerate().flat_map(|(c, cell)| (0..cell.episodes).map(move |e| (c, e))).collect();
    let outcomes: Vec<Result<EpisodeResult, String>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(c, e)| {
                let cell = &suite.cells[c];
                one_episode(cell, cell.seed + e as u64)
            })
            .collect()
    });
    let mut episodes = Vec::with_capacity(jobs.len());
    let mut results: Vec<Vec<EpisodeResult>> = vec![Vec::new(); suite.cells.len()];
    let mut errors: Vec<Option<String>> = vec![None; suite.cells.len()];
    for (&(c, e), outcome) in jobs.iter().zip(outcomes) {
        let cell = &suite.cells[c];
        episodes.push(episode_row(&cell.env, &cell.solver, cell.horizon, e, cell.seed + e as u64, &outcome, opts.timing));
        match outcome {
            Ok(r) => results[c].push(r),
            Err(msg) => {
                errors[c].get_or_insert(msg);
            }
        }
    }
    let cells = suite
        .cells
        .iter()
        .zip(&results)
        .zip(errors)
        .map(|((cell, done), err)| {
            let returns: Vec<f64> = done.iter().map(|r| r.total_reward).collect();
            CellReport {
                cell: cell.clone(),
                completed: done.len(),
                mean: (!returns.is_empty()).then(|| mean(&returns)),
                std_error: std_error(&returns),
                certified_steps: done.iter().map(|r| r.certified_count).sum(),
                status: err.map_or_else(|| "ok".into(), |e| format!("error: {}", e.replace(['\n', '\r'], " "))),
            }
        })
        .collect();
    Ok(BenchmarkReport {
        git_describe: git_describe(),
        timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        threads,
        cells,
        episodes,
        results,
    })
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    env: &'a str,
    solver: &'a str,
    horizon: usize,
    budget: String,
    uct_c: f64,
    episodes: usize,
    mean: String,
    stderr: String,
    certified_steps: usize,
    status: &'a str,
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".into(), |v| v.to_string())
}

pub fn episodes_csv(rows: &[EpisodeRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn summary_csv(report: &BenchmarkReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for c in &report.cells {
        w.serialize(SummaryRow {
            env: &c.cell.env,
            solver: &c.cell.solver,
            horizon: c.cell.horizon,
            budget: c.cell.budget.to_string(),
            uct_c: c.cell.uct_c,
            episodes: c.completed,
            mean: opt(c.mean),
            stderr: opt(c.std_error),
            certified_steps: c.certified_steps,
            status: &c.status,
        })?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// Writes `episodes.csv`, `summary.csv` and `report.json` into `dir`.
pub fn write_outputs(report: &BenchmarkReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    fs::write(dir.join(EPISODES_CSV), episodes_csv(&report.episodes)?)?;
    fs::write(dir.join(SUMMARY_CSV), summary_csv(report)?)?;
    fs::write(dir.join(REPORT_JSON), serde_json::to_string_pretty(report)?)?;
    Ok(())
}
