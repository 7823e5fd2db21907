use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use certipomdp_cli::bench::{episode_row, episodes_csv, write_outputs, BenchOptions};
use certipomdp_cli::episode::run_episode;
use certipomdp_cli::suite::parse_descent;
use certipomdp_cli::ttc::{median_times, time_to_certified, ttc_csv, TtcPlan};
use certipomdp_cli::{parse_suite, run_benchmark};
use certipomdp_core::oracle::oracle_feasible;
use certipomdp_core::{
    certify, exact_optimal_value, save_model, Belief, EnvKind, PlanResult, SolverConfig, SolverKind, TraceRow,
};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "certipomdp", version, about = "Online POMDP planning with deterministic value bounds")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Plan from the prior, or run closed-loop episodes with --episodes.
    Plan(PlanArgs),
    /// Run a benchmark suite and write CSV and JSON reports.
    Bench {
        #[arg(long)]
        suite: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Record measured wall times in the episode CSV.
        #[arg(long)]
        timing: bool,
    },
    /// Plan from the prior and check the result against the exact oracle.
    Certify(SolverArgs),
    /// Time until each solver certifies its root action, over a ladder of horizons.
    TimeToCertified {
        #[arg(long, default_value = "tiger")]
        env: EnvKind,
        #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
        horizons: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "rb-pomcp,db-pomcp")]
        solvers: Vec<SolverKind>,
        #[arg(long = "uct-c", value_delimiter = ',', default_value = "0.1,1,10")]
        uct_c: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        seeds: Vec<u64>,
        #[arg(long, default_value_t = 3600.0)]
        cap_s: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long)]
    env: EnvKind,
    #[arg(long)]
    solver: SolverKind,
    /// Decision steps; defaults to the environment's own.
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long, conflicts_with = "time_budget_ms")]
    iterations: Option<u64>,
    #[arg(long)]
    time_budget_ms: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "uct-c", default_value_t = 1.0)]
    uct_c: f64,
    /// Stop as soon as a single root action remains.
    #[arg(long)]
    stop_on_certified: bool,
    /// rb-pomcp descent: guided or sampled.
    #[arg(long, default_value = "guided")]
    descent: String,
}

impl SolverArgs {
    fn config(&self) -> Result<SolverConfig> {
        let mut cfg = SolverConfig::new(self.solver, 0, self.seed);
        cfg.iterations_max = match (self.iterations, self.time_budget_ms) {
            (None, None) => Some(10_000),
            (n, _) => n,
        };
        cfg.time_budget_ms = self.time_budget_ms;
        cfg.uct_c = self.uct_c;
        cfg.stop_on_certified = self.stop_on_certified;
        cfg.descent = parse_descent(&self.descent)?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    episodes: Option<usize>,
    /// Episode CSV; standard output when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    /// CSV of bounds at every history visited while planning from the prior.
    #[arg(long)]
    trace_bounds: Option<PathBuf>,
    #[arg(long)]
    dump_tree: Option<PathBuf>,
    #[arg(long)]
    dump_model: Option<PathBuf>,
}

fn print_result(r: &PlanResult) {
    println!("chosen_action   {}", r.chosen_action);
    println!("root_interval   [{:.9}, {:.9}]", r.root_interval.lower, r.root_interval.upper);
    println!("certified       {}", r.certified_optimal);
    println!("iterations      {}", r.iterations_used);
    println!("wall_ms         {:.3}", r.wall_ms);
    for (a, iv) in &r.action_intervals {
        let mark = if r.pruned.contains(a) { " pruned" } else { "" };
        println!("action {a:<3}      [{:.9}, {:.9}]{mark}", iv.lower, iv.upper);
    }
}

fn cmd_plan(args: &PlanArgs) -> Result<()> {
    let s = &args.solver;
    let model = s.env.build(s.horizon)?;
    let cfg = s.config()?;
    if let Some(path) = &args.dump_model {
        save_model(&model, path).with_context(|| format!("writing {}", path.display()))?;
    }
    let b = Belief::prior(&model);
    if args.episodes.is_none() || args.trace_bounds.is_some() || args.dump_tree.is_some() {
        let mut rows: Vec<TraceRow> = Vec::new();
        let mut record = |r: &TraceRow| rows.push(*r);
        let observer: Option<certipomdp_core::Observer<'_>> =
            if args.trace_bounds.is_some() { Some(&mut record) } else { None };
        let out = certipomdp_core::plan_with(&model, &b, &cfg, observer)?;
        if let Some(path) = &args.trace_bounds {
            let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
            w.write_record(["iter", "node_depth", "P_h", "U", "L"])?;
            for r in &rows {
                w.write_record([
                    r.iter.to_string(),
                    r.node_depth.to_string(),
                    r.mass.to_string(),
                    r.upper.to_string(),
                    r.lower.to_string(),
                ])?;
            }
            w.flush()?;
        }
        if let Some(path) = &args.dump_tree {
            let Some(tree) = &out.tree else { bail!("{} keeps no search tree to dump", cfg.kind) };
            fs::write(path, tree.dump()).with_context(|| format!("writing {}", path.display()))?;
        }
        if args.episodes.is_none() {
            print_result(&out.result);
        }
    }
    if let Some(n) = args.episodes {
        let name = s.env.to_string();
        let solver = cfg.kind.to_string();
        let mut rows = Vec::with_capacity(n);
        for e in 0..n {
            let seed = s.seed + e as u64;
            let r = run_episode(&name, &model, &cfg, seed).map_err(|e| e.to_string());
            rows.push(episode_row(&name, &solver, model.horizon() + 1, e, seed, &r, true));
        }
        let text = episodes_csv(&rows)?;
        match &args.output {
            Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
            None => std::io::stdout().write_all(text.as_bytes())?,
        }
    }
    Ok(())
}

fn cmd_certify(s: &SolverArgs) -> Result<bool> {
    let model = s.env.build(s.horizon)?;
    if !oracle_feasible(&model, 0) {
        bail!("{} with {} steps is too large for the exact oracle", s.env, model.horizon() + 1);
    }
    let b = Belief::prior(&model);
    let oracle = exact_optimal_value(&model, &b)?;
    let out = certipomdp_core::plan_with(&model, &b, &s.config()?, None)?;
    print_result(&out.result);
    match certify(&out.result, &oracle, out.tree.as_ref()) {
        Ok(report) => {
            println!("{report}");
            Ok(true)
        }
        Err(failure) => {
            eprintln!("{failure}");
            Ok(false)
        }
    }
}

fn run() -> Result<ExitCode> {
    match Cli::parse().command {
        Cmd::Plan(args) => cmd_plan(&args)?,
        Cmd::Bench { suite, output, timing } => {
            let text = fs::read_to_string(&suite).with_context(|| format!("reading {}", suite.display()))?;
            let report = run_benchmark(&parse_suite(&text)?, &BenchOptions { timing })?;
            write_outputs(&report, &output)?;
            for c in &report.cells {
                let fmt = |x: Option<f64>| x.map_or_else(|| "NA".to_string(), |v| format!("{v:.3}"));
                println!(
                    "{:<10} {:<9} H={:<3} mean {} ± {} ({})",
                    c.cell.env,
                    c.cell.solver,
                    c.cell.horizon,
                    fmt(c.mean),
                    fmt(c.std_error),
                    c.status
                );
            }
            if report.failed() {
                return Ok(ExitCode::from(2));
            }
        }
        Cmd::Certify(args) => {
            if !cmd_certify(&args)? {
                return Ok(ExitCode::from(1));
            }
        }
        Cmd::TimeToCertified { env, horizons, solvers, uct_c, seeds, cap_s, output } => {
            let plan = TtcPlan { env, horizons, solvers, uct_c, seeds, cap_ms: (cap_s * 1e3).round() as u64 };
            let rows = time_to_certified(&plan)?;
            let text = ttc_csv(&rows)?;
            match output {
                Some(path) => fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{text}"),
            }
            for (h, s, c, t) in median_times(&rows) {
                let t = t.map_or_else(|| "CAP".to_string(), |t| format!("{t:.3} ms"));
                eprintln!("H={h:<3} {s:<9} c={c:<5} {t}");
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
