//! Benchmark suite files.
//!
//! ```text
//! # keys before the first section are defaults for every cell
//! episodes = 500
//! seed = 1
//!
//! [cell]
//! env = tiger
//! solver = db-pomcp
//! horizon = 5
//! budget = 10000      # iterations, or e.g. 1000ms
//! uct_c = 1.0
//! ```

use std::fmt;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use certipomdp_core::{Descent, EnvKind, SolverConfig, SolverKind};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    Iterations(u64),
    TimeMs(u64),
}

impl fmt::Display for Budget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Budget::Iterations(n) => write!(f, "{n}"),
            Budget::TimeMs(ms) => write!(f, "{ms}ms"),
        }
    }
}

impl FromStr for Budget {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.strip_suffix("ms") {
            Some(ms) => Ok(Budget::TimeMs(ms.trim().parse().with_context(|| format!("bad time budget '{s}'"))?)),
            None => Ok(Budget::Iterations(s.parse().with_context(|| format!("bad iteration budget '{s}'"))?)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cell {
    pub env: String,
    pub solver: String,
    pub horizon: usize,
    pub episodes: usize,
    pub budget: Budget,
    pub uct_c: f64,
    /// Episode `i` runs with seed `seed + i`.
    pub seed: u64,
    pub descent: String,
}

impl Cell {
    pub fn env_kind(&self) -> Result<EnvKind> {
        self.env.parse().map_err(|e: String| anyhow!(e))
    }

    pub fn solver_kind(&self) -> Result<SolverKind> {
        self.solver.parse().map_err(|e: String| anyhow!(e))
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let mut cfg = SolverConfig::new(self.solver_kind()?, 0, self.seed);
        match self.budget {
            Budget::Iterations(n) => cfg.iterations_max = Some(n),
            Budget::TimeMs(ms) => {
                cfg.iterations_max = None;
                cfg.time_budget_ms = Some(ms);
            }
        }
        cfg.uct_c = self.uct_c;
        cfg.descent = parse_descent(&self.descent)?;
        Ok(cfg)
    }
}

pub fn parse_descent(s: &str) -> Result<Descent> {
    match s {
        "guided" => Ok(Descent::Guided),
        "sampled" => Ok(Descent::Sampled),
        other => bail!("unknown descent '{other}' (expected guided|sampled)"),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Suite {
    pub cells: Vec<Cell>,
}

fn default_cell() -> Cell {
    Cell {
        env: "tiger".into(),
        solver: "pomcp".into(),
        horizon: 5,
        episodes: 100,
        budget: Budget::Iterations(10_000),
        uct_c: 1.0,
        seed: 1,
        descent: "guided".into(),
    }
}

fn set(cell: &mut Cell, key: &str, value: &str) -> Result<()> {
    match key {
        "env" => {
            value.parse::<EnvKind>().map_err(|e| anyhow!(e))?;
            cell.env = value.to_ascii_lowercase();
        }
        "solver" => cell.solver = value.parse::<SolverKind>().map_err(|e| anyhow!(e))?.to_string(),
        "horizon" => cell.horizon = value.parse()?,
        "episodes" => cell.episodes = value.parse()?,
        "budget" => cell.budget = value.parse()?,
        "uct_c" => cell.uct_c = value.parse()?,
        "seed" => cell.seed = value.parse()?,
        "descent" => {
            parse_descent(value)?;
            cell.descent = value.into();
        }
        other => bail!("unknown key '{other}'"),
    }
    Ok(())
}

pub fn parse_suite(text: &str) -> Result<Suite> {
    let mut defaults = default_cell();
    let mut cells: Vec<Cell> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let ctx = || format!("suite line {}: '{}'", i + 1, raw.trim());
        if line == "[cell]" {
            cells.push(defaults.clone());
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| anyhow!("expected key = value")).with_context(ctx)?;
        let target = cells.last_mut().unwrap_or(&mut defaults);
        set(target, key.trim(), value.trim()).with_context(ctx)?;
    }
    if cells.is_empty() {
        bail!("suite defines no [cell]");
    }
    Ok(Suite { cells })
}
