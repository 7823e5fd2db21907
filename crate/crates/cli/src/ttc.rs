//! Wall time until the planner certifies its root action.

use anyhow::Result;
use certipomdp_core::{plan, Belief, EnvKind, SolverConfig, SolverKind};
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TtcRow {
    pub env: String,
    pub horizon: usize,
    pub solver: String,
    pub uct_c: f64,
    pub seed: u64,
    pub iterations: u64,
    /// `None` when the cap was reached first.
    pub wall_ms: Option<f64>,
}

impl TtcRow {
    pub fn capped(&self) -> bool {
        self.wall_ms.is_none()
    }
}

#[derive(Clone, Debug)]
pub struct TtcPlan {
    pub env: EnvKind,
    pub horizons: Vec<usize>,
    pub solvers: Vec<SolverKind>,
    pub uct_c: Vec<f64>,
    pub seeds: Vec<u64>,
    pub cap_ms: u64,
}

/// Plans once from the prior for every combination, stopping at
/// certification or at the cap.
pub fn time_to_certified(p: &TtcPlan) -> Result<Vec<TtcRow>> {
    let mut rows = Vec::new();
    for &h in &p.horizons {
        let model = p.env.build(Some(h))?;
        let b = Belief::prior(&model);
        for &kind in &p.solvers {
            for &c in &p.uct_c {
                for &seed in &p.seeds {
                    let mut row = TtcRow {
                        env: p.env.to_string(),
                        horizon: h,
                        solver: kind.to_string(),
                        uct_c: c,
                        seed,
                        iterations: 0,
                        wall_ms: None,
                    };
                    if p.cap_ms > 0 {
                        let mut cfg = SolverConfig::new(kind, 0, seed);
                        cfg.iterations_max = None;
                        cfg.time_budget_ms = Some(p.cap_ms);
                        cfg.uct_c = c;
                        cfg.stop_on_certified = true;
                        let r = plan(&model, &b, &cfg)?;
                        row.iterations = r.iterations_used;
                        row.wall_ms = r.certified_optimal.then_some(r.wall_ms);
                    }
                    rows.push(row);
                }
            }
        }
    }
    Ok(rows)
}

/// Median certification time over seeds for each `(horizon, solver, uct_c)`
/// in first-seen order; `None` if any seed hit the cap.
pub fn median_times(rows: &[TtcRow]) -> Vec<(usize, String, f64, Option<f64>)> {
    let mut keys: Vec<(usize, String, f64)> = Vec::new();
    for r in rows {
        let k = (r.horizon, r.solver.clone(), r.uct_c);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(h, s, c)| {
            let times: Option<Vec<f64>> =
                rows.iter().filter(|r| r.horizon == h && r.solver == s && r.uct_c == c).map(|r| r.wall_ms).collect();
            let med = times.map(|mut t| {
                t.sort_by(f64::total_cmp);
                t[t.len() / 2]
            });
            (h, s, c, med)
        })
        .collect()
}

pub fn ttc_csv(rows: &[TtcRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["env", "horizon", "solver", "uct_c", "seed", "iterations", "wall_ms", "status"])?;
    for r in rows {
        w.write_record([
            r.env.clone(),
            r.horizon.to_string(),
            r.solver.clone(),
            r.uct_c.to_string(),
            r.seed.to_string(),
            r.iterations.to_string(),
            r.wall_ms.map_or_else(|| "NA".into(), |t| format!("{t:.3}")),
            if r.capped() { "CAP".into() } else { "certified".into() },
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_cap_is_all_cap() {
        let p = TtcPlan {
            env: EnvKind::Tiger,
            horizons: vec![2, 3],
            solvers: vec![SolverKind::RbPomcp, SolverKind::DbPomcp],
            uct_c: vec![1.0],
            seeds: vec![0],
            cap_ms: 0,
        };
        let rows = time_to_certified(&p).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(TtcRow::capped));
        assert!(ttc_csv(&rows).unwrap().lines().skip(1).all(|l| l.ends_with(",NA,CAP")));
    }

    #[test]
    fn rb_certifies_small_tiger() {
        let p = TtcPlan {
            env: EnvKind::Tiger,
            horizons: vec![2],
            solvers: vec![SolverKind::RbPomcp],
            uct_c: vec![1.0],
            seeds: vec![0, 1, 2],
            cap_ms: 10_000,
        };
        let rows = time_to_certified(&p).unwrap();
        assert!(rows.iter().all(|r| !r.capped()));
        assert!(median_times(&rows)[0].3.is_some());
    }
}
