//! One-dimensional light/dark navigation.
//!
//! Cells `0..grid_len` plus an absorbing terminal state reached by `stop`.
//! Observations name a cell: exact in the light cell, and in dark cells the
//! true cell with probability `1 - dark_obs_noise`, otherwise one of its two
//! (wrapped) neighbours.

use super::{check_horizon, check_prob};
use crate::error::ModelError;
use crate::model::{ActionId, ModelTables, TabularPomdp};

pub const LEFT: ActionId = 0;
pub const RIGHT: ActionId = 1;
pub const STOP: ActionId = 2;

pub const ACTION_NAMES: [&str; 3] = ["left", "right", "stop"];

#[derive(Clone, Debug, PartialEq)]
pub struct LightDarkParams {
    pub grid_len: usize,
    pub light_cell: usize,
    pub goal_cell: usize,
    pub dark_obs_noise: f64,
    pub r_step: f64,
    pub r_goal: f64,
    pub horizon: usize,
}

impl Default for LightDarkParams {
    fn default() -> Self {
        LightDarkParams {
            grid_len: 7,
            light_cell: 5,
            goal_cell: 0,
            dark_obs_noise: 0.4,
            r_step: -1.0,
            r_goal: 10.0,
            horizon: 5,
        }
    }
}

impl LightDarkParams {
    pub fn terminal_state(&self) -> usize {
        self.grid_len
    }

    pub fn terminal_obs(&self) -> usize {
        self.grid_len
    }
}

pub fn build_light_dark(p: &LightDarkParams) -> Result<TabularPomdp, ModelError> {
    let horizon = check_horizon(p.horizon)?;
    let n = p.grid_len;
    if n < 2 || p.light_cell >= n || p.goal_cell >= n {
        return Err(ModelError::Param(format!("cells must lie in a grid of at least 2 (grid_len = {n})")));
    }
    if p.light_cell == p.goal_cell {
        return Err(ModelError::Param("light_cell must differ from goal_cell".into()));
    }
    check_prob("dark_obs_noise", p.dark_obs_noise)?;
    if p.dark_obs_noise <= 0.0 || p.dark_obs_noise >= 1.0 {
        return Err(ModelError::Param("dark_obs_noise must lie strictly inside (0, 1)".into()));
    }

    let s = n + 1;
    let a = 3;
    let zn = n + 1;
    let terminal = p.terminal_state();
    let mut transition = vec![0.0; s * a * s];
    let mut reward = vec![0.0; s * a];
    for x in 0..s {
        for act in 0..a {
            let next = if x == terminal {
                terminal
            } else {
                match act {
                    LEFT => x.saturating_sub(1),
                    RIGHT => (x + 1).min(n - 1),
                    _ => terminal,
                }
            };
            transition[(x * a + act) * s + next] = 1.0;
            reward[x * a + act] = match (x == terminal, act) {
                (true, _) => 0.0,
                (false, STOP) if x == p.goal_cell => p.r_goal,
                (false, STOP) => -p.r_goal,
                _ => p.r_step,
            };
        }
    }
    let mut observation = vec![0.0; s * zn];
    for x in 0..n {
        let row = &mut observation[x * zn..(x + 1) * zn];
        if x == p.light_cell {
            row[x] = 1.0;
        } else {
            row[x] += 1.0 - p.dark_obs_noise;
            row[(x + n - 1) % n] += p.dark_obs_noise / 2.0;
            row[(x + 1) % n] += p.dark_obs_noise / 2.0;
        }
    }
    observation[terminal * zn + p.terminal_obs()] = 1.0;

    let mut prior = vec![0.0; s];
    let start = 1.0 / (n - 1) as f64;
    for (x, v) in prior.iter_mut().enumerate().take(n) {
        if x != p.goal_cell {
            *v = start;
        }
    }
    TabularPomdp::try_new(ModelTables {
        num_states: s,
        num_actions: a,
        num_obs: zn,
        horizon,
        transition,
        observation,
        reward,
        prior,
        r_max: None,
        discount: 1.0,
    })
}
