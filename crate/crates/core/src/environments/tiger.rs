//! Two doors, one tiger. Listening is noisy; opening a door resets the tiger
//! uniformly and the episode continues until the horizon.

use super::{check_horizon, check_prob};
use crate::error::ModelError;
use crate::model::{ActionId, ModelTables, ObsId, StateId, TabularPomdp};

pub const TIGER_LEFT: StateId = 0;
pub const TIGER_RIGHT: StateId = 1;

pub const OPEN_LEFT: ActionId = 0;
pub const OPEN_RIGHT: ActionId = 1;
pub const LISTEN: ActionId = 2;

pub const HEAR_LEFT: ObsId = 0;
pub const HEAR_RIGHT: ObsId = 1;

pub const ACTION_NAMES: [&str; 3] = ["open-left", "open-right", "listen"];

#[derive(Clone, Debug, PartialEq)]
pub struct TigerParams {
    pub listen_accuracy: f64,
    pub r_listen: f64,
    pub r_tiger: f64,
    pub r_treasure: f64,
    /// Decision steps per episode.
    pub horizon: usize,
}

impl Default for TigerParams {
    fn default() -> Self {
        TigerParams { listen_accuracy: 0.85, r_listen: -1.0, r_tiger: -100.0, r_treasure: 10.0, horizon: 5 }
    }
}

pub fn build_tiger(p: &TigerParams) -> Result<TabularPomdp, ModelError> {
    let horizon = check_horizon(p.horizon)?;
    check_prob("listen_accuracy", p.listen_accuracy)?;
    if p.listen_accuracy <= 0.5 {
        return Err(ModelError::Param("listen_accuracy must exceed 0.5".into()));
    }
    let (s, a) = (2, 3);
    let mut transition = vec![0.0; s * a * s];
    let mut reward = vec![0.0; s * a];
    for x in 0..s {
        for act in 0..a {
            let row = &mut transition[(x * a + act) * s..(x * a + act + 1) * s];
            if act == LISTEN {
                row[x] = 1.0;
            } else {
                row.fill(0.5);
            }
        }
        reward[x * a + LISTEN] = p.r_listen;
        let (left, right) = if x == TIGER_LEFT { (p.r_tiger, p.r_treasure) } else { (p.r_treasure, p.r_tiger) };
        reward[x * a + OPEN_LEFT] = left;
        reward[x * a + OPEN_RIGHT] = right;
    }
    let acc = p.listen_accuracy;
    let observation = vec![acc, 1.0 - acc, 1.0 - acc, acc];
    TabularPomdp::try_new(ModelTables {
        num_states: s,
        num_actions: a,
        num_obs: 2,
        horizon,
        transition,
        observation,
        reward,
        prior: vec![0.5, 0.5],
        r_max: None,
        discount: 1.0,
    })
}
