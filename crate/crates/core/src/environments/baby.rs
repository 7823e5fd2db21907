//! Caregiver and baby. The baby's need is hidden; crying is a noisy hint.
//!
//! Addressing a need (or doing nothing when there is none) lets a fresh need
//! arrive from `need_arrival`; a wrong action leaves an existing need in place.

use super::{check_horizon, check_prob};
use crate::error::ModelError;
use crate::model::{ActionId, ModelTables, ObsId, StateId, TabularPomdp};

pub const HUNGER: StateId = 0;
pub const DISCOMFORT: StateId = 1;
pub const NO_NEED: StateId = 2;

pub const FEED: ActionId = 0;
pub const CHANGE: ActionId = 1;
pub const NOTHING: ActionId = 2;

pub const CRY: ObsId = 0;
pub const QUIET: ObsId = 1;

pub const ACTION_NAMES: [&str; 3] = ["feed", "change", "nothing"];

#[derive(Clone, Debug, PartialEq)]
pub struct BabyParams {
    /// P(cry | need) indexed by state.
    pub p_cry: [f64; 3],
    /// Probability that hunger / discomfort arrives after the previous need is
    /// settled; the remainder stays at no-need.
    pub need_arrival: [f64; 2],
    pub r_correct: f64,
    pub r_wrong: f64,
    pub horizon: usize,
}

impl Default for BabyParams {
    fn default() -> Self {
        BabyParams { p_cry: [0.8, 0.9, 0.1], need_arrival: [0.1, 0.1], r_correct: 0.0, r_wrong: -5.0, horizon: 5 }
    }
}

fn correct_action(x: StateId) -> ActionId {
    match x {
        HUNGER => FEED,
        DISCOMFORT => CHANGE,
        _ => NOTHING,
    }
}

pub fn build_baby(p: &BabyParams) -> Result<TabularPomdp, ModelError> {
    let horizon = check_horizon(p.horizon)?;
    for (i, &c) in p.p_cry.iter().enumerate() {
        check_prob(&format!("p_cry[{i}]"), c)?;
    }
    for (i, &c) in p.need_arrival.iter().enumerate() {
        check_prob(&format!("need_arrival[{i}]"), c)?;
    }
    let settle = 1.0 - p.need_arrival[0] - p.need_arrival[1];
    if settle < 0.0 {
        return Err(ModelError::Param("need_arrival probabilities exceed 1".into()));
    }
    let arrival = [p.need_arrival[0], p.need_arrival[1], settle];
    let (s, a) = (3, 3);
    let mut transition = vec![0.0; s * a * s];
    let mut reward = vec![0.0; s * a];
    for x in 0..s {
        for act in 0..a {
            let ok = correct_action(x) == act;
            let row = &mut transition[(x * a + act) * s..(x * a + act + 1) * s];
            if ok || x == NO_NEED {
                row.copy_from_slice(&arrival);
            } else {
                row[x] = 1.0;
            }
            reward[x * a + act] = if ok { p.r_correct } else { p.r_wrong };
        }
    }
    let observation = p.p_cry.iter().flat_map(|&c| [c, 1.0 - c]).collect();
    TabularPomdp::try_new(ModelTables {
        num_states: s,
        num_actions: a,
        num_obs: 2,
        horizon,
        transition,
        observation,
        reward,
        prior: vec![1.0 / 3.0; 3],
        r_max: None,
        discount: 1.0,
    })
}
