//! Desk-scale Rock Sample.
//!
//! The rover starts at the west edge, may sample rocks (good +10, bad -10,
//! nothing there -10) and leaves through the east edge for +10. `check i`
//! reports the quality of rock `i`, correctly with probability
//! `(1 + η) / 2` where `η = sensor_efficiency · 2^(-distance)`.
//!
//! The observation table is state-only, so a state also remembers which rock
//! (if any) was checked by the last action.

use super::check_horizon;
use crate::error::ModelError;
use crate::model::{ActionId, ModelTables, ObsId, StateId, TabularPomdp};

pub const NORTH: ActionId = 0;
pub const SOUTH: ActionId = 1;
pub const EAST: ActionId = 2;
pub const WEST: ActionId = 3;
pub const SAMPLE: ActionId = 4;
/// `CHECK_BASE + i` checks rock `i`.
pub const CHECK_BASE: ActionId = 5;

pub const OBS_NONE: ObsId = 0;
pub const OBS_GOOD: ObsId = 1;
pub const OBS_BAD: ObsId = 2;

const R_ROCK: f64 = 10.0;
const R_EXIT: f64 = 10.0;

#[derive(Clone, Debug, PartialEq)]
pub struct RockSampleParams {
    pub grid_n: usize,
    pub num_rocks: usize,
    pub sensor_efficiency: f64,
    pub horizon: usize,
}

impl Default for RockSampleParams {
    fn default() -> Self {
        RockSampleParams { grid_n: 3, num_rocks: 2, sensor_efficiency: 1.0, horizon: 5 }
    }
}

/// Decoded state of the rover.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RockState {
    Active { row: usize, col: usize, rocks: u32, checked: Option<usize> },
    Exited,
}

/// Index layout for a given parameter set.
#[derive(Clone, Debug)]
pub struct Layout {
    pub n: usize,
    pub k: usize,
    pub rocks: Vec<(usize, usize)>,
}

impl Layout {
    pub fn new(p: &RockSampleParams) -> Self {
        let n = p.grid_n;
        let start = (n / 2, 0);
        let mut rocks = Vec::with_capacity(p.num_rocks);
        let mut cell = 0usize;
        // a fixed scatter over the grid, skipping the start cell and repeats
        while rocks.len() < p.num_rocks {
            let idx = (cell * 5 + n + 1) % (n * n);
            let rc = (idx / n, idx % n);
            if rc != start && !rocks.contains(&rc) {
                rocks.push(rc);
            }
            cell += 1;
        }
        Layout { n, k: p.num_rocks, rocks }
    }

    pub fn num_states(&self) -> usize {
        self.n * self.n * (1 << self.k) * (self.k + 1) + 1
    }

    pub fn exited(&self) -> StateId {
        self.num_states() - 1
    }

    pub fn encode(&self, s: RockState) -> StateId {
        match s {
            RockState::Exited => self.exited(),
            RockState::Active { row, col, rocks, checked } => {
                let pos = row * self.n + col;
                let check = checked.unwrap_or(self.k);
                ((pos << self.k) + rocks as usize) * (self.k + 1) + check
            }
        }
    }

    pub fn decode(&self, x: StateId) -> RockState {
        if x == self.exited() {
            return RockState::Exited;
        }
        let check = x % (self.k + 1);
        let rest = x / (self.k + 1);
        let rocks = (rest & ((1 << self.k) - 1)) as u32;
        let pos = rest >> self.k;
        RockState::Active {
            row: pos / self.n,
            col: pos % self.n,
            rocks,
            checked: (check < self.k).then_some(check),
        }
    }
}

pub fn build_rock_sample(p: &RockSampleParams) -> Result<TabularPomdp, ModelError> {
    let horizon = check_horizon(p.horizon)?;
    if !(2..=5).contains(&p.grid_n) {
        return Err(ModelError::Param(format!("grid_n = {} must lie in 2..=5", p.grid_n)));
    }
    if p.num_rocks == 0 || p.num_rocks > 4 || p.num_rocks >= p.grid_n * p.grid_n {
        return Err(ModelError::Param(format!("num_rocks = {} must lie in 1..=4", p.num_rocks)));
    }
    if !(p.sensor_efficiency > 0.0 && p.sensor_efficiency <= 1.0) {
        return Err(ModelError::Param("sensor_efficiency must lie in (0, 1]".into()));
    }
    let layout = Layout::new(p);
    let (n, k) = (layout.n, layout.k);
    let s = layout.num_states();
    let a = CHECK_BASE + k;
    let zn = 3;
    let mut transition = vec![0.0; s * a * s];
    let mut reward = vec![0.0; s * a];
    let mut observation = vec![0.0; s * zn];

    for x in 0..s {
        let state = layout.decode(x);
        for act in 0..a {
            let (next, r) = match state {
                RockState::Exited => (RockState::Exited, 0.0),
                RockState::Active { row, col, rocks, .. } => {
                    let moved = |row, col| RockState::Active { row, col, rocks, checked: None };
                    match act {
                        NORTH => (moved(row.saturating_sub(1), col), 0.0),
                        SOUTH => (moved((row + 1).min(n - 1), col), 0.0),
                        WEST => (moved(row, col.saturating_sub(1)), 0.0),
                        EAST if col + 1 == n => (RockState::Exited, R_EXIT),
                        EAST => (moved(row, col + 1), 0.0),
                        SAMPLE => match layout.rocks.iter().position(|&rc| rc == (row, col)) {
                            Some(i) if rocks & (1 << i) != 0 => (
                                RockState::Active { row, col, rocks: rocks & !(1 << i), checked: None },
                                R_ROCK,
                            ),
                            _ => (moved(row, col), -R_ROCK),
                        },
                        check => (RockState::Active { row, col, rocks, checked: Some(check - CHECK_BASE) }, 0.0),
                    }
                }
            };
            transition[(x * a + act) * s + layout.encode(next)] = 1.0;
            reward[x * a + act] = r;
        }

        let row = &mut observation[x * zn..(x + 1) * zn];
        match state {
            RockState::Active { row: r, col: c, rocks, checked: Some(i) } => {
                let (rr, rc) = layout.rocks[i];
                let dist = ((r as f64 - rr as f64).powi(2) + (c as f64 - rc as f64).powi(2)).sqrt();
                let eta = p.sensor_efficiency * 2f64.powf(-dist);
                let correct = 0.5 * (1.0 + eta);
                let good = rocks & (1 << i) != 0;
                row[OBS_GOOD] = if good { correct } else { 1.0 - correct };
                row[OBS_BAD] = 1.0 - row[OBS_GOOD];
            }
            _ => row[OBS_NONE] = 1.0,
        }
    }

    let mut prior = vec![0.0; s];
    let masks = 1u32 << k;
    for rocks in 0..masks {
        let x = layout.encode(RockState::Active { row: n / 2, col: 0, rocks, checked: None });
        prior[x] = 1.0 / masks as f64;
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_instance_validates() {
        let p = RockSampleParams { grid_n: 3, num_rocks: 2, ..Default::default() };
        let m = build_rock_sample(&p).unwrap();
        assert!(m.validate().is_empty());
        assert_eq!(m.num_states(), 9 * 4 * 3 + 1);
        assert_eq!(m.num_actions(), 7);
        assert_eq!(m.num_obs(), 3);
    }

    #[test]
    fn encode_decode_roundtrip() {
        let layout = Layout::new(&RockSampleParams::default());
        for x in 0..layout.num_states() {
            assert_eq!(layout.encode(layout.decode(x)), x);
        }
    }

    #[test]
    fn rocks_avoid_start() {
        for n in 2..=5 {
            for k in 1..=4usize.min(n * n - 1) {
                let layout = Layout::new(&RockSampleParams { grid_n: n, num_rocks: k, ..Default::default() });
                assert_eq!(layout.rocks.len(), k);
                assert!(!layout.rocks.contains(&(n / 2, 0)));
            }
        }
    }

    #[test]
    fn sensor_on_the_rock_is_exact() {
        let p = RockSampleParams::default();
        let layout = Layout::new(&p);
        let m = build_rock_sample(&p).unwrap();
        let (r, c) = layout.rocks[0];
        let x = layout.encode(RockState::Active { row: r, col: c, rocks: 1, checked: Some(0) });
        assert_eq!(m.observation(x, OBS_GOOD), 1.0);
    }

    #[test]
    fn rejects_oversized() {
        assert!(build_rock_sample(&RockSampleParams { grid_n: 6, ..Default::default() }).is_err());
        assert!(build_rock_sample(&RockSampleParams { num_rocks: 5, ..Default::default() }).is_err());
    }
}
