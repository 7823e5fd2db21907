//! Tabular POMDP model.

use std::fmt;

use crate::error::ModelError;

pub type StateId = usize;
pub type ActionId = usize;
pub type ObsId = usize;

/// Tolerance for row sums when validating model tables.
pub const MODEL_TOL: f64 = 1e-12;
/// Tolerance for runtime normalization checks (beliefs, marginals).
pub const RUNTIME_TOL: f64 = 1e-9;

/// A finite-horizon discrete POMDP stored as dense tables.
///
/// Time steps run `0..=horizon`; an action is taken at every step including
/// the last one, so a model with `horizon == T` yields `T + 1` rewards per
/// episode.
#[derive(Clone, Debug, PartialEq)]
pub struct TabularPomdp {
    num_states: usize,
    num_actions: usize,
    num_obs: usize,
    horizon: usize,
    // [x][a][x'] flattened
    transition: Vec<f64>,
    // [x][z] flattened
    observation: Vec<f64>,
    // [x][a] flattened
    reward: Vec<f64>,
    prior: Vec<f64>,
    r_max: f64,
    discount: f64,
}

/// One failed model invariant.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    EmptyDimension(&'static str),
    TableShape { table: &'static str, expected: usize, found: usize },
    TransitionRow { state: StateId, action: ActionId, sum: f64 },
    ObservationRow { state: StateId, sum: f64 },
    PriorSum { sum: f64 },
    NegativeTransition { state: StateId, action: ActionId, next: StateId },
    NegativeObservation { state: StateId, obs: ObsId },
    NegativePrior { state: StateId },
    RewardOutOfRange { state: StateId, action: ActionId, value: f64 },
    NonFinite { table: &'static str, index: usize },
    Discount(f64),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyDimension(d) => write!(f, "{d} must be positive"),
            Violation::TableShape { table, expected, found } => {
                write!(f, "{table} table has {found} entries, expected {expected}")
            }
            Violation::TransitionRow { state, action, sum } => {
                write!(f, "transition row (x={state}, a={action}) sums to {sum}")
            }
            Violation::ObservationRow { state, sum } => {
                write!(f, "observation row x={state} sums to {sum}")
            }
            Violation::PriorSum { sum } => write!(f, "prior sums to {sum}"),
            Violation::NegativeTransition { state, action, next } => {
                write!(f, "negative transition entry (x={state}, a={action}, x'={next})")
            }
            Violation::NegativeObservation { state, obs } => {
                write!(f, "negative observation entry (x={state}, z={obs})")
            }
            Violation::NegativePrior { state } => write!(f, "negative prior entry x={state}"),
            Violation::RewardOutOfRange { state, action, value } => {
                write!(f, "reward (x={state}, a={action}) = {value} exceeds r_max")
            }
            Violation::NonFinite { table, index } => write!(f, "{table}[{index}] is not finite"),
            Violation::Discount(d) => write!(f, "discount {d} outside (0, 1]"),
        }
    }
}

/// Raw tables used to assemble a [`TabularPomdp`].
#[derive(Clone, Debug)]
pub struct ModelTables {
    pub num_states: usize,
    pub num_actions: usize,
    pub num_obs: usize,
    pub horizon: usize,
    /// `[x][a][x']` flattened.
    pub transition: Vec<f64>,
    /// `[x][z]` flattened.
    pub observation: Vec<f64>,
    /// `[x][a]` flattened.
    pub reward: Vec<f64>,
    pub prior: Vec<f64>,
    /// Defaults to the largest absolute reward entry.
    pub r_max: Option<f64>,
    pub discount: f64,
}

impl TabularPomdp {
    /// Assembles a model without checking invariants. Use [`TabularPomdp::try_new`]
    /// to reject malformed tables.
    pub fn from_tables_unchecked(t: ModelTables) -> Self {
        let r_max = t
            .r_max
            .unwrap_or_else(|| t.reward.iter().fold(0.0_f64, |m, r| m.max(r.abs())));
        TabularPomdp {
            num_states: t.num_states,
            num_actions: t.num_actions,
            num_obs: t.num_obs,
            horizon: t.horizon,
            transition: t.transition,
            observation: t.observation,
            reward: t.reward,
            prior: t.prior,
            r_max,
            discount: t.discount,
        }
    }

    pub fn try_new(t: ModelTables) -> Result<Self, ModelError> {
        let model = Self::from_tables_unchecked(t);
        let violations = model.validate();
        if violations.is_empty() {
            Ok(model)
        } else {
            Err(ModelError::Invalid(violations))
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_obs(&self) -> usize {
        self.num_obs
    }

    /// Last time step `T`.
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    #[inline]
    pub fn transition(&self, x: StateId, a: ActionId, next: StateId) -> f64 {
        self.transition[(x * self.num_actions + a) * self.num_states + next]
    }

    /// Distribution over next states for `(x, a)`.
    #[inline]
    pub fn transition_row(&self, x: StateId, a: ActionId) -> &[f64] {
        let start = (x * self.num_actions + a) * self.num_states;
        &self.transition[start..start + self.num_states]
    }

    #[inline]
    pub fn observation(&self, x: StateId, z: ObsId) -> f64 {
        self.observation[x * self.num_obs + z]
    }

    #[inline]
    pub fn observation_row(&self, x: StateId) -> &[f64] {
        let start = x * self.num_obs;
        &self.observation[start..start + self.num_obs]
    }

    #[inline]
    pub fn reward(&self, x: StateId, a: ActionId) -> f64 {
        self.reward[x * self.num_actions + a]
    }

    /// Returns a copy with a different last time step.
    pub fn with_horizon(&self, horizon: usize) -> Self {
        TabularPomdp { horizon, ..self.clone() }
    }

    /// Returns a copy with a different discount factor.
    pub fn with_discount(&self, discount: f64) -> Self {
        TabularPomdp { discount, ..self.clone() }
    }

    /// Lists every violated model invariant; empty iff the model is well formed.
    pub fn validate(&self) -> Vec<Violation> {
        validate_model(self)
    }

    /// Copies the model back into raw tables.
    pub fn tables(&self) -> ModelTables {
        ModelTables {
            num_states: self.num_states,
            num_actions: self.num_actions,
            num_obs: self.num_obs,
            horizon: self.horizon,
            transition: self.transition.clone(),
            observation: self.observation.clone(),
            reward: self.reward.clone(),
            prior: self.prior.clone(),
            r_max: Some(self.r_max),
            discount: self.discount,
        }
    }
}

pub fn validate_model(m: &TabularPomdp) -> Vec<Violation> {
    let mut out = Vec::new();
    for (name, n) in [("num_states", m.num_states), ("num_actions", m.num_actions), ("num_obs", m.num_obs)] {
        if n == 0 {
            out.push(Violation::EmptyDimension(name));
        }
    }
    let (s, a, z) = (m.num_states, m.num_actions, m.num_obs);
    let shapes = [
        ("transition", s * a * s, m.transition.len()),
        ("observation", s * z, m.observation.len()),
        ("reward", s * a, m.reward.len()),
        ("prior", s, m.prior.len()),
    ];
    let mut shape_ok = true;
    for (table, expected, found) in shapes {
        if expected != found {
            out.push(Violation::TableShape { table, expected, found });
            shape_ok = false;
        }
    }
    if !(m.discount > 0.0 && m.discount <= 1.0) {
        out.push(Violation::Discount(m.discount));
    }
    if !shape_ok || out.iter().any(|v| matches!(v, Violation::EmptyDimension(_))) {
        return out;
    }
    for (table, values) in [
        ("transition", &m.transition),
        ("observation", &m.observation),
        ("reward", &m.reward),
        ("prior", &m.prior),
    ] {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            out.push(Violation::NonFinite { table, index });
        }
    }

    for x in 0..s {
        for act in 0..a {
            let row = m.transition_row(x, act);
            if let Some(next) = row.iter().position(|&p| p < 0.0) {
                out.push(Violation::NegativeTransition { state: x, action: act, next });
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > MODEL_TOL {
                out.push(Violation::TransitionRow { state: x, action: act, sum });
            }
            let r = m.reward(x, act);
            if r.abs() > m.r_max {
                out.push(Violation::RewardOutOfRange { state: x, action: act, value: r });
            }
        }
        let row = m.observation_row(x);
        if let Some(obs) = row.iter().position(|&p| p < 0.0) {
            out.push(Violation::NegativeObservation { state: x, obs });
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > MODEL_TOL {
            out.push(Violation::ObservationRow { state: x, sum });
        }
        if m.prior[x] < 0.0 {
            out.push(Violation::NegativePrior { state: x });
        }
    }
    let sum: f64 = m.prior.iter().sum();
    if (sum - 1.0).abs() > MODEL_TOL {
        out.push(Violation::PriorSum { sum });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environments::{build_tiger, TigerParams};

    #[test]
    fn tiger_is_well_formed() {
        let m = build_tiger(&TigerParams::default()).unwrap();
        assert_eq!(validate_model(&m), vec![]);
    }

    #[test]
    fn short_transition_row_is_named() {
        let mut t = build_tiger(&TigerParams::default()).unwrap().tables();
        // (x=1, a=2) row: listen from tiger-right
        let start = (3 + 2) * 2;
        t.transition[start + 1] = 0.9;
        let m = TabularPomdp::from_tables_unchecked(t);
        let v = validate_model(&m);
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(matches!(v[0], Violation::TransitionRow { state: 1, action: 2, .. }));
    }

    #[test]
    fn negative_prior_is_named() {
        let mut t = build_tiger(&TigerParams::default()).unwrap().tables();
        t.prior = vec![1.5, -0.5];
        let v = validate_model(&TabularPomdp::from_tables_unchecked(t));
        assert_eq!(v, vec![Violation::NegativePrior { state: 1 }]);
    }

    #[test]
    fn reward_beyond_r_max() {
        let mut t = build_tiger(&TigerParams::default()).unwrap().tables();
        t.r_max = Some(50.0);
        let v = validate_model(&TabularPomdp::from_tables_unchecked(t));
        assert_eq!(v.len(), 2);
        assert!(v.iter().all(|v| matches!(v, Violation::RewardOutOfRange { .. })));
    }

    #[test]
    fn shape_mismatch_short_circuits() {
        let mut t = build_tiger(&TigerParams::default()).unwrap().tables();
        t.observation.pop();
        let v = validate_model(&TabularPomdp::from_tables_unchecked(t));
        assert_eq!(v, vec![Violation::TableShape { table: "observation", expected: 4, found: 3 }]);
    }
}
