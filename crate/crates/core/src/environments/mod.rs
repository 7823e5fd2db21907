//! Benchmark POMDPs with fixed default constants.
//!
//! Every builder takes a `horizon` counted in decision steps; the resulting
//! model's last time step is `horizon - 1`.

use std::fmt;
use std::str::FromStr;

use crate::error::ModelError;
use crate::model::TabularPomdp;

pub mod baby;
pub mod light_dark;
pub mod random;
pub mod rock_sample;
pub mod tiger;

pub use baby::{build_baby, BabyParams};
pub use light_dark::{build_light_dark, LightDarkParams};
pub use random::{random_model, RandomDims};
pub use rock_sample::{build_rock_sample, RockSampleParams};
pub use tiger::{build_tiger, TigerParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EnvKind {
    Tiger,
    Baby,
    LightDark,
    RockSample,
}

impl EnvKind {
    pub const ALL: [EnvKind; 4] = [EnvKind::Tiger, EnvKind::Baby, EnvKind::LightDark, EnvKind::RockSample];

    pub fn name(self) -> &'static str {
        match self {
            EnvKind::Tiger => "tiger",
            EnvKind::Baby => "baby",
            EnvKind::LightDark => "lightdark",
            EnvKind::RockSample => "rocksample",
        }
    }

    /// Builds the environment with default constants, optionally overriding the
    /// number of decision steps.
    pub fn build(self, horizon: Option<usize>) -> Result<TabularPomdp, ModelError> {
        match self {
            EnvKind::Tiger => {
                let mut p = TigerParams::default();
                p.horizon = horizon.unwrap_or(p.horizon);
                build_tiger(&p)
            }
            EnvKind::Baby => {
                let mut p = BabyParams::default();
                p.horizon = horizon.unwrap_or(p.horizon);
                build_baby(&p)
            }
            EnvKind::LightDark => {
                let mut p = LightDarkParams::default();
                p.horizon = horizon.unwrap_or(p.horizon);
                build_light_dark(&p)
            }
            EnvKind::RockSample => {
                let mut p = RockSampleParams::default();
                p.horizon = horizon.unwrap_or(p.horizon);
                build_rock_sample(&p)
            }
        }
    }
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnvKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EnvKind::ALL
            .into_iter()
            .find(|e| e.name() == s.to_ascii_lowercase())
            .ok_or_else(|| format!("unknown environment '{s}' (expected tiger|baby|lightdark|rocksample)"))
    }
}

pub(crate) fn check_horizon(horizon: usize) -> Result<usize, ModelError> {
    if horizon == 0 {
        return Err(ModelError::Param("horizon must be at least 1".into()));
    }
    Ok(horizon - 1)
}

pub(crate) fn check_prob(name: &str, p: f64) -> Result<(), ModelError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(ModelError::Param(format!("{name} = {p} is not a probability")));
    }
    Ok(())
}
