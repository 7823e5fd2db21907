//! Online planning for small discrete POMDPs with anytime deterministic
//! bounds on the optimal value.
//!
//! The search tree keeps the exact probability mass of every sampled state
//! trajectory, which turns the sampled portion of the belief tree into a
//! bound on the value at the root. An exhaustive oracle in [`oracle`] serves
//! as ground truth for all of it.

pub mod belief;
pub mod bounds;
pub mod environments;
pub mod error;
pub mod format;
pub mod model;
pub mod oracle;
pub mod rng;
pub mod trajectory;
pub mod solvers;
pub mod tree;

pub use belief::{belief_reward, belief_update, observation_marginals, propagate, Belief};
pub use bounds::{prune_decision, BoundConfig, BoundInterval};
pub use environments::EnvKind;
pub use error::{BeliefError, BoundsError, CertificationFailure, ModelError, OracleError, SolveError};
pub use format::{format_model, load_model, parse_model, save_model};
pub use model::{validate_model, ActionId, ModelTables, ObsId, StateId, TabularPomdp, Violation};
pub use oracle::{exact_optimal_value, exact_policy_value, OracleSolution, PolicyTree};
pub use trajectory::{trajectory_extend, History, Trajectory};
pub use solvers::{
    certify, plan, plan_with, CertifyReport, Descent, Observer, PlanOutput, PlanResult, SolverConfig, SolverKind, TraceRow,
};
pub use tree::BeliefTree;
