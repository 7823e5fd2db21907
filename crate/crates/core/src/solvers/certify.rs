use std::fmt::Write as _;

use super::PlanResult;
use crate::error::CertificationFailure;
use crate::oracle::OracleSolution;
use crate::tree::BeliefTree;

/// Absolute slack for comparisons against oracle values.
pub const CERTIFY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct CertifyReport {
    pub oracle_value: f64,
    pub oracle_action: usize,
    /// `V* - L`; non-negative when the lower bound holds.
    pub lower_margin: f64,
    /// `U - V*`; non-negative when the upper bound holds.
    pub upper_margin: f64,
    /// `V* - Q*(b, chosen)`.
    pub chosen_regret: f64,
    pub certified: bool,
}

impl std::fmt::Display for CertifyReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "oracle_value   {:.12}", self.oracle_value)?;
        writeln!(f, "oracle_action  {}", self.oracle_action)?;
        writeln!(f, "lower_margin   {:.3e}", self.lower_margin)?;
        writeln!(f, "upper_margin   {:.3e}", self.upper_margin)?;
        writeln!(f, "chosen_regret  {:.3e}", self.chosen_regret)?;
        write!(f, "certified      {}", self.certified)
    }
}

/// Checks a plan against the oracle: the root interval must contain `V*`
/// and every action interval its `Q*`; a certified plan must choose an
/// optimal action.
pub fn certify(
    result: &PlanResult,
    oracle: &OracleSolution,
    tree: Option<&BeliefTree>,
) -> Result<CertifyReport, CertificationFailure> {
    let v = oracle.value;
    let iv = result.root_interval;
    let report = CertifyReport {
        oracle_value: v,
        oracle_action: oracle.action,
        lower_margin: v - iv.lower,
        upper_margin: iv.upper - v,
        chosen_regret: v - oracle.q_values[result.chosen_action],
        certified: result.certified_optimal,
    };
    let mut problems = Vec::new();
    if report.lower_margin < -CERTIFY_TOL || report.upper_margin < -CERTIFY_TOL {
        problems.push(format!("root interval [{}, {}] misses V* = {v}", iv.lower, iv.upper));
    }
    for &(a, aiv) in &result.action_intervals {
        if !aiv.contains(oracle.q_values[a], CERTIFY_TOL) {
            problems.push(format!("action {a} interval [{}, {}] misses Q* = {}", aiv.lower, aiv.upper, oracle.q_values[a]));
        }
    }
    if result.certified_optimal && report.chosen_regret > CERTIFY_TOL {
        problems.push(format!("certified action {} has regret {}", result.chosen_action, report.chosen_regret));
    }
    if problems.is_empty() {
        return Ok(report);
    }
    let mut trace = String::new();
    let _ = writeln!(trace, "{report}");
    for &(a, aiv) in &result.action_intervals {
        let _ = writeln!(trace, "action {a}: [{:.12}, {:.12}] Q* = {:.12}", aiv.lower, aiv.upper, oracle.q_values[a]);
    }
    if let Some(tree) = tree {
        trace.push_str(&tree.dump());
    }
    Err(CertificationFailure { reason: problems.join("; "), trace })
}
