//! Planners over the transition system: an exact branch-and-bound search,
//! a greedy frontier heuristic and a brute-force oracle for tiny instances.
//!
//! Every planner returns the plan together with its replay, so reported
//! objectives are always the ones the independent simulator computes.
//! When no plan survives the whole horizon, planners fall back to the longest
//! feasible horizon and flag the result.

mod bound;
mod compiled;
mod exact;
mod greedy;
mod oracle;

use std::fmt;
use std::time::Duration;

pub use bound::{energy_bound, upper_bound};
pub use exact::{solve_exact, solve_exact_with};
pub use greedy::solve_greedy;
pub use oracle::{brute_force_oracle, ORACLE_LIMIT};

use crate::dynamics::{DynamicsError, FleetState, JointAction, MilliJoules};
use crate::plan::{replay, Plan, ReplayError, ReplayTrace};
use crate::scenario::ScenarioConfig;

/// A search node: a state, the objective accumulated up to and including its
/// epoch, and the action that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchNode {
    pub state: FleetState,
    pub cumulative: u64,
    pub parent_action: Option<JointAction>,
}

impl SearchNode {
    pub fn root(state: FleetState) -> Self {
        let cumulative = state.explored_count() as u64;
        SearchNode { state, cumulative, parent_action: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    /// Optimality certified by exhaustive (pruned) search.
    Optimal,
    /// The node budget ran out; the plan is the best incumbent found.
    BudgetExceeded,
    /// Produced by the greedy heuristic; no optimality claim.
    Heuristic,
}

impl SolveStatus {
    pub fn name(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::BudgetExceeded => "budget-exceeded",
            SolveStatus::Heuristic => "heuristic",
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub nodes: u64,
    pub bound_prunes: u64,
    pub dominance_prunes: u64,
    pub dead_prunes: u64,
    pub wall_time: Duration,
}

impl SolverStats {
    /// Flat `key=value` block, one pair per line.
    pub fn to_key_values(&self) -> String {
        format!(
            "nodes={}\nbound_prunes={}\ndominance_prunes={}\ndead_prunes={}\nwall_ms={}\n",
            self.nodes,
            self.bound_prunes,
            self.dominance_prunes,
            self.dead_prunes,
            self.wall_time.as_millis()
        )
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub plan: Plan,
    pub trace: ReplayTrace,
    pub objective: u64,
    pub explored_fraction: f64,
    pub completion_epoch: usize,
    pub status: SolveStatus,
    /// Number of epochs the plan covers; below the scenario horizon when no
    /// plan keeps every battery within bounds for the whole horizon.
    pub feasible_epochs: usize,
    pub stats: SolverStats,
}

impl SolveResult {
    pub fn is_certified(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn reached_horizon(&self, config: &ScenarioConfig) -> bool {
        self.feasible_epochs == config.horizon_epochs
    }

    pub fn final_batteries_j(&self) -> Vec<f64> {
        self.trace.final_batteries_mj.iter().map(|&mj| crate::dynamics::mj_to_j(mj)).collect()
    }

    pub fn final_batteries_mj(&self) -> &[MilliJoules] {
        &self.trace.final_batteries_mj
    }

    /// Replays `actions` and packages the outcome.
    pub(crate) fn from_actions(
        config: &ScenarioConfig,
        actions: &[JointAction],
        status: SolveStatus,
        stats: SolverStats,
    ) -> Result<Self, SolveError> {
        let plan = Plan::from_actions(config, actions);
        let outcome = replay(&plan, config)?;
        if let Some(v) = outcome.violation {
            return Err(SolveError::InvalidPlan(v.to_string()));
        }
        let trace = outcome.trace;
        let final_count = trace.final_explored();
        Ok(SolveResult {
            objective: trace.objective,
            explored_fraction: final_count as f64 / config.cell_count() as f64,
            completion_epoch: trace.completion_epoch(),
            feasible_epochs: plan.len(),
            plan,
            trace,
            status,
            stats,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveOptions {
    /// Maximum number of expanded search nodes.
    pub node_budget: u64,
    /// Worker threads for the value search; 0 means one per core.
    pub workers: usize,
    /// Cap on stored dominance entries, bounding memory.
    pub max_table_entries: usize,
}

pub const DEFAULT_NODE_BUDGET: u64 = 100_000_000;

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { node_budget: DEFAULT_NODE_BUDGET, workers: 1, max_table_entries: 8_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolveError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("instance too large for exhaustive enumeration: about {estimate:.3e} plans (limit {limit:.0e})")]
    InstanceTooLarge { estimate: f64, limit: f64 },
    #[error("planner produced an invalid plan: {0}")]
    InvalidPlan(String),
    #[error("replay failed: {0}")]
    Replay(String),
}

impl From<ReplayError> for SolveError {
    fn from(e: ReplayError) -> Self {
        SolveError::Replay(e.to_string())
    }
}

/// The scenario with its horizon shortened to `epochs`.
pub(crate) fn truncated(config: &ScenarioConfig, epochs: usize) -> ScenarioConfig {
    ScenarioConfig { horizon_epochs: epochs, ..config.clone() }
}
