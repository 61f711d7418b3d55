//! Exhaustive enumeration over the public transition interface, used to
//! cross-check the exact search on tiny instances.

use std::time::Instant;

use crate::dynamics::{Dynamics, FleetState, JointAction};
use crate::scenario::ScenarioConfig;

use super::{SolveError, SolveResult, SolveStatus, SolverStats};

/// Largest number of candidate plans the oracle will enumerate.
pub const ORACLE_LIMIT: f64 = 1e7;

/// Enumerates every joint plan in canonical order and keeps the first one
/// with the longest feasible horizon and, among those, the largest
/// objective. Refuses instances whose plan count may exceed
/// [`ORACLE_LIMIT`].
pub fn brute_force_oracle(config: &ScenarioConfig) -> Result<SolveResult, SolveError> {
    let started = Instant::now();
    let d = Dynamics::new(config)?;
    let per_robot = (0..d.cell_count()).map(|c| d.robot_options(c).count()).max().unwrap_or(1) as f64;
    let estimate = per_robot.powi((d.robots() * (d.horizon() - 1)) as i32);
    if estimate > ORACLE_LIMIT {
        return Err(SolveError::InstanceTooLarge { estimate, limit: ORACLE_LIMIT });
    }
    let mut search = Oracle { d: &d, best: (0, 0), best_path: Vec::new(), path: Vec::new(), nodes: 0 };
    let root = d.initial_state();
    let value = root.explored_count() as u64;
    search.visit(&root, value);
    let stats = SolverStats { nodes: search.nodes, wall_time: started.elapsed(), ..SolverStats::default() };
    SolveResult::from_actions(config, &search.best_path, SolveStatus::Optimal, stats)
}

struct Oracle<'a> {
    d: &'a Dynamics,
    /// (epochs reached, objective) of the best plan so far.
    best: (usize, u64),
    best_path: Vec<JointAction>,
    path: Vec<JointAction>,
    nodes: u64,
}

impl Oracle<'_> {
    fn visit(&mut self, state: &FleetState, value: u64) {
        self.nodes += 1;
        if (state.epoch, value) > self.best {
            self.best = (state.epoch, value);
            self.best_path = self.path.clone();
        }
        for action in self.d.enumerate_actions(state) {
            if let Ok(next) = self.d.step(state, &action) {
                let v = value + next.explored_count() as u64;
                self.path.push(action);
                self.visit(&next, v);
                self.path.pop();
            }
        }
    }
}
