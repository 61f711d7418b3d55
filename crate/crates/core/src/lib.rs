//! Energy-aware multi-robot exploration: scenario model, transition system,
//! exact and greedy planners, MILP export and experiment sweeps.

pub mod dynamics;
pub mod experiments;
pub mod grid;
pub mod physics;
pub mod plan;
pub mod scenario;
pub mod milp;
pub mod solver;

/// Energy parameters in `f64`.
pub type EnergyModel = physics::EnergyModel<f64>;
/// Radio link model in `f64`.
pub type RadioModel = physics::RadioModel<f64>;
/// Transmit-table row in `f64`.
pub type TxRow = physics::TxRow<f64>;

pub use dynamics::{Constraint, Dynamics, FleetState, JointAction, MilliJoules, RobotAction};
pub use grid::{Cell, CellMask, GridMap};
pub use plan::{replay, Plan, ReplayOutcome, ReplayTrace};
pub use scenario::{Mode, ScenarioConfig, TxIndex};
pub use solver::{SolveOptions, SolveResult, SolveStatus};
