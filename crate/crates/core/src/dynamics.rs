//! The transition system: joint actions, feasibility checks, battery
//! recursions for both modes and exploration bookkeeping.
//!
//! All energy bookkeeping is done in integer millijoules. Every constant of
//! the scenario is converted once, when a [`Dynamics`] is built, so that
//! battery comparisons are exact.

use std::fmt;

use crate::grid::{Cell, CellMask};
use crate::scenario::{Mode, ScenarioConfig, TxIndex};

/// Energy in integer millijoules.
pub type MilliJoules = i64;

/// Rounds joules to the nearest millijoule.
pub fn to_mj(joules: f64) -> MilliJoules {
    (joules * 1000.0).round() as MilliJoules
}

pub fn mj_to_j(mj: MilliJoules) -> f64 {
    mj as f64 / 1000.0
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DynamicsError {
    #[error("grid has {0} cells; simulation supports at most 128")]
    GridTooLarge(usize),
}

/// Which rule a transition broke.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Constraint {
    /// Robots must begin at the start cell.
    StartPosition,
    /// Moves are limited to the cell itself or one of its eight neighbours.
    Mobility,
    /// Moves may not cross a blocked edge.
    Obstacle,
    /// At most one robot charges per epoch.
    ChargerExclusivity,
    /// Charging happens only on the charging-station cell.
    ChargeLocation,
    /// The scenario has charging switched off.
    ChargingDisabled,
    /// Battery fell below zero.
    BatteryLower,
    /// Battery rose above capacity.
    BatteryUpper,
    /// Uplink energy is undefined where the SNR is below the table.
    LinkOutage,
    /// Malformed action: wrong robot count or horizon already reached.
    Shape,
}

impl Constraint {
    pub fn name(self) -> &'static str {
        match self {
            Constraint::StartPosition => "start-position",
            Constraint::Mobility => "mobility",
            Constraint::Obstacle => "obstacle",
            Constraint::ChargerExclusivity => "charger-exclusivity",
            Constraint::ChargeLocation => "charge-location",
            Constraint::ChargingDisabled => "charging-disabled",
            Constraint::BatteryLower => "battery-lower-bound",
            Constraint::BatteryUpper => "battery-upper-bound",
            Constraint::LinkOutage => "link-outage",
            Constraint::Shape => "action-shape",
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A transition that cannot be taken from the given state.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{constraint} violated{}", robot.map(|r| format!(" by robot {}", r + 1)).unwrap_or_default())]
pub struct StepFault {
    /// 0-based robot index, when the fault belongs to one robot.
    pub robot: Option<usize>,
    pub constraint: Constraint,
    /// Offending battery level for battery-bound faults.
    pub battery_mj: Option<MilliJoules>,
}

impl StepFault {
    fn robot(robot: usize, constraint: Constraint) -> Self {
        Self { robot: Some(robot), constraint, battery_mj: None }
    }
}

/// Per-robot energy line items of one transition, in millijoules. All are
/// non-negative; `charge` is a gain, the others are costs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EnergyItems {
    pub moving: MilliJoules,
    pub rx: MilliJoules,
    pub tx: MilliJoules,
    pub sen: MilliJoules,
    pub charge: MilliJoules,
}

impl EnergyItems {
    pub fn net(&self) -> MilliJoules {
        self.charge - self.moving - self.rx - self.tx - self.sen
    }
}

/// Joint robot state at one epoch.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FleetState {
    /// 1-based epoch index.
    pub epoch: usize,
    pub positions: Vec<Cell>,
    pub batteries_mj: Vec<MilliJoules>,
    pub explored: CellMask,
    pub charging: Vec<bool>,
}

impl FleetState {
    pub fn explored_count(&self) -> usize {
        self.explored.count()
    }

    pub fn battery_j(&self, robot: usize) -> f64 {
        mj_to_j(self.batteries_mj[robot])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RobotAction {
    pub target: Cell,
    pub charge: bool,
}

/// One target cell and charge request per robot.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JointAction {
    pub robots: Vec<RobotAction>,
}

/// A successful transition with its per-robot energy breakdown.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: FleetState,
    pub items: Vec<EnergyItems>,
}

/// Scenario compiled into integer-millijoule lookup tables.
#[derive(Debug, Clone)]
pub struct Dynamics {
    config: ScenarioConfig,
    start: usize,
    cs: usize,
    b_max: MilliJoules,
    charge_gain: MilliJoules,
    rx: MilliJoules,
    sen: MilliJoules,
    tx: Vec<Option<MilliJoules>>,
    /// Reachable targets per cell in row-major order, with the epoch's
    /// locomotion energy. Includes the cell itself.
    moves: Vec<Vec<(usize, MilliJoules)>>,
}

impl Dynamics {
    pub fn new(config: &ScenarioConfig) -> Result<Self, DynamicsError> {
        let grid = &config.grid;
        let n = grid.cell_count();
        if n > CellMask::CAPACITY {
            return Err(DynamicsError::GridTooLarge(n));
        }
        let moves = grid
            .cells()
            .map(|from| {
                grid.moves_from(from)
                    .into_iter()
                    .map(|to| {
                        let joules = config.move_energy(from, to).expect("moves_from yields neighbours");
                        (grid.index(to), to_mj(joules))
                    })
                    .collect()
            })
            .collect();
        let tx = grid.cells().map(|c| config.tx_energy(c).ok().map(to_mj)).collect();
        let dt = config.energy.delta_t_s;
        Ok(Dynamics {
            start: grid.index(config.fleet.start_cell),
            cs: grid.index(config.stations.cs_cell),
            b_max: to_mj(config.fleet.b_max_j),
            charge_gain: to_mj(config.stations.charge_rate_j_per_s * dt),
            rx: to_mj(config.energy.rx_energy_j()),
            sen: to_mj(config.energy.sen_energy_j()),
            tx,
            moves,
            config: config.clone(),
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn robots(&self) -> usize {
        self.config.fleet.count
    }

    pub fn horizon(&self) -> usize {
        self.config.horizon_epochs
    }

    pub fn mode(&self) -> Mode {
        self.config.mode
    }

    pub fn cell_count(&self) -> usize {
        self.config.grid.cell_count()
    }

    pub fn index(&self, cell: Cell) -> usize {
        self.config.grid.index(cell)
    }

    pub fn cell(&self, index: usize) -> Cell {
        self.config.grid.cell_at(index)
    }

    pub fn start_index(&self) -> usize {
        self.start
    }

    pub fn cs_index(&self) -> usize {
        self.cs
    }

    pub fn b_max_mj(&self) -> MilliJoules {
        self.b_max
    }

    pub fn charge_gain_mj(&self) -> MilliJoules {
        self.charge_gain
    }

    pub fn rx_mj(&self) -> MilliJoules {
        self.rx
    }

    pub fn sen_mj(&self) -> MilliJoules {
        self.sen
    }

    pub fn charging_enabled(&self) -> bool {
        self.config.stations.charging_enabled
    }

    pub fn clamp_charge(&self) -> bool {
        self.config.options.clamp_charge
    }

    /// Uplink energy at a cell, `None` under link outage.
    pub fn tx_mj(&self, cell: usize) -> Option<MilliJoules> {
        self.tx[cell]
    }

    /// Targets reachable from `cell` (itself included) with their
    /// locomotion energy, row-major.
    pub fn moves(&self, cell: usize) -> &[(usize, MilliJoules)] {
        &self.moves[cell]
    }

    pub fn move_mj(&self, from: usize, to: usize) -> Option<MilliJoules> {
        self.moves[from].iter().find(|(t, _)| *t == to).map(|&(_, e)| e)
    }

    pub fn initial_state(&self) -> FleetState {
        let r = self.robots();
        FleetState {
            epoch: 1,
            positions: vec![self.config.fleet.start_cell; r],
            batteries_mj: vec![self.b_max; r],
            explored: CellMask::single(self.start),
            charging: vec![false; r],
        }
    }

    /// Energy items of one robot moving `from -> to` with charge flag
    /// `charge`, given the explored mask before the move. Does not check
    /// battery bounds.
    pub fn robot_items(
        &self,
        from: usize,
        to: usize,
        move_mj: MilliJoules,
        charge: bool,
        explored: CellMask,
        battery: MilliJoules,
    ) -> Result<EnergyItems, Constraint> {
        let mut items = EnergyItems { moving: move_mj, ..EnergyItems::default() };
        if charge {
            items.charge = if self.clamp_charge() {
                self.charge_gain.min((self.b_max - battery).max(0))
            } else {
                self.charge_gain
            };
        }
        let tx_at = |cell: usize| self.tx[cell].ok_or(Constraint::LinkOutage);
        match self.mode() {
            Mode::Oros => {
                if !charge {
                    items.rx = self.rx;
                }
                let entering_new = !explored.contains(to);
                if entering_new {
                    items.sen = self.sen;
                }
                match self.config.options.tx_index {
                    TxIndex::AsPrinted => {
                        if !explored.contains(from) {
                            items.tx = tx_at(from)?;
                        }
                    }
                    TxIndex::NewCell => {
                        if entering_new {
                            items.tx = tx_at(to)?;
                        }
                    }
                }
            }
            Mode::Slam => {
                if !charge {
                    items.rx = self.rx;
                    items.sen = self.sen;
                    items.tx = tx_at(to)?;
                }
            }
        }
        Ok(items)
    }

    /// Battery after one robot's move, or the violated bound.
    pub fn robot_step(
        &self,
        from: usize,
        to: usize,
        move_mj: MilliJoules,
        charge: bool,
        explored: CellMask,
        battery: MilliJoules,
    ) -> Result<(MilliJoules, EnergyItems), Constraint> {
        let items = self.robot_items(from, to, move_mj, charge, explored, battery)?;
        let next = battery + items.net();
        if next < 0 {
            Err(Constraint::BatteryLower)
        } else if next > self.b_max {
            Err(Constraint::BatteryUpper)
        } else {
            Ok((next, items))
        }
    }

    /// Per-robot options from `cell` in canonical order: targets row-major,
    /// and for each target `charge = false` before `charge = true`.
    pub fn robot_options(&self, cell: usize) -> impl Iterator<Item = (usize, MilliJoules, bool)> + '_ {
        let charging = self.charging_enabled();
        self.moves[cell].iter().flat_map(move |&(to, e)| {
            let with_charge = charging && to == self.cs;
            std::iter::once((to, e, false)).chain(with_charge.then_some((to, e, true)))
        })
    }

    /// Every structurally valid joint action from `state`, robot-major in
    /// canonical order, with at most one charge request.
    pub fn enumerate_actions(&self, state: &FleetState) -> Vec<JointAction> {
        if state.epoch >= self.horizon() {
            return Vec::new();
        }
        let per_robot: Vec<Vec<RobotAction>> = state
            .positions
            .iter()
            .map(|&p| {
                self.robot_options(self.index(p))
                    .map(|(to, _, charge)| RobotAction { target: self.cell(to), charge })
                    .collect()
            })
            .collect();
        let mut out = Vec::new();
        let mut current = Vec::with_capacity(per_robot.len());
        fn rec(per_robot: &[Vec<RobotAction>], charged: bool, current: &mut Vec<RobotAction>, out: &mut Vec<JointAction>) {
            let Some((first, rest)) = per_robot.split_first() else {
                out.push(JointAction { robots: current.clone() });
                return;
            };
            for &opt in first {
                if opt.charge && charged {
                    continue;
                }
                current.push(opt);
                rec(rest, charged || opt.charge, current, out);
                current.pop();
            }
        }
        rec(&per_robot, false, &mut current, &mut out);
        out
    }

    /// Structural checks shared by `transition` and the epoch-1 check of
    /// replay: grid bounds, adjacency, obstacles and charging rules.
    fn check_structure(&self, from: &[Cell], action: &JointAction) -> Result<(), StepFault> {
        let grid = &self.config.grid;
        if action.robots.len() != from.len() {
            return Err(StepFault { robot: None, constraint: Constraint::Shape, battery_mj: None });
        }
        for (r, (ra, &p)) in action.robots.iter().zip(from).enumerate() {
            if !grid.contains(ra.target) || !p.is_adjacent_or_same(ra.target) {
                return Err(StepFault::robot(r, Constraint::Mobility));
            }
            if p != ra.target && grid.is_blocked(p, ra.target) {
                return Err(StepFault::robot(r, Constraint::Obstacle));
            }
        }
        self.check_charging(action)
    }

    fn check_charging(&self, action: &JointAction) -> Result<(), StepFault> {
        let mut charger = None;
        for (r, ra) in action.robots.iter().enumerate() {
            if !ra.charge {
                continue;
            }
            if !self.charging_enabled() {
                return Err(StepFault::robot(r, Constraint::ChargingDisabled));
            }
            if ra.target != self.config.stations.cs_cell {
                return Err(StepFault::robot(r, Constraint::ChargeLocation));
            }
            if charger.replace(r).is_some() {
                return Err(StepFault::robot(r, Constraint::ChargerExclusivity));
            }
        }
        Ok(())
    }

    /// Validates charge flags present at the first epoch, where no energy
    /// changes hands.
    pub fn check_initial_flags(&self, action: &JointAction) -> Result<(), StepFault> {
        self.check_charging(action)
    }

    /// Applies a joint action, returning the successor with energy items.
    pub fn transition(&self, state: &FleetState, action: &JointAction) -> Result<Transition, StepFault> {
        if state.epoch >= self.horizon() {
            return Err(StepFault { robot: None, constraint: Constraint::Shape, battery_mj: None });
        }
        self.check_structure(&state.positions, action)?;
        let mut next = FleetState {
            epoch: state.epoch + 1,
            positions: Vec::with_capacity(action.robots.len()),
            batteries_mj: Vec::with_capacity(action.robots.len()),
            explored: state.explored,
            charging: Vec::with_capacity(action.robots.len()),
        };
        let mut items = Vec::with_capacity(action.robots.len());
        for (r, ra) in action.robots.iter().enumerate() {
            let from = self.index(state.positions[r]);
            let to = self.index(ra.target);
            let move_mj = self.move_mj(from, to).expect("adjacency checked");
            let battery = state.batteries_mj[r];
            let item = self
                .robot_items(from, to, move_mj, ra.charge, state.explored, battery)
                .map_err(|c| StepFault::robot(r, c))?;
            let b = battery + item.net();
            if b < 0 || b > self.b_max {
                let constraint = if b < 0 { Constraint::BatteryLower } else { Constraint::BatteryUpper };
                return Err(StepFault { robot: Some(r), constraint, battery_mj: Some(b) });
            }
            next.positions.push(ra.target);
            next.batteries_mj.push(b);
            next.charging.push(ra.charge);
            next.explored.insert(to);
            items.push(item);
        }
        Ok(Transition { state: next, items })
    }

    pub fn step(&self, state: &FleetState, action: &JointAction) -> Result<FleetState, StepFault> {
        self.transition(state, action).map(|t| t.state)
    }
}

/// Initial fleet state of a scenario.
pub fn initial_state(config: &ScenarioConfig) -> Result<FleetState, DynamicsError> {
    Ok(Dynamics::new(config)?.initial_state())
}

pub fn enumerate_actions(state: &FleetState, config: &ScenarioConfig) -> Result<Vec<JointAction>, DynamicsError> {
    Ok(Dynamics::new(config)?.enumerate_actions(state))
}
