//! Plans, their text format, and the independent replay validator.

use std::fmt::Write as _;

use crate::dynamics::{mj_to_j, Constraint, Dynamics, DynamicsError, EnergyItems, FleetState, JointAction, MilliJoules, RobotAction};
use crate::grid::Cell;
use crate::scenario::{Mode, ScenarioConfig};

/// Per-epoch cell occupancy and charge flags for every robot.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Plan {
    pub digest: String,
    pub mode: Mode,
    /// `epochs[t][r]` is robot `r` at epoch `t + 1`.
    pub epochs: Vec<Vec<RobotAction>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlanError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("plan file is missing the `# {0}=` header")]
    MissingHeader(&'static str),
    #[error("plan rows are incomplete: epoch {epoch} robot {robot} missing")]
    Incomplete { epoch: usize, robot: usize },
}

impl Plan {
    /// Builds a plan from a start state and a sequence of joint actions.
    pub fn from_actions(config: &ScenarioConfig, actions: &[JointAction]) -> Self {
        let first = vec![RobotAction { target: config.fleet.start_cell, charge: false }; config.fleet.count];
        let mut epochs = Vec::with_capacity(actions.len() + 1);
        epochs.push(first);
        epochs.extend(actions.iter().map(|a| a.robots.clone()));
        Plan { digest: config.digest(), mode: config.mode, epochs }
    }

    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    pub fn robots(&self) -> usize {
        self.epochs.first().map_or(0, Vec::len)
    }

    /// Cell sequence of one robot.
    pub fn cells(&self, robot: usize) -> Vec<Cell> {
        self.epochs.iter().map(|e| e[robot].target).collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("# digest={}\n# mode={}\n", self.digest, self.mode);
        for (t, row) in self.epochs.iter().enumerate() {
            for (r, ra) in row.iter().enumerate() {
                let _ = writeln!(s, "{},{},{},{},{}", t + 1, r + 1, ra.target.a, ra.target.b, u8::from(ra.charge));
            }
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, PlanError> {
        let mut digest = None;
        let mut mode = None;
        let mut rows: Vec<(usize, usize, RobotAction)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.trim();
            if content.is_empty() {
                continue;
            }
            if let Some(comment) = content.strip_prefix('#') {
                let comment = comment.trim();
                if let Some(v) = comment.strip_prefix("digest=") {
                    digest = Some(v.trim().to_string());
                } else if let Some(v) = comment.strip_prefix("mode=") {
                    mode = Some(v.parse::<Mode>().map_err(|message| PlanError::Syntax { line, message })?);
                }
                continue;
            }
            let syntax = |message: String| PlanError::Syntax { line, message };
            let fields: Vec<&str> = content.split(',').map(str::trim).collect();
            if fields.len() != 5 {
                return Err(syntax(format!("expected `epoch,robot,a,b,charge`, found `{content}`")));
            }
            let num = |s: &str| s.parse::<usize>().map_err(|_| syntax(format!("`{s}` is not a non-negative integer")));
            let (epoch, robot, a, b) = (num(fields[0])?, num(fields[1])?, num(fields[2])?, num(fields[3])?);
            let charge = match fields[4] {
                "0" => false,
                "1" => true,
                other => return Err(syntax(format!("charge flag must be 0 or 1, found `{other}`"))),
            };
            if epoch == 0 || robot == 0 {
                return Err(syntax("epoch and robot indices are 1-based".into()));
            }
            if a > u16::MAX as usize || b > u16::MAX as usize {
                return Err(syntax("cell index out of range".into()));
            }
            rows.push((epoch, robot, RobotAction { target: Cell::new(a as u16, b as u16), charge }));
        }
        let digest = digest.ok_or(PlanError::MissingHeader("digest"))?;
        let mode = mode.ok_or(PlanError::MissingHeader("mode"))?;
        let epochs_n = rows.iter().map(|r| r.0).max().unwrap_or(0);
        let robots_n = rows.iter().map(|r| r.1).max().unwrap_or(0);
        let mut grid: Vec<Vec<Option<RobotAction>>> = vec![vec![None; robots_n]; epochs_n];
        for (e, r, ra) in rows {
            grid[e - 1][r - 1] = Some(ra);
        }
        let mut epochs = Vec::with_capacity(epochs_n);
        for (t, row) in grid.into_iter().enumerate() {
            let mut out = Vec::with_capacity(robots_n);
            for (r, ra) in row.into_iter().enumerate() {
                out.push(ra.ok_or(PlanError::Incomplete { epoch: t + 1, robot: r + 1 })?);
            }
            epochs.push(out);
        }
        Ok(Plan { digest, mode, epochs })
    }
}

/// One robot at one epoch of a replay.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub epoch: usize,
    /// 0-based robot index.
    pub robot: usize,
    pub cell: Cell,
    pub battery_mj: MilliJoules,
    pub charging: bool,
    /// Energy spent reaching this epoch; zero at epoch 1.
    pub items: EnergyItems,
    pub explored_total: usize,
}

/// Epoch-by-epoch record of a replayed plan.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReplayTrace {
    pub records: Vec<TraceRecord>,
    /// Explored-cell count at each replayed epoch.
    pub explored_counts: Vec<usize>,
    /// Sum of the explored counts.
    pub objective: u64,
    pub final_batteries_mj: Vec<MilliJoules>,
}

impl ReplayTrace {
    pub fn epochs(&self) -> usize {
        self.explored_counts.len()
    }

    pub fn final_explored(&self) -> usize {
        self.explored_counts.last().copied().unwrap_or(0)
    }

    /// First epoch at which the final explored count is reached.
    pub fn completion_epoch(&self) -> usize {
        let last = self.final_explored();
        self.explored_counts.iter().position(|&c| c == last).map_or(0, |i| i + 1)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,robot,a,b,battery_j,charging,move_j,rx_j,tx_j,sen_j,charge_j,explored_total\n");
        for r in &self.records {
            let _ = writeln!(
                s,
                "{},{},{},{},{:.2},{},{:.2},{:.2},{:.2},{:.2},{:.2},{}",
                r.epoch,
                r.robot + 1,
                r.cell.a,
                r.cell.b,
                mj_to_j(r.battery_mj),
                u8::from(r.charging),
                mj_to_j(r.items.moving),
                mj_to_j(r.items.rx),
                mj_to_j(r.items.tx),
                mj_to_j(r.items.sen),
                mj_to_j(r.items.charge),
                r.explored_total
            );
        }
        s
    }
}

/// First constraint breached while replaying.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Epoch whose occupancy or flags break the rule.
    pub epoch: usize,
    pub robot: Option<usize>,
    pub constraint: Constraint,
    pub battery_mj: Option<MilliJoules>,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "epoch {}: {}", self.epoch, self.constraint)?;
        if let Some(r) = self.robot {
            write!(f, " (robot {})", r + 1)?;
        }
        if let Some(b) = self.battery_mj {
            write!(f, " battery {:.3} J", mj_to_j(b))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayOutcome {
    /// Trace of every epoch before the first violation.
    pub trace: ReplayTrace,
    pub violation: Option<Violation>,
}

impl ReplayOutcome {
    pub fn is_valid(&self) -> bool {
        self.violation.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReplayError {
    #[error("plan digest {found} does not match scenario digest {expected}")]
    DigestMismatch { expected: String, found: String },
    #[error("plan mode {found} does not match scenario mode {expected}")]
    ModeMismatch { expected: Mode, found: Mode },
    #[error("plan has {found} epochs; scenario horizon is {horizon}")]
    Length { found: usize, horizon: usize },
    #[error("epoch {epoch} lists {found} robots; scenario has {expected}")]
    RobotCount { epoch: usize, found: usize, expected: usize },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

fn record_epoch(trace: &mut ReplayTrace, state: &FleetState, items: &[EnergyItems]) {
    let explored = state.explored_count();
    for r in 0..state.positions.len() {
        trace.records.push(TraceRecord {
            epoch: state.epoch,
            robot: r,
            cell: state.positions[r],
            battery_mj: state.batteries_mj[r],
            charging: state.charging[r],
            items: items.get(r).copied().unwrap_or_default(),
            explored_total: explored,
        });
    }
    trace.explored_counts.push(explored);
    trace.objective += explored as u64;
    trace.final_batteries_mj = state.batteries_mj.clone();
}

/// Re-simulates a plan from the initial state using only the transition
/// function. Plans shorter than the horizon are replayed as prefixes.
pub fn replay(plan: &Plan, config: &ScenarioConfig) -> Result<ReplayOutcome, ReplayError> {
    let expected = config.digest();
    if plan.digest != expected {
        return Err(ReplayError::DigestMismatch { expected, found: plan.digest.clone() });
    }
    if plan.mode != config.mode {
        return Err(ReplayError::ModeMismatch { expected: config.mode, found: plan.mode });
    }
    if plan.is_empty() || plan.len() > config.horizon_epochs {
        return Err(ReplayError::Length { found: plan.len(), horizon: config.horizon_epochs });
    }
    for (t, row) in plan.epochs.iter().enumerate() {
        if row.len() != config.fleet.count {
            return Err(ReplayError::RobotCount { epoch: t + 1, found: row.len(), expected: config.fleet.count });
        }
    }
    let dynamics = Dynamics::new(config)?;
    let mut trace = ReplayTrace::default();
    let mut state = dynamics.initial_state();

    let first = JointAction { robots: plan.epochs[0].clone() };
    for (r, ra) in first.robots.iter().enumerate() {
        if ra.target != config.fleet.start_cell {
            let violation = Violation { epoch: 1, robot: Some(r), constraint: Constraint::StartPosition, battery_mj: None };
            return Ok(ReplayOutcome { trace, violation: Some(violation) });
        }
    }
    if let Err(fault) = dynamics.check_initial_flags(&first) {
        let violation = Violation { epoch: 1, robot: fault.robot, constraint: fault.constraint, battery_mj: None };
        return Ok(ReplayOutcome { trace, violation: Some(violation) });
    }
    state.charging = first.robots.iter().map(|r| r.charge).collect();
    record_epoch(&mut trace, &state, &[]);

    for (t, row) in plan.epochs.iter().enumerate().skip(1) {
        let action = JointAction { robots: row.clone() };
        match dynamics.transition(&state, &action) {
            Ok(next) => {
                state = next.state;
                record_epoch(&mut trace, &state, &next.items);
            }
            Err(fault) => {
                let violation = Violation {
                    epoch: t + 1,
                    robot: fault.robot,
                    constraint: fault.constraint,
                    battery_mj: fault.battery_mj,
                };
                return Ok(ReplayOutcome { trace, violation: Some(violation) });
            }
        }
    }
    Ok(ReplayOutcome { trace, violation: None })
}
