use std::collections::BTreeMap;

use crate::dynamics::{Dynamics, RobotAction};
use crate::grid::CellMask;
use crate::plan::{replay, Plan};
use crate::scenario::{Mode, ScenarioConfig, TxIndex};

use super::{MilpError, MilpInstance, Names, VarKind, TOLERANCE};

/// Variable values keyed by name.
pub type Assignment = BTreeMap<String, f64>;

/// Outcome of a successful solution check.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionReport {
    /// Sum of the exploration variables, equal to the replayed objective.
    pub objective: u64,
    pub plan: Plan,
}

/// Reads `name value` lines; blank lines are skipped.
pub fn parse_assignment(text: &str) -> Result<Assignment, MilpError> {
    let mut out = Assignment::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| MilpError::Assignment { line: i + 1, message };
        let mut it = line.split_whitespace();
        let (Some(name), Some(value), None) = (it.next(), it.next(), it.next()) else {
            return Err(err(format!("expected `name value`, found `{line}`")));
        };
        let value: f64 = value.parse().map_err(|_| err(format!("`{value}` is not a number")))?;
        if out.insert(name.to_string(), value).is_some() {
            return Err(err(format!("`{name}` assigned twice")));
        }
    }
    Ok(out)
}

/// Structural rows are reported before energy rows, so a violation names
/// the most basic rule an assignment breaks.
fn row_priority(name: &str) -> usize {
    const ORDER: [&str; 9] = ["occ_", "init_l", "cs_", "chgloc_", "nochg_", "mob_", "e", "init_b", "out_"];
    ORDER.iter().position(|p| name.starts_with(p)).unwrap_or(ORDER.len())
}

fn is_one(v: f64) -> bool {
    v > 0.5
}

/// Verifies domains and every constraint within [`TOLERANCE`], then decodes
/// occupancy and charging into a plan and replays it; the replayed
/// objective must equal the sum of the exploration variables.
pub fn check_solution(instance: &MilpInstance, config: &ScenarioConfig, assignment: &Assignment) -> Result<SolutionReport, MilpError> {
    if let Some(name) = instance.variables.keys().find(|n| !assignment.contains_key(*n)) {
        return Err(MilpError::MissingVariable(name.clone()));
    }
    if let Some(name) = assignment.keys().find(|n| !instance.variables.contains_key(*n)) {
        return Err(MilpError::UnknownVariable(name.clone()));
    }
    for (name, kind) in &instance.variables {
        let v = assignment[name];
        let ok = match kind {
            VarKind::Binary => v.abs() <= TOLERANCE || (v - 1.0).abs() <= TOLERANCE,
            VarKind::Continuous { upper } => v >= -TOLERANCE && v <= upper + TOLERANCE,
        };
        if !ok {
            return Err(MilpError::Domain { name: name.clone(), value: v });
        }
    }
    let mut rows: Vec<_> = instance.constraints.iter().collect();
    rows.sort_by_key(|c| row_priority(&c.name));
    for c in rows {
        let excess = c.sense.excess(c.lhs(|v| assignment[v]), c.rhs);
        if excess > TOLERANCE {
            return Err(MilpError::Violation { name: c.name.clone(), slack: -excess });
        }
    }

    let d = Dynamics::new(config)?;
    let cells: Vec<_> = config.grid.cells().collect();
    let mut epochs = Vec::with_capacity(d.horizon());
    for t in 1..=d.horizon() {
        let mut row = Vec::with_capacity(d.robots());
        for r in 0..d.robots() {
            let target = *cells
                .iter()
                .find(|&&c| is_one(assignment[&Names::l(r, t, c)]))
                .ok_or_else(|| MilpError::ReplayDisagreement(format!("robot {} has no cell at epoch {t}", r + 1)))?;
            row.push(RobotAction { target, charge: is_one(assignment[&Names::u(r, t)]) });
        }
        epochs.push(row);
    }
    let plan = Plan { digest: config.digest(), mode: config.mode, epochs };
    let outcome = replay(&plan, config).map_err(|e| MilpError::ReplayDisagreement(e.to_string()))?;
    if let Some(v) = outcome.violation {
        return Err(MilpError::ReplayDisagreement(v.to_string()));
    }
    let explored: f64 = instance.objective.iter().map(|(v, c)| c * assignment[v]).sum();
    let objective = explored.round() as u64;
    if objective != outcome.trace.objective {
        return Err(MilpError::ReplayDisagreement(format!(
            "exploration variables sum to {objective}, replay gives {}",
            outcome.trace.objective
        )));
    }
    Ok(SolutionReport { objective, plan })
}

/// The assignment a valid full-horizon plan induces: occupancy and charging
/// from the plan, exploration as the running union of visited cells,
/// batteries from replay and every auxiliary as the product it replaces.
pub fn implied_assignment(config: &ScenarioConfig, plan: &Plan) -> Result<Assignment, MilpError> {
    let outcome = replay(plan, config).map_err(|e| MilpError::ReplayDisagreement(e.to_string()))?;
    if let Some(v) = outcome.violation {
        return Err(MilpError::ReplayDisagreement(v.to_string()));
    }
    if plan.len() != config.horizon_epochs {
        return Err(MilpError::ReplayDisagreement(format!(
            "plan covers {} of {} epochs",
            plan.len(),
            config.horizon_epochs
        )));
    }
    let d = Dynamics::new(config)?;
    let cells: Vec<_> = config.grid.cells().collect();
    let bit = |b: bool| if b { 1.0 } else { 0.0 };
    let mut a = Assignment::new();
    let mut explored = CellMask::empty();
    let mut history = Vec::with_capacity(plan.len());
    for (ti, row) in plan.epochs.iter().enumerate() {
        let t = ti + 1;
        for ra in row {
            explored.insert(d.index(ra.target));
        }
        history.push(explored);
        for (i, &c) in cells.iter().enumerate() {
            a.insert(Names::e(t, c), bit(explored.contains(i)));
        }
        for (r, ra) in row.iter().enumerate() {
            for &c in &cells {
                a.insert(Names::l(r, t, c), bit(c == ra.target));
            }
            a.insert(Names::u(r, t), bit(ra.charge));
        }
    }
    for rec in &outcome.trace.records {
        a.insert(Names::b(rec.robot, rec.epoch), rec.battery_mj as f64);
        if rec.epoch > 1 && d.clamp_charge() {
            a.insert(Names::c(rec.robot, rec.epoch), rec.items.charge as f64);
        }
    }
    for t in 1..plan.len() {
        for r in 0..d.robots() {
            let (now, next) = (plan.epochs[t - 1][r].target, plan.epochs[t][r].target);
            for (i, &from) in cells.iter().enumerate() {
                for &(j, _) in d.moves(i) {
                    a.insert(Names::mv(r, t, from, cells[j]), bit(from == now && cells[j] == next));
                }
            }
            if d.mode() == Mode::Oros {
                let seen = history[t - 1];
                for (i, &c) in cells.iter().enumerate() {
                    a.insert(Names::w_sen(r, t, c), bit(c == next && !seen.contains(i)));
                    if config.options.tx_index == TxIndex::AsPrinted {
                        a.insert(Names::w_tx(r, t, c), bit(c == now && !seen.contains(i)));
                    }
                }
            }
        }
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::encode;
    use crate::solver::solve_exact;

    fn small(mode: Mode) -> ScenarioConfig {
        let mut c = ScenarioConfig::reference(2).with_grid(20.0, 20.0, []).unwrap();
        c.horizon_epochs = 4;
        c.mode = mode;
        c
    }

    #[test]
    fn solved_plans_pass_the_check() {
        for mode in [Mode::Oros, Mode::Slam] {
            let c = small(mode);
            let s = solve_exact(&c).unwrap();
            let m = encode(&c).unwrap();
            let report = check_solution(&m, &c, &implied_assignment(&c, &s.plan).unwrap()).unwrap();
            assert_eq!(report.objective, s.objective);
            assert_eq!(report.plan, s.plan);
        }
    }

    #[test]
    fn charging_and_clamped_plans_pass_the_check() {
        let mut c = small(Mode::Oros);
        c.fleet.b_max_j = 300.0;
        c.options.clamp_charge = true;
        let s = solve_exact(&c).unwrap();
        let m = encode(&c).unwrap();
        check_solution(&m, &c, &implied_assignment(&c, &s.plan).unwrap()).unwrap();
    }

    #[test]
    fn two_chargers_at_once_violate_exclusivity() {
        let c = small(Mode::Oros);
        let s = solve_exact(&c).unwrap();
        let m = encode(&c).unwrap();
        let mut a = implied_assignment(&c, &s.plan).unwrap();
        a.insert(Names::u(0, 1), 1.0);
        a.insert(Names::u(1, 1), 1.0);
        let err = check_solution(&m, &c, &a).unwrap_err();
        assert_eq!(err, MilpError::Violation { name: "cs_t1".into(), slack: -1.0 });
    }

    #[test]
    fn all_zero_violates_occupancy() {
        let c = small(Mode::Slam);
        let m = encode(&c).unwrap();
        let a: Assignment = m.variables.keys().map(|n| (n.clone(), 0.0)).collect();
        assert_eq!(check_solution(&m, &c, &a).unwrap_err(), MilpError::Violation { name: "occ_r1_t1".into(), slack: -1.0 });
        let mut partial = a.clone();
        partial.remove(&Names::u(0, 1));
        assert_eq!(check_solution(&m, &c, &partial).unwrap_err(), MilpError::MissingVariable(Names::u(0, 1)));
    }

    #[test]
    fn assignment_lines() {
        let a = parse_assignment("x 1\n\n  y  -2.5 \n").unwrap();
        assert_eq!(a["x"], 1.0);
        assert_eq!(a["y"], -2.5);
        assert!(parse_assignment("x\n").is_err());
        assert!(parse_assignment("x 1\nx 0\n").is_err());
        assert!(parse_assignment("x one\n").is_err());
    }
}
