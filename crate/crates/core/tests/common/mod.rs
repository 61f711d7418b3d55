#![allow(dead_code)]

use std::collections::BTreeMap;

use robex_core::milp::{MilpInstance, Sense, VarKind};
use robex_core::scenario::ScenarioConfig;
use robex_core::Cell;

/// Tiny test instance on a `cols x rows` grid of 10 m cells.
pub fn micro(cols: u16, rows: u16, robots: usize, horizon: usize, blocked: &[(Cell, Cell)]) -> ScenarioConfig {
    let mut c = ScenarioConfig::reference(robots)
        .with_grid(10.0 * cols as f64, 10.0 * rows as f64, blocked.iter().copied())
        .unwrap();
    c.horizon_epochs = horizon;
    c
}

/// Epoch a variable is decided at, and its rank within that epoch.
/// Auxiliaries that pair epochs `t` and `t + 1` belong to `t + 1`.
fn order_key(name: &str) -> (usize, usize) {
    let t: usize = name
        .split('_')
        .find_map(|p| p.strip_prefix('t').and_then(|d| d.parse().ok()))
        .expect("every variable carries an epoch");
    let class = ["l_", "u_", "e_", "mv_", "w_tx_", "w_sen_", "c_", "b_"].iter().position(|p| name.starts_with(p)).unwrap();
    let epoch = match class {
        3 | 5 => t + 1,
        _ => t,
    };
    (epoch, class)
}

/// Row as (variable index, coefficient) terms, sense and right-hand side.
type Row = (Vec<(usize, f64)>, Sense, f64);
/// Equality row solved for its last variable: other terms, that variable's
/// coefficient and the right-hand side.
type Solved = (Vec<(usize, f64)>, f64, f64);

/// Best objective over every assignment satisfying the instance, found by
/// depth-first enumeration of all binaries in epoch order. Each constraint is
/// checked as soon as its last variable is set; a continuous battery
/// variable is set by the equality row in which it is the last unknown.
/// Returns `None` when no assignment is feasible.
pub fn best_assignment_objective(m: &MilpInstance) -> Option<f64> {
    let mut vars: Vec<(&str, VarKind)> = m.variables.iter().map(|(n, k)| (n.as_str(), *k)).collect();
    vars.sort_by_key(|(n, _)| (order_key(n), n.to_string()));
    let index: BTreeMap<&str, usize> = vars.iter().enumerate().map(|(i, (n, _))| (*n, i)).collect();

    // rows grouped by the position of their last variable
    let mut ready: Vec<Vec<Row>> = vec![Vec::new(); vars.len()];
    let mut solver_row: Vec<Option<Solved>> = vec![None; vars.len()];
    for c in &m.constraints {
        let terms: Vec<(usize, f64)> = c.terms.iter().map(|(v, k)| (index[v.as_str()], *k)).collect();
        let last = terms.iter().map(|t| t.0).max().expect("non-empty row");
        let last_coef = terms.iter().find(|t| t.0 == last).unwrap().1;
        if matches!(vars[last].1, VarKind::Continuous { .. }) && c.sense == Sense::Eq && solver_row[last].is_none() {
            let others = terms.iter().filter(|t| t.0 != last).copied().collect();
            solver_row[last] = Some((others, last_coef, c.rhs));
        } else {
            ready[last].push((terms, c.sense, c.rhs));
        }
    }
    let objective: Vec<(usize, f64)> = m.objective.iter().map(|(v, k)| (index[v.as_str()], *k)).collect();

    struct Search<'a> {
        vars: &'a [(&'a str, VarKind)],
        ready: &'a [Vec<Row>],
        solver_row: &'a [Option<Solved>],
        objective: &'a [(usize, f64)],
        values: Vec<f64>,
        best: Option<f64>,
    }
    impl Search<'_> {
        fn holds(&self, i: usize) -> bool {
            self.ready[i].iter().all(|(terms, sense, rhs)| {
                let lhs: f64 = terms.iter().map(|&(j, k)| k * self.values[j]).sum();
                match sense {
                    Sense::Le => lhs <= rhs + 1e-9,
                    Sense::Ge => lhs >= rhs - 1e-9,
                    Sense::Eq => (lhs - rhs).abs() <= 1e-9,
                }
            })
        }
        fn dfs(&mut self, i: usize) {
            if i == self.vars.len() {
                let v: f64 = self.objective.iter().map(|&(j, k)| k * self.values[j]).sum();
                if self.best.is_none_or(|b| v > b) {
                    self.best = Some(v);
                }
                return;
            }
            let candidates: Vec<f64> = match self.vars[i].1 {
                VarKind::Binary => vec![0.0, 1.0],
                VarKind::Continuous { upper } => {
                    let (others, coef, rhs) = self.solver_row[i].as_ref().expect("continuous variables are determined by a row");
                    let rest: f64 = others.iter().map(|&(j, k)| k * self.values[j]).sum();
                    let v = (rhs - rest) / coef;
                    if v < -1e-9 || v > upper + 1e-9 {
                        return;
                    }
                    vec![v]
                }
            };
            for v in candidates {
                self.values[i] = v;
                if self.holds(i) {
                    self.dfs(i + 1);
                }
            }
        }
    }
    let mut s = Search { vars: &vars, ready: &ready, solver_row: &solver_row, objective: &objective, values: vec![0.0; vars.len()], best: None };
    s.dfs(0);
    s.best
}
