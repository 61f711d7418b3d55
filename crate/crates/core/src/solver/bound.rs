//! Admissible upper bounds on the objective reachable from a node.
//!
//! The counting bound assumes every robot reveals one new cell per remaining
//! epoch. The energy bound additionally charges every revealed cell its
//! cheapest revealing cost (the cheapest unexplored cells first), every other
//! epoch the cheapest idle cost, and credits at most one charging robot per
//! epoch; it also detects nodes from which some robot cannot survive to the
//! horizon.

use smallvec::SmallVec;

use crate::dynamics::{Dynamics, DynamicsError, MilliJoules};
use crate::scenario::{Mode, ScenarioConfig, TxIndex};

use super::compiled::{Compiled, Node};
use super::SearchNode;

/// Per-epoch energy extremes used by the energy bound.
#[derive(Debug, Clone)]
pub(crate) struct BoundParams {
    cells: usize,
    horizon: usize,
    /// Cheapest epoch that explores nothing and does not charge.
    idle: MilliJoules,
    /// Extra cost of revealing a cell over idling, per cell and ascending,
    /// with the cell index; cells that can never be entered as new are left
    /// out. Empty when no move to another cell exists.
    reveal_extra: Vec<(MilliJoules, usize)>,
    /// Largest net battery gain of a charging epoch.
    charge_gain: MilliJoules,
    charging: bool,
    cs: usize,
    /// `survival[k][p]`: least starting energy that lets a robot at `p` get
    /// through `k` more epochs, ignoring the capacity limit and the other
    /// robots.
    survival: Vec<Vec<MilliJoules>>,
}

impl BoundParams {
    pub fn new(d: &Dynamics) -> Self {
        let cells = d.cell_count();
        let stay = (0..cells).filter_map(|c| d.move_mj(c, c)).min().unwrap_or(0);
        let min_move = (0..cells)
            .flat_map(|c| d.moves(c).iter().filter(move |(t, _)| *t != c).map(|&(_, e)| e))
            .min();
        let tx_min = (0..cells).filter_map(|c| d.tx_mj(c)).min().unwrap_or(0);
        // energy of revealing cell `c` other than its uplink share, and that share
        let (idle, reveal_base, uplink): (MilliJoules, Option<MilliJoules>, Box<dyn Fn(usize) -> Option<MilliJoules>>) =
            match d.mode() {
                Mode::Oros => {
                    let uplink: Box<dyn Fn(usize) -> Option<MilliJoules>> = match d.config().options.tx_index {
                        TxIndex::AsPrinted => Box::new(|_| Some(0)),
                        TxIndex::NewCell => Box::new(|c| d.tx_mj(c)),
                    };
                    (d.rx_mj() + stay, min_move.map(|m| d.rx_mj() + m + d.sen_mj()), uplink)
                }
                Mode::Slam => {
                    let always = d.rx_mj() + d.sen_mj();
                    (always + stay + tx_min, min_move.map(|m| always + m), Box::new(|c| d.tx_mj(c)))
                }
            };
        let mut reveal_extra: Vec<(MilliJoules, usize)> = match reveal_base {
            None => Vec::new(),
            Some(base) => (0..cells).filter_map(|c| uplink(c).map(|tx| ((base + tx - idle).max(1), c))).collect(),
        };
        reveal_extra.sort_unstable();
        let survival = survival_table(d);
        BoundParams {
            cells,
            horizon: d.horizon(),
            idle,
            reveal_extra,
            charge_gain: d.charge_gain_mj() - stay,
            charging: d.charging_enabled(),
            cs: d.cs_index(),
            survival,
        }
    }

    /// Counting bound: one new cell per robot per remaining epoch.
    pub fn counting(&self, node: &Node, robots: usize) -> u64 {
        let k_left = self.horizon.saturating_sub(node.epoch);
        let n0 = node.mask.count_ones() as usize;
        let mut total = node.cum;
        for k in 1..=k_left {
            total += self.cells.min(n0 + robots * k) as u64;
        }
        total
    }

    /// Energy bound, or `None` when no full-horizon completion exists.
    pub fn energy(&self, node: &Node) -> Option<u64> {
        let robots = node.pos.len();
        let k_left = self.horizon.saturating_sub(node.epoch);
        if k_left == 0 {
            return Some(node.cum);
        }
        let charging = self.charging && self.charge_gain + self.idle > 0;
        if charging && node.mask & (1u128 << self.cs) == 0 {
            // A robot could charge while revealing the station cell, which
            // the per-epoch costs below do not model.
            return Some(self.counting(node, robots));
        }
        let k = k_left as i64;
        let relief = self.charge_gain + self.idle;
        // cumulative cost of revealing the n cheapest unexplored cells
        let limit = (k_left * robots).min(self.cells);
        let mut prefix = SmallVec::<[MilliJoules; 32]>::new();
        let mut acc = 0;
        for &(extra, c) in &self.reveal_extra {
            if prefix.len() == limit {
                break;
            }
            if node.mask & (1u128 << c) == 0 {
                acc += extra;
                prefix.push(acc);
            }
        }
        // most reveals whose cumulative cost, plus `per_reveal` each, fits
        let most = |budget: MilliJoules, per_reveal: MilliJoules, cap: usize| -> i64 {
            prefix.iter().take(cap).enumerate().take_while(|&(i, &p)| p + (i as i64 + 1) * per_reveal <= budget).count() as i64
        };

        let survival = &self.survival[k_left];
        if node.pos.iter().zip(&node.bat).any(|(&p, &b)| b < survival[p as usize]) {
            return None;
        }
        let mut caps = SmallVec::<[i64; 4]>::new();
        let mut charges_needed = 0i64;
        for &b in &node.bat {
            let slack = b - k * self.idle;
            let cap = if !charging {
                if slack < 0 {
                    return None;
                }
                most(slack, 0, k_left)
            } else {
                if b + k * self.charge_gain < 0 {
                    return None;
                }
                if slack < 0 {
                    charges_needed += (-slack + relief - 1) / relief;
                }
                most(b + k * self.charge_gain, relief, k_left)
            };
            caps.push(cap);
        }
        if charges_needed > k {
            return None;
        }
        let sum_b: i64 = node.bat.iter().sum();
        let credit = if charging { k * relief } else { 0 };
        let fleet = most(sum_b - robots as i64 * k * self.idle + credit, 0, limit);
        let n0 = node.mask.count_ones() as i64;
        let mut total = node.cum;
        for step in 1..=k {
            let reach: i64 = caps.iter().map(|&c| c.min(step)).sum();
            total += (n0 + reach.min(fleet)) as u64;
        }
        Some(total.min(self.counting(node, robots)))
    }
}

/// Least energy needed to get through `k` epochs from each cell, for
/// `k = 0..=horizon`. Every step is priced as if it revealed nothing, which
/// never overstates its cost.
fn survival_table(d: &Dynamics) -> Vec<Vec<MilliJoules>> {
    let cells = d.cell_count();
    let step_cost = |to: usize, move_mj: MilliJoules, charge: bool| -> Option<MilliJoules> {
        if charge {
            return Some(move_mj - d.charge_gain_mj());
        }
        match d.mode() {
            Mode::Oros => Some(d.rx_mj() + move_mj),
            Mode::Slam => d.tx_mj(to).map(|tx| d.rx_mj() + d.sen_mj() + move_mj + tx),
        }
    };
    let mut table = vec![vec![0; cells]];
    for k in 1..=d.horizon() {
        let prev = &table[k - 1];
        let row = (0..cells)
            .map(|p| {
                d.robot_options(p)
                    .filter_map(|(to, move_mj, charge)| step_cost(to, move_mj, charge).map(|c| c + prev[to]))
                    .min()
                    .map_or(MilliJoules::MAX / 4, |need| need.max(0))
            })
            .collect();
        table.push(row);
    }
    table
}

fn to_node(c: &Compiled, node: &SearchNode) -> Node {
    c.node_from_state(&node.state, node.cumulative)
}

/// Optimistic objective from `node`: each remaining epoch adds at most one
/// new cell per robot, capped at the cell count.
pub fn upper_bound(node: &SearchNode, config: &ScenarioConfig) -> Result<u64, DynamicsError> {
    let c = Compiled::new(config)?;
    Ok(c.bound.counting(&to_node(&c, node), config.fleet.count))
}

/// Energy-aware bound; `None` when no completion keeps every battery in
/// bounds until the horizon.
pub fn energy_bound(node: &SearchNode, config: &ScenarioConfig) -> Result<Option<u64>, DynamicsError> {
    let c = Compiled::new(config)?;
    Ok(c.bound.energy(&to_node(&c, node)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Cell, CellMask};

    fn node(config: &ScenarioConfig, epoch: usize, explored: usize, cumulative: u64) -> SearchNode {
        let d = Dynamics::new(config).unwrap();
        let mut s = d.initial_state();
        s.epoch = epoch;
        s.explored = CellMask((1u128 << explored) - 1);
        SearchNode { state: s, cumulative, parent_action: None }
    }

    #[test]
    fn counting_bound_examples() {
        let one = ScenarioConfig { horizon_epochs: 4, ..ScenarioConfig::reference(1) };
        assert_eq!(upper_bound(&node(&one, 1, 1, 1), &one).unwrap(), 1 + 2 + 3 + 4);

        let three = ScenarioConfig { horizon_epochs: 4, ..ScenarioConfig::reference(3) };
        assert_eq!(upper_bound(&node(&three, 2, 13, 20), &three).unwrap(), 20 + 16 + 16);
        assert_eq!(upper_bound(&node(&three, 1, 16, 16), &three).unwrap(), 16 + 3 * 16);
    }

    #[test]
    fn energy_bound_detects_exhaustion() {
        let mut c = ScenarioConfig { horizon_epochs: 15, ..ScenarioConfig::reference(1) };
        c.stations.charging_enabled = false;
        let mut n = node(&c, 1, 1, 1);
        // 14 idle epochs cost 14 * 42.9 J
        n.state.batteries_mj = vec![14 * 42_900 - 1];
        assert_eq!(energy_bound(&n, &c).unwrap(), None);
        n.state.batteries_mj = vec![14 * 42_900];
        assert_eq!(energy_bound(&n, &c).unwrap(), Some(15));
        // one exploring epoch on top of idling costs 236.9 J instead of 42.9 J
        n.state.batteries_mj = vec![14 * 42_900 + 194_000];
        assert_eq!(energy_bound(&n, &c).unwrap(), Some(1 + 14 * 2));
    }

    #[test]
    fn energy_bound_never_exceeds_counting() {
        let c = ScenarioConfig::reference(2);
        let n = node(&c, 1, 1, 1);
        let e = energy_bound(&n, &c).unwrap().unwrap();
        assert!(e <= upper_bound(&n, &c).unwrap());
        assert!(Cell::new(0, 0) == c.stations.cs_cell);
    }
}
