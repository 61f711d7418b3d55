//! Compact search representation shared by the planners.

use smallvec::SmallVec;

use crate::dynamics::{Dynamics, DynamicsError, FleetState, JointAction, MilliJoules, RobotAction};
use crate::grid::CellMask;
use crate::scenario::ScenarioConfig;

use super::bound::BoundParams;

pub(crate) type Positions = SmallVec<[u8; 4]>;
pub(crate) type Batteries = SmallVec<[MilliJoules; 4]>;
/// Per-robot option indices of one joint action.
pub(crate) type Choice = SmallVec<[u8; 4]>;

#[derive(Debug, Clone, Copy)]
pub(crate) struct RobotOption {
    pub to: u8,
    pub move_mj: MilliJoules,
    pub charge: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Node {
    pub epoch: usize,
    pub pos: Positions,
    pub bat: Batteries,
    pub mask: u128,
    pub cum: u64,
}

#[derive(Debug, Clone)]
pub(crate) struct Child {
    pub choice: Choice,
    pub node: Node,
    /// Cells newly explored by this step.
    pub gained: u32,
}

pub(crate) struct Compiled {
    pub dynamics: Dynamics,
    pub horizon: usize,
    pub robots: usize,
    pub cells: usize,
    /// Options per cell in canonical order.
    pub options: Vec<Vec<RobotOption>>,
    pub bound: BoundParams,
}

impl Compiled {
    pub fn new(config: &ScenarioConfig) -> Result<Self, DynamicsError> {
        let dynamics = Dynamics::new(config)?;
        let cells = dynamics.cell_count();
        let options = (0..cells)
            .map(|c| {
                dynamics
                    .robot_options(c)
                    .map(|(to, move_mj, charge)| RobotOption { to: to as u8, move_mj, charge })
                    .collect()
            })
            .collect();
        let bound = BoundParams::new(&dynamics);
        Ok(Compiled {
            horizon: dynamics.horizon(),
            robots: dynamics.robots(),
            cells,
            options,
            bound,
            dynamics,
        })
    }

    pub fn root(&self) -> Node {
        let s = self.dynamics.initial_state();
        self.node_from_state(&s, s.explored_count() as u64)
    }

    pub fn node_from_state(&self, s: &FleetState, cum: u64) -> Node {
        Node {
            epoch: s.epoch,
            pos: s.positions.iter().map(|&p| self.dynamics.index(p) as u8).collect(),
            bat: s.batteries_mj.iter().copied().collect(),
            mask: s.explored.0,
            cum,
        }
    }

    pub fn is_leaf(&self, node: &Node) -> bool {
        node.epoch >= self.horizon
    }

    /// Feasible options of one robot: (option index, target, next battery, charge).
    fn robot_successors(&self, node: &Node, r: usize, out: &mut Vec<(u8, u8, MilliJoules, bool)>) {
        out.clear();
        let from = node.pos[r] as usize;
        for (i, opt) in self.options[from].iter().enumerate() {
            if let Ok((next, _)) = self.dynamics.robot_step(
                from,
                opt.to as usize,
                opt.move_mj,
                opt.charge,
                CellMask(node.mask),
                node.bat[r],
            ) {
                out.push((i as u8, opt.to, next, opt.charge));
            }
        }
    }

    /// All feasible children in canonical order. With `symmetric`, robots
    /// sharing position and battery are forced into non-decreasing option
    /// order, which keeps exactly one representative of each permutation
    /// class (the lexicographically smallest).
    pub fn children(&self, node: &Node, symmetric: bool) -> Vec<Child> {
        let r = self.robots;
        let mut per_robot: Vec<Vec<(u8, u8, MilliJoules, bool)>> = Vec::with_capacity(r);
        let mut buf = Vec::new();
        for i in 0..r {
            self.robot_successors(node, i, &mut buf);
            if buf.is_empty() {
                return Vec::new();
            }
            per_robot.push(buf.clone());
        }
        let twin: SmallVec<[Option<usize>; 4]> = (0..r)
            .map(|j| {
                if !symmetric {
                    return None;
                }
                (0..j).rev().find(|&i| node.pos[i] == node.pos[j] && node.bat[i] == node.bat[j])
            })
            .collect();

        let mut out = Vec::new();
        let mut choice = Choice::new();
        let mut pos = Positions::new();
        let mut bat = Batteries::new();
        self.product(node, &per_robot, &twin, false, &mut choice, &mut pos, &mut bat, &mut out);
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn product(
        &self,
        node: &Node,
        per_robot: &[Vec<(u8, u8, MilliJoules, bool)>],
        twin: &[Option<usize>],
        charged: bool,
        choice: &mut Choice,
        pos: &mut Positions,
        bat: &mut Batteries,
        out: &mut Vec<Child>,
    ) {
        let j = choice.len();
        if j == per_robot.len() {
            let mut mask = node.mask;
            for &p in pos.iter() {
                mask |= 1u128 << p;
            }
            let gained = (mask & !node.mask).count_ones();
            out.push(Child {
                choice: choice.clone(),
                gained,
                node: Node {
                    epoch: node.epoch + 1,
                    pos: pos.clone(),
                    bat: bat.clone(),
                    mask,
                    cum: node.cum + mask.count_ones() as u64,
                },
            });
            return;
        }
        let min_index = twin[j].map(|i| choice[i]).unwrap_or(0);
        for &(idx, to, next, charge) in &per_robot[j] {
            if idx < min_index || (charge && charged) {
                continue;
            }
            choice.push(idx);
            pos.push(to);
            bat.push(next);
            self.product(node, per_robot, twin, charged || charge, choice, pos, bat, out);
            choice.pop();
            pos.pop();
            bat.pop();
        }
    }

    /// Converts option-index choices along a path from the root into joint
    /// actions.
    pub fn actions(&self, path: &[Choice]) -> Vec<JointAction> {
        let root = self.root();
        let mut pos = root.pos;
        let mut out = Vec::with_capacity(path.len());
        for choice in path {
            let robots = choice
                .iter()
                .zip(pos.iter_mut())
                .map(|(&i, p)| {
                    let opt = self.options[*p as usize][i as usize];
                    *p = opt.to;
                    RobotAction { target: self.dynamics.cell(opt.to as usize), charge: opt.charge }
                })
                .collect();
            out.push(JointAction { robots });
        }
        out
    }
}
