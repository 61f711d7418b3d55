//! Exact branch-and-bound search.
//!
//! The search runs in two passes. The value pass orders children by their
//! bound, merges robots with identical state and may run on several
//! threads; it only establishes the optimal objective. The selection pass
//! then walks children in canonical order, pruning anything that cannot
//! reach that objective, and stops at the first optimal leaf: the
//! lexicographically smallest optimal plan. The selected plan therefore does
//! not depend on thread count or scheduling.

use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use dashmap::DashMap;
use rayon::prelude::*;
use rustc_hash::{FxBuildHasher, FxHashMap};
use smallvec::SmallVec;

use crate::dynamics::MilliJoules;
use crate::scenario::ScenarioConfig;

use super::compiled::{Batteries, Choice, Compiled, Node, Positions};
use super::greedy::greedy_actions;
use super::{truncated, SolveError, SolveOptions, SolveResult, SolveStatus, SolverStats};

type Key = (u16, Positions, u128);
type Entry = (Batteries, u64);

/// Solves with default options.
pub fn solve_exact(config: &ScenarioConfig) -> Result<SolveResult, SolveError> {
    solve_exact_with(config, &SolveOptions::default())
}

pub fn solve_exact_with(config: &ScenarioConfig, options: &SolveOptions) -> Result<SolveResult, SolveError> {
    let started = Instant::now();
    let counters = Counters::default();
    let greedy = greedy_actions(config)?;
    let greedy_epochs = greedy.len() + 1;

    for horizon in (1..=config.horizon_epochs).rev() {
        let compiled = Compiled::new(&truncated(config, horizon))?;
        let incumbent = (horizon <= greedy_epochs).then(|| {
            let path = compiled.choices(&greedy[..horizon - 1]);
            let value = compiled.path_value(&path);
            (value, path)
        });
        let search = Search::new(&compiled, options, &counters);
        let found = search.value_pass(incumbent);
        let exhausted = !counters.aborted.load(Ordering::Relaxed);
        match found {
            Some((value, fallback)) => {
                let (path, status) = if exhausted {
                    match Search::new(&compiled, options, &counters).selection_pass(value) {
                        Some(path) => (path, SolveStatus::Optimal),
                        None => (fallback, SolveStatus::BudgetExceeded),
                    }
                } else {
                    (fallback, SolveStatus::BudgetExceeded)
                };
                let stats = counters.stats(started);
                return SolveResult::from_actions(config, &compiled.actions(&path), status, stats);
            }
            None if exhausted => continue,
            None => {
                let stats = counters.stats(started);
                return SolveResult::from_actions(config, &greedy, SolveStatus::BudgetExceeded, stats);
            }
        }
    }
    unreachable!("a single-epoch plan is always feasible")
}

#[derive(Default)]
struct Counters {
    nodes: AtomicU64,
    bound_prunes: AtomicU64,
    dominance_prunes: AtomicU64,
    dead_prunes: AtomicU64,
    aborted: AtomicBool,
}

impl Counters {
    fn stats(&self, started: Instant) -> SolverStats {
        SolverStats {
            nodes: self.nodes.load(Ordering::Relaxed),
            bound_prunes: self.bound_prunes.load(Ordering::Relaxed),
            dominance_prunes: self.dominance_prunes.load(Ordering::Relaxed),
            dead_prunes: self.dead_prunes.load(Ordering::Relaxed),
            wall_time: started.elapsed(),
        }
    }
}

impl Compiled {
    /// Option-index choices of a joint-action path from the root.
    fn choices(&self, actions: &[crate::dynamics::JointAction]) -> Vec<Choice> {
        let mut pos: Positions = self.root().pos;
        actions
            .iter()
            .map(|a| {
                a.robots
                    .iter()
                    .zip(pos.iter_mut())
                    .map(|(ra, p)| {
                        let to = self.dynamics.index(ra.target) as u8;
                        let i = self.options[*p as usize]
                            .iter()
                            .position(|o| o.to == to && o.charge == ra.charge)
                            .expect("action comes from a replay-valid plan");
                        *p = to;
                        i as u8
                    })
                    .collect()
            })
            .collect()
    }

    fn path_value(&self, path: &[Choice]) -> u64 {
        let mut mask = self.root().mask;
        let mut pos = self.root().pos;
        let mut value = mask.count_ones() as u64;
        for choice in path {
            for (p, &i) in pos.iter_mut().zip(choice) {
                *p = self.options[*p as usize][i as usize].to;
                mask |= 1u128 << *p;
            }
            value += mask.count_ones() as u64;
        }
        value
    }
}

struct Search<'a> {
    compiled: &'a Compiled,
    options: &'a SolveOptions,
    counters: &'a Counters,
    /// Largest net gain of one charging epoch, when a higher battery could
    /// overflow where a lower one does not.
    overflow_gain: Option<MilliJoules>,
    b_max: MilliJoules,
    entries: AtomicUsize,
}

impl<'a> Search<'a> {
    fn new(compiled: &'a Compiled, options: &'a SolveOptions, counters: &'a Counters) -> Self {
        let d = &compiled.dynamics;
        let stay = (0..compiled.cells).filter_map(|c| d.move_mj(c, c)).min().unwrap_or(0);
        let gain = d.charge_gain_mj() - stay;
        let overflow_gain = (d.charging_enabled() && !d.clamp_charge() && gain > 0).then_some(gain);
        Search { compiled, options, counters, overflow_gain, b_max: d.b_max_mj(), entries: AtomicUsize::new(0) }
    }

    fn tick(&self) -> bool {
        if self.counters.aborted.load(Ordering::Relaxed) {
            return false;
        }
        if self.counters.nodes.fetch_add(1, Ordering::Relaxed) >= self.options.node_budget {
            self.counters.aborted.store(true, Ordering::Relaxed);
            return false;
        }
        true
    }

    /// `true` when `a` is at least as good as `b` from here on.
    fn dominates(&self, a: &Entry, b_bat: &[MilliJoules], b_cum: u64, k_left: usize) -> bool {
        if a.1 < b_cum {
            return false;
        }
        a.0.iter().zip(b_bat).all(|(&x, &y)| {
            x == y
                || (x > y
                    && self.overflow_gain.is_none_or(|g| x + k_left as MilliJoules * g <= self.b_max))
        })
    }

    /// Records the node's batteries under `key`; `false` if an existing
    /// entry dominates it.
    fn admit(&self, entries: &mut Vec<Entry>, bat: Batteries, cum: u64, k_left: usize) -> bool {
        if entries.iter().any(|e| self.dominates(e, &bat, cum, k_left)) {
            return false;
        }
        let before = entries.len();
        entries.retain(|e| !self.dominates(&(bat.clone(), cum), &e.0, e.1, k_left));
        let removed = before - entries.len();
        if self.entries.load(Ordering::Relaxed) < self.options.max_table_entries || removed > 0 {
            entries.push((bat, cum));
            self.entries.fetch_add(1, Ordering::Relaxed);
        }
        self.entries.fetch_sub(removed, Ordering::Relaxed);
        true
    }

    // ---- value pass -------------------------------------------------------

    fn value_pass(&self, incumbent: Option<(u64, Vec<Choice>)>) -> Option<(u64, Vec<Choice>)> {
        let shared = ValueShared {
            best: AtomicU64::new(incumbent.as_ref().map_or(0, |i| i.0)),
            plan: Mutex::new(incumbent),
            table: DashMap::with_hasher(FxBuildHasher),
        };
        let root = self.compiled.root();
        let workers = match self.options.workers {
            0 => rayon::current_num_threads(),
            w => w,
        };
        if workers <= 1 {
            self.value_dfs(&shared, &root, &mut Vec::new());
        } else {
            let frontier = self.frontier(&shared, root, workers * 16);
            let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().expect("thread pool");
            pool.install(|| {
                frontier.into_par_iter().for_each(|(node, mut path)| self.value_dfs(&shared, &node, &mut path));
            });
        }
        shared.plan.into_inner().expect("no poisoned lock")
    }

    /// Breadth-first expansion until at least `target` open nodes exist.
    fn frontier(&self, shared: &ValueShared, root: Node, target: usize) -> Vec<(Node, Vec<Choice>)> {
        let mut open = vec![(root, Vec::new())];
        while open.len() < target {
            if open.iter().all(|(n, _)| self.compiled.is_leaf(n)) {
                break;
            }
            let mut next = Vec::new();
            for (node, path) in open {
                if self.compiled.is_leaf(&node) {
                    next.push((node, path));
                    continue;
                }
                if !self.tick() {
                    return Vec::new();
                }
                for child in self.ordered_children(shared, &node) {
                    let mut p = path.clone();
                    p.push(child.0);
                    next.push((child.1, p));
                }
            }
            open = next;
        }
        open
    }

    /// Children surviving the bound and dominance tests, most promising
    /// first.
    fn ordered_children(&self, shared: &ValueShared, node: &Node) -> Vec<(Choice, Node)> {
        let mut scored = Vec::new();
        for child in self.compiled.children(node, true) {
            let Some(bound) = self.compiled.bound.energy(&child.node) else {
                self.counters.dead_prunes.fetch_add(1, Ordering::Relaxed);
                continue;
            };
            if bound <= shared.best.load(Ordering::Relaxed) {
                self.counters.bound_prunes.fetch_add(1, Ordering::Relaxed);
                continue;
            }
            let battery: MilliJoules = child.node.bat.iter().sum();
            scored.push((bound, child.gained, battery, child));
        }
        scored.sort_by(|a, b| (b.0, b.1, b.2).cmp(&(a.0, a.1, a.2)));
        let mut out = Vec::with_capacity(scored.len());
        for (_, _, _, child) in scored {
            if !self.compiled.is_leaf(&child.node) && !self.admit_symmetric(shared, &child.node) {
                self.counters.dominance_prunes.fetch_add(1, Ordering::Relaxed);
                continue;
            }
            out.push((child.choice, child.node));
        }
        out
    }

    fn admit_symmetric(&self, shared: &ValueShared, node: &Node) -> bool {
        let mut robots: SmallVec<[(u8, MilliJoules); 4]> = node.pos.iter().copied().zip(node.bat.iter().copied()).collect();
        robots.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
        let key: Key = (node.epoch as u16, robots.iter().map(|r| r.0).collect(), node.mask);
        let bat: Batteries = robots.iter().map(|r| r.1).collect();
        let k_left = self.compiled.horizon - node.epoch;
        let mut slot = shared.table.entry(key).or_default();
        self.admit(&mut slot, bat, node.cum, k_left)
    }

    fn value_dfs(&self, shared: &ValueShared, node: &Node, path: &mut Vec<Choice>) {
        if self.compiled.is_leaf(node) {
            if node.cum > shared.best.fetch_max(node.cum, Ordering::Relaxed) {
                let mut plan = shared.plan.lock().expect("no poisoned lock");
                if plan.as_ref().is_none_or(|p| p.0 < node.cum) {
                    *plan = Some((node.cum, path.clone()));
                }
            }
            return;
        }
        if !self.tick() {
            return;
        }
        for (choice, child) in self.ordered_children(shared, node) {
            // the incumbent may have improved since the children were scored
            if self.compiled.bound.energy(&child).is_none_or(|b| b <= shared.best.load(Ordering::Relaxed)) {
                self.counters.bound_prunes.fetch_add(1, Ordering::Relaxed);
                continue;
            }
            path.push(choice);
            self.value_dfs(shared, &child, path);
            path.pop();
        }
    }

    // ---- selection pass ---------------------------------------------------

    fn selection_pass(&self, target: u64) -> Option<Vec<Choice>> {
        let mut table: FxHashMap<Key, Vec<Entry>> = FxHashMap::default();
        let mut path = Vec::new();
        let root = self.compiled.root();
        self.select_dfs(&mut table, &root, target, &mut path).then_some(path)
    }

    fn select_dfs(&self, table: &mut FxHashMap<Key, Vec<Entry>>, node: &Node, target: u64, path: &mut Vec<Choice>) -> bool {
        if self.compiled.is_leaf(node) {
            return node.cum >= target;
        }
        if !self.tick() {
            return false;
        }
        for child in self.compiled.children(node, true) {
            match self.compiled.bound.energy(&child.node) {
                None => {
                    self.counters.dead_prunes.fetch_add(1, Ordering::Relaxed);
                    continue;
                }
                Some(b) if b < target => {
                    self.counters.bound_prunes.fetch_add(1, Ordering::Relaxed);
                    continue;
                }
                Some(_) => {}
            }
            if !self.compiled.is_leaf(&child.node) {
                let key: Key = (child.node.epoch as u16, child.node.pos.clone(), child.node.mask);
                let k_left = self.compiled.horizon - child.node.epoch;
                let slot = table.entry(key).or_default();
                if !self.admit(slot, child.node.bat.clone(), child.node.cum, k_left) {
                    self.counters.dominance_prunes.fetch_add(1, Ordering::Relaxed);
                    continue;
                }
            }
            path.push(child.choice);
            if self.select_dfs(table, &child.node, target, path) {
                return true;
            }
            path.pop();
            if self.counters.aborted.load(Ordering::Relaxed) {
                return false;
            }
        }
        false
    }
}

struct ValueShared {
    best: AtomicU64,
    plan: Mutex<Option<(u64, Vec<Choice>)>>,
    table: DashMap<Key, Vec<Entry>, FxBuildHasher>,
}
