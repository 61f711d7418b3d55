//! Time-expanded mixed-integer encoding of the planning problem, its MPS
//! serialization, and validation of externally obtained solutions.
//!
//! Energies are integer millijoules. Products of binaries in the battery
//! recursion are replaced by AND-linearized auxiliaries: `mv` for consecutive
//! occupancies and `w` for occupancy of a not-yet-explored cell.

mod encode;
mod mps;
mod solution;

use std::collections::BTreeMap;
use std::fmt;

pub use encode::encode;
pub use mps::{parse_model, write_model, NAME_WIDTH};
pub use solution::{check_solution, implied_assignment, parse_assignment, Assignment, SolutionReport};

use crate::dynamics::DynamicsError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VarKind {
    Binary,
    /// Continuous in `[0, upper]`.
    Continuous { upper: f64 },
}

impl VarKind {
    pub fn upper(self) -> f64 {
        match self {
            VarKind::Binary => 1.0,
            VarKind::Continuous { upper } => upper,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    /// MPS row type letter.
    pub fn letter(self) -> char {
        match self {
            Sense::Le => 'L',
            Sense::Ge => 'G',
            Sense::Eq => 'E',
        }
    }

    /// Amount by which `lhs` misses `rhs`; zero or negative when satisfied.
    pub fn excess(self, lhs: f64, rhs: f64) -> f64 {
        match self {
            Sense::Le => lhs - rhs,
            Sense::Ge => rhs - lhs,
            Sense::Eq => (lhs - rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub name: String,
    /// `(variable name, coefficient)`, sorted by name, no zero coefficients.
    pub terms: Vec<(String, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn lhs(&self, value: impl Fn(&str) -> f64) -> f64 {
        self.terms.iter().map(|(v, c)| c * value(v)).sum()
    }
}

/// A linear program with binary and bounded continuous variables,
/// maximizing `objective`.
#[derive(Debug, Clone, PartialEq)]
pub struct MilpInstance {
    pub name: String,
    /// Variables keyed by name.
    pub variables: BTreeMap<String, VarKind>,
    /// Constraints sorted by name.
    pub constraints: Vec<LinearConstraint>,
    /// Objective coefficients sorted by variable name.
    pub objective: Vec<(String, f64)>,
}

impl MilpInstance {
    pub fn count_prefix(&self, prefix: &str) -> usize {
        self.variables.keys().filter(|n| n.starts_with(prefix)).count()
    }

    /// One-line size summary.
    pub fn counts_line(&self) -> String {
        format!(
            "variables={} constraints={} l={} u={} e={} b={} mv={} w={}",
            self.variables.len(),
            self.constraints.len(),
            self.count_prefix("l_"),
            self.count_prefix("u_"),
            self.count_prefix("e_"),
            self.count_prefix("b_"),
            self.count_prefix("mv_"),
            self.count_prefix("w_"),
        )
    }

    /// Checks that names are unique and every referenced variable exists.
    pub fn validate(&self) -> Result<(), MilpError> {
        let mut rows = std::collections::BTreeSet::new();
        for c in &self.constraints {
            if !rows.insert(c.name.as_str()) {
                return Err(MilpError::Malformed(format!("duplicate constraint `{}`", c.name)));
            }
            if let Some((v, _)) = c.terms.iter().find(|(v, _)| !self.variables.contains_key(v)) {
                return Err(MilpError::Malformed(format!("constraint `{}` uses undeclared `{v}`", c.name)));
            }
        }
        if let Some((v, _)) = self.objective.iter().find(|(v, _)| !self.variables.contains_key(v)) {
            return Err(MilpError::Malformed(format!("objective uses undeclared `{v}`")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MilpError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("malformed model: {0}")]
    Malformed(String),
    #[error("MPS line {line}: {message}")]
    Mps { line: usize, message: String },
    #[error("assignment line {line}: {message}")]
    Assignment { line: usize, message: String },
    #[error("assignment is missing variable `{0}`")]
    MissingVariable(String),
    #[error("assignment sets unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("variable `{name}` = {value} is outside its domain")]
    Domain { name: String, value: f64 },
    #[error("constraint `{name}` violated by {slack:.6}")]
    Violation { name: String, slack: f64 },
    #[error("decoded plan disagrees with the simulator: {0}")]
    ReplayDisagreement(String),
}

/// Absolute tolerance, in model units (millijoules for battery rows).
pub const TOLERANCE: f64 = 1e-6;

pub(crate) struct Names;

impl Names {
    pub fn l(r: usize, t: usize, cell: crate::grid::Cell) -> String {
        format!("l_r{}_t{}_a{}_b{}", r + 1, t, cell.a, cell.b)
    }
    pub fn u(r: usize, t: usize) -> String {
        format!("u_r{}_t{}", r + 1, t)
    }
    pub fn e(t: usize, cell: crate::grid::Cell) -> String {
        format!("e_t{}_a{}_b{}", t, cell.a, cell.b)
    }
    pub fn b(r: usize, t: usize) -> String {
        format!("b_r{}_t{}", r + 1, t)
    }
    pub fn c(r: usize, t: usize) -> String {
        format!("c_r{}_t{}", r + 1, t)
    }
    pub fn mv(r: usize, t: usize, from: crate::grid::Cell, to: crate::grid::Cell) -> String {
        format!("mv_r{}_t{}_a{}_b{}_a{}_b{}", r + 1, t, from.a, from.b, to.a, to.b)
    }
    pub fn w_sen(r: usize, t: usize, cell: crate::grid::Cell) -> String {
        format!("w_sen_r{}_t{}_a{}_b{}", r + 1, t, cell.a, cell.b)
    }
    pub fn w_tx(r: usize, t: usize, cell: crate::grid::Cell) -> String {
        format!("w_tx_r{}_t{}_a{}_b{}", r + 1, t, cell.a, cell.b)
    }
}

impl fmt::Display for MilpInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.counts_line())
    }
}
