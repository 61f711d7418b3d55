//! Parameter sweeps over a base scenario and their CSV records.

mod plot;

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::grid::{Cell, Edge};
use crate::scenario::{parse_key_values, Mode, ScenarioConfig, ScenarioError};
use crate::solver::{solve_exact_with, solve_greedy, SolveError, SolveOptions, SolveResult, SolverStats};

pub use plot::{plot_svg, PlotError};

/// Scenario parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepKey {
    FleetCount,
    SensingPower,
    BatteryCapacity,
    ObstaclePreset,
}

impl SweepKey {
    pub fn name(self) -> &'static str {
        match self {
            SweepKey::FleetCount => "fleet.count",
            SweepKey::SensingPower => "energy.p_sen_w",
            SweepKey::BatteryCapacity => "fleet.b_max_j",
            SweepKey::ObstaclePreset => "grid.blocked_edges",
        }
    }

    /// The scenario with this parameter set to `value`.
    pub fn apply(self, base: &ScenarioConfig, value: f64) -> Result<ScenarioConfig, ExperimentError> {
        let mut c = base.clone();
        let whole = || -> Result<usize, ExperimentError> {
            if value >= 0.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else {
                Err(ExperimentError::Spec(format!("{} takes non-negative integers, got {value}", self.name())))
            }
        };
        match self {
            SweepKey::FleetCount => c.fleet.count = whole()?,
            SweepKey::SensingPower => c.energy.p_sen_w = value,
            SweepKey::BatteryCapacity => c.fleet.b_max_j = value,
            SweepKey::ObstaclePreset => {
                let edges = obstacle_preset(whole()?)?;
                let g = &base.grid;
                return Ok(c.with_grid(g.width_m(), g.height_m(), edges)?);
            }
        }
        c.validate()?;
        Ok(c)
    }
}

impl fmt::Display for SweepKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepKey {
    type Err = ExperimentError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [SweepKey::FleetCount, SweepKey::SensingPower, SweepKey::BatteryCapacity, SweepKey::ObstaclePreset]
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| ExperimentError::Spec(format!("unsupported sweep key `{}`", s.trim())))
    }
}

/// Ids of the shipped obstacle layouts, in increasing obstruction.
pub const OBSTACLE_PRESETS: [usize; 4] = [0, 3, 7, 9];

/// Blocked edges of an obstacle layout on the 4x4 reference grid. Each
/// obstacle is a horizontal wall between two vertically adjacent cells.
/// Walls fill the inner grid lines one by one, the middle lines leaving
/// gaps at alternating ends; the top line is closed last and stays
/// passable diagonally. Larger layouts contain the smaller ones and no cell
/// is ever cut off.
pub fn obstacle_preset(id: usize) -> Result<Vec<Edge>, ExperimentError> {
    let wall = |a: u16, b: u16| (Cell::new(a, b), Cell::new(a, b + 1));
    const ORDER: [(u16, u16); 9] = [(1, 1), (2, 1), (3, 1), (0, 2), (1, 2), (2, 2), (1, 0), (2, 0), (3, 2)];
    if !OBSTACLE_PRESETS.contains(&id) {
        return Err(ExperimentError::Spec(format!("unknown obstacle preset {id} (expected one of {OBSTACLE_PRESETS:?})")));
    }
    Ok(ORDER[..id].iter().map(|&(a, b)| wall(a, b)).collect())
}

/// A sweep: base scenario, swept parameter and values, modes to run.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base_path: PathBuf,
    pub base: ScenarioConfig,
    pub key: SweepKey,
    pub values: Vec<f64>,
    pub modes: Vec<Mode>,
}

const SPEC_KEYS: &[&str] = &["base", "key", "values", "modes"];

impl SweepSpec {
    /// Parses a sweep file; `base` is resolved against `dir`.
    pub fn parse(text: &str, dir: &Path) -> Result<Self, ExperimentError> {
        let kv = parse_key_values(text, SPEC_KEYS)?;
        let get = |k: &str| kv.get(k).ok_or_else(|| ExperimentError::Spec(format!("missing key `{k}`")));
        let base_path = dir.join(get("base")?);
        let base_text = std::fs::read_to_string(&base_path)
            .map_err(|e| ExperimentError::Io(format!("{}: {e}", base_path.display())))?;
        let base = ScenarioConfig::load(&base_text)?;
        let key: SweepKey = get("key")?.parse()?;
        let values = get("values")?
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>().map_err(|_| ExperimentError::Spec(format!("`{s}` is not a number"))))
            .collect::<Result<Vec<_>, _>>()?;
        let modes = match kv.get("modes") {
            Some(m) => m.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| s.parse::<Mode>().map_err(ExperimentError::Spec)).collect::<Result<Vec<_>, _>>()?,
            None => vec![Mode::Oros, Mode::Slam],
        };
        let spec = SweepSpec { base_path, base, key, values, modes };
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(|e| ExperimentError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.values.is_empty() {
            return Err(ExperimentError::Spec("value list is empty".into()));
        }
        if self.modes.is_empty() {
            return Err(ExperimentError::Spec("mode list is empty".into()));
        }
        Ok(())
    }
}

/// How each sweep row is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    pub solve: SolveOptions,
    pub greedy: bool,
    /// Rows solved concurrently; 0 means one per core.
    pub parallel_rows: usize,
}

/// One solved sweep row.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub digest: String,
    pub mode: Mode,
    pub swept_key: SweepKey,
    pub swept_value: f64,
    pub explored_fraction: f64,
    pub completion_epoch: usize,
    pub objective: u64,
    pub batteries_j: Vec<f64>,
    /// Solver status, with `/epochs=N` appended when the plan stops short of
    /// the horizon.
    pub status: String,
    pub feasible_epochs: usize,
    pub stats: SolverStats,
}

impl ExperimentRecord {
    pub fn from_result(config: &ScenarioConfig, key: SweepKey, value: f64, r: &SolveResult) -> Self {
        let mut status = r.status.name().to_string();
        if !r.reached_horizon(config) {
            let _ = write!(status, "/epochs={}", r.feasible_epochs);
        }
        ExperimentRecord {
            digest: config.digest(),
            mode: config.mode,
            swept_key: key,
            swept_value: value,
            explored_fraction: r.explored_fraction,
            completion_epoch: r.completion_epoch,
            objective: r.objective,
            batteries_j: r.final_batteries_j(),
            status,
            feasible_epochs: r.feasible_epochs,
            stats: r.stats.clone(),
        }
    }
}

/// Solves every `(value, mode)` row, sorted by value then mode. Row order
/// never depends on completion order.
pub fn run_sweep(spec: &SweepSpec, options: &RunOptions) -> Result<Vec<ExperimentRecord>, ExperimentError> {
    let mut jobs = Vec::new();
    for &v in &spec.values {
        for &m in &spec.modes {
            let mut c = spec.key.apply(&spec.base, v)?;
            c.mode = m;
            jobs.push((v, c));
        }
    }
    jobs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.mode.cmp(&b.1.mode)));
    let solve = |(v, c): &(f64, ScenarioConfig)| -> Result<ExperimentRecord, ExperimentError> {
        let r = if options.greedy { solve_greedy(c)? } else { solve_exact_with(c, &options.solve)? };
        Ok(ExperimentRecord::from_result(c, spec.key, *v, &r))
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.parallel_rows)
        .build()
        .map_err(|e| ExperimentError::Io(e.to_string()))?;
    pool.install(|| jobs.par_iter().map(solve).collect())
}

/// Number of battery columns in the experiments CSV.
pub const BATTERY_COLUMNS: usize = 3;

pub const CSV_HEADER: &str =
    "digest,mode,swept_key,swept_value,explored_fraction,completion_epoch,objective,battery_r1_j,battery_r2_j,battery_r3_j,status";

pub fn records_to_csv(records: &[ExperimentRecord]) -> String {
    let mut s = format!("{CSV_HEADER}\n");
    for r in records {
        let _ = write!(
            s,
            "{},{},{},{},{:.4},{},{}",
            r.digest, r.mode, r.swept_key, r.swept_value, r.explored_fraction, r.completion_epoch, r.objective
        );
        for i in 0..BATTERY_COLUMNS {
            match r.batteries_j.get(i) {
                Some(b) => {
                    let _ = write!(s, ",{b:.2}");
                }
                None => s.push(','),
            }
        }
        let _ = writeln!(s, ",{}", r.status);
    }
    s
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExperimentError {
    #[error("sweep spec: {0}")]
    Spec(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}
