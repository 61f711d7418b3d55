//! Problem instances: grid, stations, fleet, energy and radio models, and the
//! `key = value` scenario file format.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::grid::{Cell, Edge, GridError, GridMap};
use crate::physics::{self, TxRow};
use crate::{EnergyModel, RadioModel};

/// Battery recursion variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    /// Sensing and uplink only while entering unexplored cells.
    Oros,
    /// Sensing and uplink always on while not charging.
    Slam,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Oros => "OROS",
            Mode::Slam => "SLAM",
        })
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "OROS" => Ok(Mode::Oros),
            "SLAM" => Ok(Mode::Slam),
            other => Err(format!("unknown mode `{other}` (expected OROS or SLAM)")),
        }
    }
}

/// Which cell the OROS recursion charges uplink energy against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum TxIndex {
    /// OROS charges the cell occupied before the move, SLAM the cell after it.
    #[default]
    AsPrinted,
    /// Both recursions charge the cell occupied after the move.
    NewCell,
}

impl fmt::Display for TxIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TxIndex::AsPrinted => "as_printed",
            TxIndex::NewCell => "new_cell",
        })
    }
}

impl FromStr for TxIndex {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "as_printed" => Ok(TxIndex::AsPrinted),
            "new_cell" => Ok(TxIndex::NewCell),
            other => Err(format!("unknown tx index `{other}` (expected as_printed or new_cell)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationLayout {
    pub cs_cell: Cell,
    pub charge_rate_j_per_s: f64,
    pub bs_cell: Cell,
    /// When false no robot may ever request charging.
    pub charging_enabled: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FleetSpec {
    pub count: usize,
    pub b_max_j: f64,
    pub start_cell: Cell,
}

/// Switches on the transition system that the printed model leaves open.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DynamicsOptions {
    pub tx_index: TxIndex,
    /// Replace the charge term by `min(B_max - b, CR * dt)` instead of
    /// rejecting charges that would overflow the battery.
    pub clamp_charge: bool,
}

/// A complete, validated problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub grid: GridMap,
    pub stations: StationLayout,
    pub fleet: FleetSpec,
    pub energy: EnergyModel,
    pub radio: RadioModel,
    pub horizon_epochs: usize,
    pub mode: Mode,
    pub options: DynamicsOptions,
}

/// Shipped transmit-power table, `(snr_threshold_db, tx_power_w)` rows:
/// cheap uplink from the base-station cell, a flat high-power link elsewhere.
/// Calibrated against the reference exploration results with `new_cell`
/// uplink accounting and charging off.
pub const DEFAULT_TX_TABLE: &[(f64, f64)] = &[(45.0, 0.5), (0.0, 55.0)];

pub fn default_tx_table() -> Vec<TxRow<f64>> {
    DEFAULT_TX_TABLE
        .iter()
        .map(|&(snr_threshold_db, tx_power_w)| TxRow { snr_threshold_db, tx_power_w })
        .collect()
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("missing required key `{0}`")]
    MissingKey(&'static str),
    #[error("invalid value for `{key}`: {message}")]
    InvalidValue { key: String, message: String },
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("cells {from} and {to} are not neighbours")]
    NonAdjacent { from: Cell, to: Cell },
    #[error("cell {0} lies outside the grid")]
    OutsideGrid(Cell),
    #[error("link outage at cell {cell}: SNR {snr_db:.2} dB is below every table threshold")]
    LinkOutage { cell: Cell, snr_db: f64 },
}

const KEYS: &[&str] = &[
    "grid.width_m",
    "grid.height_m",
    "grid.cell_m",
    "grid.blocked_edges",
    "stations.cs_cell",
    "stations.charge_rate_j_per_s",
    "stations.bs_cell",
    "stations.charging",
    "fleet.count",
    "fleet.b_max_j",
    "fleet.start_cell",
    "energy.delta_t_s",
    "energy.p_rx_w",
    "energy.p_sen_w",
    "energy.move_alpha_w",
    "energy.move_beta",
    "radio.tx_power_dbm",
    "radio.rx_gain_db",
    "radio.noise_dbm",
    "radio.carrier_hz",
    "radio.tx_energy_table",
    "horizon_epochs",
    "mode",
    "dynamics.tx_index",
    "dynamics.clamp_charge",
];

/// Parses `key = value` lines. `#` starts a comment. Keys are validated
/// against the known schema but values are left as text.
pub fn parse_key_values(text: &str, known: &[&str]) -> Result<BTreeMap<String, String>, ScenarioError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ScenarioError::Syntax {
            line,
            message: format!("expected `key = value`, found `{content}`"),
        })?;
        let key = key.trim();
        if !known.contains(&key) {
            return Err(ScenarioError::UnknownKey { line, key: key.to_string() });
        }
        if map.insert(key.to_string(), value.trim().to_string()).is_some() {
            return Err(ScenarioError::DuplicateKey { line, key: key.to_string() });
        }
    }
    Ok(map)
}

struct Fields(BTreeMap<String, String>);

impl Fields {
    fn raw(&self, key: &'static str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn parse<T: FromStr>(&self, key: &'static str, default: Option<T>) -> Result<T, ScenarioError>
    where
        T::Err: fmt::Display,
    {
        match (self.raw(key), default) {
            (Some(v), _) => v.parse().map_err(|e: T::Err| invalid(key, e.to_string())),
            (None, Some(d)) => Ok(d),
            (None, None) => Err(ScenarioError::MissingKey(key)),
        }
    }
}

fn invalid(key: &str, message: impl Into<String>) -> ScenarioError {
    ScenarioError::InvalidValue { key: key.to_string(), message: message.into() }
}

fn parse_bool(key: &str, v: &str) -> Result<bool, ScenarioError> {
    match v.trim().to_ascii_lowercase().as_str() {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        other => Err(invalid(key, format!("expected a boolean, found `{other}`"))),
    }
}

/// Parses `a,b-a',b'` pairs separated by semicolons.
pub fn parse_blocked_edges(value: &str) -> Result<Vec<Edge>, ScenarioError> {
    let key = "grid.blocked_edges";
    value
        .split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|pair| {
            let (p, q) = pair.split_once('-').ok_or_else(|| invalid(key, format!("edge `{pair}` needs the form a,b-a',b'")))?;
            let p: Cell = p.parse().map_err(|e: crate::grid::ParseCellError| invalid(key, e.to_string()))?;
            let q: Cell = q.parse().map_err(|e: crate::grid::ParseCellError| invalid(key, e.to_string()))?;
            Ok((p, q))
        })
        .collect()
}

fn parse_tx_table(value: &str) -> Result<Vec<TxRow<f64>>, ScenarioError> {
    let key = "radio.tx_energy_table";
    value
        .split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|row| {
            let (snr, watts) = row.split_once(':').ok_or_else(|| invalid(key, format!("row `{row}` needs the form snr_db:watts")))?;
            let snr_threshold_db = snr.trim().parse::<f64>().map_err(|e| invalid(key, e.to_string()))?;
            let tx_power_w = watts.trim().parse::<f64>().map_err(|e| invalid(key, e.to_string()))?;
            Ok(TxRow { snr_threshold_db, tx_power_w })
        })
        .collect()
}

fn format_edges(edges: impl IntoIterator<Item = Edge>) -> String {
    edges.into_iter().map(|(p, q)| format!("{p}-{q}")).collect::<Vec<_>>().join(";")
}

fn format_table(rows: &[TxRow<f64>]) -> String {
    rows.iter()
        .map(|r| format!("{}:{}", r.snr_threshold_db, r.tx_power_w))
        .collect::<Vec<_>>()
        .join(";")
}

impl ScenarioConfig {
    /// Parses and validates a scenario file.
    pub fn load(text: &str) -> Result<Self, ScenarioError> {
        let f = Fields(parse_key_values(text, KEYS)?);
        let blocked = parse_blocked_edges(f.raw("grid.blocked_edges").unwrap_or(""))?;
        let grid = GridMap::new(
            f.parse("grid.width_m", None)?,
            f.parse("grid.height_m", None)?,
            f.parse("grid.cell_m", None)?,
            blocked,
        )?;
        let cell = |key: &'static str, default: Option<Cell>| -> Result<Cell, ScenarioError> {
            match (f.raw(key), default) {
                (Some(v), _) => v.parse().map_err(|e: crate::grid::ParseCellError| invalid(key, e.to_string())),
                (None, Some(d)) => Ok(d),
                (None, None) => Err(ScenarioError::MissingKey(key)),
            }
        };
        let cs_cell = cell("stations.cs_cell", None)?;
        let charging_enabled = match f.raw("stations.charging") {
            Some(v) => parse_bool("stations.charging", v)?,
            None => true,
        };
        let stations = StationLayout {
            cs_cell,
            charge_rate_j_per_s: f.parse("stations.charge_rate_j_per_s", None)?,
            bs_cell: cell("stations.bs_cell", Some(cs_cell))?,
            charging_enabled,
        };
        let fleet = FleetSpec {
            count: f.parse("fleet.count", None)?,
            b_max_j: f.parse("fleet.b_max_j", None)?,
            start_cell: cell("fleet.start_cell", Some(cs_cell))?,
        };
        let energy = EnergyModel {
            delta_t_s: f.parse("energy.delta_t_s", None)?,
            p_rx_w: f.parse("energy.p_rx_w", None)?,
            p_sen_w: f.parse("energy.p_sen_w", None)?,
            move_alpha_w: f.parse("energy.move_alpha_w", Some(0.29))?,
            move_beta: f.parse("energy.move_beta", Some(7.4))?,
        };
        let tx_energy_table = match f.raw("radio.tx_energy_table") {
            Some(v) => parse_tx_table(v)?,
            None => default_tx_table(),
        };
        let radio = RadioModel {
            tx_power_dbm: f.parse("radio.tx_power_dbm", None)?,
            rx_gain_db: f.parse("radio.rx_gain_db", None)?,
            noise_dbm: f.parse("radio.noise_dbm", None)?,
            carrier_hz: f.parse("radio.carrier_hz", None)?,
            tx_energy_table,
        };
        let options = DynamicsOptions {
            tx_index: f.parse("dynamics.tx_index", Some(TxIndex::AsPrinted))?,
            clamp_charge: match f.raw("dynamics.clamp_charge") {
                Some(v) => parse_bool("dynamics.clamp_charge", v)?,
                None => false,
            },
        };
        let horizon_epochs = f.parse("horizon_epochs", None)?;
        let mode = f.parse("mode", None)?;
        let config = ScenarioConfig { grid, stations, fleet, energy, radio, horizon_epochs, mode, options };
        config.validate()?;
        Ok(config)
    }

    /// Checks every invariant of the instance.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        for (name, cell) in [
            ("stations.cs_cell", self.stations.cs_cell),
            ("stations.bs_cell", self.stations.bs_cell),
            ("fleet.start_cell", self.fleet.start_cell),
        ] {
            if !self.grid.contains(cell) {
                return Err(ScenarioError::Invariant(format!("{name} {cell} must lie inside the grid")));
            }
        }
        if self.fleet.count < 1 {
            return Err(ScenarioError::Invariant("fleet.count must be at least 1".into()));
        }
        if !(self.fleet.b_max_j > 0.0 && self.fleet.b_max_j.is_finite()) {
            return Err(ScenarioError::Invariant("fleet.b_max_j must be positive".into()));
        }
        if !(self.stations.charge_rate_j_per_s >= 0.0 && self.stations.charge_rate_j_per_s.is_finite()) {
            return Err(ScenarioError::Invariant("stations.charge_rate_j_per_s must be non-negative".into()));
        }
        if !self.energy.is_valid() {
            return Err(ScenarioError::Invariant("energy model fields must all be strictly positive".into()));
        }
        if !(self.radio.carrier_hz > 0.0) {
            return Err(ScenarioError::Invariant("radio.carrier_hz must be positive".into()));
        }
        if let Some(problem) = self.radio.table_problem() {
            return Err(ScenarioError::Invariant(problem));
        }
        if self.horizon_epochs < 1 {
            return Err(ScenarioError::Invariant("horizon_epochs must be at least 1".into()));
        }
        Ok(())
    }

    /// Canonical scenario text; `load(serialize(c)) == c`.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("grid.width_m", self.grid.width_m().to_string());
        kv("grid.height_m", self.grid.height_m().to_string());
        kv("grid.cell_m", self.grid.cell_m().to_string());
        kv("grid.blocked_edges", format_edges(self.grid.blocked_edges().iter().copied()));
        kv("stations.cs_cell", self.stations.cs_cell.to_string());
        kv("stations.charge_rate_j_per_s", self.stations.charge_rate_j_per_s.to_string());
        kv("stations.bs_cell", self.stations.bs_cell.to_string());
        kv("stations.charging", self.stations.charging_enabled.to_string());
        kv("fleet.count", self.fleet.count.to_string());
        kv("fleet.b_max_j", self.fleet.b_max_j.to_string());
        kv("fleet.start_cell", self.fleet.start_cell.to_string());
        kv("energy.delta_t_s", self.energy.delta_t_s.to_string());
        kv("energy.p_rx_w", self.energy.p_rx_w.to_string());
        kv("energy.p_sen_w", self.energy.p_sen_w.to_string());
        kv("energy.move_alpha_w", self.energy.move_alpha_w.to_string());
        kv("energy.move_beta", self.energy.move_beta.to_string());
        kv("radio.tx_power_dbm", self.radio.tx_power_dbm.to_string());
        kv("radio.rx_gain_db", self.radio.rx_gain_db.to_string());
        kv("radio.noise_dbm", self.radio.noise_dbm.to_string());
        kv("radio.carrier_hz", self.radio.carrier_hz.to_string());
        kv("radio.tx_energy_table", format_table(&self.radio.tx_energy_table));
        kv("horizon_epochs", self.horizon_epochs.to_string());
        kv("mode", self.mode.to_string());
        kv("dynamics.tx_index", self.options.tx_index.to_string());
        kv("dynamics.clamp_charge", self.options.clamp_charge.to_string());
        s
    }

    /// Hex content hash of the canonical serialization.
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.serialize().as_bytes());
        hex::encode(&hash[..8])
    }

    /// Terrain-velocity constant in m/s between neighbouring cells.
    pub fn terrain_velocity(&self, from: Cell, to: Cell) -> Result<f64, ScenarioError> {
        for c in [from, to] {
            if !self.grid.contains(c) {
                return Err(ScenarioError::OutsideGrid(c));
            }
        }
        physics::terrain_velocity(&self.grid, from, to).ok_or(ScenarioError::NonAdjacent { from, to })
    }

    /// Locomotion energy in joules for one epoch; +inf across blocked edges.
    pub fn move_energy(&self, from: Cell, to: Cell) -> Result<f64, ScenarioError> {
        Ok(self.energy.move_energy_j(self.terrain_velocity(from, to)?))
    }

    pub fn snr_db(&self, cell: Cell) -> f64 {
        let d = physics::link_distance_m::<f64>(&self.grid, cell, self.stations.bs_cell);
        self.radio.snr_db(d)
    }

    /// Uplink energy in joules for one epoch spent at `cell`.
    pub fn tx_energy(&self, cell: Cell) -> Result<f64, ScenarioError> {
        if !self.grid.contains(cell) {
            return Err(ScenarioError::OutsideGrid(cell));
        }
        let snr_db = self.snr_db(cell);
        let row = self.radio.select_row(snr_db).ok_or(ScenarioError::LinkOutage { cell, snr_db })?;
        Ok(row.tx_power_w * self.energy.delta_t_s)
    }

    /// Parameters of the desk-scale reference setup: 40x40 m area in 10 m
    /// cells, 15 epochs of 10 s, 5000 J batteries, 9.24 J/s charger, 4 W
    /// reception and 12 W sensing, 20 dBm / -20 dB / -104 dBm link at
    /// 3.5 GHz. Charger, base station and start share the (0,0) corner.
    pub fn reference(robots: usize) -> Self {
        let corner = Cell::new(0, 0);
        ScenarioConfig {
            grid: GridMap::new(40.0, 40.0, 10.0, []).expect("reference grid"),
            stations: StationLayout { cs_cell: corner, charge_rate_j_per_s: 9.24, bs_cell: corner, charging_enabled: true },
            fleet: FleetSpec { count: robots, b_max_j: 5000.0, start_cell: corner },
            energy: EnergyModel { delta_t_s: 10.0, p_rx_w: 4.0, p_sen_w: 12.0, move_alpha_w: 0.29, move_beta: 7.4 },
            radio: RadioModel {
                tx_power_dbm: 20.0,
                rx_gain_db: -20.0,
                noise_dbm: -104.0,
                carrier_hz: 3.5e9,
                tx_energy_table: default_tx_table(),
            },
            horizon_epochs: 15,
            mode: Mode::Oros,
            options: DynamicsOptions::default(),
        }
    }

    /// Replaces the grid keeping every other field; re-validates.
    pub fn with_grid(mut self, width_m: f64, height_m: f64, blocked: impl IntoIterator<Item = Edge>) -> Result<Self, ScenarioError> {
        self.grid = GridMap::new(width_m, height_m, self.grid.cell_m(), blocked)?;
        self.validate()?;
        Ok(self)
    }

    pub fn cell_count(&self) -> usize {
        self.grid.cell_count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const TABLE_II: &str = "\
# reference setup
grid.width_m = 40
grid.height_m = 40
grid.cell_m = 10
grid.blocked_edges =
stations.cs_cell = 0,0
stations.charge_rate_j_per_s = 9.24
stations.bs_cell = 0,0
fleet.count = 3
fleet.b_max_j = 5000
fleet.start_cell = 0,0
energy.delta_t_s = 10
energy.p_rx_w = 4
energy.p_sen_w = 12
energy.move_alpha_w = 0.29
energy.move_beta = 7.4
radio.tx_power_dbm = 20
radio.rx_gain_db = -20
radio.noise_dbm = -104
radio.carrier_hz = 3.5e9
radio.tx_energy_table = 45:0.5;0:55
horizon_epochs = 15
mode = OROS
";

    #[test]
    fn loads_reference_file() {
        let c = ScenarioConfig::load(TABLE_II).unwrap();
        assert_eq!((c.grid.cols(), c.grid.rows(), c.cell_count()), (4, 4, 16));
        assert_eq!(c.horizon_epochs, 15);
        assert_eq!(c.fleet.b_max_j, 5000.0);
        assert_eq!(c.stations.charge_rate_j_per_s, 9.24);
        assert_eq!((c.energy.p_rx_w, c.energy.p_sen_w), (4.0, 12.0));
        assert_eq!(c, ScenarioConfig::reference(3));
    }

    #[test]
    fn single_cell_grid() {
        let text = TABLE_II
            .replace("grid.width_m = 40", "grid.width_m = 10")
            .replace("grid.height_m = 40", "grid.height_m = 10")
            .replace("fleet.count = 3", "fleet.count = 1")
            .replace("horizon_epochs = 15", "horizon_epochs = 1");
        let c = ScenarioConfig::load(&text).unwrap();
        assert_eq!((c.grid.cols(), c.grid.rows()), (1, 1));
    }

    #[test]
    fn isolated_corner_is_unreachable() {
        let text = TABLE_II.replace("grid.blocked_edges =", "grid.blocked_edges = 3,3-2,3; 3,3-3,2; 3,3-2,2");
        let err = ScenarioConfig::load(&text).unwrap_err();
        assert_eq!(err, ScenarioError::Grid(GridError::Unreachable(Cell::new(3, 3))));
    }

    #[test]
    fn schema_errors_name_the_key() {
        let err = ScenarioConfig::load(&TABLE_II.replace("fleet.b_max_j = 5000\n", "")).unwrap_err();
        assert_eq!(err, ScenarioError::MissingKey("fleet.b_max_j"));
        let err = ScenarioConfig::load(&format!("{TABLE_II}fleet.colour = red\n")).unwrap_err();
        assert!(matches!(err, ScenarioError::UnknownKey { ref key, .. } if key == "fleet.colour"));
        let err = ScenarioConfig::load(&TABLE_II.replace("fleet.count = 3", "fleet.count = three")).unwrap_err();
        assert!(matches!(err, ScenarioError::InvalidValue { ref key, .. } if key == "fleet.count"));
        let err = ScenarioConfig::load(&TABLE_II.replace("mode = OROS", "mode OROS")).unwrap_err();
        assert!(matches!(err, ScenarioError::Syntax { line: 23, .. }));
    }

    #[test]
    fn invariant_errors() {
        let err = ScenarioConfig::load(&TABLE_II.replace("fleet.count = 3", "fleet.count = 0")).unwrap_err();
        assert!(matches!(err, ScenarioError::Invariant(ref m) if m.contains("fleet.count")));
        let err = ScenarioConfig::load(&TABLE_II.replace("energy.p_sen_w = 12", "energy.p_sen_w = 0")).unwrap_err();
        assert!(matches!(err, ScenarioError::Invariant(_)));
        let err = ScenarioConfig::load(&TABLE_II.replace("45:0.5;0:55", "0:0.5;45:55")).unwrap_err();
        assert!(matches!(err, ScenarioError::Invariant(ref m) if m.contains("decreasing")));
        let err = ScenarioConfig::load(&TABLE_II.replace("stations.bs_cell = 0,0", "stations.bs_cell = 4,0")).unwrap_err();
        assert!(matches!(err, ScenarioError::Invariant(ref m) if m.contains("bs_cell")));
    }

    #[test]
    fn velocity_and_move_energy() {
        let c = ScenarioConfig::reference(1);
        assert_eq!(c.terrain_velocity(Cell::new(2, 2), Cell::new(2, 2)).unwrap(), 0.0);
        assert_relative_eq!(c.terrain_velocity(Cell::new(0, 0), Cell::new(1, 1)).unwrap(), 1.41421, epsilon = 1e-5);
        assert_relative_eq!(c.move_energy(Cell::new(0, 0), Cell::new(0, 1)).unwrap(), 76.9, epsilon = 1e-9);
        assert_relative_eq!(c.move_energy(Cell::new(1, 1), Cell::new(1, 1)).unwrap(), 2.9, epsilon = 1e-9);
        assert_relative_eq!(c.move_energy(Cell::new(0, 0), Cell::new(1, 1)).unwrap(), 107.55, epsilon = 0.01);
        assert!(matches!(
            c.terrain_velocity(Cell::new(0, 0), Cell::new(2, 0)),
            Err(ScenarioError::NonAdjacent { .. })
        ));
        let blocked = c.with_grid(40.0, 40.0, [(Cell::new(0, 0), Cell::new(0, 1))]).unwrap();
        assert!(blocked.terrain_velocity(Cell::new(0, 0), Cell::new(0, 1)).unwrap().is_infinite());
        assert!(blocked.move_energy(Cell::new(0, 1), Cell::new(0, 0)).unwrap().is_infinite());
    }

    #[test]
    fn tx_energy_single_row_and_default_corner() {
        let mut c = ScenarioConfig::reference(1);
        c.radio.tx_energy_table = vec![TxRow { snr_threshold_db: f64::NEG_INFINITY, tx_power_w: 2.0 }];
        assert_eq!(c.tx_energy(Cell::new(0, 0)).unwrap(), 20.0);

        // farthest corner: centre distance sqrt(30^2 + 30^2) m
        let c = ScenarioConfig::reference(1);
        let d = (30f64 * 30.0 * 2.0).sqrt();
        let snr = 20.0 - 20.0 - (20.0 * d.log10() + 20.0 * 3.5e9f64.log10() - 147.55) + 104.0;
        let row = DEFAULT_TX_TABLE.iter().find(|(t, _)| *t <= snr).unwrap();
        assert_relative_eq!(c.tx_energy(Cell::new(3, 3)).unwrap(), row.1 * 10.0);
    }

    #[test]
    fn tx_energy_outage() {
        let mut c = ScenarioConfig::reference(1);
        c.radio.tx_energy_table = vec![TxRow { snr_threshold_db: 45.0, tx_power_w: 2.0 }];
        assert!(c.tx_energy(Cell::new(0, 0)).is_ok());
        assert!(matches!(c.tx_energy(Cell::new(3, 3)), Err(ScenarioError::LinkOutage { .. })));
    }

    #[test]
    fn serialize_roundtrip_and_digest() {
        let c = ScenarioConfig::load(TABLE_II).unwrap();
        let again = ScenarioConfig::load(&c.serialize()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.digest(), again.digest());
        let mut other = c.clone();
        other.mode = Mode::Slam;
        assert_ne!(c.digest(), other.digest());
    }
}
