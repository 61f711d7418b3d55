//! Locomotion and radio energy models, generic over the floating-point type.
//!
//! The scenario layer instantiates these with `f64` (see the aliases at the
//! crate root); everything here also works with `f32`.

use num_traits::Float;

use crate::grid::{Cell, GridMap};

/// Path-loss constant of the free-space formula with `d` in metres and `f`
/// in hertz.
const FSPL_CONSTANT_DB: f64 = 147.55;

fn lit<S: Float>(v: f64) -> S {
    S::from(v).expect("literal representable in scalar type")
}

/// Terrain-velocity constant between two cells: 0 for staying put, 1 for an
/// orthogonal move, sqrt(2) for a diagonal move and +inf across a blocked edge.
///
/// Returns `None` when the cells are not neighbours.
pub fn terrain_velocity<S: Float>(grid: &GridMap, from: Cell, to: Cell) -> Option<S> {
    if !grid.contains(from) || !grid.contains(to) || !from.is_adjacent_or_same(to) {
        return None;
    }
    if from == to {
        return Some(S::zero());
    }
    if grid.is_blocked(from, to) {
        return Some(S::infinity());
    }
    let (da, db) = from.delta(to);
    if da != 0 && db != 0 {
        Some(lit::<S>(2.0).sqrt())
    } else {
        Some(S::one())
    }
}

/// Per-epoch energy parameters. Powers are in watts, `delta_t_s` in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyModel<S> {
    pub delta_t_s: S,
    pub p_rx_w: S,
    pub p_sen_w: S,
    pub move_alpha_w: S,
    pub move_beta: S,
}

impl<S: Float> EnergyModel<S> {
    /// Locomotion power `alpha + beta * m` in watts.
    pub fn locomotion_power(&self, velocity: S) -> S {
        self.move_alpha_w + self.move_beta * velocity
    }

    /// Locomotion energy over one epoch in joules. Infinite velocity gives
    /// infinite energy.
    pub fn move_energy_j(&self, velocity: S) -> S {
        self.locomotion_power(velocity) * self.delta_t_s
    }

    pub fn rx_energy_j(&self) -> S {
        self.p_rx_w * self.delta_t_s
    }

    pub fn sen_energy_j(&self) -> S {
        self.p_sen_w * self.delta_t_s
    }

    pub fn is_valid(&self) -> bool {
        [self.delta_t_s, self.p_rx_w, self.p_sen_w, self.move_alpha_w, self.move_beta]
            .iter()
            .all(|v| v.is_finite() && *v > S::zero())
    }
}

/// One row of the transmit-energy table: the row applies when the SNR is at
/// least `snr_threshold_db`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TxRow<S> {
    pub snr_threshold_db: S,
    pub tx_power_w: S,
}

/// Link budget and the SNR-indexed transmit power table.
#[derive(Debug, Clone, PartialEq)]
pub struct RadioModel<S> {
    pub tx_power_dbm: S,
    pub rx_gain_db: S,
    pub noise_dbm: S,
    pub carrier_hz: S,
    /// Rows ordered by strictly decreasing SNR threshold.
    pub tx_energy_table: Vec<TxRow<S>>,
}

impl<S: Float> RadioModel<S> {
    /// Free-space path loss in dB at distance `d_m` metres.
    pub fn path_loss_db(&self, d_m: S) -> S {
        let twenty = lit::<S>(20.0);
        twenty * d_m.log10() + twenty * self.carrier_hz.log10() - lit(FSPL_CONSTANT_DB)
    }

    pub fn snr_db(&self, d_m: S) -> S {
        self.tx_power_dbm + self.rx_gain_db - self.path_loss_db(d_m) - self.noise_dbm
    }

    /// First table row whose threshold is at or below `snr_db`, or `None` when
    /// the SNR is below every threshold (link outage).
    pub fn select_row(&self, snr_db: S) -> Option<&TxRow<S>> {
        self.tx_energy_table.iter().find(|row| row.snr_threshold_db <= snr_db)
    }

    /// Checks the table shape: non-empty, thresholds strictly decreasing and
    /// powers non-increasing as SNR improves. Returns a description of the
    /// first problem found.
    pub fn table_problem(&self) -> Option<String> {
        if self.tx_energy_table.is_empty() {
            return Some("tx_energy_table must not be empty".into());
        }
        for row in &self.tx_energy_table {
            if row.snr_threshold_db.is_nan() || !(row.tx_power_w >= S::zero()) || !row.tx_power_w.is_finite() {
                return Some("tx_energy_table rows need a threshold and a finite non-negative power".into());
            }
        }
        for pair in self.tx_energy_table.windows(2) {
            if !(pair[1].snr_threshold_db < pair[0].snr_threshold_db) {
                return Some("tx_energy_table thresholds must be strictly decreasing".into());
            }
            if pair[1].tx_power_w < pair[0].tx_power_w {
                return Some("tx_energy_table power must not decrease as SNR worsens".into());
            }
        }
        None
    }
}

/// Euclidean distance between cell centres, clamped below at half a cell so
/// that the serving cell itself has a finite path loss.
pub fn link_distance_m<S: Float>(grid: &GridMap, cell: Cell, bs: Cell) -> S {
    let (x0, y0) = grid.center(cell);
    let (x1, y1) = grid.center(bs);
    let d = lit::<S>(x1 - x0).hypot(lit(y1 - y0));
    d.max(lit::<S>(grid.cell_m() / 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn table_ii_energy<S: Float>() -> EnergyModel<S> {
        EnergyModel {
            delta_t_s: lit(10.0),
            p_rx_w: lit(4.0),
            p_sen_w: lit(12.0),
            move_alpha_w: lit(0.29),
            move_beta: lit(7.4),
        }
    }

    fn radio<S: Float>() -> RadioModel<S> {
        RadioModel {
            tx_power_dbm: lit(20.0),
            rx_gain_db: lit(-20.0),
            noise_dbm: lit(-104.0),
            carrier_hz: lit(3.5e9),
            tx_energy_table: vec![TxRow { snr_threshold_db: S::neg_infinity(), tx_power_w: lit(2.0) }],
        }
    }

    #[test]
    fn move_energy_matches_hand_values() {
        let e = table_ii_energy::<f64>();
        assert_relative_eq!(e.move_energy_j(1.0), 76.9, epsilon = 1e-9);
        assert_relative_eq!(e.move_energy_j(0.0), 2.9, epsilon = 1e-12);
        assert_relative_eq!(e.move_energy_j(2f64.sqrt()), 107.551_803_6, epsilon = 1e-6);
        assert!(e.move_energy_j(f64::INFINITY).is_infinite());

        let e32 = table_ii_energy::<f32>();
        assert_relative_eq!(e32.move_energy_j(1.0), 76.9, epsilon = 1e-4);
    }

    #[test]
    fn link_budget_at_ten_metres() {
        // 20 log10(10) + 20 log10(3.5e9) - 147.55
        let expected_pl = 20.0 + 20.0 * 3.5e9f64.log10() - 147.55;
        let r = radio::<f64>();
        assert_relative_eq!(r.path_loss_db(10.0), expected_pl, epsilon = 1e-9);
        assert_relative_eq!(r.path_loss_db(10.0), 63.33, epsilon = 0.01);
        assert_relative_eq!(r.snr_db(10.0), 40.67, epsilon = 0.01);
        assert_relative_eq!(radio::<f32>().snr_db(10.0), 40.67, epsilon = 0.01);
    }

    #[test]
    fn velocity_cases() {
        let g = GridMap::new(40.0, 40.0, 10.0, [(Cell::new(0, 0), Cell::new(0, 1))]).unwrap();
        assert_eq!(terrain_velocity::<f64>(&g, Cell::new(2, 2), Cell::new(2, 2)), Some(0.0));
        assert_eq!(terrain_velocity::<f64>(&g, Cell::new(0, 0), Cell::new(1, 1)), Some(2f64.sqrt()));
        assert_eq!(terrain_velocity::<f64>(&g, Cell::new(0, 0), Cell::new(0, 1)), Some(f64::INFINITY));
        assert_eq!(terrain_velocity::<f64>(&g, Cell::new(0, 0), Cell::new(0, 2)), None);
    }

    #[test]
    fn table_shape_checks() {
        let mut r = radio::<f64>();
        assert!(r.table_problem().is_none());
        r.tx_energy_table = vec![
            TxRow { snr_threshold_db: 10.0, tx_power_w: 3.0 },
            TxRow { snr_threshold_db: 20.0, tx_power_w: 2.0 },
        ];
        assert!(r.table_problem().is_some());
        r.tx_energy_table = vec![
            TxRow { snr_threshold_db: 20.0, tx_power_w: 3.0 },
            TxRow { snr_threshold_db: 10.0, tx_power_w: 2.0 },
        ];
        assert!(r.table_problem().is_some());
        r.tx_energy_table.clear();
        assert!(r.table_problem().is_some());
    }
}
