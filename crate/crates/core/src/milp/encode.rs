use std::collections::BTreeMap;

use crate::dynamics::Dynamics;
use crate::scenario::{Mode, ScenarioConfig, TxIndex};

use super::{LinearConstraint, MilpError, MilpInstance, Names, Sense, VarKind};

struct Builder {
    variables: BTreeMap<String, VarKind>,
    constraints: Vec<LinearConstraint>,
}

impl Builder {
    fn var(&mut self, name: String, kind: VarKind) -> String {
        let prev = self.variables.insert(name.clone(), kind);
        debug_assert!(prev.is_none(), "duplicate variable {name}");
        name
    }

    fn row<'a>(&mut self, name: String, terms: impl IntoIterator<Item = (&'a str, f64)>, sense: Sense, rhs: f64) {
        let mut merged: BTreeMap<String, f64> = BTreeMap::new();
        for (v, c) in terms {
            *merged.entry(v.to_string()).or_default() += c;
        }
        let terms = merged.into_iter().filter(|(_, c)| *c != 0.0).collect();
        self.constraints.push(LinearConstraint { name, terms, sense, rhs });
    }

    /// `z = x AND y` for binaries, as three inequalities.
    fn and(&mut self, prefix: &str, z: &str, x: (&str, bool), y: (&str, bool)) {
        // a negated input `!v` enters as `1 - v`
        let lit = |(v, neg): (&str, bool)| if neg { (v.to_string(), -1.0, 1.0) } else { (v.to_string(), 1.0, 0.0) };
        let (xv, xc, xk) = lit(x);
        let (yv, yc, yk) = lit(y);
        self.row(format!("{prefix}1{}", &z[prefix.len()..]), [(z, 1.0), (xv.as_str(), -xc)], Sense::Le, xk);
        self.row(format!("{prefix}2{}", &z[prefix.len()..]), [(z, 1.0), (yv.as_str(), -yc)], Sense::Le, yk);
        self.row(
            format!("{prefix}3{}", &z[prefix.len()..]),
            [(z, 1.0), (xv.as_str(), -xc), (yv.as_str(), -yc)],
            Sense::Ge,
            xk + yk - 1.0,
        );
    }
}

/// Linear encoding of the scenario: occupancy `l`, charging `u`,
/// exploration `e` and battery `b` per epoch, plus the linearization
/// auxiliaries. Epochs are 1-based in variable names, robots 1-based, cell
/// coordinates 0-based.
pub fn encode(config: &ScenarioConfig) -> Result<MilpInstance, MilpError> {
    let d = Dynamics::new(config)?;
    let horizon = d.horizon();
    let robots = d.robots();
    let cells: Vec<_> = config.grid.cells().collect();
    let cs = d.cs_index();
    let b_max = d.b_max_mj() as f64;
    let gain = d.charge_gain_mj() as f64;
    let rx = d.rx_mj() as f64;
    let sen = d.sen_mj() as f64;
    let clamp = d.clamp_charge();
    let tx = |i: usize| d.tx_mj(i).map(|v| v as f64);

    let mut m = Builder { variables: BTreeMap::new(), constraints: Vec::new() };
    for t in 1..=horizon {
        for &c in &cells {
            m.var(Names::e(t, c), VarKind::Binary);
        }
        for r in 0..robots {
            for &c in &cells {
                m.var(Names::l(r, t, c), VarKind::Binary);
            }
            m.var(Names::u(r, t), VarKind::Binary);
            m.var(Names::b(r, t), VarKind::Continuous { upper: b_max });
        }
    }

    // objective: explored cells summed over epochs
    let objective = cells.iter().flat_map(|&c| (1..=horizon).map(move |t| (Names::e(t, c), 1.0))).collect::<BTreeMap<_, _>>();

    for t in 1..=horizon {
        let us: Vec<String> = (0..robots).map(|r| Names::u(r, t)).collect();
        m.row(format!("cs_t{t}"), us.iter().map(|u| (u.as_str(), 1.0)), Sense::Le, 1.0);
        for r in 0..robots {
            let u = Names::u(r, t);
            let l_cs = Names::l(r, t, cells[cs]);
            m.row(format!("chgloc_r{}_t{t}", r + 1), [(u.as_str(), 1.0), (l_cs.as_str(), -1.0)], Sense::Le, 0.0);
            if !d.charging_enabled() {
                m.row(format!("nochg_r{}_t{t}", r + 1), [(u.as_str(), 1.0)], Sense::Eq, 0.0);
            }
            let ls: Vec<String> = cells.iter().map(|&c| Names::l(r, t, c)).collect();
            m.row(format!("occ_r{}_t{t}", r + 1), ls.iter().map(|l| (l.as_str(), 1.0)), Sense::Eq, 1.0);
        }
        for (i, &c) in cells.iter().enumerate() {
            let e = Names::e(t, c);
            let ls: Vec<String> = (0..robots).map(|r| Names::l(r, t, c)).collect();
            let prev = (t > 1).then(|| Names::e(t - 1, c));
            let suffix = format!("_t{t}_a{}_b{}", c.a, c.b);
            // explored only if explored before or visited now
            let mut terms = vec![(e.as_str(), 1.0)];
            terms.extend(prev.iter().map(|p| (p.as_str(), -1.0)));
            terms.extend(ls.iter().map(|l| (l.as_str(), -1.0)));
            m.row(format!("eup{suffix}"), terms, Sense::Le, 0.0);
            if let Some(p) = &prev {
                m.row(format!("emono{suffix}"), [(e.as_str(), 1.0), (p.as_str(), -1.0)], Sense::Ge, 0.0);
            }
            let mut terms = vec![(e.as_str(), robots as f64)];
            terms.extend(ls.iter().map(|l| (l.as_str(), -1.0)));
            m.row(format!("evis{suffix}"), terms, Sense::Ge, 0.0);

            if t > 1 {
                for r in 0..robots {
                    let here = Names::l(r, t, c);
                    let sources: Vec<String> = cells
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| d.move_mj(j, i).is_some())
                        .map(|(_, &src)| Names::l(r, t - 1, src))
                        .collect();
                    let mut terms = vec![(here.as_str(), 1.0)];
                    terms.extend(sources.iter().map(|s| (s.as_str(), -1.0)));
                    m.row(format!("mob_r{}{suffix}", r + 1), terms, Sense::Le, 0.0);
                }
            }
        }
    }

    for r in 0..robots {
        let start = Names::l(r, 1, config.fleet.start_cell);
        m.row(format!("init_l_r{}", r + 1), [(start.as_str(), 1.0)], Sense::Eq, 1.0);
        let b1 = Names::b(r, 1);
        m.row(format!("init_b_r{}", r + 1), [(b1.as_str(), 1.0)], Sense::Eq, b_max);

        for t in 1..horizon {
            let (b_now, b_next, u_next) = (Names::b(r, t), Names::b(r, t + 1), Names::u(r, t + 1));
            let mut terms: Vec<(String, f64)> = vec![(b_next.clone(), 1.0), (b_now.clone(), -1.0)];
            if clamp {
                // charge actually received, at most the gain and the free capacity
                let c = m.var(Names::c(r, t + 1), VarKind::Continuous { upper: gain.max(0.0) });
                m.row(format!("clim_r{}_t{}", r + 1, t + 1), [(c.as_str(), 1.0), (u_next.as_str(), -gain)], Sense::Le, 0.0);
                m.row(format!("ccap_r{}_t{}", r + 1, t + 1), [(c.as_str(), 1.0), (b_now.as_str(), 1.0)], Sense::Le, b_max);
                terms.push((c, -1.0));
            } else {
                terms.push((u_next.clone(), -gain));
            }

            for (i, &from) in cells.iter().enumerate() {
                for &(j, move_mj) in d.moves(i) {
                    let to = cells[j];
                    let mv = m.var(Names::mv(r, t, from, to), VarKind::Binary);
                    let (l1, l2) = (Names::l(r, t, from), Names::l(r, t + 1, to));
                    m.and("mv", &mv, (&l1, false), (&l2, false));
                    terms.push((mv, move_mj as f64));
                }
            }

            let rhs = match d.mode() {
                Mode::Oros => {
                    // receive unless charging
                    terms.push((u_next.clone(), -rx));
                    for (i, &c) in cells.iter().enumerate() {
                        let e_now = Names::e(t, c);
                        let w = m.var(Names::w_sen(r, t, c), VarKind::Binary);
                        m.and("w_sen", &w, (&Names::l(r, t + 1, c), false), (&e_now, true));
                        let coef = match config.options.tx_index {
                            TxIndex::AsPrinted => sen,
                            TxIndex::NewCell => sen + tx(i).unwrap_or(0.0),
                        };
                        if config.options.tx_index == TxIndex::NewCell && tx(i).is_none() {
                            m.row(format!("out_{}", &w[2..]), [(w.as_str(), 1.0)], Sense::Le, 0.0);
                        }
                        terms.push((w, coef));
                        if config.options.tx_index == TxIndex::AsPrinted {
                            let w = m.var(Names::w_tx(r, t, c), VarKind::Binary);
                            m.and("w_tx", &w, (&Names::l(r, t, c), false), (&e_now, true));
                            match tx(i) {
                                Some(v) => terms.push((w, v)),
                                None => m.row(format!("out_{}", &w[2..]), [(w.as_str(), 1.0)], Sense::Le, 0.0),
                            }
                        }
                    }
                    -rx
                }
                Mode::Slam => {
                    // receive, sense and uplink from the new cell unless charging;
                    // charging happens only at the station, so (1 - u) * l is linear
                    let tx_cs = tx(cs).unwrap_or(0.0);
                    terms.push((u_next.clone(), -(rx + sen + tx_cs)));
                    for (i, &c) in cells.iter().enumerate() {
                        let l = Names::l(r, t + 1, c);
                        match tx(i) {
                            Some(v) => terms.push((l, v)),
                            None => {
                                let mut out = vec![(l.as_str(), 1.0)];
                                if i == cs {
                                    out.push((u_next.as_str(), -1.0));
                                }
                                m.row(format!("out_r{}_t{}_a{}_b{}", r + 1, t + 1, c.a, c.b), out, Sense::Le, 0.0);
                            }
                        }
                    }
                    -(rx + sen)
                }
            };
            m.row(
                format!("bat_r{}_t{}", r + 1, t + 1),
                terms.iter().map(|(v, c)| (v.as_str(), *c)),
                Sense::Eq,
                rhs,
            );
        }
    }

    let mut constraints = m.constraints;
    constraints.sort_by(|a, b| a.name.cmp(&b.name));
    let instance = MilpInstance {
        name: format!("robex_{}", config.digest()),
        variables: m.variables,
        constraints,
        objective: objective.into_iter().collect(),
    };
    debug_assert!(instance.validate().is_ok());
    Ok(instance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Cell;

    #[test]
    fn reference_counts() {
        let m = encode(&ScenarioConfig::reference(3)).unwrap();
        assert_eq!(m.count_prefix("l_"), 3 * 15 * 16);
        assert_eq!(m.count_prefix("u_"), 3 * 15);
        assert_eq!(m.count_prefix("e_"), 15 * 16);
        assert_eq!(m.count_prefix("b_"), 3 * 15);
        m.validate().unwrap();
        for (name, kind) in &m.variables {
            if name.starts_with("e_") {
                assert_eq!(*kind, VarKind::Binary);
            }
            if name.starts_with("b_") {
                assert_eq!(*kind, VarKind::Continuous { upper: 5_000_000.0 });
            }
        }
    }

    #[test]
    fn corner_has_four_moves_per_epoch() {
        let m = encode(&ScenarioConfig::reference(1)).unwrap();
        for t in 1..15 {
            let prefix = format!("mv_r1_t{t}_a0_b0_");
            assert_eq!(m.variables.keys().filter(|n| n.starts_with(&prefix)).count(), 4);
        }
        let center = m.variables.keys().filter(|n| n.starts_with("mv_r1_t1_a1_b1_")).count();
        assert_eq!(center, 9);
    }

    #[test]
    fn single_cell_two_epochs() {
        let mut c = ScenarioConfig::reference(1).with_grid(10.0, 10.0, []).unwrap();
        c.horizon_epochs = 2;
        let m = encode(&c).unwrap();
        assert_eq!(m.count_prefix("l_"), 2);
        let occ = m.constraints.iter().find(|r| r.name == "occ_r1_t2").unwrap();
        assert_eq!(occ.terms, vec![(Names::l(0, 2, Cell::new(0, 0)), 1.0)]);
        assert_eq!((occ.sense, occ.rhs), (Sense::Eq, 1.0));
        assert_eq!(m.objective.len(), 2);
    }

    #[test]
    fn blocked_edges_drop_move_variables() {
        let c = ScenarioConfig::reference(1).with_grid(20.0, 20.0, [(Cell::new(0, 0), Cell::new(1, 0))]).unwrap();
        let m = encode(&c).unwrap();
        assert!(!m.variables.contains_key(&Names::mv(0, 1, Cell::new(0, 0), Cell::new(1, 0))));
        assert!(m.variables.contains_key(&Names::mv(0, 1, Cell::new(0, 0), Cell::new(0, 1))));
    }

    #[test]
    fn encoding_is_deterministic() {
        let c = ScenarioConfig::reference(2);
        assert_eq!(encode(&c).unwrap(), encode(&c).unwrap());
    }
}
