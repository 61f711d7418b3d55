//! Static SVG charts: grouped bars for sweep CSVs, a step line for traces.

use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlotError {
    #[error("CSV has no data rows")]
    Empty,
    #[error("unrecognized CSV header `{0}`")]
    UnknownHeader(String),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;
const COLORS: [&str; 4] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728"];

/// Renders a sweep CSV as grouped bars of explored fraction per value and
/// mode, or a trace CSV as explored cells over epochs.
pub fn plot_svg(csv: &str) -> Result<String, PlotError> {
    let mut lines = csv.lines();
    let header = lines.next().ok_or(PlotError::Empty)?;
    let rows: Vec<(usize, Vec<&str>)> = lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 2, l.split(',').collect()))
        .collect();
    if rows.is_empty() {
        return Err(PlotError::Empty);
    }
    let columns: Vec<&str> = header.split(',').collect();
    let col = |name: &str| columns.iter().position(|c| *c == name);
    if let (Some(v), Some(m), Some(f)) = (col("swept_value"), col("mode"), col("explored_fraction")) {
        bars(&rows, v, m, f, columns.len())
    } else if let (Some(e), Some(x)) = (col("epoch"), col("explored_total")) {
        steps(&rows, e, x, columns.len())
    } else {
        Err(PlotError::UnknownHeader(header.to_string()))
    }
}

fn field<'a>(row: &(usize, Vec<&'a str>), i: usize, width: usize) -> Result<&'a str, PlotError> {
    if row.1.len() != width {
        return Err(PlotError::Malformed { line: row.0, message: format!("expected {width} fields, found {}", row.1.len()) });
    }
    Ok(row.1[i])
}

fn number(row: &(usize, Vec<&str>), i: usize, width: usize) -> Result<f64, PlotError> {
    let s = field(row, i, width)?;
    s.parse().map_err(|_| PlotError::Malformed { line: row.0, message: format!("`{s}` is not a number") })
}

fn frame(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#);
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{title}</text>"#, WIDTH / 2.0);
    let (x0, y0, x1) = (MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{MARGIN}" stroke="black"/>"#);
    s
}

fn bars(rows: &[(usize, Vec<&str>)], v: usize, m: usize, f: usize, width: usize) -> Result<String, PlotError> {
    // group label -> mode -> fraction, in first-seen order of groups
    let mut groups: Vec<(String, BTreeMap<String, f64>)> = Vec::new();
    let mut modes: Vec<String> = Vec::new();
    for row in rows {
        let value = field(row, v, width)?.to_string();
        let mode = field(row, m, width)?.to_string();
        let frac = number(row, f, width)?;
        if !modes.contains(&mode) {
            modes.push(mode.clone());
        }
        match groups.iter_mut().find(|g| g.0 == value) {
            Some(g) => {
                g.1.insert(mode, frac);
            }
            None => groups.push((value, BTreeMap::from([(mode, frac)]))),
        }
    }
    let mut s = frame("Explored fraction");
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let group_w = plot_w / groups.len() as f64;
    let bar_w = group_w * 0.8 / modes.len() as f64;
    for (gi, (label, by_mode)) in groups.iter().enumerate() {
        let gx = MARGIN + gi as f64 * group_w + group_w * 0.1;
        for (mi, mode) in modes.iter().enumerate() {
            let Some(frac) = by_mode.get(mode) else { continue };
            let h = frac.clamp(0.0, 1.0) * plot_h;
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                gx + mi as f64 * bar_w,
                HEIGHT - MARGIN - h,
                bar_w,
                h,
                COLORS[mi % COLORS.len()]
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">{label}</text>"#,
            gx + group_w * 0.4,
            HEIGHT - MARGIN + 16.0
        );
    }
    for (mi, mode) in modes.iter().enumerate() {
        let y = MARGIN + 14.0 * mi as f64;
        let _ = writeln!(s, r#"<rect x="{}" y="{}" width="10" height="10" fill="{}"/>"#, WIDTH - MARGIN - 60.0, y, COLORS[mi % COLORS.len()]);
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11">{mode}</text>"#, WIDTH - MARGIN - 45.0, y + 9.0);
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn steps(rows: &[(usize, Vec<&str>)], e: usize, x: usize, width: usize) -> Result<String, PlotError> {
    let mut per_epoch: BTreeMap<u64, f64> = BTreeMap::new();
    for row in rows {
        let epoch = number(row, e, width)?;
        per_epoch.insert(epoch as u64, number(row, x, width)?);
    }
    let max_epoch = *per_epoch.keys().last().expect("non-empty") as f64;
    let max_count = per_epoch.values().cloned().fold(1.0, f64::max);
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let px = |t: f64| MARGIN + (t - 1.0) / max_epoch.max(1.0) * plot_w;
    let py = |c: f64| HEIGHT - MARGIN - c / max_count * plot_h;
    let mut points = Vec::new();
    for (i, (&t, &c)) in per_epoch.iter().enumerate() {
        if i > 0 {
            points.push(format!("{:.2},{:.2}", px(t as f64), py(points_last(&per_epoch, t))));
        }
        points.push(format!("{:.2},{:.2}", px(t as f64), py(c)));
    }
    let last = *per_epoch.iter().last().expect("non-empty").1;
    points.push(format!("{:.2},{:.2}", px(max_epoch + 1.0), py(last)));
    let mut s = frame("Explored cells over epochs");
    let _ = writeln!(s, r#"<polyline fill="none" stroke="{}" stroke-width="2" points="{}"/>"#, COLORS[0], points.join(" "));
    s.push_str("</svg>\n");
    Ok(s)
}

/// Value at the epoch before `t`.
fn points_last(per_epoch: &BTreeMap<u64, f64>, t: u64) -> f64 {
    per_epoch.range(..t).next_back().map_or(0.0, |(_, &c)| c)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SWEEP: &str = "\
digest,mode,swept_key,swept_value,explored_fraction,completion_epoch,objective,battery_r1_j,battery_r2_j,battery_r3_j,status
d,OROS,fleet.count,1,0.3750,6,75,1.00,,,optimal
d,SLAM,fleet.count,1,0.3125,5,65,1.00,,,optimal
d,OROS,fleet.count,2,0.6875,6,135,1.00,1.00,,optimal
d,SLAM,fleet.count,2,0.5000,5,104,1.00,1.00,,optimal
d,OROS,fleet.count,3,1.0000,6,195,1.00,1.00,1.00,optimal
d,SLAM,fleet.count,3,0.5625,4,120,1.00,1.00,1.00,optimal
";

    #[test]
    fn sweep_becomes_grouped_bars() {
        let svg = plot_svg(SWEEP).unwrap();
        assert_eq!(svg.matches("<rect x=").count(), 3 * 2 + 2);
        assert_eq!(svg, plot_svg(SWEEP).unwrap());
    }

    #[test]
    fn trace_becomes_a_monotone_step_line() {
        let trace = "epoch,robot,a,b,battery_j,charging,move_j,rx_j,tx_j,sen_j,charge_j,explored_total\n\
1,1,0,0,5000.00,0,0.00,0.00,0.00,0.00,0.00,1\n\
2,1,0,1,4000.00,0,0.00,0.00,0.00,0.00,0.00,2\n\
3,1,0,1,3000.00,0,0.00,0.00,0.00,0.00,0.00,2\n";
        let svg = plot_svg(trace).unwrap();
        let points = svg.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
        let ys: Vec<f64> = points.split(' ').map(|p| p.split(',').nth(1).unwrap().parse().unwrap()).collect();
        // screen y shrinks as the count grows
        assert!(ys.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn empty_or_unknown_input_is_rejected() {
        assert_eq!(plot_svg(""), Err(PlotError::Empty));
        assert_eq!(plot_svg(SWEEP.lines().next().unwrap()), Err(PlotError::Empty));
        assert!(matches!(plot_svg("x,y\n1,2\n"), Err(PlotError::UnknownHeader(_))));
        assert!(matches!(plot_svg(&SWEEP.replace("0.3750", "abc")), Err(PlotError::Malformed { .. })));
    }
}
