use std::fmt::Write as _;
use std::ops::Range;

use super::HarnessError;
use crate::dataset::VertexSet;
use crate::graph::GuidePath;
use crate::simenv::MazeGrid;

const CELL: f64 = 12.0;
const LEGEND_WIDTH: f64 = 150.0;
const VIRIDIS: [(u8, u8, u8); 5] = [
    (0x44, 0x01, 0x54),
    (0x3b, 0x52, 0x8b),
    (0x21, 0x91, 0x8c),
    (0x5e, 0xc9, 0x62),
    (0xfd, 0xe7, 0x25),
];

fn color(t: f64) -> String {
    let t = t.clamp(0.0, 1.0) * (VIRIDIS.len() - 1) as f64;
    let i = (t.floor() as usize).min(VIRIDIS.len() - 2);
    let f = t - i as f64;
    let (a, b) = (VIRIDIS[i], VIRIDIS[i + 1]);
    let mix = |x: u8, y: u8| (f64::from(x) + f * (f64::from(y) - f64::from(x))).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

fn position(state: &[f32], slice: &Range<usize>) -> (f64, f64) {
    let p = &state[slice.clone()];
    ((f64::from(p[0]) + 0.5) * CELL, (f64::from(p[1]) + 0.5) * CELL)
}

/// Resolves the 2-D position slice for plotting.
pub(crate) fn plot_slice(state_dim: usize, slice: Option<Range<usize>>) -> Result<Range<usize>, HarnessError> {
    match slice {
        Some(s) if s.len() == 2 && s.end <= state_dim => Ok(s),
        Some(s) => Err(HarnessError::Config(format!(
            "position slice {s:?} is not a 2-D slice of {state_dim}-dimensional states"
        ))),
        None if state_dim == 2 => Ok(0..2),
        None => Err(HarnessError::Config(format!(
            "{state_dim}-dimensional states need a 2-D position_slice to plot"
        ))),
    }
}

/// Renders maze walls, vertices colored by predicted distance to the goal,
/// the guide path and start/goal markers as an SVG 1.1 document.
pub fn render_svg(
    maze: &MazeGrid,
    vertices: &VertexSet,
    slice: Range<usize>,
    distances: &[f64],
    guide: &GuidePath,
    start: &[f32],
    goal: &[f32],
) -> String {
    assert_eq!(distances.len(), vertices.len(), "one distance per vertex");
    let (w, h) = (maze.width() as f64 * CELL, maze.height() as f64 * CELL);
    let total_w = w + LEGEND_WIDTH;
    let total_h = h.max(220.0);
    let mut s = String::new();
    writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{total_w:.0}" height="{total_h:.0}" viewBox="0 0 {total_w:.0} {total_h:.0}">"#
    )
    .unwrap();
    writeln!(s, r##"<rect x="0" y="0" width="{total_w:.0}" height="{total_h:.0}" fill="#ffffff"/>"##).unwrap();

    // Walls, merged into horizontal runs.
    writeln!(s, r##"<g id="walls" fill="#3a3a3a">"##).unwrap();
    for y in 0..maze.height() as i32 {
        let mut x = 0;
        while x < maze.width() as i32 {
            if maze.is_wall(x, y) {
                let x0 = x;
                while x < maze.width() as i32 && maze.is_wall(x, y) {
                    x += 1;
                }
                writeln!(
                    s,
                    r#"<rect x="{:.0}" y="{:.0}" width="{:.0}" height="{CELL:.0}"/>"#,
                    f64::from(x0) * CELL,
                    f64::from(y) * CELL,
                    f64::from(x - x0) * CELL
                )
                .unwrap();
            } else {
                x += 1;
            }
        }
    }
    writeln!(s, "</g>").unwrap();

    let (lo, hi) = distances
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &d| (a.min(d), b.max(d)));
    let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (0.0, 0.0) };
    let span = if hi > lo { hi - lo } else { 1.0 };
    writeln!(s, r#"<g id="vertices" stroke="none">"#).unwrap();
    for (v, &d) in vertices.vertices().iter().zip(distances) {
        let (cx, cy) = position(v, &slice);
        writeln!(s, r#"<circle cx="{cx:.1}" cy="{cy:.1}" r="3" fill="{}"/>"#, color((d - lo) / span)).unwrap();
    }
    writeln!(s, "</g>").unwrap();

    let mut points = vec![position(start, &slice)];
    points.extend(guide.waypoint_states.iter().map(|p| position(p, &slice)));
    points.push(position(goal, &slice));
    let path: Vec<String> = points.iter().map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
    writeln!(
        s,
        r##"<polyline id="guide" points="{}" fill="none" stroke="#e4572e" stroke-width="2" stroke-linejoin="round"/>"##,
        path.join(" ")
    )
    .unwrap();
    for (i, p) in guide.waypoint_states.iter().enumerate() {
        let (x, y) = position(p, &slice);
        writeln!(s, r##"<circle class="waypoint" data-index="{i}" cx="{x:.1}" cy="{y:.1}" r="2.5" fill="#e4572e"/>"##).unwrap();
    }
    let (sx, sy) = position(start, &slice);
    let (gx, gy) = position(goal, &slice);
    writeln!(s, r##"<circle id="start" cx="{sx:.1}" cy="{sy:.1}" r="5" fill="#2ca02c" stroke="#ffffff"/>"##).unwrap();
    writeln!(
        s,
        r##"<rect id="goal" x="{:.1}" y="{:.1}" width="10" height="10" fill="#d62728" stroke="#ffffff"/>"##,
        gx - 5.0,
        gy - 5.0
    )
    .unwrap();

    // Legend: vertical gradient from near (bottom) to far (top).
    let lx = w + 20.0;
    writeln!(s, r#"<defs><linearGradient id="dist" x1="0" y1="1" x2="0" y2="0">"#).unwrap();
    for (i, _) in VIRIDIS.iter().enumerate() {
        let t = i as f64 / (VIRIDIS.len() - 1) as f64;
        writeln!(s, r#"<stop offset="{t:.2}" stop-color="{}"/>"#, color(t)).unwrap();
    }
    writeln!(s, "</linearGradient></defs>").unwrap();
    writeln!(s, r##"<g id="legend" font-family="sans-serif" font-size="11" fill="#222222">"##).unwrap();
    writeln!(s, r#"<text x="{lx:.0}" y="20">predicted distance</text>"#).unwrap();
    writeln!(s, r#"<text x="{lx:.0}" y="34">to goal (steps)</text>"#).unwrap();
    writeln!(s, r#"<rect x="{lx:.0}" y="44" width="16" height="140" fill="url(#dist)"/>"#).unwrap();
    for (y, v) in [(52.0, hi), (118.0, (lo + hi) / 2.0), (184.0, lo)] {
        writeln!(s, r#"<text x="{:.0}" y="{y:.0}">{v:.1}</text>"#, lx + 22.0).unwrap();
    }
    writeln!(s, r#"<text x="{lx:.0}" y="204">waypoints: {}</text>"#, guide.len()).unwrap();
    writeln!(s, "</g>").unwrap();
    writeln!(s, "</svg>").unwrap();
    s
}
