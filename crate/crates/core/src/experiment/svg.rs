//! Self-contained SVG rendering of a reward surface with trajectories on top.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 540.0;
const LEFT: f64 = 70.0;
const TOP: f64 = 40.0;
const PLOT_W: f64 = 460.0;
const PLOT_H: f64 = 440.0;
const LEVELS: usize = 12;

const PALETTE: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#e377c2"];
const AGA_RED: &str = "#d62728";

/// Samples of a scalar field on a regular grid; `values[j][i]` sits at
/// `(xs[i], ys[j])`.
#[derive(Clone, Debug)]
pub struct Grid {
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
    pub values: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct Trace {
    pub label: String,
    /// (step, x, y)
    pub points: Vec<(usize, f64, f64)>,
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

// Piecewise-linear approximation of viridis.
fn colormap(t: f64) -> String {
    const STOPS: [(f64, [f64; 3]); 5] = [
        (0.0, [68.0, 1.0, 84.0]),
        (0.25, [59.0, 82.0, 139.0]),
        (0.5, [33.0, 145.0, 140.0]),
        (0.75, [94.0, 201.0, 98.0]),
        (1.0, [253.0, 231.0, 37.0]),
    ];
    let t = t.clamp(0.0, 1.0);
    let k = STOPS.iter().rposition(|(s, _)| *s <= t).unwrap().min(STOPS.len() - 2);
    let (t0, c0) = STOPS[k];
    let (t1, c1) = STOPS[k + 1];
    let u = (t - t0) / (t1 - t0);
    let ch = |i: usize| (c0[i] + u * (c1[i] - c0[i])).round() as u8;
    format!("#{:02x}{:02x}{:02x}", ch(0), ch(1), ch(2))
}

fn trace_color(label: &str, k: usize) -> &'static str {
    if label == "AgA" {
        AGA_RED
    } else {
        PALETTE[k % PALETTE.len()]
    }
}

/// Filled contour (quantized heatmap) plus polylines, markers every
/// `marker_every` steps and a legend.
pub fn render(title: &str, axes: [&str; 2], grid: &Grid, traces: &[Trace], marker_every: usize) -> String {
    let [x0, x1] = grid.x_range;
    let [y0, y1] = grid.y_range;
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * PLOT_W;
    let py = |y: f64| TOP + PLOT_H - (y - y0) / (y1 - y0) * PLOT_H;

    let finite = grid.values.iter().flatten().copied().filter(|v| v.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let level = |v: f64| ((v - lo) / span * LEVELS as f64).floor().min(LEVELS as f64 - 1.0);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<defs><clipPath id="plot-area"><rect x="{LEFT}" y="{TOP}" width="{PLOT_W}" height="{PLOT_H}"/></clipPath></defs>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + PLOT_W / 2.0,
        escape(title)
    );

    let ny = grid.values.len();
    let nx = grid.values.first().map_or(0, Vec::len);
    let (cw, ch) = (PLOT_W / nx.max(1) as f64, PLOT_H / ny.max(1) as f64);
    let _ = writeln!(s, r#"<g shape-rendering="crispEdges">"#);
    for (j, row) in grid.values.iter().enumerate() {
        for (i, &v) in row.iter().enumerate() {
            let fill = if v.is_finite() {
                colormap((level(v) + 0.5) / LEVELS as f64)
            } else {
                "#bbbbbb".to_string()
            };
            // row 0 is the bottom of the plot
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
                LEFT + i as f64 * cw,
                TOP + PLOT_H - (j + 1) as f64 * ch,
                cw + 0.05,
                ch + 0.05
            );
        }
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{PLOT_W}" height="{PLOT_H}" fill="none" stroke="black"/>"#
    );

    for k in 0..=4 {
        let t = k as f64 / 4.0;
        let (xv, yv) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
        let (xp, yp) = (px(xv), py(yv));
        let _ = writeln!(
            s,
            r#"<line x1="{xp:.2}" y1="{:.2}" x2="{xp:.2}" y2="{:.2}" stroke="black"/><text x="{xp:.2}" y="{:.2}" text-anchor="middle">{xv:.3}</text>"#,
            TOP + PLOT_H,
            TOP + PLOT_H + 5.0,
            TOP + PLOT_H + 18.0
        );
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{yp:.2}" x2="{LEFT}" y2="{yp:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{yv:.3}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            yp + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        LEFT + PLOT_W / 2.0,
        TOP + PLOT_H + 38.0,
        escape(axes[0])
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
        TOP + PLOT_H / 2.0,
        TOP + PLOT_H / 2.0,
        escape(axes[1])
    );

    let _ = writeln!(s, r#"<g clip-path="url(#plot-area)">"#);
    for (k, tr) in traces.iter().enumerate() {
        let color = trace_color(&tr.label, k);
        let pts: Vec<String> = tr
            .points
            .iter()
            .filter(|(_, x, y)| x.is_finite() && y.is_finite())
            .map(|&(_, x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        if !pts.is_empty() {
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
                pts.join(" ")
            );
        }
        for &(step, x, y) in &tr.points {
            if marker_every > 0 && step % marker_every == 0 && x.is_finite() && y.is_finite() {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}" stroke="white" stroke-width="0.8"/>"#,
                    px(x),
                    py(y)
                );
            }
        }
    }
    let _ = writeln!(s, "</g>");

    let lx = LEFT + PLOT_W + 20.0;
    let mut ly = TOP + 10.0;
    for (k, tr) in traces.iter().enumerate() {
        let color = trace_color(&tr.label, k);
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><circle cx="{:.1}" cy="{ly:.1}" r="3" fill="{color}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 24.0,
            lx + 12.0,
            lx + 30.0,
            ly + 4.0,
            escape(&tr.label)
        );
        ly += 20.0;
    }

    // colour bar
    let bar_y = TOP + PLOT_H - LEVELS as f64 * 14.0;
    for l in 0..LEVELS {
        let _ = writeln!(
            s,
            r#"<rect x="{lx:.1}" y="{:.1}" width="16" height="14" fill="{}"/>"#,
            bar_y + (LEVELS - 1 - l) as f64 * 14.0,
            colormap((l as f64 + 0.5) / LEVELS as f64)
        );
    }
    if lo.is_finite() {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}">{hi:.3}</text><text x="{:.1}" y="{:.1}">{lo:.3}</text>"#,
            lx + 22.0,
            bar_y + 10.0,
            lx + 22.0,
            TOP + PLOT_H
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn colormap_endpoints() {
        assert_eq!(colormap(0.0), "#440154");
        assert_eq!(colormap(1.0), "#fde725");
        assert_eq!(colormap(2.0), "#fde725");
    }

    #[test]
    fn labels_are_escaped() {
        let grid = Grid {
            x_range: [0.0, 1.0],
            y_range: [0.0, 1.0],
            values: vec![vec![0.0, 1.0], vec![1.0, 2.0]],
        };
        let tr = Trace {
            label: "a<b & c".into(),
            points: vec![(0, 0.5, 0.5)],
        };
        let svg = render("t", ["x", "y"], &grid, &[tr], 10);
        assert!(svg.contains("a&lt;b &amp; c"));
        assert_eq!(svg.matches("<circle").count(), 2);
    }
}
