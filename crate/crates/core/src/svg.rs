//! Minimal SVG rendering of a flow's streamlines, singular points and
//! separatrices.

use crate::topology::{FlowField, PointKind, TopologyReport};
use std::fmt::Write as _;

const W: f64 = 760.0;
const MARGIN: f64 = 24.0;

struct Mapper {
    l: f64,
    sx: f64,
    sy: f64,
}

impl Mapper {
    fn new(l: f64) -> Self {
        let sx = (W - 2.0 * MARGIN) / l;
        Mapper { l, sx, sy: sx }
    }
    fn h(&self) -> f64 {
        self.sy + 2.0 * MARGIN
    }
    fn x(&self, x1: f64) -> f64 {
        MARGIN + x1 * self.sx
    }
    fn y(&self, x2: f64) -> f64 {
        MARGIN + (1.0 - x2) * self.sy
    }
    /// Split a polyline where it wraps through the periodic seam.
    fn polyline_paths(&self, pts: &[[f64; 2]]) -> Vec<String> {
        let mut paths = Vec::new();
        let mut cur = String::new();
        let mut prev: Option<[f64; 2]> = None;
        for &p in pts {
            let jump = prev.map(|q| (p[0] - q[0]).abs() > self.l / 2.0).unwrap_or(false);
            if cur.is_empty() || jump {
                if !cur.is_empty() {
                    paths.push(cur.clone());
                }
                cur = format!("M {:.2} {:.2}", self.x(p[0]), self.y(p[1]));
            } else {
                let _ = write!(cur, " L {:.2} {:.2}", self.x(p[0]), self.y(p[1]));
            }
            prev = Some(p);
        }
        if !cur.is_empty() {
            paths.push(cur);
        }
        paths
    }
}

/// Render streamlines plus the report's singular points and separatrices.
pub fn render_flow_svg(field: &dyn FlowField, report: &TopologyReport) -> String {
    let l = field.period();
    let map = Mapper::new(l);
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{:.0}\" viewBox=\"0 0 {W} {:.0}\">",
        map.h(),
        map.h()
    );
    let _ = writeln!(
        s,
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"white\" stroke=\"black\" stroke-width=\"1.2\"/>",
        W - 2.0 * MARGIN,
        map.sy
    );

    // background streamlines from a seed grid
    for i in 0..12 {
        for j in 1..6 {
            let start = [l * (i as f64 + 0.5) / 12.0, j as f64 / 6.0];
            for forward in [true, false] {
                let line = crate::topology::streamline(field, start, 0.9 * l, forward);
                if line.len() < 4 {
                    continue;
                }
                for path in map.polyline_paths(&line) {
                    let _ = writeln!(
                        s,
                        "<path d=\"{path}\" fill=\"none\" stroke=\"#9db4c8\" stroke-width=\"0.7\"/>"
                    );
                }
            }
        }
    }

    // separatrices
    for e in &report.graph.edges {
        let color = if e.cross_channel { "#c22" } else { "#825" }.to_string();
        let dash = if e.resolved { "" } else { " stroke-dasharray=\"4 3\"" };
        for path in map.polyline_paths(&e.polyline) {
            let _ = writeln!(
                s,
                "<path d=\"{path}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"{dash}/>"
            );
        }
    }

    // singular points
    for p in &report.points {
        let (cx, cy) = (map.x(p.location[0]), map.y(p.location[1]));
        match p.kind {
            PointKind::Center => {
                let _ = writeln!(
                    s,
                    "<circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"4\" fill=\"#265\" />"
                );
            }
            PointKind::InteriorSaddle => {
                let _ = writeln!(
                    s,
                    "<path d=\"M {x0:.2} {y0:.2} L {x1:.2} {y1:.2} M {x0:.2} {y1:.2} L {x1:.2} {y0:.2}\" stroke=\"#c22\" stroke-width=\"2\"/>",
                    x0 = cx - 4.0, y0 = cy - 4.0, x1 = cx + 4.0, y1 = cy + 4.0
                );
            }
            PointKind::BoundarySaddle => {
                let _ = writeln!(
                    s,
                    "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"8\" height=\"8\" fill=\"#d80\"/>",
                    cx - 4.0,
                    cy - 4.0
                );
            }
            PointKind::Degenerate => {
                let _ = writeln!(
                    s,
                    "<circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"4\" fill=\"none\" stroke=\"#888\"/>"
                );
            }
        }
    }
    let _ = writeln!(
        s,
        "<text x=\"{MARGIN}\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"12\">regime: {:?}   mean flow: {:+.3e}   D-regular: {}</text>",
        map.h() - 6.0,
        report.regime,
        report.mean_flow,
        report.d_regular
    );
    let _ = writeln!(s, "</svg>");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bc::{BcTag, BoundaryCondition};
    use crate::topology::{classify_regime, AnalyticField, TopologyOptions};
    use std::f64::consts::PI;

    #[test]
    fn svg_contains_expected_elements() {
        let l = 2.83;
        let a = 2.0 * PI / l;
        let f = AnalyticField {
            period: l,
            velocity: move |x1: f64, x2: f64| {
                [
                    (a * x1).cos() * PI * (PI * x2).cos(),
                    a * (a * x1).sin() * (PI * x2).sin(),
                ]
            },
        };
        let bc = BoundaryCondition::new(BcTag::FreeFree);
        let report = classify_regime(&f, bc, &TopologyOptions::default()).unwrap();
        let svg = render_flow_svg(&f, &report);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("</svg>"));
        assert!(svg.contains("circle"), "centers should be drawn");
    }
}
