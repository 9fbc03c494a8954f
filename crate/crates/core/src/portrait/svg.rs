use std::fmt::Write;

use super::{FixedPointClass, PortraitData};
use crate::scalar::Scalar;

const PANEL: f64 = 420.0;
const MARGIN: f64 = 50.0;

struct Panel {
    axes: (usize, usize),
    lo: (f64, f64),
    hi: (f64, f64),
    left: f64,
}

impl Panel {
    fn map(&self, p: &[f64]) -> (f64, f64) {
        let (a, b) = self.axes;
        let x = self.left + MARGIN + (p[a] - self.lo.0) / (self.hi.0 - self.lo.0) * PANEL;
        let y = MARGIN + PANEL - (p[b] - self.lo.1) / (self.hi.1 - self.lo.1) * PANEL;
        (x, y)
    }

    fn polyline(&self, pts: &[Vec<f64>]) -> String {
        pts.iter()
            .map(|p| {
                let (x, y) = self.map(p);
                format!("{x:.2},{y:.2}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn f64s<T: Scalar>(v: &[T]) -> Vec<f64> {
    v.iter().map(|x| x.as_f64()).collect()
}

fn class_style(c: FixedPointClass) -> (&'static str, &'static str) {
    match c {
        FixedPointClass::AttractorNode | FixedPointClass::SpiralAttractor => ("#000000", "#000000"),
        FixedPointClass::RepellerNode | FixedPointClass::SpiralRepeller => ("#ffffff", "#000000"),
        FixedPointClass::Saddle => ("#ff8c00", "#000000"),
        FixedPointClass::NonHyperbolic => ("#8a2be2", "#000000"),
    }
}

/// Standalone SVG: one quiver panel for planar models, three coordinate
/// plane projections for 3-D ones; `None` for other dimensions.
pub fn render_svg<T: Scalar>(data: &PortraitData<T>) -> Option<String> {
    let n = data.variables.len();
    let pairs: Vec<(usize, usize)> = match n {
        2 => vec![(0, 1)],
        3 => vec![(0, 1), (0, 2), (1, 2)],
        _ => return None,
    };
    let lo = f64s(&data.bounds.lower);
    let hi = f64s(&data.bounds.upper);
    let width = pairs.len() as f64 * (PANEL + 2.0 * MARGIN);
    let height = PANEL + 2.0 * MARGIN + 30.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r##"<defs><marker id="head" markerWidth="6" markerHeight="6" refX="5" refY="3" orient="auto"><path d="M0,0 L6,3 L0,6 z" fill="#607080"/></marker></defs>"##
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);

    let per_axis = data.grid.per_axis.max(2) as f64;
    for (k, &(a, b)) in pairs.iter().enumerate() {
        let panel = Panel {
            axes: (a, b),
            lo: (lo[a], lo[b]),
            hi: (hi[a], hi[b]),
            left: k as f64 * (PANEL + 2.0 * MARGIN),
        };
        let (x0, y0) = (panel.left + MARGIN, MARGIN);
        let _ = writeln!(
            s,
            r#"<clipPath id="clip{k}"><rect x="{x0:.2}" y="{y0:.2}" width="{PANEL:.2}" height="{PANEL:.2}"/></clipPath>"#
        );
        let _ = writeln!(
            s,
            r##"<rect x="{x0:.2}" y="{y0:.2}" width="{PANEL:.2}" height="{PANEL:.2}" fill="none" stroke="#000000"/>"##
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            x0 + PANEL / 2.0,
            y0 + PANEL + 35.0,
            data.variables[a]
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" transform="rotate(-90 {:.2} {:.2})">{}</text>"#,
            x0 - 30.0,
            y0 + PANEL / 2.0,
            x0 - 30.0,
            y0 + PANEL / 2.0,
            data.variables[b]
        );
        for (txt, x, y, anchor) in [
            (format!("{}", lo[a]), x0, y0 + PANEL + 15.0, "start"),
            (format!("{}", hi[a]), x0 + PANEL, y0 + PANEL + 15.0, "end"),
            (format!("{}", lo[b]), x0 - 5.0, y0 + PANEL, "end"),
            (format!("{}", hi[b]), x0 - 5.0, y0 + 10.0, "end"),
        ] {
            let _ = writeln!(s, r#"<text x="{x:.2}" y="{y:.2}" text-anchor="{anchor}">{txt}</text>"#);
        }
        let _ = writeln!(s, r#"<g clip-path="url(#clip{k})">"#);

        let arrow = 0.4 * PANEL / per_axis;
        for fs in &data.field_samples {
            let p = f64s(&fs.point);
            let v = f64s(&fs.vector);
            let (start_x, start_y) = panel.map(&p);
            let (dx, dy) = (
                v[a] / (hi[a] - lo[a]),
                v[b] / (hi[b] - lo[b]),
            );
            let len = (dx * dx + dy * dy).sqrt();
            if !(len > 0.0) || !len.is_finite() {
                continue;
            }
            let (ex, ey) = (start_x + arrow * dx / len, start_y - arrow * dy / len);
            let _ = writeln!(
                s,
                r##"<line x1="{start_x:.2}" y1="{start_y:.2}" x2="{ex:.2}" y2="{ey:.2}" stroke="#607080" stroke-width="0.8" marker-end="url(#head)"/>"##
            );
        }
        for t in &data.trajectories {
            let pts: Vec<Vec<f64>> = t.points.iter().map(|p| f64s(p)).collect();
            let _ = writeln!(
                s,
                r##"<polyline points="{}" fill="none" stroke="#909090" stroke-width="1"/>"##,
                panel.polyline(&pts)
            );
        }
        for nc in &data.nullclines {
            let color = if nc.component == 0 { "#1f77b4" } else { "#2ca02c" };
            for seg in &nc.segments {
                let pts: Vec<Vec<f64>> = seg.iter().map(|p| f64s(p)).collect();
                let _ = writeln!(
                    s,
                    r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5" stroke-dasharray="6,3"/>"#,
                    panel.polyline(&pts)
                );
            }
        }
        for sep in &data.separatrices {
            let pts: Vec<Vec<f64>> = sep.points.iter().map(|p| f64s(p)).collect();
            let _ = writeln!(
                s,
                r##"<polyline points="{}" fill="none" stroke="#d62728" stroke-width="2"/>"##,
                panel.polyline(&pts)
            );
        }
        for fp in &data.fixed_points {
            let (fill, stroke) = class_style(fp.class);
            let (cx, cy) = panel.map(&f64s(&fp.location));
            let _ = writeln!(
                s,
                r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="5" fill="{fill}" stroke="{stroke}"><title>{}</title></circle>"#,
                fp.class
            );
        }
        let _ = writeln!(s, "</g>");
    }
    let _ = writeln!(
        s,
        r#"<text x="{MARGIN:.0}" y="{:.0}">filled: attractor, open: repeller, orange: saddle; dashed: nullclines; red: separatrix</text>"#,
        height - 10.0
    );
    s.push_str("</svg>\n");
    Some(s)
}
