//! SVG heatmaps for class-pair matrices.
//!
//! Cells are filled rectangles colored through a viridis-like sequential
//! ramp (delta matrices use a diverging blue-white-red map centered at
//! zero); absent cells are drawn unfilled. A legend annotates the color
//! range with the matrix minimum and maximum. Cell rectangles carry
//! `data-i`/`data-j` indices so tooling can locate them, but the value is
//! recoverable from the fill color alone.

use crate::geometry::{MatrixKind, SymMatrixReport};

const CELL: usize = 22;
const MARGIN_LEFT: usize = 64;
const MARGIN_TOP: usize = 48;
const LEGEND_H: usize = 64;

const VIRIDIS: [(f64, [u8; 3]); 9] = [
    (0.0, [68, 1, 84]),
    (0.125, [71, 44, 122]),
    (0.25, [59, 81, 139]),
    (0.375, [44, 113, 142]),
    (0.5, [33, 144, 141]),
    (0.625, [39, 173, 129]),
    (0.75, [92, 200, 99]),
    (0.875, [170, 220, 50]),
    (1.0, [253, 231, 37]),
];

const DIVERGING: [(f64, [u8; 3]); 3] = [
    (0.0, [59, 76, 192]),
    (0.5, [255, 255, 255]),
    (1.0, [180, 4, 38]),
];

fn interp(anchors: &[(f64, [u8; 3])], t: f64) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0);
    for w in anchors.windows(2) {
        let (t0, c0) = w[0];
        let (t1, c1) = w[1];
        if t <= t1 {
            let f = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
            let mut out = [0u8; 3];
            for ch in 0..3 {
                let v = c0[ch] as f64 + f * (c1[ch] as f64 - c0[ch] as f64);
                out[ch] = v.round() as u8;
            }
            return out;
        }
    }
    anchors.last().unwrap().1
}

/// Sequential colormap sample at t in [0, 1].
pub fn sequential_color(t: f64) -> [u8; 3] {
    interp(&VIRIDIS, t)
}

/// Diverging colormap sample at t in [0, 1] (0.5 is white).
pub fn diverging_color(t: f64) -> [u8; 3] {
    interp(&DIVERGING, t)
}

/// Linear value scale of a heatmap: maps values to colormap positions.
#[derive(Debug, Clone, Copy)]
pub struct ColorScale {
    pub min: f64,
    pub max: f64,
    pub diverging: bool,
}

impl ColorScale {
    pub fn for_report(report: &SymMatrixReport) -> ColorScale {
        let vals: Vec<f64> = (0..report.size())
            .flat_map(|i| (0..report.size()).filter_map(move |j| report.get(i, j)))
            .collect();
        let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let (min, max) = if vals.is_empty() { (0.0, 0.0) } else { (min, max) };
        if report.kind() == MatrixKind::Delta {
            let a = min.abs().max(max.abs());
            ColorScale {
                min: -a,
                max: a,
                diverging: true,
            }
        } else {
            ColorScale {
                min,
                max,
                diverging: false,
            }
        }
    }

    pub fn position(&self, v: f64) -> f64 {
        if self.max > self.min {
            (v - self.min) / (self.max - self.min)
        } else {
            0.5
        }
    }

    pub fn color(&self, v: f64) -> [u8; 3] {
        let t = self.position(v);
        if self.diverging {
            diverging_color(t)
        } else {
            sequential_color(t)
        }
    }

    /// Invert a fill color back to a value by nearest-color search along the
    /// ramp. Accurate to roughly one 8-bit quantization step of the range.
    pub fn decode(&self, rgb: [u8; 3]) -> f64 {
        let steps = 4096;
        let mut best_t = 0.0;
        let mut best_d = u32::MAX;
        for s in 0..=steps {
            let t = s as f64 / steps as f64;
            let c = if self.diverging {
                diverging_color(t)
            } else {
                sequential_color(t)
            };
            let d: u32 = (0..3)
                .map(|ch| {
                    let diff = c[ch] as i32 - rgb[ch] as i32;
                    (diff * diff) as u32
                })
                .sum();
            if d < best_d {
                best_d = d;
                best_t = t;
            }
        }
        self.min + best_t * (self.max - self.min)
    }
}

fn hex(c: [u8; 3]) -> String {
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// Render a matrix report as an SVG heatmap (margin matrices draw only the
/// upper triangle, matching their CSV layout).
pub fn heatmap_svg(report: &SymMatrixReport) -> String {
    let m = report.size();
    let scale = ColorScale::for_report(report);
    let width = MARGIN_LEFT + m * CELL + 16;
    let height = MARGIN_TOP + m * CELL + LEGEND_H + 16;
    let upper_only = report.kind() == MatrixKind::Margin;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">\n"
    ));
    svg.push_str(&format!(
        "  <title>{} matrix</title>\n",
        report.kind().as_str()
    ));
    svg.push_str(&format!(
        "  <rect x=\"0\" y=\"0\" width=\"{width}\" height=\"{height}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "  <text x=\"{}\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">{}</text>\n",
        MARGIN_LEFT,
        report.kind().as_str()
    ));

    // Column and row labels.
    for (j, id) in report.class_ids().iter().enumerate() {
        svg.push_str(&format!(
            "  <text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\" \
             text-anchor=\"middle\">{}</text>\n",
            MARGIN_LEFT + j * CELL + CELL / 2,
            MARGIN_TOP - 6,
            id
        ));
    }
    for (i, id) in report.class_ids().iter().enumerate() {
        svg.push_str(&format!(
            "  <text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\" \
             text-anchor=\"end\">{}</text>\n",
            MARGIN_LEFT - 6,
            MARGIN_TOP + i * CELL + CELL / 2 + 4,
            id
        ));
    }

    for i in 0..m {
        for j in 0..m {
            let x = MARGIN_LEFT + j * CELL;
            let y = MARGIN_TOP + i * CELL;
            let cell = if upper_only && j <= i {
                None
            } else {
                report.get(i, j)
            };
            match cell {
                Some(v) => svg.push_str(&format!(
                    "  <rect x=\"{x}\" y=\"{y}\" width=\"{CELL}\" height=\"{CELL}\" \
                     fill=\"{}\" data-i=\"{i}\" data-j=\"{j}\"/>\n",
                    hex(scale.color(v))
                )),
                None => svg.push_str(&format!(
                    "  <rect x=\"{x}\" y=\"{y}\" width=\"{CELL}\" height=\"{CELL}\" \
                     fill=\"none\" stroke=\"#bbbbbb\" data-i=\"{i}\" data-j=\"{j}\"/>\n"
                )),
            }
        }
    }

    // Legend: a ramp of thin rects plus min/max annotations.
    let ly = MARGIN_TOP + m * CELL + 24;
    let lw = m * CELL;
    let bins = 96.min(lw.max(2));
    for b in 0..bins {
        let t = b as f64 / (bins - 1) as f64;
        let c = if scale.diverging {
            diverging_color(t)
        } else {
            sequential_color(t)
        };
        let bx = MARGIN_LEFT + b * lw / bins;
        let bw = (MARGIN_LEFT + (b + 1) * lw / bins) - bx;
        svg.push_str(&format!(
            "  <rect x=\"{bx}\" y=\"{ly}\" width=\"{bw}\" height=\"12\" fill=\"{}\"/>\n",
            hex(c)
        ));
    }
    svg.push_str(&format!(
        "  <text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\">min={}</text>\n",
        MARGIN_LEFT,
        ly + 26,
        super::csv::fmt_value(scale.min)
    ));
    svg.push_str(&format!(
        "  <text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\" \
         text-anchor=\"end\">max={}</text>\n",
        MARGIN_LEFT + lw,
        ly + 26,
        super::csv::fmt_value(scale.max)
    ));
    svg.push_str("</svg>\n");
    svg
}

/// Extract (i, j, fill) triples from a heatmap produced by [`heatmap_svg`].
pub fn parse_heatmap_cells(svg: &str) -> Vec<(usize, usize, Option<[u8; 3]>)> {
    let mut out = Vec::new();
    for chunk in svg.split("<rect ").skip(1) {
        let Some(i) = attr(chunk, "data-i") else {
            continue;
        };
        let Some(j) = attr(chunk, "data-j") else {
            continue;
        };
        let fill = attr_str(chunk, "fill").unwrap_or_default();
        let color = fill.strip_prefix('#').map(|h| {
            [
                u8::from_str_radix(&h[0..2], 16).unwrap_or(0),
                u8::from_str_radix(&h[2..4], 16).unwrap_or(0),
                u8::from_str_radix(&h[4..6], 16).unwrap_or(0),
            ]
        });
        out.push((i, j, color));
    }
    out
}

fn attr_str<'a>(chunk: &'a str, name: &str) -> Option<&'a str> {
    let pat = format!("{name}=\"");
    let at = chunk.find(&pat)? + pat.len();
    let end = chunk[at..].find('"')? + at;
    Some(&chunk[at..end])
}

fn attr(chunk: &str, name: &str) -> Option<usize> {
    attr_str(chunk, name)?.parse().ok()
}
