//! CSV emission and parsing for report bundles.
//!
//! All tables use ',' delimiters, '.' decimal separators, LF line endings,
//! and fixed six-decimal floats. Matrix tables are square with the original
//! class ids as both header row and leading column; absent margin entries
//! are empty cells, and margin matrices fill only the upper triangle
//! (mirroring the triangular figure layout).

use crate::error::{Error, Result};
use crate::geometry::{ClassMeans, CompressionCurves, MatrixKind, SymMatrixReport, Variability};
use crate::margins::PairMargin;
use crate::neural_collapse::NcReport;

/// Fixed six-decimal rendering; negative zero collapses to zero.
pub fn fmt_value(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.6}")
}

/// Scientific rendering for solver diagnostics that span decades.
pub fn fmt_sci(v: f64) -> String {
    format!("{v:.6e}")
}

/// Square class-pair matrix with id header row and column.
pub fn matrix_csv(report: &SymMatrixReport) -> String {
    let m = report.size();
    let ids = report.class_ids();
    let mut out = String::from("class_id");
    for id in ids {
        out.push(',');
        out.push_str(&id.to_string());
    }
    out.push('\n');
    let upper_only = report.kind() == MatrixKind::Margin;
    for i in 0..m {
        out.push_str(&ids[i].to_string());
        for j in 0..m {
            out.push(',');
            let cell = if upper_only && j <= i {
                None
            } else {
                report.get(i, j)
            };
            if let Some(v) = cell {
                out.push_str(&fmt_value(v));
            }
        }
        out.push('\n');
    }
    out
}

/// Parse a matrix written by [`matrix_csv`]; missing mirror cells are
/// reflected so triangular margin tables round-trip.
pub fn parse_matrix_csv(text: &str, kind: MatrixKind) -> Result<SymMatrixReport> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty matrix CSV".into()))?;
    let mut cols = header.split(',');
    let first = cols.next().unwrap_or("");
    if first != "class_id" {
        return Err(Error::Format(format!(
            "matrix CSV must start with a class_id header, got {first:?}"
        )));
    }
    let ids: Vec<i64> = cols
        .map(|c| {
            c.trim()
                .parse()
                .map_err(|_| Error::Format(format!("bad class id {c:?}")))
        })
        .collect::<Result<_>>()?;
    let m = ids.len();
    let mut values = vec![None; m * m];
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        if i >= m {
            return Err(Error::Format("matrix CSV has too many rows".into()));
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != m + 1 {
            return Err(Error::Format(format!(
                "row {i} has {} cells, expected {}",
                cells.len(),
                m + 1
            )));
        }
        let row_id: i64 = cells[0]
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("bad row id {:?}", cells[0])))?;
        if row_id != ids[i] {
            return Err(Error::Format(format!(
                "row id {row_id} does not match header id {}",
                ids[i]
            )));
        }
        for (j, cell) in cells[1..].iter().enumerate() {
            let cell = cell.trim();
            if !cell.is_empty() {
                let v: f64 = cell
                    .parse()
                    .map_err(|_| Error::Format(format!("bad float {cell:?}")))?;
                values[i * m + j] = Some(v);
            }
        }
    }
    // Mirror one-sided entries (triangular margin layout).
    for i in 0..m {
        for j in 0..m {
            if values[i * m + j].is_some() && values[j * m + i].is_none() {
                values[j * m + i] = values[i * m + j];
            }
        }
    }
    SymMatrixReport::from_cells(kind, ids, values)
}

/// Class means, one row per class.
pub fn means_csv(cm: &ClassMeans) -> String {
    let p = cm.means().ncols();
    let mut out = String::from("class_id,count");
    for d in 0..p {
        out.push_str(&format!(",f{d}"));
    }
    out.push('\n');
    for (j, &id) in cm.class_ids().iter().enumerate() {
        out.push_str(&format!("{id},{}", cm.counts()[j]));
        for d in 0..p {
            out.push(',');
            out.push_str(&fmt_value(cm.means()[(j, d)]));
        }
        out.push('\n');
    }
    out
}

/// Per-class variability plus mean/std summary rows.
pub fn variability_csv(v: &Variability, ids: &[i64]) -> String {
    let mut out = String::from("class_id,variability\n");
    for (j, &id) in ids.iter().enumerate() {
        out.push_str(&format!("{id},{}\n", fmt_value(v.per_class[j])));
    }
    out.push_str(&format!("mean,{}\n", fmt_value(v.mean)));
    out.push_str(&format!("std,{}\n", fmt_value(v.std)));
    out
}

/// Compression curves: absolute dimension, fraction of p, class-averaged
/// error, then one column per class.
pub fn compression_csv(c: &CompressionCurves) -> String {
    let mut out = String::from("k,fraction,average");
    for id in &c.class_ids {
        out.push_str(&format!(",class_{id}"));
    }
    out.push('\n');
    for (d, &k) in c.dims.iter().enumerate() {
        out.push_str(&format!(
            "{k},{},{}",
            fmt_value(c.fractions[d]),
            fmt_value(c.average[d])
        ));
        for curve in &c.per_class {
            out.push(',');
            out.push_str(&fmt_value(curve[d]));
        }
        out.push('\n');
    }
    out
}

/// Per-pair solver diagnostics for the margin matrix.
pub fn margins_meta_csv(meta: &[PairMargin]) -> String {
    let mut out = String::from("class_a,class_b,separable,iterations,lower,upper\n");
    for m in meta {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            m.class_a,
            m.class_b,
            m.separable,
            m.iterations,
            fmt_sci(m.lower),
            fmt_sci(m.upper)
        ));
    }
    out
}

/// Neural-collapse summary row. The last two columns are deviation metrics
/// beyond the classic report, hence the `ext_` prefix.
pub fn nc_csv(r: &NcReport) -> String {
    let mut out = String::from(
        "m,etf_angle,distance_mean,distance_std,angle_mean,angle_std,ext_equinorm_cv,ext_equiangular_dev\n",
    );
    out.push_str(&format!(
        "{},{},{},{},{},{},{},{}\n",
        r.m,
        fmt_value(r.etf_angle_degrees),
        fmt_value(r.distance_mean),
        fmt_value(r.distance_std),
        fmt_value(r.angle_mean),
        fmt_value(r.angle_std),
        fmt_value(r.equinorm_cv),
        fmt_value(r.equiangular_dev)
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats_fixed_six_decimals() {
        assert_eq!(fmt_value(0.0), "0.000000");
        assert_eq!(fmt_value(-0.0), "0.000000");
        assert_eq!(fmt_value(1e-13), "0.000000");
        assert_eq!(fmt_value(0.3), "0.300000");
        assert_eq!(fmt_value(97.18075), "97.180750");
    }

    #[test]
    fn matrix_round_trips_through_csv() {
        let r = SymMatrixReport::full(MatrixKind::Distance, vec![2, 5, 9], |i, j| {
            (i as f64 - j as f64).abs() / 4.0
        });
        let text = matrix_csv(&r);
        let back = parse_matrix_csv(&text, MatrixKind::Distance).unwrap();
        assert_eq!(back.class_ids(), r.class_ids());
        for i in 0..3 {
            for j in 0..3 {
                let a = r.get(i, j).unwrap();
                let b = back.get(i, j).unwrap();
                assert!((a - b).abs() < 5e-7); // six-decimal rounding
            }
        }
    }

    #[test]
    fn margin_matrix_fills_only_the_upper_triangle() {
        let mut values = vec![None; 4];
        values[1] = Some(0.25);
        values[2] = Some(0.25);
        let r = SymMatrixReport::from_cells(MatrixKind::Margin, vec![1, 2], values).unwrap();
        let text = matrix_csv(&r);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "class_id,1,2");
        assert_eq!(lines[1], "1,,0.250000");
        assert_eq!(lines[2], "2,,");
        // Exactly one filled numeric cell.
        let filled = text
            .lines()
            .skip(1)
            .flat_map(|l| l.split(',').skip(1))
            .filter(|c| !c.is_empty())
            .count();
        assert_eq!(filled, 1);
        // And it still parses back symmetric.
        let back = parse_matrix_csv(&text, MatrixKind::Margin).unwrap();
        assert_eq!(back.get(1, 0), Some(0.25));
    }

    #[test]
    fn parse_rejects_mangled_headers() {
        assert!(parse_matrix_csv("ids,1,2\n", MatrixKind::Distance).is_err());
        assert!(parse_matrix_csv("", MatrixKind::Distance).is_err());
    }
}
