//! CSV, JSON and SVG output.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use dppsim::{Domain, PointPattern, Provenance};
use serde::Serialize;

use crate::error::CliError;

pub fn csv_header(dim: usize) -> Vec<String> {
    match dim {
        1 => vec!["x".into()],
        2 => vec!["x".into(), "y".into()],
        3 => vec!["x".into(), "y".into(), "z".into()],
        d => (1..=d).map(|k| format!("x{k}")).collect(),
    }
}

/// One row per point; numbers use the shortest representation that parses back exactly.
pub fn format_csv(points: &[Vec<f64>], dim: usize) -> String {
    let mut s = csv_header(dim).join(",");
    s.push('\n');
    for p in points {
        for (k, v) in p.iter().enumerate() {
            if k > 0 {
                s.push(',');
            }
            write!(s, "{v}").expect("write to string");
        }
        s.push('\n');
    }
    s
}

pub fn parse_csv(text: &str) -> Result<(usize, Vec<Vec<f64>>), CliError> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| CliError::Usage("empty CSV file".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let dim = cols.len();
    if cols != csv_header(dim).iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(CliError::Usage(format!("unexpected CSV header {header:?}")));
    }
    let mut points = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Result<Vec<f64>, _> = line.split(',').map(|v| v.trim().parse::<f64>()).collect();
        let row = row.map_err(|_| CliError::Usage(format!("CSV row {}: not a number", i + 2)))?;
        if row.len() != dim {
            return Err(CliError::Usage(format!("CSV row {}: expected {dim} columns", i + 2)));
        }
        points.push(row);
    }
    Ok((dim, points))
}

pub fn read_csv(path: &Path) -> Result<(usize, Vec<Vec<f64>>), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_csv(&text)
}

/// Reads a CSV written by [`write_pattern_csv`] back into a pattern on `domain`.
pub fn read_pattern(path: &Path, domain: &Domain) -> Result<PointPattern, CliError> {
    let (dim, points) = read_csv(path)?;
    if dim != domain.dim() {
        return Err(CliError::Usage(format!("CSV has {dim} columns, window has dimension {}", domain.dim())));
    }
    Ok(PointPattern::new(points, domain.clone(), Provenance::new("csv", "read"))?)
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn write_pattern_csv(path: &Path, pattern: &PointPattern) -> Result<(), CliError> {
    write_file(path, &format_csv(pattern.points(), pattern.dim()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_file(path, &s)
}

pub fn ensure_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Scatter plot of a one- or two-dimensional pattern with the window outline;
/// deleted points are drawn in gray.
pub fn svg_scatter(pattern: &PointPattern) -> String {
    const SIZE: f64 = 400.0;
    const PAD: f64 = 10.0;
    let (lo, hi) = pattern.domain().bounding_box();
    let d = pattern.dim();
    let span = |k: usize| (hi[k] - lo[k]).max(f64::MIN_POSITIVE);
    let sx = |v: f64| PAD + (v - lo[0]) / span(0) * SIZE;
    let sy = |p: &[f64]| if d >= 2 { PAD + (hi[1] - p[1]) / span(1) * SIZE } else { PAD + 10.0 };
    let height = if d >= 2 { SIZE + 2.0 * PAD } else { 2.0 * PAD + 20.0 };
    let mut s = format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{height}\">\n",
        w = SIZE + 2.0 * PAD
    );
    match pattern.domain() {
        Domain::Ball { center, radius } if d == 2 => {
            let _ = writeln!(
                s,
                "<ellipse cx=\"{}\" cy=\"{}\" rx=\"{}\" ry=\"{}\" fill=\"none\" stroke=\"black\"/>",
                sx(center[0]),
                sy(center),
                radius / span(0) * SIZE,
                radius / span(1) * SIZE
            );
        }
        _ if d >= 2 => {
            let _ = writeln!(s, "<rect x=\"{PAD}\" y=\"{PAD}\" width=\"{SIZE}\" height=\"{SIZE}\" fill=\"none\" stroke=\"black\"/>");
        }
        _ => {
            let _ = writeln!(s, "<line x1=\"{PAD}\" y1=\"{y}\" x2=\"{x2}\" y2=\"{y}\" stroke=\"black\"/>", y = PAD + 10.0, x2 = PAD + SIZE);
        }
    }
    for p in &pattern.provenance.deleted {
        if p.len() == d {
            let _ = writeln!(s, "<circle cx=\"{:.3}\" cy=\"{:.3}\" r=\"2\" fill=\"gray\"/>", sx(p[0]), sy(p));
        }
    }
    for p in pattern.points() {
        let _ = writeln!(s, "<circle cx=\"{:.3}\" cy=\"{:.3}\" r=\"2.5\" fill=\"black\"/>", sx(p[0]), sy(p));
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn headers_by_dimension() {
        assert_eq!(format_csv(&[], 1), "x\n");
        assert_eq!(format_csv(&[vec![0.5, 0.25]], 2), "x,y\n0.5,0.25\n");
        assert_eq!(csv_header(3).join(","), "x,y,z");
    }

    #[test]
    fn bad_csv_is_rejected() {
        assert!(parse_csv("a,b\n1,2\n").is_err());
        assert!(parse_csv("x,y\n1\n").is_err());
        assert!(parse_csv("x\nfoo\n").is_err());
    }

    #[test]
    fn svg_marks_every_point() {
        let pat = PointPattern::new(vec![vec![0.1, 0.2], vec![0.5, 0.5]], Domain::unit_box(2), Provenance::new("t", "t")).unwrap();
        let s = svg_scatter(&pat);
        assert_eq!(s.matches("<circle").count(), 2);
        assert!(s.contains("<rect"));
    }

    proptest! {
        #[test]
        fn csv_round_trips_exactly(pts in proptest::collection::vec(proptest::collection::vec(0.0f64..1.0, 2), 0..40)) {
            let (dim, back) = parse_csv(&format_csv(&pts, 2)).unwrap();
            prop_assert_eq!(dim, 2);
            prop_assert_eq!(back, pts);
        }
    }
}
