//! CSV schemas for curves.
//!
//! All columns are SI base units. Capacitance curves use the header
//! `d_m,C_F,geometry,resolution`; force curves `d_m,F_N,geometry,resolution`;
//! curvature curves `d_m,dnu2_Hz2,geometry,resolution`. Readers are strict
//! about headers and report the offending line on malformed rows.

use crate::numdiff::{CapacitanceCurve, CurveMeta, DerivedCurve, DerivedKind};
use crate::{Error, Result};

pub const CAP_HEADER: &str = "d_m,C_F,geometry,resolution";
pub const FORCE_HEADER: &str = "d_m,F_N,geometry,resolution";
pub const CURVATURE_HEADER: &str = "d_m,dnu2_Hz2,geometry,resolution";

pub fn capacitance_to_csv(curve: &CapacitanceCurve) -> String {
    let mut s = String::from(CAP_HEADER);
    s.push('\n');
    for (d, c) in curve.samples() {
        s.push_str(&format!(
            "{d:e},{c:e},{},{}\n",
            curve.meta.geometry, curve.meta.resolution
        ));
    }
    s
}

pub fn derived_to_csv(curve: &DerivedCurve) -> String {
    let header = match curve.kind {
        DerivedKind::Force { .. } => FORCE_HEADER,
        DerivedKind::Curvature { .. } => CURVATURE_HEADER,
    };
    let mut s = String::from(header);
    s.push('\n');
    for (d, y) in curve.d.iter().zip(&curve.y) {
        s.push_str(&format!(
            "{d:e},{y:e},{},{}\n",
            curve.meta.geometry, curve.meta.resolution
        ));
    }
    s
}

/// Parse a capacitance CSV produced by [`capacitance_to_csv`].
pub fn capacitance_from_csv(text: &str) -> Result<CapacitanceCurve> {
    let (d, y, meta) = xy_from_csv(text, CAP_HEADER)?;
    CapacitanceCurve::new(d, y, meta)
}

/// Parse the `(d, value)` columns of any curve CSV with the given header.
pub fn xy_from_csv(text: &str, expected_header: &str) -> Result<(Vec<f64>, Vec<f64>, CurveMeta)> {
    let mut lines = text.lines().enumerate();
    let header = match lines.next() {
        Some((_, h)) => h.trim_end_matches('\r'),
        None => return Err(Error::Parse("empty file".into())),
    };
    if header != expected_header {
        return Err(Error::Parse(format!(
            "line 1: expected header `{expected_header}`, got `{header}`"
        )));
    }
    let mut d = Vec::new();
    let mut y = Vec::new();
    let mut meta = CurveMeta::default();
    for (idx, line) in lines {
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Parse(format!(
                "line {lineno}: expected 4 fields, got {}",
                fields.len()
            )));
        }
        let parse = |s: &str, what: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| {
                Error::Parse(format!("line {lineno}: cannot parse {what} from `{s}`"))
            })
        };
        d.push(parse(fields[0], "distance")?);
        y.push(parse(fields[1], "value")?);
        meta.geometry = fields[2].to_string();
        meta.resolution = fields[3].parse().unwrap_or(0);
    }
    if d.is_empty() {
        return Err(Error::Parse("no data rows".into()));
    }
    Ok((d, y, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numdiff::log_grid;

    fn curve() -> CapacitanceCurve {
        CapacitanceCurve::from_fn(
            log_grid(1e-6, 1e-4, 9),
            |d| 1e-17 / d,
            CurveMeta { geometry: "demo".into(), resolution: 7, solver: "t".into() },
        )
        .unwrap()
    }

    #[test]
    fn round_trip_preserves_samples() {
        let c = curve();
        let text = capacitance_to_csv(&c);
        assert!(text.starts_with(CAP_HEADER));
        let back = capacitance_from_csv(&text).unwrap();
        assert_eq!(back.len(), c.len());
        for ((d1, c1), (d2, c2)) in c.samples().zip(back.samples()) {
            assert!((d1 - d2).abs() <= 1e-15 * d1);
            assert!((c1 - c2).abs() <= 1e-15 * c1);
        }
        assert_eq!(back.meta.geometry, "demo");
        assert_eq!(back.meta.resolution, 7);
    }

    #[test]
    fn malformed_rows_name_the_line() {
        let mut text = capacitance_to_csv(&curve());
        text.push_str("not,a,row\n");
        match capacitance_from_csv(&text) {
            Err(Error::Parse(msg)) => assert!(msg.contains("line 11"), "{msg}"),
            other => panic!("expected parse error, got {other:?}"),
        }
        let bad_header = "x_m,C_F,geometry,resolution\n1,2,a,3\n";
        assert!(matches!(capacitance_from_csv(bad_header), Err(Error::Parse(_))));
    }

    #[test]
    fn bad_number_is_reported() {
        let text = format!("{CAP_HEADER}\n1e-6,zap,geo,4\n");
        match capacitance_from_csv(&text) {
            Err(Error::Parse(msg)) => {
                assert!(msg.contains("line 2") && msg.contains("zap"), "{msg}")
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
