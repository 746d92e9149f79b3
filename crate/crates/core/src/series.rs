//! CSV emission for diagnostic and scenario series.
//!
//! Floats are written with 17 significant digits so that parsing the text
//! reproduces every value bit for bit.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};

/// `{:.16e}` gives 17 significant digits.
pub fn format_value(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

fn parse_value(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| Error::Config(format!("bad number `{s}`: {e}")))
}

/// Header plus one line per record.
pub fn emit_diagnostics(records: &[DiagnosticsRecord]) -> String {
    let mut out = DiagnosticsRecord::COLUMNS.join(",");
    out.push('\n');
    for r in records {
        let line: Vec<String> = r.values().iter().map(|v| format_value(*v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_diagnostics(text: &str) -> Result<Vec<DiagnosticsRecord>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Config("empty diagnostics file".into()))?;
    if header != DiagnosticsRecord::COLUMNS.join(",") {
        return Err(Error::Config(format!("unexpected diagnostics header `{header}`")));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|line| {
            let mut vals = [0.0; 10];
            let mut count = 0;
            for (slot, cell) in vals.iter_mut().zip(line.split(',')) {
                *slot = parse_value(cell)?;
                count += 1;
            }
            if count != 10 || line.split(',').count() != 10 {
                return Err(Error::Config(format!("expected 10 columns in `{line}`")));
            }
            Ok(DiagnosticsRecord::from_values(vals))
        })
        .collect()
}

/// Named columns of equal length.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format_value(*v)).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_series_is_header_only() {
        let text = emit_diagnostics(&[]);
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("t,mass,energy,dilation_A,variance,potential_V,grad_norm,h_theta_11"));
        assert!(parse_diagnostics(&text).unwrap().is_empty());
    }

    #[test]
    fn one_record_two_lines() {
        let r = DiagnosticsRecord::from_values([0.1, 3.14, 2.0, -0.5, 1.0, 0.25, 1.7, 4.2, 1e-30, 0.0]);
        let text = emit_diagnostics(&[r]);
        assert_eq!(text.lines().count(), 2);
        assert_eq!(parse_diagnostics(&text).unwrap(), vec![r]);
    }

    #[test]
    fn series_csv() {
        let mut s = Series::new(&["t", "x"]);
        s.push(vec![1.0, 2.5]);
        assert_eq!(s.to_csv(), "t,x\n1.0000000000000000e0,2.5000000000000000e0\n");
        assert_eq!(s.column("x"), Some(vec![2.5]));
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_exact(vals in proptest::array::uniform10(-1e300f64..1e300)) {
            let r = DiagnosticsRecord::from_values(vals);
            let back = parse_diagnostics(&emit_diagnostics(&[r])).unwrap();
            prop_assert_eq!(back[0].values().map(f64::to_bits), vals.map(f64::to_bits));
        }
    }
}
