//! Line-delimited text form: one atom per row, `coords... weight`.

use super::EmpiricalMeasure;
use crate::error::{Error, Result};
use std::fmt::Write;

impl EmpiricalMeasure {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (p, w) in self.atoms() {
            for c in p {
                write!(out, "{c} ").unwrap();
            }
            writeln!(out, "{w}").unwrap();
        }
        out
    }

    /// Parses the text form. Blank lines and `#` comments are skipped; the
    /// weights are renormalized when they sum to one within `1e-9`.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut dim = None;
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |msg: String| Error::Parse { line: k + 1, msg };
            let vals = line
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|e| parse_err(format!("{t:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            if vals.len() < 2 {
                return Err(parse_err("expected coordinates followed by a weight".into()));
            }
            let d = vals.len() - 1;
            if *dim.get_or_insert(d) != d {
                return Err(parse_err(format!("row has dimension {d}")));
            }
            points.extend_from_slice(&vals[..d]);
            weights.push(vals[d]);
        }
        let dim = dim.ok_or(Error::Parse { line: 0, msg: "no atoms".into() })?;
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Parse { line: 0, msg: format!("weights sum to {total}") });
        }
        Self::normalized(dim, points, weights)
    }
}
