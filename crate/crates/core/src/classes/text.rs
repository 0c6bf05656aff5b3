//! Line-oriented text documents for class structures and compact frames.

use super::{ClassStructure, CompactFrame, FrameProvenance, ProbePoint, Region, TauTable};
use crate::error::{Error, Result};
use crate::geometry::BoxRegion;
use std::fmt::Write;

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn write_region(out: &mut String, r: &Region) {
    match r {
        Region::Interval { lo, hi } => writeln!(out, "interval {lo} {hi}").unwrap(),
        Region::Orthant { extinct } => {
            let signs: String = extinct.iter().map(|&e| if e { '-' } else { '+' }).collect();
            writeln!(out, "orthant {signs}").unwrap()
        }
        Region::Cells { cells } => {
            writeln!(out, "cells {}", cells.len()).unwrap();
            for c in cells {
                writeln!(out, "cell {} {}", join(&c.lo), join(&c.hi)).unwrap();
            }
        }
    }
}

impl ClassStructure {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "class_structure {}", self.dim).unwrap();
        writeln!(out, "provenance {}", self.provenance).unwrap();
        for (j, c) in self.classes.iter().enumerate() {
            write!(out, "class {} beta={} ", self.labels[j], u8::from(self.beta_reach[j])).unwrap();
            write_region(&mut out, c);
        }
        for (i, row) in self.order.iter().enumerate() {
            let succ: Vec<String> = (0..row.len()).filter(|&j| j != i && row[j]).map(|j| j.to_string()).collect();
            if !succ.is_empty() {
                writeln!(out, "order {i} -> {}", succ.join(" ")).unwrap();
            }
        }
        out.push_str("end\n");
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut p = Lines::new(text);
        let dim = p.expect_header("class_structure")?;
        let mut cs = ClassStructure {
            dim,
            classes: Vec::new(),
            labels: Vec::new(),
            order: Vec::new(),
            beta_reach: Vec::new(),
            provenance: String::new(),
        };
        let mut edges = Vec::new();
        while let Some((line, words)) = p.next() {
            match words[0] {
                "provenance" => cs.provenance = p.rest(1).to_string(),
                "class" => {
                    if words.len() < 4 {
                        return Err(p.err("class needs a label, beta flag and region"));
                    }
                    cs.labels.push(words[1].to_string());
                    cs.beta_reach.push(match words[2] {
                        "beta=1" => true,
                        "beta=0" => false,
                        _ => return Err(p.err("expected beta=0 or beta=1")),
                    });
                    cs.classes.push(p.region(&words[3..])?);
                }
                "order" => {
                    if words.len() < 3 || words[2] != "->" {
                        return Err(p.err("expected `order i -> j ...`"));
                    }
                    let i = p.usize(words[1])?;
                    for w in &words[3..] {
                        edges.push((i, p.usize(w)?));
                    }
                }
                "end" => {
                    let n = cs.classes.len();
                    cs.order = vec![vec![false; n]; n];
                    for (i, row) in cs.order.iter_mut().enumerate() {
                        row[i] = true;
                    }
                    for (i, j) in edges {
                        if i >= n || j >= n {
                            return Err(Error::Parse { line, msg: "order index out of range".into() });
                        }
                        cs.order[i][j] = true;
                    }
                    cs.validate()?;
                    return Ok(cs);
                }
                other => return Err(p.err(&format!("unknown record `{other}`"))),
            }
        }
        Err(p.err("missing `end`"))
    }
}

impl CompactFrame {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "compact_frame {}", self.dim).unwrap();
        writeln!(out, "tau_k {}", self.tau_k).unwrap();
        writeln!(out, "c_k {}", self.c_k).unwrap();
        writeln!(out, "fingerprint {:016x}", self.fingerprint).unwrap();
        writeln!(out, "provenance {}", serde_json::to_string(&self.provenance).unwrap()).unwrap();
        for (j, s) in self.slices.iter().enumerate() {
            write!(out, "slice {} boxes={} ", self.class_ids[j], s.len()).unwrap();
            write_region(&mut out, &self.classes[j]);
            for b in s {
                writeln!(out, "box {} {}", join(&b.lo), join(&b.hi)).unwrap();
            }
        }
        match &self.tau {
            TauTable::Constant { tau } => writeln!(out, "tau constant {tau}").unwrap(),
            TauTable::PerSlice { taus } => {
                let cells: Vec<String> = taus.iter().map(|v| v.to_string()).collect();
                writeln!(out, "tau per_slice {}", cells.join(" ")).unwrap()
            }
            TauTable::Grid { probes, values } => {
                writeln!(out, "tau grid {}", probes.len()).unwrap();
                for pr in probes {
                    writeln!(out, "probe {} {}", pr.slice, join(&pr.point)).unwrap();
                }
                for row in values {
                    let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                    writeln!(out, "row {}", cells.join(" ")).unwrap();
                }
            }
        }
        out.push_str("end\n");
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut p = Lines::new(text);
        let dim = p.expect_header("compact_frame")?;
        let mut f = CompactFrame {
            dim,
            class_ids: Vec::new(),
            classes: Vec::new(),
            slices: Vec::new(),
            tau: TauTable::Constant { tau: 1 },
            tau_k: 1,
            c_k: 1.0,
            provenance: FrameProvenance {
                method: String::new(),
                seed: None,
                config: None,
                k_probe_used: None,
                notes: Vec::new(),
            },
            fingerprint: 0,
        };
        let mut stored = None;
        let mut pending_boxes = 0usize;
        let mut probes = Vec::new();
        let mut rows = Vec::new();
        let mut grid = false;
        while let Some((_, words)) = p.next() {
            if pending_boxes > 0 && words[0] != "box" {
                return Err(p.err("slice has fewer boxes than announced"));
            }
            match words[0] {
                "tau_k" => f.tau_k = p.usize(p.arg(&words, 1)?)?,
                "c_k" => f.c_k = p.f64(p.arg(&words, 1)?)?,
                "fingerprint" => {
                    stored = Some(u64::from_str_radix(p.arg(&words, 1)?, 16).map_err(|_| p.err("bad fingerprint"))?)
                }
                "provenance" => {
                    f.provenance = serde_json::from_str(p.rest(1)).map_err(|e| p.err(&e.to_string()))?;
                }
                "slice" => {
                    if words.len() < 4 {
                        return Err(p.err("slice needs a class id, box count and region"));
                    }
                    f.class_ids.push(p.usize(words[1])?);
                    pending_boxes =
                        p.usize(words[2].strip_prefix("boxes=").ok_or_else(|| p.err("expected boxes=<n>"))?)?;
                    f.classes.push(p.region(&words[3..])?);
                    f.slices.push(Vec::new());
                }
                "box" => {
                    if pending_boxes == 0 {
                        return Err(p.err("unexpected box"));
                    }
                    let b = p.boxed(&words)?;
                    f.slices.last_mut().unwrap().push(b);
                    pending_boxes -= 1;
                }
                "tau" => match p.arg(&words, 1)? {
                    "constant" => f.tau = TauTable::Constant { tau: p.usize(p.arg(&words, 2)?)? },
                    "grid" => grid = true,
                    "per_slice" => {
                        f.tau = TauTable::PerSlice {
                            taus: words[2..].iter().map(|w| p.usize(w)).collect::<Result<Vec<_>>>()?,
                        }
                    }
                    _ => return Err(p.err("expected `tau constant` or `tau grid`")),
                },
                "probe" => {
                    let slice = p.usize(p.arg(&words, 1)?)?;
                    probes.push(ProbePoint { slice, point: p.coords(p.arg(&words, 2)?)? });
                }
                "row" => rows.push(words[1..].iter().map(|w| p.usize(w)).collect::<Result<Vec<_>>>()?),
                "end" => {
                    if grid {
                        if rows.len() != probes.len() + 1 || rows.iter().any(|r| r.len() != probes.len()) {
                            return Err(p.err("tau grid has the wrong shape"));
                        }
                        f.tau = TauTable::Grid { probes, values: rows };
                    }
                    f.fingerprint = f.compute_fingerprint();
                    if let Some(s) = stored {
                        if s != f.fingerprint {
                            return Err(Error::FrameMismatch);
                        }
                    }
                    return Ok(f);
                }
                other => return Err(p.err(&format!("unknown record `{other}`"))),
            }
        }
        Err(p.err("missing `end`"))
    }
}

struct Lines<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
    current: &'a str,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self { lines: text.lines().enumerate(), line: 0, current: "" }
    }

    fn next(&mut self) -> Option<(usize, Vec<&'a str>)> {
        for (i, raw) in self.lines.by_ref() {
            let t = raw.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            self.line = i + 1;
            self.current = t;
            return Some((self.line, t.split_whitespace().collect()));
        }
        None
    }

    /// Remainder of the current line after `skip` words.
    fn rest(&self, skip: usize) -> &'a str {
        let mut s = self.current;
        for _ in 0..skip {
            s = s.trim_start();
            s = s.find(char::is_whitespace).map_or("", |k| &s[k..]);
        }
        s.trim()
    }

    fn err(&self, msg: &str) -> Error {
        Error::Parse { line: self.line, msg: msg.to_string() }
    }

    fn arg<'w>(&self, words: &[&'w str], i: usize) -> Result<&'w str> {
        words.get(i).copied().ok_or_else(|| self.err("missing field"))
    }

    fn usize(&self, s: &str) -> Result<usize> {
        s.parse().map_err(|_| self.err(&format!("expected an integer, found `{s}`")))
    }

    fn f64(&self, s: &str) -> Result<f64> {
        s.parse().map_err(|_| self.err(&format!("expected a number, found `{s}`")))
    }

    fn coords(&self, s: &str) -> Result<Vec<f64>> {
        s.split(',').map(|v| self.f64(v)).collect()
    }

    fn boxed(&self, words: &[&str]) -> Result<BoxRegion> {
        let lo = self.coords(self.arg(words, 1)?)?;
        let hi = self.coords(self.arg(words, 2)?)?;
        BoxRegion::new(lo, hi).map_err(|e| self.err(&e.to_string()))
    }

    fn expect_header(&mut self, name: &str) -> Result<usize> {
        match self.next() {
            Some((_, w)) if w[0] == name && w.len() == 2 => self.usize(w[1]),
            _ => Err(self.err(&format!("expected `{name} <dim>` header"))),
        }
    }

    fn region(&mut self, words: &[&str]) -> Result<Region> {
        match words[0] {
            "interval" => {
                Ok(Region::Interval { lo: self.f64(self.arg(words, 1)?)?, hi: self.f64(self.arg(words, 2)?)? })
            }
            "orthant" => {
                let extinct = self
                    .arg(words, 1)?
                    .chars()
                    .map(|c| match c {
                        '-' => Ok(true),
                        '+' => Ok(false),
                        _ => Err(self.err("orthant signs must be + or -")),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Region::Orthant { extinct })
            }
            "cells" => {
                let n = self.usize(self.arg(words, 1)?)?;
                let mut cells = Vec::with_capacity(n);
                for _ in 0..n {
                    match self.next() {
                        Some((_, w)) if w[0] == "cell" => cells.push(self.boxed(&w)?),
                        _ => return Err(self.err("expected a `cell` line")),
                    }
                }
                Ok(Region::Cells { cells })
            }
            other => Err(self.err(&format!("unknown region `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::{discover_classes_1d, product_classes_extinction};

    #[test]
    fn structure_round_trip() {
        let d = crate::zoo::DriftFn::two_class_example();
        for cs in [
            discover_classes_1d(|x| d.eval(x), (-1.0, 4.0), 0.01, Some((2.2, 2.8))).unwrap(),
            product_classes_extinction(2).unwrap(),
        ] {
            let text = cs.to_text();
            assert_eq!(ClassStructure::from_text(&text).unwrap(), cs, "{text}");
        }
        let cells = ClassStructure {
            dim: 2,
            classes: vec![Region::Cells { cells: vec![BoxRegion::new(vec![0.0, 0.0], vec![0.5, 1.0 / 3.0]).unwrap()] }],
            labels: vec!["A".into()],
            order: vec![vec![true]],
            beta_reach: vec![false],
            provenance: "grid probe (approximate)".into(),
        };
        assert_eq!(ClassStructure::from_text(&cells.to_text()).unwrap(), cells);
    }

    #[test]
    fn frame_round_trip_and_tamper() {
        let f = CompactFrame::synthetic(
            1,
            vec![
                vec![BoxRegion::interval(0.1, 0.9)],
                vec![BoxRegion::interval(2.0, 2.5), BoxRegion::interval(2.6, 3.0)],
            ],
            3,
            2.25,
        )
        .unwrap()
        .with_classes(vec![Region::Interval { lo: 0.0, hi: 1.0 }, Region::Interval { lo: 1.5, hi: 3.5 }])
        .unwrap()
        .with_slice_taus(vec![1, 3])
        .unwrap();
        let text = f.to_text();
        assert_eq!(CompactFrame::from_text(&text).unwrap(), f);
        let tampered = text.replace("c_k 2.25", "c_k 2.5");
        assert!(matches!(CompactFrame::from_text(&tampered), Err(Error::FrameMismatch)));
    }

    #[test]
    fn parse_errors_carry_lines() {
        let e = ClassStructure::from_text("class_structure 1\nclass a beta=2 interval 0 1\nend\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        assert!(ClassStructure::from_text("class_structure 1\n").is_err());
    }
}
