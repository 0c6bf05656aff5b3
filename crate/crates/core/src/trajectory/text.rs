use super::{Segment, StitchTemplate};
use crate::error::{Error, Result};
use crate::measures::Word;
use std::fmt::Write;

impl StitchTemplate {
    /// `free <len>` / `fixed <id>` records followed by the word table.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "template {} {} {:016x}", self.dim, self.total_length, self.frame).unwrap();
        let mut words = Vec::new();
        for s in &self.segments {
            match s {
                Segment::Free(l) => writeln!(out, "free {l}").unwrap(),
                Segment::Fixed(w) => {
                    writeln!(out, "fixed {}", words.len()).unwrap();
                    words.push(w);
                }
            }
        }
        for (i, w) in words.iter().enumerate() {
            let coords: Vec<String> = w.coords().iter().map(|c| c.to_string()).collect();
            writeln!(out, "word {i} {} {}", w.len(), coords.join(" ")).unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let err = |line: usize, msg: &str| Error::Parse { line, msg: msg.to_string() };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
        let (l0, head) = lines.next().ok_or_else(|| err(1, "empty template"))?;
        let h: Vec<&str> = head.split_whitespace().collect();
        if h.len() != 4 || h[0] != "template" {
            return Err(err(l0 + 1, "expected `template <dim> <T> <frame>`"));
        }
        let dim: usize = h[1].parse().map_err(|_| err(l0 + 1, "bad dim"))?;
        let total: usize = h[2].parse().map_err(|_| err(l0 + 1, "bad length"))?;
        let frame = u64::from_str_radix(h[3], 16).map_err(|_| err(l0 + 1, "bad frame fingerprint"))?;
        let mut layout = Vec::new();
        let mut words: Vec<Option<Word>> = Vec::new();
        for (i, line) in lines {
            let w: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str| s.parse::<usize>().map_err(|_| err(i + 1, "expected an integer"));
            match w[0] {
                "free" if w.len() == 2 => layout.push((true, num(w[1])?)),
                "fixed" if w.len() == 2 => layout.push((false, num(w[1])?)),
                "word" if w.len() >= 3 => {
                    let id = num(w[1])?;
                    let len = num(w[2])?;
                    let coords = w[3..]
                        .iter()
                        .map(|c| c.parse::<f64>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| err(i + 1, "bad coordinate"))?;
                    if coords.len() != len * dim {
                        return Err(err(i + 1, "word length does not match its coordinates"));
                    }
                    if words.len() <= id {
                        words.resize(id + 1, None);
                    }
                    words[id] = Some(Word::new(dim, coords).map_err(|e| err(i + 1, &e.to_string()))?);
                }
                _ => return Err(err(i + 1, "unknown record")),
            }
        }
        let segments = layout
            .into_iter()
            .map(|(free, v)| {
                if free {
                    Ok(Segment::Free(v))
                } else {
                    words.get(v).cloned().flatten().map(Segment::Fixed).ok_or_else(|| err(0, "missing word"))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let t = StitchTemplate { dim, segments, total_length: total, frame };
        let sum: usize = t.free_lengths().iter().sum::<usize>() + t.fixed_len();
        if sum != total {
            return Err(err(l0 + 1, "segment lengths do not add up to T"));
        }
        Ok(t)
    }
}
