//! Words, empirical measures, total variation, the Lévy-Prokhorov metric and
//! the gauge `h`.

mod flow;
pub mod lemmas;
mod lp;
mod text;

pub use lp::{
    deficiency, lp_distance, lp_distance_flow, lp_distance_subsets, lp_within, LpBall, SUBSET_ROUTE_MAX_ATOMS,
};

use crate::error::{invalid, Error, Result};
use std::cmp::Ordering;
use std::fmt;
use std::ops::Range;
use std::sync::Arc;

/// Tolerance on total mass.
pub const MASS_TOL: f64 = 1e-12;

/// Euclidean distance. In one dimension this is exactly `|a - b|`.
#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    if a.len() == 1 {
        return (a[0] - b[0]).abs();
    }
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// A finite sequence of letters in `R^d`.
///
/// Letters live in one shared buffer; `subword` returns a view onto the same
/// buffer.
#[derive(Clone)]
pub struct Word {
    dim: usize,
    buf: Arc<[f64]>,
    start: usize,
    len: usize,
}

impl Word {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dimension must be positive"));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(invalid(format!("{} coordinates do not form letters of dimension {dim}", coords.len())));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(invalid("letters must be finite"));
        }
        let len = coords.len() / dim;
        Ok(Self { dim, buf: coords.into(), start: 0, len })
    }

    /// Word over the real line.
    pub fn line(letters: &[f64]) -> Self {
        Self::new(1, letters.to_vec()).expect("finite letters")
    }

    pub fn empty(dim: usize) -> Self {
        Self { dim, buf: Arc::from(Vec::new()), start: 0, len: 0 }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn coords(&self) -> &[f64] {
        &self.buf[self.start * self.dim..(self.start + self.len) * self.dim]
    }

    pub fn letter(&self, i: usize) -> &[f64] {
        assert!(i < self.len, "letter {i} out of range for word of length {}", self.len);
        let s = (self.start + i) * self.dim;
        &self.buf[s..s + self.dim]
    }

    pub fn first(&self) -> Option<&[f64]> {
        (!self.is_empty()).then(|| self.letter(0))
    }

    pub fn last(&self) -> Option<&[f64]> {
        (!self.is_empty()).then(|| self.letter(self.len - 1))
    }

    pub fn letters(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords().chunks_exact(self.dim)
    }

    /// View of letters `range` sharing this word's buffer.
    pub fn subword(&self, range: Range<usize>) -> Self {
        assert!(range.start <= range.end && range.end <= self.len);
        Self {
            dim: self.dim,
            buf: Arc::clone(&self.buf),
            start: self.start + range.start,
            len: range.end - range.start,
        }
    }

    pub fn concat<'a, I>(dim: usize, words: I) -> Self
    where
        I: IntoIterator<Item = &'a Word>,
    {
        let mut coords = Vec::new();
        for w in words {
            assert_eq!(w.dim, dim, "dimension mismatch in concat");
            coords.extend_from_slice(w.coords());
        }
        Self::new(dim, coords).expect("finite letters")
    }

    /// True when both words view the same buffer.
    pub fn shares_buffer(&self, other: &Word) -> bool {
        Arc::ptr_eq(&self.buf, &other.buf)
    }
}

impl PartialEq for Word {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.coords() == other.coords()
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.letters()).finish()
    }
}

fn cmp_point(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => {}
            o => return o,
        }
    }
    Ordering::Equal
}

/// Finitely supported probability measure on `R^d`.
///
/// Atoms are sorted lexicographically and merged only when their coordinates
/// are bitwise equal.
#[derive(Clone, PartialEq)]
pub struct EmpiricalMeasure {
    dim: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl fmt::Debug for EmpiricalMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.atoms()).finish()
    }
}

impl EmpiricalMeasure {
    /// Builds a measure from weighted points; weights must sum to one.
    pub fn from_atoms(dim: usize, points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let m = Self::assemble(dim, points, weights)?;
        let total: f64 = m.weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(invalid(format!("weights sum to {total}, not 1")));
        }
        Ok(m)
    }

    /// Builds a measure from nonnegative masses, normalizing them.
    pub fn normalized(dim: usize, points: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        let mut m = Self::assemble(dim, points, masses)?;
        let total: f64 = m.weights.iter().sum();
        if total <= 0.0 {
            return Err(invalid("total mass must be positive"));
        }
        m.weights.iter_mut().for_each(|w| *w /= total);
        Ok(m)
    }

    fn assemble(dim: usize, points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dimension must be positive"));
        }
        if points.len() != weights.len() * dim {
            return Err(invalid("points and weights disagree in length"));
        }
        if weights.is_empty() {
            return Err(invalid("measure needs at least one atom"));
        }
        if points.iter().any(|c| !c.is_finite()) {
            return Err(invalid("atoms must be finite"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(invalid("weights must be finite and nonnegative"));
        }
        let mut idx: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 0.0).collect();
        if idx.is_empty() {
            return Err(invalid("measure has no positive weight"));
        }
        let pt = |i: usize| &points[i * dim..(i + 1) * dim];
        idx.sort_by(|&a, &b| cmp_point(pt(a), pt(b)));
        let mut out_p = Vec::with_capacity(idx.len() * dim);
        let mut out_w: Vec<f64> = Vec::with_capacity(idx.len());
        for &i in &idx {
            let same = !out_w.is_empty() && cmp_point(&out_p[out_p.len() - dim..], pt(i)) == Ordering::Equal;
            if same {
                *out_w.last_mut().unwrap() += weights[i];
            } else {
                out_p.extend_from_slice(pt(i));
                out_w.push(weights[i]);
            }
        }
        Ok(Self { dim, points: out_p, weights: out_w })
    }

    pub fn dirac(x: &[f64]) -> Self {
        Self::from_atoms(x.len(), x.to_vec(), vec![1.0]).expect("finite point")
    }

    /// `L[u]`: each letter carries weight `1/|u|`.
    pub fn of_word(u: &Word) -> Result<Self> {
        if u.is_empty() {
            return Err(Error::EmptyWord);
        }
        Self::of_words(std::slice::from_ref(u))
    }

    /// `L[u^1, ..., u^N]`: the length-weighted mixture of the `L[u^i]`, which
    /// is the empirical measure of all letters together. Empty words are
    /// ignored.
    pub fn of_words(words: &[Word]) -> Result<Self> {
        let dim = words.first().map(Word::dim).ok_or(Error::EmptyList)?;
        let total: usize = words.iter().map(Word::len).sum();
        if total == 0 {
            return Err(Error::EmptyList);
        }
        let mut points = Vec::with_capacity(total * dim);
        for w in words {
            if w.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: w.dim() });
            }
            points.extend_from_slice(w.coords());
        }
        let m = Self::assemble(dim, points, vec![1.0; total])?;
        let n = total as f64;
        Ok(Self { weights: m.weights.iter().map(|c| c / n).collect(), ..m })
    }

    /// Convex combination `sum_i lambda_i mu_i`.
    pub fn mixture(parts: &[(f64, &EmpiricalMeasure)]) -> Result<Self> {
        let dim = parts.first().map(|p| p.1.dim).ok_or_else(|| invalid("empty mixture"))?;
        let lsum: f64 = parts.iter().map(|p| p.0).sum();
        if parts.iter().any(|p| p.0 < 0.0) || (lsum - 1.0).abs() > MASS_TOL {
            return Err(invalid("mixture weights must be a probability vector"));
        }
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for (l, m) in parts {
            if m.dim != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: m.dim });
            }
            points.extend_from_slice(&m.points);
            weights.extend(m.weights.iter().map(|w| w * l));
        }
        Self::normalized(dim, points, weights)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.points.chunks_exact(self.dim).zip(self.weights.iter().copied())
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Mass of the atoms satisfying `pred`.
    pub fn mass_where(&self, mut pred: impl FnMut(&[f64]) -> bool) -> f64 {
        self.atoms().filter(|(p, _)| pred(p)).map(|(_, w)| w).sum()
    }

    /// Normalized restriction to `{pred}` together with its mass, or `None`
    /// when the set carries no mass.
    pub fn restrict(&self, mut pred: impl FnMut(&[f64]) -> bool) -> Option<(f64, Self)> {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for (p, w) in self.atoms() {
            if pred(p) {
                points.extend_from_slice(p);
                weights.push(w);
            }
        }
        let mass: f64 = weights.iter().sum();
        if mass <= 0.0 {
            return None;
        }
        Some((mass, Self::normalized(self.dim, points, weights).ok()?))
    }

    /// Integral of `f`.
    pub fn integrate(&self, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        self.atoms().map(|(p, w)| w * f(p)).sum()
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for (p, w) in self.atoms() {
            m.iter_mut().zip(p).for_each(|(a, x)| *a += w * x);
        }
        m
    }

    /// Axis-aligned bounding box `(lo, hi)` of the support.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for (p, _) in self.atoms() {
            for k in 0..self.dim {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }
}

/// Total variation distance `sup_A |mu(A) - nu(A)|`, half the L1 distance of
/// the weight vectors. Takes values in `[0, 1]`.
pub fn tv_distance(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<f64> {
    if mu.dim != nu.dim {
        return Err(Error::DimensionMismatch { expected: mu.dim, found: nu.dim });
    }
    let (mut i, mut j) = (0, 0);
    let mut acc = 0.0;
    while i < mu.len() || j < nu.len() {
        let ord = if i == mu.len() {
            Ordering::Greater
        } else if j == nu.len() {
            Ordering::Less
        } else {
            cmp_point(mu.point(i), nu.point(j))
        };
        match ord {
            Ordering::Less => {
                acc += mu.weights[i];
                i += 1;
            }
            Ordering::Greater => {
                acc += nu.weights[j];
                j += 1;
            }
            Ordering::Equal => {
                acc += (mu.weights[i] - nu.weights[j]).abs();
                i += 1;
                j += 1;
            }
        }
    }
    Ok((0.5 * acc).min(1.0))
}

/// The gauge `h(x) = |1/x - 1| + |1 - x|` on `x > 0`.
pub fn h_gauge(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::GaugeDomain(x));
    }
    Ok((1.0 / x - 1.0).abs() + (1.0 - x).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn word_views_share_buffer() {
        let w = Word::line(&[1.0, 2.0, 3.0, 4.0]);
        let s = w.subword(1..3);
        assert_eq!(s, Word::line(&[2.0, 3.0]));
        assert!(s.shares_buffer(&w));
        assert_eq!(s.subword(1..2).first(), Some(&[3.0][..]));
    }

    #[test]
    fn word_rejects_ragged_coords() {
        assert!(Word::new(2, vec![1.0, 2.0, 3.0]).is_err());
        assert!(Word::new(1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn empirical_of_word_counts_repeats() {
        let m = EmpiricalMeasure::of_word(&Word::line(&[0.0, 1.0, 0.0, 1.0])).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.weights(), &[0.5, 0.5]);
        assert_eq!(EmpiricalMeasure::of_word(&Word::empty(1)), Err(Error::EmptyWord));
    }

    #[test]
    fn list_measure_is_length_weighted() {
        let a = Word::line(&[0.0]);
        let b = Word::line(&[1.0, 1.0, 1.0]);
        let m = EmpiricalMeasure::of_words(&[a, Word::empty(1), b]).unwrap();
        assert_eq!(m.weights(), &[0.25, 0.75]);
        assert_eq!(EmpiricalMeasure::of_words(&[Word::empty(1), Word::empty(1)]), Err(Error::EmptyList));
    }

    #[test]
    fn merge_is_bitwise() {
        let m = EmpiricalMeasure::normalized(1, vec![0.0, -0.0, 0.0], vec![1.0, 1.0, 1.0]).unwrap();
        assert_eq!(m.len(), 2);
        let same = EmpiricalMeasure::normalized(1, vec![0.1, 0.1 + 1e-18], vec![1.0, 1.0]).unwrap();
        assert_eq!(same.len(), 1);
        let next = EmpiricalMeasure::normalized(1, vec![0.1, 0.1 + 2e-17], vec![1.0, 1.0]).unwrap();
        assert_eq!(next.len(), 2);
    }

    #[test]
    fn mixture_weights_validated() {
        let a = EmpiricalMeasure::dirac(&[0.0]);
        let b = EmpiricalMeasure::dirac(&[1.0]);
        let m = EmpiricalMeasure::mixture(&[(0.3, &a), (0.7, &b)]).unwrap();
        assert!((m.weight(0) - 0.3).abs() < 1e-15);
        assert!(EmpiricalMeasure::mixture(&[(0.3, &a), (0.3, &b)]).is_err());
    }

    #[test]
    fn tv_examples() {
        let a = EmpiricalMeasure::dirac(&[0.0]);
        let b = EmpiricalMeasure::dirac(&[1.0]);
        assert_eq!(tv_distance(&a, &b).unwrap(), 1.0);
        assert_eq!(tv_distance(&a, &a).unwrap(), 0.0);
        let m = EmpiricalMeasure::mixture(&[(0.5, &a), (0.5, &b)]).unwrap();
        assert!((tv_distance(&a, &m).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gauge_values() {
        assert_eq!(h_gauge(1.0).unwrap(), 0.0);
        assert_eq!(h_gauge(0.5).unwrap(), 1.5);
        assert_eq!(h_gauge(2.0).unwrap(), 1.5);
        assert_eq!(h_gauge(0.0), Err(Error::GaugeDomain(0.0)));
        assert!(h_gauge(-1.0).is_err());
    }

    #[test]
    fn restriction_normalizes() {
        let m = EmpiricalMeasure::normalized(1, vec![0.0, 1.0, 2.0], vec![1.0, 1.0, 2.0]).unwrap();
        let (mass, r) = m.restrict(|p| p[0] > 0.5).unwrap();
        assert!((mass - 0.75).abs() < 1e-15);
        assert!((r.weight(1) - 2.0 / 3.0).abs() < 1e-15);
        assert!(m.restrict(|p| p[0] > 5.0).is_none());
    }
}
