//! Word surgery: slicing, stitching, reordering, coupling and decoupling,
//! plus the geographic bounds they satisfy and randomized sweeps checking
//! those bounds.

pub mod bounds;
pub mod sweep;
mod text;

use crate::classes::CompactFrame;
use crate::error::{invalid, Error, Result};
use crate::kernels::State;
use crate::measures::Word;
use serde::{Deserialize, Serialize};
use std::ops::Range;

/// Per-slice subwords of one source word.
#[derive(Debug, Clone, PartialEq)]
pub struct SlicedWord {
    /// `u^1, ..., u^r`, possibly empty.
    pub subwords: Vec<Word>,
    /// Half-open source ranges of the non-empty subwords.
    pub positions: Vec<Option<Range<usize>>>,
    pub source_length: usize,
    pub frame: u64,
}

impl SlicedWord {
    /// `|F_n(u)|`, the total letter count of the subwords.
    pub fn total_len(&self) -> usize {
        self.subwords.iter().map(Word::len).sum()
    }

    pub fn is_all_empty(&self) -> bool {
        self.subwords.iter().all(Word::is_empty)
    }
}

/// Cuts `u` into its stretches from the first to the last visit of each
/// slice. Fails when two stretches overlap or appear out of class order,
/// which no trajectory of the chain can produce.
pub fn slice(u: &Word, frame: &CompactFrame) -> Result<SlicedWord> {
    if u.dim() != frame.dim {
        return Err(Error::DimensionMismatch { expected: frame.dim, found: u.dim() });
    }
    if u.is_empty() {
        return Err(Error::EmptyWord);
    }
    let r = frame.r();
    let mut first = vec![usize::MAX; r];
    let mut last = vec![0usize; r];
    for (i, x) in u.letters().enumerate() {
        if let Some(j) = frame.slice_of(x) {
            first[j] = first[j].min(i);
            last[j] = i;
        }
    }
    let positions: Vec<Option<Range<usize>>> =
        (0..r).map(|j| (first[j] != usize::MAX).then(|| first[j]..last[j] + 1)).collect();
    let mut end = 0;
    for p in positions.iter().flatten() {
        if p.start < end {
            return Err(invalid("slice stretches overlap or leave class order"));
        }
        end = p.end;
    }
    let subwords = positions.iter().map(|p| p.clone().map_or_else(|| Word::empty(u.dim()), |p| u.subword(p))).collect();
    Ok(SlicedWord { subwords, positions, source_length: u.len(), frame: frame.fingerprint })
}

/// Smallest nondecreasing slice assignment of the non-empty words, if any.
pub fn stitchable(vs: &[Word], frame: &CompactFrame) -> (bool, Vec<Option<usize>>) {
    let mut current = 0;
    let mut out = Vec::with_capacity(vs.len());
    for v in vs {
        if v.is_empty() {
            out.push(None);
            continue;
        }
        let (a, b) = (v.first().unwrap(), v.last().unwrap());
        match (current..frame.r()).find(|&j| frame.in_slice(j, a) && frame.in_slice(j, b)) {
            Some(j) => {
                current = j;
                out.push(Some(j));
            }
            None => return (false, out),
        }
    }
    (true, out)
}

/// One piece of a template.
#[derive(Debug, Clone, PartialEq)]
pub enum Segment {
    /// Arbitrary letters of the given count.
    Free(usize),
    /// Exactly this word.
    Fixed(Word),
}

/// The set `W_{tau_1} x {v^1} x ... x {v^k} x W_{tau_{k+1}}` of words of
/// length `total_length`.
#[derive(Debug, Clone, PartialEq)]
pub struct StitchTemplate {
    pub dim: usize,
    pub segments: Vec<Segment>,
    pub total_length: usize,
    pub frame: u64,
}

impl StitchTemplate {
    /// Lengths of the free segments, in order.
    pub fn free_lengths(&self) -> Vec<usize> {
        self.segments
            .iter()
            .filter_map(|s| match s {
                Segment::Free(l) => Some(*l),
                Segment::Fixed(_) => None,
            })
            .collect()
    }

    /// The fixed words, in order (empty ones included).
    pub fn fixed_words(&self) -> Vec<&Word> {
        self.segments
            .iter()
            .filter_map(|s| match s {
                Segment::Fixed(w) => Some(w),
                Segment::Free(_) => None,
            })
            .collect()
    }

    /// `|v|`, the number of fixed letters.
    pub fn fixed_len(&self) -> usize {
        self.fixed_words().iter().map(|w| w.len()).sum()
    }

    /// Member of the template with one filler per free segment.
    pub fn member(&self, fillers: &[Word]) -> Result<Word> {
        let free = self.free_lengths();
        if fillers.len() != free.len() {
            return Err(invalid(format!("expected {} fillers, got {}", free.len(), fillers.len())));
        }
        for (i, (f, &l)) in fillers.iter().zip(&free).enumerate() {
            if f.len() != l || (l > 0 && f.dim() != self.dim) {
                return Err(invalid(format!("filler {i} has length {} instead of {l}", f.len())));
            }
        }
        let mut it = fillers.iter();
        let parts: Vec<&Word> = self
            .segments
            .iter()
            .map(|s| match s {
                Segment::Free(_) => it.next().unwrap(),
                Segment::Fixed(w) => w,
            })
            .collect();
        Ok(Word::concat(self.dim, parts))
    }

    /// Member whose free letters are all `point`.
    pub fn member_filled_with(&self, point: &[f64]) -> Word {
        let fillers: Vec<Word> = self
            .free_lengths()
            .into_iter()
            .map(|l| Word::new(self.dim, point.iter().copied().cycle().take(l * self.dim).collect()).unwrap())
            .collect();
        self.member(&fillers).expect("filler lengths match")
    }

    /// Whether `w` has the right length and carries the fixed words at the
    /// fixed positions.
    pub fn contains(&self, w: &Word) -> bool {
        if w.len() != self.total_length || (!w.is_empty() && w.dim() != self.dim) {
            return false;
        }
        let mut pos = 0;
        for s in &self.segments {
            match s {
                Segment::Free(l) => pos += l,
                Segment::Fixed(v) => {
                    if w.subword(pos..pos + v.len()).coords() != v.coords() {
                        return false;
                    }
                    pos += v.len();
                }
            }
        }
        true
    }
}

/// `template_member` in free-function form.
pub fn template_member(t: &StitchTemplate, fillers: &[Word]) -> Result<Word> {
    t.member(fillers)
}

/// `template_contains` in free-function form.
pub fn template_contains(t: &StitchTemplate, w: &Word) -> bool {
    t.contains(w)
}

/// Stitches a stitchable list into words of length `total`, inserting free
/// segments of length `tau(x, v^i_1)` before each non-empty `v^i`.
pub fn stitch_template(vs: &[Word], total: usize, frame: &CompactFrame) -> Result<StitchTemplate> {
    if let Some(v) = vs.iter().find(|v| !v.is_empty() && v.dim() != frame.dim) {
        return Err(Error::DimensionMismatch { expected: frame.dim, found: v.dim() });
    }
    let (ok, _) = stitchable(vs, frame);
    if !ok {
        return Err(Error::NotStitchable("no nondecreasing slice assignment exists".into()));
    }
    let fixed: usize = vs.iter().map(Word::len).sum();
    let need = fixed + vs.len() * frame.tau_k;
    if need > total {
        return Err(Error::LengthBudget(format!(
            "|v| + k tau_K = {fixed} + {} * {} = {need} exceeds T = {total}",
            vs.len(),
            frame.tau_k
        )));
    }
    let mut segments = Vec::with_capacity(2 * vs.len() + 1);
    let mut prev: Option<&[f64]> = None;
    let mut used = fixed;
    for v in vs {
        let tau = match v.first() {
            None => 0,
            Some(y) => frame.tau(prev.map_or(State::Init, State::Point), y),
        };
        used += tau;
        segments.push(Segment::Free(tau));
        segments.push(Segment::Fixed(v.clone()));
        if let Some(l) = v.last() {
            prev = Some(l);
        }
    }
    segments.push(Segment::Free(total - used));
    Ok(StitchTemplate { dim: frame.dim, segments, total_length: total, frame: frame.fingerprint })
}

/// Reads the `N x r` matrix of subwords column by column.
pub fn reorder(sliced: &[SlicedWord]) -> Result<Vec<Word>> {
    let Some(first) = sliced.first() else { return Ok(Vec::new()) };
    if sliced.iter().any(|s| s.frame != first.frame || s.subwords.len() != first.subwords.len()) {
        return Err(Error::FrameMismatch);
    }
    let r = first.subwords.len();
    Ok((0..r).flat_map(|j| sliced.iter().map(move |s| s.subwords[j].clone())).collect())
}

/// Coupling of `N` words of common length `n` into words of length `total`.
pub fn couple(us: &[Word], total: usize, frame: &CompactFrame) -> Result<StitchTemplate> {
    couple_parts(us, total, frame).map(|(_, t)| t)
}

/// As [`couple`], also returning the slices.
pub fn couple_parts(us: &[Word], total: usize, frame: &CompactFrame) -> Result<(Vec<SlicedWord>, StitchTemplate)> {
    let n = us.first().ok_or(Error::EmptyList)?.len();
    if us.iter().any(|u| u.len() != n) {
        return Err(invalid("coupled words must share one length"));
    }
    let big_n = us.len();
    let need = big_n * n + big_n * frame.r() * frame.tau_k;
    if total < need {
        return Err(Error::LengthBudget(format!("T = {total} is below N n + N r tau_K = {need}")));
    }
    let sliced = us.iter().map(|u| slice(u, frame)).collect::<Result<Vec<_>>>()?;
    let list = reorder(&sliced)?;
    let t = stitch_template(&list, total, frame)?;
    Ok((sliced, t))
}

/// Class partition and proportions for the decoupling map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecoupleSpec {
    /// Side (1 or 2) of each slice, in frame order.
    pub partition: Vec<u8>,
    pub lambda: [f64; 2],
    pub eps: f64,
}

impl DecoupleSpec {
    pub fn validate(&self, r: usize) -> Result<()> {
        if self.partition.len() != r || self.partition.iter().any(|&s| s != 1 && s != 2) {
            return Err(invalid("partition needs one side in {1, 2} per slice"));
        }
        if self.lambda.iter().any(|l| !(*l > 0.0 && *l < 1.0)) || (self.lambda[0] + self.lambda[1] - 1.0).abs() > 1e-12
        {
            return Err(invalid("lambda must be two weights in (0, 1) summing to 1"));
        }
        if !(self.eps > 0.0) {
            return Err(invalid("eps must be positive"));
        }
        Ok(())
    }

    /// Number of slices on side `gamma`.
    pub fn r_side(&self, gamma: u8) -> usize {
        self.partition.iter().filter(|&&s| s == gamma).count()
    }

    /// `T_gamma(n) = ceil(n (lambda_gamma + eps)) + r_gamma tau_K`.
    pub fn t_side(&self, gamma: u8, n: usize, tau_k: usize) -> usize {
        let l = self.lambda[gamma as usize - 1] + self.eps;
        (n as f64 * l).ceil() as usize + self.r_side(gamma) * tau_k
    }

    /// Budget `(lambda_gamma + eps) n` on the letters in `C^(gamma)`.
    pub fn letter_limit(&self, gamma: u8, n: usize) -> f64 {
        (self.lambda[gamma as usize - 1] + self.eps) * n as f64
    }
}

/// Letters of `u` in the classes of side `gamma`.
pub fn side_count(u: &Word, frame: &CompactFrame, partition: &[u8], gamma: u8) -> usize {
    u.letters().filter(|x| frame.class_of(x).is_some_and(|j| partition[j] == gamma)).count()
}

/// Output of [`decouple`], with the slices it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoupled {
    pub sliced: SlicedWord,
    pub counts: [usize; 2],
    pub lists: [Vec<Word>; 2],
    pub templates: [StitchTemplate; 2],
}

/// Splits `u` across the partition into two templates of lengths `T_1`
/// and `T_2`.
pub fn decouple(u: &Word, frame: &CompactFrame, spec: &DecoupleSpec) -> Result<Decoupled> {
    spec.validate(frame.r())?;
    let n = u.len();
    let mut counts = [0usize; 2];
    for gamma in [1u8, 2] {
        let c = side_count(u, frame, &spec.partition, gamma);
        let limit = spec.letter_limit(gamma, n);
        if c as f64 > limit {
            return Err(Error::LetterBudget { side: gamma as usize, count: c, limit });
        }
        counts[gamma as usize - 1] = c;
    }
    let sliced = slice(u, frame)?;
    let lists: [Vec<Word>; 2] = [1u8, 2].map(|gamma| {
        sliced.subwords.iter().zip(&spec.partition).filter(|(_, &s)| s == gamma).map(|(w, _)| w.clone()).collect()
    });
    let t1 = stitch_template(&lists[0], spec.t_side(1, n, frame.tau_k), frame)?;
    let t2 = stitch_template(&lists[1], spec.t_side(2, n, frame.tau_k), frame)?;
    Ok(Decoupled { sliced, counts, lists, templates: [t1, t2] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::Region;
    use crate::geometry::BoxRegion;

    fn frame(r: usize, tau: usize) -> CompactFrame {
        let slices = (0..r).map(|j| vec![BoxRegion::interval(3.0 * j as f64, 3.0 * j as f64 + 1.0)]).collect();
        let classes = (0..r).map(|j| Region::Interval { lo: 3.0 * j as f64 - 0.5, hi: 3.0 * j as f64 + 1.5 }).collect();
        CompactFrame::synthetic(1, slices, tau, 1.0).unwrap().with_classes(classes).unwrap()
    }

    #[test]
    fn slice_examples() {
        let f = frame(2, 1);
        let u = Word::line(&[0.5, 0.2, 0.9]);
        let s = slice(&u, &f).unwrap();
        assert_eq!(s.subwords[0], u);
        assert!(s.subwords[1].is_empty());
        let none = slice(&Word::line(&[10.0, 1.5]), &f).unwrap();
        assert!(none.is_all_empty());
        // Letters 2, 3 in K_1 and letter 5 in K_2 (1-based).
        let u = Word::line(&[-0.4, 0.5, 0.7, 1.4, 3.5, 5.0]);
        let s = slice(&u, &f).unwrap();
        assert_eq!(s.subwords[0], Word::line(&[0.5, 0.7]));
        assert_eq!(s.subwords[1], Word::line(&[3.5]));
        assert_eq!(s.positions, vec![Some(1..3), Some(4..5)]);
        assert!(s.subwords[0].shares_buffer(&u));
        assert!(slice(&Word::line(&[3.5, 0.5]), &f).is_err());
    }

    #[test]
    fn stitchable_examples() {
        let f = frame(2, 1);
        let e = Word::empty(1);
        assert_eq!(stitchable(&[e.clone(), e.clone()], &f), (true, vec![None, None]));
        let a = Word::line(&[0.5]);
        let b = Word::line(&[3.5, 10.0, 3.2]);
        assert_eq!(stitchable(&[a.clone(), b.clone()], &f), (true, vec![Some(0), Some(1)]));
        assert!(!stitchable(&[b, a], &f).0);
    }

    #[test]
    fn stitch_examples() {
        let f = frame(2, 2);
        let e = Word::empty(1);
        let t = stitch_template(&[e.clone(), e], 10, &f).unwrap();
        assert_eq!(t.free_lengths(), vec![0, 0, 10]);
        let v = Word::line(&[0.5, 0.6]);
        let t = stitch_template(std::slice::from_ref(&v), 9, &f).unwrap();
        assert_eq!(t.free_lengths(), vec![2, 5]);
        assert_eq!(t.fixed_len(), 2);
        assert!(matches!(stitch_template(&[v.clone(), v], 5, &f), Err(Error::LengthBudget(_))));
    }

    #[test]
    fn members_and_containment() {
        let f = frame(1, 1);
        let v = Word::line(&[0.5, 0.6]);
        let t = stitch_template(std::slice::from_ref(&v), 5, &f).unwrap();
        let w = t.member(&[Word::line(&[9.0]), Word::line(&[7.0, 8.0])]).unwrap();
        assert_eq!(w, Word::line(&[9.0, 0.5, 0.6, 7.0, 8.0]));
        assert!(t.contains(&w));
        assert!(!t.contains(&Word::line(&[9.0, 0.5, 0.61, 7.0, 8.0])));
        assert!(!t.contains(&Word::line(&[0.5, 0.6])));
        assert!(t.member(&[Word::line(&[9.0]), Word::line(&[7.0])]).is_err());
        let zero = stitch_template(&[v.clone(), v.clone()], 4 + 2, &frame(1, 1)).unwrap();
        let m = zero.member_filled_with(&[100.0]);
        assert!(zero.contains(&m));
        assert_eq!(m.len(), 6);
    }

    #[test]
    fn reorder_is_column_major() {
        let f = frame(2, 1);
        let u1 = Word::line(&[0.1, 3.1]);
        let u2 = Word::line(&[0.2, 3.2]);
        let s = [slice(&u1, &f).unwrap(), slice(&u2, &f).unwrap()];
        let out = reorder(&s).unwrap();
        let want: Vec<Word> = [0.1, 0.2, 3.1, 3.2].iter().map(|&x| Word::line(&[x])).collect();
        assert_eq!(out, want);
        assert!(stitchable(&out, &f).0);
        let mut other = s[1].clone();
        other.frame ^= 1;
        assert!(matches!(reorder(&[s[0].clone(), other]), Err(Error::FrameMismatch)));
    }

    #[test]
    fn couple_examples() {
        let f = frame(2, 1);
        let u = Word::line(&[0.5, 0.6]);
        let t = couple(std::slice::from_ref(&u), 2 + 2, &f).unwrap();
        assert_eq!(t.free_lengths(), vec![1, 0, 1]);
        let far = couple(&[Word::line(&[20.0, 21.0])], 6, &f).unwrap();
        assert_eq!(far.fixed_len(), 0);
        assert_eq!(far.free_lengths(), vec![0, 0, 6]);
        assert!(matches!(couple(&[u.clone(), u], 5, &f), Err(Error::LengthBudget(_))));
    }

    #[test]
    fn decouple_examples() {
        let f = frame(5, 1);
        let u = Word::line(&[0.5, 3.5, 6.5, 9.5, 12.5]);
        let spec = DecoupleSpec { partition: vec![1, 2, 1, 1, 2], lambda: [0.6, 0.4], eps: 0.1 };
        let d = decouple(&u, &f, &spec).unwrap();
        let words = |k: usize| d.templates[k].fixed_words().iter().map(|w| w.coords()[0]).collect::<Vec<_>>();
        assert_eq!(words(0), vec![0.5, 6.5, 9.5]);
        assert_eq!(words(1), vec![3.5, 12.5]);
        assert_eq!(d.templates[0].total_length, 4 + 3);
        assert_eq!(d.templates[1].total_length, 3 + 2);
        let all_one = DecoupleSpec { partition: vec![1; 5], lambda: [0.9, 0.1], eps: 0.1 };
        let d = decouple(&u, &f, &all_one).unwrap();
        assert_eq!(d.templates[1].free_lengths(), vec![1]);
        let tight = DecoupleSpec { partition: vec![1, 2, 1, 1, 2], lambda: [0.4, 0.6], eps: 0.1 };
        assert!(matches!(decouple(&u, &f, &tight), Err(Error::LetterBudget { side: 1, .. })));
    }
}
