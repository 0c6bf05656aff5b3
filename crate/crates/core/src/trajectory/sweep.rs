//! Randomized instance sweeps for the geographic inequalities. Every check
//! is exact up to an absolute tolerance of [`TOL`].

use super::{bounds, couple_parts, decouple, slice, stitch_template, DecoupleSpec, StitchTemplate};
use crate::classes::{CompactFrame, Region};
use crate::error::{invalid, Result};
use crate::geometry::BoxRegion;
use crate::mc::{par_map, rng_for, Execution, McRng};
use crate::measures::{lp_distance, lp_within, tv_distance, EmpiricalMeasure, Word};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

pub const TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    SlicingSingle,
    SlicingList,
    Stitching,
    Coupling,
    FineCoupling,
    Decoupling,
    FineDecoupling,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::SlicingSingle,
        Suite::SlicingList,
        Suite::Stitching,
        Suite::Coupling,
        Suite::FineCoupling,
        Suite::Decoupling,
        Suite::FineDecoupling,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::SlicingSingle => "slicing_single",
            Suite::SlicingList => "slicing_list",
            Suite::Stitching => "stitching",
            Suite::Coupling => "coupling",
            Suite::FineCoupling => "fine_coupling",
            Suite::Decoupling => "decoupling",
            Suite::FineDecoupling => "fine_decoupling",
        }
    }

    fn stream(self) -> u64 {
        0x5eed_0000 + self as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub suite: Suite,
    pub instances: usize,
    pub checks: usize,
    pub violations: usize,
    /// Checks whose bound is below 1, the trivial LP bound.
    pub informative: usize,
    pub first_violation: Option<String>,
}

#[derive(Default)]
struct Outcome {
    checks: usize,
    violations: usize,
    informative: usize,
    first_violation: Option<String>,
}

impl Outcome {
    fn record(&mut self, ok: bool, bound: f64, describe: impl FnOnce() -> String) {
        self.checks += 1;
        if bound < 1.0 {
            self.informative += 1;
        }
        if !ok {
            self.violations += 1;
            if self.first_violation.is_none() {
                self.first_violation = Some(describe());
            }
        }
    }

    fn lp(&mut self, a: &EmpiricalMeasure, b: &EmpiricalMeasure, bound: f64, what: &str) -> Result<()> {
        let ok = lp_within(a, b, bound + TOL, true)?;
        self.record(ok, bound, || {
            let d = lp_distance(a, b).unwrap_or(f64::NAN);
            format!("{what}: d_LP = {d} > bound {bound}")
        });
        Ok(())
    }
}

/// Runs `instances` random instances of one suite.
pub fn run_suite(suite: Suite, instances: usize, seed: u64, execution: Execution) -> Result<SweepReport> {
    let ids: Vec<usize> = (0..instances).collect();
    let outcomes = par_map(&ids, execution, |&i| {
        let mut rng = rng_for(seed, suite.stream(), i as u64);
        let mut out = Outcome::default();
        let res = match suite {
            Suite::SlicingSingle => slicing_single(&mut rng, &mut out),
            Suite::SlicingList => slicing_list(&mut rng, &mut out),
            Suite::Stitching => stitching(&mut rng, &mut out),
            Suite::Coupling => coupling(&mut rng, &mut out),
            Suite::FineCoupling => fine_coupling(&mut rng, &mut out),
            Suite::Decoupling => decoupling(&mut rng, &mut out),
            Suite::FineDecoupling => fine_decoupling(&mut rng, &mut out),
        };
        res.map(|_| out).map_err(|e| invalid(format!("{} instance {i}: {e}", suite.name())))
    });
    let mut report = SweepReport { suite, instances, checks: 0, violations: 0, informative: 0, first_violation: None };
    for o in outcomes {
        let o = o?;
        report.checks += o.checks;
        report.violations += o.violations;
        report.informative += o.informative;
        if report.first_violation.is_none() {
            report.first_violation = o.first_violation;
        }
    }
    Ok(report)
}

pub fn run_all(instances: usize, seed: u64, execution: Execution) -> Result<Vec<SweepReport>> {
    Suite::ALL.iter().map(|&s| run_suite(s, instances, seed, execution)).collect()
}

/// Classes `(3j, 3j + 2) x (0, 2)^(d-1)` with compact slices inside.
struct Geo {
    dim: usize,
    r: usize,
    classes: Vec<BoxRegion>,
    slices: Vec<Vec<BoxRegion>>,
    frame: CompactFrame,
    bbox: BoxRegion,
}

fn class_box(dim: usize, j: usize) -> BoxRegion {
    let mut lo = vec![0.0; dim];
    let mut hi = vec![2.0; dim];
    lo[0] = 3.0 * j as f64;
    hi[0] = lo[0] + 2.0;
    BoxRegion { lo, hi }
}

impl Geo {
    fn build(dim: usize, slices: Vec<Vec<BoxRegion>>, taus: Vec<usize>) -> Result<Self> {
        let r = slices.len();
        let classes: Vec<BoxRegion> = (0..r).map(|j| class_box(dim, j)).collect();
        let regions = classes
            .iter()
            .map(|c| {
                if dim == 1 {
                    Region::Interval { lo: c.lo[0], hi: c.hi[0] }
                } else {
                    Region::Cells { cells: vec![c.clone()] }
                }
            })
            .collect();
        let frame =
            CompactFrame::synthetic(dim, slices.clone(), 1, 1.0)?.with_classes(regions)?.with_slice_taus(taus)?;
        let lo = vec![-1.0; dim];
        let mut hi = vec![3.0; dim];
        hi[0] = 3.0 * r as f64;
        Ok(Self { dim, r, classes, slices, frame, bbox: BoxRegion { lo, hi } })
    }

    fn random(rng: &mut McRng, dim: usize, r: usize, tau_k: usize) -> Result<Self> {
        let slices = (0..r)
            .map(|j| {
                let c = class_box(dim, j);
                let (mut lo, mut hi): (Vec<f64>, Vec<f64>) = (0..dim)
                    .map(|k| (c.lo[k] + rng.random_range(0.1..0.6), c.lo[k] + rng.random_range(1.4..1.9)))
                    .unzip();
                if rng.random_bool(0.3) {
                    let mid = c.lo[0] + 1.0;
                    let (a, b) = (lo.clone(), hi.clone());
                    hi[0] = mid - 0.1;
                    lo[0] = a[0];
                    let mut lo2 = a;
                    lo2[0] = mid + 0.1;
                    vec![BoxRegion { lo, hi }, BoxRegion { lo: lo2, hi: b }]
                } else {
                    vec![BoxRegion { lo, hi }]
                }
            })
            .collect();
        let taus = (0..r).map(|_| rng.random_range(1..=tau_k)).collect();
        Self::build(dim, slices, taus)
    }

    fn uniform(&self, rng: &mut McRng, b: &BoxRegion) -> Vec<f64> {
        (0..self.dim).map(|k| rng.random_range(b.lo[k]..b.hi[k])).collect()
    }

    fn in_slice(&self, rng: &mut McRng, j: usize) -> Vec<f64> {
        let b = self.slices[j].choose(rng).unwrap();
        self.uniform(rng, b)
    }

    fn class_minus_slice(&self, rng: &mut McRng, j: usize) -> Vec<f64> {
        loop {
            let x = self.uniform(rng, &self.classes[j]);
            if !self.frame.in_slice(j, &x) && self.frame.class_of(&x) == Some(j) {
                return x;
            }
        }
    }

    fn outside_k(&self, rng: &mut McRng) -> Vec<f64> {
        loop {
            let x = self.uniform(rng, &self.bbox);
            if self.frame.slice_of(&x).is_none() {
                return x;
            }
        }
    }

    fn far(&self) -> Vec<f64> {
        self.bbox.hi.iter().map(|v| v + 10.0).collect()
    }

    /// Word shaped like a chain trajectory: excursions outside `K` separate
    /// one stretch per visited class, and each stretch starts and ends in
    /// `K_j` and stays in `C_j`.
    fn chain_word(&self, rng: &mut McRng, n: usize, excursion: f64) -> Word {
        let mut visited: Vec<usize> = (0..self.r).filter(|_| rng.random_bool(0.7)).collect();
        if visited.is_empty() {
            visited.push(rng.random_range(0..self.r));
        }
        visited.truncate(n);
        let v = visited.len();
        // Slots: excursion 0, block 0, excursion 1, ..., excursion v.
        let weights: Vec<f64> = (0..2 * v + 1)
            .map(|s| if s % 2 == 0 { rng.random_range(0.0..excursion) } else { rng.random_range(0.5..1.0) })
            .collect();
        let total: f64 = weights.iter().sum();
        let mut lens = vec![0usize; 2 * v + 1];
        for s in (1..2 * v).step_by(2) {
            lens[s] = 1;
        }
        for _ in 0..n - v {
            let mut u = rng.random_range(0.0..total);
            let mut s = 0;
            while u >= weights[s] && s + 1 < weights.len() {
                u -= weights[s];
                s += 1;
            }
            lens[s] += 1;
        }
        let inside = rng.random_range(0.3..1.0);
        let mut coords = Vec::with_capacity(n * self.dim);
        for (s, &l) in lens.iter().enumerate() {
            if s % 2 == 0 {
                for _ in 0..l {
                    coords.extend(self.outside_k(rng));
                }
            } else {
                let j = visited[s / 2];
                for i in 0..l {
                    let edge = i == 0 || i + 1 == l;
                    if edge || rng.random_bool(inside) {
                        coords.extend(self.in_slice(rng, j));
                    } else {
                        coords.extend(self.class_minus_slice(rng, j));
                    }
                }
            }
        }
        Word::new(self.dim, coords).unwrap()
    }

    fn members(&self, rng: &mut McRng, t: &StitchTemplate) -> [Word; 2] {
        let fillers: Vec<Word> = t
            .free_lengths()
            .into_iter()
            .map(|l| Word::new(self.dim, (0..l).flat_map(|_| self.uniform(rng, &self.bbox)).collect()).unwrap())
            .collect();
        [t.member(&fillers).unwrap(), t.member_filled_with(&self.far())]
    }
}

fn pick_dim(rng: &mut McRng) -> usize {
    if rng.random_bool(0.8) {
        1
    } else {
        2
    }
}

fn nonempty_subwords(s: &super::SlicedWord) -> Vec<Word> {
    s.subwords.iter().filter(|w| !w.is_empty()).cloned().collect()
}

fn slicing_single(rng: &mut McRng, out: &mut Outcome) -> Result<()> {
    let (dim, r) = (pick_dim(rng), rng.random_range(1..=4));
    let geo = Geo::random(rng, dim, r, 3)?;
    let n = rng.random_range(1..=60);
    let u = geo.chain_word(rng, n, 0.5);
    let s = slice(&u, &geo.frame)?;
    debug_assert!(!s.is_all_empty());
    let lu = EmpiricalMeasure::of_word(&u)?;
    let lw = EmpiricalMeasure::of_words(&nonempty_subwords(&s))?;
    let bound = bounds::slicing_single(s.total_len(), n);
    let tv = tv_distance(&lu, &lw)?;
    out.record(tv <= bound + TOL, bound, || format!("d_TV = {tv} > bound {bound} for n = {n}"));
    Ok(())
}

fn slicing_list(rng: &mut McRng, out: &mut Outcome) -> Result<()> {
    let (dim, r) = (pick_dim(rng), rng.random_range(1..=4));
    let geo = Geo::random(rng, dim, r, 3)?;
    let k = rng.random_range(1..=6);
    let n = rng.random_range(1..=40);
    let us: Vec<Word> = (0..k).map(|_| geo.chain_word(rng, n, 0.5)).collect();
    let sliced = us.iter().map(|u| slice(u, &geo.frame)).collect::<Result<Vec<_>>>()?;
    let lens: Vec<usize> = sliced.iter().map(|s| s.total_len()).collect();
    let v: Vec<Word> = sliced.iter().flat_map(nonempty_subwords).collect();
    let bound = bounds::slicing_list(&lens, n);
    out.lp(&EmpiricalMeasure::of_words(&us)?, &EmpiricalMeasure::of_words(&v)?, bound, "slicing list")
}

fn stitching(rng: &mut McRng, out: &mut Outcome) -> Result<()> {
    let long = rng.random_bool(0.4);
    let (dim, r) = (pick_dim(rng), rng.random_range(1..=4));
    let geo = Geo::random(rng, dim, r, if long { 1 } else { 3 })?;
    let k = rng.random_range(1..=6);
    let max_len = if long { 80 } else { 12 };
    let mut j = 0;
    let mut vs = Vec::with_capacity(k);
    for i in 0..k {
        if i + 1 < k && rng.random_bool(0.3) {
            vs.push(Word::empty(geo.dim));
            continue;
        }
        j = rng.random_range(j..geo.r);
        let len = rng.random_range(1..=max_len);
        let mut coords = Vec::new();
        for p in 0..len {
            let x = if p == 0 || p + 1 == len { geo.in_slice(rng, j) } else { geo.uniform(rng, &geo.bbox) };
            coords.extend(x);
        }
        vs.push(Word::new(geo.dim, coords)?);
    }
    let fixed: usize = vs.iter().map(Word::len).sum();
    let total = fixed
        + k * geo.frame.tau_k
        + if long { rng.random_range(0..=fixed / 10) } else { rng.random_range(0..=3 * fixed + 5) };
    let t = stitch_template(&vs, total, &geo.frame)?;
    let lv = EmpiricalMeasure::of_words(&vs.iter().filter(|w| !w.is_empty()).cloned().collect::<Vec<_>>())?;
    let bound = bounds::stitching(fixed, total);
    for w in geo.members(rng, &t) {
        debug_assert!(t.contains(&w));
        out.lp(&EmpiricalMeasure::of_word(&w)?, &lv, bound, "stitching")?;
    }
    Ok(())
}

fn coupling(rng: &mut McRng, out: &mut Outcome) -> Result<()> {
    let long = rng.random_bool(0.4);
    let (dim, r) = (pick_dim(rng), rng.random_range(1..=3));
    let geo = Geo::random(rng, dim, r, if long { 1 } else { 3 })?;
    let big_n = rng.random_range(1..=5);
    let (n, excursion) = if long { (rng.random_range(50..=150), 0.02) } else { (rng.random_range(1..=30), 0.5) };
    let us: Vec<Word> = (0..big_n).map(|_| geo.chain_word(rng, n, excursion)).collect();
    let need = big_n * n + big_n * geo.r * geo.frame.tau_k;
    let total = need + if long { rng.random_range(0..=need / 20) } else { rng.random_range(0..=need) };
    let (sliced, t) = couple_parts(&us, total, &geo.frame)?;
    let lens: Vec<usize> = sliced.iter().map(|s| s.total_len()).collect();
    let bound = bounds::coupling(&lens, n, total);
    let lu = EmpiricalMeasure::of_words(&us)?;
    for w in geo.members(rng, &t) {
        out.lp(&lu, &EmpiricalMeasure::of_word(&w)?, bound, "coupling")?;
    }
    Ok(())
}

/// Fattened core `K^0_j = [3j + 0.5, 3j + 1.5] x [0.5, 1.5]^(d-1)`.
fn core_box(dim: usize, j: usize, fatten: f64) -> BoxRegion {
    let c = class_box(dim, j);
    BoxRegion {
        lo: c.lo.iter().map(|v| v + 0.5 - fatten).collect(),
        hi: c.hi.iter().map(|v| v - 0.5 + fatten).collect(),
    }
}

/// `n` letters of a reference measure: at most `eps n` of them off the core
/// (but at least `margin` inside their class), each class charged.
fn base_letters(
    rng: &mut McRng,
    dim: usize,
    classes: &[usize],
    n: usize,
    eps: f64,
    margin: f64,
) -> Vec<(usize, Vec<f64>)> {
    let off = (eps * n as f64 * rng.random_range(0.0..1.0)).floor() as usize;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let j = if i < classes.len() { classes[i] } else { *classes.choose(rng).unwrap() };
        let core = core_box(dim, j, 0.0);
        let x: Vec<f64> = if i >= n - off.min(n - classes.len().min(n)) {
            let c = class_box(dim, j);
            loop {
                let x: Vec<f64> = (0..dim).map(|k| rng.random_range(c.lo[k] + margin..c.hi[k] - margin)).collect();
                if !core.contains_closed(&x) {
                    break x;
                }
            }
        } else {
            (0..dim).map(|k| rng.random_range(core.lo[k]..core.hi[k])).collect()
        };
        out.push((j, x));
    }
    out
}

/// Jitters each letter by less than `radius` and shuffles within class
/// blocks laid out in class order.
fn chain_from_base(rng: &mut McRng, dim: usize, base: &[(usize, Vec<f64>)], radius: f64) -> Word {
    let mut letters: Vec<(usize, Vec<f64>)> = base
        .iter()
        .map(|(j, x)| {
            let a = radius / (dim as f64).sqrt();
            (*j, x.iter().map(|v| v + rng.random_range(-a..a)).collect())
        })
        .collect();
    letters.shuffle(rng);
    letters.sort_by_key(|(j, _)| *j);
    Word::new(dim, letters.into_iter().flat_map(|(_, x)| x).collect()).unwrap()
}

fn measure_of(dim: usize, base: &[(usize, Vec<f64>)]) -> Result<EmpiricalMeasure> {
    let m = base.len();
    EmpiricalMeasure::from_atoms(dim, base.iter().flat_map(|(_, x)| x.clone()).collect(), vec![1.0 / m as f64; m])
}

fn fine_coupling(rng: &mut McRng, out: &mut Outcome) -> Result<()> {
    // Long words make the planar flow expensive, so the tight regime and
    // small radii stay on the line.
    let tight = rng.random_bool(0.25);
    let dim = if tight { 1 } else { pick_dim(rng) };
    let (r, tau_k, eps, delta) = if tight {
        (rng.random_range(1..=2), rng.random_range(1..=2), rng.random_range(0.005..0.02), rng.random_range(0.01..0.02))
    } else {
        let eps = rng.random_range(0.02..0.4);
        let lo = if dim == 1 { 0.05 } else { 0.15 };
        (rng.random_range(1..=3), rng.random_range(1..=3), eps, rng.random_range(lo..0.3f64.min((1.0 - eps) / 2.0)))
    };
    let slices: Vec<Vec<BoxRegion>> = (0..r).map(|j| vec![core_box(dim, j, delta)]).collect();
    let taus: Vec<usize> = (0..r).map(|j| if j == 0 { tau_k } else { rng.random_range(1..=tau_k) }).collect();
    let geo = Geo::build(dim, slices, taus)?;
    let n_min = ((tau_k as f64 / delta).ceil() as usize).max((1.0 / (1.0 - eps - delta)).ceil() as usize);
    let n = n_min + rng.random_range(0..=n_min / 2);
    let per = n + r * tau_k;
    let t_min = (per as f64 / delta).ceil() as usize;
    let total = t_min + rng.random_range(0..=t_min / 5);
    let big_n = total / per;
    if tau_k as f64 / n as f64 > delta || (n as f64) * (1.0 - eps - delta) < 1.0 || (per as f64) > total as f64 * delta
    {
        return Err(invalid("side conditions of the fine coupling bound not met"));
    }
    let classes: Vec<usize> = (0..r).collect();
    let bases: [Vec<(usize, Vec<f64>)>; 2] = [(), ()].map(|_| base_letters(rng, dim, &classes, n, eps, delta));
    let mus = [measure_of(dim, &bases[0])?, measure_of(dim, &bases[1])?];
    let mu = EmpiricalMeasure::mixture(&[(0.5, &mus[0]), (0.5, &mus[1])])?;
    let us: Vec<Word> = (0..big_n)
        .map(|i| {
            let radius = delta * rng.random_range(0.2..0.9);
            chain_from_base(rng, dim, &bases[i % 2], radius)
        })
        .collect();
    for (i, u) in us.iter().enumerate() {
        if !lp_within(&EmpiricalMeasure::of_word(u)?, &mus[i % 2], delta, true)? {
            return Err(invalid("generated word left the delta ball"));
        }
    }
    let (_, t) = couple_parts(&us, total, &geo.frame)?;
    let bound = bounds::fine_coupling(eps, delta, r);
    for w in geo.members(rng, &t) {
        out.lp(&EmpiricalMeasure::of_word(&w)?, &mu, bound, "fine coupling")?;
    }
    Ok(())
}

fn random_partition(rng: &mut McRng, r: usize) -> Vec<u8> {
    loop {
        let p: Vec<u8> = (0..r).map(|_| rng.random_range(1..=2)).collect();
        if p.contains(&1) && p.contains(&2) {
            return p;
        }
    }
}

fn decoupling(rng: &mut McRng, out: &mut Outcome) -> Result<()> {
    let long = rng.random_bool(0.4);
    let (dim, r) = (pick_dim(rng), rng.random_range(2..=5));
    let geo = Geo::random(rng, dim, r, if long { 1 } else { 3 })?;
    let (n, excursion) = if long { (rng.random_range(60..=200), 0.02) } else { (rng.random_range(2..=60), 0.5) };
    let (u, partition, s) = loop {
        let u = geo.chain_word(rng, n, excursion);
        let partition = random_partition(rng, geo.r);
        let s = slice(&u, &geo.frame)?;
        let has = |g: u8| s.subwords.iter().zip(&partition).any(|(w, &p)| p == g && !w.is_empty());
        if has(1) && has(2) {
            break (u, partition, s);
        }
    };
    let counts = [1u8, 2].map(|g| super::side_count(&u, &geo.frame, &partition, g));
    let eps = if long { rng.random_range(0.005..0.05) } else { rng.random_range(0.01..0.3) };
    let lo = (counts[0] as f64 / n as f64 - eps).max(1e-3);
    let hi = (1.0 - counts[1] as f64 / n as f64 + eps).min(1.0 - 1e-3);
    let lambda1 = if lo < hi { rng.random_range(lo..=hi) } else { 0.5 * (lo + hi) };
    let spec = DecoupleSpec { partition: partition.clone(), lambda: [lambda1, 1.0 - lambda1], eps };
    let d = match decouple(&u, &geo.frame, &spec) {
        Ok(d) => d,
        Err(crate::Error::LetterBudget { .. }) => return Ok(()),
        Err(e) => return Err(e),
    };
    debug_assert_eq!(d.sliced, s);
    for g in [1u8, 2] {
        let side = |x: &[f64]| geo.frame.class_of(x).is_some_and(|j| partition[j] == g);
        let (_, lu) = EmpiricalMeasure::of_word(&u)?.restrict(side).expect("side is charged");
        let t = &d.templates[g as usize - 1];
        let bound = bounds::decoupling(t.fixed_len(), d.counts[g as usize - 1], t.total_length);
        for w in geo.members(rng, t) {
            out.lp(&lu, &EmpiricalMeasure::of_word(&w)?, bound, "decoupling")?;
        }
    }
    Ok(())
}

fn fine_decoupling(rng: &mut McRng, out: &mut Outcome) -> Result<()> {
    let dim = pick_dim(rng);
    let r = rng.random_range(2..=4);
    let tau_k = rng.random_range(1..=2);
    let eps = rng.random_range(0.01..0.06);
    // 2 delta < min(d(K^0, C^c), lambda_gamma - eps) and delta < eps / 2.
    let delta = rng.random_range(0.1..0.49) * eps;
    let partition = random_partition(rng, r);
    let n_min = ((1 + r * tau_k) as f64 / eps).ceil() as usize;
    let n = n_min + rng.random_range(0..=n_min / 2);
    let lo = ((2.0 * eps + 2.0 * delta) * n as f64).ceil() as usize + r;
    let n1 = rng.random_range(lo..=n - lo);
    let sizes = [n1, n - n1];
    let lambda = [n1 as f64 / n as f64, (n - n1) as f64 / n as f64];
    if !(eps < lambda[0].min(lambda[1]) / 2.0 && 2.0 * delta < (lambda[0] - eps).min(lambda[1] - eps).min(0.5)) {
        return Err(invalid("side conditions of the fine decoupling bound not met"));
    }
    let slices: Vec<Vec<BoxRegion>> = (0..r).map(|j| vec![core_box(dim, j, delta)]).collect();
    let taus: Vec<usize> = (0..r).map(|j| if j == 0 { tau_k } else { rng.random_range(1..=tau_k) }).collect();
    let geo = Geo::build(dim, slices, taus)?;
    let mut base = Vec::new();
    let mut mus = Vec::new();
    for g in [1u8, 2] {
        let classes: Vec<usize> = (0..r).filter(|&j| partition[j] == g).collect();
        let b = base_letters(rng, dim, &classes, sizes[g as usize - 1], eps, 2.0 * delta);
        mus.push(measure_of(dim, &b)?);
        base.extend(b);
    }
    let mu = measure_of(dim, &base)?;
    let radius = delta * rng.random_range(0.1..0.99);
    let u = chain_from_base(rng, dim, &base, radius);
    if !lp_within(&EmpiricalMeasure::of_word(&u)?, &mu, delta, false)? {
        return Err(invalid("generated word left the open delta ball"));
    }
    let spec = DecoupleSpec { partition, lambda, eps };
    let d = decouple(&u, &geo.frame, &spec)?;
    for g in [0usize, 1] {
        let bound = bounds::fine_decoupling(eps, delta, lambda[g], lambda[1 - g]);
        for w in geo.members(rng, &d.templates[g]) {
            out.lp(&EmpiricalMeasure::of_word(&w)?, &mus[g], bound, "fine decoupling")?;
        }
    }
    Ok(())
}
