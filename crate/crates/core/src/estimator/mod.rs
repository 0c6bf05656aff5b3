//! Monte Carlo estimates of LP-ball probabilities, rate surfaces, the
//! Donsker-Varadhan bound and the probability inequalities behind the
//! subadditive argument.

mod convexity;
mod dv;
mod verify;

pub use convexity::{
    convexity_scan, mixture_descriptor, ConvexityConfig, ConvexityReport, ConvexityRow, MixtureVerdict,
};
pub use dv::{
    dv_entropy_lower_bound, dv_objective, dv_objective_with, weak_upper_bound_check, DvBound, DvFamily, DvTarget,
    DvWitness, WeakBoundEntry, WeakBoundReport,
};
pub use verify::{
    verify_coupling_probability, verify_decoupling_probability, verify_supermultiplicative, Factor, InequalityReport,
    Verdict,
};

use crate::error::{invalid, Result};
use crate::geometry::BoxMixture;
use crate::kernels::{sample_path, Kernel};
use crate::mc::MonteCarlo;
use crate::measures::{lp_within, EmpiricalMeasure, Word};
use crate::stats::Proportion;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

const BALL_STREAM: u64 = 0xba11;
const SURFACE_STREAM: u64 = 0x5afe;

/// Atom list of a target measure, for reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSummary {
    pub dim: usize,
    pub atoms: Vec<(Vec<f64>, f64)>,
}

impl TargetSummary {
    pub fn of(mu: &EmpiricalMeasure) -> Self {
        Self { dim: mu.dim(), atoms: mu.atoms().map(|(p, w)| (p.to_vec(), w)).collect() }
    }
}

/// Atomic stand-in for a piecewise-uniform density: `per_axis^d` cell
/// midpoints per component, each carrying its share of the mass.
pub fn density_proxy(m: &BoxMixture, per_axis: usize) -> Result<EmpiricalMeasure> {
    m.validate()?;
    if per_axis == 0 {
        return Err(invalid("proxy needs at least one point per axis"));
    }
    let d = m.dim();
    let mut points = Vec::new();
    let mut masses = Vec::new();
    for (b, w) in &m.components {
        let mids = b.midpoints(per_axis);
        let share = w / mids.len() as f64;
        for p in mids {
            points.extend(p);
            masses.push(share);
        }
    }
    EmpiricalMeasure::normalized(d, points, masses)
}

/// Set of words used as the event `W` of the probability inequalities.
#[derive(Debug, Clone)]
pub enum WordSet {
    All,
    Empty,
    /// Words whose empirical measure lies in the LP ball around `center`.
    LpBall {
        center: EmpiricalMeasure,
        radius: f64,
        closed: bool,
    },
}

impl WordSet {
    pub fn contains(&self, w: &Word) -> Result<bool> {
        match self {
            WordSet::All => Ok(true),
            WordSet::Empty => Ok(false),
            WordSet::LpBall { center, radius, closed } => {
                if w.is_empty() {
                    return Ok(false);
                }
                lp_within(&EmpiricalMeasure::of_word(w)?, center, *radius, *closed)
            }
        }
    }

    /// A point at distance more than 1 from the center's support. Filling
    /// free segments with it yields the member of a template that is
    /// farthest from the ball.
    pub(crate) fn far_point(&self, dim: usize) -> Vec<f64> {
        match self {
            WordSet::LpBall { center, .. } => center.bounding_box().1.iter().map(|v| v + 10.0).collect(),
            _ => vec![0.0; dim],
        }
    }
}

fn ball_hit(l: &EmpiricalMeasure, mu: &EmpiricalMeasure, delta: f64) -> Result<bool> {
    // The LP distance never exceeds 1, so the ball is everything from there.
    if delta >= 1.0 {
        return Ok(true);
    }
    lp_within(l, mu, delta, false)
}

/// Fraction of length-`n` paths with `d_LP(L_n, mu) < delta`.
pub fn estimate_ball_probability<K: Kernel>(
    model: &K,
    mu: &EmpiricalMeasure,
    delta: f64,
    n: usize,
    mc: &MonteCarlo,
) -> Result<Proportion> {
    if mc.samples == 0 || !(delta > 0.0) || n == 0 {
        return Err(invalid("need samples >= 1, delta > 0 and n >= 1"));
    }
    if mu.dim() != model.dim() {
        return Err(invalid("target and model differ in dimension"));
    }
    if delta >= 1.0 {
        return Ok(Proportion::new(mc.samples, mc.samples));
    }
    let hits = mc.count(BALL_STREAM, |rng| {
        let u = sample_path(model, n, rng);
        let l = EmpiricalMeasure::of_word(&u).expect("nonempty path");
        ball_hit(&l, mu, delta).expect("dimensions checked")
    });
    Ok(Proportion::new(hits, mc.samples))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateEntry {
    pub n: usize,
    pub delta: f64,
    pub estimate: Proportion,
    /// `(1/n) log p_hat`; `None` below resolution.
    pub s_hat: Option<f64>,
    /// `(1/n) log` of the interval ends; the lower one is `None` at zero hits.
    pub s_ci_low: Option<f64>,
    pub s_ci_high: f64,
}

impl RateEntry {
    pub fn below_resolution(&self) -> bool {
        self.estimate.hits == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSurface {
    pub n_grid: Vec<usize>,
    pub delta_grid: Vec<f64>,
    /// Row-major in `n`, then `delta`.
    pub entries: Vec<RateEntry>,
    pub target: TargetSummary,
    pub seed: u64,
    pub samples: u64,
    /// `(n, delta_lo, delta_hi)` where the estimate decreased in `delta`.
    pub monotonicity_violations: Vec<(usize, f64, f64)>,
    /// `s_hat` at the smallest radius for each `n`.
    pub corner_trend: Vec<Option<f64>>,
    /// `-s_hat` at the largest `n` and smallest radius.
    pub irl_proxy: Option<f64>,
}

impl RateSurface {
    pub fn entry(&self, i: usize, j: usize) -> &RateEntry {
        &self.entries[i * self.delta_grid.len() + j]
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,delta,hits,samples,p_hat,p_ci_low,p_ci_high,s_hat,s_ci_low,s_ci_high,status\n");
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.12e}")).unwrap_or_default();
        for e in &self.entries {
            let p = &e.estimate;
            let _ = writeln!(
                s,
                "{},{},{},{},{:.12e},{:.12e},{:.12e},{},{},{:.12e},{}",
                e.n,
                e.delta,
                p.hits,
                p.samples,
                p.p_hat,
                p.ci_low,
                p.ci_high,
                opt(e.s_hat),
                opt(e.s_ci_low),
                e.s_ci_high,
                if e.below_resolution() { "below_resolution" } else { "ok" }
            );
        }
        s
    }
}

fn rate_entry(n: usize, delta: f64, estimate: Proportion) -> RateEntry {
    let (lo, hi) = estimate.log_rate_ci(n);
    RateEntry { n, delta, estimate, s_hat: estimate.log_rate(n), s_ci_low: lo.is_finite().then_some(lo), s_ci_high: hi }
}

fn strictly_increasing<T: PartialOrd>(v: &[T]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

/// Ball-probability surface over `n_grid x delta_grid`. Each sampled path
/// of the largest length serves every `n` through its prefixes.
pub fn rl_diagnostic<K: Kernel>(
    model: &K,
    mu: &EmpiricalMeasure,
    delta_grid: &[f64],
    n_grid: &[usize],
    mc: &MonteCarlo,
) -> Result<RateSurface> {
    if delta_grid.is_empty() || n_grid.is_empty() {
        return Err(invalid("grids must be nonempty"));
    }
    if !strictly_increasing(delta_grid) || !strictly_increasing(n_grid) {
        return Err(invalid("grids must be strictly increasing"));
    }
    if !(delta_grid[0] > 0.0) || n_grid[0] == 0 || mc.samples == 0 {
        return Err(invalid("need delta > 0, n >= 1 and samples >= 1"));
    }
    if mu.dim() != model.dim() {
        return Err(invalid("target and model differ in dimension"));
    }
    let (nn, nd) = (n_grid.len(), delta_grid.len());
    let n_max = *n_grid.last().unwrap();
    let hits = mc.count_many(SURFACE_STREAM, nn * nd, |rng, acc| {
        let u = sample_path(model, n_max, rng);
        for (i, &n) in n_grid.iter().enumerate() {
            let l = EmpiricalMeasure::of_word(&u.subword(0..n)).expect("nonempty prefix");
            // Balls nest, so the hit pattern over the radii is a suffix;
            // locate its start by bisection.
            let (mut lo, mut hi) = (0, nd);
            while lo < hi {
                let mid = (lo + hi) / 2;
                if ball_hit(&l, mu, delta_grid[mid]).expect("dimensions checked") {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            acc[i * nd + lo..(i + 1) * nd].iter_mut().for_each(|c| *c += 1);
        }
    });
    let mut entries = Vec::with_capacity(nn * nd);
    for (i, &n) in n_grid.iter().enumerate() {
        for (j, &delta) in delta_grid.iter().enumerate() {
            entries.push(rate_entry(n, delta, Proportion::new(hits[i * nd + j], mc.samples)));
        }
    }
    let mut monotonicity_violations = Vec::new();
    for (i, &n) in n_grid.iter().enumerate() {
        for j in 1..nd {
            if hits[i * nd + j] < hits[i * nd + j - 1] {
                monotonicity_violations.push((n, delta_grid[j - 1], delta_grid[j]));
            }
        }
    }
    let corner_trend: Vec<Option<f64>> = (0..nn).map(|i| entries[i * nd].s_hat).collect();
    let irl_proxy = corner_trend.last().unwrap().map(|s| -s);
    Ok(RateSurface {
        n_grid: n_grid.to_vec(),
        delta_grid: delta_grid.to_vec(),
        entries,
        target: TargetSummary::of(mu),
        seed: mc.seed,
        samples: mc.samples,
        monotonicity_violations,
        corner_trend,
        irl_proxy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoxRegion;
    use crate::kernels::Iid;
    use crate::zoo::MonotoneWalk;

    fn unif() -> Iid {
        Iid { law: BoxMixture::uniform(BoxRegion::interval(0.0, 1.0)) }
    }

    #[test]
    fn radius_one_is_certain() {
        let mu = EmpiricalMeasure::dirac(&[50.0]);
        let p = estimate_ball_probability(&unif(), &mu, 1.0, 5, &MonteCarlo::new(10, 1)).unwrap();
        assert_eq!(p.p_hat, 1.0);
    }

    #[test]
    fn law_of_large_numbers() {
        let mu = density_proxy(&unif().law, 50).unwrap();
        let p = estimate_ball_probability(&unif(), &mu, 0.5, 20, &MonteCarlo::new(10_000, 3)).unwrap();
        assert!(p.p_hat > 0.9, "{p:?}");
    }

    #[test]
    fn monotone_walk_leaves_bounded_targets() {
        let walk = MonotoneWalk::new(0.5, None).unwrap();
        let mu = density_proxy(&BoxMixture::uniform(BoxRegion::interval(0.0, 2.0)), 20).unwrap();
        let mc = MonteCarlo::new(20_000, 5);
        let ps: Vec<f64> =
            [8, 12, 16].iter().map(|&n| estimate_ball_probability(&walk, &mu, 0.3, n, &mc).unwrap().p_hat).collect();
        assert!(ps[0] > ps[1] && ps[1] > ps[2], "{ps:?}");
    }

    #[test]
    fn surface_basics() {
        let mu = density_proxy(&unif().law, 20).unwrap();
        let mc = MonteCarlo::new(4000, 9);
        let s = rl_diagnostic(&unif(), &mu, &[0.1, 0.2, 0.4, 1.0], &[5, 10, 20], &mc).unwrap();
        for i in 0..3 {
            assert_eq!(s.entry(i, 3).s_hat, Some(0.0));
        }
        assert!(s.monotonicity_violations.is_empty());
        let again = rl_diagnostic(&unif(), &mu, &[0.1, 0.2, 0.4, 1.0], &[5, 10, 20], &mc).unwrap();
        assert_eq!(s, again);
        assert!(s.corner_trend.iter().flatten().all(|&v| v <= 0.0));
        assert_eq!(s.to_csv().lines().count(), 13);
    }

    #[test]
    fn surface_matches_single_estimates() {
        let mu = density_proxy(&unif().law, 10).unwrap();
        let mc = MonteCarlo::new(3000, 2);
        let s = rl_diagnostic(&unif(), &mu, &[0.15, 0.3], &[8], &mc).unwrap();
        // Different streams, so compare statistically.
        let p = estimate_ball_probability(&unif(), &mu, 0.3, 8, &mc).unwrap();
        let q = s.entry(0, 1).estimate;
        assert!((p.p_hat - q.p_hat).abs() < 4.0 * (p.p_hat * (1.0 - p.p_hat) / 3000.0).sqrt() + 1e-3);
    }

    #[test]
    fn rejects_bad_grids() {
        let mu = EmpiricalMeasure::dirac(&[0.5]);
        let mc = MonteCarlo::new(10, 1);
        assert!(rl_diagnostic(&unif(), &mu, &[0.2, 0.1], &[5], &mc).is_err());
        assert!(rl_diagnostic(&unif(), &mu, &[], &[5], &mc).is_err());
        assert!(rl_diagnostic(&unif(), &mu, &[0.1], &[5, 5], &mc).is_err());
    }
}
