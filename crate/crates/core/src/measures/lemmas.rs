//! Randomized checks of three Lévy-Prokhorov facts on finite measures: balls
//! keep mass on open sets, mixtures move by at most the weight gap, and
//! restrictions to separated classes stay close.

use super::{lp_distance, lp_within, EmpiricalMeasure};
use crate::error::Result;
use crate::mc::{par_map, rng_for, Execution, McRng};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Absolute slack on every compared quantity.
pub const TOL: f64 = 1e-12;

/// Ball members drawn per ball-support instance.
const BALL_DRAWS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lemma {
    /// `nu(O) >= kappa` for every `nu` in a small ball around `mu`.
    BallSupport,
    /// `d(sum l_i mu_i, sum g_i nu_i) <= delta + sum |l_i - g_i|`.
    ConvexSums,
    /// Restrictions of a perturbed two-class mixture stay near the parts.
    ClassRestriction,
}

impl Lemma {
    pub const ALL: [Lemma; 3] = [Lemma::BallSupport, Lemma::ConvexSums, Lemma::ClassRestriction];

    pub fn name(self) -> &'static str {
        match self {
            Lemma::BallSupport => "ball_support",
            Lemma::ConvexSums => "convex_sums",
            Lemma::ClassRestriction => "class_restriction",
        }
    }

    fn stream(self) -> u64 {
        0x1e33_0000 + self as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub lemma: Lemma,
    pub instances: usize,
    pub checks: usize,
    pub violations: usize,
    /// Largest `lhs - rhs` seen; negative when every check had room.
    pub max_excess: f64,
}

impl LemmaReport {
    pub fn pass(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Default)]
struct Tally {
    checks: usize,
    violations: usize,
    max_excess: f64,
}

impl Tally {
    /// Records `lhs <= rhs`.
    fn le(&mut self, lhs: f64, rhs: f64) {
        self.checks += 1;
        let excess = lhs - rhs;
        if self.checks == 1 || excess > self.max_excess {
            self.max_excess = excess;
        }
        if excess > TOL {
            self.violations += 1;
        }
    }

    fn merge(mut self, o: Tally) -> Tally {
        if o.checks > 0 && (self.checks == 0 || o.max_excess > self.max_excess) {
            self.max_excess = o.max_excess;
        }
        self.checks += o.checks;
        self.violations += o.violations;
        self
    }
}

pub fn run_lemma(lemma: Lemma, instances: usize, seed: u64, execution: Execution) -> Result<LemmaReport> {
    let ids: Vec<u64> = (0..instances as u64).collect();
    let parts = par_map(&ids, execution, |&i| {
        let mut rng = rng_for(seed, lemma.stream(), i);
        let mut t = Tally::default();
        match lemma {
            Lemma::BallSupport => ball_support(&mut rng, &mut t),
            Lemma::ConvexSums => convex_sums(&mut rng, &mut t),
            Lemma::ClassRestriction => class_restriction(&mut rng, &mut t),
        }
        .map(|_| t)
    });
    let mut total = Tally::default();
    for p in parts {
        total = total.merge(p?);
    }
    Ok(LemmaReport {
        lemma,
        instances,
        checks: total.checks,
        violations: total.violations,
        max_excess: total.max_excess,
    })
}

pub fn run_all_lemmas(instances: usize, seed: u64, execution: Execution) -> Result<Vec<LemmaReport>> {
    Lemma::ALL.iter().map(|&l| run_lemma(l, instances, seed, execution)).collect()
}

/// Grid proxy of a piecewise-constant density on `[lo, hi]` with `blocks`
/// random levels, some of them zero.
fn grid_measure(rng: &mut McRng, lo: f64, hi: f64, cells: usize, blocks: usize) -> Result<EmpiricalMeasure> {
    let levels: Vec<f64> =
        (0..blocks).map(|_| if rng.random_bool(0.25) { 0.0 } else { rng.random_range(0.1..1.0) }).collect();
    let levels = if levels.iter().all(|&l| l == 0.0) { vec![1.0; blocks] } else { levels };
    let h = (hi - lo) / cells as f64;
    let points: Vec<f64> = (0..cells).map(|k| lo + (k as f64 + 0.5) * h).collect();
    let masses: Vec<f64> = (0..cells).map(|k| levels[k * blocks / cells]).collect();
    EmpiricalMeasure::normalized(1, points, masses)
}

/// A member of the open ball of radius `delta` around `mu` built by moving
/// each atom by less than `s` and sending mass `w` to `dump`, with
/// `s + w < delta`. Membership is confirmed exactly by the caller.
fn perturb(rng: &mut McRng, mu: &EmpiricalMeasure, delta: f64, dump: &[f64]) -> Result<EmpiricalMeasure> {
    let t = delta * rng.random_range(0.5..0.999);
    let s = t * rng.random_range(0.0..1.0);
    let w = t - s;
    let mut points = Vec::with_capacity(mu.len() + dump.len());
    let mut masses = Vec::with_capacity(mu.len() + dump.len());
    for (p, m) in mu.atoms() {
        let shift = if rng.random_bool(0.5) {
            (if rng.random_bool(0.5) { 1.0 } else { -1.0 }) * s * 0.999
        } else {
            rng.random_range(-1.0..=1.0) * s * 0.999
        };
        points.push(p[0] + shift);
        masses.push(m * (1.0 - w));
    }
    for &x in dump {
        points.push(x);
        masses.push(w / dump.len() as f64);
    }
    EmpiricalMeasure::normalized(1, points, masses)
}

fn mass_in(nu: &EmpiricalMeasure, a: f64, b: f64) -> f64 {
    nu.mass_where(|p| p[0] > a && p[0] < b)
}

/// `mu` a grid proxy, `O = (a, b)`; `K` is the hull of the atoms in `O`,
/// `delta = min(d(K, O^c) / 2, mu(O) / 3)` and `kappa = mu(O) / 3`.
fn ball_support(rng: &mut McRng, t: &mut Tally) -> Result<()> {
    let mu = grid_measure(rng, 0.0, 4.0, 48, 4)?;
    let (a, b, mass) = loop {
        let a = rng.random_range(-0.5..4.0);
        let b = a + rng.random_range(0.05..2.0);
        let m = mass_in(&mu, a, b);
        if m > 0.0 {
            break (a, b, m);
        }
    };
    let inside: Vec<f64> = mu.atoms().map(|(p, _)| p[0]).filter(|&x| x > a && x < b).collect();
    let (k_lo, k_hi) = (inside[0], inside[inside.len() - 1]);
    let gap = (k_lo - a).min(b - k_hi);
    let delta = (gap / 2.0).min(mass / 3.0);
    let kappa = mass / 3.0;
    for _ in 0..BALL_DRAWS {
        let dump = [if rng.random_bool(0.5) { a - 1.0 } else { b + 1.0 }];
        let nu = perturb(rng, &mu, delta, &dump)?;
        if lp_within(&mu, &nu, delta, false)? {
            t.le(kappa, mass_in(&nu, a, b));
        }
    }
    Ok(())
}

fn random_measure(rng: &mut McRng, dim: usize, max_atoms: usize) -> Result<EmpiricalMeasure> {
    let n = rng.random_range(1..=max_atoms);
    let points: Vec<f64> = (0..n * dim).map(|_| rng.random_range(0.0..1.0)).collect();
    let masses: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    EmpiricalMeasure::normalized(dim, points, masses)
}

fn simplex(rng: &mut McRng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| -rng.random_range(1e-9f64..1.0).ln()).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / s).collect()
}

fn convex_sums(rng: &mut McRng, t: &mut Tally) -> Result<()> {
    let dim = rng.random_range(1..=2);
    let n = rng.random_range(1..=4);
    let mut mus = Vec::with_capacity(n);
    let mut nus = Vec::with_capacity(n);
    let mut delta: f64 = 0.0;
    for _ in 0..n {
        let mu = random_measure(rng, dim, 4)?;
        let nu = if rng.random_bool(0.5) {
            random_measure(rng, dim, 4)?
        } else {
            let coords: Vec<f64> =
                (0..mu.len() * dim).map(|k| mu.point(k / dim)[k % dim] + rng.random_range(-0.05..0.05)).collect();
            EmpiricalMeasure::normalized(dim, coords, mu.weights().to_vec())?
        };
        delta = delta.max(lp_distance(&mu, &nu)?);
        mus.push(mu);
        nus.push(nu);
    }
    // Strict inequality `d(mu_i, nu_i) < delta`.
    delta += if rng.random_bool(0.5) { 1e-9 } else { rng.random_range(1e-9..0.05) };
    let lambda = simplex(rng, n);
    let gamma = if rng.random_bool(0.2) { lambda.clone() } else { simplex(rng, n) };
    let gap: f64 = lambda.iter().zip(&gamma).map(|(l, g)| (l - g).abs()).sum();
    let mix = |w: &[f64], ms: &[EmpiricalMeasure]| {
        let parts: Vec<(f64, &EmpiricalMeasure)> = w.iter().copied().zip(ms.iter()).collect();
        EmpiricalMeasure::mixture(&parts)
    };
    let d = lp_distance(&mix(&lambda, &mus)?, &mix(&gamma, &nus)?)?;
    t.le(d, delta + gap);
    Ok(())
}

/// Classes `C1 = (0, 1)` and `C2 = (2, 3)`. Each `mu_g` puts mass at least
/// `1 - eps` on a compact core `K_g` strictly inside its class and the rest
/// between the core and the class boundary.
fn class_restriction(rng: &mut McRng, t: &mut Tally) -> Result<()> {
    let classes = [(0.0, 1.0), (2.0, 3.0)];
    let l1: f64 = rng.random_range(0.2..0.8);
    let lambda = [l1, 1.0 - l1];
    let lmin = l1.min(1.0 - l1);
    let eps = rng.random_range(0.01..lmin / 2.0);
    let mut parts = Vec::with_capacity(2);
    let mut core_gap = f64::INFINITY;
    for &(c_lo, c_hi) in &classes {
        let margin = rng.random_range(0.05..0.3);
        let (k_lo, k_hi) = (c_lo + margin, c_hi - margin);
        let core = grid_measure(rng, k_lo, k_hi, 24, 3)?;
        let tail = eps * rng.random_range(0.0..1.0);
        let mut points: Vec<f64> = core.atoms().map(|(p, _)| p[0]).collect();
        let mut masses: Vec<f64> = core.weights().iter().map(|w| w * (1.0 - tail)).collect();
        let span = margin * 0.9;
        points.push(c_lo + rng.random_range(0.01..span));
        points.push(c_hi - rng.random_range(0.01..span));
        masses.extend([tail / 2.0, tail / 2.0]);
        let mu_g = EmpiricalMeasure::normalized(1, points, masses)?;
        let inside: Vec<f64> = core.atoms().map(|(p, _)| p[0]).collect();
        core_gap = core_gap.min((inside[0] - c_lo).min(c_hi - inside[inside.len() - 1]));
        parts.push(mu_g);
    }
    let mu = EmpiricalMeasure::mixture(&[(lambda[0], &parts[0]), (lambda[1], &parts[1])])?;
    let delta_max = (eps * lmin).min(core_gap / 2.0).min((lmin - eps) / 2.0);
    let delta = delta_max * rng.random_range(0.1..1.0);
    let dump = [rng.random_range(-1.0..4.0), rng.random_range(0.0..3.0)];
    let nu = perturb(rng, &mu, delta, &dump)?;
    if !lp_within(&mu, &nu, delta, false)? {
        return Ok(());
    }
    for g in 0..2 {
        let (c_lo, c_hi) = classes[g];
        let alpha = mass_in(&nu, c_lo, c_hi);
        t.le(lambda[g] - eps, alpha);
        let Some((_, nu_g)) = nu.restrict(|p| p[0] > c_lo && p[0] < c_hi) else {
            continue;
        };
        let m = eps / lambda[g] * (1.0 + lambda[1 - g]) + delta * (1.0 + 1.0 / lambda[g]);
        t.le(lp_distance(&parts[g], &nu_g)?, m);
    }
    Ok(())
}
