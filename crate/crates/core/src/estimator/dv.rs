//! Donsker-Varadhan lower bound `sup_f int log(f / pf) dmu` over
//! piecewise-constant test functions, and the finite-`n` weak upper bound
//! it implies for ball probabilities.

use super::RateSurface;
use crate::error::{invalid, Error, Result};
use crate::geometry::BoxMixture;
use crate::kernels::{Kernel, State};
use crate::mc::{rng_for, MonteCarlo};
use crate::measures::EmpiricalMeasure;
use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};

const MU_PANELS: usize = 64;
const MU_ORDER: usize = 6;
/// Sub-panels per cell and Gauss-Legendre order for `int rho(x, .)` at the
/// coarse and fine resolution; their disagreement is the reported error.
const COARSE: (usize, usize) = (2, 6);
const FINE: (usize, usize) = (4, 8);
const MC_NODES: usize = 512;
const DV_STREAM: u64 = 0xd0;
const ERROR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DvFamily {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    #[serde(default = "default_cells")]
    pub cells: usize,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_sweeps")]
    pub sweeps: usize,
}

fn default_cells() -> usize {
    64
}
fn default_eps() -> f64 {
    1e-3
}
fn default_sweeps() -> usize {
    5
}

impl DvFamily {
    /// 64 cells, values in `[1e-3, 1e3]`, 5 ascent sweeps.
    pub fn on_box(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        Self { lo, hi, cells: default_cells(), eps: default_eps(), sweeps: default_sweeps() }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    fn per_axis(&self) -> Result<usize> {
        let d = self.dim();
        if d == 0 || self.hi.len() != d || self.lo.iter().zip(&self.hi).any(|(a, b)| !(a < b)) {
            return Err(invalid("family box needs lo < hi on every axis"));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) || self.sweeps == 0 {
            return Err(invalid("need 0 < eps < 1 and at least one sweep"));
        }
        let k = (self.cells as f64).powf(1.0 / d as f64).round() as usize;
        if k == 0 || k.pow(d as u32) != self.cells {
            return Err(invalid(format!("{} cells do not form a {d}-dimensional grid", self.cells)));
        }
        Ok(k)
    }

    pub fn describe(&self) -> String {
        format!(
            "piecewise constant on {} cells over {:?}..{:?}, values in [{}, {}], {} sweeps",
            self.cells,
            self.lo,
            self.hi,
            self.eps,
            1.0 / self.eps,
            self.sweeps
        )
    }
}

/// Target measure of the bound.
#[derive(Debug, Clone)]
pub enum DvTarget {
    Density(BoxMixture),
    Atoms(EmpiricalMeasure),
}

impl DvTarget {
    fn dim(&self) -> usize {
        match self {
            DvTarget::Density(m) => m.dim(),
            DvTarget::Atoms(m) => m.dim(),
        }
    }
}

/// `f = values[c]` on grid cell `c` (closed on the right at the box edge)
/// and `outside` elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DvWitness {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub per_axis: usize,
    pub values: Vec<f64>,
    pub outside: f64,
}

impl DvWitness {
    pub fn constant(lo: Vec<f64>, hi: Vec<f64>, per_axis: usize, c: f64) -> Self {
        let n = per_axis.pow(lo.len() as u32);
        Self { lo, hi, per_axis, values: vec![c; n], outside: c }
    }

    pub fn cell_of(&self, y: &[f64]) -> Option<usize> {
        let k = self.per_axis;
        let mut idx = 0;
        let mut stride = 1;
        for a in 0..self.lo.len() {
            let (lo, hi) = (self.lo[a], self.hi[a]);
            if !(y[a] >= lo && y[a] <= hi) {
                return None;
            }
            let i = (((y[a] - lo) / (hi - lo) * k as f64) as usize).min(k - 1);
            idx += i * stride;
            stride *= k;
        }
        Some(idx)
    }

    fn cell_bounds(&self, c: usize) -> (Vec<f64>, Vec<f64>) {
        let k = self.per_axis;
        let mut rest = c;
        let mut lo = Vec::with_capacity(self.lo.len());
        let mut hi = Vec::with_capacity(self.lo.len());
        for a in 0..self.lo.len() {
            let i = rest % k;
            rest /= k;
            let w = (self.hi[a] - self.lo[a]) / k as f64;
            lo.push(self.lo[a] + i as f64 * w);
            hi.push(if i + 1 == k { self.hi[a] } else { self.lo[a] + (i + 1) as f64 * w });
        }
        (lo, hi)
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        self.cell_of(y).map_or(self.outside, |c| self.values[c])
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(self.outside, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(self.outside, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DvBound {
    pub value: f64,
    /// Disagreement between two resolutions of the `pf` integrals.
    pub integration_error: f64,
    pub witness: DvWitness,
    pub family: String,
    pub method: String,
}

impl DvBound {
    /// `value - integration_error`, floored at the constant-function value.
    pub fn certified(&self) -> f64 {
        (self.value - self.integration_error).max(0.0)
    }
}

fn gl(order: usize) -> Vec<(f64, f64)> {
    GaussLegendre::new(order).expect("order >= 2").as_node_weight_pairs().to_vec()
}

/// Composite rule on `[a, b]` with `panels` panels.
fn composite(a: f64, b: f64, panels: usize, rule: &[(f64, f64)], out: &mut Vec<(f64, f64)>) {
    let h = (b - a) / panels as f64;
    for p in 0..panels {
        let (pa, pb) = (a + p as f64 * h, if p + 1 == panels { b } else { a + (p + 1) as f64 * h });
        let (mid, half) = (0.5 * (pa + pb), 0.5 * (pb - pa));
        out.extend(rule.iter().map(|&(x, w)| (mid + half * x, half * w)));
    }
}

/// Quadrature nodes for `int g dmu` (1-D density) or the atoms themselves.
fn mu_nodes(target: &DvTarget, mc: &MonteCarlo) -> Vec<(Vec<f64>, f64)> {
    match target {
        DvTarget::Atoms(m) => m.atoms().map(|(p, w)| (p.to_vec(), w)).collect(),
        DvTarget::Density(m) if m.dim() == 1 => {
            let rule = gl(MU_ORDER);
            let mut out = Vec::new();
            for (b, w) in &m.components {
                let mut pts = Vec::new();
                composite(b.lo[0], b.hi[0], MU_PANELS, &rule, &mut pts);
                let len = b.hi[0] - b.lo[0];
                out.extend(pts.into_iter().map(|(x, q)| (vec![x], w * q / len)));
            }
            out
        }
        DvTarget::Density(m) => {
            let mut rng = rng_for(mc.seed, DV_STREAM, 0);
            let mut y = vec![0.0; m.dim()];
            (0..MC_NODES)
                .map(|_| {
                    m.sample(&mut rng, &mut y);
                    (y.clone(), 1.0 / MC_NODES as f64)
                })
                .collect()
        }
    }
}

/// `mu` mass of every cell, with the outside mass last, read off the same
/// nodes that integrate `log pf`.
fn mu_masses(nodes: &[(Vec<f64>, f64)], w: &DvWitness) -> Vec<f64> {
    let n = w.values.len();
    let mut out = vec![0.0; n + 1];
    for (p, q) in nodes {
        out[w.cell_of(p).unwrap_or(n)] += q;
    }
    out
}

/// `P(x, cell c)` rows at the nodes, outside mass last, for one resolution.
/// 1-D rows come from quadrature; otherwise from `draws` kernel samples
/// per node on substream `half`.
fn transition_rows<K: Kernel>(
    model: &K,
    nodes: &[(Vec<f64>, f64)],
    w: &DvWitness,
    res: (usize, usize),
    mc: &MonteCarlo,
    half: u64,
) -> Vec<Vec<f64>> {
    let n = w.values.len();
    if model.dim() == 1 {
        let rule = gl(res.1);
        let mut pts = Vec::new();
        let mut cell_pts = Vec::with_capacity(n);
        for c in 0..n {
            let (lo, hi) = w.cell_bounds(c);
            pts.clear();
            composite(lo[0], hi[0], res.0, &rule, &mut pts);
            cell_pts.push(pts.clone());
        }
        nodes
            .iter()
            .map(|(x, _)| {
                let mut row: Vec<f64> = cell_pts
                    .iter()
                    .map(|pts| pts.iter().map(|&(y, q)| q * model.density(State::Point(x), &[y])).sum())
                    .collect();
                let inside: f64 = row.iter().sum();
                if inside > 1.0 {
                    row.iter_mut().for_each(|v| *v /= inside);
                    row.push(0.0);
                } else {
                    row.push(1.0 - inside);
                }
                row
            })
            .collect()
    } else {
        let draws = mc.samples.max(1);
        let mut y = vec![0.0; model.dim()];
        nodes
            .iter()
            .enumerate()
            .map(|(i, (x, _))| {
                let mut rng = rng_for(mc.seed, DV_STREAM + 1 + half, i as u64);
                let mut row = vec![0.0; n + 1];
                for _ in 0..draws {
                    model.sample(State::Point(x), &mut rng, &mut y);
                    row[w.cell_of(&y).unwrap_or(n)] += 1.0 / draws as f64;
                }
                row
            })
            .collect()
    }
}

struct Problem {
    masses: Vec<f64>,
    weights: Vec<f64>,
    rows: Vec<Vec<f64>>,
}

impl Problem {
    fn objective(&self, t: &[f64]) -> f64 {
        let ft: Vec<f64> = t.iter().map(|v| v.exp()).collect();
        let lin: f64 = self.masses.iter().zip(t).filter(|(m, _)| **m > 0.0).map(|(m, v)| m * v).sum();
        let logs: f64 = self
            .rows
            .iter()
            .zip(&self.weights)
            .map(|(row, q)| q * row.iter().zip(&ft).map(|(p, f)| p * f).sum::<f64>().ln())
            .sum();
        lin - logs
    }

    /// Exact maximization in coordinate `c`; the objective is concave in
    /// `t = log f`.
    fn update(&self, t: &mut [f64], c: usize, lo: f64, hi: f64) {
        let ec = t[c].exp();
        let parts: Vec<(f64, f64, f64)> = self
            .rows
            .iter()
            .zip(&self.weights)
            .filter(|(row, _)| row[c] > 0.0)
            .map(|(row, q)| {
                let pf: f64 = row.iter().zip(t.iter()).map(|(p, v)| p * v.exp()).sum();
                (*q, row[c], (pf - row[c] * ec).max(0.0))
            })
            .collect();
        let mass = self.masses[c];
        let grad = |s: f64| {
            let es = s.exp();
            mass - parts.iter().map(|&(q, p, a)| q * p * es / (a + p * es)).sum::<f64>()
        };
        t[c] = if grad(hi) >= 0.0 {
            hi
        } else if grad(lo) <= 0.0 {
            lo
        } else {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                if grad(m) > 0.0 {
                    a = m;
                } else {
                    b = m;
                }
            }
            0.5 * (a + b)
        };
    }
}

fn check_inputs<K: Kernel>(model: &K, target: &DvTarget, dim: usize) -> Result<()> {
    if model.dim() != target.dim() || dim != model.dim() {
        return Err(invalid("model, target and family differ in dimension"));
    }
    Ok(())
}

fn method_name<K: Kernel>(model: &K) -> &'static str {
    if model.dim() == 1 {
        "gauss_legendre"
    } else {
        "monte_carlo"
    }
}

/// Coordinate ascent over the family. In one dimension `pf` comes from
/// Gauss-Legendre quadrature at two resolutions; otherwise from two
/// independent batches of `mc.samples` kernel draws per node.
pub fn dv_entropy_lower_bound<K: Kernel>(
    model: &K,
    target: &DvTarget,
    family: &DvFamily,
    mc: &MonteCarlo,
) -> Result<DvBound> {
    let k = family.per_axis()?;
    check_inputs(model, target, family.dim())?;
    let shape = DvWitness::constant(family.lo.clone(), family.hi.clone(), k, 1.0);
    let nodes = mu_nodes(target, mc);
    let weights: Vec<f64> = nodes.iter().map(|(_, q)| *q).collect();
    let masses = mu_masses(&nodes, &shape);
    let fine = Problem {
        masses: masses.clone(),
        weights: weights.clone(),
        rows: transition_rows(model, &nodes, &shape, FINE, mc, 0),
    };
    let coarse = Problem { masses, weights, rows: transition_rows(model, &nodes, &shape, COARSE, mc, 1) };

    let (lo, hi) = (family.eps.ln(), -family.eps.ln());
    let m = fine.masses.len();
    let zero = vec![0.0; m];
    let pushed: Vec<f64> =
        (0..m).map(|c| fine.rows.iter().zip(&fine.weights).map(|(r, q)| q * r[c]).sum::<f64>()).collect();
    let ratio: Vec<f64> = (0..m)
        .map(|c| {
            let (a, b) = (fine.masses[c], pushed[c]);
            if a <= 0.0 {
                lo
            } else if b <= 0.0 {
                hi
            } else {
                (a / b).ln().clamp(lo, hi)
            }
        })
        .collect();
    let mut t = if fine.objective(&ratio) > fine.objective(&zero) { ratio } else { zero.clone() };
    for _ in 0..family.sweeps {
        for c in 0..m {
            fine.update(&mut t, c, lo, hi);
        }
    }
    let mut value = fine.objective(&t);
    if !(value > 0.0) {
        t = zero;
        value = 0.0;
    }
    let error = (coarse.objective(&t) - value).abs();
    let witness = DvWitness {
        lo: family.lo.clone(),
        hi: family.hi.clone(),
        per_axis: k,
        values: t[..m - 1].iter().map(|v| v.exp()).collect(),
        outside: t[m - 1].exp(),
    };
    if error > (0.1 * value.abs()).max(ERROR_FLOOR) {
        return Err(Error::IntegrationError { error, objective: value });
    }
    Ok(DvBound {
        value,
        integration_error: error,
        witness,
        family: family.describe(),
        method: method_name(model).into(),
    })
}

/// `pf(x)` for a general bounded `f` that equals `outside` off the box.
#[allow(clippy::too_many_arguments)]
fn pf_at<K: Kernel>(
    model: &K,
    f: &dyn Fn(&[f64]) -> f64,
    outside: f64,
    w: &DvWitness,
    x: &[f64],
    res: (usize, usize),
    mc: &MonteCarlo,
    node: u64,
    half: u64,
) -> f64 {
    if model.dim() == 1 {
        let rule = gl(res.1);
        let mut pts = Vec::new();
        composite(w.lo[0], w.hi[0], w.per_axis * res.0, &rule, &mut pts);
        let (mut with_f, mut mass) = (0.0, 0.0);
        for (y, q) in pts {
            let r = q * model.density(State::Point(x), &[y]);
            mass += r;
            with_f += r * f(&[y]);
        }
        if mass > 1.0 {
            with_f / mass
        } else {
            with_f + outside * (1.0 - mass)
        }
    } else {
        let draws = mc.samples.max(1);
        let mut rng = rng_for(mc.seed, DV_STREAM + 1 + half, node);
        let mut y = vec![0.0; model.dim()];
        let mut acc = 0.0;
        for _ in 0..draws {
            model.sample(State::Point(x), &mut rng, &mut y);
            acc += f(&y) / draws as f64;
        }
        acc
    }
}

/// `int log(f / pf) dmu` for a general `f` with values in `(0, inf)`,
/// equal to `outside` off the box of `grid`; `grid.per_axis` sets the panel
/// count. Returns the fine value and its disagreement with the coarse one.
pub fn dv_objective_with<K: Kernel>(
    model: &K,
    target: &DvTarget,
    f: &dyn Fn(&[f64]) -> f64,
    outside: f64,
    grid: &DvWitness,
    mc: &MonteCarlo,
) -> Result<(f64, f64)> {
    check_inputs(model, target, grid.lo.len())?;
    let nodes = mu_nodes(target, mc);
    let lin: f64 = nodes.iter().map(|(x, q)| q * f(x).ln()).sum();
    let eval = |res, half| -> f64 {
        nodes
            .iter()
            .enumerate()
            .map(|(i, (x, q))| q * pf_at(model, f, outside, grid, x, res, mc, i as u64, half).ln())
            .sum()
    };
    let fine = lin - eval(FINE, 0);
    let coarse = lin - eval(COARSE, 1);
    Ok((fine, (fine - coarse).abs()))
}

/// Objective of a witness, recomputed by direct integration of `rho f`.
pub fn dv_objective<K: Kernel>(
    model: &K,
    target: &DvTarget,
    witness: &DvWitness,
    mc: &MonteCarlo,
) -> Result<(f64, f64)> {
    dv_objective_with(model, target, &|y| witness.eval(y), witness.outside, witness, mc)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakBoundEntry {
    pub delta: f64,
    pub s_hat: Option<f64>,
    pub s_ci_low: Option<f64>,
    /// `-R_delta(f) + (1/n) log(max f / min f)`.
    pub bound: f64,
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakBoundReport {
    pub n: usize,
    pub allowance: f64,
    pub entries: Vec<WeakBoundEntry>,
    pub violations: usize,
    pub checked: usize,
    pub pass: bool,
}

/// Compares the largest-`n` row of a surface with the exponential
/// Chebyshev bound of the witness `f`: on the open ball,
/// `int log(f/pf) dL_n >= R_delta = int F_delta dmu - delta (max F_delta - inf F)`
/// with `F_delta` the windowed minimum of `F = log(f / pf)`, and
/// `E prod f(X_i) / pf(X_{i-1}) = 1`.
pub fn weak_upper_bound_check<K: Kernel>(model: &K, surface: &RateSurface, bound: &DvBound) -> Result<WeakBoundReport> {
    if model.dim() != 1 || surface.target.dim != 1 {
        return Err(invalid("the weak upper bound check works on the real line"));
    }
    let w = &bound.witness;
    let mc = MonteCarlo::new(1, surface.seed);
    let big_f = |x: f64| w.eval(&[x]).ln() - pf_at(model, &|y| w.eval(y), w.outside, w, &[x], FINE, &mc, 0, 0).ln();
    let (fmax, fmin) = (w.max(), w.min());
    let inf_f = (fmin / fmax).ln();
    let cell = (w.hi[0] - w.lo[0]) / w.per_axis as f64;
    let boundaries: Vec<f64> = (0..=w.per_axis).map(|i| w.lo[0] + i as f64 * cell).collect();
    let window_min = |y: f64, delta: f64| {
        let (a, b) = (y - delta, y + delta);
        let steps = (((b - a) / cell) * 16.0).ceil().max(16.0) as usize;
        let mut m = f64::INFINITY;
        for i in 0..=steps {
            m = m.min(big_f(a + (b - a) * i as f64 / steps as f64));
        }
        for &z in boundaries.iter().filter(|&&z| z > a && z < b) {
            m = m.min(big_f(z - 1e-12)).min(big_f(z + 1e-12));
        }
        m
    };
    let n_idx = surface.n_grid.len() - 1;
    let n = surface.n_grid[n_idx];
    let allowance = 2.0 / (surface.samples as f64).sqrt();
    let mut entries = Vec::new();
    for (j, &delta) in surface.delta_grid.iter().enumerate() {
        let e = surface.entry(n_idx, j);
        let fd: Vec<(f64, f64)> = surface.target.atoms.iter().map(|(p, q)| (window_min(p[0], delta), *q)).collect();
        let integral: f64 = fd.iter().map(|(v, q)| v * q).sum();
        let top = fd.iter().map(|(v, _)| *v).fold(f64::NEG_INFINITY, f64::max);
        let r = integral - delta.min(1.0) * (top - inf_f);
        let b = -r + (fmax / fmin).ln() / n as f64;
        let violated = e.s_ci_low.is_some_and(|lo| lo > b + allowance);
        entries.push(WeakBoundEntry { delta, s_hat: e.s_hat, s_ci_low: e.s_ci_low, bound: b, violated });
    }
    let violations = entries.iter().filter(|e| e.violated).count();
    let checked = entries.len();
    Ok(WeakBoundReport {
        n,
        allowance,
        entries,
        violations,
        checked,
        pass: (violations as f64) < 0.01 * checked as f64,
    })
}
