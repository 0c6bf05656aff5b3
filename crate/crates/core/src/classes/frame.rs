use super::{ClassStructure, Region};
use crate::error::{invalid, Error, Result};
use crate::geometry::BoxRegion;
use crate::kernels::{iterated_densities, Kernel, State};
use crate::mc::{par_map, rng_for, Execution};
use serde::{Deserialize, Serialize};

/// Estimated `rho^tau` at or below this level rejects the frame.
pub const REJECT_LEVEL: f64 = 1e-12;
/// Relative tolerance under which two exponents count as tied.
pub const TAU_TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrameConfig {
    /// Fraction of each clipped class kept around its center, per axis.
    pub quantile: f64,
    /// Fattening radius of the kept core.
    pub delta: f64,
    pub probes_per_axis: usize,
    /// Largest candidate exponent for the table.
    pub tau_max: usize,
    /// Largest `k` in the supremum defining `c_K`, capped at `4 tau_K`.
    pub k_probe: usize,
    pub samples: usize,
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self { quantile: 0.8, delta: 0.05, probes_per_axis: 4, tau_max: 4, k_probe: 8, samples: 2000 }
    }
}

impl FrameConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.quantile > 0.0 && self.quantile <= 1.0) {
            return Err(invalid("quantile must lie in (0, 1]"));
        }
        if !(self.delta >= 0.0) || self.probes_per_axis == 0 || self.tau_max == 0 || self.k_probe == 0 {
            return Err(invalid("need delta >= 0 and positive probe, tau_max and k_probe counts"));
        }
        if self.samples == 0 {
            return Err(invalid("need at least one sample"));
        }
        Ok(())
    }
}

/// Probe location: a point of slice `slice`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbePoint {
    pub slice: usize,
    pub point: Vec<f64>,
}

/// Exponent function `tau(x, y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TauTable {
    Constant {
        tau: usize,
    },
    /// `tau(x, y)` depends only on the slice of `y`.
    PerSlice {
        taus: Vec<usize>,
    },
    /// `values[s][t]` is `tau(source s, probe t)`, source 0 being the
    /// initial state and source `1 + i` probe `i`; 0 marks pairs outside
    /// `K_j^- x K_j`. Lookups snap to the nearest admissible probes.
    Grid {
        probes: Vec<ProbePoint>,
        values: Vec<Vec<usize>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameProvenance {
    pub method: String,
    pub seed: Option<u64>,
    pub config: Option<FrameConfig>,
    /// `k` range actually used for `c_K`.
    pub k_probe_used: Option<usize>,
    pub notes: Vec<String>,
}

/// Admissible compact set split into per-class slices, relabeled so that
/// slice `0` leads to slice `1` and so on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompactFrame {
    pub dim: usize,
    /// Index in the class structure of each slice.
    pub class_ids: Vec<usize>,
    pub classes: Vec<Region>,
    /// Boxes whose union is `K_j`.
    pub slices: Vec<Vec<BoxRegion>>,
    pub tau: TauTable,
    pub tau_k: usize,
    pub c_k: f64,
    pub provenance: FrameProvenance,
    pub fingerprint: u64,
}

fn nearest<'a>(candidates: impl Iterator<Item = (usize, &'a [f64])>, x: &[f64]) -> Option<usize> {
    candidates.map(|(i, p)| (i, crate::measures::dist(p, x))).min_by(|a, b| a.1.total_cmp(&b.1)).map(|(i, _)| i)
}

impl CompactFrame {
    /// Frame with given slices and a constant exponent, no estimation.
    pub fn synthetic(dim: usize, slices: Vec<Vec<BoxRegion>>, tau: usize, c_k: f64) -> Result<Self> {
        if slices.is_empty() || slices.iter().any(Vec::is_empty) {
            return Err(invalid("every slice needs at least one box"));
        }
        for b in slices.iter().flatten() {
            b.validate()?;
            if b.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: b.dim() });
            }
        }
        if tau == 0 || !(c_k >= 1.0) {
            return Err(invalid("need tau >= 1 and c_K >= 1"));
        }
        for (i, a) in slices.iter().enumerate() {
            for b in &slices[i + 1..] {
                let touching =
                    a.iter().any(|x| b.iter().any(|y| (0..dim).all(|k| x.lo[k] <= y.hi[k] && y.lo[k] <= x.hi[k])));
                if touching {
                    return Err(invalid("slices of distinct classes must be disjoint"));
                }
            }
        }
        let classes = slices.iter().map(|s| Region::Cells { cells: s.clone() }).collect();
        let mut f = Self {
            dim,
            class_ids: (0..slices.len()).collect(),
            classes,
            slices,
            tau: TauTable::Constant { tau },
            tau_k: tau,
            c_k,
            provenance: FrameProvenance {
                method: "synthetic".into(),
                seed: None,
                config: None,
                k_probe_used: None,
                notes: Vec::new(),
            },
            fingerprint: 0,
        };
        f.fingerprint = f.compute_fingerprint();
        Ok(f)
    }

    /// Replaces the class regions; every slice box must lie in the closure
    /// of its class.
    pub fn with_classes(mut self, classes: Vec<Region>) -> Result<Self> {
        if classes.len() != self.r() {
            return Err(invalid("need one class region per slice"));
        }
        for (c, s) in classes.iter().zip(&self.slices) {
            for b in s {
                let corners = (0..1usize << self.dim).map(|mask| {
                    (0..self.dim).map(|k| if mask & (1 << k) != 0 { b.hi[k] } else { b.lo[k] }).collect::<Vec<_>>()
                });
                if corners.into_iter().any(|x| c.closure_distance(&x) > 0.0)
                    || c.overlap_volume(b) < b.volume() * (1.0 - 1e-12)
                {
                    return Err(invalid(format!("slice box {b:?} is not inside class {}", c.describe())));
                }
            }
        }
        self.classes = classes;
        self.fingerprint = self.compute_fingerprint();
        Ok(self)
    }

    /// Exponent depending on the target slice only.
    pub fn with_slice_taus(mut self, taus: Vec<usize>) -> Result<Self> {
        if taus.len() != self.r() || taus.contains(&0) {
            return Err(invalid("need one positive exponent per slice"));
        }
        self.tau_k = *taus.iter().max().unwrap();
        self.tau = TauTable::PerSlice { taus };
        self.fingerprint = self.compute_fingerprint();
        Ok(self)
    }

    /// Index of the class region containing `x`.
    pub fn class_of(&self, x: &[f64]) -> Option<usize> {
        self.classes.iter().position(|c| c.contains(x))
    }

    /// Number of slices `r`.
    pub fn r(&self) -> usize {
        self.slices.len()
    }

    pub fn in_slice(&self, j: usize, x: &[f64]) -> bool {
        self.slices[j].iter().any(|b| b.contains_closed(x))
    }

    /// Slice containing the letter, if any.
    pub fn slice_of(&self, x: &[f64]) -> Option<usize> {
        (0..self.r()).find(|&j| self.in_slice(j, x))
    }

    /// `tau(x, y)` for `y` in some `K_j` and `x` in `K_j^-` or the initial
    /// state. Outside that range the lookup still returns a value in
    /// `1..=tau_K`.
    pub fn tau(&self, x: State<'_>, y: &[f64]) -> usize {
        match &self.tau {
            TauTable::Constant { tau } => *tau,
            TauTable::PerSlice { taus } => taus[self.slice_of(y).unwrap_or(self.r() - 1)],
            TauTable::Grid { probes, values } => {
                let j = self.slice_of(y).unwrap_or(self.r() - 1);
                let t = nearest(
                    probes.iter().enumerate().filter(|(_, p)| p.slice == j).map(|(i, p)| (i, p.point.as_slice())),
                    y,
                )
                .expect("every slice has probes");
                let s = match x {
                    State::Init => 0,
                    State::Point(x) => nearest(
                        probes.iter().enumerate().filter(|(_, p)| p.slice <= j).map(|(i, p)| (i, p.point.as_slice())),
                        x,
                    )
                    .map_or(0, |i| i + 1),
                };
                values[s][t].clamp(1, self.tau_k)
            }
        }
    }

    /// FNV-1a over the geometry and exponent data.
    pub fn compute_fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |v: u64| {
            for b in v.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        eat(self.dim as u64);
        for (j, s) in self.slices.iter().enumerate() {
            eat(j as u64);
            for b in s {
                b.lo.iter().chain(&b.hi).for_each(|v| eat(v.to_bits()));
            }
        }
        eat(self.tau_k as u64);
        eat(self.c_k.to_bits());
        serde_json::to_string(&self.classes).unwrap().bytes().for_each(|b| eat(b as u64));
        match &self.tau {
            TauTable::Constant { tau } => eat(*tau as u64),
            TauTable::PerSlice { taus } => {
                eat(u64::MAX);
                taus.iter().for_each(|&t| eat(t as u64));
            }
            TauTable::Grid { probes, values } => {
                for p in probes {
                    eat(p.slice as u64);
                    p.point.iter().for_each(|v| eat(v.to_bits()));
                }
                values.iter().flatten().for_each(|&v| eat(v as u64));
            }
        }
        h
    }
}

/// Central `quantile` share of `b`, fattened by `delta`, kept inside `b`
/// shrunk by a quarter of `delta`.
fn core_box(b: &BoxRegion, quantile: f64, delta: f64) -> Option<BoxRegion> {
    let d = b.dim();
    let mut lo = Vec::with_capacity(d);
    let mut hi = Vec::with_capacity(d);
    for k in 0..d {
        let (a, z) = (b.lo[k], b.hi[k]);
        let c = 0.5 * (a + z);
        let half = 0.5 * quantile * (z - a);
        let margin = 0.25 * delta.max(1e-9 * (z - a));
        lo.push((c - half - delta).max(a + margin));
        hi.push((c + half + delta).min(z - margin));
    }
    BoxRegion::new(lo, hi).ok()
}

/// Builds an admissible compact frame over `window` for the listed classes,
/// estimating the exponent table and `c_K` at probe points.
#[allow(clippy::too_many_arguments)]
pub fn build_compact_frame<K: Kernel>(
    model: &K,
    cs: &ClassStructure,
    class_subset: &[usize],
    window: &BoxRegion,
    config: &FrameConfig,
    seed: u64,
    execution: Execution,
) -> Result<CompactFrame> {
    config.validate()?;
    window.validate()?;
    if class_subset.is_empty() {
        return Err(Error::EmptyList);
    }
    if window.dim() != cs.dim || model.dim() != cs.dim {
        return Err(Error::DimensionMismatch { expected: cs.dim, found: window.dim() });
    }
    let mut ids = class_subset.to_vec();
    ids.sort_unstable();
    ids.dedup();
    if ids.iter().any(|&j| j >= cs.len()) {
        return Err(invalid("class index out of range"));
    }
    for (a, &i) in ids.iter().enumerate() {
        if !cs.beta_reach[i] {
            return Err(Error::FrameRejected(format!("class {} is not reachable from the initial law", cs.labels[i])));
        }
        for &j in &ids[a + 1..] {
            if !cs.comparable(i, j) {
                return Err(Error::NotTotallyOrdered(format!("classes {} and {}", cs.labels[i], cs.labels[j])));
            }
        }
    }
    // Total order: i before j when i ~> j.
    ids.sort_by_key(|&i| std::cmp::Reverse(ids_below(cs, i)));

    let mut slices = Vec::with_capacity(ids.len());
    for &i in &ids {
        let pieces: Vec<BoxRegion> =
            cs.classes[i].clip_to(window).iter().filter_map(|b| core_box(b, config.quantile, config.delta)).collect();
        if pieces.is_empty() {
            return Err(Error::FrameRejected(format!("class {} does not meet the window", cs.labels[i])));
        }
        slices.push(pieces);
    }
    let mut probes = Vec::new();
    for (j, s) in slices.iter().enumerate() {
        // Probe the largest box of the slice.
        let b = s.iter().max_by(|a, b| a.volume().total_cmp(&b.volume())).unwrap();
        for p in b.midpoints(config.probes_per_axis) {
            probes.push(ProbePoint { slice: j, point: p });
        }
    }

    let k_cap = 4 * config.tau_max;
    let k_top = config.k_probe.min(k_cap).max(config.tau_max);
    let mut pairs = Vec::new();
    for (t, target) in probes.iter().enumerate() {
        pairs.push((0usize, t));
        for (s, src) in probes.iter().enumerate() {
            if src.slice <= target.slice {
                pairs.push((s + 1, t));
            }
        }
    }
    let curves = par_map(&pairs, execution, |&(s, t)| {
        let mut rng = rng_for(seed, 0xf7a3e, (s * probes.len() + t) as u64);
        let x = if s == 0 { State::Init } else { State::Point(&probes[s - 1].point) };
        iterated_densities(model, x, &probes[t].point, k_top, config.samples, &mut rng)
    });
    let mut values = vec![vec![0usize; probes.len()]; probes.len() + 1];
    let mut num = vec![0.0f64; probes.len()];
    let mut den = vec![f64::INFINITY; probes.len()];
    for (&(s, t), curve) in pairs.iter().zip(curves) {
        let curve = curve?;
        let head = &curve[..config.tau_max];
        let best = head.iter().map(|e| e.value).fold(f64::NEG_INFINITY, f64::max);
        let tau = head.iter().position(|e| e.value >= best * (1.0 - TAU_TIE_TOL)).unwrap() + 1;
        if best <= REJECT_LEVEL {
            let from = if s == 0 { "x_init".to_string() } else { format!("{:?}", probes[s - 1].point) };
            return Err(Error::FrameRejected(format!(
                "estimated rho^tau({from}, {:?}) = {best:e} vanishes",
                probes[t].point
            )));
        }
        values[s][t] = tau;
        num[t] = num[t].max(curve.iter().map(|e| e.value).fold(0.0, f64::max));
        den[t] = den[t].min(curve[tau - 1].value);
    }
    let tau_k = values.iter().flatten().copied().max().unwrap_or(1).max(1);
    let c_k = num.iter().zip(&den).map(|(n, d)| n / d).fold(1.0, f64::max);
    let mut notes = Vec::new();
    if config.k_probe > k_cap {
        notes.push(format!("k_probe {} capped at 4 tau_max = {k_cap}", config.k_probe));
    }
    let mut frame = CompactFrame {
        dim: cs.dim,
        classes: ids.iter().map(|&i| cs.classes[i].clone()).collect(),
        class_ids: ids,
        slices,
        tau: TauTable::Grid { probes, values },
        tau_k,
        c_k,
        provenance: FrameProvenance {
            method: "build_compact_frame".into(),
            seed: Some(seed),
            config: Some(config.clone()),
            k_probe_used: Some(k_top),
            notes,
        },
        fingerprint: 0,
    };
    frame.fingerprint = frame.compute_fingerprint();
    Ok(frame)
}

fn ids_below(cs: &ClassStructure, i: usize) -> usize {
    (0..cs.len()).filter(|&j| cs.order[i][j]).count()
}

/// Re-estimates the frame inequality at every probe pair with a fresh seed
/// and returns `(violations, checked)`.
pub fn audit_frame<K: Kernel>(
    model: &K,
    frame: &CompactFrame,
    samples: usize,
    seed: u64,
    execution: Execution,
) -> Result<(usize, usize)> {
    let TauTable::Grid { probes, values } = &frame.tau else {
        return Ok((0, 0));
    };
    let k_top = frame.provenance.k_probe_used.unwrap_or(frame.tau_k);
    let mut pairs = Vec::new();
    for t in 0..probes.len() {
        for s in 0..=probes.len() {
            if values[s][t] > 0 {
                pairs.push((s, t));
            }
        }
    }
    let curves = par_map(&pairs, execution, |&(s, t)| {
        let mut rng = rng_for(seed, 0xa0d17, (s * probes.len() + t) as u64);
        let x = if s == 0 { State::Init } else { State::Point(&probes[s - 1].point) };
        iterated_densities(model, x, &probes[t].point, k_top, samples, &mut rng)
    });
    let mut num = vec![0.0f64; probes.len()];
    let mut rhs: Vec<Vec<(usize, f64)>> = vec![Vec::new(); probes.len()];
    for (&(s, t), c) in pairs.iter().zip(curves) {
        let c = c?;
        num[t] = num[t].max(c.iter().map(|e| e.value).fold(0.0, f64::max));
        rhs[t].push((s, c[values[s][t] - 1].value));
    }
    let mut bad = 0;
    for t in 0..probes.len() {
        bad += rhs[t].iter().filter(|(_, v)| num[t] > frame.c_k * v * (1.0 + 1e-12)).count();
    }
    Ok((bad, pairs.len()))
}
