use super::{transitive_closure, ClassStructure, Region};
use crate::error::{invalid, Error, Result};
use crate::geometry::BoxRegion;
use crate::kernels::{tilde_density_partial, Kernel, State};
use crate::mc::{par_map, rng_for, Execution};
use serde::{Deserialize, Serialize};

const REFINE_TOL: f64 = 1e-9;

fn in_b(g: f64) -> bool {
    g > -1.0 && g < 1.0
}

/// Bisects the boundary of `{|f(x) - x| < 1}` between `out` and `inside`.
fn refine(f: &impl Fn(f64) -> f64, mut out: f64, mut inside: f64) -> f64 {
    while (inside - out).abs() > REFINE_TOL {
        let mid = 0.5 * (out + inside);
        if in_b(f(mid) - mid) {
            inside = mid;
        } else {
            out = mid;
        }
    }
    0.5 * (out + inside)
}

/// Classes of `X_{n+1} = f(X_n) + Z` with noise supported on `(-1, 1)`: the
/// connected components of `{x : f(x) - x in (-1, 1)}` inside `domain`.
/// Consecutive components are ordered by the sign of `f - id` on the gap
/// between them. `beta_support` is the interval charged by the initial law
/// (the whole domain when `None`).
pub fn discover_classes_1d(
    f: impl Fn(f64) -> f64,
    domain: (f64, f64),
    resolution: f64,
    beta_support: Option<(f64, f64)>,
) -> Result<ClassStructure> {
    let (lo, hi) = domain;
    if !(resolution > 0.0) || !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(invalid("need a finite domain lo < hi and resolution > 0"));
    }
    let n = ((hi - lo) / resolution).ceil() as usize + 1;
    let xs: Vec<f64> = (0..n).map(|i| (lo + i as f64 * resolution).min(hi)).collect();
    let fs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    for i in 1..n {
        if fs[i] < fs[i - 1] - 1e-12 * (1.0 + fs[i - 1].abs()) {
            return Err(Error::NonMonotoneDrift { x: xs[i - 1] });
        }
    }
    let inside: Vec<bool> = xs.iter().zip(&fs).map(|(x, fx)| in_b(fx - x)).collect();
    let mut intervals = Vec::new();
    let mut i = 0;
    while i < n {
        if !inside[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < n && inside[i + 1] {
            i += 1;
        }
        let a = if start == 0 { lo } else { refine(&f, xs[start - 1], xs[start]) };
        let b = if i == n - 1 { hi } else { refine(&f, xs[i + 1], xs[i]) };
        intervals.push((a, b));
        i += 1;
    }
    let m = intervals.len();
    let mut order = vec![vec![false; m]; m];
    for k in 0..m.saturating_sub(1) {
        let gap = 0.5 * (intervals[k].1 + intervals[k + 1].0);
        if f(gap) - gap >= 1.0 {
            order[k][k + 1] = true;
        } else {
            order[k + 1][k] = true;
        }
    }
    transitive_closure(&mut order);

    // Where does a point of the initial support first enter a class?
    let (p, q) = beta_support.unwrap_or(domain);
    let mut beta_reach = vec![false; m];
    let steps = ((q - p) / resolution).ceil().max(1.0) as usize;
    for s in 0..=steps {
        let x = p + (q - p) * s as f64 / steps as f64;
        let entry = if let Some(k) = intervals.iter().position(|&(a, b)| a < x && x < b) {
            Some(k)
        } else if f(x) - x >= 1.0 {
            intervals.iter().position(|&(a, _)| a >= x)
        } else {
            intervals.iter().rposition(|&(_, b)| b <= x)
        };
        if let Some(e) = entry {
            for j in 0..m {
                beta_reach[j] |= order[e][j];
            }
        }
    }
    let cs = ClassStructure {
        dim: 1,
        labels: (1..=m).map(|k| k.to_string()).collect(),
        classes: intervals.iter().map(|&(lo, hi)| Region::Interval { lo, hi }).collect(),
        order,
        beta_reach,
        provenance: "discover_classes_1d".into(),
    };
    cs.validate()?;
    Ok(cs)
}

/// Classes of the noisy Lotka-Volterra chain in dimension `d`, indexed by the
/// set of extinct species and ordered by inclusion. Class `I` is encoded by
/// the bitmask with bit `i` set when species `i + 1` is extinct.
pub fn product_classes_extinction(d: usize) -> Result<ClassStructure> {
    if d == 0 || d > 16 {
        return Err(invalid("need 1 <= d <= 16"));
    }
    let m = 1usize << d;
    let order: Vec<Vec<bool>> = (0..m).map(|i| (0..m).map(|j| i & j == i).collect()).collect();
    let labels = (0..m)
        .map(|mask| {
            let items: Vec<String> = (0..d).filter(|b| mask & (1 << b) != 0).map(|b| (b + 1).to_string()).collect();
            format!("{{{}}}", items.join(","))
        })
        .collect();
    let classes =
        (0..m).map(|mask| Region::Orthant { extinct: (0..d).map(|b| mask & (1 << b) != 0).collect() }).collect();
    Ok(ClassStructure {
        dim: d,
        classes,
        labels,
        order,
        beta_reach: vec![true; m],
        provenance: "product_classes_extinction".into(),
    })
}

/// Regular lattice of cells over a bounding box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub bounds: BoxRegion,
    pub cells: Vec<usize>,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        self.bounds.validate()?;
        let d = self.bounds.dim();
        if !(d == 1 || d == 2) || self.cells.len() != d || self.cells.contains(&0) {
            return Err(invalid("grid probe works on 1-D or 2-D grids with positive cell counts"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.cells.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn index(&self, coord: &[usize]) -> usize {
        coord.iter().zip(&self.cells).rev().fold(0, |acc, (c, n)| acc * n + c)
    }

    fn coord(&self, mut idx: usize) -> Vec<usize> {
        self.cells
            .iter()
            .map(|n| {
                let c = idx % n;
                idx /= n;
                c
            })
            .collect()
    }

    pub fn cell(&self, idx: usize) -> BoxRegion {
        let c = self.coord(idx);
        let (lo, hi) = (0..c.len())
            .map(|k| {
                let w = (self.bounds.hi[k] - self.bounds.lo[k]) / self.cells[k] as f64;
                (self.bounds.lo[k] + c[k] as f64 * w, self.bounds.lo[k] + (c[k] + 1) as f64 * w)
            })
            .unzip();
        BoxRegion { lo, hi }
    }

    fn neighbours(&self, idx: usize) -> Vec<usize> {
        let c = self.coord(idx);
        let mut out = Vec::new();
        for k in 0..c.len() {
            for delta in [-1i64, 1] {
                let v = c[k] as i64 + delta;
                if v >= 0 && (v as usize) < self.cells[k] {
                    let mut nc = c.clone();
                    nc[k] = v as usize;
                    out.push(self.index(&nc));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    /// Estimate of `rho~(x, x)` above its error bound.
    Recurrent,
    /// No path returned to the cell center.
    Transient,
    /// Positive estimate within the error bound.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridProbeReport {
    pub structure: ClassStructure,
    pub status: Vec<CellStatus>,
    pub inconclusive: Vec<usize>,
    /// Cell indices per reported class.
    pub members: Vec<Vec<usize>>,
}

/// Approximate classes from `rho~(x, x) > 0` tests at cell centers.
///
/// Recurrent cells are clustered by lattice adjacency; clusters whose
/// representatives reach each other are merged, and the order is read off
/// positivity of `rho~` between representatives.
pub fn grid_class_probe<K: Kernel>(
    model: &K,
    grid: &GridSpec,
    k_max: usize,
    samples: usize,
    seed: u64,
    execution: Execution,
) -> Result<GridProbeReport> {
    grid.validate()?;
    if grid.bounds.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), found: grid.bounds.dim() });
    }
    let cells: Vec<usize> = (0..grid.len()).collect();
    let centers: Vec<Vec<f64>> = cells.iter().map(|&i| grid.cell(i).center()).collect();
    let estimates = par_map(&cells, execution, |&i| {
        let mut rng = rng_for(seed, 0x6c1d, i as u64);
        tilde_density_partial(model, State::Point(&centers[i]), &centers[i], k_max, samples, &mut rng)
    });
    let mut status = Vec::with_capacity(cells.len());
    for e in estimates {
        let e = e?;
        status.push(if e.value > e.error_bound {
            CellStatus::Recurrent
        } else if e.value == 0.0 {
            CellStatus::Transient
        } else {
            CellStatus::Inconclusive
        });
    }

    // Connected components of recurrent cells.
    let mut comp = vec![usize::MAX; cells.len()];
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for &start in &cells {
        if status[start] != CellStatus::Recurrent || comp[start] != usize::MAX {
            continue;
        }
        let id = clusters.len();
        let mut stack = vec![start];
        let mut members = Vec::new();
        comp[start] = id;
        while let Some(c) = stack.pop() {
            members.push(c);
            for nb in grid.neighbours(c) {
                if status[nb] == CellStatus::Recurrent && comp[nb] == usize::MAX {
                    comp[nb] = id;
                    stack.push(nb);
                }
            }
        }
        members.sort_unstable();
        clusters.push(members);
    }
    let reps: Vec<usize> = clusters.iter().map(|m| m[m.len() / 2]).collect();
    let pairs: Vec<(usize, usize)> =
        (0..reps.len()).flat_map(|i| (0..reps.len()).map(move |j| (i, j))).filter(|(i, j)| i != j).collect();
    let reach = par_map(&pairs, execution, |&(i, j)| {
        let mut rng = rng_for(seed, 0x6c1e, (i * reps.len() + j) as u64);
        tilde_density_partial(model, State::Point(&centers[reps[i]]), &centers[reps[j]], k_max, samples, &mut rng)
            .map(|e| e.value > 0.0)
    });
    let m = reps.len();
    let mut rel = vec![vec![false; m]; m];
    for (&(i, j), r) in pairs.iter().zip(reach) {
        rel[i][j] = r?;
    }
    transitive_closure(&mut rel);

    // Merge clusters that reach each other.
    let mut group = vec![usize::MAX; m];
    let mut merged: Vec<Vec<usize>> = Vec::new();
    for i in 0..m {
        if group[i] != usize::MAX {
            continue;
        }
        let g = merged.len();
        let mut cells_g = Vec::new();
        for j in i..m {
            if group[j] == usize::MAX && rel[i][j] && rel[j][i] {
                group[j] = g;
                cells_g.extend(&clusters[j]);
            }
        }
        cells_g.sort_unstable();
        merged.push(cells_g);
    }
    let r = merged.len();
    let mut order = vec![vec![false; r]; r];
    for i in 0..m {
        for j in 0..m {
            if rel[i][j] {
                order[group[i]][group[j]] = true;
            }
        }
    }
    let first_of = |g: usize| (0..m).find(|&i| group[i] == g).unwrap();
    let beta: Vec<usize> = (0..r).collect();
    let beta_reach = par_map(&beta, execution, |&g| {
        let mut rng = rng_for(seed, 0x6c1f, g as u64);
        tilde_density_partial(model, State::Init, &centers[reps[first_of(g)]], k_max, samples, &mut rng)
            .map(|e| e.value > 0.0)
    })
    .into_iter()
    .collect::<Result<Vec<bool>>>()?;

    let inconclusive = cells.iter().copied().filter(|&c| status[c] == CellStatus::Inconclusive).collect();
    let structure = ClassStructure {
        dim: grid.bounds.dim(),
        classes: merged.iter().map(|m| Region::Cells { cells: m.iter().map(|&c| grid.cell(c)).collect() }).collect(),
        labels: (1..=r).map(|k| k.to_string()).collect(),
        order,
        beta_reach,
        provenance: "grid_class_probe (approximate)".into(),
    };
    structure.validate()?;
    Ok(GridProbeReport { structure, status, inconclusive, members: merged })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_class() -> impl Fn(f64) -> f64 {
        let d = crate::zoo::DriftFn::two_class_example();
        move |x| d.eval(x)
    }

    #[test]
    fn identity_has_one_class() {
        let cs = discover_classes_1d(|x| x, (-5.0, 5.0), 0.01, None).unwrap();
        assert_eq!(cs.classes, vec![Region::Interval { lo: -5.0, hi: 5.0 }]);
        assert_eq!(cs.beta_reach, vec![true]);
    }

    #[test]
    fn shift_has_no_class() {
        let cs = discover_classes_1d(|x| x - 2.0, (-5.0, 5.0), 0.01, None).unwrap();
        assert!(cs.is_empty());
    }

    #[test]
    fn two_class_example() {
        let cs = discover_classes_1d(two_class(), (-1.0, 4.0), 0.01, Some((2.2, 2.8))).unwrap();
        assert_eq!(cs.len(), 2);
        let want = [(0.0, 1.0), (2.0, 3.0)];
        for (c, (a, b)) in cs.classes.iter().zip(want) {
            let Region::Interval { lo, hi } = c else { panic!() };
            assert!((lo - a).abs() < 1e-8 && (hi - b).abs() < 1e-8, "{c:?}");
        }
        assert!(cs.leads_to(1, 0) && !cs.leads_to(0, 1));
        assert_eq!(cs.beta_reach, vec![true, true]);
        // Started in the lower class the upper one is out of reach.
        let low = discover_classes_1d(two_class(), (-1.0, 4.0), 0.01, Some((0.2, 0.8))).unwrap();
        assert_eq!(low.beta_reach, vec![true, false]);
    }

    #[test]
    fn non_monotone_rejected() {
        let r = discover_classes_1d(|x: f64| -x, (0.0, 1.0), 0.1, None);
        assert!(matches!(r, Err(Error::NonMonotoneDrift { .. })));
        assert!(discover_classes_1d(|x| x, (0.0, 1.0), 0.0, None).is_err());
    }

    #[test]
    fn extinction_classes() {
        let c1 = product_classes_extinction(1).unwrap();
        assert_eq!(c1.labels, vec!["{}", "{1}"]);
        assert!(c1.leads_to(0, 1) && !c1.leads_to(1, 0));
        let c2 = product_classes_extinction(2).unwrap();
        c2.validate().unwrap();
        assert_eq!(c2.len(), 4);
        assert!(!c2.comparable(1, 2));
        assert!(c2.leads_to(0, 3) && c2.leads_to(1, 3));
        assert_eq!(c2.classes[1], Region::Orthant { extinct: vec![true, false] });
        assert!(c2.classes[1].contains(&[-1.0, 1.0]));
    }

    #[test]
    fn grid_indexing() {
        let g = GridSpec { bounds: BoxRegion::new(vec![0.0, 0.0], vec![1.0, 2.0]).unwrap(), cells: vec![4, 2] };
        assert_eq!(g.len(), 8);
        for i in 0..8 {
            assert_eq!(g.index(&g.coord(i)), i);
        }
        assert_eq!(g.cell(5), BoxRegion::new(vec![0.25, 1.0], vec![0.5, 2.0]).unwrap());
        let mut nb = g.neighbours(0);
        nb.sort();
        assert_eq!(nb, vec![1, 4]);
    }
}
