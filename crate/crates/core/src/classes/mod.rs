//! Communicating classes, their partial order, admissibility of target
//! measures and compact frames with their exponent tables.

mod admissible;
mod discover;
mod frame;
mod text;

pub use admissible::{check_admissible, AdmissibilityReport, MeasureDescriptor};
pub use discover::{
    discover_classes_1d, grid_class_probe, product_classes_extinction, CellStatus, GridProbeReport, GridSpec,
};
pub use frame::{audit_frame, build_compact_frame, CompactFrame, FrameConfig, FrameProvenance, ProbePoint, TauTable};

use crate::error::{invalid, Result};
use crate::geometry::BoxRegion;
use serde::{Deserialize, Serialize};

/// Points closer than this to a class boundary count as outside.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// Finite description of an open class region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    /// Open interval, possibly unbounded.
    Interval { lo: f64, hi: f64 },
    /// `x_i < 0` for extinct species, `x_i > 0` for the others.
    Orthant { extinct: Vec<bool> },
    /// Union of grid cells (approximate classes).
    Cells { cells: Vec<BoxRegion> },
}

impl Region {
    pub fn dim(&self) -> usize {
        match self {
            Region::Interval { .. } => 1,
            Region::Orthant { extinct } => extinct.len(),
            Region::Cells { cells } => cells.first().map_or(0, BoxRegion::dim),
        }
    }

    /// Open membership with the boundary tolerance.
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Region::Interval { lo, hi } => lo + BOUNDARY_TOL < x[0] && x[0] < hi - BOUNDARY_TOL,
            Region::Orthant { extinct } => {
                extinct.iter().zip(x).all(|(&e, &v)| if e { v < -BOUNDARY_TOL } else { v > BOUNDARY_TOL })
            }
            Region::Cells { cells } => cells.iter().any(|c| c.contains_closed(x)),
        }
    }

    /// Distance from `x` to the closure of the region (0 inside).
    pub fn closure_distance(&self, x: &[f64]) -> f64 {
        match self {
            Region::Interval { lo, hi } => (lo - x[0]).max(x[0] - hi).max(0.0),
            Region::Orthant { extinct } => extinct
                .iter()
                .zip(x)
                .map(|(&e, &v)| {
                    let d = if e { v.max(0.0) } else { (-v).max(0.0) };
                    d * d
                })
                .sum::<f64>()
                .sqrt(),
            Region::Cells { cells } => cells.iter().map(|c| c.distance_to(x)).fold(f64::INFINITY, f64::min),
        }
    }

    /// Per-axis bounds of the region; `None` for cell unions.
    fn axis_bounds(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            Region::Interval { lo, hi } => Some((vec![*lo], vec![*hi])),
            Region::Orthant { extinct } => {
                Some(extinct.iter().map(|&e| if e { (f64::NEG_INFINITY, 0.0) } else { (0.0, f64::INFINITY) }).unzip())
            }
            Region::Cells { .. } => None,
        }
    }

    /// Lebesgue volume of the intersection with `b`.
    pub fn overlap_volume(&self, b: &BoxRegion) -> f64 {
        match self {
            Region::Cells { cells } => cells.iter().map(|c| b.overlap_with(&c.lo, &c.hi)).sum(),
            _ => {
                let (lo, hi) = self.axis_bounds().unwrap();
                b.overlap_with(&lo, &hi)
            }
        }
    }

    /// Intersection with a box as a list of boxes (empty when disjoint).
    pub fn clip_to(&self, window: &BoxRegion) -> Vec<BoxRegion> {
        let clip = |lo: &[f64], hi: &[f64]| {
            let l: Vec<f64> = lo.iter().zip(&window.lo).map(|(a, b)| a.max(*b)).collect();
            let h: Vec<f64> = hi.iter().zip(&window.hi).map(|(a, b)| a.min(*b)).collect();
            BoxRegion::new(l, h).ok()
        };
        match self {
            Region::Cells { cells } => cells.iter().filter_map(|c| clip(&c.lo, &c.hi)).collect(),
            _ => {
                let (lo, hi) = self.axis_bounds().unwrap();
                clip(&lo, &hi).into_iter().collect()
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Region::Interval { lo, hi } => format!("({lo}, {hi})"),
            Region::Orthant { extinct } => {
                extinct.iter().map(|&e| if e { "R-" } else { "R+" }).collect::<Vec<_>>().join(" x ")
            }
            Region::Cells { cells } => format!("union of {} cells", cells.len()),
        }
    }
}

/// Classes, the order `i ~> j` (reflexive) and reachability from the
/// initial law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassStructure {
    pub dim: usize,
    pub classes: Vec<Region>,
    pub labels: Vec<String>,
    /// `order[i][j]` is true when class `i` leads to class `j`.
    pub order: Vec<Vec<bool>>,
    pub beta_reach: Vec<bool>,
    pub provenance: String,
}

impl ClassStructure {
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn leads_to(&self, i: usize, j: usize) -> bool {
        self.order[i][j]
    }

    pub fn comparable(&self, i: usize, j: usize) -> bool {
        self.order[i][j] || self.order[j][i]
    }

    /// Index of the class containing `x`.
    pub fn class_of(&self, x: &[f64]) -> Option<usize> {
        self.classes.iter().position(|c| c.contains(x))
    }

    /// Strict relations `i ~> j`, `i != j`.
    pub fn strict_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|&(i, j)| i != j && self.order[i][j]).collect()
    }

    /// Checks shapes, reflexivity, transitivity and antisymmetry.
    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        if self.order.len() != n || self.order.iter().any(|r| r.len() != n) {
            return Err(invalid("order matrix must be square over the classes"));
        }
        if self.beta_reach.len() != n || self.labels.len() != n {
            return Err(invalid("labels and beta_reach need one entry per class"));
        }
        if self.classes.iter().any(|c| c.dim() != self.dim) {
            return Err(invalid("class regions disagree with the dimension"));
        }
        for i in 0..n {
            if !self.order[i][i] {
                return Err(invalid(format!("order is not reflexive at {i}")));
            }
            for j in 0..n {
                if i != j && self.order[i][j] && self.order[j][i] {
                    return Err(invalid(format!("order is not antisymmetric at ({i}, {j})")));
                }
                for k in 0..n {
                    if self.order[i][j] && self.order[j][k] && !self.order[i][k] {
                        return Err(invalid(format!("order is not transitive at ({i}, {j}, {k})")));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Reflexive transitive closure of a relation (Warshall).
pub(crate) fn transitive_closure(rel: &mut [Vec<bool>]) {
    let n = rel.len();
    for (i, row) in rel.iter_mut().enumerate() {
        row[i] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if rel[i][k] {
                for j in 0..n {
                    if rel[k][j] {
                        rel[i][j] = true;
                    }
                }
            }
        }
    }
}
