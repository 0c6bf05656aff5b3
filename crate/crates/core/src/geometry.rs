//! Axis-aligned boxes and piecewise-uniform laws built from them.

use crate::error::{invalid, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxRegion {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let b = Self { lo, hi };
        b.validate()?;
        Ok(b)
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        Self::new(vec![lo], vec![hi]).expect("lo < hi")
    }

    pub fn validate(&self) -> Result<()> {
        if self.lo.is_empty() || self.lo.len() != self.hi.len() {
            return Err(invalid("box corners must have the same positive dimension"));
        }
        if self.lo.iter().zip(&self.hi).any(|(a, b)| !(a.is_finite() && b.is_finite() && a < b)) {
            return Err(invalid("box needs finite lo < hi on every axis"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn contains_open(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| a < v && v < b)
    }

    pub fn contains_closed(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| a <= v && v <= b)
    }

    /// Euclidean distance from `x` to the box (0 inside).
    pub fn distance_to(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(v, (a, b))| {
                let d = (a - v).max(v - b).max(0.0);
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for k in 0..self.dim() {
            out[k] = self.lo[k] + (self.hi[k] - self.lo[k]) * rng.random::<f64>();
        }
    }

    /// Volume of the intersection with an axis-aligned product of intervals
    /// `[a_k, b_k]` (infinite ends allowed).
    pub fn overlap_with(&self, lo: &[f64], hi: &[f64]) -> f64 {
        (0..self.dim()).map(|k| (self.hi[k].min(hi[k]) - self.lo[k].max(lo[k])).max(0.0)).product()
    }

    /// Grid of `per_axis^d` cell midpoints.
    pub fn midpoints(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let d = self.dim();
        let total = per_axis.pow(d as u32);
        (0..total)
            .map(|mut idx| {
                (0..d)
                    .map(|k| {
                        let i = idx % per_axis;
                        idx /= per_axis;
                        let w = (self.hi[k] - self.lo[k]) / per_axis as f64;
                        self.lo[k] + (i as f64 + 0.5) * w
                    })
                    .collect()
            })
            .collect()
    }
}

/// Mixture of uniform laws on boxes. Densities are taken on open boxes so
/// they are lower semicontinuous.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxMixture {
    pub components: Vec<(BoxRegion, f64)>,
}

impl BoxMixture {
    pub fn uniform(b: BoxRegion) -> Self {
        Self { components: vec![(b, 1.0)] }
    }

    pub fn new(components: Vec<(BoxRegion, f64)>) -> Result<Self> {
        let m = Self { components };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.components.first().ok_or_else(|| invalid("mixture needs a component"))?.0.dim();
        let mut total = 0.0;
        for (b, w) in &self.components {
            b.validate()?;
            if b.dim() != d {
                return Err(invalid("mixture components differ in dimension"));
            }
            if !(w.is_finite() && *w > 0.0) {
                return Err(invalid("mixture weights must be positive"));
            }
            total += w;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("mixture weights sum to {total}")));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.components[0].0.dim()
    }

    pub fn density(&self, y: &[f64]) -> f64 {
        self.components.iter().filter(|(b, _)| b.contains_open(y)).map(|(b, w)| w / b.volume()).sum()
    }

    pub fn density_bound(&self) -> f64 {
        // Overlapping boxes add up, so bound by the sum.
        self.components.iter().map(|(b, w)| w / b.volume()).sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let mut u = rng.random::<f64>();
        for (b, w) in &self.components {
            if u < *w {
                return b.sample(rng, out);
            }
            u -= w;
        }
        self.components.last().unwrap().0.sample(rng, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_basics() {
        let b = BoxRegion::new(vec![0.0, 0.0], vec![2.0, 1.0]).unwrap();
        assert_eq!(b.volume(), 2.0);
        assert!(b.contains_open(&[1.0, 0.5]));
        assert!(!b.contains_open(&[0.0, 0.5]));
        assert!(b.contains_closed(&[0.0, 0.5]));
        assert_eq!(b.distance_to(&[3.0, 0.5]), 1.0);
        assert_eq!(b.overlap_with(&[1.0, f64::NEG_INFINITY], &[f64::INFINITY, 0.5]), 0.5);
        assert_eq!(b.midpoints(2).len(), 4);
        assert!(BoxRegion::new(vec![1.0], vec![0.0]).is_err());
    }

    #[test]
    fn mixture_density() {
        let m =
            BoxMixture::new(vec![(BoxRegion::interval(0.0, 0.5), 0.8), (BoxRegion::interval(0.5, 1.0), 0.2)]).unwrap();
        assert!((m.density(&[0.25]) - 1.6).abs() < 1e-15);
        assert!((m.density(&[0.75]) - 0.4).abs() < 1e-15);
        assert_eq!(m.density(&[0.5]), 0.0);
    }
}
