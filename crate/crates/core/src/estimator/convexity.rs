//! Convexity and linearity of estimated rates along mixtures.

use super::{density_proxy, rl_diagnostic, RateSurface};
use crate::classes::{check_admissible, AdmissibilityReport, ClassStructure, MeasureDescriptor};
use crate::error::{invalid, Result};
use crate::geometry::BoxMixture;
use crate::kernels::Kernel;
use crate::mc::MonteCarlo;
use crate::measures::EmpiricalMeasure;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvexityConfig {
    pub delta_grid: Vec<f64>,
    pub n_grid: Vec<usize>,
    /// Grid points per axis for atomic proxies of densities.
    #[serde(default = "default_proxy")]
    pub proxy_per_axis: usize,
}

fn default_proxy() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MixtureVerdict {
    /// `s(mix) >= lambda s(mu1) + (1 - lambda) s(mu2)` within the intervals.
    ConvexityHolds,
    ConvexityViolated,
    /// No class is charged by both ends: deviation from the linear value.
    Linear {
        deviation: f64,
        within_slack: bool,
    },
    /// Classifier says the rate is infinite; `collapsed` when the hit count
    /// at the smallest radius reached 0.
    NonAdmissible {
        collapsed: bool,
    },
    /// Some needed estimate had no hits.
    LowResolution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityRow {
    pub lambda: f64,
    pub admissibility: AdmissibilityReport,
    /// `s_hat` at the largest `n` and smallest radius.
    pub s_hat: Option<f64>,
    /// Hits at the smallest radius for each `n`.
    pub hits_at_smallest_delta: Vec<u64>,
    pub verdict: MixtureVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub rows: Vec<ConvexityRow>,
    pub ends: [Option<f64>; 2],
    /// Hits at the smallest radius for each `n`, for `mu1` and `mu2`.
    pub end_hits: [Vec<u64>; 2],
    pub end_admissible: [bool; 2],
    pub disjoint_classes: bool,
}

/// `lambda mu1 + (1 - lambda) mu2`; densities stay densities when both ends
/// are piecewise uniform.
pub fn mixture_descriptor(
    lambda: f64,
    a: &MeasureDescriptor,
    b: &MeasureDescriptor,
    per_axis: usize,
) -> Result<MeasureDescriptor> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(invalid("mixture weight must lie in [0, 1]"));
    }
    if let (MeasureDescriptor::PiecewiseUniform(x), MeasureDescriptor::PiecewiseUniform(y)) = (a, b) {
        let mut comps: Vec<_> = x.components.iter().map(|(bx, w)| (bx.clone(), lambda * w)).collect();
        comps.extend(y.components.iter().map(|(bx, w)| (bx.clone(), (1.0 - lambda) * w)));
        comps.retain(|(_, w)| *w > 0.0);
        return Ok(MeasureDescriptor::PiecewiseUniform(BoxMixture::new(comps)?));
    }
    let (pa, pb) = (proxy(a, per_axis)?, proxy(b, per_axis)?);
    let density_proxy = is_density(a) && is_density(b);
    let measure = if lambda == 1.0 {
        pa
    } else if lambda == 0.0 {
        pb
    } else {
        EmpiricalMeasure::mixture(&[(lambda, &pa), (1.0 - lambda, &pb)])?
    };
    Ok(MeasureDescriptor::Empirical { measure, density_proxy })
}

fn is_density(m: &MeasureDescriptor) -> bool {
    match m {
        MeasureDescriptor::PiecewiseUniform(_) => true,
        MeasureDescriptor::Empirical { density_proxy, .. } => *density_proxy,
    }
}

fn proxy(m: &MeasureDescriptor, per_axis: usize) -> Result<EmpiricalMeasure> {
    match m {
        MeasureDescriptor::PiecewiseUniform(b) => density_proxy(b, per_axis),
        MeasureDescriptor::Empirical { measure, .. } => Ok(measure.clone()),
    }
}

fn corner(s: &RateSurface) -> (Option<f64>, Option<f64>, f64) {
    let e = s.entry(s.n_grid.len() - 1, 0);
    (e.s_hat, e.s_ci_low, e.s_ci_high)
}

fn smallest_delta_hits(s: &RateSurface) -> Vec<u64> {
    (0..s.n_grid.len()).map(|i| s.entry(i, 0).estimate.hits).collect()
}

/// Classifies every mixture, estimates its rate surface and compares the
/// corner estimate with the chord between the ends.
pub fn convexity_scan<K: Kernel>(
    model: &K,
    cs: &ClassStructure,
    mu1: &MeasureDescriptor,
    mu2: &MeasureDescriptor,
    lambdas: &[f64],
    config: &ConvexityConfig,
    mc: &MonteCarlo,
) -> Result<ConvexityReport> {
    let per_axis = config.proxy_per_axis;
    let surface =
        |m: &MeasureDescriptor| rl_diagnostic(model, &proxy(m, per_axis)?, &config.delta_grid, &config.n_grid, mc);
    let ends = [surface(mu1)?, surface(mu2)?];
    let (c1, c2) = (corner(&ends[0]), corner(&ends[1]));
    let (r1, r2) = (check_admissible(mu1, cs)?, check_admissible(mu2, cs)?);
    let disjoint_classes = !r1.charged.iter().any(|c| r2.charged.contains(c));
    let mut rows = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let mix = mixture_descriptor(lambda, mu1, mu2, per_axis)?;
        let admissibility = check_admissible(&mix, cs)?;
        let s = surface(&mix)?;
        let (s_hat, s_lo, s_hi) = corner(&s);
        let hits_at_smallest_delta = smallest_delta_hits(&s);
        let verdict = if !admissibility.admissible() {
            MixtureVerdict::NonAdmissible { collapsed: hits_at_smallest_delta.last() == Some(&0) }
        } else {
            match (s_hat, c1.0, c2.0, s_lo, c1.1, c2.1) {
                (Some(m), Some(a), Some(b), Some(m_lo), Some(a_lo), Some(b_lo)) => {
                    let chord = lambda * a + (1.0 - lambda) * b;
                    if disjoint_classes {
                        let wide = (s_hi - m_lo) + lambda * (c1.2 - a_lo) + (1.0 - lambda) * (c2.2 - b_lo);
                        let deviation = m - chord;
                        MixtureVerdict::Linear { deviation, within_slack: deviation.abs() <= wide }
                    } else if s_hi >= lambda * a_lo + (1.0 - lambda) * b_lo {
                        MixtureVerdict::ConvexityHolds
                    } else {
                        MixtureVerdict::ConvexityViolated
                    }
                }
                _ => MixtureVerdict::LowResolution,
            }
        };
        rows.push(ConvexityRow { lambda, admissibility, s_hat, hits_at_smallest_delta, verdict });
    }
    let end_hits = ends.map(|s| smallest_delta_hits(&s));
    Ok(ConvexityReport {
        rows,
        ends: [c1.0, c2.0],
        end_hits,
        end_admissible: [r1.admissible(), r2.admissible()],
        disjoint_classes,
    })
}
