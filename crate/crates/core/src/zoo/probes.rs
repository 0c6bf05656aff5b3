//! Example-specific probes: ratchets and superexponential escape.

use super::PerturbedSystem;
use crate::error::{invalid, Result};
use crate::kernels::{Kernel, State};
use crate::mc::MonteCarlo;
use crate::stats::Proportion;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatchetSide {
    /// `f(a) - a <= -1`: paths from `x <= a` never reach `[a, inf)`.
    Left,
    /// `f(a) - a >= 1`: paths from `x >= a` never reach `(-inf, a]`.
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatchetReport {
    pub a: f64,
    pub side: RatchetSide,
    pub paths: u64,
    pub length: usize,
    pub crossings: u64,
    pub pass: bool,
}

/// Width of the start window on the blocked side.
const START_SPAN: f64 = 2.0;

/// Simulates paths started uniformly in `[a - 2, a]` (left) or `[a, a + 2]`
/// (right) and counts those that ever cross the ratchet.
pub fn ratchet_check(
    model: &PerturbedSystem,
    a: f64,
    side: RatchetSide,
    length: usize,
    mc: &MonteCarlo,
) -> Result<RatchetReport> {
    let gap = model.f(a) - a;
    let ok = match side {
        RatchetSide::Left => gap <= -1.0,
        RatchetSide::Right => gap >= 1.0,
    };
    if !ok {
        return Err(invalid(format!("f(a) - a = {gap} does not make a = {a} a {side:?} ratchet")));
    }
    let crossings = mc.count(0x7a7c, |rng| {
        let u: f64 = rand::Rng::random(rng);
        let mut x = match side {
            RatchetSide::Left => a - START_SPAN * u,
            RatchetSide::Right => a + START_SPAN * u,
        };
        let mut y = [0.0];
        for _ in 0..length {
            model.sample(State::Point(&[x]), rng, &mut y);
            x = y[0];
            let crossed = match side {
                RatchetSide::Left => x >= a,
                RatchetSide::Right => x <= a,
            };
            if crossed {
                return true;
            }
        }
        false
    });
    Ok(RatchetReport { a, side, paths: mc.samples, length, crossings, pass: crossings == 0 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscapeEntry {
    pub n: usize,
    pub estimate: Proportion,
    /// `(1/n) log p_hat`; `None` when censored (no hits).
    pub log_rate: Option<f64>,
    pub log_rate_ci: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscapeReport {
    pub interval: (f64, f64),
    pub kappa: f64,
    pub entries: Vec<EscapeEntry>,
    pub strictly_decreasing: bool,
}

/// Estimates `(1/n) log P(L_n(U) >= kappa)` for each `n` in the grid, with
/// `U = (lo, hi)` and all lengths read off one path per sample.
pub fn escape_decay_probe<K: Kernel>(
    model: &K,
    interval: (f64, f64),
    kappa: f64,
    n_grid: &[usize],
    mc: &MonteCarlo,
) -> Result<EscapeReport> {
    if model.dim() != 1 {
        return Err(invalid("escape probe works on the real line"));
    }
    if n_grid.is_empty() || n_grid.contains(&0) || mc.samples == 0 {
        return Err(invalid("need a nonempty grid of positive lengths and samples > 0"));
    }
    let (lo, hi) = interval;
    let n_max = *n_grid.iter().max().unwrap();
    let hits = mc.count_many(0xe5c, n_grid.len(), |rng, acc| {
        let mut inside = Vec::with_capacity(n_max);
        let mut x = [0.0];
        let mut y = [0.0];
        for i in 0..n_max {
            let from = if i == 0 { State::Init } else { State::Point(&x) };
            model.sample(from, rng, &mut y);
            x = y;
            inside.push((lo < x[0] && x[0] < hi) as usize);
        }
        let mut count = 0;
        let mut prefix = vec![0usize; n_max + 1];
        for (i, v) in inside.iter().enumerate() {
            count += v;
            prefix[i + 1] = count;
        }
        for (slot, &n) in acc.iter_mut().zip(n_grid) {
            if prefix[n] as f64 >= kappa * n as f64 {
                *slot += 1;
            }
        }
    });
    let entries: Vec<EscapeEntry> = n_grid
        .iter()
        .zip(&hits)
        .map(|(&n, &h)| {
            let estimate = Proportion::new(h, mc.samples);
            EscapeEntry { n, estimate, log_rate: estimate.log_rate(n), log_rate_ci: estimate.log_rate_ci(n) }
        })
        .collect();
    let rates: Vec<f64> = entries.iter().map(|e| e.log_rate.unwrap_or(f64::NEG_INFINITY)).collect();
    let strictly_decreasing = rates.windows(2).all(|w| w[1] < w[0]);
    Ok(EscapeReport { interval, kappa, entries, strictly_decreasing })
}
