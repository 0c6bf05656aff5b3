//! Binomial proportions with exact confidence intervals.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

/// Confidence level used for every reported interval.
pub const CONFIDENCE: f64 = 0.99;

/// Clopper-Pearson interval for `hits` successes out of `n` trials.
pub fn clopper_pearson(hits: u64, n: u64, level: f64) -> (f64, f64) {
    assert!(hits <= n && n > 0, "need 0 <= hits <= n and n > 0");
    let alpha = 1.0 - level;
    let (k, nf) = (hits as f64, n as f64);
    let lo = if hits == 0 { 0.0 } else { Beta::new(k, nf - k + 1.0).unwrap().inverse_cdf(alpha / 2.0) };
    let hi = if hits == n { 1.0 } else { Beta::new(k + 1.0, nf - k).unwrap().inverse_cdf(1.0 - alpha / 2.0) };
    (lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub hits: u64,
    pub samples: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Proportion {
    pub fn new(hits: u64, samples: u64) -> Self {
        let (ci_low, ci_high) = clopper_pearson(hits, samples, CONFIDENCE);
        Self { hits, samples, p_hat: hits as f64 / samples as f64, ci_low, ci_high }
    }

    /// `(1/n) log p_hat`, or `None` when no hit was observed.
    pub fn log_rate(&self, n: usize) -> Option<f64> {
        (self.hits > 0).then(|| self.p_hat.ln() / n as f64)
    }

    /// `(1/n) log` of the interval ends; the lower end is `-inf` at zero hits.
    pub fn log_rate_ci(&self, n: usize) -> (f64, f64) {
        (self.ci_low.ln() / n as f64, self.ci_high.ln() / n as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_hits_closed_form() {
        let (lo, hi) = clopper_pearson(0, 100, 0.99);
        assert_eq!(lo, 0.0);
        assert!((hi - (1.0 - 0.005f64.powf(0.01))).abs() < 1e-9);
        let (lo, hi) = clopper_pearson(100, 100, 0.99);
        assert!((lo - 0.005f64.powf(0.01)).abs() < 1e-9);
        assert_eq!(hi, 1.0);
    }

    #[test]
    fn interval_contains_estimate() {
        for (k, n) in [(1, 10), (37, 100), (500, 1000), (9, 10)] {
            let p = Proportion::new(k, n);
            assert!(p.ci_low < p.p_hat && p.p_hat < p.ci_high);
        }
        // Symmetry of the exact interval.
        let (a, b) = clopper_pearson(3, 20, 0.99);
        let (c, d) = clopper_pearson(17, 20, 0.99);
        assert!((a - (1.0 - d)).abs() < 1e-9 && (b - (1.0 - c)).abs() < 1e-9);
    }
}
