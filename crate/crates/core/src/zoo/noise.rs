//! Noise laws used by the example chains.

use crate::kernels::open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Symmetric density with support exactly `(-1, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bump {
    /// `3/4 (1 - z^2)`.
    #[default]
    Epanechnikov,
    /// `1/2`.
    Uniform,
    /// `1 - |z|`.
    Triangular,
}

impl Bump {
    pub fn density(self, z: f64) -> f64 {
        if z.abs() >= 1.0 {
            return 0.0;
        }
        match self {
            Bump::Epanechnikov => 0.75 * (1.0 - z * z),
            Bump::Uniform => 0.5,
            Bump::Triangular => 1.0 - z.abs(),
        }
    }

    pub fn sup(self) -> f64 {
        match self {
            Bump::Epanechnikov => 0.75,
            Bump::Uniform => 0.5,
            Bump::Triangular => 1.0,
        }
    }

    pub fn cdf(self, z: f64) -> f64 {
        let z = z.clamp(-1.0, 1.0);
        match self {
            Bump::Epanechnikov => (2.0 + 3.0 * z - z * z * z) / 4.0,
            Bump::Uniform => 0.5 * (z + 1.0),
            Bump::Triangular if z < 0.0 => 0.5 * (1.0 + z) * (1.0 + z),
            Bump::Triangular => 1.0 - 0.5 * (1.0 - z) * (1.0 - z),
        }
    }

    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        let u = open01(rng);
        let z = match self {
            Bump::Epanechnikov => 2.0 * ((2.0 * u - 1.0).asin() / 3.0).sin(),
            Bump::Uniform => 2.0 * u - 1.0,
            Bump::Triangular if u < 0.5 => (2.0 * u).sqrt() - 1.0,
            Bump::Triangular => 1.0 - (2.0 * (1.0 - u)).sqrt(),
        };
        // Keep the draw inside the open support.
        z.clamp(-1.0 + f64::EPSILON, 1.0 - f64::EPSILON)
    }
}

/// Positive noise for the Lotka-Volterra chain, supported on `(0, scale)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum PositiveNoise {
    /// `(2 / s) (1 - z / s)`.
    Linear { scale: f64 },
    /// `1 / s`.
    Uniform { scale: f64 },
}

impl Default for PositiveNoise {
    fn default() -> Self {
        PositiveNoise::Linear { scale: 1.0 }
    }
}

impl PositiveNoise {
    pub fn scale(self) -> f64 {
        match self {
            PositiveNoise::Linear { scale } | PositiveNoise::Uniform { scale } => scale,
        }
    }

    pub fn density(self, z: f64) -> f64 {
        let s = self.scale();
        if !(z > 0.0 && z < s) {
            return 0.0;
        }
        match self {
            PositiveNoise::Linear { .. } => 2.0 / s * (1.0 - z / s),
            PositiveNoise::Uniform { .. } => 1.0 / s,
        }
    }

    pub fn sup(self) -> f64 {
        match self {
            PositiveNoise::Linear { scale } => 2.0 / scale,
            PositiveNoise::Uniform { scale } => 1.0 / scale,
        }
    }

    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        let u = open01(rng);
        let s = self.scale();
        let z = match self {
            PositiveNoise::Linear { .. } => s * (1.0 - (1.0 - u).sqrt()),
            PositiveNoise::Uniform { .. } => s * u,
        };
        z.clamp(f64::MIN_POSITIVE, s * (1.0 - f64::EPSILON))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let n = 200_000;
        let h = (b - a) / n as f64;
        (0..n).map(|i| f(a + (i as f64 + 0.5) * h)).sum::<f64>() * h
    }

    #[test]
    fn bumps_are_densities() {
        for b in [Bump::Epanechnikov, Bump::Uniform, Bump::Triangular] {
            assert!((integrate(|z| b.density(z), -1.0, 1.0) - 1.0).abs() < 1e-6);
            assert_eq!(b.density(1.0), 0.0);
            assert_eq!(b.density(-1.0), 0.0);
            assert!((b.cdf(0.3) - integrate(|z| b.density(z), -1.0, 0.3)).abs() < 1e-6);
        }
    }

    #[test]
    fn bump_samplers_match_cdf() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for b in [Bump::Epanechnikov, Bump::Uniform, Bump::Triangular] {
            let n = 100_000;
            let mut xs: Vec<f64> = (0..n).map(|_| b.sample(&mut rng)).collect();
            xs.sort_by(f64::total_cmp);
            let ks = xs
                .iter()
                .enumerate()
                .map(|(i, &x)| (b.cdf(x) - i as f64 / n as f64).abs().max((b.cdf(x) - (i + 1) as f64 / n as f64).abs()))
                .fold(0.0, f64::max);
            // 99.9% Kolmogorov quantile 1.95 / sqrt(n).
            assert!(ks < 1.95 / (n as f64).sqrt(), "{b:?}: {ks}");
        }
    }

    #[test]
    fn positive_noise_integrates() {
        for g in [
            PositiveNoise::Linear { scale: 1.0 },
            PositiveNoise::Linear { scale: 0.02 },
            PositiveNoise::Uniform { scale: 0.5 },
        ] {
            let s = g.scale();
            assert!((integrate(|z| g.density(z), 0.0, s) - 1.0).abs() < 1e-6);
        }
        let g = PositiveNoise::Linear { scale: 1.0 };
        assert_eq!(g.density(0.25), 1.5);
    }
}
