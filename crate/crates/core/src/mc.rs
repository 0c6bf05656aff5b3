//! Deterministic batched Monte Carlo.
//!
//! Samples are split into fixed-size batches. Batch `b` of stream `s` draws
//! from `ChaCha8Rng` seeded with `mix(seed, s)` on stream `b`, and batch
//! results are merged in batch order, so results do not depend on how many
//! worker threads run the batches.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type McRng = ChaCha8Rng;

/// Samples per batch. Part of the reproducibility contract.
pub const BATCH_SIZE: u64 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

/// SplitMix64 finalizer.
pub fn mix(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(17);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn rng_for(seed: u64, stream: u64, batch: u64) -> McRng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, stream));
    rng.set_stream(batch);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarlo {
    pub samples: u64,
    pub seed: u64,
    pub execution: Execution,
}

impl MonteCarlo {
    pub fn new(samples: u64, seed: u64) -> Self {
        Self { samples, seed, execution: Execution::default() }
    }

    pub fn sequential(mut self) -> Self {
        self.execution = Execution::Sequential;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_samples(mut self, samples: u64) -> Self {
        self.samples = samples;
        self
    }

    pub fn batches(&self) -> u64 {
        self.samples.div_ceil(BATCH_SIZE)
    }

    /// Runs `body(rng, count)` once per batch and folds batch outputs in
    /// batch order with `merge`.
    pub fn run<T, F, M>(&self, stream: u64, body: F, merge: M) -> Option<T>
    where
        T: Send,
        F: Fn(&mut McRng, u64) -> T + Sync + Send,
        M: Fn(T, T) -> T,
    {
        let batches = self.batches();
        let job = |b: u64| {
            let count = BATCH_SIZE.min(self.samples - b * BATCH_SIZE);
            let mut rng = rng_for(self.seed, stream, b);
            body(&mut rng, count)
        };
        let parts: Vec<T> = match self.execution {
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                (0..batches).into_par_iter().map(job).collect()
            }
            _ => (0..batches).map(job).collect(),
        };
        parts.into_iter().reduce(merge)
    }

    /// Counts samples for which `trial` returns true.
    pub fn count<F>(&self, stream: u64, trial: F) -> u64
    where
        F: Fn(&mut McRng) -> bool + Sync + Send,
    {
        self.run(stream, |rng, n| (0..n).filter(|_| trial(rng)).count() as u64, |a, b| a + b).unwrap_or(0)
    }

    /// Per-sample vector of hit counters, summed elementwise.
    pub fn count_many<F>(&self, stream: u64, width: usize, trial: F) -> Vec<u64>
    where
        F: Fn(&mut McRng, &mut [u64]) + Sync + Send,
    {
        self.run(
            stream,
            |rng, n| {
                let mut acc = vec![0u64; width];
                for _ in 0..n {
                    trial(rng, &mut acc);
                }
                acc
            },
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        )
        .unwrap_or_else(|| vec![0; width])
    }
}

/// Maps `f` over items, in parallel when enabled. Output order matches input.
pub fn par_map<I, T, F>(items: &[I], execution: Execution, f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    match execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        _ => items.iter().map(f).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn count_is_execution_independent() {
        let mc = MonteCarlo::new(5000, 7);
        let trial = |rng: &mut McRng| rng.random::<f64>() < 0.3;
        let a = mc.count(1, trial);
        let b = mc.sequential().count(1, trial);
        assert_eq!(a, b);
        assert!((1300..1700).contains(&a));
    }

    #[test]
    fn streams_differ() {
        let mut a = rng_for(1, 0, 0);
        let mut b = rng_for(1, 1, 0);
        assert_ne!(a.random::<u64>(), b.random::<u64>());
    }

    #[test]
    fn zero_samples() {
        assert_eq!(MonteCarlo::new(0, 1).count(0, |_| true), 0);
    }
}
