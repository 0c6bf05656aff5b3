//! Transition kernels with densities, iterated densities and path sampling.

use crate::error::{invalid, Error, Result};
use crate::geometry::{BoxMixture, BoxRegion};
use crate::measures::Word;
use rand::Rng;

/// A state of the chain: the distinguished initial state or a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum State<'a> {
    Init,
    Point(&'a [f64]),
}

/// Markov kernel on `R^d` with a density `rho(x, .)` for every state;
/// `rho(Init, .)` is the density of the initial law.
pub trait Kernel: Sync + Send {
    fn dim(&self) -> usize;

    fn density(&self, from: State<'_>, to: &[f64]) -> f64;

    /// Writes a draw from `rho(from, .)` into `out`.
    fn sample<R: Rng + ?Sized>(&self, from: State<'_>, rng: &mut R, out: &mut [f64]);

    /// Uniform bound `M` on the density, when known.
    fn density_bound(&self) -> Option<f64> {
        None
    }
}

impl<K: Kernel> Kernel for &K {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn density(&self, from: State<'_>, to: &[f64]) -> f64 {
        (**self).density(from, to)
    }
    fn sample<R: Rng + ?Sized>(&self, from: State<'_>, rng: &mut R, out: &mut [f64]) {
        (**self).sample(from, rng, out)
    }
    fn density_bound(&self) -> Option<f64> {
        (**self).density_bound()
    }
}

/// `rho(x, u_1) rho(u_1, u_2) ... rho(u_{n-1}, u_n)`; 1 for the empty word.
pub fn word_density<K: Kernel>(k: &K, x: State<'_>, u: &Word) -> f64 {
    let mut prev = x;
    let mut acc = 1.0;
    for letter in u.letters() {
        acc *= k.density(prev, letter);
        if acc == 0.0 {
            return 0.0;
        }
        prev = State::Point(letter);
    }
    acc
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, std_error: 0.0, samples: 0 }
    }

    fn from_draws(sum: f64, sum_sq: f64, n: usize) -> Self {
        let nf = n as f64;
        let mean = sum / nf;
        let var = if n > 1 { ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0) } else { 0.0 };
        Self { value: mean, std_error: (var / nf).sqrt(), samples: n }
    }
}

/// Unbiased estimate of `rho^k(x, y)`: the mean of `rho(xi_{k-1}, y)` over
/// paths `xi` of length `k - 1` started at `x`. Exact for `k = 1`.
pub fn iterated_density<K: Kernel, R: Rng + ?Sized>(
    k: &K,
    x: State<'_>,
    y: &[f64],
    steps: usize,
    samples: usize,
    rng: &mut R,
) -> Result<Estimate> {
    if steps == 0 {
        return Err(invalid("iterated density needs k >= 1"));
    }
    if steps == 1 {
        return Ok(Estimate::exact(k.density(x, y)));
    }
    if samples == 0 {
        return Err(invalid("need at least one sample"));
    }
    let d = k.dim();
    let mut cur = vec![0.0; d];
    let mut next = vec![0.0; d];
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..samples {
        k.sample(x, rng, &mut cur);
        for _ in 1..steps - 1 {
            k.sample(State::Point(&cur), rng, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        let v = k.density(State::Point(&cur), y);
        s += v;
        s2 += v * v;
    }
    Ok(Estimate::from_draws(s, s2, samples))
}

/// Estimates `rho^1(x, y), ..., rho^kmax(x, y)` from one set of paths.
pub fn iterated_densities<K: Kernel, R: Rng + ?Sized>(
    k: &K,
    x: State<'_>,
    y: &[f64],
    kmax: usize,
    samples: usize,
    rng: &mut R,
) -> Result<Vec<Estimate>> {
    if kmax == 0 || samples == 0 {
        return Err(invalid("need kmax >= 1 and at least one sample"));
    }
    let d = k.dim();
    let mut out = vec![Estimate::exact(k.density(x, y))];
    let mut sums = vec![(0.0, 0.0); kmax];
    let mut cur = vec![0.0; d];
    let mut next = vec![0.0; d];
    for _ in 0..samples.max(1) {
        if kmax < 2 {
            break;
        }
        k.sample(x, rng, &mut cur);
        for step in 2..=kmax {
            let v = k.density(State::Point(&cur), y);
            sums[step - 1].0 += v;
            sums[step - 1].1 += v * v;
            if step < kmax {
                k.sample(State::Point(&cur), rng, &mut next);
                std::mem::swap(&mut cur, &mut next);
            }
        }
    }
    for &(s, s2) in &sums[1..] {
        out.push(Estimate::from_draws(s, s2, samples));
    }
    Ok(out)
}

/// Truncated estimate of `rho~ = sum_k 2^-k rho^k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TildeEstimate {
    pub value: f64,
    pub std_error: f64,
    /// `2^-kmax M`, bounding the dropped terms.
    pub tail_bound: f64,
    /// `3 std_error + tail_bound`.
    pub error_bound: f64,
}

/// Estimates `rho~(x, y)` truncated at `kmax`, from shared paths.
pub fn tilde_density<K: Kernel, R: Rng + ?Sized>(
    k: &K,
    x: State<'_>,
    y: &[f64],
    kmax: usize,
    samples: usize,
    rng: &mut R,
) -> Result<TildeEstimate> {
    k.density_bound().ok_or(Error::MissingDensityBound)?;
    tilde_density_partial(k, x, y, kmax, samples, rng)
}

/// As [`tilde_density`], but accepts kernels without a density bound; the
/// tail bound is then infinite.
pub fn tilde_density_partial<K: Kernel, R: Rng + ?Sized>(
    k: &K,
    x: State<'_>,
    y: &[f64],
    kmax: usize,
    samples: usize,
    rng: &mut R,
) -> Result<TildeEstimate> {
    let m = k.density_bound().unwrap_or(f64::INFINITY);
    if kmax == 0 || samples == 0 {
        return Err(invalid("need kmax >= 1 and at least one sample"));
    }
    let d = k.dim();
    let first = 0.5 * k.density(x, y);
    let mut cur = vec![0.0; d];
    let mut next = vec![0.0; d];
    let (mut s, mut s2) = (0.0, 0.0);
    if kmax >= 2 {
        for _ in 0..samples {
            let mut z = 0.0;
            let mut w = 0.25;
            k.sample(x, rng, &mut cur);
            for step in 2..=kmax {
                z += w * k.density(State::Point(&cur), y);
                w *= 0.5;
                if step < kmax {
                    k.sample(State::Point(&cur), rng, &mut next);
                    std::mem::swap(&mut cur, &mut next);
                }
            }
            s += z;
            s2 += z * z;
        }
    }
    let rest = if kmax >= 2 { Estimate::from_draws(s, s2, samples) } else { Estimate::exact(0.0) };
    let tail = m * 0.5f64.powi(kmax as i32);
    Ok(TildeEstimate {
        value: first + rest.value,
        std_error: rest.std_error,
        tail_bound: tail,
        error_bound: 3.0 * rest.std_error + tail,
    })
}

/// Path of length `n` started from the initial state.
pub fn sample_path<K: Kernel, R: Rng + ?Sized>(k: &K, n: usize, rng: &mut R) -> Word {
    sample_path_from(k, State::Init, n, rng)
}

/// Path of length `n` started from `x` (the start itself is not a letter).
pub fn sample_path_from<K: Kernel, R: Rng + ?Sized>(k: &K, x: State<'_>, n: usize, rng: &mut R) -> Word {
    let d = k.dim();
    let mut coords = vec![0.0; n * d];
    for i in 0..n {
        let (done, rest) = coords.split_at_mut(i * d);
        let from = if i == 0 { x } else { State::Point(&done[(i - 1) * d..]) };
        k.sample(from, rng, &mut rest[..d]);
    }
    Word::new(d, coords).expect("finite samples")
}

/// `rho(x, y) = 1` for `y` in `(x, x + 1)`.
#[derive(Debug, Clone)]
pub struct UniformStep {
    pub initial: BoxMixture,
}

impl Default for UniformStep {
    fn default() -> Self {
        Self { initial: BoxMixture::uniform(BoxRegion::interval(0.0, 1.0)) }
    }
}

impl Kernel for UniformStep {
    fn dim(&self) -> usize {
        1
    }
    fn density(&self, from: State<'_>, to: &[f64]) -> f64 {
        match from {
            State::Init => self.initial.density(to),
            State::Point(x) => f64::from(x[0] < to[0] && to[0] < x[0] + 1.0),
        }
    }
    fn sample<R: Rng + ?Sized>(&self, from: State<'_>, rng: &mut R, out: &mut [f64]) {
        match from {
            State::Init => self.initial.sample(rng, out),
            State::Point(x) => out[0] = x[0] + open01(rng),
        }
    }
    fn density_bound(&self) -> Option<f64> {
        Some(self.initial.density_bound().max(1.0))
    }
}

/// `rho(x, y) = 1/2` for `|y - x| < 1`.
#[derive(Debug, Clone)]
pub struct SymmetricStep {
    pub initial: BoxMixture,
}

impl Default for SymmetricStep {
    fn default() -> Self {
        Self { initial: BoxMixture::uniform(BoxRegion::interval(-0.5, 0.5)) }
    }
}

impl Kernel for SymmetricStep {
    fn dim(&self) -> usize {
        1
    }
    fn density(&self, from: State<'_>, to: &[f64]) -> f64 {
        match from {
            State::Init => self.initial.density(to),
            State::Point(x) => 0.5 * f64::from((to[0] - x[0]).abs() < 1.0),
        }
    }
    fn sample<R: Rng + ?Sized>(&self, from: State<'_>, rng: &mut R, out: &mut [f64]) {
        match from {
            State::Init => self.initial.sample(rng, out),
            State::Point(x) => out[0] = x[0] - 1.0 + 2.0 * open01(rng),
        }
    }
    fn density_bound(&self) -> Option<f64> {
        Some(self.initial.density_bound().max(0.5))
    }
}

/// Independent draws: `rho(x, y) = phi(y)` for every state.
#[derive(Debug, Clone)]
pub struct Iid {
    pub law: BoxMixture,
}

impl Kernel for Iid {
    fn dim(&self) -> usize {
        self.law.dim()
    }
    fn density(&self, _from: State<'_>, to: &[f64]) -> f64 {
        self.law.density(to)
    }
    fn sample<R: Rng + ?Sized>(&self, _from: State<'_>, rng: &mut R, out: &mut [f64]) {
        self.law.sample(rng, out)
    }
    fn density_bound(&self) -> Option<f64> {
        Some(self.law.density_bound())
    }
}

/// Uniform draw from the open interval `(0, 1)`.
pub(crate) fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}
