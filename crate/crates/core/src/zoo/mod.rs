//! Ready-made example chains: competitive Lotka-Volterra with noise, the
//! monotone walk and the perturbed one-dimensional system.

mod noise;
mod ode;
mod probes;

pub use noise::{Bump, PositiveNoise};
pub use probes::{escape_decay_probe, ratchet_check, EscapeReport, RatchetReport, RatchetSide};

use crate::error::{invalid, Error, Result};
use crate::geometry::{BoxMixture, BoxRegion};
use crate::kernels::{open01, Iid, Kernel, State, SymmetricStep, UniformStep};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LotkaVolterraParams {
    pub a: Vec<Vec<f64>>,
    pub r: Vec<f64>,
    #[serde(default)]
    pub noise: PositiveNoise,
    #[serde(default = "default_step")]
    pub integrator_step: f64,
    /// Initial law; uniform on `(0, 1)^d` when absent.
    #[serde(default)]
    pub initial: Option<BoxMixture>,
}

fn default_step() -> f64 {
    1e-3
}

impl LotkaVolterraParams {
    pub fn d(&self) -> usize {
        self.r.len()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.r.len();
        if d == 0 || self.a.len() != d || self.a.iter().any(|row| row.len() != d) {
            return Err(invalid("a must be d x d with d = len(r) > 0"));
        }
        if self.a.iter().flatten().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(invalid("interaction matrix entries must be nonnegative"));
        }
        if self.r.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(invalid("growth rates must be positive"));
        }
        if !(self.noise.scale().is_finite() && self.noise.scale() > 0.0) {
            return Err(invalid("noise scale must be positive"));
        }
        if !(self.integrator_step > 0.0 && self.integrator_step <= 1.0) {
            return Err(invalid("integrator step must lie in (0, 1]"));
        }
        if let Some(b) = &self.initial {
            b.validate()?;
            if b.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, found: b.dim() });
            }
        }
        Ok(())
    }
}

/// `X_{n+1,i} = F_i(1, X_n^+) - Z_{n+1,i}` with `F` the Lotka-Volterra flow.
#[derive(Debug, Clone)]
pub struct LotkaVolterra {
    params: LotkaVolterraParams,
    initial: BoxMixture,
}

impl LotkaVolterra {
    pub fn new(params: LotkaVolterraParams) -> Result<Self> {
        params.validate()?;
        let d = params.d();
        let initial = params
            .initial
            .clone()
            .unwrap_or_else(|| BoxMixture::uniform(BoxRegion::new(vec![0.0; d], vec![1.0; d]).unwrap()));
        Ok(Self { params, initial })
    }

    pub fn params(&self) -> &LotkaVolterraParams {
        &self.params
    }

    /// `F(t, x^+)`.
    pub fn flow(&self, x: &[f64], t: f64) -> Vec<f64> {
        let xp: Vec<f64> = x.iter().map(|v| v.max(0.0)).collect();
        ode::lv_flow(&self.params.a, &self.params.r, &xp, t, self.params.integrator_step).to_vec()
    }
}

impl Kernel for LotkaVolterra {
    fn dim(&self) -> usize {
        self.params.d()
    }

    fn density(&self, from: State<'_>, to: &[f64]) -> f64 {
        match from {
            State::Init => self.initial.density(to),
            State::Point(x) => {
                let f = self.flow(x, 1.0);
                f.iter().zip(to).map(|(fi, yi)| self.params.noise.density(fi - yi)).product()
            }
        }
    }

    fn sample<R: Rng + ?Sized>(&self, from: State<'_>, rng: &mut R, out: &mut [f64]) {
        match from {
            State::Init => self.initial.sample(rng, out),
            State::Point(x) => {
                let f = self.flow(x, 1.0);
                for (o, fi) in out.iter_mut().zip(f) {
                    *o = fi - self.params.noise.sample(rng);
                }
            }
        }
    }

    fn density_bound(&self) -> Option<f64> {
        Some(self.params.noise.sup().powi(self.dim() as i32).max(self.initial.density_bound()))
    }
}

pub fn lotka_volterra_kernel(params: LotkaVolterraParams) -> Result<KernelModel> {
    Ok(KernelModel::LotkaVolterra(LotkaVolterra::new(params)?))
}

/// `rho(x, y) = (1 - alpha) (y - x)^(-alpha)` for `0 < y - x < 1`.
#[derive(Debug, Clone)]
pub struct MonotoneWalk {
    pub alpha: f64,
    pub initial: BoxMixture,
}

impl MonotoneWalk {
    pub fn new(alpha: f64, initial: Option<BoxMixture>) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(invalid(format!("alpha = {alpha} must lie in (0, 1)")));
        }
        let initial = initial.unwrap_or_else(|| BoxMixture::uniform(BoxRegion::interval(0.0, 1.0)));
        initial.validate()?;
        if initial.dim() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, found: initial.dim() });
        }
        Ok(Self { alpha, initial })
    }

    pub fn increment_density(&self, z: f64) -> f64 {
        if z > 0.0 && z < 1.0 {
            (1.0 - self.alpha) * z.powf(-self.alpha)
        } else {
            0.0
        }
    }

    pub fn sample_increment<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        open01(rng).powf(1.0 / (1.0 - self.alpha))
    }
}

impl Kernel for MonotoneWalk {
    fn dim(&self) -> usize {
        1
    }
    fn density(&self, from: State<'_>, to: &[f64]) -> f64 {
        match from {
            State::Init => self.initial.density(to),
            State::Point(x) => self.increment_density(to[0] - x[0]),
        }
    }
    fn sample<R: Rng + ?Sized>(&self, from: State<'_>, rng: &mut R, out: &mut [f64]) {
        match from {
            State::Init => self.initial.sample(rng, out),
            State::Point(x) => {
                // Rounding could make a tiny increment vanish; redraw.
                loop {
                    let y = x[0] + self.sample_increment(rng);
                    if y > x[0] {
                        out[0] = y;
                        return;
                    }
                }
            }
        }
    }
}

pub fn monotone_walk_kernel(alpha: f64) -> Result<KernelModel> {
    Ok(KernelModel::MonotoneWalk(MonotoneWalk::new(alpha, None)?))
}

/// Continuous nondecreasing drift of the perturbed system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftFn {
    Identity,
    Affine {
        slope: f64,
        intercept: f64,
    },
    /// Linear interpolation through `(x, f(x))` knots, extended linearly
    /// beyond the outer knots.
    PiecewiseLinear {
        knots: Vec<[f64; 2]>,
    },
}

impl DriftFn {
    pub fn shift(c: f64) -> Self {
        DriftFn::Affine { slope: 1.0, intercept: c }
    }

    /// Two classes `(0, 1)` and `(2, 3)` with `f(x) - x <= -1` on `[1, 2]`,
    /// so the upper class leads to the lower one.
    pub fn two_class_example() -> Self {
        DriftFn::PiecewiseLinear {
            knots: vec![
                [-2.0, -4.0],
                [0.0, -1.0],
                [0.5, 0.0],
                [1.0, 0.0],
                [1.5, 0.0],
                [2.0, 1.0],
                [2.5, 2.0],
                [3.0, 2.0],
                [5.0, 3.0],
            ],
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            DriftFn::Identity => x,
            DriftFn::Affine { slope, intercept } => slope * x + intercept,
            DriftFn::PiecewiseLinear { knots } => {
                let n = knots.len();
                let seg = if x <= knots[0][0] {
                    0
                } else if x >= knots[n - 1][0] {
                    n - 2
                } else {
                    knots.partition_point(|k| k[0] <= x) - 1
                };
                let ([x0, y0], [x1, y1]) = (knots[seg], knots[seg + 1]);
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DriftFn::Identity => Ok(()),
            DriftFn::Affine { slope, intercept } => {
                if !(slope.is_finite() && intercept.is_finite() && *slope >= 0.0) {
                    return Err(invalid("affine drift needs a finite nonnegative slope"));
                }
                Ok(())
            }
            DriftFn::PiecewiseLinear { knots } => {
                if knots.len() < 2 {
                    return Err(invalid("piecewise-linear drift needs two knots"));
                }
                for w in knots.windows(2) {
                    if !(w[0][0] < w[1][0]) {
                        return Err(invalid("drift knots must have increasing x"));
                    }
                    if w[1][1] < w[0][1] {
                        return Err(Error::NonMonotoneDrift { x: w[0][0] });
                    }
                }
                if knots.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(invalid("drift knots must be finite"));
                }
                Ok(())
            }
        }
    }
}

/// `X_{n+1} = f(X_n) + Z_{n+1}` with `Z ~ phi` on `(-1, 1)`.
#[derive(Debug, Clone)]
pub struct PerturbedSystem {
    pub drift: DriftFn,
    pub noise: Bump,
    pub initial: BoxMixture,
}

impl PerturbedSystem {
    pub fn new(drift: DriftFn, noise: Bump, initial: BoxMixture) -> Result<Self> {
        drift.validate()?;
        initial.validate()?;
        if initial.dim() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, found: initial.dim() });
        }
        // Support check on a probe grid.
        for i in 0..=400 {
            let z = -1.2 + 2.4 * i as f64 / 400.0;
            let v = noise.density(z);
            if (z.abs() < 1.0) != (v > 0.0) {
                return Err(invalid(format!("noise support is not (-1, 1) at z = {z}")));
            }
        }
        Ok(Self { drift, noise, initial })
    }

    pub fn f(&self, x: f64) -> f64 {
        self.drift.eval(x)
    }
}

impl Kernel for PerturbedSystem {
    fn dim(&self) -> usize {
        1
    }
    fn density(&self, from: State<'_>, to: &[f64]) -> f64 {
        match from {
            State::Init => self.initial.density(to),
            State::Point(x) => self.noise.density(to[0] - self.f(x[0])),
        }
    }
    fn sample<R: Rng + ?Sized>(&self, from: State<'_>, rng: &mut R, out: &mut [f64]) {
        match from {
            State::Init => self.initial.sample(rng, out),
            State::Point(x) => out[0] = self.f(x[0]) + self.noise.sample(rng),
        }
    }
    fn density_bound(&self) -> Option<f64> {
        Some(self.noise.sup().max(self.initial.density_bound()))
    }
}

pub fn perturbed_system_kernel(drift: DriftFn, noise: Bump, initial: BoxMixture) -> Result<KernelModel> {
    Ok(KernelModel::Perturbed(PerturbedSystem::new(drift, noise, initial)?))
}

/// Structured model record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Iid {
        law: BoxMixture,
    },
    UniformStep {
        #[serde(default)]
        initial: Option<BoxMixture>,
    },
    SymmetricStep {
        #[serde(default)]
        initial: Option<BoxMixture>,
    },
    MonotoneWalk {
        alpha: f64,
        #[serde(default)]
        initial: Option<BoxMixture>,
    },
    Perturbed {
        drift: DriftFn,
        #[serde(default)]
        noise: Bump,
        initial: BoxMixture,
    },
    LotkaVolterra(LotkaVolterraParams),
}

impl ModelSpec {
    pub fn build(&self) -> Result<KernelModel> {
        Ok(match self {
            ModelSpec::Iid { law } => {
                law.validate()?;
                KernelModel::Iid(Iid { law: law.clone() })
            }
            ModelSpec::UniformStep { initial } => {
                let mut k = UniformStep::default();
                if let Some(b) = initial {
                    b.validate()?;
                    k.initial = b.clone();
                }
                KernelModel::UniformStep(k)
            }
            ModelSpec::SymmetricStep { initial } => {
                let mut k = SymmetricStep::default();
                if let Some(b) = initial {
                    b.validate()?;
                    k.initial = b.clone();
                }
                KernelModel::SymmetricStep(k)
            }
            ModelSpec::MonotoneWalk { alpha, initial } => {
                KernelModel::MonotoneWalk(MonotoneWalk::new(*alpha, initial.clone())?)
            }
            ModelSpec::Perturbed { drift, noise, initial } => {
                perturbed_system_kernel(drift.clone(), *noise, initial.clone())?
            }
            ModelSpec::LotkaVolterra(p) => lotka_volterra_kernel(p.clone())?,
        })
    }
}

/// Closed set of kernels constructible from a [`ModelSpec`].
#[derive(Debug, Clone)]
pub enum KernelModel {
    Iid(Iid),
    UniformStep(UniformStep),
    SymmetricStep(SymmetricStep),
    MonotoneWalk(MonotoneWalk),
    Perturbed(PerturbedSystem),
    LotkaVolterra(LotkaVolterra),
}

macro_rules! dispatch {
    ($self:ident, $k:ident => $e:expr) => {
        match $self {
            KernelModel::Iid($k) => $e,
            KernelModel::UniformStep($k) => $e,
            KernelModel::SymmetricStep($k) => $e,
            KernelModel::MonotoneWalk($k) => $e,
            KernelModel::Perturbed($k) => $e,
            KernelModel::LotkaVolterra($k) => $e,
        }
    };
}

impl Kernel for KernelModel {
    fn dim(&self) -> usize {
        dispatch!(self, k => k.dim())
    }
    fn density(&self, from: State<'_>, to: &[f64]) -> f64 {
        dispatch!(self, k => k.density(from, to))
    }
    fn sample<R: Rng + ?Sized>(&self, from: State<'_>, rng: &mut R, out: &mut [f64]) {
        dispatch!(self, k => k.sample(from, rng, out))
    }
    fn density_bound(&self) -> Option<f64> {
        dispatch!(self, k => k.density_bound())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::sample_path;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lv2() -> LotkaVolterraParams {
        LotkaVolterraParams {
            a: vec![vec![1.0, 0.5], vec![0.5, 1.0]],
            r: vec![1.0, 1.0],
            noise: PositiveNoise::default(),
            integrator_step: 1e-2,
            initial: None,
        }
    }

    #[test]
    fn logistic_matches_closed_form() {
        let p = LotkaVolterraParams {
            a: vec![vec![1.0]],
            r: vec![1.0],
            noise: PositiveNoise::default(),
            integrator_step: 1e-3,
            initial: None,
        };
        let k = LotkaVolterra::new(p).unwrap();
        let e = 1f64.exp();
        let want = 0.5 * e / (1.0 + 0.5 * (e - 1.0));
        assert!((k.flow(&[0.5], 1.0)[0] - want).abs() < 1e-6);
        assert_eq!(k.flow(&[0.0], 1.0)[0], 0.0);
        assert_eq!(k.flow(&[-0.3], 1.0)[0], 0.0);
    }

    #[test]
    fn extinct_species_stays_extinct() {
        let k = LotkaVolterra::new(lv2()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut out = [0.0; 2];
        k.sample(State::Point(&[-0.2, 0.7]), &mut rng, &mut out);
        assert!(out[0] <= 0.0);
        assert!(k.density(State::Point(&[-0.2, 0.7]), &[0.1, 0.5]) == 0.0);
    }

    #[test]
    fn lv_validation() {
        let mut p = lv2();
        p.a[0][1] = -1.0;
        assert!(LotkaVolterra::new(p).is_err());
        let mut p = lv2();
        p.r[0] = 0.0;
        assert!(LotkaVolterra::new(p).is_err());
    }

    #[test]
    fn lv_density_integrates_to_one() {
        let k = LotkaVolterra::new(lv2()).unwrap();
        let x = [0.4, 0.6];
        let f = k.flow(&x, 1.0);
        let n = 400;
        let h = 1.0 / n as f64;
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                let y = [f[0] - (i as f64 + 0.5) * h, f[1] - (j as f64 + 0.5) * h];
                total += k.density(State::Point(&x), &y) * h * h;
            }
        }
        assert!((total - 1.0).abs() < 1e-4, "{total}");
    }

    #[test]
    fn monotone_walk_basics() {
        assert!(monotone_walk_kernel(0.0).is_err());
        assert!(monotone_walk_kernel(1.0).is_err());
        let w = MonotoneWalk::new(0.5, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let path = sample_path(&w, 200, &mut rng);
        let xs: Vec<f64> = path.letters().map(|l| l[0]).collect();
        assert!(xs.windows(2).all(|p| p[1] > p[0] && p[1] - p[0] < 1.0));
    }

    #[test]
    fn perturbed_density_support() {
        let k = PerturbedSystem::new(
            DriftFn::Identity,
            Bump::Epanechnikov,
            BoxMixture::uniform(BoxRegion::interval(0.0, 1.0)),
        )
        .unwrap();
        assert_eq!(k.density(State::Point(&[0.0]), &[1.0]), 0.0);
        assert_eq!(k.density(State::Point(&[0.0]), &[0.0]), 0.75);
        assert!(DriftFn::PiecewiseLinear { knots: vec![[0.0, 1.0], [1.0, 0.0]] }.validate().is_err());
    }

    #[test]
    fn drift_interpolation() {
        let f = DriftFn::two_class_example();
        f.validate().unwrap();
        assert_eq!(f.eval(0.5), 0.0);
        assert_eq!(f.eval(2.25), 1.5);
        assert_eq!(f.eval(7.0), 4.0);
        assert_eq!(f.eval(-4.0), -7.0);
        for x in [0.25, 0.5, 0.75, 2.25, 2.5, 2.75] {
            assert!((f.eval(x) - x).abs() < 1.0);
        }
        for x in [1.0, 1.25, 1.5, 1.75, 2.0, 3.0, 4.0, 0.0, -1.0] {
            assert!(f.eval(x) - x <= -1.0);
        }
    }

    #[test]
    fn spec_round_trip() {
        let spec = ModelSpec::LotkaVolterra(lv2());
        let json = serde_json::to_string(&spec).unwrap();
        assert!(json.contains("\"kind\":\"lotka_volterra\""));
        let back: ModelSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
        assert!(serde_json::from_str::<ModelSpec>(r#"{"kind":"monotone_walk","alpha":0.5,"bogus":1}"#).is_err());
    }
}
