//! Experiment configuration: one JSON document with shared keys and one
//! section per task.

use ldp_core::classes::{FrameConfig, MeasureDescriptor};
use ldp_core::estimator::{density_proxy, DvFamily};
use ldp_core::geometry::{BoxMixture, BoxRegion};
use ldp_core::measures::EmpiricalMeasure;
use ldp_core::trajectory::sweep::Suite;
use ldp_core::zoo::ModelSpec;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Simulate,
    Classes,
    Admissible,
    VerifyMaps,
    EstimateRate,
    DvBound,
    VerifyInequalities,
    LvDemo,
    EscapeProbe,
}

impl Task {
    pub const ALL: [Task; 9] = [
        Task::Simulate,
        Task::Classes,
        Task::Admissible,
        Task::VerifyMaps,
        Task::EstimateRate,
        Task::DvBound,
        Task::VerifyInequalities,
        Task::LvDemo,
        Task::EscapeProbe,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Task::Simulate => "simulate",
            Task::Classes => "classes",
            Task::Admissible => "admissible",
            Task::VerifyMaps => "verify-maps",
            Task::EstimateRate => "estimate-rate",
            Task::DvBound => "dv-bound",
            Task::VerifyInequalities => "verify-inequalities",
            Task::LvDemo => "lv-demo",
            Task::EscapeProbe => "escape-probe",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Task::ALL.into_iter().find(|t| t.name() == s).ok_or_else(|| format!("unknown task `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Must match the subcommand when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<Task>,
    pub seed: u64,
    #[serde(default = "one", skip_serializing)]
    pub workers: usize,
    #[serde(default, skip_serializing)]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classes: Option<ClassesParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub admissible: Option<AdmissibleParams>,
    #[serde(default, rename = "verify-maps", skip_serializing_if = "Option::is_none")]
    pub verify_maps: Option<VerifyMapsParams>,
    #[serde(default, rename = "estimate-rate", skip_serializing_if = "Option::is_none")]
    pub estimate_rate: Option<EstimateRateParams>,
    #[serde(default, rename = "dv-bound", skip_serializing_if = "Option::is_none")]
    pub dv_bound: Option<DvBoundParams>,
    #[serde(default, rename = "verify-inequalities", skip_serializing_if = "Option::is_none")]
    pub verify_inequalities: Option<VerifyInequalitiesParams>,
    #[serde(default, rename = "lv-demo", skip_serializing_if = "Option::is_none")]
    pub lv_demo: Option<LvDemoParams>,
    #[serde(default, rename = "escape-probe", skip_serializing_if = "Option::is_none")]
    pub escape_probe: Option<EscapeProbeParams>,
}

fn one() -> usize {
    1
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }
}

/// Target measure given either as a piecewise-uniform density or as atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSpec {
    Density {
        law: BoxMixture,
    },
    Atoms {
        points: Vec<Vec<f64>>,
        weights: Vec<f64>,
        #[serde(default)]
        density_proxy: bool,
    },
}

impl MeasureSpec {
    pub fn empirical(&self) -> ldp_core::Result<EmpiricalMeasure> {
        match self {
            MeasureSpec::Density { .. } => Err(ldp_core::Error::InvalidArgument("expected atoms".into())),
            MeasureSpec::Atoms { points, weights, .. } => {
                let dim = points.first().map_or(0, Vec::len);
                if points.iter().any(|p| p.len() != dim) {
                    return Err(ldp_core::Error::InvalidArgument("atoms differ in dimension".into()));
                }
                EmpiricalMeasure::from_atoms(dim, points.concat(), weights.clone())
            }
        }
    }

    /// Finite stand-in: the measure itself, or midpoints of a density.
    pub fn proxy(&self, per_axis: usize) -> ldp_core::Result<EmpiricalMeasure> {
        match self {
            MeasureSpec::Density { law } => density_proxy(law, per_axis),
            MeasureSpec::Atoms { .. } => self.empirical(),
        }
    }

    pub fn descriptor(&self) -> ldp_core::Result<MeasureDescriptor> {
        Ok(match self {
            MeasureSpec::Density { law } => MeasureDescriptor::PiecewiseUniform(law.clone()),
            MeasureSpec::Atoms { density_proxy, .. } => {
                MeasureDescriptor::Empirical { measure: self.empirical()?, density_proxy: *density_proxy }
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateParams {
    pub n: usize,
    #[serde(default = "ten")]
    pub paths: usize,
}

fn ten() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassesParams {
    /// Search interval for the one-dimensional perturbed system.
    #[serde(default)]
    pub domain: Option<[f64; 2]>,
    #[serde(default = "resolution")]
    pub resolution: f64,
    #[serde(default)]
    pub grid_probe: Option<GridProbeParams>,
}

fn resolution() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridProbeParams {
    pub bounds: BoxRegion,
    pub cells: Vec<usize>,
    #[serde(default = "k_max")]
    pub k_max: usize,
    #[serde(default = "probe_samples")]
    pub samples: usize,
}

fn k_max() -> usize {
    14
}
fn probe_samples() -> usize {
    2000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdmissibleParams {
    pub measure: MeasureSpec,
    pub classes: ClassesParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyMapsParams {
    #[serde(default = "ten_thousand")]
    pub instances: usize,
    /// All suites when absent.
    #[serde(default)]
    pub suites: Option<Vec<Suite>>,
    /// Instances per Lévy-Prokhorov lemma; 0 skips them.
    #[serde(default = "thousand")]
    pub lemma_instances: usize,
}

fn ten_thousand() -> usize {
    10_000
}
fn thousand() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateRateParams {
    pub target: MeasureSpec,
    #[serde(default = "per_axis")]
    pub proxy_per_axis: usize,
    pub delta_grid: Vec<f64>,
    pub n_grid: Vec<usize>,
    pub samples: u64,
    #[serde(default)]
    pub svg: bool,
}

fn per_axis() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DvBoundParams {
    pub target: MeasureSpec,
    pub family: DvFamily,
    /// Kernel draws per node when `pf` is estimated by Monte Carlo.
    #[serde(default = "mc_draws")]
    pub mc_draws: u64,
    #[serde(default)]
    pub weak_check: Option<WeakCheckParams>,
}

fn mc_draws() -> u64 {
    256
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeakCheckParams {
    #[serde(default = "weak_per_axis")]
    pub proxy_per_axis: usize,
    pub delta_grid: Vec<f64>,
    pub n_grid: Vec<usize>,
    pub samples: u64,
}

fn weak_per_axis() -> usize {
    16
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameSpec {
    pub classes: ClassesParams,
    /// Indices into the discovered classes; all of them when absent.
    #[serde(default)]
    pub subset: Option<Vec<usize>>,
    pub window: BoxRegion,
    #[serde(default)]
    pub config: FrameConfig,
}

/// `{w : d_LP(L[w], center) < radius}`, or every word when absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallSpec {
    pub center: MeasureSpec,
    pub radius: f64,
    #[serde(default = "per_axis")]
    pub proxy_per_axis: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckSpec {
    Coupling {
        w: Option<BallSpec>,
        big_n: usize,
        n: usize,
        total: usize,
    },
    Supermultiplicative {
        mu1: MeasureSpec,
        mu2: MeasureSpec,
        #[serde(default = "per_axis")]
        proxy_per_axis: usize,
        eps: f64,
        delta: f64,
        n: usize,
        total: usize,
    },
    Decoupling {
        partition: Vec<u8>,
        lambda: [f64; 2],
        eps: f64,
        n: usize,
        w1: Option<BallSpec>,
        w2: Option<BallSpec>,
    },
}

impl CheckSpec {
    pub fn name(&self) -> &'static str {
        match self {
            CheckSpec::Coupling { .. } => "coupling",
            CheckSpec::Supermultiplicative { .. } => "supermultiplicative",
            CheckSpec::Decoupling { .. } => "decoupling",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyInequalitiesParams {
    pub frame: FrameSpec,
    pub checks: Vec<CheckSpec>,
    /// Samples per side.
    pub samples: u64,
    /// Verification runs with seeds `seed, seed + 1, ...`.
    #[serde(default = "one")]
    pub seeds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LvDemoParams {
    pub mu1: BoxMixture,
    pub mu2: BoxMixture,
    #[serde(default = "lambdas")]
    pub lambdas: Vec<f64>,
    pub delta_grid: Vec<f64>,
    pub n_grid: Vec<usize>,
    pub samples: u64,
    #[serde(default = "lv_per_axis")]
    pub proxy_per_axis: usize,
}

fn lambdas() -> Vec<f64> {
    vec![0.5]
}
fn lv_per_axis() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EscapeProbeParams {
    pub interval: [f64; 2],
    pub kappa: f64,
    pub n_grid: Vec<usize>,
    pub samples: u64,
    #[serde(default)]
    pub svg: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_is_mandatory() {
        let e = ExperimentConfig::parse(r#"{"model": {"kind": "uniform_step"}}"#).unwrap_err();
        assert!(e.contains("seed"), "{e}");
    }

    #[test]
    fn unknown_keys_are_rejected_with_position() {
        let e = ExperimentConfig::parse("{\n  \"seed\": 1,\n  \"colour\": 3\n}").unwrap_err();
        assert!(e.contains("colour") && e.contains("line 3"), "{e}");
        let e = ExperimentConfig::parse(r#"{"seed": 1, "simulate": {"n": 3, "bogus": 1}}"#).unwrap_err();
        assert!(e.contains("bogus"), "{e}");
    }

    #[test]
    fn workers_and_output_stay_out_of_the_resolved_config() {
        let c = ExperimentConfig::parse(r#"{"seed": 5, "workers": 4, "output": "x", "simulate": {"n": 3}}"#).unwrap();
        let v = serde_json::to_value(&c).unwrap();
        assert_eq!(v, serde_json::json!({"seed": 5, "simulate": {"n": 3, "paths": 10}}));
    }

    #[test]
    fn task_names_round_trip() {
        for t in Task::ALL {
            assert_eq!(t.name().parse::<Task>().unwrap(), t);
            assert_eq!(serde_json::to_value(t).unwrap(), serde_json::json!(t.name()));
        }
    }
}
