//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero when any
//! criterion fails.

use ldp_cli::{load_config, run, Task};
use ldp_core::estimator::{dv_entropy_lower_bound, DvFamily, DvTarget};
use ldp_core::geometry::{BoxMixture, BoxRegion};
use ldp_core::kernels::{iterated_density, Iid, State, UniformStep};
use ldp_core::mc::{rng_for, Execution, MonteCarlo};
use ldp_core::measures::lemmas::run_all_lemmas;
use ldp_core::measures::{lp_distance, lp_distance_flow, lp_distance_subsets, EmpiricalMeasure};
use ldp_core::trajectory::sweep::{run_suite, Suite};
use ldp_core::zoo::{
    ratchet_check, Bump, DriftFn, LotkaVolterra, LotkaVolterraParams, PerturbedSystem, PositiveNoise, RatchetSide,
};
use rand::Rng;
use serde_json::Value;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

type Check = Result<String, String>;
type Criterion = fn() -> Check;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn canned(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

/// Runs a canned config in-process and returns its verdict and JSON result.
fn run_canned(task: Task, name: &str) -> Result<(Option<bool>, Value), String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = load_config(&canned(name)).map_err(|e| e.to_string())?;
    let outcome = run(task, config, dir.path()).map_err(|e| e.to_string())?;
    let text = std::fs::read_to_string(dir.path().join(format!("{task}.json"))).map_err(|e| e.to_string())?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    Ok((outcome.pass, doc["result"].clone()))
}

fn c1_geographic() -> Check {
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut violations = 0;
    for s in Suite::ALL {
        let r = run_suite(s, 10_000, 1, Execution::Parallel).map_err(|e| e.to_string())?;
        violations += r.violations;
        lines.push(format!("{} {}/{}", s.name(), r.violations, r.checks));
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(violations == 0 && secs < 120.0, format!("violations {} in {secs:.1} s", lines.join(", ")))
}

fn random_measure(rng: &mut impl Rng, dim: usize) -> EmpiricalMeasure {
    let k = rng.random_range(1..=6);
    let points = (0..k * dim).map(|_| rng.random_range(-1.5..1.5)).collect();
    let weights = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    EmpiricalMeasure::normalized(dim, points, weights).unwrap()
}

fn c2_lp_metric() -> Check {
    let mut worst: f64 = 0.0;
    for i in 0..1000u64 {
        let mut rng = rng_for(2, 0xac2, i);
        let dim = 1 + (i % 2) as usize;
        let (mu, nu) = (random_measure(&mut rng, dim), random_measure(&mut rng, dim));
        let a = lp_distance_flow(&mu, &nu).map_err(|e| e.to_string())?;
        let b = lp_distance_subsets(&mu, &nu).map_err(|e| e.to_string())?;
        worst = worst.max((a - b).abs());
    }
    let dirac = |x: f64| EmpiricalMeasure::from_atoms(1, vec![x], vec![1.0]).unwrap();
    let mut dirac_err: f64 = 0.0;
    for a in [0.1, 0.3, 0.9, 5.0] {
        let d = lp_distance(&dirac(0.0), &dirac(a)).map_err(|e| e.to_string())?;
        dirac_err = dirac_err.max((d - f64::min(a, 1.0)).abs());
    }
    ensure(worst <= 1e-9 && dirac_err <= 1e-12, format!("flow vs subsets max {worst:.2e}, diracs max {dirac_err:.2e}"))
}

fn c3_lemmas() -> Check {
    let reports = run_all_lemmas(1000, 3, Execution::Parallel).map_err(|e| e.to_string())?;
    let detail: Vec<String> =
        reports.iter().map(|r| format!("{} {}/{}", r.lemma.name(), r.violations, r.checks)).collect();
    ensure(reports.iter().all(|r| r.pass()), format!("violations {}", detail.join(", ")))
}

fn c4_classes() -> Check {
    let (fig_pass, fig) = run_canned(Task::Classes, "two-class-example.json")?;
    let (id_pass, id) = run_canned(Task::Classes, "identity-classes.json")?;
    let fig_classes = fig["structure"]["classes"].as_array().map_or(0, Vec::len);
    let id_classes = id["structure"]["classes"].as_array().map_or(0, Vec::len);
    let order = fig["order"].clone();
    let err = |v: &Value| v["grid_probe"]["analytic_agreement"]["max_boundary_error"].as_f64().unwrap_or(f64::NAN);
    ensure(
        fig_classes == 2 && order == serde_json::json!(["2⤳1"]) && id_classes == 1 && fig_pass == Some(true) && id_pass == Some(true),
        format!(
            "two-class example: {fig_classes} classes, order {order}, probe error {:.2e}; identity: {id_classes} class, probe error {:.2e}; cell 0.1",
            err(&fig),
            err(&id)
        ),
    )
}

fn hits(v: &Value) -> Vec<u64> {
    v.as_array().map(|a| a.iter().filter_map(Value::as_u64).collect()).unwrap_or_default()
}

fn c5_lv_demo() -> Check {
    let (_, r) = run_canned(Task::LvDemo, "lv-demo.json")?;
    let ends = [r["end_admissible"][0].as_bool() == Some(true), r["end_admissible"][1].as_bool() == Some(true)];
    let row = &r["rows"][0];
    let mid_admissible = row["admissibility"]["absolutely_continuous"].as_bool() == Some(true)
        && row["admissibility"]["support_in_closure"].as_bool() == Some(true)
        && row["admissibility"]["charged_reachable"].as_bool() == Some(true)
        && row["admissibility"]["charged_totally_ordered"].as_bool() == Some(true);
    let mid = hits(&row["hits_at_smallest_delta"]);
    let mu1 = hits(&r["end_hits"][0]);
    ensure(
        ends[0] && ends[1] && !mid_admissible && mid.last() == Some(&0) && !mu1.is_empty() && mu1.iter().all(|&h| h > 0),
        format!(
            "mu1 admissible {}, mu2 admissible {}, midpoint admissible {mid_admissible}; hits at n = 5, 10, 20: midpoint {mid:?}, mu1 {mu1:?} of 1e6",
            ends[0], ends[1]
        ),
    )
}

fn c6_ratchet() -> Check {
    let model = PerturbedSystem::new(
        DriftFn::shift(-2.0),
        Bump::default(),
        BoxMixture::uniform(BoxRegion::interval(-1.0, 0.0)),
    )
    .map_err(|e| e.to_string())?;
    let r =
        ratchet_check(&model, 0.0, RatchetSide::Left, 50, &MonteCarlo::new(10_000, 6)).map_err(|e| e.to_string())?;
    ensure(r.pass && r.crossings == 0, format!("{} crossings over {} paths x {}", r.crossings, r.paths, r.length))
}

fn c7_escape() -> Check {
    let start = Instant::now();
    let (pass, r) = run_canned(Task::EscapeProbe, "escape-probe.json")?;
    let secs = start.elapsed().as_secs_f64();
    let rates: Vec<String> = r["entries"]
        .as_array()
        .map(|a| a.iter().map(|e| format!("{:.4}", e["log_rate"].as_f64().unwrap_or(f64::NAN))).collect())
        .unwrap_or_default();
    ensure(
        pass == Some(true) && r["strictly_decreasing"].as_bool() == Some(true) && secs < 300.0,
        format!("(1/n) log p at n = 5, 10, 15, 20: [{}] in {secs:.1} s", rates.join(", ")),
    )
}

fn c8_inequalities() -> Check {
    let (a_pass, a) = run_canned(Task::VerifyInequalities, "contracting-inequalities.json")?;
    let (b_pass, b) = run_canned(Task::VerifyInequalities, "two-class-decoupling.json")?;
    let count = |v: &Value| format!("{}/{}", v["passed"], v["total"]);
    ensure(
        a_pass == Some(true) && b_pass == Some(true),
        format!(
            "coupling + supermultiplicative {} PASS, decoupling {} PASS over 20 seeds at 1e5 samples",
            count(&a),
            count(&b)
        ),
    )
}

fn c9_sanov() -> Check {
    let unif = BoxMixture::uniform(BoxRegion::interval(0.0, 1.0));
    let model = Iid { law: unif.clone() };
    let family = DvFamily::on_box(vec![0.0], vec![1.0]);
    let mc = MonteCarlo::new(1, 9);
    let zero = dv_entropy_lower_bound(&model, &DvTarget::Density(unif), &family, &mc).map_err(|e| e.to_string())?;
    let two_cell =
        BoxMixture::new(vec![(BoxRegion::interval(0.0, 0.5), 0.8), (BoxRegion::interval(0.5, 1.0), 0.2)]).unwrap();
    let b = dv_entropy_lower_bound(&model, &DvTarget::Density(two_cell), &family, &mc).map_err(|e| e.to_string())?;
    let h = 0.8 * 1.6f64.ln() + 0.2 * 0.4f64.ln();
    let rel = (b.value - h).abs() / h;
    ensure(
        zero.value.abs() <= 0.02 && rel <= 0.1,
        format!("uniform {:.2e}; two-cell {:.6} vs H {h:.6} (relative error {rel:.2e})", zero.value, b.value),
    )
}

fn c10_kernel_numerics() -> Check {
    let walk = UniformStep::default();
    let samples = 200_000;
    let mut worst_z: f64 = 0.0;
    for (i, z) in [0.25, 0.6, 1.0, 1.4, 1.8].into_iter().enumerate() {
        let want = if z < 1.0 { z } else { 2.0 - z };
        let mut rng = rng_for(10, 0x2a, i as u64);
        let e = iterated_density(&walk, State::Point(&[0.0]), &[z], 2, samples, &mut rng).map_err(|e| e.to_string())?;
        worst_z = worst_z.max((e.value - want).abs() / e.std_error);
    }
    let logistic = LotkaVolterra::new(LotkaVolterraParams {
        a: vec![vec![1.0]],
        r: vec![1.0],
        noise: PositiveNoise::default(),
        integrator_step: 0.01,
        initial: None,
    })
    .map_err(|e| e.to_string())?;
    let mut worst_ode: f64 = 0.0;
    for x0 in [0.1, 0.5, 1.5] {
        for t in [0.5f64, 1.0, 3.0] {
            let want = x0 * t.exp() / (1.0 + x0 * (t.exp() - 1.0));
            worst_ode = worst_ode.max((logistic.flow(&[x0], t)[0] - want).abs());
        }
    }
    ensure(
        worst_z <= 3.0 && worst_ode < 1e-6,
        format!("rho^2 max |z| {worst_z:.2} SE, RK4 logistic max error {worst_ode:.2e}"),
    )
}

fn c11_reproducibility() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cases = [
        ("estimate-rate", "uniform-rate.json"),
        ("classes", "two-class-example.json"),
        ("dv-bound", "sanov-dv.json"),
        ("simulate", "simulate-lv.json"),
    ];
    let mut compared = 0;
    for (task, cfg) in cases {
        let mut outputs = Vec::new();
        for workers in ["1", "4"] {
            let out = dir.path().join(format!("{task}-{workers}"));
            let status = Command::new(env!("CARGO_BIN_EXE_ldp"))
                .args([
                    task,
                    "--config",
                    canned(cfg).to_str().unwrap(),
                    "--workers",
                    workers,
                    "--out",
                    out.to_str().unwrap(),
                ])
                .output()
                .map_err(|e| e.to_string())?;
            if status.status.code() != Some(0) {
                return Err(format!("{task} exited with {:?}", status.status.code()));
            }
            let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(&out)
                .map_err(|e| e.to_string())?
                .map(|e| {
                    let e = e.unwrap();
                    (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
                })
                .collect();
            files.sort();
            outputs.push(files);
        }
        if outputs[0] != outputs[1] {
            return Err(format!("{task}: artifacts differ between 1 and 4 workers"));
        }
        compared += outputs[0].len();
    }
    Ok(format!("{compared} artifacts byte-identical across workers 1 and 4"))
}

fn main() {
    let criteria: [(&str, Criterion); 11] = [
        ("geographic-inequality suite", c1_geographic),
        ("LP metric", c2_lp_metric),
        ("LP lemma suite", c3_lemmas),
        ("1-D class structure", c4_classes),
        ("non-convex domain demo", c5_lv_demo),
        ("ratchet property", c6_ratchet),
        ("superexponential escape", c7_escape),
        ("probability inequalities", c8_inequalities),
        ("Sanov desk check", c9_sanov),
        ("kernel numerics", c10_kernel_numerics),
        ("reproducibility", c11_reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match result {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} {:>2} {name}: {detail} [{secs:.1} s]", i + 1);
    }
    println!("acceptance: {} of {} criteria PASS", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
