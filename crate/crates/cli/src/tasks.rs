use crate::artifacts::ArtifactWriter;
use crate::config::*;
use crate::svg::{Plot, Series};
use crate::RunError;
use ldp_core::classes::{
    build_compact_frame, check_admissible, discover_classes_1d, grid_class_probe, product_classes_extinction,
    ClassStructure, GridProbeReport, GridSpec, MeasureDescriptor, Region,
};
use ldp_core::estimator::*;
use ldp_core::kernels::{sample_path, Kernel};
use ldp_core::mc::{par_map, rng_for, Execution, MonteCarlo};
use ldp_core::measures::lemmas::run_lemma;
use ldp_core::measures::lemmas::Lemma;
use ldp_core::trajectory::sweep::{run_suite, Suite};
use ldp_core::trajectory::DecoupleSpec;
use ldp_core::zoo::{escape_decay_probe, KernelModel};
use serde_json::{json, Value};
use std::fmt::Write as _;

const SIMULATE_STREAM: u64 = 0x5113;
const EXEC: Execution = Execution::Parallel;

/// What a task hands back to the runner.
pub struct TaskOutput {
    /// `None` for tasks without a verdict.
    pub pass: Option<bool>,
    pub summary: Vec<String>,
}

fn section<'a, T>(s: &'a Option<T>, name: &str) -> Result<&'a T, RunError> {
    s.as_ref().ok_or_else(|| RunError::Config(format!("missing `{name}` section")))
}

fn build_model(c: &ExperimentConfig) -> Result<KernelModel, RunError> {
    Ok(section(&c.model, "model")?.build()?)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.12e}")).unwrap_or_default()
}

pub fn dispatch(task: Task, c: &ExperimentConfig, out: &mut ArtifactWriter) -> Result<TaskOutput, RunError> {
    match task {
        Task::Simulate => simulate(c, out),
        Task::Classes => classes(c, out),
        Task::Admissible => admissible(c, out),
        Task::VerifyMaps => verify_maps(c, out),
        Task::EstimateRate => estimate_rate(c, out),
        Task::DvBound => dv_bound(c, out),
        Task::VerifyInequalities => verify_inequalities(c, out),
        Task::LvDemo => lv_demo(c, out),
        Task::EscapeProbe => escape_probe(c, out),
    }
}

fn simulate(c: &ExperimentConfig, out: &mut ArtifactWriter) -> Result<TaskOutput, RunError> {
    let p = section(&c.simulate, "simulate")?;
    let model = build_model(c)?;
    let d = model.dim();
    let ids: Vec<u64> = (0..p.paths as u64).collect();
    let paths = par_map(&ids, EXEC, |&i| sample_path(&model, p.n, &mut rng_for(c.seed, SIMULATE_STREAM, i)));
    let mut csv = String::from("path,step");
    for k in 1..=d {
        let _ = write!(csv, ",x{k}");
    }
    csv.push('\n');
    for (i, u) in paths.iter().enumerate() {
        for (t, x) in u.letters().enumerate() {
            let _ = write!(csv, "{i},{t}");
            for v in x {
                let _ = write!(csv, ",{v:.12e}");
            }
            csv.push('\n');
        }
    }
    out.csv("paths", &csv)?;
    let last: Vec<&[f64]> = paths.iter().filter_map(|u| u.last()).collect();
    out.json(&json!({"dim": d, "n": p.n, "paths": p.paths, "final_states": last}))?;
    Ok(TaskOutput { pass: None, summary: vec![format!("{} paths of length {} in dimension {d}", p.paths, p.n)] })
}

fn analytic_classes(model: &KernelModel, p: &ClassesParams) -> Result<ClassStructure, RunError> {
    match model {
        KernelModel::Perturbed(sys) => {
            let [lo, hi] =
                p.domain.ok_or_else(|| RunError::Config("`classes.domain` is required for perturbed models".into()))?;
            let comps = &sys.initial.components;
            let a = comps.iter().map(|(b, _)| b.lo[0]).fold(f64::INFINITY, f64::min);
            let b = comps.iter().map(|(b, _)| b.hi[0]).fold(f64::NEG_INFINITY, f64::max);
            Ok(discover_classes_1d(|x| sys.drift.eval(x), (lo, hi), p.resolution, Some((a, b)))?)
        }
        KernelModel::LotkaVolterra(lv) => Ok(product_classes_extinction(lv.params().d())?),
        _ => Err(RunError::Config("analytic class discovery needs a perturbed or lotka_volterra model".into())),
    }
}

pub fn order_strings(cs: &ClassStructure) -> Vec<String> {
    cs.strict_pairs().into_iter().map(|(i, j)| format!("{}⤳{}", cs.labels[i], cs.labels[j])).collect()
}

fn class_table(cs: &ClassStructure) -> String {
    let mut csv = String::from("label,region,beta_reachable,leads_to\n");
    for i in 0..cs.len() {
        let succ: Vec<&str> =
            (0..cs.len()).filter(|&j| j != i && cs.leads_to(i, j)).map(|j| cs.labels[j].as_str()).collect();
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            csv_field(&cs.labels[i]),
            csv_field(&cs.classes[i].describe()),
            cs.beta_reach[i],
            csv_field(&succ.join(";"))
        );
    }
    csv
}

/// One-dimensional comparison of probe clusters with analytic intervals
/// clipped to the grid.
fn probe_agreement(exact: &ClassStructure, probe: &GridProbeReport, grid: &GridSpec) -> Value {
    let cell = (grid.bounds.hi[0] - grid.bounds.lo[0]) / grid.cells[0] as f64;
    let mut max_error: f64 = 0.0;
    let counts_match = exact.len() == probe.structure.len();
    if counts_match {
        for (a, e) in probe.structure.classes.iter().zip(&exact.classes) {
            let (Region::Cells { cells }, Region::Interval { lo, hi }) = (a, e) else { continue };
            let lo = lo.max(grid.bounds.lo[0]);
            let hi = hi.min(grid.bounds.hi[0]);
            let a_lo = cells.iter().map(|c| c.lo[0]).fold(f64::INFINITY, f64::min);
            let a_hi = cells.iter().map(|c| c.hi[0]).fold(f64::NEG_INFINITY, f64::max);
            max_error = max_error.max((a_lo - lo).abs()).max((a_hi - hi).abs());
        }
    }
    let order_match = counts_match && probe.structure.order == exact.order;
    json!({
        "cell_width": cell,
        "class_counts_match": counts_match,
        "order_matches": order_match,
        "max_boundary_error": max_error,
        "pass": order_match && max_error <= cell + 1e-9,
    })
}

fn classes(c: &ExperimentConfig, out: &mut ArtifactWriter) -> Result<TaskOutput, RunError> {
    let p = section(&c.classes, "classes")?;
    let model = build_model(c)?;
    let cs = analytic_classes(&model, p)?;
    out.csv("table", &class_table(&cs))?;
    let order = order_strings(&cs);
    let mut summary = vec![format!("{} classes, order [{}]", cs.len(), order.join(", "))];
    let mut pass = None;
    let probe = match &p.grid_probe {
        Some(g) => {
            let grid = GridSpec { bounds: g.bounds.clone(), cells: g.cells.clone() };
            let rep = grid_class_probe(&model, &grid, g.k_max, g.samples, c.seed, EXEC)?;
            let agreement = (model.dim() == 1).then(|| probe_agreement(&cs, &rep, &grid));
            if let Some(a) = &agreement {
                let ok = a["pass"].as_bool() == Some(true);
                pass = Some(ok);
                summary.push(format!(
                    "grid probe: {} classes, boundary error {} (cell {}) {}",
                    rep.structure.len(),
                    a["max_boundary_error"],
                    a["cell_width"],
                    if ok { "PASS" } else { "FAIL" }
                ));
            }
            Some(json!({"report": rep, "analytic_agreement": agreement}))
        }
        None => None,
    };
    out.json(&json!({"structure": cs, "order": order, "grid_probe": probe}))?;
    Ok(TaskOutput { pass, summary })
}

fn admissible(c: &ExperimentConfig, out: &mut ArtifactWriter) -> Result<TaskOutput, RunError> {
    let p = section(&c.admissible, "admissible")?;
    let model = build_model(c)?;
    let cs = analytic_classes(&model, &p.classes)?;
    let r = check_admissible(&p.measure.descriptor()?, &cs)?;
    let mut csv = String::from("label,region,mass,charged\n");
    for i in 0..cs.len() {
        let _ = writeln!(
            csv,
            "{},{},{:.12e},{}",
            csv_field(&cs.labels[i]),
            csv_field(&cs.classes[i].describe()),
            r.class_mass[i],
            r.charged.contains(&i)
        );
    }
    out.csv("classes", &csv)?;
    out.json(&json!({"admissible": r.admissible(), "report": r, "order": order_strings(&cs)}))?;
    let verdict = if r.admissible() { "admissible" } else { "not admissible" };
    Ok(TaskOutput { pass: None, summary: vec![format!("{verdict}; charged classes {:?}", r.charged)] })
}

fn verify_maps(c: &ExperimentConfig, out: &mut ArtifactWriter) -> Result<TaskOutput, RunError> {
    let p = section(&c.verify_maps, "verify-maps")?;
    let suites = p.suites.clone().unwrap_or_else(|| Suite::ALL.to_vec());
    let mut csv = String::from("kind,name,instances,checks,violations,informative,max_excess,first_violation\n");
    let mut summary = Vec::new();
    let mut violations = 0;
    let mut sweep = Vec::new();
    for s in suites {
        let r = run_suite(s, p.instances, c.seed, EXEC)?;
        let _ = writeln!(
            csv,
            "suite,{},{},{},{},{},,{}",
            s.name(),
            r.instances,
            r.checks,
            r.violations,
            r.informative,
            csv_field(r.first_violation.as_deref().unwrap_or(""))
        );
        summary.push(format!("{}: {} checks, {} violations", s.name(), r.checks, r.violations));
        violations += r.violations;
        sweep.push(r);
    }
    let mut lemmas = Vec::new();
    if p.lemma_instances > 0 {
        for l in Lemma::ALL {
            let r = run_lemma(l, p.lemma_instances, c.seed, EXEC)?;
            let _ = writeln!(
                csv,
                "lemma,{},{},{},{},,{:.6e},",
                l.name(),
                r.instances,
                r.checks,
                r.violations,
                r.max_excess
            );
            summary.push(format!("{}: {} checks, {} violations", l.name(), r.checks, r.violations));
            violations += r.violations;
            lemmas.push(r);
        }
    }
    out.csv("summary", &csv)?;
    out.json(&json!({"suites": sweep, "lemmas": lemmas, "violations": violations}))?;
    Ok(TaskOutput { pass: Some(violations == 0), summary })
}

fn surface_plot(surface: &RateSurface, title: &str) -> Plot {
    let series = surface
        .delta_grid
        .iter()
        .enumerate()
        .map(|(j, d)| Series {
            name: format!("delta = {d}"),
            points: (0..surface.n_grid.len())
                .filter_map(|i| surface.entry(i, j).s_hat.map(|s| (surface.n_grid[i] as f64, s)))
                .collect(),
        })
        .collect();
    Plot { title: title.into(), x_label: "n".into(), y_label: "(1/n) log p".into(), series }
}

fn estimate_rate(c: &ExperimentConfig, out: &mut ArtifactWriter) -> Result<TaskOutput, RunError> {
    let p = section(&c.estimate_rate, "estimate-rate")?;
    let model = build_model(c)?;
    let mu = p.target.proxy(p.proxy_per_axis)?;
    let s = rl_diagnostic(&model, &mu, &p.delta_grid, &p.n_grid, &MonteCarlo::new(p.samples, c.seed))?;
    out.csv("surface", &s.to_csv())?;
    if p.svg {
        out.svg("surface", &surface_plot(&s, "ball probability decay"))?;
    }
    out.json(&s)?;
    let irl = s.irl_proxy.map_or_else(|| "below resolution".to_string(), |v| format!("{v:.4}"));
    Ok(TaskOutput { pass: None, summary: vec![format!("I_RL proxy {irl}")] })
}

fn dv_bound(c: &ExperimentConfig, out: &mut ArtifactWriter) -> Result<TaskOutput, RunError> {
    let p = section(&c.dv_bound, "dv-bound")?;
    let model = build_model(c)?;
    let target = match &p.target {
        MeasureSpec::Density { law } => DvTarget::Density(law.clone()),
        MeasureSpec::Atoms { .. } => DvTarget::Atoms(p.target.empirical()?),
    };
    let b = dv_entropy_lower_bound(&model, &target, &p.family, &MonteCarlo::new(p.mc_draws, c.seed))?;
    let mut csv = String::from("cell,value\n");
    for (i, v) in b.witness.values.iter().enumerate() {
        let _ = writeln!(csv, "{i},{v:.12e}");
    }
    let _ = writeln!(csv, "outside,{:.12e}", b.witness.outside);
    out.csv("witness", &csv)?;
    let mut summary = vec![format!("DV lower bound {:.6} (integration error {:.2e})", b.value, b.integration_error)];
    let mut pass = None;
    let weak = match &p.weak_check {
        Some(w) => {
            let mu = p.target.proxy(w.proxy_per_axis)?;
            let s = rl_diagnostic(&model, &mu, &w.delta_grid, &w.n_grid, &MonteCarlo::new(w.samples, c.seed))?;
            let r = weak_upper_bound_check(&model, &s, &b)?;
            summary.push(format!("weak upper bound: {} of {} violated", r.violations, r.checked));
            pass = Some(r.pass);
            out.csv("surface", &s.to_csv())?;
            Some(r)
        }
        None => None,
    };
    out.json(&json!({"bound": b, "weak_check": weak}))?;
    Ok(TaskOutput { pass, summary })
}

fn ball(b: &Option<BallSpec>) -> Result<WordSet, RunError> {
    Ok(match b {
        None => WordSet::All,
        Some(b) => WordSet::LpBall { center: b.center.proxy(b.proxy_per_axis)?, radius: b.radius, closed: false },
    })
}

fn verify_inequalities(c: &ExperimentConfig, out: &mut ArtifactWriter) -> Result<TaskOutput, RunError> {
    let p = section(&c.verify_inequalities, "verify-inequalities")?;
    let model = build_model(c)?;
    let cs = analytic_classes(&model, &p.frame.classes)?;
    let subset = p.frame.subset.clone().unwrap_or_else(|| (0..cs.len()).collect());
    let frame = build_compact_frame(&model, &cs, &subset, &p.frame.window, &p.frame.config, c.seed, EXEC)?;
    let mut csv = String::from("seed,check,verdict,log_lhs,log_rhs,log_constant,slack,lhs_hits,rhs_hits\n");
    let mut runs = Vec::new();
    let mut passed = 0;
    for k in 0..p.seeds as u64 {
        let seed = c.seed.wrapping_add(k);
        let mc = MonteCarlo::new(p.samples, seed);
        for check in &p.checks {
            let r = match check {
                CheckSpec::Coupling { w, big_n, n, total } => {
                    verify_coupling_probability(&model, &frame, &ball(w)?, *big_n, *n, *total, &mc)?
                }
                CheckSpec::Supermultiplicative { mu1, mu2, proxy_per_axis, eps, delta, n, total } => {
                    let (a, b) = (mu1.proxy(*proxy_per_axis)?, mu2.proxy(*proxy_per_axis)?);
                    verify_supermultiplicative(&model, &frame, &a, &b, *eps, *delta, *n, *total, &mc)?
                }
                CheckSpec::Decoupling { partition, lambda, eps, n, w1, w2 } => {
                    let spec = DecoupleSpec { partition: partition.clone(), lambda: *lambda, eps: *eps };
                    verify_decoupling_probability(&model, &frame, &spec, &ball(w1)?, &ball(w2)?, *n, &mc)?
                }
            };
            let hits = |fs: &[Factor]| fs.iter().map(|f| f.estimate.hits.to_string()).collect::<Vec<_>>().join(";");
            let _ = writeln!(
                csv,
                "{seed},{},{:?},{},{},{:.12e},{:.12e},{},{}",
                check.name(),
                r.verdict,
                opt(r.log_lhs),
                opt(r.log_rhs),
                r.log_constant,
                r.slack,
                hits(&r.lhs),
                hits(&r.rhs)
            );
            if r.verdict == Verdict::Pass {
                passed += 1;
            }
            runs.push(json!({"seed": seed, "check": check.name(), "report": r}));
        }
    }
    let total = runs.len();
    out.csv("verdicts", &csv)?;
    out.json(&json!({"frame": frame, "runs": runs, "passed": passed, "total": total}))?;
    Ok(TaskOutput {
        pass: Some(passed == total),
        summary: vec![format!(
            "{passed} of {total} inequality checks PASS (tau_K {}, c_K {:.4})",
            frame.tau_k, frame.c_k
        )],
    })
}

fn mixture_verdict(v: &MixtureVerdict) -> &'static str {
    match v {
        MixtureVerdict::ConvexityHolds => "convexity_holds",
        MixtureVerdict::ConvexityViolated => "convexity_violated",
        MixtureVerdict::Linear { .. } => "linear",
        MixtureVerdict::NonAdmissible { collapsed: true } => "non_admissible_collapsed",
        MixtureVerdict::NonAdmissible { collapsed: false } => "non_admissible",
        MixtureVerdict::LowResolution => "low_resolution",
    }
}

fn lv_demo(c: &ExperimentConfig, out: &mut ArtifactWriter) -> Result<TaskOutput, RunError> {
    let p = section(&c.lv_demo, "lv-demo")?;
    let model = build_model(c)?;
    let KernelModel::LotkaVolterra(lv) = &model else {
        return Err(RunError::Config("lv-demo needs a lotka_volterra model".into()));
    };
    let cs = product_classes_extinction(lv.params().d())?;
    let cfg = ConvexityConfig {
        delta_grid: p.delta_grid.clone(),
        n_grid: p.n_grid.clone(),
        proxy_per_axis: p.proxy_per_axis,
    };
    let (m1, m2) =
        (MeasureDescriptor::PiecewiseUniform(p.mu1.clone()), MeasureDescriptor::PiecewiseUniform(p.mu2.clone()));
    let r = convexity_scan(&model, &cs, &m1, &m2, &p.lambdas, &cfg, &MonteCarlo::new(p.samples, c.seed))?;
    let mut csv = String::from("measure,lambda,admissible,verdict,n,hits_at_smallest_delta\n");
    let mut row = |name: &str, lambda: f64, adm: bool, verdict: &str, hits: &[u64]| {
        for (n, h) in p.n_grid.iter().zip(hits) {
            let _ = writeln!(csv, "{name},{lambda},{adm},{verdict},{n},{h}");
        }
    };
    row("mu1", 1.0, r.end_admissible[0], "", &r.end_hits[0]);
    for m in &r.rows {
        row("mixture", m.lambda, m.admissibility.admissible(), mixture_verdict(&m.verdict), &m.hits_at_smallest_delta);
    }
    row("mu2", 0.0, r.end_admissible[1], "", &r.end_hits[1]);
    out.csv("scan", &csv)?;
    let mut summary = vec![format!("mu1 admissible {}, mu2 admissible {}", r.end_admissible[0], r.end_admissible[1])];
    for m in &r.rows {
        summary.push(format!(
            "lambda {}: admissible {}, hits {:?}, {}",
            m.lambda,
            m.admissibility.admissible(),
            m.hits_at_smallest_delta,
            mixture_verdict(&m.verdict)
        ));
    }
    out.json(&r)?;
    Ok(TaskOutput { pass: None, summary })
}

fn escape_probe(c: &ExperimentConfig, out: &mut ArtifactWriter) -> Result<TaskOutput, RunError> {
    let p = section(&c.escape_probe, "escape-probe")?;
    let model = build_model(c)?;
    let [lo, hi] = p.interval;
    let r = escape_decay_probe(&model, (lo, hi), p.kappa, &p.n_grid, &MonteCarlo::new(p.samples, c.seed))?;
    let mut csv = String::from("n,hits,samples,p_hat,log_rate,log_rate_ci_low,log_rate_ci_high\n");
    for e in &r.entries {
        let _ = writeln!(
            csv,
            "{},{},{},{:.12e},{},{:.12e},{:.12e}",
            e.n,
            e.estimate.hits,
            e.estimate.samples,
            e.estimate.p_hat,
            opt(e.log_rate),
            e.log_rate_ci.0,
            e.log_rate_ci.1
        );
    }
    out.csv("decay", &csv)?;
    if p.svg {
        let pts = r.entries.iter().filter_map(|e| e.log_rate.map(|v| (e.n as f64, v))).collect();
        let plot = Plot {
            title: "escape probability decay".into(),
            x_label: "n".into(),
            y_label: "(1/n) log p".into(),
            series: vec![Series { name: format!("kappa = {}", p.kappa), points: pts }],
        };
        out.svg("decay", &plot)?;
    }
    out.json(&r)?;
    let rates: Vec<String> = r.entries.iter().map(|e| opt(e.log_rate)).collect();
    Ok(TaskOutput {
        pass: Some(r.strictly_decreasing),
        summary: vec![format!("(1/n) log p: [{}], strictly decreasing {}", rates.join(", "), r.strictly_decreasing)],
    })
}
