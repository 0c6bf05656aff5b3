//! Two-sided Monte Carlo checks of the coupling, supermultiplicative and
//! decoupling probability inequalities.

use super::WordSet;
use crate::classes::CompactFrame;
use crate::error::{invalid, Error, Result};
use crate::kernels::{sample_path, Kernel};
use crate::mc::MonteCarlo;
use crate::measures::{EmpiricalMeasure, Word};
use crate::stats::Proportion;
use crate::trajectory::{bounds, couple, decouple, DecoupleSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// `estimate^exponent`, one factor of a side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub label: String,
    pub estimate: Proportion,
    pub exponent: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub name: String,
    pub lhs: Vec<Factor>,
    pub rhs: Vec<Factor>,
    /// Log of the combinatorial constant in front of the right side.
    pub log_constant: f64,
    /// `None` when a factor has no hits.
    pub log_lhs: Option<f64>,
    pub log_rhs: Option<f64>,
    /// Relative interval half-widths summed over factors.
    pub slack: f64,
    pub verdict: Verdict,
    /// Both sides divided by the long word length, when one exists.
    pub per_letter: Option<(f64, f64)>,
    pub notes: Vec<String>,
}

fn log_side(fs: &[Factor]) -> Option<f64> {
    fs.iter().try_fold(0.0, |acc, f| (f.estimate.hits > 0).then(|| acc + f.exponent as f64 * f.estimate.p_hat.ln()))
}

fn judge(name: &str, lhs: Vec<Factor>, rhs: Vec<Factor>, log_constant: f64, notes: Vec<String>) -> InequalityReport {
    let log_lhs = log_side(&lhs);
    let log_rhs = log_side(&rhs);
    let rel = |f: &Factor, upper: bool| {
        let p = &f.estimate;
        if p.hits == 0 {
            return 0.0;
        }
        let d = if upper { p.ci_high - p.p_hat } else { p.p_hat - p.ci_low };
        f.exponent as f64 * d / p.p_hat
    };
    let slack: f64 = lhs.iter().map(|f| rel(f, true)).sum::<f64>() + rhs.iter().map(|f| rel(f, false)).sum::<f64>();
    let verdict = match (log_lhs, log_rhs) {
        (None, _) => Verdict::Pass,
        (Some(_), None) => Verdict::Inconclusive,
        (Some(l), Some(r)) => {
            if l <= log_constant + r + slack.ln_1p() {
                Verdict::Pass
            } else {
                Verdict::Fail
            }
        }
    };
    InequalityReport {
        name: name.into(),
        lhs,
        rhs,
        log_constant,
        log_lhs,
        log_rhs,
        slack,
        verdict,
        per_letter: None,
        notes,
    }
}

fn factor(label: impl Into<String>, hits: u64, samples: u64, exponent: u32) -> Factor {
    Factor { label: label.into(), estimate: Proportion::new(hits, samples), exponent }
}

/// `r log c_K + r log(tau_K + 1) + (2r + 1) log(n + 1)`.
fn log_unit_constant(frame: &CompactFrame, n: usize) -> f64 {
    let r = frame.r() as f64;
    r * frame.c_k.ln() + r * ((frame.tau_k + 1) as f64).ln() + (2.0 * r + 1.0) * ((n + 1) as f64).ln()
}

fn check_samples(mc: &MonteCarlo, frame: &CompactFrame, model_dim: usize) -> Result<()> {
    if mc.samples == 0 {
        return Err(invalid("need at least one sample per side"));
    }
    if frame.dim != model_dim {
        return Err(Error::DimensionMismatch { expected: model_dim, found: frame.dim });
    }
    Ok(())
}

const COUPLING_STREAMS: (u64, u64) = (0xc0a1, 0xc0a2);
const SUPER_STREAMS: (u64, u64) = (0x5e1, 0x5e2);
const DECOUPLING_STREAMS: (u64, u64, u64) = (0xdc1, 0xdc2, 0xdc3);

fn domain_note(misses: u64, samples: u64) -> Vec<String> {
    if misses == 0 {
        Vec::new()
    } else {
        vec![format!("{misses} of {samples} draws fell outside the domain of the map and count as outside U")]
    }
}

/// `P^N(U) <= (c_K^r (tau_K + 1)^r (n + 1)^(2r + 1))^N P(W)` with
/// `U = {u : Psi(u) subset of W}`. Membership in `U` is decided on the
/// member of `Psi(u)` whose free letters sit far from `W`'s center.
pub fn verify_coupling_probability<K: Kernel>(
    model: &K,
    frame: &CompactFrame,
    w: &WordSet,
    big_n: usize,
    n: usize,
    total: usize,
    mc: &MonteCarlo,
) -> Result<InequalityReport> {
    check_samples(mc, frame, model.dim())?;
    if big_n == 0 || n == 0 {
        return Err(invalid("need N >= 1 and n >= 1"));
    }
    let need = big_n * n + big_n * frame.r() * frame.tau_k;
    if total < need {
        return Err(Error::LengthBudget(format!("N n + N r tau_K = {need} exceeds T = {total}")));
    }
    let far = w.far_point(model.dim());
    let counts = mc.count_many(COUPLING_STREAMS.0, 2, |rng, acc| {
        let us: Vec<Word> = (0..big_n).map(|_| sample_path(model, n, rng)).collect();
        match couple(&us, total, frame) {
            Ok(t) => acc[0] += w.contains(&t.member_filled_with(&far)).expect("dimensions checked") as u64,
            Err(_) => acc[1] += 1,
        }
    });
    let rhs =
        mc.count(COUPLING_STREAMS.1, |rng| w.contains(&sample_path(model, total, rng)).expect("dimensions checked"));
    let mut report = judge(
        "coupling",
        vec![factor("P(U) over N-tuples", counts[0], mc.samples, 1)],
        vec![factor("P(W)", rhs, mc.samples, 1)],
        big_n as f64 * log_unit_constant(frame, n),
        domain_note(counts[1], mc.samples),
    );
    report.per_letter = per_letter(&report, total);
    Ok(report)
}

fn per_letter(r: &InequalityReport, total: usize) -> Option<(f64, f64)> {
    Some((r.log_lhs? / total as f64, (r.log_constant + r.log_rhs?) / total as f64))
}

/// Side conditions of the fine coupling bound, one message per failure.
fn coupling_side_conditions(
    frame: &CompactFrame,
    mus: [&EmpiricalMeasure; 2],
    eps: f64,
    delta: f64,
    n: usize,
    total: usize,
) -> Vec<String> {
    let (r, tau) = (frame.r() as f64, frame.tau_k as f64);
    let (nf, tf) = (n as f64, total as f64);
    let mut bad = Vec::new();
    if !(0.0..1.0).contains(&eps) {
        bad.push(format!("0 <= eps < 1 fails for eps = {eps}"));
    }
    if !(delta > 0.0 && delta < (1.0 - eps) / 2.0) {
        bad.push(format!("0 < delta < (1 - eps) / 2 fails for delta = {delta}"));
    }
    if tau / nf > delta {
        bad.push(format!("tau_K / n = {} exceeds delta = {delta}", tau / nf));
    }
    if nf * (1.0 - eps - delta) < 1.0 {
        bad.push(format!("n (1 - eps - delta) = {} is below 1", nf * (1.0 - eps - delta)));
    }
    if nf + r * tau > tf * delta {
        bad.push(format!("n + r tau_K = {} exceeds T delta = {}", nf + r * tau, tf * delta));
    }
    for (g, mu) in mus.iter().enumerate() {
        let inside = mu.mass_where(|x| frame.slice_of(x).is_some());
        if inside < 1.0 - eps - 1e-12 {
            bad.push(format!("mu_{}(K) = {inside} is below 1 - eps", g + 1));
        }
    }
    bad
}

/// `P(A1)^ceil(N/2) P(A2)^floor(N/2) <= C_{n,T} P(B_T)` with closed LP balls
/// `A_gamma` of radius `delta` and `B_T` of radius `f(eps, delta)` around
/// `(mu_1 + mu_2) / 2`, `N = floor(T / (n + r tau_K))`.
#[allow(clippy::too_many_arguments)]
pub fn verify_supermultiplicative<K: Kernel>(
    model: &K,
    frame: &CompactFrame,
    mu1: &EmpiricalMeasure,
    mu2: &EmpiricalMeasure,
    eps: f64,
    delta: f64,
    n: usize,
    total: usize,
    mc: &MonteCarlo,
) -> Result<InequalityReport> {
    check_samples(mc, frame, model.dim())?;
    if mu1.dim() != model.dim() || mu2.dim() != model.dim() {
        return Err(invalid("targets and model differ in dimension"));
    }
    if n == 0 || total == 0 {
        return Err(invalid("need n >= 1 and T >= 1"));
    }
    let per = n + frame.r() * frame.tau_k;
    let big_n = total / per;
    if delta >= 1.0 {
        let all = |l: &str| factor(l, mc.samples, mc.samples, 1);
        let mut rep = judge(
            "supermultiplicative",
            vec![all("P(A1)"), all("P(A2)")],
            vec![all("P(B_T)")],
            big_n as f64 * log_unit_constant(frame, n),
            vec!["delta >= 1: every ball is the whole space".into()],
        );
        rep.lhs[0].exponent = big_n.div_ceil(2) as u32;
        rep.lhs[1].exponent = (big_n / 2) as u32;
        return Ok(rep);
    }
    let bad = coupling_side_conditions(frame, [mu1, mu2], eps, delta, n, total);
    if !bad.is_empty() {
        return Err(Error::SideConditions(bad));
    }
    let radius = bounds::fine_coupling(eps, delta, frame.r());
    let mu = EmpiricalMeasure::mixture(&[(0.5, mu1), (0.5, mu2)])?;
    let a = mc.count_many(SUPER_STREAMS.0, 2, |rng, acc| {
        let l = EmpiricalMeasure::of_word(&sample_path(model, n, rng)).expect("nonempty path");
        for (slot, m) in acc.iter_mut().zip([mu1, mu2]) {
            *slot += crate::measures::lp_within(&l, m, delta, true).expect("dimensions checked") as u64;
        }
    });
    let b_set = WordSet::LpBall { center: mu, radius, closed: true };
    let b =
        mc.count(SUPER_STREAMS.1, |rng| b_set.contains(&sample_path(model, total, rng)).expect("dimensions checked"));
    let mut notes = vec![format!("f(eps, delta) = {radius}")];
    if radius >= 1.0 {
        notes.push("f(eps, delta) >= 1, so B_T is the whole space".into());
    }
    let mut report = judge(
        "supermultiplicative",
        vec![
            factor("P(A1)", a[0], mc.samples, big_n.div_ceil(2) as u32),
            factor("P(A2)", a[1], mc.samples, (big_n / 2) as u32),
        ],
        vec![factor("P(B_T)", b, mc.samples, 1)],
        big_n as f64 * log_unit_constant(frame, n),
        notes,
    );
    report.per_letter = per_letter(&report, total);
    Ok(report)
}

/// `P(U) <= (n + 1)^(2r + 1) (tau_K + 1)^r c_K^r P(W1) P(W2)` with
/// `U = {u : Phi(u) subset of W1 x W2}` and `T_gamma` from the letter
/// budget `ceil(n (lambda_gamma + eps)) + r_gamma tau_K`.
pub fn verify_decoupling_probability<K: Kernel>(
    model: &K,
    frame: &CompactFrame,
    spec: &DecoupleSpec,
    w1: &WordSet,
    w2: &WordSet,
    n: usize,
    mc: &MonteCarlo,
) -> Result<InequalityReport> {
    check_samples(mc, frame, model.dim())?;
    spec.validate(frame.r())?;
    if n == 0 {
        return Err(invalid("need n >= 1"));
    }
    let ws = [w1, w2];
    let far = [w1.far_point(model.dim()), w2.far_point(model.dim())];
    let t = [spec.t_side(1, n, frame.tau_k), spec.t_side(2, n, frame.tau_k)];
    let counts = mc.count_many(DECOUPLING_STREAMS.0, 2, |rng, acc| {
        let u = sample_path(model, n, rng);
        match decouple(&u, frame, spec) {
            Ok(d) => {
                let inside = (0..2)
                    .all(|g| ws[g].contains(&d.templates[g].member_filled_with(&far[g])).expect("dimensions checked"));
                acc[0] += inside as u64;
            }
            Err(_) => acc[1] += 1,
        }
    });
    let p1 =
        mc.count(DECOUPLING_STREAMS.1, |rng| w1.contains(&sample_path(model, t[0], rng)).expect("dimensions checked"));
    let p2 =
        mc.count(DECOUPLING_STREAMS.2, |rng| w2.contains(&sample_path(model, t[1], rng)).expect("dimensions checked"));
    let mut notes = domain_note(counts[1], mc.samples);
    notes.push(format!("T_1 = {}, T_2 = {}", t[0], t[1]));
    let mut report = judge(
        "decoupling",
        vec![factor("P(U)", counts[0], mc.samples, 1)],
        vec![factor("P(W1)", p1, mc.samples, 1), factor("P(W2)", p2, mc.samples, 1)],
        log_unit_constant(frame, n),
        notes,
    );
    report.per_letter = per_letter(&report, n);
    Ok(report)
}
