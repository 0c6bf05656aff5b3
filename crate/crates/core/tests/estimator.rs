use ldp_core::classes::{build_compact_frame, discover_classes_1d, FrameConfig};
use ldp_core::estimator::*;
use ldp_core::geometry::{BoxMixture, BoxRegion};
use ldp_core::kernels::Iid;
use ldp_core::mc::{Execution, MonteCarlo};
use ldp_core::trajectory::DecoupleSpec;
use ldp_core::zoo::{Bump, DriftFn, PerturbedSystem};
use proptest::prelude::*;

fn halves(p: f64) -> BoxMixture {
    BoxMixture::new(vec![(BoxRegion::interval(0.0, 0.5), p), (BoxRegion::interval(0.5, 1.0), 1.0 - p)]).unwrap()
}

/// Relative entropy of two half-interval laws with masses `q` and `p` on the left half.
fn halves_entropy(q: f64, p: f64) -> f64 {
    q * (q / p).ln() + (1.0 - q) * ((1.0 - q) / (1.0 - p)).ln()
}

fn one() -> MonteCarlo {
    MonteCarlo::new(1, 0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn dv_sits_between_brute_force_and_entropy(p in 0.2f64..0.8, q in 0.05f64..0.95) {
        let model = Iid { law: halves(p) };
        let target = DvTarget::Density(halves(q));
        let b = dv_entropy_lower_bound(&model, &target, &DvFamily::on_box(vec![0.0], vec![1.0]), &one()).unwrap();
        prop_assert!(b.value >= 0.0);
        let (again, _) = dv_objective(&model, &target, &b.witness, &one()).unwrap();
        prop_assert!((again - b.value).abs() < 1e-9);

        let levels: Vec<f64> = (0..13).map(|i| 10f64.powf(-3.0 + 0.5 * i as f64)).collect();
        let mut brute = f64::NEG_INFINITY;
        for &a in &levels {
            for &c in &levels {
                let w = DvWitness { lo: vec![0.0], hi: vec![1.0], per_axis: 2, values: vec![a, c], outside: 1.0 };
                brute = brute.max(dv_objective(&model, &target, &w, &one()).unwrap().0);
            }
        }
        let slack = b.integration_error + 1e-6;
        prop_assert!(b.value >= brute - slack, "dv {} < brute {}", b.value, brute);
        let h = halves_entropy(q, p);
        prop_assert!(b.value <= h + slack, "dv {} > H {}", b.value, h);
    }

    #[test]
    fn surfaces_are_monotone_in_delta(seed in any::<u64>()) {
        let model = Iid { law: halves(0.5) };
        let mu = density_proxy(&halves(0.7), 8).unwrap();
        let deltas = [0.05, 0.1, 0.2, 0.4, 1.0];
        let s = rl_diagnostic(&model, &mu, &deltas, &[3, 6, 12], &MonteCarlo::new(1500, seed)).unwrap();
        prop_assert!(s.monotonicity_violations.is_empty());
        for i in 0..3 {
            for j in 1..deltas.len() {
                prop_assert!(s.entry(i, j).estimate.hits >= s.entry(i, j - 1).estimate.hits);
            }
            prop_assert_eq!(s.entry(i, deltas.len() - 1).s_hat, Some(0.0));
        }
    }
}

#[test]
fn weak_upper_bound_holds_on_uniform_draws() {
    let model = Iid { law: halves(0.5) };
    let bound = dv_entropy_lower_bound(
        &model,
        &DvTarget::Density(halves(0.8)),
        &DvFamily::on_box(vec![0.0], vec![1.0]),
        &one(),
    )
    .unwrap();
    let mu = density_proxy(&halves(0.8), 16).unwrap();
    let surface =
        rl_diagnostic(&model, &mu, &[0.1, 0.15, 0.2, 0.3, 0.4], &[10, 20], &MonteCarlo::new(20_000, 4)).unwrap();
    let r = weak_upper_bound_check(&model, &surface, &bound).unwrap();
    assert!(r.pass, "{r:?}");
    assert!(r.entries.iter().any(|e| e.s_hat.is_some()), "{r:?}");
}

#[test]
fn sanov_corner_approaches_zero() {
    let model = Iid { law: halves(0.5) };
    let mu = density_proxy(&halves(0.5), 16).unwrap();
    let s = rl_diagnostic(&model, &mu, &[0.2], &[5, 20], &MonteCarlo::new(5000, 2)).unwrap();
    let (a, b) = (s.corner_trend[0].unwrap(), s.corner_trend[1].unwrap());
    assert!(a < 0.0 && b < 0.0 && b > a, "{a} {b}");
}

fn contracting() -> PerturbedSystem {
    PerturbedSystem::new(
        DriftFn::Affine { slope: 0.5, intercept: 0.0 },
        Bump::default(),
        BoxMixture::uniform(BoxRegion::interval(-0.5, 0.5)),
    )
    .unwrap()
}

#[test]
fn inequalities_pass_on_a_contracting_chain() {
    let model = contracting();
    let cs = discover_classes_1d(|x| 0.5 * x, (-6.0, 6.0), 0.01, Some((-0.5, 0.5))).unwrap();
    let config = FrameConfig { quantile: 0.5, tau_max: 2, ..FrameConfig::default() };
    let frame =
        build_compact_frame(&model, &cs, &[0], &BoxRegion::interval(-3.0, 3.0), &config, 1, Execution::Parallel)
            .unwrap();
    let mu = density_proxy(&BoxMixture::uniform(BoxRegion::interval(-0.8, 0.8)), 16).unwrap();
    let w = WordSet::LpBall { center: mu, radius: 0.61, closed: false };
    let mu1 = density_proxy(&BoxMixture::uniform(BoxRegion::interval(-0.8, 0.0)), 8).unwrap();
    let mu2 = density_proxy(&BoxMixture::uniform(BoxRegion::interval(0.0, 0.8)), 8).unwrap();
    for seed in 0..2 {
        let mc = MonteCarlo::new(20_000, seed);
        let c = verify_coupling_probability(&model, &frame, &w, 2, 8, 40, &mc).unwrap();
        assert_eq!(c.verdict, Verdict::Pass, "{c:?}");
        assert!(c.lhs[0].estimate.hits > 0);
        let s = verify_supermultiplicative(&model, &frame, &mu1, &mu2, 0.1, 0.25, 8, 40, &mc).unwrap();
        assert_eq!(s.verdict, Verdict::Pass, "{s:?}");
    }
}

#[test]
fn decoupling_passes_across_two_classes() {
    let drift = DriftFn::PiecewiseLinear {
        knots: vec![[-4.0, -2.0], [1.0, 0.5], [1.5, 0.5], [2.0, 1.0], [2.4, 2.7], [4.0, 3.5], [6.0, 4.5]],
    };
    let init =
        BoxMixture::new(vec![(BoxRegion::interval(2.5, 3.5), 0.5), (BoxRegion::interval(-0.5, 0.5), 0.5)]).unwrap();
    let model = PerturbedSystem::new(drift.clone(), Bump::default(), init).unwrap();
    let cs = discover_classes_1d(|x| drift.eval(x), (-6.0, 8.0), 0.01, Some((-0.5, 3.5))).unwrap();
    assert_eq!(cs.len(), 2);
    let config = FrameConfig { quantile: 0.5, tau_max: 6, ..FrameConfig::default() };
    let frame =
        build_compact_frame(&model, &cs, &[0, 1], &BoxRegion::interval(-1.0, 4.0), &config, 1, Execution::Parallel)
            .unwrap();
    let spec = DecoupleSpec { partition: vec![1, 2], lambda: [0.5, 0.5], eps: 0.1 };
    let ball = |lo, hi| WordSet::LpBall {
        center: density_proxy(&BoxMixture::uniform(BoxRegion::interval(lo, hi)), 8).unwrap(),
        radius: 0.7,
        closed: false,
    };
    let r = verify_decoupling_probability(
        &model,
        &frame,
        &spec,
        &ball(2.5, 3.5),
        &ball(-0.5, 0.5),
        10,
        &MonteCarlo::new(20_000, 3),
    )
    .unwrap();
    assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
    let full = verify_decoupling_probability(
        &model,
        &frame,
        &spec,
        &WordSet::All,
        &WordSet::All,
        10,
        &MonteCarlo::new(2000, 3),
    )
    .unwrap();
    assert_eq!(full.verdict, Verdict::Pass);
}
