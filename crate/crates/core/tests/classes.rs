use ldp_core::classes::{
    check_admissible, discover_classes_1d, grid_class_probe, product_classes_extinction, GridSpec, MeasureDescriptor,
    Region,
};
use ldp_core::geometry::{BoxMixture, BoxRegion};
use ldp_core::kernels::Iid;
use ldp_core::mc::Execution;
use ldp_core::zoo::{Bump, DriftFn, MonotoneWalk, PerturbedSystem};
use proptest::prelude::*;

fn line_grid(lo: f64, hi: f64, cells: usize) -> GridSpec {
    GridSpec { bounds: BoxRegion::interval(lo, hi), cells: vec![cells] }
}

#[test]
fn grid_probe_matches_analytic_two_classes() {
    let drift = DriftFn::two_class_example();
    let model =
        PerturbedSystem::new(drift.clone(), Bump::Epanechnikov, BoxMixture::uniform(BoxRegion::interval(2.2, 2.8)))
            .unwrap();
    let grid = line_grid(-1.0, 4.0, 50);
    let rep = grid_class_probe(&model, &grid, 14, 2000, 3, Execution::Parallel).unwrap();
    let exact = discover_classes_1d(|x| drift.eval(x), (-1.0, 4.0), 0.01, Some((2.2, 2.8))).unwrap();
    assert_eq!(rep.structure.len(), 2, "{:?}", rep.status);
    let cell = 0.1;
    for (approx, exact) in rep.structure.classes.iter().zip(&exact.classes) {
        let Region::Cells { cells } = approx else { panic!() };
        let Region::Interval { lo, hi } = exact else { panic!() };
        let a = cells.iter().map(|c| c.lo[0]).fold(f64::INFINITY, f64::min);
        let b = cells.iter().map(|c| c.hi[0]).fold(f64::NEG_INFINITY, f64::max);
        assert!((a - lo).abs() <= cell + 1e-9 && (b - hi).abs() <= cell + 1e-9, "{a} {b} vs {lo} {hi}");
    }
    assert!(rep.structure.leads_to(1, 0) && !rep.structure.leads_to(0, 1));
    assert_eq!(rep.structure.beta_reach, vec![true, true]);
}

#[test]
fn grid_probe_iid_is_one_cluster() {
    let model = Iid { law: BoxMixture::uniform(BoxRegion::interval(-1.0, 2.0)) };
    let rep = grid_class_probe(&model, &line_grid(0.0, 1.0, 10), 8, 200, 1, Execution::Sequential).unwrap();
    assert_eq!(rep.structure.len(), 1);
    assert_eq!(rep.members[0].len(), 10);
}

#[test]
fn grid_probe_monotone_walk_has_no_class() {
    let model = MonotoneWalk::new(0.5, None).unwrap();
    let rep = grid_class_probe(&model, &line_grid(0.0, 3.0, 12), 8, 200, 1, Execution::Sequential).unwrap();
    assert!(rep.structure.is_empty());
    assert!(rep.inconclusive.is_empty());
}

#[test]
fn extinction_order_is_inclusion() {
    for d in 1..=4 {
        let cs = product_classes_extinction(d).unwrap();
        cs.validate().unwrap();
        for i in 0..cs.len() {
            for j in 0..cs.len() {
                assert_eq!(cs.leads_to(i, j), i & j == i);
            }
        }
    }
}

#[test]
fn admissibility_example_on_orthants() {
    let cs = product_classes_extinction(2).unwrap();
    let b = |lo: [f64; 2], hi: [f64; 2]| BoxRegion::new(lo.to_vec(), hi.to_vec()).unwrap();
    let mu = BoxMixture::new(vec![(b([0.0, -1.0], [1.0, 0.0]), 0.5), (b([-1.0, 0.0], [0.0, 1.0]), 0.5)]).unwrap();
    let r = check_admissible(&MeasureDescriptor::PiecewiseUniform(mu), &cs).unwrap();
    assert!(!r.admissible() && !r.charged_totally_ordered);
}

/// Piecewise-linear nondecreasing drifts from random positive slopes.
fn drift_strategy() -> impl Strategy<Value = Vec<[f64; 2]>> {
    (proptest::collection::vec(0.0f64..2.0, 3..8), -2.0f64..2.0).prop_map(|(slopes, y0)| {
        let mut knots = vec![[-4.0, y0]];
        let step = 8.0 / slopes.len() as f64;
        for (i, s) in slopes.iter().enumerate() {
            let [x, y] = knots[i];
            knots.push([x + step, y + s * step]);
        }
        knots
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn discovered_classes_are_disjoint_with_sharp_ends(knots in drift_strategy()) {
        let f = DriftFn::PiecewiseLinear { knots };
        let cs = discover_classes_1d(|x| f.eval(x), (-4.0, 4.0), 0.01, None).unwrap();
        cs.validate().unwrap();
        let mut prev = f64::NEG_INFINITY;
        for c in &cs.classes {
            let Region::Interval { lo, hi } = *c else { unreachable!() };
            prop_assert!(lo < hi && lo >= prev && lo >= -4.0 && hi <= 4.0);
            prev = hi;
            for e in [lo, hi] {
                if e > -4.0 && e < 4.0 {
                    let g = (f.eval(e) - e).abs();
                    prop_assert!((g - 1.0).abs() < 1e-6, "|g(e)| = {g} at {e}");
                }
            }
        }
        let mut closed = cs.order.clone();
        let n = closed.len();
        for k in 0..n { for i in 0..n { for j in 0..n {
            if closed[i][k] && closed[k][j] { closed[i][j] = true; }
        }}}
        prop_assert_eq!(closed, cs.order);
    }
}
