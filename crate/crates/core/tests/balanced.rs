use std::f64::consts::FRAC_PI_2;

use balk1::balanced::{
    check_balanced, finite_split, make_c, random_balanced_pair, unitalization_pair, validate_path,
    verify_c_properties, BalancedError, BalancedPair, HomotopyKind, HomotopyPath, PairJson, UnitalizationFunctions,
    SPLIT_THRESHOLD,
};
use balk1::loops::{example_4_1_spec, ScalarSpec};
use balk1::numkern::{c, random_gaussian, random_unitary, CMatrix};
use proptest::prelude::*;

fn diag(v: &[f64]) -> CMatrix {
    CMatrix::real_diag(v)
}

fn unit_pair(seed: u64) -> BalancedPair {
    let u = random_unitary(3, seed);
    BalancedPair::new(u, CMatrix::identity(3), 1e-12).unwrap()
}

fn example_sample() -> BalancedPair {
    let lp = example_4_1_spec(&ScalarSpec::Turns(1), &ScalarSpec::Turns(0), &ScalarSpec::default_gamma(), 64).unwrap();
    BalancedPair::new(lp.sigma1().sample(11).clone(), lp.sigma2().sample(11).clone(), 1e-10).unwrap()
}

#[test]
fn check_balanced_examples() {
    let r = unit_pair(1).report();
    assert!(r.balanced && r.max_rel1() <= 1e-12 && r.max_rel2() <= 1e-12);
    assert!(check_balanced(&diag(&[1.0, 0.5]), &diag(&[-1.0, 0.5]), 1e-12).unwrap().balanced);
    let r = check_balanced(&diag(&[1.0, 0.5]), &diag(&[0.5, 1.0]), 1e-9).unwrap();
    assert!(!r.balanced);
    assert!((r.rel1[0] - 0.75).abs() < 1e-12);
    assert!(matches!(check_balanced(&diag(&[1.0]), &diag(&[1.0, 1.0]), 1e-9), Err(BalancedError::Shape(..))));
    assert!(matches!(
        BalancedPair::new(diag(&[1.0, 0.5]), diag(&[0.5, 1.0]), 1e-9),
        Err(BalancedError::NotBalanced { .. })
    ));
}

#[test]
fn make_c_examples() {
    for seed in 0..5 {
        let pair = unit_pair(seed);
        assert!(make_c(&pair).dist(pair.a()) <= 4.0 * f64::EPSILON);
    }
    let a = random_gaussian(3, 3, 4);
    let a = a.scale_real(0.9 / a.opnorm());
    let same = BalancedPair::new(a.clone(), a, 1e-12).unwrap();
    assert!(make_c(&same) == CMatrix::identity(3));
    let p = BalancedPair::new(diag(&[1.0, 0.5]), diag(&[-1.0, 0.5]), 1e-12).unwrap();
    let cm = make_c(&p);
    assert!(cm.dist(&diag(&[-1.0, 1.0])) < 1e-15);
    assert!((p.b() * &cm).dist(p.a()) < 1e-15);
}

#[test]
fn c_properties_examples() {
    assert!(verify_c_properties(&unit_pair(2)).max() <= 1e-12);
    let r = verify_c_properties(&example_sample());
    assert!(r.pass && r.max() <= 1e-10);
    let zero = BalancedPair::new(CMatrix::zeros(2, 2), CMatrix::zeros(2, 2), 1e-12).unwrap();
    assert!(make_c(&zero) == CMatrix::identity(2));
    assert_eq!(verify_c_properties(&zero).max(), 0.0);
}

#[test]
fn homotopy_examples() {
    let pair = random_balanced_pair(3, 11).unwrap();
    let swap = HomotopyPath::new(HomotopyKind::Swap, pair.clone(), 101).unwrap();
    let (a0, b0) = swap.eval(0.0).unwrap();
    let ab = pair.a().direct_sum(pair.b());
    assert!(a0.dist(&ab) < 1e-12 && b0.dist(&ab) < 1e-12);
    let (_, b1) = swap.eval(FRAC_PI_2).unwrap();
    assert!(b1.dist(&pair.b().direct_sum(pair.a())) < 1e-12);
    assert!(validate_path(&swap, 101, 1e-10).unwrap().max_residual <= 1e-10);

    let adj = HomotopyPath::new(HomotopyKind::Adjoint, pair.clone(), 101).unwrap();
    let (a1, b1) = adj.eval(FRAC_PI_2).unwrap();
    let end = (pair.a() * &pair.a().adjoint()).direct_sum(&CMatrix::identity(3));
    assert!(a1.dist(&end) < 1e-10 && b1.dist(&end) < 1e-10);

    let ik = HomotopyPath::new(HomotopyKind::IotaKappa, example_sample(), 101).unwrap();
    let (_, b0) = ik.eval(0.0).unwrap();
    assert!(b0.dist(&CMatrix::identity(2).direct_sum(example_sample().a())) < 1e-10);
    assert!(validate_path(&ik, 101, 1e-10).unwrap().max_residual <= 1e-10);

    let diag_pair = BalancedPair::new(pair.a().clone(), pair.a().clone(), 1e-12).unwrap();
    let lin = HomotopyPath::new(HomotopyKind::LinearTrivial, diag_pair, 11).unwrap();
    let (z1, z2) = lin.eval(0.0).unwrap();
    assert_eq!(z1.max_abs() + z2.max_abs(), 0.0);
    assert!(validate_path(&lin, 11, 1e-12).unwrap().max_residual <= 1e-12);

    let unequal = BalancedPair::new(diag(&[1.0]), diag(&[-1.0]), 1e-12).unwrap();
    assert!(matches!(
        HomotopyPath::new(HomotopyKind::LinearTrivial, unequal, 11),
        Err(BalancedError::KindMismatch { .. })
    ));
    assert!(matches!(swap.eval(2.0), Err(BalancedError::ParameterRange(_))));
    assert!(matches!(validate_path(&swap, 1, 1e-9), Err(BalancedError::Grid(1))));
}

#[test]
fn finite_split_examples() {
    let s = finite_split(&unit_pair(3), SPLIT_THRESHOLD).unwrap();
    assert_eq!(s.p1.max_abs(), 0.0);
    let p = BalancedPair::new(diag(&[1.0, 0.5]), diag(&[-1.0, 0.5]), 1e-12).unwrap();
    let s = finite_split(&p, SPLIT_THRESHOLD).unwrap();
    assert!(s.p1.dist(&diag(&[0.0, 1.0])) < 1e-12);
    assert!(s.residual_diff_onblock < 1e-12 && s.residual_defect_offblock < 1e-12);
    let zero = BalancedPair::new(CMatrix::zeros(2, 2), CMatrix::zeros(2, 2), 1e-12).unwrap();
    let s = finite_split(&zero, SPLIT_THRESHOLD).unwrap();
    assert!(s.p1.dist(&CMatrix::identity(2)) < 1e-12);
    assert_eq!(s.residual_diff_onblock + s.residual_defect_offblock, 0.0);
}

#[test]
fn unitalization_examples() {
    let one = unitalization_pair(&CMatrix::identity(2), 0.2).unwrap();
    assert!(one.a().max_abs() < 1e-15 && one.b().max_abs() < 1e-15);
    let fg = UnitalizationFunctions::new(0.2).unwrap();
    let minus = unitalization_pair(&diag(&[-1.0]), 0.2).unwrap();
    assert!((minus.b().get(0, 0) - c(1.0, 0.0)).norm() < 1e-12);
    assert!((minus.a().get(0, 0) + c(1.0, 0.0)).norm() < 0.2);
    assert!((minus.a().get(0, 0) - fg.f(c(-1.0, 0.0))).norm() < 1e-12);
    let r = unitalization_pair(&random_unitary(3, 5), 0.1).unwrap().report();
    assert!(r.max_rel1() <= 1e-8 && r.max_rel2() <= 1e-8);
    assert!(matches!(unitalization_pair(&diag(&[0.5]), 0.2), Err(BalancedError::Num(_))));
    assert!(matches!(unitalization_pair(&diag(&[1.0]), 0.4), Err(BalancedError::Delta(_))));
}

#[test]
fn pair_json_roundtrip() {
    let pair = random_balanced_pair(3, 8).unwrap();
    let text = serde_json::to_string(&pair.to_json()).unwrap();
    let back: PairJson = serde_json::from_str(&text).unwrap();
    assert_eq!(back.dim, 3);
    assert!(back.decode().unwrap() == pair);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn stated_endpoints_hold(dim in 1usize..5, seed: u64, k in 0usize..4) {
        let kind = HomotopyKind::ALL[k];
        let pair = random_balanced_pair(dim, seed).unwrap();
        let base = if kind == HomotopyKind::LinearTrivial {
            BalancedPair::new(pair.a().clone(), pair.a().clone(), pair.tol()).unwrap()
        } else {
            pair
        };
        let path = HomotopyPath::new(kind, base, 11).unwrap();
        let [start, end] = path.stated_endpoints();
        for (t, (sa, sb)) in [(0.0, start), (FRAC_PI_2, end)] {
            let (a, b) = path.eval(t).unwrap();
            prop_assert!(a.dist(&sa) <= 1e-10 && b.dist(&sb) <= 1e-10, "{kind:?} at t = {t}");
        }
    }

    #[test]
    fn canonical_unitary_properties(dim in 1usize..5, seed: u64) {
        let pair = random_balanced_pair(dim, seed).unwrap();
        let r = verify_c_properties(&pair);
        prop_assert!(r.pass && r.max() <= 50.0 * pair.tol());
    }

    #[test]
    fn direct_sums_stay_balanced(d1 in 1usize..4, d2 in 1usize..4, s1: u64, s2: u64) {
        let (p, q) = (random_balanced_pair(d1, s1).unwrap(), random_balanced_pair(d2, s2).unwrap());
        let sum = p.direct_sum(&q);
        let worst = |r: balk1::balanced::ResidualReport| r.max_rel1().max(r.max_rel2());
        prop_assert!(worst(sum.report()) <= worst(p.report()).max(worst(q.report())) + 1e-15);
    }

    #[test]
    fn near_rel2_pairs_nearly_satisfy_rel1(dim in 1usize..5, seed: u64) {
        let pair = random_balanced_pair(dim, seed).unwrap();
        let e = random_gaussian(dim, dim, seed ^ 1);
        let noise = e.scale_real(1e-14 / e.opnorm());
        let a = pair.a() + &noise;
        let r = check_balanced(&a, pair.b(), 1e-6).unwrap();
        prop_assert!(r.max_rel2() <= 1e-13);
        prop_assert!(r.max_rel1() <= 10.0 * 1e-14f64.sqrt());
    }

    #[test]
    fn unitalization_pairs_are_balanced(dim in 1usize..5, seed: u64, delta in 0.02f64..0.33) {
        let pair = unitalization_pair(&random_unitary(dim, seed), delta).unwrap();
        prop_assert!(check_balanced(pair.a(), pair.b(), 1e-8).unwrap().balanced);
    }
}
