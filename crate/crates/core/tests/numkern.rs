use balk1::numkern::{
    c, cis, func_calc_unitary, nearest_projection, opnorm, random_gaussian, random_unitary, CMatrix, NumError,
};
use balk1::balanced::UnitalizationFunctions;
use proptest::prelude::*;

fn diag(v: &[f64]) -> CMatrix {
    CMatrix::real_diag(v)
}

#[test]
fn opnorm_examples() {
    assert_eq!(opnorm(&CMatrix::identity(3)), 1.0);
    assert_eq!(opnorm(&CMatrix::zeros(3, 3)), 0.0);
    assert!((opnorm(&diag(&[2.0, 0.5])) - 2.0).abs() < 1e-12);
}

#[test]
fn func_calc_examples() {
    let u = random_unitary(4, 3);
    assert!(func_calc_unitary(&u, |z| z).unwrap().dist(&u) < 1e-10);
    let flip = diag(&[1.0, -1.0]);
    assert!(func_calc_unitary(&flip, |z| z * z).unwrap().dist(&CMatrix::identity(2)) < 1e-10);
    let w = CMatrix::diag(&[cis(std::f64::consts::FRAC_PI_4)]);
    let fg = UnitalizationFunctions::new(0.2).unwrap();
    let fw = func_calc_unitary(&w, |z| fg.f(z)).unwrap();
    assert!(fw.unitarity_defect() < 1e-10);
    assert!(fw.dist(&w) < 0.2);
}

#[test]
fn func_calc_rejects_non_unitary() {
    assert!(matches!(func_calc_unitary(&diag(&[0.5, 1.0]), |z| z), Err(NumError::NotUnitary(_))));
}

#[test]
fn func_calc_handles_degenerate_spectrum() {
    // Repeated eigenvalue: the basis must still be orthonormal.
    let v = random_unitary(4, 9);
    let u = &(&v * &CMatrix::diag(&[c(1.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), cis(1.0)])) * &v.adjoint();
    assert!(func_calc_unitary(&u, |z| z).unwrap().dist(&u) < 1e-10);
}

#[test]
fn nearest_projection_examples() {
    let p = nearest_projection(&diag(&[0.99, 0.01]), 0.1).unwrap();
    assert!(p.dist(&diag(&[1.0, 0.0])) < 1e-12);
    let v = random_unitary(3, 1);
    let exact = &(&v * &diag(&[1.0, 1.0, 0.0])) * &v.adjoint();
    assert!(nearest_projection(&exact, 0.1).unwrap().dist(&exact) < 1e-12);
    assert!(matches!(nearest_projection(&diag(&[0.55, 0.45]), 0.1), Err(NumError::SpectralGap { .. })));
}

#[test]
fn plumbing_examples() {
    assert!(random_unitary(4, 7) == random_unitary(4, 7));
    let s = diag(&[3.0, 1.0]).svd().unwrap().s;
    assert!((s[0] - 3.0).abs() < 1e-14 && (s[1] - 1.0).abs() < 1e-14);
    let n = CMatrix::from_real_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
    let nt = CMatrix::from_real_rows(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
    assert!(n.adjoint() == nt);
    assert!(matches!(n.try_matmul(&CMatrix::zeros(3, 3)), Err(NumError::Shape { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn adjoint_is_involutive(r in 1usize..6, k in 1usize..6, seed: u64) {
        let x = random_gaussian(r, k, seed);
        prop_assert!(x.adjoint().adjoint() == x);
    }

    #[test]
    fn opnorm_is_submultiplicative(n in 1usize..6, seed: u64) {
        let x = random_gaussian(n, n, seed);
        let y = random_gaussian(n, n, seed ^ 0x5555);
        prop_assert!(opnorm(&(&x * &y)) <= opnorm(&x) * opnorm(&y) * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn opnorm_matches_largest_singular_value(r in 1usize..7, k in 1usize..7, seed: u64) {
        let x = random_gaussian(r, k, seed);
        let s = x.svd().unwrap().s;
        prop_assert!((opnorm(&x) - s[0]).abs() <= 1e-10 * s[0].max(1.0));
    }

    #[test]
    fn unitaries_have_unit_norm(n in 1usize..8, seed: u64) {
        let u = random_unitary(n, seed);
        prop_assert!((opnorm(&u) - 1.0).abs() <= 1e-12);
        prop_assert!(u.unitarity_defect() <= 1e-12);
    }

    #[test]
    fn identity_calculus_returns_input(n in 1usize..7, seed: u64) {
        let u = random_unitary(n, seed);
        prop_assert!(func_calc_unitary(&u, |z| z).unwrap().dist(&u) <= 1e-10);
    }

    #[test]
    fn rounding_gives_projections(n in 1usize..7, seed: u64, bits in prop::collection::vec(any::<bool>(), 7)) {
        let v = random_unitary(n, seed);
        let spectrum: Vec<f64> = bits[..n].iter().map(|&b| if b { 0.9 } else { 0.1 }).collect();
        let x = (&(&v * &diag(&spectrum)) * &v.adjoint()).hermitian_part();
        let p = nearest_projection(&x, 0.1).unwrap();
        prop_assert!((&p * &p).dist(&p) <= 1e-10);
        prop_assert!(p.self_adjoint_defect() <= 1e-10);
        prop_assert!((p.trace().re - bits[..n].iter().filter(|&&b| b).count() as f64).abs() < 1e-10);
    }
}
