use balk1::loops::{example_4_1_subbundle, flagship_symbol, LoopPair, MatrixLoop, SymbolPair};
use balk1::numkern::{c, cis, random_gaussian, CMatrix};
use balk1::opmodel::{
    clip_to_contraction, constant_loop, kbalance_report, monomial_loop, quantize, quantize_symbol, splitting_projection,
    tail_seminorm, verify_block_estimates, verify_theorem_h, Half, ModeSplit, OpError, Rounding, SplitSymbol, TailCutoff,
    TruncOp, TruncOpJson,
};
use proptest::prelude::*;

/// `Σ_j C_j e^{ijθ}` with Gaussian coefficients for `|j| ≤ band`.
fn random_loop(dim: usize, band: i64, grid: usize, seed: u64) -> MatrixLoop {
    let coeffs: Vec<(i64, CMatrix)> =
        (-band..=band).map(|j| (j, random_gaussian(dim, dim, seed.wrapping_add(j as u64)).scale_real(0.3))).collect();
    MatrixLoop::from_fn(grid, |t| {
        coeffs.iter().fold(CMatrix::zeros(dim, dim), |acc, (j, m)| &acc + &m.scale(cis(4.0 * *j as f64 * t)))
    })
    .unwrap()
}

fn unit_loop(dim: usize, grid: usize) -> MatrixLoop {
    MatrixLoop::constant(grid, &CMatrix::identity(dim)).unwrap()
}

#[test]
fn quantize_examples() {
    let id = quantize_symbol(&unit_loop(2, 64), &unit_loop(2, 64), 16).unwrap();
    assert!(id.dist(&TruncOp::identity(16, 2)).unwrap() < 1e-12);

    let shift = quantize_symbol(&constant_loop(c(1.0, 0.0), 512).unwrap(), &monomial_loop(1, 512).unwrap(), 64).unwrap();
    let s = shift.half(Half::Plus);
    let expected = CMatrix::from_fn(65, 65, |i, j| if i == j + 1 { c(1.0, 0.0) } else { c(0.0, 0.0) });
    assert!(s.dist(&expected) < 1e-12);

    let zero = MatrixLoop::constant(64, &CMatrix::zeros(1, 1)).unwrap();
    let killed = quantize_symbol(&unit_loop(1, 64), &zero, 16).unwrap();
    assert!(killed.half(Half::Plus).max_abs() < 1e-15);
    assert!(killed.half(Half::Minus).dist(&CMatrix::identity(16)) < 1e-12);
}

#[test]
fn quantize_detects_undersampling() {
    let sp = flagship_symbol(6, 0, 1024).unwrap();
    assert!(matches!(quantize(&sp, 8), Err(OpError::Undersampled { half: Half::Plus, .. })));
    assert!(quantize(&sp, 128).is_ok());
}

#[test]
fn clip_examples() {
    let small = quantize_symbol(&unit_loop(1, 64), &unit_loop(1, 64), 8).unwrap().scale(c(0.7, 0.0));
    assert!(clip_to_contraction(&small).unwrap() == small);
    let two = TruncOp::identity(4, 1).scale(c(2.0, 0.0));
    assert!(clip_to_contraction(&two).unwrap().dist(&TruncOp::identity(4, 1)).unwrap() < 1e-12);
    let g = random_gaussian(5, 5, 3);
    let g = g.scale_real(1.3 / g.opnorm());
    let x = TruncOp::from_halves(4, 1, CMatrix::identity(4).scale_real(0.5), g).unwrap();
    let y = clip_to_contraction(&x).unwrap();
    assert!((y.opnorm() - 1.0).abs() < 1e-10);
    assert!(y.dist(&x).unwrap() <= 0.3 + 1e-10);
}

#[test]
fn kbalance_examples() {
    let sp = flagship_symbol(1, 0, 1024).unwrap();
    let (d1, d2) = quantize(&sp, 128).unwrap();
    let (a, b) = (clip_to_contraction(&d1).unwrap(), clip_to_contraction(&d2).unwrap());
    let r = kbalance_report(&a, &b, TailCutoff(64), 0.05).unwrap();
    assert!(r.balanced && r.max_final() <= 0.05);
    assert_eq!(r.cutoffs, vec![64]);
    let r = kbalance_report(&a, &b, TailCutoff(32), 0.05).unwrap();
    assert_eq!(r.cutoffs, vec![32, 64]);
    assert!(r.max_increase() <= 0.02);

    let same = kbalance_report(&a, &a, TailCutoff(64), 0.05).unwrap();
    assert_eq!(same.max_final(), 0.0);

    let half = MatrixLoop::constant(64, &CMatrix::scalar(c(0.5, 0.0))).unwrap();
    let most = MatrixLoop::constant(64, &CMatrix::scalar(c(0.9, 0.0))).unwrap();
    let a = quantize_symbol(&half, &half, 32).unwrap();
    let b = quantize_symbol(&most, &most, 32).unwrap();
    let r = kbalance_report(&a, &b, TailCutoff(8), 0.05).unwrap();
    assert!(!r.balanced);
    let first = &r.residuals[0];
    assert!(first.values.iter().all(|v| (v - 0.56).abs() < 1e-12), "{first:?}");
    assert!(matches!(kbalance_report(&a, &b, TailCutoff(32), 0.05), Err(OpError::Cutoff { .. })));
}

#[test]
fn split_examples() {
    let grid = 1024;
    let sp = flagship_symbol(1, 0, grid).unwrap();
    let explicit = SplitSymbol::Explicit {
        minus: MatrixLoop::constant(grid, &CMatrix::zeros(2, 2)).unwrap(),
        plus: example_4_1_subbundle(grid).unwrap(),
    };
    let s = splitting_projection(&sp, 64, &explicit, Rounding::default()).unwrap();
    assert!(s.projection_residual().unwrap() <= 1e-8);
    assert_eq!(s.ranks()[0], 0);

    let diag = LoopPair::diagonal(sp.plus().sigma1().clone(), 1e-10).unwrap();
    let trivial = SymbolPair::new(diag.clone(), diag).unwrap();
    let s = splitting_projection(&trivial, 32, &SplitSymbol::default(), Rounding::default()).unwrap();
    assert_eq!(s.ranks(), [0, 0]);
    assert!(s.projection().opnorm() == 0.0);

    let unitary = LoopPair::new(monomial_loop(1, grid).unwrap(), unit_loop(1, grid), 1e-10).unwrap();
    let sp = SymbolPair::with_trivial_minus(unitary).unwrap();
    let s = splitting_projection(&sp, 64, &SplitSymbol::default(), Rounding::widest_gap()).unwrap();
    assert_eq!(s.ranks()[0], 0);
    assert!(s.ranks()[1] >= 58, "{:?}", s.ranks());
}

#[test]
fn mode_split_rejects_non_projections() {
    let x = TruncOp::identity(8, 1).scale(c(0.5, 0.0));
    assert!(ModeSplit::new(x, "half").is_err());
}

#[test]
fn theorem_h_trivial_cases() {
    let grid = 512;
    let sp = flagship_symbol(1, 0, grid).unwrap();
    let (d1, _) = quantize(&sp, 64).unwrap();
    let a = clip_to_contraction(&d1).unwrap();
    let explicit = SplitSymbol::Explicit {
        minus: MatrixLoop::constant(grid, &CMatrix::zeros(2, 2)).unwrap(),
        plus: example_4_1_subbundle(grid).unwrap(),
    };
    let split = splitting_projection(&sp, 64, &explicit, Rounding::default()).unwrap();
    let th = verify_theorem_h(&a, &a, &split, TailCutoff(32), 0.1).unwrap();
    assert!(th.difference.iter().all(|(_, v)| *v == 0.0));
    let be = verify_block_estimates(&a, &a, &split, TailCutoff(32), 0.1).unwrap();
    assert!(be.pass && be.estimates.iter().all(|e| e.value == 0.0));

    let everything = ModeSplit::new(TruncOp::identity(64, 2), "identity").unwrap();
    let th = verify_theorem_h(&a, &a, &everything, TailCutoff(32), 0.1).unwrap();
    assert!(th.degenerate);
}

#[test]
fn trunc_op_json() {
    let x = quantize_symbol(&unit_loop(2, 64), &random_loop(2, 2, 64, 5), 8).unwrap();
    let text = serde_json::to_string(&x.to_json()).unwrap();
    let back: TruncOpJson = serde_json::from_str(&text).unwrap();
    assert!(back.decode().unwrap() == x);
    let mut coupled = x.matrix();
    coupled.set(0, 30, c(0.5, 0.0));
    assert!(matches!(TruncOp::from_matrix(8, 2, &coupled), Err(OpError::Coupled(_))));
}

#[test]
fn unitary_symbols_give_tail_isometries() {
    let tails: Vec<f64> = [64, 128]
        .iter()
        .map(|&n| {
            let sym = random_loop(2, 2, 8 * n, 17).map(|x| {
                let s = x.svd().unwrap();
                &s.u * &s.v.adjoint()
            });
            let t = quantize_symbol(&sym, &sym, n).unwrap();
            tail_seminorm(&t.adjoint().try_mul(&t).unwrap().one_minus(), TailCutoff(n / 2)).unwrap()
        })
        .collect();
    assert!(tails[1] <= tails[0] + 0.02, "{tails:?}");
    assert!(tails[1] < 0.05, "{tails:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn quantize_is_star_compatible(dim in 1usize..3, band in 0i64..4, seed: u64) {
        let (m, p) = (random_loop(dim, band, 128, seed), random_loop(dim, band, 128, seed ^ 7));
        let q = quantize_symbol(&m, &p, 16).unwrap();
        let qs = quantize_symbol(&m.adjoint(), &p.adjoint(), 16).unwrap();
        prop_assert!(qs.dist(&q.adjoint()).unwrap() <= 1e-12);
    }

    #[test]
    fn quantize_is_homogeneous(dim in 1usize..3, band in 0i64..4, seed: u64, lambda in 0.0f64..5.0) {
        let (m, p) = (random_loop(dim, band, 128, seed), random_loop(dim, band, 128, seed ^ 3));
        let q = quantize_symbol(&m, &p, 16).unwrap();
        let scaled = quantize_symbol(&m.map(|x| x.scale_real(lambda)), &p.map(|x| x.scale_real(lambda)), 16).unwrap();
        prop_assert!(scaled.dist(&q.scale(c(lambda, 0.0))).unwrap() <= 1e-12 * (1.0 + lambda));
    }

    #[test]
    fn tail_seminorm_shrinks_with_cutoff(p in -2i64..=2, q in -2i64..=2) {
        let sp = flagship_symbol(p, q, 512).unwrap();
        let (d1, d2) = quantize(&sp, 64).unwrap();
        let (a, b) = (clip_to_contraction(&d1).unwrap(), clip_to_contraction(&d2).unwrap());
        let x = a.adjoint().try_mul(&a).unwrap().try_sub(&b.adjoint().try_mul(&b).unwrap()).unwrap();
        let (m1, m2) = (tail_seminorm(&x, TailCutoff(16)).unwrap(), tail_seminorm(&x, TailCutoff(32)).unwrap());
        prop_assert!(m2 <= m1 + 0.02);
    }
}
