//! Balanced pairs of contraction matrices: relation residuals, the canonical
//! unitary `1 + b*(a − b)`, the rotation homotopies, the finite-dimensional
//! split into a defect part and a unitary part, and the unitalization pair
//! built from a unitary.

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::numkern::{c, cis, func_calc_unitary, random_gaussian, random_unitary, rotation, CMatrix, NumError, C64};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BalancedError {
    #[error(transparent)]
    Num(#[from] NumError),
    #[error("pair entries must be square of equal size, got {0:?} and {1:?}")]
    Shape((usize, usize), (usize, usize)),
    #[error("pair is not balanced within {tol:e}: worst residual {worst_name} = {worst:.3e}")]
    NotBalanced { tol: f64, worst_name: &'static str, worst: f64 },
    #[error("{kind:?} path needs {need}")]
    KindMismatch { kind: HomotopyKind, need: &'static str },
    #[error("parameter t = {0} outside [0, π/2]")]
    ParameterRange(f64),
    #[error("grid must have at least 2 points, got {0}")]
    Grid(usize),
    #[error("δ = {0} outside (0, 1/3)")]
    Delta(f64),
    #[error("defect spectrum has eigenvalue {value:.3e} inside the ambiguity band ({lo:.1e}, {hi:.1e})")]
    SplitGap { value: f64, lo: f64, hi: f64 },
}

/// Names of the four relations `a*a = b*b`, `aa* = bb*`,
/// `a(1 − a*a) = b(1 − b*b)`, `(1 − aa*)a = (1 − bb*)b`.
pub const REL1_NAMES: [&str; 4] = ["a*a-b*b", "aa*-bb*", "a(1-a*a)-b(1-b*b)", "(1-aa*)a-(1-bb*)b"];

/// Names of the eight annihilation products between `a − b`, `a* − b*` and
/// the defects, each on the side where it vanishes for balanced pairs.
pub const REL2_NAMES: [&str; 8] = [
    "(a-b)(1-a*a)",
    "(1-a*a)(a*-b*)",
    "(1-aa*)(a-b)",
    "(a*-b*)(1-aa*)",
    "(a-b)(1-b*b)",
    "(1-b*b)(a*-b*)",
    "(1-bb*)(a-b)",
    "(a*-b*)(1-bb*)",
];

/// Operator-norm residuals of both relation systems plus the contraction
/// norms.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualReport {
    pub tol: f64,
    pub norm_a: f64,
    pub norm_b: f64,
    pub rel1: [f64; 4],
    pub rel2: [f64; 8],
    pub balanced: bool,
}

impl ResidualReport {
    pub fn max_rel1(&self) -> f64 {
        self.rel1.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_rel2(&self) -> f64 {
        self.rel2.iter().copied().fold(0.0, f64::max)
    }

    /// The twelve relation residuals with their names.
    pub fn named(&self) -> Vec<(&'static str, f64)> {
        REL1_NAMES
            .iter()
            .copied()
            .zip(self.rel1)
            .chain(REL2_NAMES.iter().copied().zip(self.rel2))
            .collect()
    }

    fn worst(&self) -> (&'static str, f64) {
        let mut all = vec![("‖a‖-1", self.norm_a - 1.0), ("‖b‖-1", self.norm_b - 1.0)];
        all.extend(self.named().into_iter().take(4));
        all.into_iter().fold(("", f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc })
    }
}

fn check_shapes(a: &CMatrix, b: &CMatrix) -> Result<(), BalancedError> {
    if !a.is_square() || a.shape() != b.shape() {
        return Err(BalancedError::Shape(a.shape(), b.shape()));
    }
    Ok(())
}

/// The four relations of the first kind and the eight annihilation products
/// as matrices, in the order of [`REL1_NAMES`] and [`REL2_NAMES`].
pub fn relation_matrices(a: &CMatrix, b: &CMatrix) -> ([CMatrix; 4], [CMatrix; 8]) {
    let (as_, bs) = (a.adjoint(), b.adjoint());
    let src_a = (&as_ * a).one_minus();
    let rng_a = (a * &as_).one_minus();
    let src_b = (&bs * b).one_minus();
    let rng_b = (b * &bs).one_minus();
    let diff = a - b;
    let diff_s = diff.adjoint();
    let rel1 = [
        &src_a - &src_b,
        &rng_a - &rng_b,
        &(a * &src_a) - &(b * &src_b),
        &(&rng_a * a) - &(&rng_b * b),
    ];
    let rel2 = [
        &diff * &src_a,
        &src_a * &diff_s,
        &rng_a * &diff,
        &diff_s * &rng_a,
        &diff * &src_b,
        &src_b * &diff_s,
        &rng_b * &diff,
        &diff_s * &rng_b,
    ];
    (rel1, rel2)
}

/// Residuals of both relation systems; the verdict uses the contraction
/// bounds and the four relations of the first kind.
pub fn check_balanced(a: &CMatrix, b: &CMatrix, tol: f64) -> Result<ResidualReport, BalancedError> {
    check_shapes(a, b)?;
    let (r1, r2) = relation_matrices(a, b);
    let rel1 = r1.map(|m| m.opnorm());
    let rel2 = r2.map(|m| m.opnorm());
    let (norm_a, norm_b) = (a.opnorm(), b.opnorm());
    let balanced = norm_a <= 1.0 + tol && norm_b <= 1.0 + tol && rel1.iter().all(|r| *r <= tol);
    Ok(ResidualReport { tol, norm_a, norm_b, rel1, rel2, balanced })
}

/// A pair of equal-size square contractions satisfying the balance relations
/// within `tol`.
#[derive(Clone, Debug, PartialEq)]
pub struct BalancedPair {
    a: CMatrix,
    b: CMatrix,
    tol: f64,
}

impl BalancedPair {
    /// Validates the pair with [`check_balanced`].
    pub fn new(a: CMatrix, b: CMatrix, tol: f64) -> Result<Self, BalancedError> {
        let report = check_balanced(&a, &b, tol)?;
        if !report.balanced {
            let (worst_name, worst) = report.worst();
            return Err(BalancedError::NotBalanced { tol, worst_name, worst });
        }
        Ok(BalancedPair { a, b, tol })
    }

    /// The pair `(u, 1)` for a unitary `u`.
    pub fn unitary(u: CMatrix, tol: f64) -> Result<Self, BalancedError> {
        let n = u.rows();
        Self::new(u, CMatrix::identity(n), tol)
    }

    pub fn a(&self) -> &CMatrix {
        &self.a
    }

    pub fn b(&self) -> &CMatrix {
        &self.b
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    pub fn report(&self) -> ResidualReport {
        check_balanced(&self.a, &self.b, self.tol).expect("shapes validated at construction")
    }

    /// `(b, a)`.
    pub fn swapped(&self) -> BalancedPair {
        BalancedPair { a: self.b.clone(), b: self.a.clone(), tol: self.tol }
    }

    /// `(a ⊕ a', b ⊕ b')`, the sum of classes.
    pub fn direct_sum(&self, o: &BalancedPair) -> BalancedPair {
        BalancedPair { a: self.a.direct_sum(&o.a), b: self.b.direct_sum(&o.b), tol: self.tol.max(o.tol) }
    }

    pub fn to_json(&self) -> PairJson {
        PairJson { dim: self.dim(), a: matrix_to_json(&self.a), b: matrix_to_json(&self.b), tol: self.tol }
    }
}

/// Serialized pair: entries as rows of `[re, im]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairJson {
    pub dim: usize,
    pub a: Vec<Vec<[f64; 2]>>,
    pub b: Vec<Vec<[f64; 2]>>,
    pub tol: f64,
}

pub fn matrix_to_json(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    m.to_rows().into_iter().map(|r| r.into_iter().map(|z| [z.re, z.im]).collect()).collect()
}

pub fn matrix_from_json(rows: &[Vec<[f64; 2]>]) -> Result<CMatrix, NumError> {
    let rows: Vec<Vec<C64>> = rows.iter().map(|r| r.iter().map(|z| c(z[0], z[1])).collect()).collect();
    CMatrix::from_rows(&rows)
}

impl PairJson {
    /// Decodes the matrices and validates the pair at its stored tolerance.
    pub fn decode(&self) -> Result<BalancedPair, BalancedError> {
        let (a, b) = self.matrices()?;
        if a.rows() != self.dim {
            return Err(BalancedError::Shape(a.shape(), (self.dim, self.dim)));
        }
        BalancedPair::new(a, b, self.tol)
    }

    /// Decodes the matrices without checking any relation.
    pub fn matrices(&self) -> Result<(CMatrix, CMatrix), BalancedError> {
        let a = matrix_from_json(&self.a)?;
        let b = matrix_from_json(&self.b)?;
        check_shapes(&a, &b)?;
        Ok((a, b))
    }
}

/// `1 + b*(a − b)`.
pub fn make_c(pair: &BalancedPair) -> CMatrix {
    canonical_unitary(pair.a(), pair.b())
}

/// `1 + b*(a − b)` for any two equal-size square matrices.
pub fn canonical_unitary(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let n = a.rows();
    &CMatrix::identity(n) + &(&b.adjoint() * &(a - b))
}

/// Residuals of the properties of the canonical unitary.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CPropertiesReport {
    /// max(‖c*c − 1‖, ‖cc* − 1‖)
    pub c_unitarity: f64,
    /// Same for `1 + (a − b)b*`.
    pub companion_unitarity: f64,
    pub bc_minus_a: f64,
    pub commutator: f64,
    pub defect_left: f64,
    pub defect_right: f64,
    pub bound: f64,
    pub pass: bool,
}

impl CPropertiesReport {
    pub fn max(&self) -> f64 {
        [
            self.c_unitarity,
            self.companion_unitarity,
            self.bc_minus_a,
            self.commutator,
            self.defect_left,
            self.defect_right,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Checks unitarity of `c` and of `1 + (a − b)b*`, `bc = a`,
/// `[b*b, c] = 0` and `(1 − b*b)(c − 1) = 0 = (c − 1)(1 − b*b)` against
/// `50·tol`.
pub fn verify_c_properties(pair: &BalancedPair) -> CPropertiesReport {
    let (a, b) = (pair.a(), pair.b());
    let n = pair.dim();
    let cu = make_c(pair);
    let companion = &CMatrix::identity(n) + &(&(a - b) * &b.adjoint());
    let bsb = &b.adjoint() * b;
    let defect = bsb.one_minus();
    let cm1 = &cu - &CMatrix::identity(n);
    let mut r = CPropertiesReport {
        c_unitarity: cu.unitarity_defect(),
        companion_unitarity: companion.unitarity_defect(),
        bc_minus_a: (&(b * &cu) - a).opnorm(),
        commutator: (&(&bsb * &cu) - &(&cu * &bsb)).opnorm(),
        defect_left: (&defect * &cm1).opnorm(),
        defect_right: (&cm1 * &defect).opnorm(),
        bound: 50.0 * pair.tol(),
        pass: false,
    };
    r.pass = r.max() <= r.bound;
    r
}

/// The four homotopy constructions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HomotopyKind {
    /// `(s·a, s·a)` with `s = t/(π/2)`, for a base pair with `a = b`.
    LinearTrivial,
    /// `(a ⊕ b, U_t*(a ⊕ b)U_t)`.
    Swap,
    /// `((a ⊕ 1)U_t*(1 ⊕ a*)U_t, (b ⊕ 1)U_t*(1 ⊕ b*)U_t)`.
    Adjoint,
    /// `(c ⊕ b, (1 ⊕ b)U_t*(1 ⊕ c)U_t)` with `c = 1 + b*(a − b)`.
    IotaKappa,
}

impl HomotopyKind {
    pub const ALL: [HomotopyKind; 4] =
        [HomotopyKind::LinearTrivial, HomotopyKind::Swap, HomotopyKind::Adjoint, HomotopyKind::IotaKappa];

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "linear-trivial" => Some(HomotopyKind::LinearTrivial),
            "swap" => Some(HomotopyKind::Swap),
            "adjoint" => Some(HomotopyKind::Adjoint),
            "iota-kappa" => Some(HomotopyKind::IotaKappa),
            _ => None,
        }
    }
}

/// A homotopy of balanced pairs parametrized by `t ∈ [0, π/2]`.
#[derive(Clone, Debug)]
pub struct HomotopyPath {
    pub kind: HomotopyKind,
    pub base: BalancedPair,
    pub samples: usize,
}

impl HomotopyPath {
    pub fn new(kind: HomotopyKind, base: BalancedPair, samples: usize) -> Result<Self, BalancedError> {
        if kind == HomotopyKind::LinearTrivial && base.a().dist(base.b()) > base.tol() {
            return Err(BalancedError::KindMismatch { kind, need: "a base pair with a = b" });
        }
        Ok(HomotopyPath { kind, base, samples })
    }

    /// The pair at parameter `t`.
    pub fn eval(&self, t: f64) -> Result<(CMatrix, CMatrix), BalancedError> {
        homotopy_eval(self, t)
    }

    /// The endpoint pairs stated for each construction, at `t = 0` and
    /// `t = π/2`.
    pub fn stated_endpoints(&self) -> [(CMatrix, CMatrix); 2] {
        let (a, b) = (self.base.a(), self.base.b());
        let n = self.base.dim();
        let one = CMatrix::identity(n);
        match self.kind {
            HomotopyKind::LinearTrivial => [(CMatrix::zeros(n, n), CMatrix::zeros(n, n)), (a.clone(), a.clone())],
            HomotopyKind::Swap => {
                let ab = a.direct_sum(b);
                [(ab.clone(), ab.clone()), (ab, b.direct_sum(a))]
            }
            HomotopyKind::Adjoint => {
                let start = (a.direct_sum(&a.adjoint()), b.direct_sum(&b.adjoint()));
                let end = (a * &a.adjoint()).direct_sum(&one);
                [start, (end.clone(), end)]
            }
            HomotopyKind::IotaKappa => {
                let cu = make_c(&self.base);
                let big_a = cu.direct_sum(b);
                [(big_a.clone(), one.direct_sum(a)), (big_a.clone(), big_a)]
            }
        }
    }
}

/// Evaluates a homotopy at `t ∈ [0, π/2]`.
pub fn homotopy_eval(path: &HomotopyPath, t: f64) -> Result<(CMatrix, CMatrix), BalancedError> {
    if !(0.0..=FRAC_PI_2 + 1e-12).contains(&t) {
        return Err(BalancedError::ParameterRange(t));
    }
    let (a, b) = (path.base.a(), path.base.b());
    let n = path.base.dim();
    let one = CMatrix::identity(n);
    let u = rotation(t, n);
    let us = u.adjoint();
    Ok(match path.kind {
        HomotopyKind::LinearTrivial => {
            let s = t / FRAC_PI_2;
            (a.scale_real(s), a.scale_real(s))
        }
        HomotopyKind::Swap => {
            let ab = a.direct_sum(b);
            let rotated = &(&us * &ab) * &u;
            (ab, rotated)
        }
        HomotopyKind::Adjoint => {
            let side = |x: &CMatrix| {
                let left = x.direct_sum(&one);
                let mid = one.direct_sum(&x.adjoint());
                &(&(&left * &us) * &mid) * &u
            };
            (side(a), side(b))
        }
        HomotopyKind::IotaKappa => {
            let cu = make_c(&path.base);
            let big_a = cu.direct_sum(b);
            let left = one.direct_sum(b);
            let mid = one.direct_sum(&cu);
            (big_a, &(&(&left * &us) * &mid) * &u)
        }
    })
}

/// Worst residual of a homotopy over a uniform grid on `[0, π/2]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathReport {
    pub kind: HomotopyKind,
    pub grid: usize,
    pub tol: f64,
    /// Largest of the contraction excess and the four relation residuals.
    pub max_residual: f64,
    pub worst_t: f64,
    pub balanced: bool,
}

/// Checks [`check_balanced`] at `grid` uniformly spaced parameters.
pub fn validate_path(path: &HomotopyPath, grid: usize, tol: f64) -> Result<PathReport, BalancedError> {
    if grid < 2 {
        return Err(BalancedError::Grid(grid));
    }
    let results: Vec<(f64, f64)> = (0..grid)
        .into_par_iter()
        .map(|k| {
            let t = FRAC_PI_2 * k as f64 / (grid - 1) as f64;
            let (x, y) = homotopy_eval(path, t)?;
            let r = check_balanced(&x, &y, tol)?;
            let excess = (r.norm_a - 1.0).max(r.norm_b - 1.0).max(0.0);
            Ok((t, r.max_rel1().max(excess)))
        })
        .collect::<Result<_, BalancedError>>()?;
    let (worst_t, max_residual) =
        results.into_iter().fold((0.0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    Ok(PathReport { kind: path.kind, grid, tol, max_residual, worst_t, balanced: max_residual <= tol })
}

/// Splitting of the space into the defect support and its complement.
#[derive(Clone, Debug)]
pub struct FiniteSplit {
    /// Projection onto the support of the defects.
    pub p1: CMatrix,
    /// Worst norm of the defect blocks outside the `(1,1)` corner.
    pub residual_defect_offblock: f64,
    /// `‖P₁(a − b)‖ + ‖(a − b)P₁‖`.
    pub residual_diff_onblock: f64,
}

/// Default threshold on defect eigenvalues for [`finite_split`].
pub const SPLIT_THRESHOLD: f64 = 1e-8;

/// Projection onto the support of `(1 − a*a) + (1 − aa*)`; on its range the
/// two entries agree, on the complement both are unitary.
pub fn finite_split(pair: &BalancedPair, threshold: f64) -> Result<FiniteSplit, BalancedError> {
    let (a, b) = (pair.a(), pair.b());
    let n = pair.dim();
    let src = (&a.adjoint() * a).one_minus();
    let rng = (a * &a.adjoint()).one_minus();
    let support = &src + &rng;
    let e = support.herm_eigen()?;
    let (lo, hi) = (threshold, 1e3 * threshold);
    if let Some(&value) = e.values.iter().find(|v| **v > lo && **v < hi) {
        return Err(BalancedError::SplitGap { value, lo, hi });
    }
    let keep: Vec<usize> = (0..n).filter(|&i| e.values[i] >= hi).collect();
    let v = e.vectors.columns(&keep);
    let p1 = &v * &v.adjoint();
    let q = p1.one_minus();
    let defects = [
        src,
        rng,
        (&b.adjoint() * b).one_minus(),
        (b * &b.adjoint()).one_minus(),
    ];
    let residual_defect_offblock = defects
        .iter()
        .map(|d| {
            (&(&q * d) * &q).opnorm() + (&(&p1 * d) * &q).opnorm() + (&(&q * d) * &p1).opnorm()
        })
        .fold(0.0, f64::max);
    let diff = a - b;
    let residual_diff_onblock = (&p1 * &diff).opnorm() + (&diff * &p1).opnorm();
    Ok(FiniteSplit { p1, residual_defect_offblock, residual_diff_onblock })
}

/// Random balanced pair `W(x ⊕ u₁)V*`, `W(x ⊕ u₂)V*` with a Gaussian
/// strict contraction `x` of norm 0.8 on a random number of dimensions and
/// Haar unitaries elsewhere; deterministic in `seed`.
pub fn random_balanced_pair(dim: usize, seed: u64) -> Result<BalancedPair, BalancedError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.random_range(0..=dim);
    let mut sub = || rng.random::<u64>();
    let x = random_gaussian(k, k, sub());
    let x = if k == 0 { x } else { x.scale_real(0.8 / x.opnorm()) };
    let (u1, u2) = (random_unitary(dim - k, sub()), random_unitary(dim - k, sub()));
    let (w, v) = (random_unitary(dim, sub()), random_unitary(dim, sub()));
    let frame = |m: &CMatrix| &(&w * &x.direct_sum(m)) * &v.adjoint();
    BalancedPair::new(frame(&u1), frame(&u2), 1e-10)
}

/// Smooth monotone step from 0 at `x ≤ 0` to 1 at `x ≥ 1`, with vanishing
/// first and second derivatives at both ends.
pub fn smootherstep(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * x * (x * (6.0 * x - 15.0) + 10.0)
}

/// Circle functions `f`, `g` for the unitalization pair.
///
/// With `φ_δ = 2·asin(δ/2)` the angle at which `|z − 1| = δ` and
/// `φ₀ = φ_δ/2`: `g` rises from `g(1) = 0` to 1 on `|arg z| ≤ φ₀` and is 1
/// beyond; `f = e^{ih}` with `h = 0` on `|arg z| ≤ φ₀`, `h = arg z` for
/// `|arg z| ≥ 2φ₀` and a smooth blend between, so `|f(z) − z| < δ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitalizationFunctions {
    pub delta: f64,
    flat: f64,
}

impl UnitalizationFunctions {
    pub fn new(delta: f64) -> Result<Self, BalancedError> {
        if !(delta > 0.0 && delta < 1.0 / 3.0) {
            return Err(BalancedError::Delta(delta));
        }
        Ok(UnitalizationFunctions { delta, flat: (delta / 2.0).asin() })
    }

    /// Half-width of the arc on which `f = 1` and `g < 1`.
    pub fn flat_angle(&self) -> f64 {
        self.flat
    }

    pub fn f(&self, z: C64) -> C64 {
        let phi = z.arg();
        let blend = 1.0 - smootherstep(phi.abs() / self.flat - 1.0);
        cis(phi * (1.0 - blend))
    }

    pub fn g(&self, z: C64) -> C64 {
        c(smootherstep(z.arg().abs() / self.flat), 0.0)
    }
}

/// `(f(u)g(u), g(u))` for a unitary `u`.
pub fn unitalization_pair(u: &CMatrix, delta: f64) -> Result<BalancedPair, BalancedError> {
    let fns = UnitalizationFunctions::new(delta)?;
    let fg = func_calc_unitary(u, |z| fns.f(z) * fns.g(z))?;
    let g = func_calc_unitary(u, |z| fns.g(z))?;
    BalancedPair::new(fg, g, 1e-8)
}
