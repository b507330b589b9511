//! Matrix loops on the circle, balanced loop pairs, winding numbers and the
//! topological index of a balanced symbol pair.
//!
//! Loops are sampled at `t_k = (π/2)·k/N`, `k = 0…N−1`, on `[0, π/2]` with
//! the endpoints glued; sample 0 stands for both ends. The Fourier angle is
//! `θ = 4t`.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::balanced::{canonical_unitary, check_balanced, matrix_from_json, matrix_to_json, smootherstep, BalancedError};
use crate::numkern::{c, cis, rotation, CMatrix, NumError, C64};

/// Largest sample-to-sample jump `‖X(t_{k+1}) − X(t_k)‖` accepted by
/// default.
pub const DEFAULT_CONTINUITY_BUDGET: f64 = 0.5;

/// Required distance of the rounded winding sum from an integer.
pub const WINDING_RESIDUE_LIMIT: f64 = 0.1;

/// Parameter-domain tag stored in loop JSON.
pub const PARAM_TAG: &str = "glued-0-pi/2";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LoopError {
    #[error(transparent)]
    Num(#[from] NumError),
    #[error(transparent)]
    Balanced(#[from] BalancedError),
    #[error("loop needs at least 2 samples, got {0}")]
    Grid(usize),
    #[error("sample {index} has shape {found:?}, expected {expected:?}")]
    SampleShape { index: usize, found: (usize, usize), expected: (usize, usize) },
    #[error("loops differ in grid or dimension: {0:?} vs {1:?}")]
    Mismatch((usize, usize), (usize, usize)),
    #[error("jump {jump:.3e} between samples {index} and {next} exceeds the continuity budget {budget:.3e}")]
    Discontinuous { index: usize, next: usize, jump: f64, budget: f64 },
    #[error("modulus {modulus:.3e} at sample {index} is below {min:.3e}")]
    SmallModulus { index: usize, modulus: f64, min: f64 },
    #[error("phase jump {jump:.3} at sample {index} is at least π; grid too coarse")]
    PhaseJump { index: usize, jump: f64 },
    #[error("winding sum {sum:.4} is {residue:.3} away from an integer")]
    WindingResidue { sum: f64, residue: f64 },
    #[error("pair not balanced at sample {index}: residual {residual:.3e} > {tol:.1e}")]
    NotBalancedAt { index: usize, residual: f64, tol: f64 },
    #[error("{name} = {value} at t = {t}, must be {need}")]
    Constraint { name: &'static str, t: f64, value: String, need: &'static str },
    #[error("canonical unitary defect {defect:.3e} at sample {index} exceeds {bound:.3e}")]
    CanonicalNotUnitary { index: usize, defect: f64, bound: f64 },
    #[error("unknown parameter domain `{0}`")]
    Param(String),
}

/// Parameter of sample `k` on a grid of `n`.
pub fn param(k: usize, n: usize) -> f64 {
    FRAC_PI_2 * k as f64 / n as f64
}

/// Uniformly sampled `d×d` matrix function on the glued interval.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixLoop {
    dim: usize,
    samples: Vec<CMatrix>,
}

impl MatrixLoop {
    pub fn new(samples: Vec<CMatrix>) -> Result<Self, LoopError> {
        if samples.len() < 2 {
            return Err(LoopError::Grid(samples.len()));
        }
        let dim = samples[0].rows();
        for (index, s) in samples.iter().enumerate() {
            if s.shape() != (dim, dim) {
                return Err(LoopError::SampleShape { index, found: s.shape(), expected: (dim, dim) });
            }
        }
        Ok(MatrixLoop { dim, samples })
    }

    /// Samples `f(t_k)`.
    pub fn from_fn(grid: usize, f: impl Fn(f64) -> CMatrix + Sync) -> Result<Self, LoopError> {
        let samples = (0..grid).into_par_iter().map(|k| f(param(k, grid))).collect();
        Self::new(samples)
    }

    /// Constant loop.
    pub fn constant(grid: usize, x: &CMatrix) -> Result<Self, LoopError> {
        Self::new(vec![x.clone(); grid])
    }

    pub fn grid(&self) -> usize {
        self.samples.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn samples(&self) -> &[CMatrix] {
        &self.samples
    }

    pub fn sample(&self, k: usize) -> &CMatrix {
        &self.samples[k]
    }

    pub fn params(&self) -> Vec<f64> {
        (0..self.grid()).map(|k| param(k, self.grid())).collect()
    }

    /// Largest jump between cyclically consecutive samples, and where.
    pub fn max_jump(&self) -> (usize, f64) {
        let n = self.grid();
        (0..n)
            .map(|k| (k, self.samples[(k + 1) % n].dist(&self.samples[k])))
            .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc })
    }

    pub fn check_continuity(&self, budget: f64) -> Result<(), LoopError> {
        let (index, jump) = self.max_jump();
        if jump > budget {
            return Err(LoopError::Discontinuous { index, next: (index + 1) % self.grid(), jump, budget });
        }
        Ok(())
    }

    /// Pointwise map.
    pub fn map(&self, f: impl Fn(&CMatrix) -> CMatrix + Sync + Send) -> MatrixLoop {
        MatrixLoop { dim: self.dim, samples: self.samples.par_iter().map(&f).collect() }
    }

    pub fn adjoint(&self) -> MatrixLoop {
        self.map(CMatrix::adjoint)
    }

    pub fn direct_sum(&self, o: &MatrixLoop) -> Result<MatrixLoop, LoopError> {
        if self.grid() != o.grid() {
            return Err(LoopError::Mismatch((self.grid(), self.dim), (o.grid(), o.dim)));
        }
        MatrixLoop::new(self.samples.iter().zip(&o.samples).map(|(x, y)| x.direct_sum(y)).collect())
    }

    /// Pointwise determinants.
    pub fn det(&self) -> Vec<C64> {
        self.samples.iter().map(CMatrix::det).collect()
    }

    pub fn to_json(&self) -> LoopJson {
        LoopJson {
            grid: self.grid(),
            dim: self.dim,
            param: PARAM_TAG.into(),
            samples: self.samples.iter().map(matrix_to_json).collect(),
        }
    }
}

/// Serialized loop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopJson {
    pub grid: usize,
    pub dim: usize,
    pub param: String,
    pub samples: Vec<Vec<Vec<[f64; 2]>>>,
}

impl LoopJson {
    pub fn decode(&self) -> Result<MatrixLoop, LoopError> {
        if self.param != PARAM_TAG {
            return Err(LoopError::Param(self.param.clone()));
        }
        let samples =
            self.samples.iter().map(|s| matrix_from_json(s)).collect::<Result<Vec<_>, NumError>>()?;
        if samples.len() != self.grid {
            return Err(LoopError::Grid(samples.len()));
        }
        let l = MatrixLoop::new(samples)?;
        if l.dim() != self.dim {
            return Err(LoopError::SampleShape { index: 0, found: (l.dim(), l.dim()), expected: (self.dim, self.dim) });
        }
        Ok(l)
    }
}

/// Two loops balanced at every sample.
#[derive(Clone, Debug, PartialEq)]
pub struct LoopPair {
    sigma1: MatrixLoop,
    sigma2: MatrixLoop,
    tol: f64,
}

impl LoopPair {
    /// Validates continuity against the default budget and pointwise
    /// balance within `tol`.
    pub fn new(sigma1: MatrixLoop, sigma2: MatrixLoop, tol: f64) -> Result<Self, LoopError> {
        Self::with_budget(sigma1, sigma2, tol, DEFAULT_CONTINUITY_BUDGET)
    }

    pub fn with_budget(sigma1: MatrixLoop, sigma2: MatrixLoop, tol: f64, budget: f64) -> Result<Self, LoopError> {
        if sigma1.grid() != sigma2.grid() || sigma1.dim() != sigma2.dim() {
            return Err(LoopError::Mismatch((sigma1.grid(), sigma1.dim()), (sigma2.grid(), sigma2.dim())));
        }
        sigma1.check_continuity(budget)?;
        sigma2.check_continuity(budget)?;
        let pair = LoopPair { sigma1, sigma2, tol };
        let (index, residual) = pair.max_residual()?;
        if residual > tol {
            return Err(LoopError::NotBalancedAt { index, residual, tol });
        }
        Ok(pair)
    }

    /// The pair `(σ, σ)`.
    pub fn diagonal(sigma: MatrixLoop, tol: f64) -> Result<Self, LoopError> {
        Self::new(sigma.clone(), sigma, tol)
    }

    /// Worst pointwise balance residual (contraction excess or relation).
    pub fn max_residual(&self) -> Result<(usize, f64), LoopError> {
        let res: Vec<f64> = (0..self.grid())
            .into_par_iter()
            .map(|k| {
                let r = check_balanced(self.sigma1.sample(k), self.sigma2.sample(k), self.tol)?;
                Ok(r.max_rel1().max(r.norm_a - 1.0).max(r.norm_b - 1.0).max(0.0))
            })
            .collect::<Result<_, BalancedError>>()?;
        Ok(res.into_iter().enumerate().fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc }))
    }

    pub fn sigma1(&self) -> &MatrixLoop {
        &self.sigma1
    }

    pub fn sigma2(&self) -> &MatrixLoop {
        &self.sigma2
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn grid(&self) -> usize {
        self.sigma1.grid()
    }

    pub fn dim(&self) -> usize {
        self.sigma1.dim()
    }

    pub fn swapped(&self) -> LoopPair {
        LoopPair { sigma1: self.sigma2.clone(), sigma2: self.sigma1.clone(), tol: self.tol }
    }

    pub fn direct_sum(&self, o: &LoopPair) -> Result<LoopPair, LoopError> {
        Ok(LoopPair {
            sigma1: self.sigma1.direct_sum(&o.sigma1)?,
            sigma2: self.sigma2.direct_sum(&o.sigma2)?,
            tol: self.tol.max(o.tol),
        })
    }

    /// Pointwise canonical unitary `1 + σ₂*(σ₁ − σ₂)`.
    pub fn canonical_loop(&self) -> MatrixLoop {
        let samples = (0..self.grid())
            .into_par_iter()
            .map(|k| canonical_unitary(self.sigma1.sample(k), self.sigma2.sample(k)))
            .collect();
        MatrixLoop { dim: self.dim(), samples }
    }

    pub fn to_json(&self) -> LoopPairJson {
        LoopPairJson { sigma1: self.sigma1.to_json(), sigma2: self.sigma2.to_json(), tol: self.tol }
    }

    /// CSV rows `t, |det c|, arg det c` for the canonical unitary loop.
    pub fn det_c_csv(&self) -> String {
        let mut out = String::from("t,abs_det_c,arg_det_c\n");
        for (k, d) in self.canonical_loop().det().into_iter().enumerate() {
            out.push_str(&format!("{:.12},{:.12},{:.12}\n", param(k, self.grid()), d.norm(), d.arg()));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopPairJson {
    pub sigma1: LoopJson,
    pub sigma2: LoopJson,
    pub tol: f64,
}

impl LoopPairJson {
    pub fn decode(&self) -> Result<LoopPair, LoopError> {
        LoopPair::new(self.sigma1.decode()?, self.sigma2.decode()?, self.tol)
    }
}

/// Balanced loop pairs over the two cotangent directions of the circle.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolPair {
    plus: LoopPair,
    minus: LoopPair,
}

impl SymbolPair {
    pub fn new(plus: LoopPair, minus: LoopPair) -> Result<Self, LoopError> {
        if plus.dim() != minus.dim() {
            return Err(LoopError::Mismatch((plus.grid(), plus.dim()), (minus.grid(), minus.dim())));
        }
        Ok(SymbolPair { plus, minus })
    }

    /// `plus` paired with the constant pair `(1, 1)` on the minus direction.
    pub fn with_trivial_minus(plus: LoopPair) -> Result<Self, LoopError> {
        let one = MatrixLoop::constant(plus.grid(), &CMatrix::identity(plus.dim()))?;
        let minus = LoopPair::diagonal(one, plus.tol())?;
        Self::new(plus, minus)
    }

    pub fn plus(&self) -> &LoopPair {
        &self.plus
    }

    pub fn minus(&self) -> &LoopPair {
        &self.minus
    }

    pub fn dim(&self) -> usize {
        self.plus.dim()
    }

    /// `(σ₂, σ₁)` on both directions.
    pub fn swapped(&self) -> SymbolPair {
        SymbolPair { plus: self.plus.swapped(), minus: self.minus.swapped() }
    }

    pub fn direct_sum(&self, o: &SymbolPair) -> Result<SymbolPair, LoopError> {
        SymbolPair::new(self.plus.direct_sum(&o.plus)?, self.minus.direct_sum(&o.minus)?)
    }

    pub fn to_json(&self) -> SymbolPairJson {
        SymbolPairJson { plus: self.plus.to_json(), minus: self.minus.to_json() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolPairJson {
    pub plus: LoopPairJson,
    pub minus: LoopPairJson,
}

impl SymbolPairJson {
    pub fn decode(&self) -> Result<SymbolPair, LoopError> {
        SymbolPair::new(self.plus.decode()?, self.minus.decode()?)
    }
}

/// Scalar loop used for the entries `α`, `β`, `γ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalarSpec {
    /// `e^{4pit}`: `p` turns around the circle.
    Turns(i64),
    Constant([f64; 2]),
    /// `1 − depth·sin(2t)`.
    SineDip(f64),
}

impl ScalarSpec {
    /// The default interior contraction `1 − sin(2t)/2`.
    pub fn default_gamma() -> Self {
        ScalarSpec::SineDip(0.5)
    }

    pub fn eval(&self, t: f64) -> C64 {
        match self {
            ScalarSpec::Turns(p) => cis(4.0 * *p as f64 * t),
            ScalarSpec::Constant(z) => c(z[0], z[1]),
            ScalarSpec::SineDip(depth) => c(1.0 - depth * (2.0 * t).sin(), 0.0),
        }
    }
}

fn check_value(name: &'static str, t: f64, z: C64, ok: bool, need: &'static str) -> Result<(), LoopError> {
    if ok {
        Ok(())
    } else {
        Err(LoopError::Constraint { name, t, value: format!("{:.6}{:+.6}i", z.re, z.im), need })
    }
}

/// `(U(t)*diag(α, γ)U(t), U(t)*diag(β, γ)U(t))` with `U(t)` the rotation by
/// `t`.
pub fn example_4_1(
    alpha: impl Fn(f64) -> C64 + Sync,
    beta: impl Fn(f64) -> C64 + Sync,
    gamma: impl Fn(f64) -> C64 + Sync,
    grid: usize,
) -> Result<LoopPair, LoopError> {
    const EPS: f64 = 1e-12;
    let one = c(1.0, 0.0);
    for (name, f) in [("alpha", &alpha as &(dyn Fn(f64) -> C64 + Sync)), ("beta", &beta), ("gamma", &gamma)] {
        for t in [0.0, FRAC_PI_2] {
            let z = f(t);
            check_value(name, t, z, (z - one).norm() <= EPS, "1 at both ends")?;
        }
    }
    for k in 0..grid {
        let t = param(k, grid);
        let (a, b, g) = (alpha(t), beta(t), gamma(t));
        check_value("alpha", t, a, (a.norm() - 1.0).abs() <= EPS, "unimodular")?;
        check_value("beta", t, b, (b.norm() - 1.0).abs() <= EPS, "unimodular")?;
        if k > 0 {
            check_value("gamma", t, g, g.norm() < 1.0, "of modulus below 1 inside the interval")?;
        }
    }
    let conj = |x: C64, y: C64, t: f64| {
        let u = rotation(t, 1);
        &(&u.adjoint() * &CMatrix::diag(&[x, y])) * &u
    };
    let sigma1 = MatrixLoop::from_fn(grid, |t| conj(alpha(t), gamma(t), t))?;
    let sigma2 = MatrixLoop::from_fn(grid, |t| conj(beta(t), gamma(t), t))?;
    LoopPair::new(sigma1, sigma2, 1e-10)
}

/// [`example_4_1`] from scalar specs.
pub fn example_4_1_spec(alpha: &ScalarSpec, beta: &ScalarSpec, gamma: &ScalarSpec, grid: usize) -> Result<LoopPair, LoopError> {
    example_4_1(|t| alpha.eval(t), |t| beta.eval(t), |t| gamma.eval(t), grid)
}

/// The flagship family: `α = e^{4pit}`, `β = e^{4qit}`, `γ = 1 − sin(2t)/2`
/// on the plus direction and `(1, 1)` on the minus direction.
pub fn flagship_symbol(p: i64, q: i64, grid: usize) -> Result<SymbolPair, LoopError> {
    let plus = example_4_1_spec(&ScalarSpec::Turns(p), &ScalarSpec::Turns(q), &ScalarSpec::default_gamma(), grid)?;
    SymbolPair::with_trivial_minus(plus)
}

/// The sub-bundle projection `U(t)*diag(1, 0)U(t)` carrying `α − β`.
pub fn example_4_1_subbundle(grid: usize) -> Result<MatrixLoop, LoopError> {
    MatrixLoop::from_fn(grid, |t| {
        let u = rotation(t, 1);
        &(&u.adjoint() * &CMatrix::real_diag(&[1.0, 0.0])) * &u
    })
}

/// Winding number with its rounding residue.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Winding {
    pub value: i64,
    pub residue: f64,
}

/// Winding number of a sampled closed scalar curve around 0.
pub fn winding(samples: &[C64], min_modulus: f64) -> Result<Winding, LoopError> {
    if samples.len() < 2 {
        return Err(LoopError::Grid(samples.len()));
    }
    for (index, z) in samples.iter().enumerate() {
        if z.norm() < min_modulus {
            return Err(LoopError::SmallModulus { index, modulus: z.norm(), min: min_modulus });
        }
    }
    let n = samples.len();
    let mut sum = 0.0;
    for k in 0..n {
        let step = (samples[(k + 1) % n] / samples[k]).arg();
        if step.abs() >= PI * (1.0 - 1e-12) {
            return Err(LoopError::PhaseJump { index: k, jump: step });
        }
        sum += step;
    }
    let turns = sum / (2.0 * PI);
    let value = turns.round();
    let residue = (turns - value).abs();
    if residue >= WINDING_RESIDUE_LIMIT {
        return Err(LoopError::WindingResidue { sum: turns, residue });
    }
    Ok(Winding { value: value as i64, residue })
}

/// Topological index together with the windings it is built from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TopoIndex {
    pub index: i64,
    pub wind_plus: i64,
    pub wind_minus: i64,
    pub max_unitarity_defect: f64,
}

/// Winding of `det(1 + σ₂*(σ₁ − σ₂))` along a loop pair, after certifying
/// the canonical unitary pointwise within `50·tol`.
pub fn canonical_winding(pair: &LoopPair) -> Result<(Winding, f64), LoopError> {
    let cl = pair.canonical_loop();
    let bound = 50.0 * pair.tol();
    let mut worst = 0.0f64;
    for (index, x) in cl.samples().iter().enumerate() {
        let defect = x.unitarity_defect();
        if defect > bound {
            return Err(LoopError::CanonicalNotUnitary { index, defect, bound });
        }
        worst = worst.max(defect);
    }
    Ok((winding(&cl.det(), 0.5)?, worst))
}

/// Orientation of the index: `wind(det c₋) − wind(det c₊)`, so that the
/// Toeplitz index `−wind` on the Hardy half matches the analytic side.
pub const TOPO_SIGN: i64 = 1;

/// `wind(det c₋) − wind(det c₊)` with `c± = 1 + σ₂*(σ₁ − σ₂)` on each
/// direction.
pub fn topo_index(sp: &SymbolPair) -> Result<TopoIndex, LoopError> {
    let (wp, dp) = canonical_winding(sp.plus())?;
    let (wm, dm) = canonical_winding(sp.minus())?;
    Ok(TopoIndex {
        index: TOPO_SIGN * (wm.value - wp.value),
        wind_plus: wp.value,
        wind_minus: wm.value,
        max_unitarity_defect: dp.max(dm),
    })
}

/// Scalar pair `(h·e^{iχ}, h)` from a profile `h ∈ [0, 1]` and a phase `χ`.
/// It is balanced when `χ ∈ 2πℤ` wherever `0 < h < 1`.
pub fn scalar_profile_pair(
    grid: usize,
    h: impl Fn(f64) -> f64 + Sync,
    chi: impl Fn(f64) -> f64 + Sync,
) -> Result<LoopPair, LoopError> {
    let sigma1 = MatrixLoop::from_fn(grid, |t| CMatrix::scalar(cis(chi(t)) * h(t)))?;
    let sigma2 = MatrixLoop::from_fn(grid, |t| CMatrix::scalar(c(h(t), 0.0)))?;
    LoopPair::new(sigma1, sigma2, 1e-12)
}

/// A balanced pair vanishing at `t = 0`: `h` rises from 0 to 1 on
/// `[0, π/8]`, stays 1 until `3π/8` and falls back; the phase makes one
/// turn while `h = 1`.
pub fn vanishing_point_pair(grid: usize) -> Result<LoopPair, LoopError> {
    let q = FRAC_PI_2 / 4.0;
    let h = move |t: f64| {
        if t <= q {
            smootherstep(t / q)
        } else if t >= 3.0 * q {
            smootherstep((FRAC_PI_2 - t) / q)
        } else {
            1.0
        }
    };
    let chi = move |t: f64| 2.0 * PI * smootherstep((t - q) / (2.0 * q));
    scalar_profile_pair(grid, h, chi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn param_grid() {
        assert_eq!(param(0, 8), 0.0);
        assert!((param(4, 8) - FRAC_PI_2 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn subbundle_is_projection_loop() {
        let p = example_4_1_subbundle(16).unwrap();
        for s in p.samples() {
            assert!((&(s * s) - s).opnorm() < 1e-14);
        }
    }
}
