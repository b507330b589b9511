//! Truncated order-zero operators on the circle built from symbol pairs,
//! balance modulo tails, splitting projections and the block estimates that
//! precede the relative index.
//!
//! The truncated space has Fourier modes `n = −N…N` times `d` vector
//! components, with basis index `(n + N)·d + comp`. Mode `n = 0` belongs to
//! the Hardy half. Quantized operators never couple the halves, so a
//! [`TruncOp`] stores its anti-Hardy block (modes `−N…−1`) and its Hardy
//! block (modes `0…N`) separately.

use std::fmt;

use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::balanced::{relation_matrices, smootherstep, REL1_NAMES, REL2_NAMES};
use crate::loops::{LoopError, LoopPair, MatrixLoop, SymbolPair};
use crate::numkern::{nearest_projection, CMatrix, NumError, C64, DEFAULT_PROJECTION_GAP};

/// Largest symbol roundtrip deviation accepted by [`quantize`].
pub const ROUNDTRIP_TOL: f64 = 0.05;

/// Largest entry allowed in the coupling blocks of a decoded operator.
pub const COUPLING_TOL: f64 = 1e-12;

/// Default tolerance of the balance-modulo-tails verdict.
pub const KBALANCE_TOL: f64 = 0.05;

/// Default width parameter of the smooth step.
pub const DEFAULT_ETA: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OpError {
    #[error(transparent)]
    Num(#[from] NumError),
    #[error(transparent)]
    Loop(#[from] LoopError),
    #[error("need at least 4 modes, got {0}")]
    Modes(usize),
    #[error("operators differ in shape: ({0}, {1}) vs ({2}, {3})")]
    Shape(usize, usize, usize, usize),
    #[error("symbol readback of the {half} component deviates by {deviation:.3e} > {tol}; loop undersampled for {modes} modes")]
    Undersampled { half: Half, deviation: f64, tol: f64, modes: usize },
    #[error("tail cutoff {cutoff} must be below the mode count {modes}")]
    Cutoff { cutoff: usize, modes: usize },
    #[error("tail window above cutoff {cutoff} is empty for {modes} modes")]
    EmptyWindow { cutoff: usize, modes: usize },
    #[error("operator couples the halves: entry of size {0:.3e}")]
    Coupled(f64),
    #[error("matrix of size {found} does not match {modes} modes of dimension {dim}")]
    MatrixSize { found: usize, modes: usize, dim: usize },
    #[error("no spectral gap of width {min_gap} between {lo} and {hi}")]
    NoGap { lo: f64, hi: f64, min_gap: f64 },
}

/// One of the two halves of the truncated space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Half {
    Minus,
    Plus,
}

impl Half {
    pub const BOTH: [Half; 2] = [Half::Minus, Half::Plus];

    /// Modes of this half for `n` total modes per side.
    pub fn modes(self, n: usize) -> Vec<i64> {
        let n = n as i64;
        match self {
            Half::Minus => (-n..0).collect(),
            Half::Plus => (0..=n).collect(),
        }
    }

    fn index(self) -> usize {
        match self {
            Half::Minus => 0,
            Half::Plus => 1,
        }
    }
}

impl fmt::Display for Half {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Half::Minus => "minus",
            Half::Plus => "plus",
        })
    }
}

/// Width of the band of modes next to `|n| = N` that carries truncation
/// artifacts.
pub fn edge_width(modes: usize) -> usize {
    modes / 4
}

/// Mode of each basis vector of a half, repeated over the components.
pub fn half_modes(half: Half, modes: usize, dim: usize) -> Vec<i64> {
    half.modes(modes).into_iter().flat_map(|n| std::iter::repeat_n(n, dim)).collect()
}

/// Indicator of the truncation edge `|n| > N − N/4` on a half.
pub fn edge_indicator(half: Half, modes: usize, dim: usize) -> Vec<f64> {
    let limit = (modes - edge_width(modes)) as i64;
    half_modes(half, modes, dim).into_iter().map(|n| if n.abs() > limit { 1.0 } else { 0.0 }).collect()
}

/// Truncated operator on `d(2N + 1)` dimensions that commutes with the
/// Hardy projection.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncOp {
    modes: usize,
    dim: usize,
    blocks: [CMatrix; 2],
}

impl TruncOp {
    pub fn from_halves(modes: usize, dim: usize, minus: CMatrix, plus: CMatrix) -> Result<Self, OpError> {
        let (m, p) = (modes * dim, (modes + 1) * dim);
        if minus.shape() != (m, m) || plus.shape() != (p, p) {
            return Err(OpError::Shape(minus.rows(), minus.cols(), plus.rows(), plus.cols()));
        }
        Ok(TruncOp { modes, dim, blocks: [minus, plus] })
    }

    pub fn identity(modes: usize, dim: usize) -> Self {
        TruncOp {
            modes,
            dim,
            blocks: [CMatrix::identity(modes * dim), CMatrix::identity((modes + 1) * dim)],
        }
    }

    pub fn zeros(modes: usize, dim: usize) -> Self {
        let (m, p) = (modes * dim, (modes + 1) * dim);
        TruncOp { modes, dim, blocks: [CMatrix::zeros(m, m), CMatrix::zeros(p, p)] }
    }

    /// Splits a full matrix, rejecting coupling between the halves.
    pub fn from_matrix(modes: usize, dim: usize, m: &CMatrix) -> Result<Self, OpError> {
        let size = (2 * modes + 1) * dim;
        if m.shape() != (size, size) {
            return Err(OpError::MatrixSize { found: m.rows(), modes, dim });
        }
        let cut = modes * dim;
        let lo: Vec<usize> = (0..cut).collect();
        let hi: Vec<usize> = (cut..size).collect();
        let coupling = m.select(&lo, &hi).max_abs().max(m.select(&hi, &lo).max_abs());
        if coupling > COUPLING_TOL {
            return Err(OpError::Coupled(coupling));
        }
        Self::from_halves(modes, dim, m.select(&lo, &lo), m.select(&hi, &hi))
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn size(&self) -> usize {
        (2 * self.modes + 1) * self.dim
    }

    pub fn half(&self, h: Half) -> &CMatrix {
        &self.blocks[h.index()]
    }

    /// The full matrix.
    pub fn matrix(&self) -> CMatrix {
        self.blocks[0].direct_sum(&self.blocks[1])
    }

    /// Applies `f` to each half.
    pub fn map(&self, f: impl Fn(Half, &CMatrix) -> CMatrix + Sync) -> TruncOp {
        let blocks = [f(Half::Minus, &self.blocks[0]), f(Half::Plus, &self.blocks[1])];
        TruncOp { modes: self.modes, dim: self.dim, blocks }
    }

    fn zip(&self, o: &TruncOp, f: impl Fn(&CMatrix, &CMatrix) -> CMatrix) -> Result<TruncOp, OpError> {
        self.check_same(o)?;
        Ok(TruncOp {
            modes: self.modes,
            dim: self.dim,
            blocks: [f(&self.blocks[0], &o.blocks[0]), f(&self.blocks[1], &o.blocks[1])],
        })
    }

    pub fn check_same(&self, o: &TruncOp) -> Result<(), OpError> {
        if (self.modes, self.dim) != (o.modes, o.dim) {
            return Err(OpError::Shape(self.modes, self.dim, o.modes, o.dim));
        }
        Ok(())
    }

    pub fn adjoint(&self) -> TruncOp {
        self.map(|_, m| m.adjoint())
    }

    pub fn try_add(&self, o: &TruncOp) -> Result<TruncOp, OpError> {
        self.zip(o, |x, y| x + y)
    }

    pub fn try_sub(&self, o: &TruncOp) -> Result<TruncOp, OpError> {
        self.zip(o, |x, y| x - y)
    }

    pub fn try_mul(&self, o: &TruncOp) -> Result<TruncOp, OpError> {
        self.zip(o, |x, y| x * y)
    }

    pub fn one_minus(&self) -> TruncOp {
        self.map(|_, m| m.one_minus())
    }

    pub fn scale(&self, z: C64) -> TruncOp {
        self.map(|_, m| m.scale(z))
    }

    pub fn opnorm(&self) -> f64 {
        self.blocks.iter().map(CMatrix::opnorm).fold(0.0, f64::max)
    }

    pub fn dist(&self, o: &TruncOp) -> Result<f64, OpError> {
        Ok(self.try_sub(o)?.opnorm())
    }

    pub fn to_json(&self) -> TruncOpJson {
        TruncOpJson {
            modes: self.modes,
            dim: self.dim,
            matrix: crate::balanced::matrix_to_json(&self.matrix()),
        }
    }
}

/// Serialized operator: the full matrix in basis order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncOpJson {
    pub modes: usize,
    pub dim: usize,
    pub matrix: Vec<Vec<[f64; 2]>>,
}

impl TruncOpJson {
    pub fn decode(&self) -> Result<TruncOp, OpError> {
        let m = crate::balanced::matrix_from_json(&self.matrix)?;
        TruncOp::from_matrix(self.modes, self.dim, &m)
    }
}

/// Fourier coefficients of a loop in the angle `θ = 4t`, indexed by
/// `j = −K…K` with `K < grid/2`.
#[derive(Clone, Debug)]
pub struct FourierSymbol {
    dim: usize,
    band: usize,
    coeffs: Vec<CMatrix>,
}

impl FourierSymbol {
    pub fn of(l: &MatrixLoop) -> Self {
        let g = l.grid();
        let d = l.dim();
        let band = (g - 1) / 2;
        let fft = FftPlanner::<f64>::new().plan_fft_forward(g);
        let mut coeffs = vec![CMatrix::zeros(d, d); 2 * band + 1];
        for i in 0..d {
            for k in 0..d {
                let mut buf: Vec<C64> = l.samples().iter().map(|s| s.get(i, k)).collect();
                fft.process(&mut buf);
                for j in -(band as i64)..=(band as i64) {
                    let z = buf[j.rem_euclid(g as i64) as usize] / g as f64;
                    coeffs[(j + band as i64) as usize].set(i, k, z);
                }
            }
        }
        FourierSymbol { dim: d, band, coeffs }
    }

    /// Coefficient `σ̂_j`, zero outside the band.
    pub fn coeff(&self, j: i64) -> Option<&CMatrix> {
        let b = self.band as i64;
        (j.abs() <= b).then(|| &self.coeffs[(j + b) as usize])
    }

    /// Compression of the Laurent operator to the given modes.
    pub fn compress(&self, modes: &[i64]) -> CMatrix {
        let d = self.dim;
        let mut out = CMatrix::zeros(modes.len() * d, modes.len() * d);
        for (r, &m) in modes.iter().enumerate() {
            for (s, &n) in modes.iter().enumerate() {
                if let Some(x) = self.coeff(m - n) {
                    for i in 0..d {
                        for k in 0..d {
                            out.set(r * d + i, s * d + k, x.get(i, k));
                        }
                    }
                }
            }
        }
        out
    }
}

/// Reads the symbol back from the column of a central mode and returns the
/// largest deviation from the loop samples.
fn symbol_readback(op: &CMatrix, half: Half, modes: usize, l: &MatrixLoop) -> f64 {
    let d = l.dim();
    let ms = half.modes(modes);
    let centre = ms.len() / 2;
    let band = (modes / 2).saturating_sub(1) as i64;
    let g = l.grid();
    (0..g)
        .into_par_iter()
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / g as f64;
            let mut est = CMatrix::zeros(d, d);
            for j in -band..=band {
                let r = centre as i64 + j;
                if r < 0 || r >= ms.len() as i64 {
                    continue;
                }
                let w = crate::numkern::cis(j as f64 * theta);
                for i in 0..d {
                    for q in 0..d {
                        let z = est.get(i, q) + op.get(r as usize * d + i, centre * d + q) * w;
                        est.set(i, q, z);
                    }
                }
            }
            est.dist(l.sample(k))
        })
        .reduce(|| 0.0, f64::max)
}

/// `P₊T(σ₊)P₊ + P₋T(σ₋)P₋` for one symbol with its two components.
pub fn quantize_symbol(minus: &MatrixLoop, plus: &MatrixLoop, modes: usize) -> Result<TruncOp, OpError> {
    if modes < 4 {
        return Err(OpError::Modes(modes));
    }
    if minus.dim() != plus.dim() {
        return Err(OpError::Shape(minus.dim(), minus.dim(), plus.dim(), plus.dim()));
    }
    let halves: Vec<CMatrix> = [(Half::Minus, minus), (Half::Plus, plus)]
        .par_iter()
        .map(|(h, l)| FourierSymbol::of(l).compress(&h.modes(modes)))
        .collect();
    let [m, p]: [CMatrix; 2] = halves.try_into().expect("two halves");
    TruncOp::from_halves(modes, plus.dim(), m, p)
}

fn checked_quantize(minus: &MatrixLoop, plus: &MatrixLoop, modes: usize) -> Result<TruncOp, OpError> {
    let op = quantize_symbol(minus, plus, modes)?;
    for (h, l) in [(Half::Minus, minus), (Half::Plus, plus)] {
        let deviation = symbol_readback(op.half(h), h, modes, l);
        if deviation > ROUNDTRIP_TOL {
            return Err(OpError::Undersampled { half: h, deviation, tol: ROUNDTRIP_TOL, modes });
        }
    }
    Ok(op)
}

/// Quantizes both entries of a symbol pair on `N` modes per side, checking
/// that each component can be read back within [`ROUNDTRIP_TOL`].
pub fn quantize(sp: &SymbolPair, modes: usize) -> Result<(TruncOp, TruncOp), OpError> {
    let d1 = checked_quantize(sp.minus().sigma1(), sp.plus().sigma1(), modes)?;
    let d2 = checked_quantize(sp.minus().sigma2(), sp.plus().sigma2(), modes)?;
    Ok((d1, d2))
}

/// Clips singular values above 1 to 1.
pub fn clip_to_contraction(op: &TruncOp) -> Result<TruncOp, OpError> {
    let blocks: Vec<CMatrix> = Half::BOTH
        .par_iter()
        .map(|&h| {
            let m = op.half(h);
            if m.singular_values().first().is_none_or(|&s| s <= 1.0) {
                return Ok(m.clone());
            }
            let svd = m.svd()?;
            let s: Vec<f64> = svd.s.iter().map(|&x| x.min(1.0)).collect();
            Ok(&svd.u.scale_cols(&s) * &svd.v.adjoint())
        })
        .collect::<Result<_, NumError>>()?;
    let [m, p]: [CMatrix; 2] = blocks.try_into().expect("two halves");
    TruncOp::from_halves(op.modes(), op.dim(), m, p)
}

/// Cutoff `M` of the tail seminorm `‖X‖_M = ‖Q_M X Q_M‖`, where `Q_M`
/// projects onto the modes `M < |n| ≤ N − N/4`; the band next to `|n| = N`
/// is left out because it carries truncation artifacts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TailCutoff(pub usize);

impl TailCutoff {
    pub fn value(self) -> usize {
        self.0
    }

    pub fn doubled(self) -> TailCutoff {
        TailCutoff(2 * self.0)
    }

    /// Basis indices of the window on one half.
    pub fn window(self, half: Half, modes: usize, dim: usize) -> Result<Vec<usize>, OpError> {
        if self.0 >= modes {
            return Err(OpError::Cutoff { cutoff: self.0, modes });
        }
        let hi = (modes - edge_width(modes)) as i64;
        let idx: Vec<usize> = half_modes(half, modes, dim)
            .into_iter()
            .enumerate()
            .filter(|(_, n)| n.abs() > self.0 as i64 && n.abs() <= hi)
            .map(|(i, _)| i)
            .collect();
        if idx.is_empty() {
            return Err(OpError::EmptyWindow { cutoff: self.0, modes });
        }
        Ok(idx)
    }

    pub fn has_window(self, modes: usize) -> bool {
        self.0 < modes && self.0 < modes - edge_width(modes)
    }
}

/// `‖Q_M X Q_M‖`, the larger of the two halves.
pub fn tail_seminorm(x: &TruncOp, cut: TailCutoff) -> Result<f64, OpError> {
    let mut best = 0.0f64;
    for h in Half::BOTH {
        let w = cut.window(h, x.modes(), x.dim())?;
        best = best.max(x.half(h).select(&w, &w).opnorm());
    }
    Ok(best)
}

/// Named residual evaluated at one or more cutoffs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NamedSeries {
    pub name: String,
    pub values: Vec<f64>,
}

/// The twelve balance residuals in tail seminorm over a table of cutoffs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KBalanceReport {
    pub cutoffs: Vec<usize>,
    pub residuals: Vec<NamedSeries>,
    pub tol: f64,
    pub balanced: bool,
}

impl KBalanceReport {
    /// Largest residual at the largest cutoff.
    pub fn max_final(&self) -> f64 {
        self.residuals.iter().filter_map(|r| r.values.last().copied()).fold(0.0, f64::max)
    }

    /// Largest increase from one cutoff to the next.
    pub fn max_increase(&self) -> f64 {
        self.residuals
            .iter()
            .flat_map(|r| r.values.windows(2).map(|w| w[1] - w[0]))
            .fold(0.0, f64::max)
    }
}

fn relation_ops(a: &TruncOp, b: &TruncOp) -> Result<Vec<(String, TruncOp)>, OpError> {
    a.check_same(b)?;
    let per_half: Vec<([CMatrix; 4], [CMatrix; 8])> =
        Half::BOTH.par_iter().map(|&h| relation_matrices(a.half(h), b.half(h))).collect();
    let names = REL1_NAMES.iter().chain(REL2_NAMES.iter());
    let mut out = Vec::with_capacity(12);
    for (i, name) in names.enumerate() {
        let pick = |k: usize| if i < 4 { per_half[k].0[i].clone() } else { per_half[k].1[i - 4].clone() };
        out.push((name.to_string(), TruncOp::from_halves(a.modes(), a.dim(), pick(0), pick(1))?));
    }
    Ok(out)
}

/// Balance of `(A, B)` modulo tails: the twelve residuals at `M` and, when
/// its window is nonempty, at `2M`. Balanced iff every residual at the
/// largest cutoff is at most `tol`.
pub fn kbalance_report(a: &TruncOp, b: &TruncOp, cut: TailCutoff, tol: f64) -> Result<KBalanceReport, OpError> {
    cut.window(Half::Plus, a.modes(), a.dim())?;
    let mut cutoffs = vec![cut];
    if cut.doubled().has_window(a.modes()) {
        cutoffs.push(cut.doubled());
    }
    let residuals = relation_ops(a, b)?
        .into_par_iter()
        .map(|(name, x)| {
            let values = cutoffs.iter().map(|&m| tail_seminorm(&x, m)).collect::<Result<_, _>>()?;
            Ok(NamedSeries { name, values })
        })
        .collect::<Result<Vec<_>, OpError>>()?;
    let mut report = KBalanceReport { cutoffs: cutoffs.iter().map(|m| m.0).collect(), residuals, tol, balanced: false };
    report.balanced = report.max_final() <= tol;
    Ok(report)
}

/// Projection on the truncated space defining `H₁ = PH`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeSplit {
    p: TruncOp,
    label: String,
}

impl ModeSplit {
    /// Checks `P² = P = P*` within `1e−10`.
    pub fn new(p: TruncOp, label: impl Into<String>) -> Result<Self, OpError> {
        let split = ModeSplit { p, label: label.into() };
        let r = split.projection_residual()?;
        if r > 1e-10 {
            return Err(OpError::Num(NumError::NotSelfAdjoint(r)));
        }
        Ok(split)
    }

    pub fn projection(&self) -> &TruncOp {
        &self.p
    }

    pub fn complement(&self) -> TruncOp {
        self.p.one_minus()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Upper bound for `max(‖P² − P‖, ‖P − P*‖)` via the Frobenius norm.
    pub fn projection_residual(&self) -> Result<f64, OpError> {
        let frob = |x: &TruncOp| x.blocks.iter().map(CMatrix::frobenius).fold(0.0, f64::max);
        let sq = frob(&self.p.try_mul(&self.p)?.try_sub(&self.p)?);
        Ok(sq.max(frob(&self.p.try_sub(&self.p.adjoint())?)))
    }

    /// Rank of `P` on each half.
    pub fn ranks(&self) -> [usize; 2] {
        Half::BOTH.map(|h| self.p.half(h).trace().re.round() as usize)
    }

    /// Orthonormal basis of `H₁` within one half, as columns.
    pub fn basis(&self, h: Half) -> Result<CMatrix, OpError> {
        Ok(crate::numkern::range_basis(self.p.half(h))?)
    }

    /// True when `H₁` or `H₂` is zero.
    pub fn degenerate(&self) -> bool {
        let total: usize = self.ranks().iter().sum();
        total == 0 || total == self.p.size()
    }
}

/// Symbol whose quantization is rounded to the splitting projection.
#[derive(Clone, Debug, PartialEq)]
pub enum SplitSymbol {
    /// `φ(dd* + d*d)` with `d = σ₁ − σ₂`, where `φ` vanishes below `η²`
    /// and reaches 1 at `4η²`.
    Smooth { eta: f64 },
    /// A projection-valued symbol given per component.
    Explicit { minus: MatrixLoop, plus: MatrixLoop },
}

impl Default for SplitSymbol {
    fn default() -> Self {
        SplitSymbol::Smooth { eta: DEFAULT_ETA }
    }
}

/// How the quantized symbol is rounded to a projection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Rounding {
    /// Spectral cut at 1/2; no eigenvalue may lie within `gap` of it.
    Half { gap: f64 },
    /// Spectral cut in the middle of the widest eigenvalue gap inside
    /// `[lo, hi]`, which must be at least `min_gap` wide.
    WidestGap { lo: f64, hi: f64, min_gap: f64 },
}

impl Default for Rounding {
    fn default() -> Self {
        Rounding::Half { gap: DEFAULT_PROJECTION_GAP }
    }
}

impl Rounding {
    pub fn widest_gap() -> Self {
        Rounding::WidestGap { lo: 0.25, hi: 0.75, min_gap: 0.02 }
    }

    fn round(self, x: &CMatrix) -> Result<CMatrix, OpError> {
        match self {
            Rounding::Half { gap } => Ok(nearest_projection(x, gap)?),
            Rounding::WidestGap { lo, hi, min_gap } => {
                let e = x.herm_eigen()?;
                let mut pts: Vec<f64> = e.values.iter().copied().filter(|v| *v > lo && *v < hi).collect();
                pts.push(lo);
                pts.push(hi);
                pts.sort_by(f64::total_cmp);
                let (width, cut) = pts
                    .windows(2)
                    .map(|w| (w[1] - w[0], 0.5 * (w[0] + w[1])))
                    .fold((0.0, 0.5), |acc, x| if x.0 > acc.0 { x } else { acc });
                if width < min_gap {
                    return Err(OpError::NoGap { lo, hi, min_gap });
                }
                let keep: Vec<usize> = (0..e.values.len()).filter(|&i| e.values[i] > cut).collect();
                let v = e.vectors.columns(&keep);
                Ok(&v * &v.adjoint())
            }
        }
    }
}

/// The smooth step of [`SplitSymbol::Smooth`].
pub fn smooth_step(x: f64, eta: f64) -> f64 {
    smootherstep((x - eta * eta) / (3.0 * eta * eta))
}

fn smooth_split_loop(pair: &LoopPair, eta: f64) -> Result<MatrixLoop, OpError> {
    let samples = (0..pair.grid())
        .into_par_iter()
        .map(|k| {
            let d = pair.sigma1().sample(k) - pair.sigma2().sample(k);
            let h = &(&d * &d.adjoint()) + &(&d.adjoint() * &d);
            let e = h.herm_eigen()?;
            let w: Vec<f64> = e.values.iter().map(|&x| smooth_step(x, eta)).collect();
            Ok(&e.vectors.scale_cols(&w) * &e.vectors.adjoint())
        })
        .collect::<Result<Vec<_>, NumError>>()?;
    Ok(MatrixLoop::new(samples)?)
}

/// Quantizes the splitting symbol and rounds it to a projection.
pub fn splitting_projection(
    sp: &SymbolPair,
    modes: usize,
    symbol: &SplitSymbol,
    rounding: Rounding,
) -> Result<ModeSplit, OpError> {
    let (minus, plus, label) = match symbol {
        SplitSymbol::Smooth { eta } => (
            smooth_split_loop(sp.minus(), *eta)?,
            smooth_split_loop(sp.plus(), *eta)?,
            format!("smooth-step eta={eta}"),
        ),
        SplitSymbol::Explicit { minus, plus } => (minus.clone(), plus.clone(), "explicit".to_string()),
    };
    let x = quantize_symbol(&minus, &plus, modes)?;
    let blocks: Vec<CMatrix> = Half::BOTH
        .par_iter()
        .map(|&h| {
            let m = x.half(h);
            if m.max_abs() == 0.0 {
                Ok(m.clone())
            } else {
                rounding.round(&m.hermitian_part())
            }
        })
        .collect::<Result<_, OpError>>()?;
    let [m, p]: [CMatrix; 2] = blocks.try_into().expect("two halves");
    ModeSplit::new(TruncOp::from_halves(modes, sp.dim(), m, p)?, label)
}

/// Adds to `H₁` the finite-dimensional part of `H₂` where `A − B` or its
/// adjoint is at least `ε/3`, so that `‖(1 − P)(A − B)‖` and
/// `‖(1 − P)(A − B)*‖` drop below `ε/3`.
pub fn refine_split(split: &ModeSplit, a: &TruncOp, b: &TruncOp, eps: f64) -> Result<ModeSplit, OpError> {
    a.check_same(b)?;
    let q = split.complement();
    let blocks: Vec<CMatrix> = Half::BOTH
        .par_iter()
        .map(|&h| {
            let d = a.half(h) - b.half(h);
            let p = split.projection().half(h);
            if d.max_abs() == 0.0 {
                return Ok(p.clone());
            }
            let qh = q.half(h);
            let spread = &(&d * &d.adjoint()) + &(&d.adjoint() * &d);
            let r = &(qh * &spread) * qh;
            let e = r.herm_eigen()?;
            let floor = (eps / 3.0).powi(2);
            let keep: Vec<usize> = (0..e.values.len()).filter(|&i| e.values[i] > floor).collect();
            let v = e.vectors.columns(&keep);
            Ok(p + &(&v * &v.adjoint()))
        })
        .collect::<Result<_, NumError>>()?;
    let [m, p]: [CMatrix; 2] = blocks.try_into().expect("two halves");
    ModeSplit::new(TruncOp::from_halves(a.modes(), a.dim(), m, p)?, format!("{} refined eps={eps}", split.label()))
}

/// Block norms of Theorem-H type in the `H₁ ⊕ H₂` frame.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TheoremHReport {
    pub eps: f64,
    pub cutoff: usize,
    /// `‖(A − B)_ij‖` for `(i, j) ≠ (1, 1)`, in operator norm.
    pub difference: Vec<(String, f64)>,
    /// Tail seminorms of the defect blocks `C_ij` for `(i, j) ≠ (2, 2)`.
    pub defects: Vec<(String, f64)>,
    pub degenerate: bool,
    pub pass: bool,
}

impl TheoremHReport {
    pub fn max_difference(&self) -> f64 {
        self.difference.iter().map(|x| x.1).fold(0.0, f64::max)
    }

    pub fn max_defect(&self) -> f64 {
        self.defects.iter().map(|x| x.1).fold(0.0, f64::max)
    }
}

const DEFECT_NAMES: [&str; 4] = ["1-a*a", "1-aa*", "1-b*b", "1-bb*"];

fn defects(a: &TruncOp, b: &TruncOp) -> Result<[TruncOp; 4], OpError> {
    Ok([
        a.adjoint().try_mul(a)?.one_minus(),
        a.try_mul(&a.adjoint())?.one_minus(),
        b.adjoint().try_mul(b)?.one_minus(),
        b.try_mul(&b.adjoint())?.one_minus(),
    ])
}

fn sandwich(l: &TruncOp, x: &TruncOp, r: &TruncOp) -> Result<TruncOp, OpError> {
    l.try_mul(x)?.try_mul(r)
}

/// `‖LXR‖_M`, multiplying only the rows and columns of the window.
pub fn tail_of_product(l: &TruncOp, x: &TruncOp, r: &TruncOp, cut: TailCutoff) -> Result<f64, OpError> {
    l.check_same(x)?;
    x.check_same(r)?;
    let mut best = 0.0f64;
    for h in Half::BOTH {
        let w = cut.window(h, x.modes(), x.dim())?;
        let all: Vec<usize> = (0..x.half(h).rows()).collect();
        let lw = l.half(h).select(&w, &all);
        let rw = r.half(h).select(&all, &w);
        best = best.max((&(&lw * x.half(h)) * &rw).opnorm());
    }
    Ok(best)
}

/// Checks that `A − B` is small off the `(1, 1)` block and that the
/// defects are small modulo tails off the `(2, 2)` block.
pub fn verify_theorem_h(
    a: &TruncOp,
    b: &TruncOp,
    split: &ModeSplit,
    cut: TailCutoff,
    eps: f64,
) -> Result<TheoremHReport, OpError> {
    a.check_same(b)?;
    let p = split.projection();
    let q = split.complement();
    let d = a.try_sub(b)?;
    let difference = vec![
        ("diff_12".to_string(), sandwich(p, &d, &q)?.opnorm()),
        ("diff_21".to_string(), sandwich(&q, &d, p)?.opnorm()),
        ("diff_22".to_string(), sandwich(&q, &d, &q)?.opnorm()),
    ];
    let defect_ops = defects(a, b)?;
    let jobs: Vec<(String, &TruncOp, &TruncOp, &TruncOp)> = DEFECT_NAMES
        .iter()
        .zip(&defect_ops)
        .flat_map(|(name, cm)| {
            [
                (format!("{name}_11"), p, cm, p),
                (format!("{name}_12"), p, cm, &q),
                (format!("{name}_21"), &q, cm, p),
            ]
        })
        .collect();
    let defects = jobs
        .into_par_iter()
        .map(|(name, l, x, r)| Ok((name, tail_of_product(l, x, r, cut)?)))
        .collect::<Result<Vec<_>, OpError>>()?;
    let mut report =
        TheoremHReport { eps, cutoff: cut.0, difference, defects, degenerate: split.degenerate(), pass: false };
    report.pass = report.max_difference() < eps && report.max_defect() < eps;
    Ok(report)
}

/// One estimate with its allowed bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub name: String,
    pub value: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockEstimateReport {
    pub eps: f64,
    pub cutoff: usize,
    pub estimates: Vec<Estimate>,
    pub pass: bool,
}

/// The four `(1, 1)`-block estimates in tail seminorm: the source and range
/// defects of `A₁₁` and `B₁₁` agree within `2ε`, and `B₁₁ − A₁₁` kills the
/// defects of `A₁₁` within `4ε`.
pub fn verify_block_estimates(
    a: &TruncOp,
    b: &TruncOp,
    split: &ModeSplit,
    cut: TailCutoff,
    eps: f64,
) -> Result<BlockEstimateReport, OpError> {
    let p = split.projection();
    let a11 = sandwich(p, a, p)?;
    let b11 = sandwich(p, b, p)?;
    let (a11s, b11s) = (a11.adjoint(), b11.adjoint());
    let src_a = a11s.try_mul(&a11)?;
    let rng_a = a11.try_mul(&a11s)?;
    let diff = b11.try_sub(&a11)?;
    let jobs = vec![
        ("a11*a11-b11*b11", src_a.try_sub(&b11s.try_mul(&b11)?)?, 2.0 * eps),
        ("a11a11*-b11b11*", rng_a.try_sub(&b11.try_mul(&b11s)?)?, 2.0 * eps),
        ("(b11-a11)(1-a11*a11)", diff.try_mul(&p.try_sub(&src_a)?)?, 4.0 * eps),
        ("(b11-a11)*(1-a11a11*)", diff.adjoint().try_mul(&p.try_sub(&rng_a)?)?, 4.0 * eps),
    ];
    let estimates = jobs
        .into_par_iter()
        .map(|(name, x, bound)| Ok(Estimate { name: name.into(), value: tail_seminorm(&x, cut)?, bound }))
        .collect::<Result<Vec<_>, OpError>>()?;
    let pass = estimates.iter().all(|e| e.value < e.bound);
    Ok(BlockEstimateReport { eps, cutoff: cut.0, estimates, pass })
}

/// Scalar loop `θ ↦ e^{ikθ}` as a `1×1` matrix loop on `grid` samples.
pub fn monomial_loop(k: i64, grid: usize) -> Result<MatrixLoop, OpError> {
    Ok(MatrixLoop::from_fn(grid, |t| CMatrix::scalar(crate::numkern::cis(4.0 * k as f64 * t)))?)
}

/// Constant `1×1` loop.
pub fn constant_loop(z: C64, grid: usize) -> Result<MatrixLoop, OpError> {
    Ok(MatrixLoop::constant(grid, &CMatrix::scalar(z))?)
}

