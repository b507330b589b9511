//! Fredholm index engines, the relative index of a pair balanced modulo
//! tails and the comparison with the topological index of its symbol.
//!
//! A finite square matrix always has index 0, so both engines take an
//! optional localization: the indicator of the truncation edge, expressed in
//! the frame of the domain and of the codomain. Kernel and cokernel vectors
//! living on the edge are truncation artifacts and are not counted.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::loops::{example_4_1_subbundle, flagship_symbol, topo_index, LoopError, MatrixLoop, SymbolPair, TopoIndex};
use crate::numkern::{CMatrix, NumError};
use crate::opmodel::{
    clip_to_contraction, edge_indicator, kbalance_report, KBalanceReport, quantize, quantize_symbol, refine_split, splitting_projection,
    verify_theorem_h, Half, ModeSplit, OpError, Rounding, SplitSymbol, TailCutoff, TruncOp, KBALANCE_TOL,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IndexError {
    #[error(transparent)]
    Num(#[from] NumError),
    #[error(transparent)]
    Op(#[from] OpError),
    #[error("singular value {value:.3e} lies in the gap [{lo:.1e}, {hi:.1e})")]
    Gap { value: f64, lo: f64, hi: f64 },
    #[error("defect norm {norm:.3} exceeds {limit}; not a near-unitary candidate")]
    NotNearUnitary { norm: f64, limit: f64 },
    #[error("trace formula gives {value:.4}, {residue:.3} away from an integer")]
    Residue { value: f64, residue: f64 },
    #[error("engines disagree: singular values give {svd}, trace formula gives {fedosov}")]
    Disagreement { svd: i64, fedosov: i64 },
    #[error("localization has shape {found:?}, expected {expected:?}")]
    Localization { found: (usize, usize), expected: (usize, usize) },
    #[error("choice of C violates {condition}: {value:.3e} ≥ {bound:.3e} (X = {x})")]
    Choice { condition: &'static str, x: &'static str, value: f64, bound: f64 },
    #[error("custom C on the {half} half has shape {found:?}, expected {expected:?}")]
    ChoiceShape { half: Half, found: (usize, usize), expected: (usize, usize) },
}

/// Edge indicators of the domain and codomain as Hermitian weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Localization {
    pub domain: CMatrix,
    pub codomain: CMatrix,
}

impl Localization {
    pub fn diagonal(domain: &[f64], codomain: &[f64]) -> Self {
        Localization { domain: CMatrix::real_diag(domain), codomain: CMatrix::real_diag(codomain) }
    }

    /// Same weights on both sides.
    pub fn symmetric(edge: CMatrix) -> Self {
        Localization { domain: edge.clone(), codomain: edge }
    }

    /// `J*EJ` on both sides for an isometry `J`.
    pub fn in_frame(edge: &[f64], frame: &CMatrix) -> Self {
        let e = &frame.adjoint() * &frame.scale_rows(edge);
        Self::symmetric(e.hermitian_part())
    }

    fn check(&self, f: &CMatrix) -> Result<(), IndexError> {
        let exp_d = (f.cols(), f.cols());
        let exp_c = (f.rows(), f.rows());
        if self.domain.shape() != exp_d {
            return Err(IndexError::Localization { found: self.domain.shape(), expected: exp_d });
        }
        if self.codomain.shape() != exp_c {
            return Err(IndexError::Localization { found: self.codomain.shape(), expected: exp_c });
        }
        Ok(())
    }
}

/// Engine parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EngineConfig {
    pub svd_threshold: f64,
    pub gap_factor: f64,
    pub fedosov_power: u32,
    pub residue_limit: f64,
    pub defect_limit: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig { svd_threshold: 1e-2, gap_factor: 10.0, fedosov_power: 2, residue_limit: 0.2, defect_limit: 1.2 }
    }
}

/// Kernel and cokernel counts from the singular spectrum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SvdIndex {
    pub index: i64,
    pub kernel: usize,
    pub cokernel: usize,
    pub edge_kernel: usize,
    pub edge_cokernel: usize,
}

fn count_genuine(vectors: &CMatrix, edge: Option<&CMatrix>) -> Result<(usize, usize), IndexError> {
    if vectors.cols() == 0 {
        return Ok((0, 0));
    }
    match edge {
        None => Ok((vectors.cols(), 0)),
        Some(e) => {
            let k = &vectors.adjoint() * &(e * vectors);
            let w = k.herm_eigenvalues();
            let genuine = w.iter().filter(|&&x| x < 0.5).count();
            Ok((genuine, w.len() - genuine))
        }
    }
}

/// `dim ker F − dim coker F`, counting singular values below `threshold`
/// and requiring none in `[threshold, gap_factor·threshold)`.
pub fn fredholm_index_svd(
    f: &CMatrix,
    threshold: f64,
    gap_factor: f64,
    loc: Option<&Localization>,
) -> Result<SvdIndex, IndexError> {
    if let Some(l) = loc {
        l.check(f)?;
    }
    let (r, c) = f.shape();
    let svd = f.svd()?;
    let hi = gap_factor * threshold;
    if let Some(&value) = svd.s.iter().find(|&&s| s >= threshold && s < hi) {
        return Err(IndexError::Gap { value, lo: threshold, hi });
    }
    let small = svd.s.iter().filter(|&&s| s < threshold).count();
    let rank = svd.s.len() - small;
    let ker_cols: Vec<usize> = (rank..c).collect();
    let coker_cols: Vec<usize> = (rank..r).collect();
    let (kernel, edge_kernel) = count_genuine(&svd.v.columns(&ker_cols), loc.map(|l| &l.domain))?;
    let (cokernel, edge_cokernel) = count_genuine(&svd.u.columns(&coker_cols), loc.map(|l| &l.codomain))?;
    Ok(SvdIndex { index: kernel as i64 - cokernel as i64, kernel, cokernel, edge_kernel, edge_cokernel })
}

/// Trace-formula index with its rounding residue.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FedosovIndex {
    pub index: i64,
    pub value: f64,
    pub residue: f64,
}

/// `Tr[W(1 − F*F)^p] − Tr[W'(1 − FF*)^p]`, with `W`, `W'` the complements
/// of the localization weights.
pub fn fredholm_index_fedosov(
    f: &CMatrix,
    p: u32,
    loc: Option<&Localization>,
    cfg: &EngineConfig,
) -> Result<FedosovIndex, IndexError> {
    if let Some(l) = loc {
        l.check(f)?;
    }
    let fs = f.adjoint();
    let x = (&fs * f).one_minus();
    let y = (f * &fs).one_minus();
    let weighted_trace = |d: &CMatrix, w: Option<&CMatrix>| -> Result<f64, IndexError> {
        let norm = d.herm_eigenvalues().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if norm > cfg.defect_limit {
            return Err(IndexError::NotNearUnitary { norm, limit: cfg.defect_limit });
        }
        let dp = d.pow(p);
        let full = dp.trace().re;
        Ok(match w {
            None => full,
            Some(e) => {
                let n = dp.rows();
                let mut edge = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        edge += (e.get(i, j) * dp.get(j, i)).re;
                    }
                }
                full - edge
            }
        })
    };
    let value = weighted_trace(&x, loc.map(|l| &l.domain))? - weighted_trace(&y, loc.map(|l| &l.codomain))?;
    let index = value.round();
    let residue = (value - index).abs();
    if residue >= cfg.residue_limit {
        return Err(IndexError::Residue { value, residue });
    }
    Ok(FedosovIndex { index: index as i64, value, residue })
}

/// Both engines on one operator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EngineIndex {
    pub svd: SvdIndex,
    pub fedosov: FedosovIndex,
}

impl EngineIndex {
    pub fn compute(f: &CMatrix, loc: Option<&Localization>, cfg: &EngineConfig) -> Result<Self, IndexError> {
        let svd = fredholm_index_svd(f, cfg.svd_threshold, cfg.gap_factor, loc)?;
        let fedosov = fredholm_index_fedosov(f, cfg.fedosov_power, loc, cfg)?;
        Ok(EngineIndex { svd, fedosov })
    }

    pub fn agreed(&self) -> Result<i64, IndexError> {
        if self.svd.index != self.fedosov.index {
            return Err(IndexError::Disagreement { svd: self.svd.index, fedosov: self.fedosov.index });
        }
        Ok(self.svd.index)
    }

    pub fn zero() -> Self {
        EngineIndex {
            svd: SvdIndex { index: 0, kernel: 0, cokernel: 0, edge_kernel: 0, edge_cokernel: 0 },
            fedosov: FedosovIndex { index: 0, value: 0.0, residue: 0.0 },
        }
    }
}

/// Sum of per-half engine results.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IndexPair {
    pub svd: i64,
    pub fedosov: i64,
    pub max_residue: f64,
}

impl IndexPair {
    fn zero() -> Self {
        IndexPair { svd: 0, fedosov: 0, max_residue: 0.0 }
    }

    fn add(self, e: &EngineIndex, sign: i64) -> Self {
        IndexPair {
            svd: self.svd + sign * e.svd.index,
            fedosov: self.fedosov + sign * e.fedosov.index,
            max_residue: self.max_residue.max(e.fedosov.residue),
        }
    }

    fn combine(self, o: IndexPair) -> Self {
        IndexPair { svd: self.svd + o.svd, fedosov: self.fedosov + o.fedosov, max_residue: self.max_residue.max(o.max_residue) }
    }

    pub fn agreed(&self) -> Result<i64, IndexError> {
        if self.svd != self.fedosov {
            return Err(IndexError::Disagreement { svd: self.svd, fedosov: self.fedosov });
        }
        Ok(self.svd)
    }
}

/// Which operator `C: H₁ → H` compares the ranges of `A|H₁` and `B|H₁`.
#[derive(Clone, Debug, PartialEq)]
pub enum CChoice {
    ARestricted,
    BRestricted,
    /// Per half, a matrix from the basis of `H₁` (see [`ModeSplit::basis`])
    /// to the half.
    Custom { minus: CMatrix, plus: CMatrix },
}

impl fmt::Display for CChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CChoice::ARestricted => "A-restricted",
            CChoice::BRestricted => "B-restricted",
            CChoice::Custom { .. } => "custom",
        })
    }
}

/// Thresholds for the three conditions on `C`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChoiceCheck {
    pub eps: f64,
    pub cut: TailCutoff,
}

/// Per-half data of `H₁`: its basis and the restrictions of `A` and `B`.
struct Frame {
    half: Half,
    j: CMatrix,
    aj: CMatrix,
    bj: CMatrix,
    edge: Vec<f64>,
}

impl Frame {
    fn build(a: &TruncOp, b: &TruncOp, split: &ModeSplit, half: Half) -> Result<Option<Frame>, IndexError> {
        let (ah, bh) = (a.half(half), b.half(half));
        if ah == bh || split.ranks()[half as usize] == 0 {
            return Ok(None);
        }
        let j = split.basis(half)?;
        if j.cols() == 0 {
            return Ok(None);
        }
        Ok(Some(Frame {
            half,
            aj: ah * &j,
            bj: bh * &j,
            edge: edge_indicator(half, a.modes(), a.dim()),
            j,
        }))
    }

    fn loc(&self) -> Localization {
        Localization::in_frame(&self.edge, &self.j)
    }

    fn first(&self, x: &CMatrix) -> CMatrix {
        &self.j.adjoint() * x
    }

    /// `‖Q_M (J Y J*) Q_M‖` for an operator `Y` on `H₁`.
    fn lifted_tail(&self, y: &CMatrix, window: &[usize]) -> f64 {
        let all: Vec<usize> = (0..self.j.cols()).collect();
        let jw = self.j.select(window, &all);
        (&(&jw * y) * &jw.adjoint()).opnorm()
    }
}

fn frames(a: &TruncOp, b: &TruncOp, split: &ModeSplit) -> Result<Vec<Frame>, IndexError> {
    a.check_same(b)?;
    let mut out = Vec::new();
    for h in Half::BOTH {
        if let Some(f) = Frame::build(a, b, split, h)? {
            out.push(f);
        }
    }
    Ok(out)
}

fn check_choice(fr: &Frame, cm: &CMatrix, q: &CMatrix, check: &ChoiceCheck, modes: usize, dim: usize) -> Result<(), IndexError> {
    let window = check.cut.window(fr.half, modes, dim)?;
    let eps = check.eps;
    let c1 = fr.first(cm);
    let id = CMatrix::identity(c1.rows());
    for (x, xj) in [("A", &fr.aj), ("B", &fr.bj)] {
        let x1 = fr.first(xj);
        let c2_gap = (q * &(cm - xj)).opnorm();
        if c2_gap >= eps {
            return Err(IndexError::Choice { condition: "(C1)", x, value: c2_gap, bound: eps });
        }
        let (c1s, x1s) = (c1.adjoint(), x1.adjoint());
        let src = &(&c1s * &c1) - &(&x1s * &x1);
        let rng = &(&c1 * &c1s) - &(&x1 * &x1s);
        for y in [src, rng] {
            let v = fr.lifted_tail(&y, &window);
            if v >= 2.0 * eps {
                return Err(IndexError::Choice { condition: "(C2)", x, value: v, bound: 2.0 * eps });
            }
        }
        let d = &c1 - &x1;
        let k1 = &d * &(&id - &(&x1s * &x1));
        let k2 = &d.adjoint() * &(&id - &(&x1 * &x1s));
        for y in [k1, k2] {
            let v = fr.lifted_tail(&y, &window);
            if v >= 4.0 * eps {
                return Err(IndexError::Choice { condition: "(C3)", x, value: v, bound: 4.0 * eps });
            }
        }
    }
    Ok(())
}

/// Index of `C*A|H₁` minus index of `C*B|H₁`, summed over the halves, with
/// both engines reported.
pub fn rel_index_engines(
    a: &TruncOp,
    b: &TruncOp,
    split: &ModeSplit,
    choice: &CChoice,
    check: Option<&ChoiceCheck>,
    cfg: &EngineConfig,
) -> Result<IndexPair, IndexError> {
    let q = split.complement();
    let parts = frames(a, b, split)?
        .into_par_iter()
        .map(|fr| {
            let cm = match choice {
                CChoice::ARestricted => fr.aj.clone(),
                CChoice::BRestricted => fr.bj.clone(),
                CChoice::Custom { minus, plus } => {
                    let m = if fr.half == Half::Minus { minus } else { plus };
                    if m.shape() != fr.aj.shape() {
                        return Err(IndexError::ChoiceShape { half: fr.half, found: m.shape(), expected: fr.aj.shape() });
                    }
                    m.clone()
                }
            };
            if let Some(ch) = check {
                check_choice(&fr, &cm, q.half(fr.half), ch, a.modes(), a.dim())?;
            }
            let loc = fr.loc();
            let cs = cm.adjoint();
            let fa = EngineIndex::compute(&(&cs * &fr.aj), Some(&loc), cfg)?;
            let fb = EngineIndex::compute(&(&cs * &fr.bj), Some(&loc), cfg)?;
            Ok(IndexPair::zero().add(&fa, 1).add(&fb, -1))
        })
        .collect::<Result<Vec<_>, IndexError>>()?;
    Ok(parts.into_iter().fold(IndexPair::zero(), IndexPair::combine))
}

/// `ind(C*∘A|H₁) − ind(C*∘B|H₁)`; the engines must agree.
pub fn rel_index(
    a: &TruncOp,
    b: &TruncOp,
    split: &ModeSplit,
    choice: &CChoice,
    check: Option<&ChoiceCheck>,
    cfg: &EngineConfig,
) -> Result<i64, IndexError> {
    rel_index_engines(a, b, split, choice, check, cfg)?.agreed()
}

/// Index of `1 + B₁*(A₁ − B₁)` on `H₁`, both engines.
pub fn rel_index_corollary_engines(
    a: &TruncOp,
    b: &TruncOp,
    split: &ModeSplit,
    cfg: &EngineConfig,
) -> Result<IndexPair, IndexError> {
    let parts = frames(a, b, split)?
        .into_par_iter()
        .map(|fr| {
            let a1 = fr.first(&fr.aj);
            let b1 = fr.first(&fr.bj);
            let f = &CMatrix::identity(a1.rows()) + &(&b1.adjoint() * &(&a1 - &b1));
            Ok(IndexPair::zero().add(&EngineIndex::compute(&f, Some(&fr.loc()), cfg)?, 1))
        })
        .collect::<Result<Vec<_>, IndexError>>()?;
    Ok(parts.into_iter().fold(IndexPair::zero(), IndexPair::combine))
}

pub fn rel_index_corollary(a: &TruncOp, b: &TruncOp, split: &ModeSplit, cfg: &EngineConfig) -> Result<i64, IndexError> {
    rel_index_corollary_engines(a, b, split, cfg)?.agreed()
}

/// `1 + B*(A − B)` on the whole truncated space.
pub fn global_operator(a: &TruncOp, b: &TruncOp) -> Result<TruncOp, IndexError> {
    Ok(TruncOp::identity(a.modes(), a.dim()).try_add(&b.adjoint().try_mul(&a.try_sub(b)?)?)?)
}

/// Index of `1 + B*(A − B)`, both engines.
pub fn rel_index_global_engines(a: &TruncOp, b: &TruncOp, cfg: &EngineConfig) -> Result<IndexPair, IndexError> {
    a.check_same(b)?;
    let parts = Half::BOTH
        .par_iter()
        .map(|&h| {
            let (ah, bh) = (a.half(h), b.half(h));
            if ah == bh {
                return Ok(IndexPair::zero());
            }
            let f = &CMatrix::identity(ah.rows()) + &(&bh.adjoint() * &(ah - bh));
            let edge = edge_indicator(h, a.modes(), a.dim());
            let loc = Localization::diagonal(&edge, &edge);
            Ok(IndexPair::zero().add(&EngineIndex::compute(&f, Some(&loc), cfg)?, 1))
        })
        .collect::<Result<Vec<_>, IndexError>>()?;
    Ok(parts.into_iter().fold(IndexPair::zero(), IndexPair::combine))
}

pub fn rel_index_global(a: &TruncOp, b: &TruncOp, cfg: &EngineConfig) -> Result<i64, IndexError> {
    rel_index_global_engines(a, b, cfg)?.agreed()
}

/// Both engines on the Toeplitz compression of `symbol` to the Hardy
/// modes `0..=N`, localized at the truncation edge.
pub fn toeplitz_index(symbol: &MatrixLoop, modes: usize, cfg: &EngineConfig) -> Result<EngineIndex, IndexError> {
    let unit = MatrixLoop::constant(symbol.grid(), &CMatrix::identity(symbol.dim())).map_err(OpError::from)?;
    let op = quantize_symbol(&unit, symbol, modes)?;
    let edge = edge_indicator(Half::Plus, modes, symbol.dim());
    EngineIndex::compute(op.half(Half::Plus), Some(&Localization::diagonal(&edge, &edge)), cfg)
}

/// Pipeline stage, for error attribution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Quantize,
    Clip,
    KBalance,
    Split,
    TheoremH,
    Index,
    Topology,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Quantize => "quantize",
            Stage::Clip => "clip",
            Stage::KBalance => "kbalance",
            Stage::Split => "split",
            Stage::TheoremH => "theorem-h",
            Stage::Index => "index",
            Stage::Topology => "topology",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StageError {
    #[error(transparent)]
    Op(#[from] OpError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Loop(#[from] LoopError),
    #[error("{0}")]
    Failed(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("stage {stage} at {modes} modes: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    pub modes: usize,
    #[source]
    pub source: StageError,
}

fn at<E: Into<StageError>>(stage: Stage, modes: usize) -> impl FnOnce(E) -> PipelineError {
    move |e| PipelineError { stage, modes, source: e.into() }
}

/// Parameters of [`verify_index_theorem`].
#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub eps: f64,
    pub kbalance_tol: f64,
    /// Tail cutoff; `N/2` when absent.
    pub cutoff: Option<usize>,
    pub split: SplitSymbol,
    pub rounding: Rounding,
    pub engines: EngineConfig,
    /// Also compute the swapped pair and the B-restricted choice.
    pub cross_checks: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            eps: 0.045,
            kbalance_tol: KBALANCE_TOL,
            cutoff: None,
            split: SplitSymbol::default(),
            rounding: Rounding::widest_gap(),
            engines: EngineConfig::default(),
            cross_checks: true,
        }
    }
}

impl PipelineConfig {
    /// Uses an explicit projection-valued symbol for the split.
    pub fn with_split(mut self, minus: MatrixLoop, plus: MatrixLoop) -> Self {
        self.split = SplitSymbol::Explicit { minus, plus };
        self.rounding = Rounding::default();
        self
    }
}

/// All index formulas at one truncation size.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PipelineRun {
    pub modes: usize,
    pub cutoff: usize,
    pub kbalance_max: f64,
    pub theorem_h_difference: f64,
    pub theorem_h_defect: f64,
    pub split_ranks: [usize; 2],
    pub definition_a: IndexPair,
    pub definition_b: Option<IndexPair>,
    pub swapped: Option<IndexPair>,
    pub corollary: IndexPair,
    pub global: IndexPair,
    /// `‖1 − F*F‖_M` and `‖1 − FF*‖_M` for `F = 1 + B*(A − B)`.
    pub global_tail_defect: f64,
}

impl PipelineRun {
    /// Every formula with both engines, in a fixed order.
    pub fn values(&self) -> Vec<(&'static str, i64)> {
        let mut v = vec![
            ("definition_a_svd", self.definition_a.svd),
            ("definition_a_fedosov", self.definition_a.fedosov),
            ("corollary_svd", self.corollary.svd),
            ("corollary_fedosov", self.corollary.fedosov),
            ("global_svd", self.global.svd),
            ("global_fedosov", self.global.fedosov),
        ];
        if let Some(b) = self.definition_b {
            v.push(("definition_b_svd", b.svd));
            v.push(("definition_b_fedosov", b.fedosov));
        }
        if let Some(s) = self.swapped {
            v.push(("negated_swapped_svd", -s.svd));
            v.push(("negated_swapped_fedosov", -s.fedosov));
        }
        v
    }

    pub fn max_residue(&self) -> f64 {
        [Some(self.definition_a), self.definition_b, self.swapped, Some(self.corollary), Some(self.global)]
            .into_iter()
            .flatten()
            .map(|p| p.max_residue)
            .fold(0.0, f64::max)
    }
}

/// Analytic and topological indices of a symbol pair.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IndexReport {
    pub analytic_svd: i64,
    pub analytic_fedosov: i64,
    pub topological: i64,
    pub topology: TopoIndex,
    pub runs: Vec<PipelineRun>,
    pub residuals: Vec<(String, f64)>,
    pub pass: bool,
}

impl IndexReport {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Clipped quantizations with their refined splitting projection.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub a: TruncOp,
    pub b: TruncOp,
    pub split: ModeSplit,
    pub cut: TailCutoff,
    pub kbalance: KBalanceReport,
}

/// Quantize, clip, check tail balance and build the split at `modes`.
pub fn prepare(sp: &SymbolPair, modes: usize, cfg: &PipelineConfig) -> Result<Prepared, PipelineError> {
    let (d1, d2) = quantize(sp, modes).map_err(at(Stage::Quantize, modes))?;
    let a = clip_to_contraction(&d1).map_err(at(Stage::Clip, modes))?;
    let b = clip_to_contraction(&d2).map_err(at(Stage::Clip, modes))?;
    let cut = TailCutoff(cfg.cutoff.unwrap_or(modes / 2));
    let kbalance = kbalance_report(&a, &b, cut, cfg.kbalance_tol).map_err(at(Stage::KBalance, modes))?;
    if !kbalance.balanced {
        return Err(at(Stage::KBalance, modes)(StageError::Failed(format!(
            "tail residual {:.3e} exceeds {:.1e}",
            kbalance.max_final(),
            cfg.kbalance_tol
        ))));
    }
    let split = splitting_projection(sp, modes, &cfg.split, cfg.rounding)
        .and_then(|s| refine_split(&s, &a, &b, cfg.eps))
        .map_err(at(Stage::Split, modes))?;
    Ok(Prepared { a, b, split, cut, kbalance })
}

/// Runs the pipeline at one truncation size.
pub fn pipeline_run(sp: &SymbolPair, modes: usize, cfg: &PipelineConfig) -> Result<PipelineRun, PipelineError> {
    let Prepared { a, b, split, cut, kbalance: kb } = prepare(sp, modes, cfg)?;
    let th = verify_theorem_h(&a, &b, &split, cut, cfg.eps).map_err(at(Stage::TheoremH, modes))?;
    if !th.pass {
        return Err(at(Stage::TheoremH, modes)(StageError::Failed(format!(
            "block bounds {:.3e} / {:.3e} not below {}",
            th.max_difference(),
            th.max_defect(),
            cfg.eps
        ))));
    }
    let check = ChoiceCheck { eps: cfg.eps, cut };
    let e = &cfg.engines;
    let idx = at::<IndexError>(Stage::Index, modes);
    let run = (|| {
        let definition_a = rel_index_engines(&a, &b, &split, &CChoice::ARestricted, Some(&check), e)?;
        let (definition_b, swapped) = if cfg.cross_checks {
            (
                Some(rel_index_engines(&a, &b, &split, &CChoice::BRestricted, Some(&check), e)?),
                Some(rel_index_engines(&b, &a, &split, &CChoice::ARestricted, Some(&check), e)?),
            )
        } else {
            (None, None)
        };
        let corollary = rel_index_corollary_engines(&a, &b, &split, e)?;
        let global = rel_index_global_engines(&a, &b, e)?;
        let f = global_operator(&a, &b)?;
        let fs = f.adjoint();
        let t1 = crate::opmodel::tail_seminorm(&fs.try_mul(&f)?.one_minus(), cut)?;
        let t2 = crate::opmodel::tail_seminorm(&f.try_mul(&fs)?.one_minus(), cut)?;
        Ok::<_, IndexError>(PipelineRun {
            modes,
            cutoff: cut.0,
            kbalance_max: kb.max_final(),
            theorem_h_difference: th.max_difference(),
            theorem_h_defect: th.max_defect(),
            split_ranks: split.ranks(),
            definition_a,
            definition_b,
            swapped,
            corollary,
            global,
            global_tail_defect: t1.max(t2),
        })
    })()
    .map_err(idx)?;
    Ok(run)
}

/// Quantizes at `N` and `2N`, computes every index formula with both
/// engines and compares with the topological index. Passes iff all values
/// equal the topological index at both sizes.
pub fn verify_index_theorem(sp: &SymbolPair, modes: usize, cfg: &PipelineConfig) -> Result<IndexReport, PipelineError> {
    let topology = topo_index(sp).map_err(at(Stage::Topology, modes))?;
    let runs = [modes, 2 * modes]
        .iter()
        .map(|&n| pipeline_run(sp, n, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let last = runs.last().expect("two runs");
    let first = &runs[0];
    let mut residuals = vec![
        ("kbalance_max".to_string(), runs.iter().map(|r| r.kbalance_max).fold(0.0, f64::max)),
        ("theorem_h_difference".to_string(), runs.iter().map(|r| r.theorem_h_difference).fold(0.0, f64::max)),
        ("theorem_h_defect".to_string(), runs.iter().map(|r| r.theorem_h_defect).fold(0.0, f64::max)),
        ("fedosov_residue".to_string(), runs.iter().map(PipelineRun::max_residue).fold(0.0, f64::max)),
        ("global_tail_defect".to_string(), runs.iter().map(|r| r.global_tail_defect).fold(0.0, f64::max)),
    ];
    let topo = topology.index;
    let mut pass = true;
    for (x, y) in first.values().iter().zip(last.values()) {
        let delta = (y.1 - x.1).abs();
        residuals.push((format!("stabilization_{}", x.0), delta as f64));
        pass &= delta == 0 && x.1 == topo && y.1 == topo;
    }
    Ok(IndexReport {
        analytic_svd: last.global.svd,
        analytic_fedosov: last.global.fedosov,
        topological: topo,
        topology,
        runs,
        residuals,
        pass,
    })
}

/// The flagship instance with its sub-bundle split: `α = e^{4pit}`,
/// `β = e^{4qit}`, `γ = 1 − sin(2t)/2`.
pub fn flagship_instance(p: i64, q: i64, grid: usize) -> Result<(SymbolPair, PipelineConfig), LoopError> {
    let sp = flagship_symbol(p, q, grid)?;
    let plus = example_4_1_subbundle(grid)?;
    let minus = MatrixLoop::constant(grid, &CMatrix::zeros(2, 2))?;
    Ok((sp, PipelineConfig::default().with_split(minus, plus)))
}

/// Symbol grid used for flagship instances at `N` modes.
pub fn flagship_grid(modes: usize) -> usize {
    (8 * modes).max(1024)
}

/// One row of an index sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub p: i64,
    pub q: i64,
    pub analytic: Option<i64>,
    pub topological: Option<i64>,
    pub fedosov_residue: f64,
    pub pass: bool,
    pub error: Option<String>,
    pub report: Option<IndexReport>,
}

/// Index reports for the flagship family over `p ∈ ps`, `q ∈ qs`.
pub fn sweep(ps: std::ops::RangeInclusive<i64>, qs: std::ops::RangeInclusive<i64>, modes: usize) -> Vec<SweepRow> {
    let cases: Vec<(i64, i64)> = ps.flat_map(|p| qs.clone().map(move |q| (p, q))).collect();
    cases
        .into_par_iter()
        .map(|(p, q)| {
            let out = flagship_instance(p, q, flagship_grid(modes))
                .map_err(|e| e.to_string())
                .and_then(|(sp, cfg)| verify_index_theorem(&sp, modes, &cfg).map_err(|e| e.to_string()));
            match out {
                Ok(r) => SweepRow {
                    p,
                    q,
                    analytic: Some(r.analytic_svd),
                    topological: Some(r.topological),
                    fedosov_residue: r.residuals.iter().find(|x| x.0 == "fedosov_residue").map_or(0.0, |x| x.1),
                    pass: r.pass,
                    error: None,
                    report: Some(r),
                },
                Err(e) => SweepRow {
                    p,
                    q,
                    analytic: None,
                    topological: None,
                    fedosov_residue: f64::NAN,
                    pass: false,
                    error: Some(e),
                    report: None,
                },
            }
        })
        .collect()
}

/// CSV with columns `p,q,analytic,topological,fedosov_residue,pass`.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("p,q,analytic,topological,fedosov_residue,pass\n");
    let opt = |x: Option<i64>| x.map_or(String::new(), |v| v.to_string());
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{:.6},{}\n",
            r.p,
            r.q,
            opt(r.analytic),
            opt(r.topological),
            r.fedosov_residue,
            r.pass
        ));
    }
    out
}
