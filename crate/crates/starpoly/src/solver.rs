//! Bounded-degree membership in a two-sided *-ideal by exact sparse
//! elimination over the rationals.
//!
//! For a degree bound `D` the solver spans all products `u·g·v` with
//! `|u| + deg g + |v| ≤ D`, where `g` runs over the generators and their
//! adjoints. Products are kept in row echelon form keyed by leading word
//! (degree-lexicographic order) and every row remembers how it was derived,
//! so a successful reduction of the target back-propagates to explicit
//! coefficients on the products.
//!
//! Targets are first brought to normal form modulo the central relations and
//! split by central monomial `s^e c^k` (`e ≤ 1`), by real and imaginary part,
//! and by grade (starred minus unstarred letters) when every generator is
//! homogeneous. Each piece is solved in the free algebra with rational
//! coefficients.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::certificate::{CertificateTerm, MembershipCertificate};
use crate::ideal::RelationIdeal;
use crate::poly::{Letter, Monomial, StarPoly};
use crate::rational::{GaussRat, Overflow, Rat};

/// Default ceiling on the number of spanning products per solve.
pub const DEFAULT_PRODUCT_CEILING: usize = 4_000_000;

const MAX_WORD_LEN: usize = 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolverError {
    #[error("degree bound {bound} is below the target degree {target}")]
    BoundBelowTarget { bound: usize, target: usize },
    #[error("degree bound {bound} needs {count} spanning products, above the ceiling {ceiling}")]
    CeilingExceeded { bound: usize, count: usize, ceiling: usize },
    #[error("rational arithmetic overflowed during elimination")]
    Overflow,
    #[error("generator {index} is unsupported: {reason}")]
    UnsupportedGenerator { index: usize, reason: String },
}

impl From<Overflow> for SolverError {
    fn from(_: Overflow) -> Self {
        SolverError::Overflow
    }
}

/// Result of a bounded membership search.
#[derive(Debug, Clone, PartialEq)]
pub enum Membership {
    Certified(MembershipCertificate),
    /// Membership was not demonstrated with products up to `degree_bound`.
    /// This is not a proof of non-membership.
    NotFound { degree_bound: usize },
}

impl Membership {
    pub fn certificate(&self) -> Option<&MembershipCertificate> {
        match self {
            Membership::Certified(c) => Some(c),
            Membership::NotFound { .. } => None,
        }
    }
}

type Key = u64;
type SparseVec = Vec<(Key, Rat)>;
type PieceKey = ((u32, u32), bool, Option<i64>);

fn pack(word: &[Letter]) -> Key {
    let bits = word.iter().fold(0u64, |acc, l| (acc << 2) | l.code());
    ((word.len() as u64) << 48) | bits
}

fn unpack(key: Key) -> Vec<Letter> {
    let len = (key >> 48) as usize;
    (0..len).rev().map(|i| Letter::from_code(key >> (2 * i))).collect()
}

fn concat(x: Key, y: Key) -> Key {
    let (lx, ly) = (x >> 48, y >> 48);
    let mask = (1u64 << 48) - 1;
    ((lx + ly) << 48) | ((x & mask) << (2 * ly)) | (y & mask)
}

fn word_len(key: Key) -> usize {
    (key >> 48) as usize
}

/// `x − μ·y` for vectors sorted by descending key.
fn axpy(x: &SparseVec, mu: Rat, y: &SparseVec) -> Result<SparseVec, Overflow> {
    let mut out = Vec::with_capacity(x.len() + y.len());
    let (mut i, mut j) = (0, 0);
    while i < x.len() || j < y.len() {
        if j == y.len() || (i < x.len() && x[i].0 > y[j].0) {
            out.push(x[i]);
            i += 1;
        } else if i == x.len() || y[j].0 > x[i].0 {
            out.push((y[j].0, mu.mul(y[j].1)?.neg()?));
            j += 1;
        } else {
            let v = x[i].1.sub(mu.mul(y[j].1)?)?;
            if !v.is_zero() {
                out.push((x[i].0, v));
            }
            i += 1;
            j += 1;
        }
    }
    Ok(out)
}

fn normalize(mut v: SparseVec) -> Result<SparseVec, Overflow> {
    v.sort_unstable_by_key(|x| std::cmp::Reverse(x.0));
    let mut out: SparseVec = Vec::with_capacity(v.len());
    for (k, c) in v {
        match out.last_mut() {
            Some(last) if last.0 == k => last.1 = last.1.add(c)?,
            _ => out.push((k, c)),
        }
    }
    out.retain(|(_, c)| !c.is_zero());
    Ok(out)
}

/// A generator or the adjoint of one, in solver form.
#[derive(Clone, Debug)]
struct Spanner {
    index: usize,
    adjoint: bool,
    terms: Vec<(Key, Rat)>,
    degree: usize,
    grade: Option<i64>,
}

#[derive(Clone, Copy, Debug)]
struct Product {
    spanner: usize,
    left: Key,
    right: Key,
}

struct Row {
    terms: SparseVec,
    product: usize,
    scale: Rat,
    deps: Vec<(u32, Rat)>,
}

struct Echelon {
    products: Vec<Product>,
    rows: Vec<Row>,
    pivots: HashMap<Key, u32>,
}

/// Reusable solver for one ideal; caches the echelon form per degree bound
/// and grade.
pub struct MembershipSolver {
    ideal: RelationIdeal,
    spanners: Vec<Spanner>,
    graded: bool,
    ceiling: usize,
    cache: HashMap<(usize, Option<i64>), Echelon>,
}

fn real_coefficients(p: &StarPoly, index: usize) -> Result<Vec<(Key, Rat)>, SolverError> {
    let mut out = Vec::new();
    for (m, k) in p.terms() {
        if m.sin > 0 || m.cos > 0 {
            return Err(SolverError::UnsupportedGenerator { index, reason: "involves s or c".into() });
        }
        if !k.is_real() {
            return Err(SolverError::UnsupportedGenerator { index, reason: "non-real coefficient".into() });
        }
        if m.word.len() > MAX_WORD_LEN {
            return Err(SolverError::UnsupportedGenerator { index, reason: "word too long".into() });
        }
        out.push((pack(&m.word), Rat::from_big(&k.re)?));
    }
    Ok(out)
}

fn words_by_grade(len: usize) -> BTreeMap<i64, Vec<Key>> {
    let mut out: BTreeMap<i64, Vec<Key>> = BTreeMap::new();
    for code in 0..(1u64 << (2 * len)) {
        let key = ((len as u64) << 48) | code;
        let grade: i64 = (0..len)
            .map(|i| if (code >> (2 * i)) & 1 == 1 { 1 } else { -1 })
            .sum();
        out.entry(grade).or_default().push(key);
    }
    out
}

impl MembershipSolver {
    pub fn new(ideal: RelationIdeal) -> Result<Self, SolverError> {
        Self::with_ceiling(ideal, DEFAULT_PRODUCT_CEILING)
    }

    pub fn with_ceiling(ideal: RelationIdeal, ceiling: usize) -> Result<Self, SolverError> {
        let mut spanners: Vec<Spanner> = Vec::new();
        for (index, g) in ideal.generators().iter().enumerate() {
            for adjoint in [false, true] {
                let poly = if adjoint { g.star() } else { g.clone() };
                if poly.is_zero() {
                    continue;
                }
                let terms = normalize(real_coefficients(&poly, index)?)?;
                if spanners.iter().any(|s| s.terms == terms) {
                    continue;
                }
                let degree = poly.degree();
                let grades: Vec<i64> = poly.terms().map(|(m, _)| m.grade()).collect();
                let grade = if grades.iter().all(|g| *g == grades[0]) { Some(grades[0]) } else { None };
                spanners.push(Spanner { index, adjoint, terms, degree, grade });
            }
        }
        let graded = spanners.iter().all(|s| s.grade.is_some());
        Ok(MembershipSolver { ideal, spanners, graded, ceiling, cache: HashMap::new() })
    }

    pub fn ideal(&self) -> &RelationIdeal {
        &self.ideal
    }

    /// Decides whether `target` lies in the span of products up to
    /// `degree_bound` and, if so, returns a certificate.
    pub fn solve(&mut self, target: &StarPoly, degree_bound: usize) -> Result<Membership, SolverError> {
        let target_degree = target.degree();
        if degree_bound < target_degree {
            return Err(SolverError::BoundBelowTarget { bound: degree_bound, target: target_degree });
        }
        if degree_bound > MAX_WORD_LEN {
            return Err(SolverError::CeilingExceeded {
                bound: degree_bound,
                count: usize::MAX,
                ceiling: self.ceiling,
            });
        }
        let normal = self.ideal.reduce_central(target);

        // (central monomial, imaginary part?, grade) -> rational word polynomial
        let mut pieces: BTreeMap<PieceKey, SparseVec> = BTreeMap::new();
        for (m, k) in normal.terms() {
            let grade = if self.graded { Some(m.grade()) } else { None };
            for (imag, part) in [(false, &k.re), (true, &k.im)] {
                if num_traits::Zero::is_zero(part) {
                    continue;
                }
                pieces
                    .entry(((m.sin, m.cos), imag, grade))
                    .or_default()
                    .push((pack(&m.word), Rat::from_big(part)?));
            }
        }

        let mut decomposition = Vec::new();
        for (((sin, cos), imag, grade), piece) in pieces {
            let piece = normalize(piece)?;
            let Some(combo) = self.solve_piece(&piece, degree_bound, grade)? else {
                return Ok(Membership::NotFound { degree_bound });
            };
            for (product, coeff) in combo {
                let sp = &self.spanners[product.spanner];
                let k = GaussRat::real(coeff.to_big());
                let coefficient = if imag { &k * &GaussRat::i() } else { k };
                decomposition.push(CertificateTerm {
                    left: Monomial { sin, cos, word: unpack(product.left) },
                    generator: sp.index,
                    adjoint: sp.adjoint,
                    right: Monomial::word(unpack(product.right)),
                    coefficient,
                });
            }
        }
        Ok(Membership::Certified(MembershipCertificate {
            target: target.clone(),
            ideal: self.ideal.name().to_string(),
            degree_bound,
            decomposition,
        }))
    }

    fn solve_piece(
        &mut self,
        piece: &SparseVec,
        bound: usize,
        grade: Option<i64>,
    ) -> Result<Option<Vec<(Product, Rat)>>, SolverError> {
        if !self.cache.contains_key(&(bound, grade)) {
            let ech = self.build(bound, grade)?;
            self.cache.insert((bound, grade), ech);
        }
        let ech = &self.cache[&(bound, grade)];

        let mut v = piece.clone();
        let mut lambda: Vec<(u32, Rat)> = Vec::new();
        let mut i = 0;
        while i < v.len() {
            match ech.pivots.get(&v[i].0) {
                Some(&r) => {
                    let mu = v[i].1;
                    v = axpy(&v, mu, &ech.rows[r as usize].terms)?;
                    lambda.push((r, mu));
                }
                None => i += 1,
            }
        }
        if !v.is_empty() {
            return Ok(None);
        }

        let mut weight: BTreeMap<u32, Rat> = BTreeMap::new();
        for (r, mu) in lambda {
            let e = weight.entry(r).or_insert(Rat::ZERO);
            *e = e.add(mu)?;
        }
        let mut coeffs: BTreeMap<usize, Rat> = BTreeMap::new();
        while let Some((r, w)) = weight.pop_last() {
            if w.is_zero() {
                continue;
            }
            let row = &ech.rows[r as usize];
            let ws = w.mul(row.scale)?;
            let e = coeffs.entry(row.product).or_insert(Rat::ZERO);
            *e = e.add(ws)?;
            for &(l, mu) in &row.deps {
                let e = weight.entry(l).or_insert(Rat::ZERO);
                *e = e.sub(ws.mul(mu)?)?;
            }
        }
        Ok(Some(
            coeffs
                .into_iter()
                .filter(|(_, c)| !c.is_zero())
                .map(|(p, c)| (ech.products[p], c))
                .collect(),
        ))
    }

    fn enumerate(&self, bound: usize, grade: Option<i64>) -> Result<Vec<Product>, SolverError> {
        let max_side = self.spanners.iter().map(|s| bound.saturating_sub(s.degree)).max().unwrap_or(0);
        // Upper bound on the number of products before any enumeration.
        let mut estimate: usize = 0;
        for sp in &self.spanners {
            if sp.degree > bound {
                continue;
            }
            let free = bound - sp.degree;
            for total in 0..=free {
                estimate = estimate.saturating_add((total + 1).saturating_mul(1usize << (2 * total).min(62)));
            }
        }
        if estimate > self.ceiling.saturating_mul(4) {
            return Err(SolverError::CeilingExceeded { bound, count: estimate, ceiling: self.ceiling });
        }

        let words: Vec<BTreeMap<i64, Vec<Key>>> = (0..=max_side).map(words_by_grade).collect();
        let mut products = Vec::new();
        for (si, sp) in self.spanners.iter().enumerate() {
            if sp.degree > bound {
                continue;
            }
            let free = bound - sp.degree;
            for lu in 0..=free {
                for lv in 0..=(free - lu) {
                    for (gu, us) in &words[lu] {
                        for (gv, vs) in &words[lv] {
                            if let (Some(t), Some(g)) = (grade, sp.grade) {
                                if gu + g + gv != t {
                                    continue;
                                }
                            }
                            for &u in us {
                                for &v in vs {
                                    products.push(Product { spanner: si, left: u, right: v });
                                }
                            }
                            if products.len() > self.ceiling {
                                return Err(SolverError::CeilingExceeded {
                                    bound,
                                    count: products.len(),
                                    ceiling: self.ceiling,
                                });
                            }
                        }
                    }
                }
            }
        }
        Ok(products)
    }

    fn product_terms(&self, p: &Product) -> SparseVec {
        let sp = &self.spanners[p.spanner];
        let mut v: SparseVec =
            sp.terms.iter().map(|&(w, c)| (concat(concat(p.left, w), p.right), c)).collect();
        v.sort_unstable_by_key(|x| std::cmp::Reverse(x.0));
        v
    }

    fn build(&self, bound: usize, grade: Option<i64>) -> Result<Echelon, SolverError> {
        let products = self.enumerate(bound, grade)?;
        let mut order: Vec<(Key, usize)> =
            products.iter().enumerate().map(|(i, p)| (self.product_terms(p)[0].0, i)).collect();
        order.sort_unstable();

        let mut rows: Vec<Row> = Vec::new();
        let mut pivots: HashMap<Key, u32> = HashMap::new();
        for (_, pi) in order {
            let mut v = self.product_terms(&products[pi]);
            let mut deps = Vec::new();
            while let Some(&(lead, coeff)) = v.first() {
                match pivots.get(&lead) {
                    Some(&r) => {
                        v = axpy(&v, coeff, &rows[r as usize].terms)?;
                        deps.push((r, coeff));
                    }
                    None => {
                        let scale = Rat::ONE.div(coeff)?;
                        let terms = v
                            .iter()
                            .map(|&(k, c)| Ok((k, c.mul(scale)?)))
                            .collect::<Result<SparseVec, Overflow>>()?;
                        pivots.insert(lead, rows.len() as u32);
                        rows.push(Row { terms, product: pi, scale, deps });
                        break;
                    }
                }
            }
        }
        debug_assert!(rows.iter().all(|r| r.terms.iter().all(|(k, _)| word_len(*k) <= bound)));
        Ok(Echelon { products, rows, pivots })
    }
}

/// One-shot membership search with the default product ceiling.
pub fn ideal_member(
    target: &StarPoly,
    ideal: &RelationIdeal,
    degree_bound: usize,
) -> Result<Membership, SolverError> {
    MembershipSolver::new(ideal.clone())?.solve(target, degree_bound)
}

/// The default bound: two more than the target's degree.
pub fn default_bound(target: &StarPoly) -> usize {
    target.degree() + 2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_packing_roundtrips() {
        let w = vec![Letter::BStar, Letter::A, Letter::AStar, Letter::B];
        assert_eq!(unpack(pack(&w)), w);
        let (x, y) = (pack(&w[..1]), pack(&w[1..]));
        assert_eq!(concat(x, y), pack(&w));
        assert_eq!(unpack(pack(&[])), Vec::<Letter>::new());
    }

    #[test]
    fn longer_words_sort_higher() {
        assert!(pack(&[Letter::A, Letter::A]) > pack(&[Letter::BStar]));
    }
}
