//! Monomials and polynomials of the free *-algebra on `a`, `b` with the
//! commuting self-adjoint symbols `s`, `c`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use crate::rational::GaussRat;

/// One letter of a word.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    A,
    AStar,
    B,
    BStar,
}

impl Letter {
    pub const ALL: [Letter; 4] = [Letter::A, Letter::AStar, Letter::B, Letter::BStar];

    pub fn star(self) -> Letter {
        match self {
            Letter::A => Letter::AStar,
            Letter::AStar => Letter::A,
            Letter::B => Letter::BStar,
            Letter::BStar => Letter::B,
        }
    }

    pub fn is_starred(self) -> bool {
        matches!(self, Letter::AStar | Letter::BStar)
    }

    /// Two-bit code used by the solver's packed keys.
    pub fn code(self) -> u64 {
        self as u64
    }

    pub fn from_code(code: u64) -> Letter {
        Letter::ALL[(code & 3) as usize]
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Letter::A => "a",
            Letter::AStar => "a*",
            Letter::B => "b",
            Letter::BStar => "b*",
        })
    }
}

/// A central monomial `s^sin · c^cos` times a word in the letters.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Monomial {
    pub sin: u32,
    pub cos: u32,
    pub word: Vec<Letter>,
}

impl Monomial {
    pub fn unit() -> Self {
        Monomial::default()
    }

    pub fn letter(l: Letter) -> Self {
        Monomial { sin: 0, cos: 0, word: vec![l] }
    }

    pub fn word(word: Vec<Letter>) -> Self {
        Monomial { sin: 0, cos: 0, word }
    }

    pub fn central(sin: u32, cos: u32) -> Self {
        Monomial { sin, cos, word: Vec::new() }
    }

    pub fn is_unit(&self) -> bool {
        self.sin == 0 && self.cos == 0 && self.word.is_empty()
    }

    /// Number of letters; central symbols carry no degree.
    pub fn degree(&self) -> usize {
        self.word.len()
    }

    /// Number of starred letters minus number of unstarred letters.
    pub fn grade(&self) -> i64 {
        self.word.iter().map(|l| if l.is_starred() { 1 } else { -1 }).sum()
    }

    pub fn mul(&self, o: &Monomial) -> Monomial {
        let mut word = Vec::with_capacity(self.word.len() + o.word.len());
        word.extend_from_slice(&self.word);
        word.extend_from_slice(&o.word);
        Monomial { sin: self.sin + o.sin, cos: self.cos + o.cos, word }
    }

    pub fn star(&self) -> Monomial {
        Monomial {
            sin: self.sin,
            cos: self.cos,
            word: self.word.iter().rev().map(|l| l.star()).collect(),
        }
    }

    fn sort_key(&self) -> (usize, &[Letter], u32, u32) {
        (self.word.len(), &self.word, self.sin + self.cos, self.sin)
    }
}

impl Ord for Monomial {
    fn cmp(&self, o: &Self) -> Ordering {
        self.sort_key().cmp(&o.sort_key())
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        for (sym, e) in [("s", self.sin), ("c", self.cos)] {
            match e {
                0 => {}
                1 => parts.push(sym.to_string()),
                e => parts.push(format!("{sym}^{e}")),
            }
        }
        parts.extend(self.word.iter().map(|l| l.to_string()));
        if parts.is_empty() {
            f.write_str("1")
        } else {
            f.write_str(&parts.join("·"))
        }
    }
}

/// Finite sum of monomials with nonzero exact coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct StarPoly {
    terms: BTreeMap<Monomial, GaussRat>,
}

impl StarPoly {
    pub fn zero() -> Self {
        StarPoly::default()
    }

    pub fn one() -> Self {
        Self::constant(GaussRat::one())
    }

    pub fn constant(k: GaussRat) -> Self {
        Self::term(Monomial::unit(), k)
    }

    pub fn term(m: Monomial, k: GaussRat) -> Self {
        let mut p = StarPoly::zero();
        p.add_term(m, k);
        p
    }

    pub fn monomial(m: Monomial) -> Self {
        Self::term(m, GaussRat::one())
    }

    pub fn letter(l: Letter) -> Self {
        Self::monomial(Monomial::letter(l))
    }

    pub fn a() -> Self {
        Self::letter(Letter::A)
    }

    pub fn b() -> Self {
        Self::letter(Letter::B)
    }

    pub fn sin() -> Self {
        Self::monomial(Monomial::central(1, 0))
    }

    pub fn cos() -> Self {
        Self::monomial(Monomial::central(0, 1))
    }

    /// Adds `k·m` in place, dropping the term if it cancels.
    pub fn add_term(&mut self, m: Monomial, k: GaussRat) {
        if k.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(v) => {
                *v = &*v + &k;
                if v.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, k);
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &GaussRat)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, m: &Monomial) -> GaussRat {
        self.terms.get(m).cloned().unwrap_or_else(GaussRat::zero)
    }

    /// Largest word length among the terms (0 for the zero polynomial).
    pub fn degree(&self) -> usize {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn has_centrals(&self) -> bool {
        self.terms.keys().any(|m| m.sin > 0 || m.cos > 0)
    }

    pub fn add(&self, o: &StarPoly) -> StarPoly {
        let mut r = self.clone();
        for (m, k) in &o.terms {
            r.add_term(m.clone(), k.clone());
        }
        r
    }

    pub fn sub(&self, o: &StarPoly) -> StarPoly {
        let mut r = self.clone();
        for (m, k) in &o.terms {
            r.add_term(m.clone(), -k);
        }
        r
    }

    pub fn neg(&self) -> StarPoly {
        self.scale(&GaussRat::from_int(-1))
    }

    pub fn scale(&self, k: &GaussRat) -> StarPoly {
        let mut r = StarPoly::zero();
        for (m, v) in &self.terms {
            r.add_term(m.clone(), v * k);
        }
        r
    }

    pub fn mul(&self, o: &StarPoly) -> StarPoly {
        let mut r = StarPoly::zero();
        for (m1, k1) in &self.terms {
            for (m2, k2) in &o.terms {
                r.add_term(m1.mul(m2), k1 * k2);
            }
        }
        r
    }

    pub fn pow(&self, e: u32) -> StarPoly {
        (0..e).fold(StarPoly::one(), |acc, _| acc.mul(self))
    }

    /// The involution: reverses words, stars letters, conjugates coefficients.
    pub fn star(&self) -> StarPoly {
        let mut r = StarPoly::zero();
        for (m, k) in &self.terms {
            r.add_term(m.star(), k.conj());
        }
        r
    }

    /// Normal form modulo `s² + c² − 1`: every `s^e` with `e ≥ 2` is
    /// rewritten through `s² → 1 − c²`, leaving `s` exponents in {0, 1}.
    pub fn reduce_circle(&self) -> StarPoly {
        let mut r = StarPoly::zero();
        for (m, k) in &self.terms {
            let pairs = m.sin / 2;
            // (1 − c²)^pairs = Σ_j binom(pairs, j) (−1)^j c^{2j}
            let mut binom = num_bigint::BigInt::from(1u32);
            for j in 0..=pairs {
                let sign = if j % 2 == 0 { 1 } else { -1 };
                let w = GaussRat::real(num_rational::BigRational::from_integer(
                    &binom * num_bigint::BigInt::from(sign),
                ));
                let mono = Monomial { sin: m.sin % 2, cos: m.cos + 2 * j, word: m.word.clone() };
                r.add_term(mono, k * &w);
                binom = binom * num_bigint::BigInt::from(pairs - j) / num_bigint::BigInt::from(j + 1);
            }
        }
        r
    }
}

impl fmt::Display for StarPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, k)) in self.terms.iter().enumerate() {
            let negative = k.is_real() && k.re < num_rational::BigRational::from_integer(0.into());
            let shown = if negative { -k } else { k.clone() };
            if i == 0 {
                if negative {
                    f.write_str("-")?;
                }
            } else if negative {
                f.write_str(" - ")?;
            } else {
                f.write_str(" + ")?;
            }
            if m.is_unit() {
                write!(f, "{shown}")?;
            } else if shown.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{shown}·{m}")?;
            }
        }
        Ok(())
    }
}
