//! Exact scalars: arbitrary-precision Gaussian rationals for polynomial
//! coefficients and a compact checked rational for the linear solver.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact complex number with rational real and imaginary parts.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GaussRat {
    pub re: BigRational,
    pub im: BigRational,
}

impl GaussRat {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        GaussRat { re, im }
    }

    pub fn real(re: BigRational) -> Self {
        GaussRat { re, im: BigRational::zero() }
    }

    pub fn from_int(n: i64) -> Self {
        Self::real(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        Self::real(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn i() -> Self {
        GaussRat { re: BigRational::zero(), im: BigRational::one() }
    }

    pub fn zero() -> Self {
        Self::from_int(0)
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.re.is_one() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        GaussRat { re: self.re.clone(), im: -self.im.clone() }
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let n = &self.re * &self.re + &self.im * &self.im;
        Some(GaussRat { re: &self.re / &n, im: -(&self.im / &n) })
    }
}

impl Add for &GaussRat {
    type Output = GaussRat;
    fn add(self, o: &GaussRat) -> GaussRat {
        GaussRat { re: &self.re + &o.re, im: &self.im + &o.im }
    }
}

impl Sub for &GaussRat {
    type Output = GaussRat;
    fn sub(self, o: &GaussRat) -> GaussRat {
        GaussRat { re: &self.re - &o.re, im: &self.im - &o.im }
    }
}

impl Mul for &GaussRat {
    type Output = GaussRat;
    fn mul(self, o: &GaussRat) -> GaussRat {
        GaussRat {
            re: &self.re * &o.re - &self.im * &o.im,
            im: &self.re * &o.im + &self.im * &o.re,
        }
    }
}

impl Neg for &GaussRat {
    type Output = GaussRat;
    fn neg(self) -> GaussRat {
        GaussRat { re: -self.re.clone(), im: -self.im.clone() }
    }
}

fn fmt_rat(r: &BigRational, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if r.denom().is_one() {
        write!(f, "{}", r.numer())
    } else {
        write!(f, "{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for GaussRat {
    /// `3/2`, `-1/2·i`, or `(1 + 2·i)` for a general value.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.re.is_zero(), self.im.is_zero()) {
            (_, true) => fmt_rat(&self.re, f),
            (true, false) => {
                if !self.im.is_one() {
                    if (-self.im.clone()).is_one() {
                        write!(f, "-")?;
                    } else {
                        fmt_rat(&self.im, f)?;
                        write!(f, "·")?;
                    }
                }
                write!(f, "i")
            }
            (false, false) => {
                write!(f, "(")?;
                fmt_rat(&self.re, f)?;
                if self.im.is_negative() {
                    write!(f, " - ")?;
                } else {
                    write!(f, " + ")?;
                }
                let m = self.im.abs();
                if !m.is_one() {
                    fmt_rat(&m, f)?;
                    write!(f, "·")?;
                }
                write!(f, "i)")
            }
        }
    }
}

/// Error raised when a solver rational leaves the `i128` range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Overflow;

/// Reduced fraction over `i128` with checked arithmetic, denominator > 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Rat {
    num: i128,
    den: i128,
}

// Checked arithmetic returns Result, so the std operator traits do not fit.
#[allow(clippy::should_implement_trait)]
impl Rat {
    pub const ZERO: Rat = Rat { num: 0, den: 1 };
    pub const ONE: Rat = Rat { num: 1, den: 1 };

    pub fn int(n: i128) -> Rat {
        Rat { num: n, den: 1 }
    }

    pub fn new(num: i128, den: i128) -> Result<Rat, Overflow> {
        if den == 0 {
            return Err(Overflow);
        }
        let g = num.gcd(&den);
        let (mut n, mut d) = (num / g.max(1), den / g.max(1));
        if d < 0 {
            n = n.checked_neg().ok_or(Overflow)?;
            d = d.checked_neg().ok_or(Overflow)?;
        }
        Ok(Rat { num: n, den: d })
    }

    pub fn num(self) -> i128 {
        self.num
    }

    pub fn den(self) -> i128 {
        self.den
    }

    pub fn is_zero(self) -> bool {
        self.num == 0
    }

    pub fn neg(self) -> Result<Rat, Overflow> {
        Ok(Rat { num: self.num.checked_neg().ok_or(Overflow)?, den: self.den })
    }

    pub fn add(self, o: Rat) -> Result<Rat, Overflow> {
        if self.den == o.den {
            return Rat::new(self.num.checked_add(o.num).ok_or(Overflow)?, self.den);
        }
        let g = self.den.gcd(&o.den);
        let l = (self.den / g).checked_mul(o.den).ok_or(Overflow)?;
        let a = self.num.checked_mul(l / self.den).ok_or(Overflow)?;
        let b = o.num.checked_mul(l / o.den).ok_or(Overflow)?;
        Rat::new(a.checked_add(b).ok_or(Overflow)?, l)
    }

    pub fn sub(self, o: Rat) -> Result<Rat, Overflow> {
        self.add(o.neg()?)
    }

    pub fn mul(self, o: Rat) -> Result<Rat, Overflow> {
        if self.num == 0 || o.num == 0 {
            return Ok(Rat::ZERO);
        }
        let g1 = self.num.gcd(&o.den);
        let g2 = o.num.gcd(&self.den);
        let n = (self.num / g1).checked_mul(o.num / g2).ok_or(Overflow)?;
        let d = (self.den / g2).checked_mul(o.den / g1).ok_or(Overflow)?;
        Rat::new(n, d)
    }

    pub fn div(self, o: Rat) -> Result<Rat, Overflow> {
        if o.num == 0 {
            return Err(Overflow);
        }
        self.mul(Rat { num: o.den, den: o.num }.normalized()?)
    }

    fn normalized(self) -> Result<Rat, Overflow> {
        Rat::new(self.num, self.den)
    }

    pub fn to_big(self) -> BigRational {
        BigRational::new(BigInt::from(self.num), BigInt::from(self.den))
    }

    pub fn from_big(r: &BigRational) -> Result<Rat, Overflow> {
        let n = r.numer().to_i128().ok_or(Overflow)?;
        let d = r.denom().to_i128().ok_or(Overflow)?;
        Rat::new(n, d)
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}
