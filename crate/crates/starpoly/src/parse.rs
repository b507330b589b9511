//! Expression parser for *-polynomials and small square block matrices of
//! them.
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := factor (('·' | '.')? factor)*          juxtaposition multiplies
//! factor  := ('-' | '+') factor | atom postfix*
//! postfix := '*'                                   adjoint
//!          | '^' integer                           power
//! atom    := integer | integer '/' integer | ident | '(' expr ')'
//!          | '[' row (',' row)* ']'                 row := '[' expr (',' expr)* ']'
//! ```
//!
//! Built-in identifiers are `a`, `b`, `s`, `c` and the imaginary unit `i`.
//! Further names resolve through a caller-supplied environment.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

use crate::poly::{Letter, StarPoly};
use crate::rational::GaussRat;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown symbol `{name}` at position {pos}")]
    UnknownSymbol { pos: usize, name: String },
    #[error("shape error at position {pos}: {msg}")]
    Shape { pos: usize, msg: String },
}

/// Square matrix of polynomials, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyMatrix {
    pub n: usize,
    pub entries: Vec<StarPoly>,
}

impl PolyMatrix {
    pub fn identity(n: usize, diag: &StarPoly) -> Self {
        let mut entries = vec![StarPoly::zero(); n * n];
        for i in 0..n {
            entries[i * n + i] = diag.clone();
        }
        PolyMatrix { n, entries }
    }

    pub fn get(&self, i: usize, j: usize) -> &StarPoly {
        &self.entries[i * self.n + j]
    }

    fn zip(&self, o: &PolyMatrix, f: impl Fn(&StarPoly, &StarPoly) -> StarPoly) -> PolyMatrix {
        PolyMatrix {
            n: self.n,
            entries: self.entries.iter().zip(&o.entries).map(|(x, y)| f(x, y)).collect(),
        }
    }

    pub fn mul(&self, o: &PolyMatrix) -> PolyMatrix {
        let n = self.n;
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = StarPoly::zero();
                for k in 0..n {
                    acc = acc.add(&self.get(i, k).mul(o.get(k, j)));
                }
                entries.push(acc);
            }
        }
        PolyMatrix { n, entries }
    }

    pub fn star(&self) -> PolyMatrix {
        let n = self.n;
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(self.get(j, i).star());
            }
        }
        PolyMatrix { n, entries }
    }
}

/// A parsed value: a polynomial or a square matrix of polynomials.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Value {
    Scalar(StarPoly),
    Matrix(PolyMatrix),
}

impl Value {
    fn star(&self) -> Value {
        match self {
            Value::Scalar(p) => Value::Scalar(p.star()),
            Value::Matrix(m) => Value::Matrix(m.star()),
        }
    }
}

/// Named values available to expressions.
pub type Env = BTreeMap<String, Value>;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(BigRational),
    Ident(String),
    Plus,
    Minus,
    Dot,
    Star,
    Caret,
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        let start = i;
        let single = match ch {
            '+' => Some(Tok::Plus),
            '-' | '−' => Some(Tok::Minus),
            '·' | '.' | '⋅' => Some(Tok::Dot),
            '*' | '∗' => Some(Tok::Star),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBrack),
            ']' => Some(Tok::RBrack),
            ',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(t) = single {
            out.push((start, t));
            i += 1;
        } else if ch.is_whitespace() {
            i += 1;
        } else if ch.is_ascii_digit() {
            let mut j = i;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            let num: BigInt = chars[i..j].iter().collect::<String>().parse().expect("digits");
            let mut den = BigInt::from(1);
            if j + 1 < chars.len() && chars[j] == '/' && chars[j + 1].is_ascii_digit() {
                let mut k = j + 1;
                while k < chars.len() && chars[k].is_ascii_digit() {
                    k += 1;
                }
                den = chars[j + 1..k].iter().collect::<String>().parse().expect("digits");
                if den.is_zero() {
                    return Err(ParseError::Syntax { pos: j, msg: "zero denominator".into() });
                }
                j = k;
            }
            out.push((start, Tok::Num(BigRational::new(num, den))));
            i = j;
        } else if ch.is_alphabetic() || ch == '_' {
            let mut j = i;
            while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                j += 1;
            }
            out.push((start, Tok::Ident(chars[i..j].iter().collect())));
            i = j;
        } else {
            return Err(ParseError::Syntax { pos: i, msg: format!("unexpected character `{ch}`") });
        }
    }
    Ok(out)
}

struct Parser<'e> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    env: &'e Env,
}

impl<'e> Parser<'e> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax { pos: self.here(), msg: msg.into() })
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&t) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn expr(&mut self) -> Result<Value, ParseError> {
        let mut acc = self.term()?;
        loop {
            let pos = self.here();
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    acc = combine_add(acc, rhs, false, pos)?;
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    acc = combine_add(acc, rhs, true, pos)?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn starts_factor(&self) -> bool {
        matches!(
            self.peek(),
            Some(Tok::Num(_)) | Some(Tok::Ident(_)) | Some(Tok::LParen) | Some(Tok::LBrack)
        )
    }

    fn term(&mut self) -> Result<Value, ParseError> {
        let mut acc = self.factor()?;
        loop {
            let pos = self.here();
            if self.peek() == Some(&Tok::Dot) {
                self.pos += 1;
                let rhs = self.factor()?;
                acc = combine_mul(acc, rhs, pos)?;
            } else if self.starts_factor() {
                let rhs = self.factor()?;
                acc = combine_mul(acc, rhs, pos)?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn factor(&mut self) -> Result<Value, ParseError> {
        match self.peek() {
            Some(Tok::Minus) => {
                let pos = self.here();
                self.pos += 1;
                let v = self.factor()?;
                combine_mul(Value::Scalar(StarPoly::constant(GaussRat::from_int(-1))), v, pos)
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                self.factor()
            }
            _ => {
                let mut v = self.atom()?;
                loop {
                    match self.peek() {
                        Some(Tok::Star) => {
                            self.pos += 1;
                            v = v.star();
                        }
                        Some(Tok::Caret) => {
                            let pos = self.here();
                            self.pos += 1;
                            let e = match self.peek() {
                                Some(Tok::Num(r)) if r.is_integer() => r.to_integer(),
                                _ => return self.err("expected a nonnegative integer exponent"),
                            };
                            self.pos += 1;
                            let e: u32 = e.try_into().map_err(|_| ParseError::Syntax {
                                pos,
                                msg: "exponent out of range".into(),
                            })?;
                            let base = v.clone();
                            v = match &base {
                                Value::Scalar(_) => Value::Scalar(StarPoly::one()),
                                Value::Matrix(m) => Value::Matrix(PolyMatrix::identity(m.n, &StarPoly::one())),
                            };
                            for _ in 0..e {
                                v = combine_mul(v, base.clone(), pos)?;
                            }
                        }
                        _ => return Ok(v),
                    }
                }
            }
        }
    }

    fn atom(&mut self) -> Result<Value, ParseError> {
        let pos = self.here();
        match self.peek().cloned() {
            Some(Tok::Num(r)) => {
                self.pos += 1;
                Ok(Value::Scalar(StarPoly::constant(GaussRat::real(r))))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                let v = match name.as_str() {
                    "a" => StarPoly::letter(Letter::A),
                    "b" => StarPoly::letter(Letter::B),
                    "s" => StarPoly::sin(),
                    "c" => StarPoly::cos(),
                    "i" => StarPoly::constant(GaussRat::i()),
                    _ => {
                        return self
                            .env
                            .get(&name)
                            .cloned()
                            .ok_or(ParseError::UnknownSymbol { pos, name })
                    }
                };
                Ok(Value::Scalar(v))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let v = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(v)
            }
            Some(Tok::LBrack) => self.matrix(),
            _ => self.err("expected an operand"),
        }
    }

    fn matrix(&mut self) -> Result<Value, ParseError> {
        let pos = self.here();
        self.expect(Tok::LBrack, "`[`")?;
        let mut rows: Vec<Vec<StarPoly>> = Vec::new();
        loop {
            self.expect(Tok::LBrack, "`[` opening a matrix row")?;
            let mut row = Vec::new();
            loop {
                match self.expr()? {
                    Value::Scalar(p) => row.push(p),
                    Value::Matrix(_) => {
                        return Err(ParseError::Shape { pos, msg: "nested matrices are not supported".into() })
                    }
                }
                match self.peek() {
                    Some(Tok::Comma) => self.pos += 1,
                    _ => break,
                }
            }
            self.expect(Tok::RBrack, "`]` closing a matrix row")?;
            rows.push(row);
            match self.peek() {
                Some(Tok::Comma) => self.pos += 1,
                _ => break,
            }
        }
        self.expect(Tok::RBrack, "`]` closing the matrix")?;
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(ParseError::Shape { pos, msg: "matrix literal must be square".into() });
        }
        Ok(Value::Matrix(PolyMatrix { n, entries: rows.into_iter().flatten().collect() }))
    }
}

fn combine_add(x: Value, y: Value, subtract: bool, pos: usize) -> Result<Value, ParseError> {
    let op = |p: &StarPoly, q: &StarPoly| if subtract { p.sub(q) } else { p.add(q) };
    Ok(match (x, y) {
        (Value::Scalar(p), Value::Scalar(q)) => Value::Scalar(op(&p, &q)),
        (Value::Matrix(m), Value::Matrix(k)) => {
            if m.n != k.n {
                return Err(ParseError::Shape { pos, msg: format!("cannot add {0}x{0} and {1}x{1}", m.n, k.n) });
            }
            Value::Matrix(m.zip(&k, op))
        }
        (Value::Matrix(m), Value::Scalar(q)) => {
            Value::Matrix(m.zip(&PolyMatrix::identity(m.n, &q), op))
        }
        (Value::Scalar(p), Value::Matrix(k)) => {
            Value::Matrix(PolyMatrix::identity(k.n, &p).zip(&k, op))
        }
    })
}

fn combine_mul(x: Value, y: Value, pos: usize) -> Result<Value, ParseError> {
    Ok(match (x, y) {
        (Value::Scalar(p), Value::Scalar(q)) => Value::Scalar(p.mul(&q)),
        (Value::Matrix(m), Value::Matrix(k)) => {
            if m.n != k.n {
                return Err(ParseError::Shape {
                    pos,
                    msg: format!("cannot multiply {0}x{0} and {1}x{1}", m.n, k.n),
                });
            }
            Value::Matrix(m.mul(&k))
        }
        (Value::Matrix(m), Value::Scalar(q)) => {
            Value::Matrix(PolyMatrix { n: m.n, entries: m.entries.iter().map(|e| e.mul(&q)).collect() })
        }
        (Value::Scalar(p), Value::Matrix(k)) => {
            Value::Matrix(PolyMatrix { n: k.n, entries: k.entries.iter().map(|e| p.mul(e)).collect() })
        }
    })
}

/// Parses an expression that may denote a polynomial or a matrix.
pub fn parse_value(src: &str, env: &Env) -> Result<Value, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, end: src.chars().count(), env };
    let v = p.expr()?;
    if p.pos != p.toks.len() {
        return p.err("unexpected trailing input");
    }
    Ok(v)
}

/// Parses a polynomial expression in the built-in symbols.
pub fn parse(src: &str) -> Result<StarPoly, ParseError> {
    parse_with(src, &Env::new())
}

/// Parses a polynomial expression with additional named values.
pub fn parse_with(src: &str, env: &Env) -> Result<StarPoly, ParseError> {
    match parse_value(src, env)? {
        Value::Scalar(p) => Ok(p),
        Value::Matrix(_) => Err(ParseError::Shape { pos: 0, msg: "expected a polynomial, found a matrix".into() }),
    }
}
