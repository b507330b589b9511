//! Membership certificates: explicit decompositions `Σ k·u·g·v` that can be
//! replayed without the solver.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ideal::RelationIdeal;
use crate::parse::{parse, ParseError};
use crate::poly::{Monomial, StarPoly};
use crate::rational::GaussRat;

/// One summand `coefficient · left · g · right`, where `g` is generator
/// `generator` of the ideal or its adjoint.
#[derive(Clone, Debug, PartialEq)]
pub struct CertificateTerm {
    pub left: Monomial,
    pub generator: usize,
    pub adjoint: bool,
    pub right: Monomial,
    pub coefficient: GaussRat,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MembershipCertificate {
    pub target: StarPoly,
    pub ideal: String,
    pub degree_bound: usize,
    pub decomposition: Vec<CertificateTerm>,
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("certificate references generator {0}, which the ideal does not have")]
    MissingGenerator(usize),
    #[error("certificate was issued for ideal `{found}`, not `{expected}`")]
    IdealMismatch { expected: String, found: String },
    #[error("malformed certificate field: {0}")]
    Field(#[from] ParseError),
    #[error("malformed certificate JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl MembershipCertificate {
    /// Largest word length `|u| + deg g + |v|` over the summands.
    pub fn max_product_degree(&self, ideal: &RelationIdeal) -> Option<usize> {
        self.decomposition
            .iter()
            .map(|t| {
                ideal
                    .generator(t.generator, t.adjoint)
                    .map(|g| t.left.degree() + g.degree() + t.right.degree())
            })
            .try_fold(0, |acc, d| d.map(|d| acc.max(d)))
    }

    /// Sums the decomposition, reduced modulo the central relations.
    pub fn replay(&self, ideal: &RelationIdeal) -> Result<StarPoly, ReplayError> {
        let mut acc = StarPoly::zero();
        for t in &self.decomposition {
            let g = ideal.generator(t.generator, t.adjoint).ok_or(ReplayError::MissingGenerator(t.generator))?;
            let term = StarPoly::term(t.left.clone(), t.coefficient.clone())
                .mul(&g)
                .mul(&StarPoly::monomial(t.right.clone()));
            acc = acc.add(&term);
        }
        Ok(ideal.reduce_central(&acc))
    }

    /// Independent check: the replayed sum equals the target modulo the
    /// central relations and no summand exceeds the degree bound.
    pub fn verify(&self, ideal: &RelationIdeal) -> Result<bool, ReplayError> {
        if ideal.name() != self.ideal {
            return Err(ReplayError::IdealMismatch { expected: ideal.name().into(), found: self.ideal.clone() });
        }
        let within = self.max_product_degree(ideal).ok_or_else(|| {
            ReplayError::MissingGenerator(self.decomposition.iter().map(|t| t.generator).max().unwrap_or(0))
        })? <= self.degree_bound;
        Ok(within && self.replay(ideal)? == ideal.reduce_central(&self.target))
    }

    pub fn to_json(&self) -> CertificateJson {
        CertificateJson {
            target: self.target.to_string(),
            ideal: self.ideal.clone(),
            degree_bound: self.degree_bound,
            decomposition: self
                .decomposition
                .iter()
                .map(|t| TermJson {
                    left: t.left.to_string(),
                    generator: t.generator,
                    adjoint: t.adjoint,
                    right: t.right.to_string(),
                    coefficient: t.coefficient.to_string(),
                })
                .collect(),
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("certificate serializes")
    }

    pub fn from_json_str(s: &str) -> Result<Self, ReplayError> {
        let j: CertificateJson = serde_json::from_str(s)?;
        j.decode()
    }
}

/// Text form of a certificate: polynomials and monomials are stored in the
/// parser's syntax.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateJson {
    pub target: String,
    pub ideal: String,
    pub degree_bound: usize,
    pub decomposition: Vec<TermJson>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermJson {
    pub left: String,
    pub generator: usize,
    pub adjoint: bool,
    pub right: String,
    pub coefficient: String,
}

fn parse_monomial(s: &str) -> Result<Monomial, ParseError> {
    let p = parse(s)?;
    let first = p.terms().next().map(|(m, k)| (m.clone(), k.clone()));
    match first {
        Some((m, k)) if p.len() == 1 && k.is_one() => Ok(m),
        _ => Err(ParseError::Syntax { pos: 0, msg: format!("`{s}` is not a monomial") }),
    }
}

fn parse_scalar(s: &str) -> Result<GaussRat, ParseError> {
    let p = parse(s)?;
    if p.is_zero() {
        return Ok(GaussRat::zero());
    }
    let first = p.terms().next().map(|(m, k)| (m.clone(), k.clone()));
    match first {
        Some((m, k)) if p.len() == 1 && m.is_unit() => Ok(k),
        _ => Err(ParseError::Syntax { pos: 0, msg: format!("`{s}` is not a scalar") }),
    }
}

impl CertificateJson {
    pub fn decode(&self) -> Result<MembershipCertificate, ReplayError> {
        Ok(MembershipCertificate {
            target: parse(&self.target)?,
            ideal: self.ideal.clone(),
            degree_bound: self.degree_bound,
            decomposition: self
                .decomposition
                .iter()
                .map(|t| {
                    Ok(CertificateTerm {
                        left: parse_monomial(&t.left)?,
                        generator: t.generator,
                        adjoint: t.adjoint,
                        right: parse_monomial(&t.right)?,
                        coefficient: parse_scalar(&t.coefficient)?,
                    })
                })
                .collect::<Result<_, ParseError>>()?,
        })
    }
}
