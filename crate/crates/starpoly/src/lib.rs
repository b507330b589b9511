//! Exact polynomials in the free *-algebra on two generators `a`, `b`,
//! extended by commuting self-adjoint symbols `s`, `c` subject to
//! `s² + c² = 1`, with certified bounded-degree membership in the ideals of
//! balanced-pair relations.
//!
//! ```
//! use starpoly::{ideal_member, parse, RelationIdeal};
//!
//! let w = parse("1 + b*·(a - b)").unwrap();
//! let target = parse("b").unwrap().mul(&w).sub(&parse("a").unwrap());
//! let rel1 = RelationIdeal::rel1();
//! let cert = ideal_member(&target, &rel1, 6).unwrap();
//! assert!(cert.certificate().unwrap().verify(&rel1).unwrap());
//! ```

pub mod certificate;
pub mod ideal;
pub mod parse;
pub mod poly;
pub mod rational;
pub mod solver;
pub mod suite;

pub use certificate::{CertificateJson, CertificateTerm, MembershipCertificate, ReplayError};
pub use ideal::RelationIdeal;
pub use parse::{parse, parse_value, parse_with, Env, ParseError, PolyMatrix, Value};
pub use poly::{Letter, Monomial, StarPoly};
pub use rational::GaussRat;
pub use solver::{default_bound, ideal_member, Membership, MembershipSolver, SolverError};
pub use suite::{verify_identity_suite, Suite, SuiteEntry, SuiteError, SuiteReport, DEFAULT_SUITE};
