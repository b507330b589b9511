//! Identity suites: a plain-text list of membership claims and the runner
//! that certifies them.
//!
//! ```text
//! # comment
//! let w = 1 + b*·(a - b)
//!
//! identity w_is_isometry
//!   target: w*·w = 1
//!   ideal: rel1
//!   bound: 6
//! ```
//!
//! `target` is an expression or an equation `lhs = rhs`; matrix-valued
//! targets expand into one claim per entry, named `name[i,j]`. `ideal` is
//! `rel1`, `rel2`, `none`, or `custom` followed by `generator:` lines.
//! `bound` is optional and defaults to two more than the target degree.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::certificate::CertificateJson;
use crate::ideal::RelationIdeal;
use crate::parse::{parse_value, parse_with, Env, ParseError, Value};
use crate::poly::StarPoly;
use crate::solver::{default_bound, Membership, MembershipSolver, SolverError};

/// Suite shipped with the crate: the balanced-pair identities.
pub const DEFAULT_SUITE: &str = include_str!("../suites/default.suite");

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("line {line}: {source}")]
    Expr { line: usize, source: ParseError },
}

#[derive(Clone, Debug, PartialEq)]
pub enum IdealSpec {
    Named(String),
    Custom(Vec<StarPoly>),
}

impl IdealSpec {
    fn build(&self) -> RelationIdeal {
        match self {
            IdealSpec::Named(n) => RelationIdeal::named(n).expect("validated at parse time"),
            IdealSpec::Custom(gens) => RelationIdeal::custom("custom", gens.clone()),
        }
    }
}

/// One membership claim.
#[derive(Clone, Debug, PartialEq)]
pub struct SuiteEntry {
    pub name: String,
    pub target: StarPoly,
    pub ideal: IdealSpec,
    pub bound: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Suite {
    pub entries: Vec<SuiteEntry>,
}

struct Stanza {
    line: usize,
    name: String,
    target: Option<(usize, String)>,
    ideal: Option<(usize, String)>,
    generators: Vec<(usize, String)>,
    bound: Option<(usize, String)>,
}

fn expr_err(line: usize) -> impl Fn(ParseError) -> SuiteError {
    move |source| SuiteError::Expr { line, source }
}

fn parse_target(src: &str, env: &Env, line: usize) -> Result<Value, SuiteError> {
    let mut sides = src.split('=');
    let lhs = sides.next().unwrap_or_default();
    let lv = parse_value(lhs, env).map_err(expr_err(line))?;
    match (sides.next(), sides.next()) {
        (None, _) => Ok(lv),
        (Some(rhs), None) => {
            let rv = parse_value(rhs, env).map_err(expr_err(line))?;
            let mut diff_env = env.clone();
            diff_env.insert("__lhs".into(), lv);
            diff_env.insert("__rhs".into(), rv);
            parse_value("__lhs - __rhs", &diff_env).map_err(expr_err(line))
        }
        _ => Err(SuiteError::Format { line, msg: "at most one `=` per target".into() }),
    }
}

impl Stanza {
    fn finish(self, env: &Env, out: &mut Vec<SuiteEntry>) -> Result<(), SuiteError> {
        let (tline, tsrc) = self
            .target
            .ok_or(SuiteError::Format { line: self.line, msg: format!("identity `{}` has no target", self.name) })?;
        let (iline, isrc) = self
            .ideal
            .ok_or(SuiteError::Format { line: self.line, msg: format!("identity `{}` has no ideal", self.name) })?;
        let ideal = match isrc.as_str() {
            "rel1" | "rel2" => IdealSpec::Named(isrc.clone()),
            "none" => IdealSpec::Custom(Vec::new()),
            "custom" => IdealSpec::Custom(
                self.generators
                    .iter()
                    .map(|(l, g)| parse_with(g, env).map_err(expr_err(*l)))
                    .collect::<Result<_, _>>()?,
            ),
            other => return Err(SuiteError::Format { line: iline, msg: format!("unknown ideal `{other}`") }),
        };
        if !self.generators.is_empty() && isrc != "custom" {
            return Err(SuiteError::Format { line: iline, msg: "`generator:` lines need `ideal: custom`".into() });
        }
        let bound = match self.bound {
            None => None,
            Some((l, b)) => Some(
                b.parse::<usize>()
                    .map_err(|_| SuiteError::Format { line: l, msg: format!("bad bound `{b}`") })?,
            ),
        };
        match parse_target(&tsrc, env, tline)? {
            Value::Scalar(target) => out.push(SuiteEntry { name: self.name, target, ideal, bound }),
            Value::Matrix(m) => {
                for i in 0..m.n {
                    for j in 0..m.n {
                        out.push(SuiteEntry {
                            name: format!("{}[{},{}]", self.name, i + 1, j + 1),
                            target: m.get(i, j).clone(),
                            ideal: ideal.clone(),
                            bound,
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

impl Suite {
    pub fn parse(text: &str) -> Result<Suite, SuiteError> {
        let mut env = Env::new();
        let mut entries = Vec::new();
        let mut open: Option<Stanza> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                if let Some(st) = open.take() {
                    st.finish(&env, &mut entries)?;
                }
                continue;
            }
            if let Some(rest) = content.strip_prefix("let ") {
                if let Some(st) = open.take() {
                    st.finish(&env, &mut entries)?;
                }
                let (name, expr) = rest
                    .split_once('=')
                    .ok_or(SuiteError::Format { line, msg: "expected `let name = expression`".into() })?;
                let name = name.trim();
                let valid = !name.is_empty()
                    && name.chars().all(|ch| ch.is_alphanumeric() || ch == '_')
                    && !name.starts_with(|ch: char| ch.is_ascii_digit());
                if !valid || ["a", "b", "s", "c", "i"].contains(&name) {
                    return Err(SuiteError::Format { line, msg: format!("invalid binding name `{name}`") });
                }
                let v = parse_value(expr, &env).map_err(expr_err(line))?;
                env.insert(name.to_string(), v);
            } else if let Some(rest) = content.strip_prefix("identity ") {
                if let Some(st) = open.take() {
                    st.finish(&env, &mut entries)?;
                }
                open = Some(Stanza {
                    line,
                    name: rest.trim().to_string(),
                    target: None,
                    ideal: None,
                    generators: Vec::new(),
                    bound: None,
                });
            } else {
                let st = open
                    .as_mut()
                    .ok_or(SuiteError::Format { line, msg: "field outside an `identity` stanza".into() })?;
                let (key, value) = content
                    .split_once(':')
                    .ok_or(SuiteError::Format { line, msg: "expected `field: value`".into() })?;
                let value = (line, value.trim().to_string());
                match key.trim() {
                    "target" => st.target = Some(value),
                    "ideal" => st.ideal = Some(value),
                    "generator" => st.generators.push(value),
                    "bound" => st.bound = Some(value),
                    other => return Err(SuiteError::Format { line, msg: format!("unknown field `{other}`") }),
                }
            }
        }
        if let Some(st) = open.take() {
            st.finish(&env, &mut entries)?;
        }
        Ok(Suite { entries })
    }

    pub fn default_suite() -> Suite {
        Suite::parse(DEFAULT_SUITE).expect("bundled suite parses")
    }
}

/// Outcome for one claim.
#[derive(Clone, Debug, Serialize)]
pub struct EntryReport {
    pub name: String,
    pub target: String,
    pub ideal: String,
    pub degree_bound: usize,
    pub certified: bool,
    pub replay_verified: bool,
    pub error: Option<String>,
    pub certificate: Option<CertificateJson>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub entries: Vec<EntryReport>,
    pub all_certified: bool,
}

impl SuiteReport {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Certifies every claim; each certificate is replayed independently of the
/// solver before the claim counts as certified.
pub fn verify_identity_suite(suite: &Suite) -> SuiteReport {
    let mut solvers: BTreeMap<String, MembershipSolver> = BTreeMap::new();
    let mut entries = Vec::new();
    for e in &suite.entries {
        let ideal = e.ideal.build();
        let bound = e.bound.unwrap_or_else(|| default_bound(&e.target));
        let key = match &e.ideal {
            IdealSpec::Named(n) => n.clone(),
            IdealSpec::Custom(_) => format!("custom#{}", e.name),
        };
        let outcome: Result<Membership, SolverError> = match solvers.get_mut(&key) {
            Some(s) => s.solve(&e.target, bound),
            None => MembershipSolver::new(ideal.clone()).and_then(|mut s| {
                let r = s.solve(&e.target, bound);
                solvers.insert(key.clone(), s);
                r
            }),
        };
        let mut report = EntryReport {
            name: e.name.clone(),
            target: e.target.to_string(),
            ideal: ideal.name().to_string(),
            degree_bound: bound,
            certified: false,
            replay_verified: false,
            error: None,
            certificate: None,
        };
        match outcome {
            Ok(Membership::Certified(cert)) => {
                let replay = cert.verify(&ideal);
                report.replay_verified = matches!(replay, Ok(true));
                report.certified = report.replay_verified;
                if let Err(err) = replay {
                    report.error = Some(err.to_string());
                }
                report.certificate = Some(cert.to_json());
            }
            Ok(Membership::NotFound { degree_bound }) => {
                report.error = Some(format!("membership not demonstrated up to degree {degree_bound}"));
            }
            Err(err) => report.error = Some(err.to_string()),
        }
        entries.push(report);
    }
    let all_certified = entries.iter().all(|e| e.certified);
    SuiteReport { entries, all_certified }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_target_over_empty_ideal() {
        let suite = Suite::parse("identity zero\n  target: 0\n  ideal: none\n").unwrap();
        let report = verify_identity_suite(&suite);
        assert!(report.all_certified);
        assert_eq!(report.entries[0].certificate.as_ref().unwrap().decomposition.len(), 0);
    }

    #[test]
    fn matrix_targets_expand() {
        let text = "let M = [[a, 0], [0, b]]\nidentity m\n  target: M - M\n  ideal: none\n";
        let suite = Suite::parse(text).unwrap();
        let names: Vec<_> = suite.entries.iter().map(|e| e.name.as_str()).collect();
        assert_eq!(names, ["m[1,1]", "m[1,2]", "m[2,1]", "m[2,2]"]);
    }

    #[test]
    fn format_errors_have_lines() {
        let err = Suite::parse("identity x\n  target: a\n  ideal: rel9\n").unwrap_err();
        assert!(matches!(err, SuiteError::Format { line: 3, .. }));
        let err = Suite::parse("let c = a\n").unwrap_err();
        assert!(matches!(err, SuiteError::Format { line: 1, .. }));
    }
}
