//! The relation ideals of balanced pairs.

use crate::parse::parse;
use crate::poly::StarPoly;

/// A two-sided *-ideal given by generators, together with the central
/// relations imposed on `s`, `c`.
///
/// The ideal is closed under the involution: membership searches use each
/// generator and its adjoint.
#[derive(Clone, Debug, PartialEq)]
pub struct RelationIdeal {
    name: String,
    generators: Vec<StarPoly>,
    central_relations: Vec<StarPoly>,
}

fn circle() -> StarPoly {
    parse("s^2 + c^2 - 1").expect("circle relation parses")
}

fn parse_all(exprs: &[&str]) -> Vec<StarPoly> {
    exprs.iter().map(|e| parse(e).expect("built-in relation parses")).collect()
}

impl RelationIdeal {
    /// The four relations defining a balanced pair.
    pub fn rel1() -> Self {
        RelationIdeal {
            name: "rel1".into(),
            generators: parse_all(&[
                "a*·a - b*·b",
                "a·a* - b·b*",
                "a·(1 - a*·a) - b·(1 - b*·b)",
                "(1 - a·a*)·a - (1 - b·b*)·b",
            ]),
            central_relations: vec![circle()],
        }
    }

    /// The eight annihilation relations between the differences `a − b`,
    /// `a* − b*` and the four defects.
    ///
    /// Each defect is paired with each difference on the side where the
    /// product vanishes for every balanced pair: `(a − b)` meets the source
    /// defects `1 − a*a`, `1 − b*b` from the right and the range defects
    /// `1 − aa*`, `1 − bb*` from the left; the `a* − b*` relations are
    /// their adjoints.
    pub fn rel2() -> Self {
        RelationIdeal {
            name: "rel2".into(),
            generators: parse_all(&[
                "(a - b)·(1 - a*·a)",
                "(1 - a*·a)·(a* - b*)",
                "(1 - a·a*)·(a - b)",
                "(a* - b*)·(1 - a·a*)",
                "(a - b)·(1 - b*·b)",
                "(1 - b*·b)·(a* - b*)",
                "(1 - b·b*)·(a - b)",
                "(a* - b*)·(1 - b·b*)",
            ]),
            central_relations: vec![circle()],
        }
    }

    /// A user-defined ideal; the circle relation on `s`, `c` is always
    /// imposed.
    pub fn custom(name: impl Into<String>, generators: Vec<StarPoly>) -> Self {
        RelationIdeal { name: name.into(), generators, central_relations: vec![circle()] }
    }

    /// Looks up `rel1` or `rel2` by name.
    pub fn named(name: &str) -> Option<Self> {
        match name {
            "rel1" => Some(Self::rel1()),
            "rel2" => Some(Self::rel2()),
            _ => None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn generators(&self) -> &[StarPoly] {
        &self.generators
    }

    pub fn central_relations(&self) -> &[StarPoly] {
        &self.central_relations
    }

    pub fn generator(&self, index: usize, adjoint: bool) -> Option<StarPoly> {
        self.generators.get(index).map(|g| if adjoint { g.star() } else { g.clone() })
    }

    /// Normal form modulo the central relations.
    pub fn reduce_central(&self, p: &StarPoly) -> StarPoly {
        if self.central_relations.is_empty() {
            p.clone()
        } else {
            p.reduce_circle()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_counts() {
        assert_eq!(RelationIdeal::rel1().generators().len(), 4);
        assert_eq!(RelationIdeal::rel2().generators().len(), 8);
    }

    #[test]
    fn rel2_is_closed_under_adjoint() {
        let rel2 = RelationIdeal::rel2();
        for g in rel2.generators() {
            assert!(rel2.generators().contains(&g.star()));
        }
    }
}
