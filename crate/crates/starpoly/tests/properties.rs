use proptest::prelude::*;
use starpoly::{
    parse, GaussRat, Letter, Membership, MembershipSolver, Monomial, RelationIdeal, StarPoly,
};

fn coefficient() -> impl Strategy<Value = GaussRat> {
    (-5i64..=5, 1i64..=4, -3i64..=3).prop_map(|(n, d, m)| {
        let re = GaussRat::from_ratio(n, d);
        let im = GaussRat::from_ratio(m, d);
        &re + &(&im * &GaussRat::i())
    })
}

fn word(max: usize) -> impl Strategy<Value = Vec<Letter>> {
    prop::collection::vec(prop::sample::select(Letter::ALL.to_vec()), 0..=max)
}

fn monomial(max: usize) -> impl Strategy<Value = Monomial> {
    (0u32..=2, 0u32..=2, word(max)).prop_map(|(sin, cos, word)| Monomial { sin, cos, word })
}

fn poly(max: usize) -> impl Strategy<Value = StarPoly> {
    prop::collection::vec((monomial(max), coefficient()), 0..5).prop_map(|terms| {
        let mut p = StarPoly::zero();
        for (m, k) in terms {
            p.add_term(m, k);
        }
        p
    })
}

/// A random element of rel1 together with the largest product degree used.
fn rel1_member() -> impl Strategy<Value = (StarPoly, usize)> {
    let summand = (monomial(1), 0usize..4, any::<bool>(), word(1), coefficient());
    prop::collection::vec(summand, 1..4).prop_map(|parts| {
        let rel1 = RelationIdeal::rel1();
        let mut acc = StarPoly::zero();
        let mut degree = 0;
        for (left, g, adjoint, right, k) in parts {
            let gen = rel1.generator(g, adjoint).unwrap();
            degree = degree.max(left.degree() + gen.degree() + right.len());
            let term = StarPoly::term(left, k).mul(&gen).mul(&StarPoly::monomial(Monomial::word(right)));
            acc = acc.add(&term);
        }
        (acc, degree)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn involution_laws(p in poly(3), q in poly(3)) {
        prop_assert_eq!(p.add(&q).star(), p.star().add(&q.star()));
        prop_assert_eq!(p.mul(&q).star(), q.star().mul(&p.star()));
        prop_assert_eq!(p.star().star(), p.clone());
    }

    #[test]
    fn print_then_parse_is_identity(p in poly(3)) {
        prop_assert_eq!(parse(&p.to_string()).unwrap(), p);
    }

    #[test]
    fn no_zero_coefficients_stored(p in poly(3), q in poly(3)) {
        let r = p.mul(&q).sub(&q.mul(&p)).add(&p);
        prop_assert!(r.terms().all(|(_, k)| !k.is_zero()));
    }

    #[test]
    fn members_are_certified_within_their_degree((target, degree) in rel1_member()) {
        let rel1 = RelationIdeal::rel1();
        let bound = degree.max(target.degree());
        let mut solver = MembershipSolver::new(rel1.clone()).unwrap();
        let out = solver.solve(&target, bound).unwrap();
        let cert = match out {
            Membership::Certified(c) => c,
            Membership::NotFound { .. } => return Err(TestCaseError::fail("member not certified")),
        };
        prop_assert!(cert.verify(&rel1).unwrap());
        prop_assert!(cert.max_product_degree(&rel1).unwrap() <= bound);
        for t in &cert.decomposition {
            let g = rel1.generator(t.generator, t.adjoint).unwrap();
            prop_assert!(t.left.degree() + g.degree() + t.right.degree() <= bound);
        }
    }

    #[test]
    fn certificates_are_deterministic((target, degree) in rel1_member()) {
        let rel1 = RelationIdeal::rel1();
        let bound = degree.max(target.degree());
        let first = MembershipSolver::new(rel1.clone()).unwrap().solve(&target, bound).unwrap();
        let second = MembershipSolver::new(rel1).unwrap().solve(&target, bound).unwrap();
        prop_assert_eq!(first, second);
    }
}
