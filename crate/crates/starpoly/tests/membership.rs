use starpoly::{
    ideal_member, parse, verify_identity_suite, Membership, MembershipCertificate, MembershipSolver,
    RelationIdeal, SolverError, StarPoly, Suite,
};

fn canonical_unitary() -> StarPoly {
    parse("1 + b*·(a - b)").unwrap()
}

fn certify(target: &StarPoly, ideal: &RelationIdeal, bound: usize) -> MembershipCertificate {
    match ideal_member(target, ideal, bound).unwrap() {
        Membership::Certified(c) => c,
        Membership::NotFound { .. } => panic!("expected a certificate for {target}"),
    }
}

#[test]
fn unitary_at_bound_eight() {
    let w = canonical_unitary();
    let rel1 = RelationIdeal::rel1();
    let target = w.star().mul(&w).sub(&StarPoly::one());
    let cert = certify(&target, &rel1, 8);
    assert!(cert.verify(&rel1).unwrap());
    assert_eq!(cert.degree_bound, 8);
    assert!(cert.max_product_degree(&rel1).unwrap() <= 8);
}

#[test]
fn b_times_unitary_is_a_at_bound_six() {
    let w = canonical_unitary();
    let rel1 = RelationIdeal::rel1();
    let target = StarPoly::b().mul(&w).sub(&StarPoly::a());
    let cert = certify(&target, &rel1, 6);
    assert!(cert.verify(&rel1).unwrap());
}

#[test]
fn difference_is_not_demonstrated() {
    let target = parse("a - b").unwrap();
    let out = ideal_member(&target, &RelationIdeal::rel1(), 8).unwrap();
    assert_eq!(out, Membership::NotFound { degree_bound: 8 });
}

#[test]
fn one_sided_range_defect_product_is_not_demonstrated() {
    // (a - b)(1 - aa*) fails for the balanced pair a = e12, b = -e12, so no
    // bound can certify it.
    let target = parse("(a - b)·(1 - a·a*)").unwrap();
    let out = ideal_member(&target, &RelationIdeal::rel1(), 7).unwrap();
    assert!(matches!(out, Membership::NotFound { .. }));
}

#[test]
fn bound_below_target_degree_is_an_error() {
    let target = parse("a·a·a - b·b·b").unwrap();
    let err = ideal_member(&target, &RelationIdeal::rel1(), 2).unwrap_err();
    assert_eq!(err, SolverError::BoundBelowTarget { bound: 2, target: 3 });
}

#[test]
fn ceiling_is_enforced() {
    let mut solver = MembershipSolver::with_ceiling(RelationIdeal::rel1(), 100).unwrap();
    let target = parse("a*·a - b*·b").unwrap();
    assert!(matches!(solver.solve(&target, 8), Err(SolverError::CeilingExceeded { .. })));
}

#[test]
fn complex_and_central_targets() {
    let rel1 = RelationIdeal::rel1();
    let target = parse("(2 + 3 i)·s·c^3·(a*·a - b*·b)·b + (s^2 + c^2 - 1)·a").unwrap();
    let cert = certify(&target, &rel1, 5);
    assert!(cert.verify(&rel1).unwrap());
}

#[test]
fn certificate_json_roundtrip_replays() {
    let w = canonical_unitary();
    let rel1 = RelationIdeal::rel1();
    let target = w.mul(&w.star()).sub(&StarPoly::one());
    let cert = certify(&target, &rel1, 6);
    let text = cert.to_json_string();
    let back = MembershipCertificate::from_json_str(&text).unwrap();
    assert_eq!(back, cert);
    assert!(back.verify(&rel1).unwrap());
}

#[test]
fn tampered_certificate_fails_replay() {
    let w = canonical_unitary();
    let rel1 = RelationIdeal::rel1();
    let target = w.star().mul(&w).sub(&StarPoly::one());
    let mut cert = certify(&target, &rel1, 6);
    cert.decomposition.pop();
    assert!(!cert.verify(&rel1).unwrap());
    let mut cert = certify(&target, &rel1, 6);
    cert.degree_bound = 3;
    assert!(!cert.verify(&rel1).unwrap());
}

#[test]
fn bundled_suite_is_certified() {
    let report = verify_identity_suite(&Suite::default_suite());
    let failures: Vec<_> = report.entries.iter().filter(|e| !e.certified).map(|e| e.name.clone()).collect();
    assert!(failures.is_empty(), "uncertified: {failures:?}");
    assert!(report.all_certified);
}

#[test]
fn suite_with_difference_target_fails() {
    let suite = Suite::parse("identity diff\n  target: a = b\n  ideal: rel1\n  bound: 8\n").unwrap();
    let report = verify_identity_suite(&suite);
    assert!(!report.all_certified);
    assert!(report.entries[0].certificate.is_none());
}

#[test]
fn custom_ideal_generators() {
    let text = "identity comm\n  target: a·b·a - b·a·a\n  ideal: custom\n  generator: a·b - b·a\n";
    let report = verify_identity_suite(&Suite::parse(text).unwrap());
    assert!(report.all_certified);
    let cert = report.entries[0].certificate.as_ref().unwrap();
    assert!(!cert.decomposition.is_empty());
}

#[test]
fn rel2_intermediate_identity() {
    let target = parse("(1 - a*·a)·(1 - b*·b) - (1 - a*·a)·(1 - a*·a)").unwrap();
    let rel2 = RelationIdeal::rel2();
    let cert = certify(&target, &rel2, 6);
    assert!(cert.verify(&rel2).unwrap());
}
