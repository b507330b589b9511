//! Random balanced pairs: relation residuals, the canonical unitary, the
//! defect split and the four homotopies.

use balk1::balanced::{
    finite_split, make_c, random_balanced_pair, validate_path, verify_c_properties, BalancedPair, HomotopyKind,
    HomotopyPath, SPLIT_THRESHOLD,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for seed in 0..4 {
        let pair = random_balanced_pair(3, seed)?;
        let report = pair.report();
        let c = make_c(&pair);
        let props = verify_c_properties(&pair);
        let split = finite_split(&pair, SPLIT_THRESHOLD)?;
        println!(
            "seed {seed}: rel1 {:.1e} rel2 {:.1e} |det c| {:.6} c-properties {:.1e} defect rank {:.0}",
            report.max_rel1(),
            report.max_rel2(),
            c.det().norm(),
            props.max(),
            split.p1.trace().re,
        );
        for kind in HomotopyKind::ALL {
            let base = match kind {
                HomotopyKind::LinearTrivial => BalancedPair::new(pair.a().clone(), pair.a().clone(), pair.tol())?,
                _ => pair.clone(),
            };
            let r = validate_path(&HomotopyPath::new(kind, base, 101)?, 101, 1e-9)?;
            println!("  {kind:?}: max residual {:.2e} at t = {:.3}", r.max_residual, r.worst_t);
        }
    }
    Ok(())
}
