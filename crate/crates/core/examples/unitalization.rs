//! Balanced pairs `(f(u)g(u), g(u))` built from random unitaries.

use balk1::balanced::{check_balanced, unitalization_pair, UnitalizationFunctions};
use balk1::numkern::{cis, random_unitary};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for delta in [0.1, 0.2, 0.3] {
        let fg = UnitalizationFunctions::new(delta)?;
        let edge = cis(fg.flat_angle());
        let minus_one = cis(std::f64::consts::PI);
        println!(
            "δ = {delta}: flat for |arg z| ≤ {:.4} (f = {:.3}), f(-1) = {:.3}, g(-1) = {:.3}",
            fg.flat_angle(),
            fg.f(edge),
            fg.f(minus_one),
            fg.g(minus_one)
        );
        for seed in 0..3 {
            let u = random_unitary(4, seed);
            let pair = unitalization_pair(&u, delta)?;
            let r = check_balanced(pair.a(), pair.b(), 1e-8)?;
            println!("  seed {seed}: balanced {} rel1 {:.1e} rel2 {:.1e}", r.balanced, r.max_rel1(), r.max_rel2());
        }
    }
    Ok(())
}
