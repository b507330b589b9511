//! The rotated pair of loops from three scalar loops, the winding of
//! `det c` and the topological index of the flagship family.

use balk1::loops::{canonical_winding, example_4_1_spec, flagship_symbol, topo_index, ScalarSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pair = example_4_1_spec(&ScalarSpec::Turns(1), &ScalarSpec::Turns(0), &ScalarSpec::default_gamma(), 256)?;
    let (_, worst) = pair.max_residual()?;
    let (w, defect) = canonical_winding(&pair)?;
    println!("grid {}: relation residual {worst:.1e}, det c winds {} (residue {:.1e}), unitarity {defect:.1e}", pair.grid(), w.value, w.residue);
    println!("{:>3} {:>3} {:>6} {:>6} {:>6}", "p", "q", "w+", "w-", "index");
    for p in -2..=2 {
        for q in -2..=2 {
            let t = topo_index(&flagship_symbol(p, q, 256)?)?;
            println!("{p:>3} {q:>3} {:>6} {:>6} {:>6}", t.wind_plus, t.wind_minus, t.index);
        }
    }
    Ok(())
}
