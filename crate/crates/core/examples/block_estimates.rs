//! Quantization of the rotated pair with the explicit sub-bundle split:
//! tail balance, the block decomposition bounds and the block estimates.

use balk1::loops::{example_4_1_spec, example_4_1_subbundle, MatrixLoop, ScalarSpec, SymbolPair};
use balk1::numkern::CMatrix;
use balk1::opmodel::{verify_block_estimates, verify_theorem_h, TailCutoff};
use balk1::relindex::{prepare, PipelineConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (modes, eps) = (128, 0.1);
    let grid = 8 * modes;
    let lp = example_4_1_spec(&ScalarSpec::Turns(1), &ScalarSpec::Turns(0), &ScalarSpec::default_gamma(), grid)?;
    let sp = SymbolPair::with_trivial_minus(lp)?;
    let minus = MatrixLoop::constant(grid, &CMatrix::zeros(2, 2))?;
    let cfg = PipelineConfig { eps, ..PipelineConfig::default() }.with_split(minus, example_4_1_subbundle(grid)?);
    let prep = prepare(&sp, modes, &cfg)?;
    println!("N = {modes}: tail balance {:.2e}, split ranks {:?}", prep.kbalance.max_final(), prep.split.ranks());
    for m in [modes / 4, modes / 2] {
        let th = verify_theorem_h(&prep.a, &prep.b, &prep.split, TailCutoff(m), eps)?;
        println!("M = {m}: pass {} difference {:.3e} defect {:.3e}", th.pass, th.max_difference(), th.max_defect());
        for e in verify_block_estimates(&prep.a, &prep.b, &prep.split, TailCutoff(m), eps)?.estimates {
            println!("  {:<24} {:.3e} < {:.3}", e.name, e.value, e.bound);
        }
    }
    Ok(())
}
