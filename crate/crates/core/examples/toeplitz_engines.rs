//! Both index engines on truncated Toeplitz operators `T(z^k)` and on a
//! constant unitary symbol.

use balk1::loops::MatrixLoop;
use balk1::numkern::random_unitary;
use balk1::opmodel::monomial_loop;
use balk1::relindex::{toeplitz_index, EngineConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = EngineConfig::default();
    for n in [32, 64, 128] {
        for k in [-2, -1, 1, 2] {
            let e = toeplitz_index(&monomial_loop(k, 8 * n)?, n, &cfg)?;
            println!(
                "N = {n:>3} z^{k:<2}: svd {:>2} (ker {} coker {}) trace {:>2} (value {:.4})",
                e.svd.index, e.svd.kernel, e.svd.cokernel, e.fedosov.index, e.fedosov.value
            );
        }
        let u = MatrixLoop::constant(8 * n, &random_unitary(3, 5))?;
        let e = toeplitz_index(&u, n, &cfg)?;
        println!("N = {n:>3} unitary: svd {} trace {}", e.svd.index, e.fedosov.index);
    }
    Ok(())
}
