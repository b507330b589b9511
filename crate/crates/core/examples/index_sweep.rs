//! Sweep of the flagship family, printed as CSV.

use balk1::relindex::{sweep, sweep_csv};

fn main() {
    let rows = sweep(-1..=1, -1..=1, 64);
    print!("{}", sweep_csv(&rows));
}
