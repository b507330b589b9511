//! Analytic and topological indices of one flagship instance:
//! `cargo run --release --example index_theorem -- P Q [MODES]`.

use balk1::relindex::{flagship_grid, flagship_instance, verify_index_theorem};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, default: i64| args.get(i).map_or(Ok(default), |s| s.parse());
    let (p, q, modes) = (arg(0, 1)?, arg(1, -1)?, arg(2, 64)? as usize);
    let (sp, cfg) = flagship_instance(p, q, flagship_grid(modes))?;
    let report = verify_index_theorem(&sp, modes, &cfg)?;
    println!("p = {p}, q = {q}: topological {}", report.topological);
    for run in &report.runs {
        let values: Vec<String> = run.values().iter().map(|(name, v)| format!("{name}={v}")).collect();
        println!("N = {}: {}", run.modes, values.join(" "));
    }
    for (name, v) in &report.residuals {
        println!("  {name:<40} {v:.3e}");
    }
    println!("pass: {}", report.pass);
    Ok(())
}
