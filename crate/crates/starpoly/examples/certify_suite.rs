//! Certifies the bundled identity suite and prints one line per claim.

use std::time::Instant;

use starpoly::{verify_identity_suite, Suite};

fn main() {
    let suite = Suite::default_suite();
    let start = Instant::now();
    let report = verify_identity_suite(&suite);
    for e in &report.entries {
        let terms = e.certificate.as_ref().map_or(0, |c| c.decomposition.len());
        let status = if e.certified { "certified" } else { "NOT CERTIFIED" };
        println!("{:<36} {:<4} bound {:<2} {:>5} terms  {status}", e.name, e.ideal, e.degree_bound, terms);
    }
    println!("all certified: {} ({:.2?})", report.all_certified, start.elapsed());
}
