//! Acceptance suite: one pass/fail line per criterion, nonzero exit on any
//! failure.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use balk1::balanced::{
    check_balanced, make_c, random_balanced_pair, unitalization_pair, validate_path, BalancedPair, HomotopyKind,
    HomotopyPath,
};
use balk1::loops::{example_4_1_spec, example_4_1_subbundle, MatrixLoop, ScalarSpec, SymbolPair};
use balk1::numkern::{random_unitary, CMatrix};
use balk1::opmodel::{monomial_loop, verify_block_estimates, verify_theorem_h, TailCutoff};
use balk1::relindex::{prepare, sweep, toeplitz_index, EngineConfig, PipelineConfig, SweepRow};
use starpoly::{verify_identity_suite, Suite};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn symbolic_suite() -> Verdict {
    let start = Instant::now();
    let report = verify_identity_suite(&Suite::default_suite());
    let elapsed = start.elapsed();
    let uncertified: Vec<&str> =
        report.entries.iter().filter(|e| !(e.certified && e.replay_verified)).map(|e| e.name.as_str()).collect();
    // Scalar identities carry the degree bound; block entries are unbounded.
    let worst_scalar = report.entries.iter().filter(|e| !e.name.contains('[')).map(|e| e.degree_bound).max().unwrap_or(0);
    let pass = report.all_certified && uncertified.is_empty() && worst_scalar <= 8 && elapsed < Duration::from_secs(60);
    verdict(
        pass,
        format!(
            "{} claims, {} uncertified, scalar degree bound {worst_scalar} ≤ 8, {elapsed:.1?} < 60s",
            report.entries.len(),
            uncertified.len()
        ),
    )
}

fn path_residual(kind: HomotopyKind, pair: &BalancedPair) -> f64 {
    let base = match kind {
        HomotopyKind::LinearTrivial => BalancedPair::new(pair.a().clone(), pair.a().clone(), pair.tol()),
        _ => Ok(pair.clone()),
    };
    base.and_then(|b| HomotopyPath::new(kind, b, 101))
        .and_then(|p| validate_path(&p, 101, 1e-9))
        .map_or(f64::INFINITY, |r| r.max_residual)
}

fn homotopy_suites() -> Verdict {
    let mut pairs: Vec<BalancedPair> =
        (0..20).map(|i| random_balanced_pair(1 + i % 4, 1000 + i as u64).expect("random pair")).collect();
    let ex = example_4_1_spec(&ScalarSpec::Turns(1), &ScalarSpec::Turns(0), &ScalarSpec::default_gamma(), 64)
        .expect("example pair");
    for k in 0..ex.grid() {
        pairs.push(BalancedPair::new(ex.sigma1().sample(k).clone(), ex.sigma2().sample(k).clone(), 1e-10).expect("sample"));
    }
    let worst = pairs
        .iter()
        .flat_map(|p| HomotopyKind::ALL.map(|k| path_residual(k, p)))
        .fold(0.0, f64::max);
    verdict(worst <= 1e-9, format!("{} pairs × 4 kinds × 101 points, max residual {worst:.2e} ≤ 1e-9", pairs.len()))
}

fn iota_kappa_identity() -> Verdict {
    let worst = (0..20)
        .map(|i| {
            let u = random_unitary(1 + i % 5, 2000 + i as u64);
            let pair = BalancedPair::new(u.clone(), CMatrix::identity(u.rows()), 1e-10).expect("pair (u, 1)");
            make_c(&pair).dist(&u)
        })
        .fold(0.0, f64::max);
    verdict(worst <= 4.0 * f64::EPSILON, format!("20 unitaries, max ‖c(u,1) − u‖ = {worst:.2e}"))
}

fn engines_agree(rows: &[SweepRow]) -> bool {
    rows.iter().all(|r| {
        r.report.as_ref().is_some_and(|rep| {
            rep.runs.iter().all(|run| {
                [Some(run.definition_a), run.definition_b, run.swapped, Some(run.corollary), Some(run.global)]
                    .into_iter()
                    .flatten()
                    .all(|p| p.svd == p.fedosov)
            })
        })
    })
}

fn index_engines(rows: &[SweepRow]) -> Verdict {
    let cfg = EngineConfig::default();
    let mut notes = Vec::new();
    let mut pass = true;
    for n in [64, 128] {
        let shift = monomial_loop(1, 8 * n).map_err(Into::into).and_then(|l| toeplitz_index(&l, n, &cfg));
        match shift {
            Ok(e) => {
                pass &= e.svd.index == -1 && e.fedosov.index == -1;
                notes.push(format!("shift N={n}: {}/{}", e.svd.index, e.fedosov.index));
            }
            Err(e) => {
                pass = false;
                notes.push(format!("shift N={n}: {e}"));
            }
        }
        let u = MatrixLoop::constant(8 * n, &random_unitary(3, 77)).expect("constant loop");
        match toeplitz_index(&u, n, &cfg) {
            Ok(e) => {
                pass &= e.svd.index == 0 && e.fedosov.index == 0;
                notes.push(format!("unitary N={n}: {}/{}", e.svd.index, e.fedosov.index));
            }
            Err(e) => {
                pass = false;
                notes.push(format!("unitary N={n}: {e}"));
            }
        }
    }
    let agree = engines_agree(rows);
    pass &= agree;
    notes.push(format!("engines agree on all sweep runs: {agree}"));
    verdict(pass, notes.join(", "))
}

fn index_sweep(rows: &[SweepRow], elapsed: Duration) -> Verdict {
    let failures: Vec<String> = rows
        .iter()
        .filter(|r| !r.pass)
        .map(|r| format!("({},{}) {}", r.p, r.q, r.error.as_deref().unwrap_or("mismatch")))
        .collect();
    let pass = rows.len() == 25 && failures.is_empty() && elapsed < Duration::from_secs(300);
    verdict(
        pass,
        format!("{} cases at N = 128 and 256, {} failing {failures:?}, {elapsed:.1?} < 300s", rows.len(), failures.len()),
    )
}

fn choice_independence(rows: &[SweepRow]) -> Verdict {
    let mut checked = 0;
    let ok = rows.iter().all(|r| {
        r.report.as_ref().is_some_and(|rep| {
            rep.runs.iter().all(|run| {
                checked += 1;
                let (Some(b), Some(s)) = (run.definition_b, run.swapped) else {
                    return false;
                };
                let a = run.definition_a;
                a.svd == b.svd && a.fedosov == b.fedosov && s.svd == -a.svd && s.fedosov == -a.fedosov
            })
        })
    });
    verdict(ok, format!("{checked} runs: A-restricted = B-restricted and ind(B,A) = −ind(A,B)"))
}

fn theorem_h() -> Verdict {
    let eps = 0.1;
    let run = |modes: usize, cuts: &[usize]| -> Result<Vec<(usize, f64, f64, bool)>, String> {
        let grid = 8 * modes;
        let lp = example_4_1_spec(&ScalarSpec::Turns(1), &ScalarSpec::Turns(0), &ScalarSpec::default_gamma(), grid)
            .map_err(|e| e.to_string())?;
        let sp = SymbolPair::with_trivial_minus(lp).map_err(|e| e.to_string())?;
        let minus = MatrixLoop::constant(grid, &CMatrix::zeros(2, 2)).map_err(|e| e.to_string())?;
        let plus = example_4_1_subbundle(grid).map_err(|e| e.to_string())?;
        let cfg = PipelineConfig { eps, cutoff: Some(cuts[0]), ..PipelineConfig::default() }.with_split(minus, plus);
        let prep = prepare(&sp, modes, &cfg).map_err(|e| e.to_string())?;
        cuts.iter()
            .map(|&m| {
                let th = verify_theorem_h(&prep.a, &prep.b, &prep.split, TailCutoff(m), eps).map_err(|e| e.to_string())?;
                let be =
                    verify_block_estimates(&prep.a, &prep.b, &prep.split, TailCutoff(m), eps).map_err(|e| e.to_string())?;
                let worst_est = be.estimates.iter().map(|e| e.value / e.bound).fold(0.0, f64::max);
                Ok((m, th.max_difference().max(th.max_defect()), worst_est, th.pass && be.pass))
            })
            .collect()
    };
    match (run(128, &[64]), run(256, &[64, 128])) {
        (Ok(small), Ok(large)) => {
            let all_pass = small.iter().chain(&large).all(|r| r.3);
            let shrinks = large[1].1 <= large[0].1 + 0.02;
            let fmt = |n: usize, r: &(usize, f64, f64, bool)| format!("N={n} M={}: max {:.3} est/bound {:.2}", r.0, r.1, r.2);
            verdict(
                all_pass && shrinks,
                format!("{}; {}; {}; shrink M→2M {shrinks}", fmt(128, &small[0]), fmt(256, &large[0]), fmt(256, &large[1])),
            )
        }
        (Err(e), _) | (_, Err(e)) => verdict(false, e),
    }
}

fn unitalization() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut pass = true;
    for i in 0..20 {
        let u = random_unitary(1 + i % 4, 3000 + i as u64);
        for delta in [0.1, 0.2, 0.3] {
            match unitalization_pair(&u, delta).and_then(|p| check_balanced(p.a(), p.b(), 1e-8)) {
                Ok(r) => {
                    pass &= r.balanced;
                    worst = worst.max(r.max_rel1()).max(r.max_rel2());
                }
                Err(_) => pass = false,
            }
        }
    }
    verdict(pass, format!("20 unitaries × δ ∈ {{0.1, 0.2, 0.3}}, max residual {worst:.2e} ≤ 1e-8"))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let rows = sweep(-2..=2, -2..=2, 128);
    let sweep_time = start.elapsed();
    let results = [
        ("1 symbolic certificate suite", symbolic_suite()),
        ("2 homotopy suites", homotopy_suites()),
        ("3 c(u,1) = u", iota_kappa_identity()),
        ("4 index engines oracle", index_engines(&rows)),
        ("5 index theorem sweep", index_sweep(&rows, sweep_time)),
        ("6 choice independence and antisymmetry", choice_independence(&rows)),
        ("7 block decomposition estimates", theorem_h()),
        ("8 unitalization pairs", unitalization()),
    ];
    for (name, v) in &results {
        println!("[{}] {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    if results.iter().all(|(_, v)| v.pass) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
