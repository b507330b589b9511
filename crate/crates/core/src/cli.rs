//! Command-line front end. Exit codes: 0 pass, 1 verification failure,
//! 2 usage or I/O error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use starpoly::{verify_identity_suite, Suite};

use crate::balanced::{check_balanced, unitalization_pair, validate_path, HomotopyKind, HomotopyPath, BalancedPair, PairJson};
use crate::loops::{example_4_1_spec, example_4_1_subbundle, LoopJson, LoopPairJson, MatrixLoop, ScalarSpec, SymbolPair, SymbolPairJson};
use crate::numkern::{random_unitary, CMatrix};
use crate::relindex::{sweep, sweep_csv, verify_index_theorem, PipelineConfig};

/// Process outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
    Usage,
}

impl Outcome {
    pub fn code(self) -> u8 {
        match self {
            Outcome::Pass => 0,
            Outcome::Fail => 1,
            Outcome::Usage => 2,
        }
    }

    fn from_pass(pass: bool) -> Self {
        if pass {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {msg}")]
    Input { path: PathBuf, msg: String },
}

#[derive(Parser, Debug)]
#[command(name = "balk1", version, about = "Balanced pairs, matrix loops and relative Fredholm indices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    LinearTrivial,
    Swap,
    Adjoint,
    IotaKappa,
}

impl From<KindArg> for HomotopyKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::LinearTrivial => HomotopyKind::LinearTrivial,
            KindArg::Swap => HomotopyKind::Swap,
            KindArg::Adjoint => HomotopyKind::Adjoint,
            KindArg::IotaKappa => HomotopyKind::IotaKappa,
        }
    }
}

/// Sweep ranges `p0:p1,q0:q1`, inclusive.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepSpec {
    pub p: (i64, i64),
    pub q: (i64, i64),
}

impl FromStr for SweepSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let range = |r: &str| -> Result<(i64, i64), String> {
            let (a, b) = r.split_once(':').ok_or_else(|| format!("range `{r}` is not lo:hi"))?;
            let lo: i64 = a.trim().parse().map_err(|_| format!("bad bound `{a}`"))?;
            let hi: i64 = b.trim().parse().map_err(|_| format!("bad bound `{b}`"))?;
            if lo > hi {
                return Err(format!("empty range {lo}:{hi}"));
            }
            Ok((lo, hi))
        };
        let (p, q) = s.split_once(',').ok_or_else(|| "expected p0:p1,q0:q1".to_string())?;
        Ok(SweepSpec { p: range(p)?, q: range(q)? })
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Certify every claim of an identity suite by ideal membership.
    VerifyIdentities {
        /// Suite file; the bundled suite when absent.
        suite: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the balance relations of a matrix pair.
    CheckPair {
        pair: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check that a homotopy stays balanced; accepts a matrix pair or a
    /// loop pair, checked at every loop sample.
    Homotopy {
        #[arg(long, value_enum)]
        kind: KindArg,
        pair: PathBuf,
        #[arg(long, default_value_t = 101)]
        grid: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the rotated pair of loops from `α = e^{4pit}`, `β = e^{4qit}`
    /// and `γ = 1 − depth·sin(2t)`.
    Example41 {
        #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
        alpha_turns: i64,
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        beta_turns: i64,
        #[arg(long, default_value_t = 0.5)]
        gamma_depth: f64,
        #[arg(long, default_value_t = 256)]
        grid: usize,
        /// Write a symbol pair (with a trivial minus component and the
        /// sub-bundle split) instead of a loop pair.
        #[arg(long)]
        symbol: bool,
        /// Also write `t, |det c|, arg det c` as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the analytic and topological indices of a symbol pair, or
    /// sweep the flagship family.
    Index {
        symbol: Option<PathBuf>,
        #[arg(long, default_value_t = 128)]
        modes: usize,
        #[arg(long)]
        tail_cutoff: Option<usize>,
        #[arg(long, default_value_t = 0.045)]
        eps: f64,
        /// `p0:p1,q0:q1`; writes one CSV row per case.
        #[arg(long, allow_hyphen_values = true)]
        sweep: Option<SweepSpec>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Balanced pair `(f(u)g(u), g(u))` from a random unitary.
    Unitalize {
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long, default_value_t = 0.2)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Symbol pair file for `index`, with an optional projection-valued split
/// symbol.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SymbolFile {
    #[serde(flatten)]
    pub symbol: SymbolPairJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitFile>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SplitFile {
    pub minus: LoopJson,
    pub plus: LoopJson,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PairInput {
    Matrix(PairJson),
    Loop(LoopPairJson),
}

fn positive(name: &str, x: f64) -> Result<(), CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--{name} must be positive, got {x}")))
    }
}

fn input(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })
}

fn check_input(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Io { path: path.into(), source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such file") })
    }
}

fn check_output(path: Option<&Path>) -> Result<(), CliError> {
    if let Some(p) = path {
        let parent = p.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
        if !parent.is_dir() {
            return Err(CliError::Io {
                path: p.into(),
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "output directory does not exist"),
            });
        }
    }
    Ok(())
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|source| CliError::Io { path: p.into(), source }),
        None => {
            // A closed pipe downstream is not an error of ours.
            match writeln!(std::io::stdout().lock(), "{text}") {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                    Err(CliError::Io { path: "<stdout>".into(), source: e })
                }
                _ => Ok(()),
            }
        }
    }
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    serde_json::from_str(&input(path)?).map_err(|e| CliError::Input { path: path.into(), msg: e.to_string() })
}

fn bad_input(path: &Path, e: impl ToString) -> CliError {
    CliError::Input { path: path.into(), msg: e.to_string() }
}

fn json<T: Serialize>(x: &T) -> String {
    serde_json::to_string_pretty(x).expect("report serializes")
}

/// Applies `BALK1_THREADS` to the rayon pool and to the dense kernels.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("BALK1_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Usage(format!("BALK1_THREADS must be a positive integer, got `{v}`")))?;
    // A second call in the same process finds the pool already built.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    faer::set_global_parallelism(if n == 1 { faer::Par::Seq } else { faer::Par::rayon(n) });
    Ok(())
}

#[derive(Serialize)]
struct LoopHomotopyReport {
    kind: HomotopyKind,
    loop_samples: usize,
    grid: usize,
    tol: f64,
    max_residual: f64,
    worst_sample: usize,
    balanced: bool,
}

fn cmd_verify_identities(suite: Option<&Path>, out: Option<&Path>) -> Result<Outcome, CliError> {
    let suite = match suite {
        Some(p) => Suite::parse(&input(p)?).map_err(|e| bad_input(p, e))?,
        None => Suite::default_suite(),
    };
    let report = verify_identity_suite(&suite);
    for e in &report.entries {
        eprintln!("{:<44} {}", e.name, if e.certified && e.replay_verified { "certified" } else { "NOT certified" });
    }
    emit(out, &report.to_json_string())?;
    Ok(Outcome::from_pass(report.all_certified))
}

fn cmd_check_pair(pair: &Path, tol: f64, out: Option<&Path>) -> Result<Outcome, CliError> {
    let pj: PairJson = parse_json(pair)?;
    let (a, b) = pj.matrices().map_err(|e| bad_input(pair, e))?;
    let report = check_balanced(&a, &b, tol).map_err(|e| bad_input(pair, e))?;
    emit(out, &json(&report))?;
    Ok(Outcome::from_pass(report.balanced))
}

fn cmd_homotopy(kind: HomotopyKind, pair: &Path, grid: usize, tol: f64, out: Option<&Path>) -> Result<Outcome, CliError> {
    match parse_json::<PairInput>(pair)? {
        PairInput::Matrix(pj) => {
            let base = pj.decode().map_err(|e| bad_input(pair, e))?;
            let path = HomotopyPath::new(kind, base, grid).map_err(|e| bad_input(pair, e))?;
            let report = validate_path(&path, grid, tol).map_err(|e| bad_input(pair, e))?;
            emit(out, &json(&report))?;
            Ok(Outcome::from_pass(report.balanced))
        }
        PairInput::Loop(lj) => {
            let lp = lj.decode().map_err(|e| bad_input(pair, e))?;
            let worst = (0..lp.grid())
                .into_par_iter()
                .map(|k| {
                    let base = BalancedPair::new(lp.sigma1().sample(k).clone(), lp.sigma2().sample(k).clone(), lp.tol())?;
                    let path = HomotopyPath::new(kind, base, grid)?;
                    Ok((k, validate_path(&path, grid, tol)?.max_residual))
                })
                .collect::<Result<Vec<_>, crate::balanced::BalancedError>>()
                .map_err(|e| bad_input(pair, e))?
                .into_iter()
                .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
            let report = LoopHomotopyReport {
                kind,
                loop_samples: lp.grid(),
                grid,
                tol,
                max_residual: worst.1,
                worst_sample: worst.0,
                balanced: worst.1 <= tol,
            };
            emit(out, &json(&report))?;
            Ok(Outcome::from_pass(report.balanced))
        }
    }
}

/// The sub-bundle split of the rotated example, as a file section.
pub fn example_split(grid: usize) -> Result<SplitFile, crate::loops::LoopError> {
    let plus = example_4_1_subbundle(grid)?;
    let minus = MatrixLoop::constant(grid, &CMatrix::zeros(2, 2))?;
    Ok(SplitFile { minus: minus.to_json(), plus: plus.to_json() })
}

#[allow(clippy::too_many_arguments)]
fn cmd_example41(
    p: i64,
    q: i64,
    depth: f64,
    grid: usize,
    symbol: bool,
    csv: Option<&Path>,
    out: Option<&Path>,
) -> Result<Outcome, CliError> {
    if !(0.0..1.0).contains(&depth) || depth == 0.0 {
        return Err(CliError::Usage(format!("--gamma-depth must lie in (0, 1), got {depth}")));
    }
    let build = || -> Result<(crate::loops::LoopPair, Option<SplitFile>), crate::loops::LoopError> {
        let lp = example_4_1_spec(&ScalarSpec::Turns(p), &ScalarSpec::Turns(q), &ScalarSpec::SineDip(depth), grid)?;
        let split = if symbol { Some(example_split(grid)?) } else { None };
        Ok((lp, split))
    };
    let (lp, split) = build().map_err(|e| CliError::Usage(e.to_string()))?;
    if let Some(path) = csv {
        emit(Some(path), &lp.det_c_csv())?;
    }
    let text = if symbol {
        let sp = SymbolPair::with_trivial_minus(lp).map_err(|e| CliError::Usage(e.to_string()))?;
        json(&SymbolFile { symbol: sp.to_json(), split })
    } else {
        json(&lp.to_json())
    };
    emit(out, &text)?;
    Ok(Outcome::Pass)
}

fn cmd_index(
    symbol: Option<&Path>,
    modes: usize,
    cutoff: Option<usize>,
    eps: f64,
    sweep_spec: Option<&SweepSpec>,
    out: Option<&Path>,
) -> Result<Outcome, CliError> {
    if modes < 8 {
        return Err(CliError::Usage(format!("--modes must be at least 8, got {modes}")));
    }
    if let Some(m) = cutoff {
        if m >= modes {
            return Err(CliError::Usage(format!("--tail-cutoff {m} must be below --modes {modes}")));
        }
    }
    if let Some(s) = sweep_spec {
        if symbol.is_some() {
            return Err(CliError::Usage("give either a symbol file or --sweep".into()));
        }
        let rows = sweep(s.p.0..=s.p.1, s.q.0..=s.q.1, modes);
        for r in &rows {
            if let Some(e) = &r.error {
                eprintln!("p={} q={}: {e}", r.p, r.q);
            }
        }
        emit(out, sweep_csv(&rows).trim_end())?;
        return Ok(Outcome::from_pass(rows.iter().all(|r| r.pass)));
    }
    let path = symbol.ok_or_else(|| CliError::Usage("index needs a symbol file or --sweep".into()))?;
    let file: SymbolFile = parse_json(path)?;
    let sp = file.symbol.decode().map_err(|e| bad_input(path, e))?;
    let mut cfg = PipelineConfig { eps, cutoff, ..PipelineConfig::default() };
    if let Some(s) = &file.split {
        let minus = s.minus.decode().map_err(|e| bad_input(path, e))?;
        let plus = s.plus.decode().map_err(|e| bad_input(path, e))?;
        cfg = cfg.with_split(minus, plus);
    }
    match verify_index_theorem(&sp, modes, &cfg) {
        Ok(report) => {
            eprintln!(
                "analytic (svd) {} analytic (trace) {} topological {} -> {}",
                report.analytic_svd,
                report.analytic_fedosov,
                report.topological,
                if report.pass { "pass" } else { "FAIL" }
            );
            emit(out, &report.to_json_string())?;
            Ok(Outcome::from_pass(report.pass))
        }
        Err(e) => {
            eprintln!("{e}");
            Ok(Outcome::Fail)
        }
    }
}

fn cmd_unitalize(dim: usize, delta: f64, seed: u64, tol: f64, out: Option<&Path>) -> Result<Outcome, CliError> {
    if dim == 0 {
        return Err(CliError::Usage("--dim must be positive".into()));
    }
    let u = random_unitary(dim, seed);
    let pair = unitalization_pair(&u, delta).map_err(|e| CliError::Usage(e.to_string()))?;
    let report = check_balanced(pair.a(), pair.b(), tol).map_err(|e| CliError::Usage(e.to_string()))?;
    eprintln!("max relation residual {:.3e}", report.max_rel1());
    emit(out, &json(&pair.to_json()))?;
    Ok(Outcome::from_pass(report.balanced))
}

/// Validates the configuration and runs one command.
pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::VerifyIdentities { suite, out } => {
            if let Some(s) = suite {
                check_input(s)?;
            }
            check_output(out.as_deref())?;
            cmd_verify_identities(suite.as_deref(), out.as_deref())
        }
        Command::CheckPair { pair, tol, out } => {
            positive("tol", *tol)?;
            check_input(pair)?;
            check_output(out.as_deref())?;
            cmd_check_pair(pair, *tol, out.as_deref())
        }
        Command::Homotopy { kind, pair, grid, tol, out } => {
            positive("tol", *tol)?;
            if *grid < 2 {
                return Err(CliError::Usage("--grid must be at least 2".into()));
            }
            check_input(pair)?;
            check_output(out.as_deref())?;
            cmd_homotopy((*kind).into(), pair, *grid, *tol, out.as_deref())
        }
        Command::Example41 { alpha_turns, beta_turns, gamma_depth, grid, symbol, csv, out } => {
            if *grid < 8 {
                return Err(CliError::Usage("--grid must be at least 8".into()));
            }
            check_output(csv.as_deref())?;
            check_output(out.as_deref())?;
            cmd_example41(*alpha_turns, *beta_turns, *gamma_depth, *grid, *symbol, csv.as_deref(), out.as_deref())
        }
        Command::Index { symbol, modes, tail_cutoff, eps, sweep, out } => {
            positive("eps", *eps)?;
            if let Some(s) = symbol {
                check_input(s)?;
            }
            check_output(out.as_deref())?;
            cmd_index(symbol.as_deref(), *modes, *tail_cutoff, *eps, sweep.as_ref(), out.as_deref())
        }
        Command::Unitalize { dim, delta, seed, tol, out } => {
            positive("tol", *tol)?;
            positive("delta", *delta)?;
            check_output(out.as_deref())?;
            cmd_unitalize(*dim, *delta, *seed, *tol, out.as_deref())
        }
    }
}

/// Parses arguments, runs and maps the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { Outcome::Usage.code() } else { 0 });
        }
    };
    let outcome = configure_threads().and_then(|()| run(&cli)).unwrap_or_else(|e| {
        eprintln!("error: {e}");
        Outcome::Usage
    });
    ExitCode::from(outcome.code())
}
