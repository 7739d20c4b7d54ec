//! `gmnl`: certify near-symmetric states, sweep the measurement angle,
//! batch-test random states and check classical bounds.
//!
//! Exit codes: 0 success or positive verdict, 1 input error, 2 negative
//! verdict, 3 internal-consistency failure.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use gmnl_core::bell::{catalonia_expression, QuantumCorrelations};
use gmnl_core::gme::{alpha_grid, c_coefficients, margins_at, poly_eval, MarginThresholds};
use gmnl_core::hardy::{assemble, hardy_vectors, residual_coeffs};
use gmnl_core::io::parse_state;
use gmnl_core::oracle::{check_classical_bounds, enumerate_bilocal_extremes, verify_pipeline, GroupModel};
use gmnl_core::state::{embed, random_near_symmetric};
use gmnl_core::{certify, CertificationReport, CertifyOptions, CurchodVariant, Error, NearSymmetricState};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "gmnl", version, about = "Genuine multipartite nonlocality certificates for near-symmetric qubit states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certify the state in a JSON file.
    Certify {
        #[arg(long)]
        state: PathBuf,
        #[command(flatten)]
        run: RunOptions,
    },
    /// Tabulate the concurrence polynomial and margins over the angle grid.
    Sweep {
        #[arg(long)]
        state: PathBuf,
        #[command(flatten)]
        run: RunOptions,
    },
    /// Certify a batch of random entangled states.
    Random {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        run: RunOptions,
    },
    /// Certify a built-in state: ghz, w or dicke-K.
    Demo {
        #[arg(value_name = "FAMILY", conflicts_with = "family")]
        family_pos: Option<String>,
        #[arg(value_name = "N", conflicts_with = "n")]
        n_pos: Option<usize>,
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[command(flatten)]
        run: RunOptions,
    },
    /// Check the classical bounds on every extreme bilocal model for three parties.
    CheckBilocal {
        #[arg(long, default_value_t = 3)]
        n: usize,
        /// Reading of the pairwise inequality checked alongside the improved one.
        #[arg(long, default_value = "generalized")]
        variant: CurchodVariant,
        /// Models allowed inside each group.
        #[arg(long, default_value = "no-signaling")]
        groups: GroupModel,
        /// Flip the sign of every inequality (negative-path testing).
        #[arg(long, hide = true)]
        invert_bound: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunOptions {
    /// Fixed measurement angle instead of a grid search.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 1e-10)]
    tol_residual: f64,
    #[arg(long, default_value_t = 1e-9)]
    tol_purity: f64,
    #[arg(long, default_value_t = 1e-8)]
    eps_ent: f64,
    #[arg(long, default_value_t = 1e-6)]
    eps_max: f64,
    #[arg(long, default_value_t = 1e-10)]
    eps_norm: f64,
    #[arg(long, default_value_t = 1024)]
    grid: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunOptions {
    fn certify_options(&self) -> Result<CertifyOptions, Failure> {
        let opts = CertifyOptions {
            tol_residual: self.tol_residual,
            tol_purity: self.tol_purity,
            margins: MarginThresholds {
                entanglement: self.eps_ent,
                non_maximality: self.eps_max,
                residual_norm: self.eps_norm,
            },
            grid_points: self.grid,
            alpha: self.alpha,
        };
        opts.validate().map_err(Failure::from)?;
        Ok(opts)
    }
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_) | Error::Parse { .. } | Error::Json(_) | Error::Unsupported(_) => {
                Failure::Input(e.to_string())
            }
            other => Failure::Internal(other.to_string()),
        }
    }
}

const EXIT_NEGATIVE: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            match stdout.write_all(text.as_bytes()).and_then(|()| stdout.flush()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                    Err(Failure::Input(format!("cannot write to stdout: {e}")))
                }
                _ => Ok(()),
            }
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report serializes") + "\n"
}

fn load(path: &Path) -> Result<NearSymmetricState, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
    parse_state(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

/// Certifies, cross-checks against the oracle and writes the report.
fn run_certify(s: &NearSymmetricState, run: &RunOptions) -> Result<u8, Failure> {
    let opts = run.certify_options()?;
    let report = certify(s, &opts)?;
    if !verify_pipeline(s, &report) {
        return Err(Failure::Internal("report disagrees with the brute-force recomputation".into()));
    }
    emit(run.out.as_deref(), &to_json(&report))?;
    if let Some(why) = &report.failure {
        eprintln!("verdict false: {why}");
    }
    Ok(if report.verdict { 0 } else { EXIT_NEGATIVE })
}

fn cmd_sweep(s: &NearSymmetricState, run: &RunOptions) -> Result<u8, Failure> {
    let opts = run.certify_options()?;
    let poly = c_coefficients(s);
    let psi = embed(s);
    let mut csv = String::from("alpha,poly_abs,ent_margin,nonmax_margin,catalonia_lhs\n");
    for alpha in alpha_grid(opts.grid_points) {
        let poly_abs = poly_eval(&poly, alpha)?.norm();
        let m = margins_at(s, alpha);
        let lhs = if m.clears(&opts.margins) {
            match hardy_vectors(&residual_coeffs(s, alpha), opts.margins.residual_norm) {
                Ok(v) => {
                    let a = assemble(s.n(), &v)?;
                    catalonia_expression(&QuantumCorrelations::new(&psi, &a)?).to_string()
                }
                Err(Error::DegenerateGeometry { .. }) => String::new(),
                Err(e) => return Err(e.into()),
            }
        } else {
            String::new()
        };
        writeln!(csv, "{alpha},{poly_abs},{},{},{lhs}", m.entanglement, m.non_maximality)
            .expect("writing to a String");
    }
    emit(run.out.as_deref(), &csv)?;
    Ok(0)
}

#[derive(Serialize)]
struct RandomSummary {
    n: usize,
    count: usize,
    seed: u64,
    passed: usize,
    failed: usize,
    verify_failures: usize,
    min_hardy_probability: Option<f64>,
    median_hardy_probability: Option<f64>,
    max_residual: Option<f64>,
}

fn cmd_random(n: usize, count: usize, seed: u64, run: &RunOptions) -> Result<u8, Failure> {
    if n < 3 {
        return Err(Failure::Input(format!("need n >= 3, got {n}")));
    }
    let opts = run.certify_options()?;
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seeds: Vec<u64> = (0..count).map(|_| rng.next_u64()).collect();
    let results: Vec<(CertificationReport, bool)> = seeds
        .par_iter()
        .map(|&item| {
            let s = random_near_symmetric(n, item)?;
            let r = certify(&s, &opts)?;
            let ok = verify_pipeline(&s, &r);
            Ok((r, ok))
        })
        .collect::<Result<_, Error>>()?;

    let passed = results.iter().filter(|(r, _)| r.verdict).count();
    let verify_failures = results.iter().filter(|(_, ok)| !ok).count();
    let mut probs: Vec<f64> = results.iter().filter_map(|(r, _)| r.hardy_probability).collect();
    probs.sort_by(f64::total_cmp);
    let median = match probs.len() {
        0 => None,
        len if len % 2 == 1 => Some(probs[len / 2]),
        len => Some(0.5 * (probs[len / 2 - 1] + probs[len / 2])),
    };
    let summary = RandomSummary {
        n,
        count,
        seed,
        passed,
        failed: count - passed,
        verify_failures,
        min_hardy_probability: probs.first().copied(),
        median_hardy_probability: median,
        max_residual: results
            .iter()
            .filter_map(|(r, _)| r.max_residual())
            .reduce(f64::max),
    };
    emit(run.out.as_deref(), &to_json(&summary))?;
    eprintln!("wall time {:.3}s", started.elapsed().as_secs_f64());
    Ok(if verify_failures > 0 {
        EXIT_INTERNAL
    } else if passed < count {
        EXIT_NEGATIVE
    } else {
        0
    })
}

fn demo_state(family: &str, n: usize) -> Result<NearSymmetricState, Failure> {
    let s = match family {
        "ghz" => NearSymmetricState::ghz(n),
        "w" => NearSymmetricState::w(n),
        other => {
            let k = other
                .strip_prefix("dicke-")
                .and_then(|k| k.parse().ok())
                .ok_or_else(|| Failure::Input(format!("unknown family `{other}`; expected ghz, w or dicke-K")))?;
            NearSymmetricState::dicke(n, k)
        }
    };
    s.map_err(|e| Failure::Input(e.to_string()))
}

#[derive(Serialize)]
struct BilocalOutcome<'a> {
    n: usize,
    groups: GroupModel,
    inequalities: Vec<&'a String>,
    checked: usize,
    max_gap: &'a std::collections::BTreeMap<String, f64>,
    violations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    first_violation: Option<serde_json::Value>,
}

fn cmd_check_bilocal(
    n: usize,
    variant: CurchodVariant,
    groups: GroupModel,
    inverted: bool,
    out: Option<&Path>,
) -> Result<u8, Failure> {
    let extremes = enumerate_bilocal_extremes(n, groups)?;
    let report = check_classical_bounds(&extremes, &[variant], inverted);
    let first_violation = report.violations.first().map(|v| {
        serde_json::json!({
            "inequality": v.inequality,
            "gap": v.gap,
            "strategy": extremes[v.index],
        })
    });
    let outcome = BilocalOutcome {
        n,
        groups,
        inequalities: report.max_gap.keys().collect(),
        checked: report.checked,
        max_gap: &report.max_gap,
        violations: report.violations.len(),
        first_violation,
    };
    emit(out, &to_json(&outcome))?;
    eprintln!("checked {} strategies", report.checked);
    Ok(if report.holds() { 0 } else { EXIT_INTERNAL })
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Certify { state, run } => run_certify(&load(&state)?, &run),
        Command::Sweep { state, run } => cmd_sweep(&load(&state)?, &run),
        Command::Random { n, count, seed, run } => cmd_random(n, count, seed, &run),
        Command::Demo {
            family_pos,
            n_pos,
            family,
            n,
            run,
        } => {
            let family = family_pos
                .or(family)
                .ok_or_else(|| Failure::Input("missing state family".into()))?;
            let n = n_pos
                .or(n)
                .ok_or_else(|| Failure::Input("missing party count".into()))?;
            run_certify(&demo_state(&family, n)?, &run)
        }
        Command::CheckBilocal {
            n,
            variant,
            groups,
            invert_bound,
            out,
        } => cmd_check_bilocal(n, variant, groups, invert_bound, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(EXIT_INTERNAL)
        }
    }
}
