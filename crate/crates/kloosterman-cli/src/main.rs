//! Command-line interface: compute generalized Kloosterman sums, run the
//! verification suites, and emit diagrams and bound tables.
//!
//! Exit codes: 0 success, 1 configuration error, 2 budget exceeded,
//! 3 verification failure.

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use kloosterman::bounds::bound_report;
use kloosterman::diagram::build_diagram;
use kloosterman::error::Error;
use kloosterman::sum::{
    evaluate_sum, evaluate_sum_gamma0, CharacterPair, SumResult, DEFAULT_BUDGET,
};
use kloosterman::verify::{
    verify_bounds, verify_bruhat, verify_counts, verify_gamma0, verify_gl2, verify_identities,
    verify_oracle, CheckReport, VerifyConfig,
};
use kloosterman::weyl::make_admissible;

#[derive(Parser)]
#[command(
    name = "kloosterman",
    about = "Exact generalized Kloosterman sums for GL(N+1) over Q_p",
    version
)]
struct Cli {
    /// Worker threads (default: all cores; KLOOSTERMAN_THREADS overrides).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Args)]
struct SumArgs {
    /// Prime p.
    #[arg(long)]
    p: u64,
    /// Block sizes of the Weyl element, comma separated (e.g. 2,3).
    #[arg(long, value_delimiter = ',')]
    blocks: Vec<u32>,
    /// Exponent vector r, comma separated, N entries.
    #[arg(long, value_delimiter = ',')]
    r: Vec<u32>,
    /// Character ψ entries (defaults to all zero).
    #[arg(long, value_delimiter = ',')]
    psi: Option<Vec<i64>>,
    /// Character ψ′ entries (defaults to all zero).
    #[arg(long = "psi-prime", value_delimiter = ',')]
    psi_prime: Option<Vec<i64>>,
    /// Evaluate the Γ0(p^level) sum instead of the full-group sum.
    #[arg(long)]
    level: Option<u32>,
    /// Cap on phase evaluations.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u128,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Also print the bound comparison.
    #[arg(long)]
    bounds: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Primes to test, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [2u64, 3])]
    p: Vec<u64>,
    /// Largest matrix dimension N+1.
    #[arg(long, default_value_t = 5)]
    max_dim: u32,
    /// Random cells per composition and prime.
    #[arg(long, default_value_t = 200)]
    cases: usize,
    /// Largest Σ r for count- and oracle-style suites.
    #[arg(long, default_value_t = 3)]
    max_r: u32,
    /// Seed for the sampled verifications.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cap on phase evaluations and oracle candidates.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u128,
    /// Blocks for the oracle suite.
    #[arg(long, value_delimiter = ',')]
    blocks: Option<Vec<u32>>,
    /// Exponent vector for the oracle suite.
    #[arg(long, value_delimiter = ',')]
    r: Option<Vec<u32>>,
    /// ψ for the oracle suite.
    #[arg(long, value_delimiter = ',')]
    psi: Option<Vec<i64>>,
    /// ψ′ for the oracle suite.
    #[arg(long = "psi-prime", value_delimiter = ',')]
    psi_prime: Option<Vec<i64>>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Bruhat,
    Counts,
    Oracle,
    Identities,
    Bounds,
    Gl2,
    Gamma0,
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a generalized Kloosterman sum exactly.
    Sum(SumArgs),
    /// Run a verification suite; nonzero exit on any violation.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
        #[command(flatten)]
        args: VerifyArgs,
    },
    /// Emit the numbered diagram of a Weyl element in DOT format.
    Diagram {
        /// Block sizes, comma separated.
        #[arg(long, value_delimiter = ',')]
        blocks: Vec<u32>,
    },
}

fn exit_for(e: &Error) -> ExitCode {
    match e {
        Error::BudgetExceeded { .. } => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn print_sum_text(s: &SumResult) {
    let join = |v: &[u32]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
    println!(
        "Kl_p sum: p={} blocks=({}) r=({}) psi={:?} psi'={:?}{}",
        s.p,
        join(&s.blocks),
        join(&s.r),
        s.psi,
        s.psi_prime,
        s.level.map(|l| format!(" level={l}")).unwrap_or_default()
    );
    println!("  representatives: {}", s.cell_count);
    println!(
        "  magnitude: {:.12} (± {:.3e})",
        s.magnitude, s.magnitude_error
    );
    let coeffs = s.value.sparse_coeffs();
    let shown: Vec<String> = coeffs
        .iter()
        .take(12)
        .map(|(t, n)| format!("{n}·e({t}/{}^{})", s.p, s.value.level()))
        .collect();
    println!(
        "  value: {}{}",
        if shown.is_empty() {
            "0".to_string()
        } else {
            shown.join(" + ")
        },
        if coeffs.len() > 12 { " + …" } else { "" }
    );
    for a in &s.assignments {
        println!("  m={:?}: count={} |value|={:.6}", a.m, a.count, a.magnitude);
    }
}

fn cmd_sum(args: &SumArgs) -> Result<(), (ExitCode, String)> {
    let n = args.blocks.iter().sum::<u32>() as usize;
    if n < 2 {
        return Err((ExitCode::from(1), "blocks must sum to at least 2".into()));
    }
    let w = make_admissible(&args.blocks).map_err(|e| (ExitCode::from(1), e.to_string()))?;
    let psi = args.psi.clone().unwrap_or_else(|| vec![0; n - 1]);
    let psi_prime = args.psi_prime.clone().unwrap_or_else(|| vec![0; n - 1]);
    let chars = CharacterPair::new(psi, psi_prime);
    let result = match args.level {
        Some(l) => evaluate_sum_gamma0(&w, args.p, &args.r, &chars, l, args.budget),
        None => evaluate_sum(&w, args.p, &args.r, &chars, args.budget),
    }
    .map_err(|e| (exit_for(&e), e.to_string()))?;
    match args.format {
        Format::Json => {
            println!(
                "{}",
                serde_json::to_string_pretty(&result.to_json()).unwrap()
            )
        }
        Format::Csv => print!("{}", result.to_csv()),
        Format::Text => print_sum_text(&result),
    }
    if args.bounds {
        let report =
            bound_report(&w, &result, &chars).map_err(|e| (ExitCode::from(1), e.to_string()))?;
        match args.format {
            Format::Json => {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&report.to_json()).unwrap()
                )
            }
            _ => {
                print!(
                    "{}{}",
                    kloosterman::bounds::BoundReport::csv_header(),
                    report.csv_row()
                );
            }
        }
    }
    Ok(())
}

fn cmd_verify(suite: Suite, args: &VerifyArgs) -> Result<(), (ExitCode, String)> {
    let cfg = VerifyConfig {
        primes: args.p.clone(),
        max_dim: args.max_dim,
        cases: args.cases,
        max_r: args.max_r,
        seed: args.seed,
        budget: args.budget,
    };
    let mut reports: Vec<CheckReport> = Vec::new();
    let run_oracle = |reports: &mut Vec<CheckReport>| -> Result<(), (ExitCode, String)> {
        let blocks = args.blocks.clone().unwrap_or_else(|| vec![1, 1, 1]);
        let n = blocks.iter().sum::<u32>() as usize - 1;
        let r = args.r.clone().unwrap_or_else(|| vec![1; n]);
        let psi = args.psi.clone().unwrap_or_else(|| vec![1; n]);
        let psi_prime = args.psi_prime.clone().unwrap_or_else(|| vec![1; n]);
        let chars = CharacterPair::new(psi, psi_prime);
        let rep =
            verify_oracle(&cfg, &blocks, &r, &chars).map_err(|e| (exit_for(&e), e.to_string()))?;
        reports.push(rep);
        Ok(())
    };
    match suite {
        Suite::Bruhat => reports.push(verify_bruhat(&cfg)),
        Suite::Counts => reports.push(verify_counts(&cfg)),
        Suite::Identities => reports.push(verify_identities(&cfg)),
        Suite::Bounds => reports.push(verify_bounds(&cfg)),
        Suite::Gl2 => reports.push(verify_gl2(&cfg)),
        Suite::Gamma0 => reports.push(verify_gamma0(&cfg)),
        Suite::Oracle => run_oracle(&mut reports)?,
        Suite::All => {
            reports.push(verify_bruhat(&cfg));
            reports.push(verify_counts(&cfg));
            reports.push(verify_identities(&cfg));
            reports.push(verify_bounds(&cfg));
            reports.push(verify_gl2(&cfg));
            reports.push(verify_gamma0(&cfg));
            run_oracle(&mut reports)?;
        }
    }
    let mut ok = true;
    for rep in &reports {
        print!("{}", rep.render());
        ok &= rep.passed();
    }
    if ok {
        Ok(())
    } else {
        Err((ExitCode::from(3), "verification failed".into()))
    }
}

fn cmd_diagram(blocks: &[u32]) -> Result<(), (ExitCode, String)> {
    let w = make_admissible(blocks).map_err(|e| (ExitCode::from(1), e.to_string()))?;
    let d = build_diagram(&w).map_err(|e| (ExitCode::from(1), e.to_string()))?;
    print!("{}", d.to_dot());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = std::env::var("KLOOSTERMAN_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .or(cli.threads);
    if let Some(t) = threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build_global();
    }
    let outcome = match &cli.command {
        Command::Sum(args) => cmd_sum(args),
        Command::Verify { suite, args } => cmd_verify(*suite, args),
        Command::Diagram { blocks } => cmd_diagram(blocks),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            code
        }
    }
}
