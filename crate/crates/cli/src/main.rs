//! Command-line harness: run the protocol, emit tradeoff curves, and drive
//! the plan validator and the statistical security/privacy checks.
//!
//! Exit codes: 0 on success, 1 on a constraint violation (wrong decode,
//! failed statistical test, invalid plan, lost dominance), 2 on invalid
//! configuration.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spmm_core::field::next_prime;
use spmm_core::plan::{build_plan, sample_permutations, validate_plan};
use spmm_core::report::{kimlee_comparison, kimlee_point_k_rows, tradeoff_rows, write_csv};
use spmm_core::scheme::{validate_params, ParamError, SchemeParams};
use spmm_core::seeding::{stream_rng, Stream};
use spmm_core::stats::{privacy_test, security_test, PrivacyTestConfig, SecurityTestConfig};
use spmm_core::{run_protocol, StatTestReport};

#[derive(Parser)]
#[command(
    name = "spmm",
    version,
    about = "Secure and private distributed matrix multiplication, simulated and verified"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full protocol once, verify the decode, and report exact costs
    Run(RunArgs),
    /// Emit the upload/download tradeoff curve (plus reference points) as CSV
    Tradeoff(CurveArgs),
    /// Compare against the reference scheme at equal upload cost
    CompareKimlee(CurveArgs),
    /// Chi-square check that shares leak nothing about the input
    SecurityTest(SecurityArgs),
    /// Chi-square check that query views leak nothing about the desired index
    PrivacyTest(PrivacyArgs),
    /// Build a download schedule and check constraints C1-C6
    ValidatePlan(PlanArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Number of simulated servers (N)
    #[arg(long, default_value_t = 4)]
    servers: u32,
    /// Number of public matrices (M)
    #[arg(long, default_value_t = 2)]
    messages: u32,
    /// MDS parameter (K)
    #[arg(long = "mds-k", default_value_t = 3)]
    mds_k: u32,
    /// Prime field modulus
    #[arg(long, default_value_t = 11)]
    prime: u64,
    /// Matrix dimensions d1,d2,d3 (A is d1 x d2, library matrices d2 x d3)
    #[arg(long, value_parser = parse_dims, default_value = "32,4,4")]
    dims: (usize, usize, usize),
    /// Desired library index (kept private from the servers)
    #[arg(long, default_value_t = 1)]
    theta: u32,
    /// Master seed for all randomness
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Write the full replayable transcript as JSON
    #[arg(long)]
    transcript: Option<PathBuf>,
}

#[derive(Args)]
struct CurveArgs {
    /// Number of servers (N)
    #[arg(long, default_value_t = 12)]
    servers: u64,
    /// Number of public matrices (M)
    #[arg(long, default_value_t = 6)]
    messages: u64,
    /// Output CSV path (stdout if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SecurityArgs {
    /// Mask draws per histogram
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, default_value_t = 5)]
    prime: u64,
    #[arg(long, default_value_t = 4)]
    servers: u32,
    #[arg(long = "mds-k", default_value_t = 3)]
    mds_k: u32,
    #[arg(long, default_value_t = 20_240_601)]
    seed: u64,
    /// Negative control: run with the mask zeroed (must fail)
    #[arg(long = "no-mask", default_value_t = false)]
    no_mask: bool,
}

#[derive(Args)]
struct PrivacyArgs {
    /// Seed pairs to sample
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = 4)]
    servers: u32,
    #[arg(long, default_value_t = 2)]
    messages: u32,
    #[arg(long = "mds-k", default_value_t = 3)]
    mds_k: u32,
    #[arg(long, default_value_t = 20_240_602)]
    seed: u64,
    #[arg(long, default_value_t = 64)]
    buckets: u32,
    /// Negative control: run without index permutations (must fail)
    #[arg(long = "no-permutations", default_value_t = false)]
    no_permutations: bool,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long, default_value_t = 4)]
    servers: u32,
    #[arg(long, default_value_t = 2)]
    messages: u32,
    #[arg(long = "mds-k", default_value_t = 3)]
    mds_k: u32,
    #[arg(long, default_value_t = 1)]
    theta: u32,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

fn parse_dims(s: &str) -> Result<(usize, usize, usize), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err("expected three comma-separated dimensions, e.g. 32,4,4".into());
    }
    let dim = |p: &str| {
        p.trim()
            .parse::<usize>()
            .map_err(|e| format!("bad dimension {p:?}: {e}"))
    };
    Ok((dim(parts[0])?, dim(parts[1])?, dim(parts[2])?))
}

const EXIT_VIOLATION: u8 = 1;
const EXIT_BAD_CONFIG: u8 = 2;

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run(args) => cmd_run(args),
        Command::Tradeoff(args) => cmd_tradeoff(args),
        Command::CompareKimlee(args) => cmd_compare(args),
        Command::SecurityTest(args) => cmd_security(args),
        Command::PrivacyTest(args) => cmd_privacy(args),
        Command::ValidatePlan(args) => cmd_validate_plan(args),
    }
}

fn bad_config(e: &ParamError) -> ExitCode {
    eprintln!("error: invalid configuration: {e}");
    ExitCode::from(EXIT_BAD_CONFIG)
}

fn cmd_run(args: RunArgs) -> ExitCode {
    let (d1, d2, d3) = args.dims;
    let raw = SchemeParams {
        servers: args.servers,
        messages: args.messages,
        mds_k: args.mds_k,
        prime: args.prime,
        d1,
        d2,
        d3,
        theta: args.theta,
        seed: args.seed,
    };
    let params = match validate_params(raw) {
        Ok(p) => p,
        Err(e) => return bad_config(&e),
    };
    let run = match run_protocol(&params) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: protocol run failed: {e}");
            return ExitCode::from(EXIT_VIOLATION);
        }
    };

    let direct = run
        .confidential
        .mat_mul(&run.library[(args.theta - 1) as usize])
        .expect("dimensions validated");
    let decode_ok = run.result == direct;
    let cost_ok = run.cost.agrees();

    println!(
        "run: N={} M={} K={} p={} dims={}x{}x{} theta={} seed={}",
        args.servers, args.messages, args.mds_k, args.prime, d1, d2, d3, args.theta, args.seed
    );
    println!(
        "  padded rows: {} | blocks per message: {} | requests: {}",
        params.d1_pad(),
        params.block_count(),
        run.plan.requests.len()
    );
    println!(
        "  uploaded {} symbols, downloaded {} symbols",
        run.cost.uploaded_symbols, run.cost.downloaded_symbols
    );
    println!(
        "  U measured {} (formula {}) | D measured {} (formula {})",
        run.cost.u_measured, run.cost.u_formula, run.cost.d_measured, run.cost.d_formula
    );
    println!(
        "  decode vs direct product: {}",
        if decode_ok { "exact" } else { "MISMATCH" }
    );
    if let Some(path) = args.transcript {
        if let Err(e) = run.transcript.write_json(&path) {
            eprintln!("error: cannot write transcript {}: {e}", path.display());
            return ExitCode::from(EXIT_VIOLATION);
        }
        println!("  transcript written to {}", path.display());
    }
    if decode_ok && cost_ok {
        ExitCode::SUCCESS
    } else {
        if !cost_ok {
            eprintln!("error: measured cost diverges from the closed form");
        }
        if !decode_ok {
            eprintln!("error: decoded product differs from the direct product");
        }
        ExitCode::from(EXIT_VIOLATION)
    }
}

fn emit_rows(rows: &[spmm_core::report::TradeoffRow], out: Option<PathBuf>) -> ExitCode {
    match out {
        Some(path) => {
            if let Err(e) = write_csv(&path, rows) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(EXIT_VIOLATION);
            }
            println!("wrote {} rows to {}", rows.len(), path.display());
            ExitCode::SUCCESS
        }
        None => {
            print!("{}", spmm_core::report::rows_to_csv(rows));
            ExitCode::SUCCESS
        }
    }
}

fn cmd_tradeoff(args: CurveArgs) -> ExitCode {
    if args.servers < 2 || args.messages < 1 {
        eprintln!("error: invalid configuration: need at least 2 servers and 1 message");
        return ExitCode::from(EXIT_BAD_CONFIG);
    }
    match tradeoff_rows(args.servers, args.messages) {
        Ok(rows) => emit_rows(&rows, args.out),
        Err(e) => {
            eprintln!("error: invalid configuration: {e}");
            ExitCode::from(EXIT_BAD_CONFIG)
        }
    }
}

fn cmd_compare(args: CurveArgs) -> ExitCode {
    if args.servers < 2 || args.messages < 1 {
        eprintln!("error: invalid configuration: need at least 2 servers and 1 message");
        return ExitCode::from(EXIT_BAD_CONFIG);
    }
    let comparison = match kimlee_comparison(args.servers, args.messages) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: invalid configuration: {e}");
            return ExitCode::from(EXIT_BAD_CONFIG);
        }
    };
    if comparison.is_empty() {
        println!(
            "no reference points: {} servers admit no matching factorization",
            args.servers
        );
        return ExitCode::SUCCESS;
    }
    let mut all_dominate = true;
    for row in &comparison {
        println!(
            "K={}: U={} | D ours {} vs reference {} -> {}",
            row.k,
            row.ours.upload,
            row.ours.download,
            row.theirs.download,
            if row.dominates {
                "strictly better"
            } else {
                "NOT better"
            }
        );
        all_dominate &= row.dominates;
    }
    let rows = match kimlee_point_k_rows(args.servers, args.messages) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: invalid configuration: {e}");
            return ExitCode::from(EXIT_BAD_CONFIG);
        }
    };
    let code = emit_rows(&rows, args.out);
    if code != ExitCode::SUCCESS {
        return code;
    }
    if all_dominate {
        ExitCode::SUCCESS
    } else {
        eprintln!("error: reference scheme matched or beat the proposed scheme somewhere");
        ExitCode::from(EXIT_VIOLATION)
    }
}

fn print_stat_report(report: &StatTestReport) {
    println!(
        "{}: {} trials, threshold p > {:.2e}",
        report.name, report.trials, report.threshold
    );
    for sub in &report.subtests {
        println!(
            "  {}: chi2={:.3} df={} p={:.4}",
            sub.label, sub.statistic, sub.degrees_of_freedom, sub.p_value
        );
    }
    println!(
        "  worst case: chi2={:.3} df={} p={:.4} -> {}",
        report.statistic,
        report.degrees_of_freedom,
        report.p_value,
        if report.passed { "PASS" } else { "FAIL" }
    );
}

fn cmd_security(args: SecurityArgs) -> ExitCode {
    let cfg = SecurityTestConfig {
        prime: args.prime,
        servers: args.servers,
        mds_k: args.mds_k,
        trials: args.trials,
        seed: args.seed,
        mask_disabled: args.no_mask,
    };
    match security_test(&cfg) {
        Ok(report) => {
            print_stat_report(&report);
            if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_VIOLATION)
            }
        }
        Err(e) => {
            eprintln!("error: invalid configuration: {e}");
            ExitCode::from(EXIT_BAD_CONFIG)
        }
    }
}

fn cmd_privacy(args: PrivacyArgs) -> ExitCode {
    let cfg = PrivacyTestConfig {
        servers: args.servers,
        messages: args.messages,
        mds_k: args.mds_k,
        trials: args.trials,
        seed: args.seed,
        buckets: args.buckets,
        permutations_disabled: args.no_permutations,
    };
    match privacy_test(&cfg) {
        Ok(report) => {
            print_stat_report(&report);
            if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_VIOLATION)
            }
        }
        Err(e) => {
            eprintln!("error: invalid configuration: {e}");
            ExitCode::from(EXIT_BAD_CONFIG)
        }
    }
}

fn cmd_validate_plan(args: PlanArgs) -> ExitCode {
    let raw = SchemeParams {
        servers: args.servers,
        messages: args.messages,
        mds_k: args.mds_k,
        prime: next_prime(u64::from(args.servers)),
        d1: 1,
        d2: 1,
        d3: 1,
        theta: args.theta,
        seed: args.seed,
    };
    let params = match validate_params(raw) {
        Ok(p) => p,
        Err(e) => return bad_config(&e),
    };
    let perms = sample_permutations(
        args.messages,
        params.block_count(),
        &mut stream_rng(args.seed, Stream::Permutations),
    );
    let plan = match build_plan(&params, &perms) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: schedule construction failed: {e}");
            return ExitCode::from(EXIT_VIOLATION);
        }
    };
    match validate_plan(&plan) {
        Ok(report) => {
            println!(
                "plan: N={} M={} K={} theta={} seed={}",
                args.servers, args.messages, args.mds_k, args.theta, args.seed
            );
            println!(
                "  requests: {} desired + {} undesired = {} total",
                report.desired_requests,
                report.undesired_requests,
                report.desired_requests + report.undesired_requests
            );
            println!(
                "  closed forms: desired {} / undesired {} -> {}",
                report.desired_formula,
                report.undesired_formula,
                if report.desired_requests == report.desired_formula
                    && report.undesired_requests == report.undesired_formula
                {
                    "match"
                } else {
                    "MISMATCH"
                }
            );
            println!("  side-info groups: {}", report.side_info_groups);
            println!("  constraints C1-C6: all satisfied");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_VIOLATION)
        }
    }
}
