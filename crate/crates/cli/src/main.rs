//! `stable-lab`: generate markets, solve them, run experiments and self-checks.
//!
//! Exit codes: 0 on success, 1 on invalid input or I/O failure, 2 when
//! `verify` finds a violated property.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use stable_lab::da::{run_dpda, run_hpda, DaTrace, OrderPolicy};
use stable_lab::experiments::{run_experiment, ExperimentConfig, ExperimentKind};
use stable_lab::market::{generate_uniform_profile, side_ranks, Market, PreferenceProfile, Side};
use stable_lab::report::{render_summary, summarize};
use stable_lab::truncation::{hospital_optimal_rank_via_truncation, SearchStrategy};
use stable_lab::verification::{reference_solver, run_suite, VerifyConfig};

#[derive(Debug, Parser)]
#[command(name = "stable-lab", version, about = "Random two-sided matching market laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a uniformly random preference profile as JSON.
    Gen {
        #[arg(long)]
        doctors: usize,
        #[arg(long)]
        hospitals: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run deferred acceptance on a profile and print the matching.
    Solve {
        #[arg(long)]
        profile: PathBuf,
        /// Proposing side.
        #[arg(long, value_enum)]
        side: ProposingSide,
        /// Include the proposal log.
        #[arg(long)]
        trace: bool,
        /// queue, stack or random:SEED
        #[arg(long, default_value = "queue", value_parser = parse_order)]
        order: OrderPolicy,
    },
    /// Run a Monte Carlo experiment.
    Experiment(ExperimentArgs),
    /// Check stability, optimality, rural-hospital and truncation properties
    /// against brute-force enumeration on random small markets.
    Verify {
        #[arg(long)]
        max_n: usize,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Best stable rank of a hospital via list truncation.
    TruncateRank {
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        hospital: usize,
        #[arg(long, value_enum, default_value = "binary")]
        strategy: Strategy,
    },
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(value_enum)]
    kind: Kind,
    /// Number of doctors; hospitals are n or n + 1 depending on the kind.
    #[arg(long)]
    n: usize,
    #[arg(long)]
    trials: u64,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Data file. CSV output also writes `<out>.summary.json` next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ProposingSide {
    Doctors,
    Hospitals,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Strategy {
    Linear,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    Balanced,
    Unbalanced,
    RejectorTail,
    CouplingCheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn parse_order(s: &str) -> Result<OrderPolicy, String> {
    s.parse().map_err(|e: stable_lab::Error| e.to_string())
}

enum Failure {
    Invalid(String),
    Verification(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Invalid(e.to_string())
    }
}

type CliResult = Result<(), Failure>;

fn write_output(out: Option<&Path>, text: &str) -> CliResult {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn read_profile(path: &Path) -> Result<PreferenceProfile, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    PreferenceProfile::from_json(&text).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))
}

fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()?;
    Ok(pool.install(f))
}

fn gen(doctors: usize, hospitals: usize, seed: u64, out: Option<&Path>) -> CliResult {
    let market = Market::new(doctors, hospitals)?;
    let mut json = generate_uniform_profile(market, seed).to_json()?;
    json.push('\n');
    write_output(out, &json)
}

#[derive(Serialize)]
struct Solution {
    side: &'static str,
    pairs: Vec<(usize, usize)>,
    doctor_ranks: Vec<usize>,
    hospital_ranks: Vec<usize>,
    unmatched_doctors: Vec<usize>,
    unmatched_hospitals: Vec<usize>,
    total_proposals: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: Option<Vec<(usize, usize, bool)>>,
}

fn solution(profile: &PreferenceProfile, side: &'static str, trace: &DaTrace, with_trace: bool) -> Result<Solution, Failure> {
    let m = &trace.matching;
    let ranks = |s| -> Result<Vec<usize>, Failure> {
        Ok(side_ranks(profile, s, m)?.into_iter().map(|r| r.get()).collect())
    };
    let unmatched = |matches: &[Option<usize>]| {
        matches
            .iter()
            .enumerate()
            .filter(|(_, p)| p.is_none())
            .map(|(i, _)| i)
            .collect()
    };
    Ok(Solution {
        side,
        pairs: m.pairs(),
        doctor_ranks: ranks(Side::Doctor)?,
        hospital_ranks: ranks(Side::Hospital)?,
        unmatched_doctors: unmatched(m.doctor_match()),
        unmatched_hospitals: unmatched(m.hospital_match()),
        total_proposals: trace.total_proposals,
        trace: with_trace.then(|| {
            trace
                .proposals
                .iter()
                .map(|p| (p.proposer.index, p.receiver.index, p.accepted))
                .collect()
        }),
    })
}

fn solve(path: &Path, side: ProposingSide, with_trace: bool, order: OrderPolicy) -> CliResult {
    let profile = read_profile(path)?;
    let (name, trace) = match side {
        ProposingSide::Doctors => ("doctors", run_dpda(&profile, order)),
        ProposingSide::Hospitals => ("hospitals", run_hpda(&profile, order)),
    };
    let mut json = serde_json::to_string_pretty(&solution(&profile, name, &trace, with_trace)?)?;
    json.push('\n');
    write_output(None, &json)
}

fn experiment(args: &ExperimentArgs) -> CliResult {
    let config = match args.kind {
        Kind::Balanced => ExperimentConfig::balanced(args.n, args.trials, args.seed),
        Kind::Unbalanced => ExperimentConfig::unbalanced(args.n, args.trials, args.seed),
        Kind::RejectorTail => ExperimentConfig::rejector_tail(args.n, args.trials, args.seed),
        Kind::CouplingCheck => ExperimentConfig::coupling_check(args.n, args.trials, args.seed),
    }?;
    debug_assert_eq!(
        config.kind,
        match args.kind {
            Kind::Balanced => ExperimentKind::Balanced,
            Kind::Unbalanced => ExperimentKind::Unbalanced,
            Kind::RejectorTail => ExperimentKind::RejectorTail,
            Kind::CouplingCheck => ExperimentKind::CouplingCheck,
        }
    );
    let report = with_pool(args.jobs, || run_experiment(&config))??;
    let table = render_summary(&summarize(&report)?);

    let data = match args.format {
        Format::Json => report.to_json()? + "\n",
        Format::Csv => {
            let mut buf = Vec::new();
            report.write_csv(&mut buf)?;
            String::from_utf8(buf)?
        }
    };
    match &args.out {
        Some(path) => {
            write_output(Some(path), &data)?;
            if args.format == Format::Csv {
                let summary = serde_json::to_string_pretty(&report.summary())? + "\n";
                write_output(Some(&summary_path(path)), &summary)?;
            }
            print!("{table}");
        }
        None => {
            // data on stdout, table on stderr
            write_output(None, &data)?;
            eprint!("{table}");
        }
    }
    Ok(())
}

fn summary_path(data: &Path) -> PathBuf {
    let mut name = data.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".summary.json");
    data.with_file_name(name)
}

fn verify(max_n: usize, trials: u64, seed: u64, jobs: Option<usize>) -> CliResult {
    let config = VerifyConfig {
        max_n,
        trials,
        master_seed: seed,
    };
    match with_pool(jobs, || run_suite(&config, reference_solver))?? {
        Ok(summary) => {
            println!(
                "ok: {} instances, {} stable matchings enumerated",
                summary.instances, summary.stable_matchings
            );
            for (n, d) in summary.distribution_checks {
                println!("ok: lazy vs explicit matching distribution at n = {n}: TV = {d:.4}");
            }
            Ok(())
        }
        Err(failure) => Err(Failure::Verification(failure.to_string())),
    }
}

#[derive(Serialize)]
struct TruncationOutput<'a> {
    strategy: &'static str,
    #[serde(flatten)]
    result: &'a stable_lab::truncation::TruncationResult,
}

fn truncate_rank(path: &Path, hospital: usize, strategy: Strategy) -> CliResult {
    let profile = read_profile(path)?;
    let (name, strategy) = match strategy {
        Strategy::Linear => ("linear", SearchStrategy::Linear),
        Strategy::Binary => ("binary", SearchStrategy::Binary),
    };
    let result = hospital_optimal_rank_via_truncation(&profile, hospital, strategy)?;
    let json = serde_json::to_string_pretty(&TruncationOutput {
        strategy: name,
        result: &result,
    })? + "\n";
    write_output(None, &json)
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Gen {
            doctors,
            hospitals,
            seed,
            out,
        } => gen(doctors, hospitals, seed, out.as_deref()),
        Command::Solve {
            profile,
            side,
            trace,
            order,
        } => solve(&profile, side, trace, order),
        Command::Experiment(args) => experiment(&args),
        Command::Verify {
            max_n,
            trials,
            seed,
            jobs,
        } => verify(max_n, trials, seed, jobs),
        Command::TruncateRank {
            profile,
            hospital,
            strategy,
        } => truncate_rank(&profile, hospital, strategy),
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
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(2)
        }
    }
}
