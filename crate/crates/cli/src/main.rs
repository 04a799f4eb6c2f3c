//! `defiperf` — search for, verify and certify deficient-perfect numbers.
//!
//! Exit codes: 0 success (for `verify`: witness found), 1 `verify` ran on
//! a non-witness, 2 input/config error, 3 budget-truncated search,
//! 4 `facts` found refuted records.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use defiperf_core::nt::{factorize, FactorBudget, Factorization, Natural};
use defiperf_core::search::{enumerate_with_stop, SearchConfig};
use defiperf_core::witness::{abundancy, dp_witness};

use defiperf::config::{parse_config_file, parse_rules, SearchOverrides};
use defiperf::oracle::{cross_check, enumerate_dp, Filters};
use defiperf::record::{render, Payload, RunRecord, VerifyDoc, SCHEMA_VERSION};

#[derive(Parser)]
#[command(name = "defiperf", version, about = "deficient-perfect number toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct OutputArgs {
    /// Fix the engine seed; also makes the output byte-reproducible
    /// (the timestamp field is nulled).
    #[arg(long)]
    seed: Option<u64>,
    /// Write the record document here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Check one number, given as a decimal or a literal like 3^2*7^2*11^2*13^2.
    Verify {
        number: String,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Branch-and-bound search over factorization shapes.
    Search {
        /// Config file with key = value lines.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Number of distinct primes.
        #[arg(long)]
        omega: Option<usize>,
        /// Odd candidates only (even exponents, prune rules active).
        #[arg(long)]
        odd: bool,
        #[arg(long = "prime-max")]
        prime_max: Option<u64>,
        #[arg(long = "exp-max")]
        exp_max: Option<u32>,
        #[arg(long = "value-max")]
        value_max: Option<Natural>,
        /// Restrict the two smallest primes to the shipped preset.
        #[arg(long)]
        preset: Option<String>,
        /// all, none, or a comma list of bound, forced-divisor, order,
        /// quadratic-residue.
        #[arg(long)]
        rules: Option<String>,
        #[arg(long = "max-leaves")]
        max_leaves: Option<u64>,
        #[arg(long = "time-cap-secs")]
        time_cap_secs: Option<u64>,
        /// Log every leaf and prune to the record's trace field.
        #[arg(long)]
        trace: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Sieve every n up to the limit for deficient-perfect numbers.
    Oracle {
        #[arg(long)]
        limit: u64,
        /// Keep odd entries only.
        #[arg(long)]
        odd: bool,
        /// Keep entries with this many distinct prime factors.
        #[arg(long)]
        omega: Option<u32>,
        /// Also export entries as CSV (columns n,d,D,omega,parity).
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Cross-check the sieve against an engine search over the same
        /// shape domain before reporting.
        #[arg(long = "cross-check")]
        cross: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Verify a fixture file of transcribed numeric facts.
    Facts {
        fixture: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let outcome = match cli.command {
        Command::Verify { number, output } => cmd_verify(&number, &output, &argv),
        Command::Search {
            config,
            omega,
            odd,
            prime_max,
            exp_max,
            value_max,
            preset,
            rules,
            max_leaves,
            time_cap_secs,
            trace,
            output,
        } => cmd_search(
            SearchCliArgs {
                config,
                omega,
                odd,
                prime_max,
                exp_max,
                value_max,
                preset,
                rules,
                max_leaves,
                time_cap_secs,
                trace,
            },
            &output,
            &argv,
        ),
        Command::Oracle { limit, odd, omega, csv, cross, output } => {
            cmd_oracle(limit, odd, omega, csv, cross, &output, &argv)
        }
        Command::Facts { fixture, output } => cmd_facts(&fixture, &output, &argv),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn emit(record: &RunRecord, output: &OutputArgs) -> Result<()> {
    let text = render(record);
    match &output.out {
        Some(path) => {
            std::fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?
        }
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn base_record(argv: &[String], output: &OutputArgs, seed: u64) -> RunRecord {
    let timestamp = if output.seed.is_some() {
        eprintln!("run at {}", defiperf::utc_timestamp());
        None
    } else {
        Some(defiperf::utc_timestamp())
    };
    RunRecord {
        schema_version: SCHEMA_VERSION,
        engine_version: defiperf_core::ENGINE_VERSION.to_string(),
        command: argv.to_vec(),
        timestamp,
        seed,
        payload: Payload::Facts(Default::default()),
        exit_status: 0,
    }
}

fn parse_number_input(input: &str, seed: u64) -> Result<Factorization> {
    let input = input.trim();
    if input.is_empty() {
        bail!("empty input");
    }
    if input.chars().all(|c| c.is_ascii_digit()) {
        let n: Natural = input.parse().context("bad decimal literal")?;
        if n < Natural::from(2u32) {
            bail!("n must be at least 2");
        }
        let out = factorize(&n, &FactorBudget { seed, ..Default::default() });
        return match out.cofactor {
            None => Ok(out.factors),
            Some(c) => Err(anyhow!("factorization budget exhausted (composite cofactor {c})")),
        };
    }
    // p^a*p^a... literal, ascending primes enforced on input
    let mut pairs = Vec::new();
    for part in input.split('*') {
        let (p, a) = match part.split_once('^') {
            Some((p, a)) => (
                p.trim().parse::<Natural>().context("bad prime")?,
                a.trim().parse::<u32>().context("bad exponent")?,
            ),
            None => (part.trim().parse::<Natural>().context("bad prime")?, 1),
        };
        pairs.push(defiperf_core::nt::PrimePower { prime: p, exp: a });
    }
    let f = Factorization::new(pairs).map_err(|e| anyhow!("invalid literal: {e}"))?;
    if f.value() < Natural::from(2u32) {
        bail!("n must be at least 2");
    }
    Ok(f)
}

fn cmd_verify(number: &str, output: &OutputArgs, argv: &[String]) -> Result<u8> {
    let seed = output.seed.unwrap_or(1);
    let f = parse_number_input(number, seed)?;
    let witness = dp_witness(&f);
    let found = witness.is_some();
    let doc = VerifyDoc {
        input: number.to_string(),
        deficient_perfect: found,
        witness: witness.as_ref().map(Into::into),
        abundancy: abundancy(&f).to_string(),
    };
    match &witness {
        Some(w) => eprintln!(
            "{} is deficient-perfect: d = {}, D = {}, sigma = {}",
            f,
            w.deficient_divisor(),
            w.codivisor(),
            w.sigma_n()
        ),
        None => eprintln!("{f} is not deficient-perfect"),
    }
    let exit = if found { 0 } else { 1 };
    let mut record = base_record(argv, output, seed);
    record.payload = Payload::Verify(doc);
    record.exit_status = exit;
    emit(&record, output)?;
    Ok(exit as u8)
}

struct SearchCliArgs {
    config: Option<PathBuf>,
    omega: Option<usize>,
    odd: bool,
    prime_max: Option<u64>,
    exp_max: Option<u32>,
    value_max: Option<Natural>,
    preset: Option<String>,
    rules: Option<String>,
    max_leaves: Option<u64>,
    time_cap_secs: Option<u64>,
    trace: bool,
}

fn cmd_search(args: SearchCliArgs, output: &OutputArgs, argv: &[String]) -> Result<u8> {
    let mut overrides = SearchOverrides::default();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        overrides = parse_config_file(&text)?;
    }
    let flag_overrides = SearchOverrides {
        omega: args.omega,
        odd: args.odd.then_some(true),
        prime_max: args.prime_max,
        exp_max: args.exp_max,
        value_max: args.value_max,
        rules: args.rules.as_deref().map(parse_rules).transpose()?,
        preset: args.preset,
        max_leaves: args.max_leaves,
        time_cap_secs: args.time_cap_secs,
        seed: output.seed,
        trace: args.trace.then_some(true),
    };
    let (config, time_cap) = overrides.merge(flag_overrides).into_config()?;
    config.validate().map_err(|e| anyhow!("invalid config: {e}"))?;

    let deadline = time_cap.map(|secs| Instant::now() + Duration::from_secs(secs));
    let mut stop = move || deadline.is_some_and(|d| Instant::now() >= d);
    let report = enumerate_with_stop(&config, &mut stop)
        .map_err(|e| anyhow!("invalid config: {e}"))?;

    eprintln!(
        "search done: {} witness(es), {} subtree(s) pruned, {} leaves evaluated{}",
        report.witnesses.len(),
        report.subtrees_pruned,
        report.leaves_evaluated,
        if report.complete { "" } else { " (truncated)" }
    );
    let exit = if report.complete { 0 } else { 3 };
    let mut record = base_record(argv, output, config.seed);
    record.payload = Payload::Search((&report).into());
    record.exit_status = exit;
    emit(&record, output)?;
    Ok(exit as u8)
}

fn cmd_oracle(
    limit: u64,
    odd: bool,
    omega: Option<u32>,
    csv: Option<PathBuf>,
    cross: bool,
    output: &OutputArgs,
    argv: &[String],
) -> Result<u8> {
    if limit < 2 {
        bail!("limit must be at least 2");
    }
    let filters = Filters { odd_only: odd, omega_equals: omega };
    let sieve = enumerate_dp(limit, filters);
    eprintln!("sieve to {limit}: {} entr{}", sieve.entries.len(), if sieve.entries.len() == 1 { "y" } else { "ies" });
    if let Some(path) = &csv {
        let mut text = String::from("n,d,D,omega,parity\n");
        for e in &sieve.entries {
            text.push_str(&format!(
                "{},{},{},{},{}\n",
                e.n,
                e.d,
                e.codivisor,
                e.omega,
                if e.is_odd { "odd" } else { "even" }
            ));
        }
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    if cross {
        let cfg = SearchConfig {
            omega: omega.unwrap_or(4) as usize,
            odd_only: odd,
            prime_max: 1000.min(limit),
            exp_max: 16,
            value_max: Some(Natural::from(limit)),
            seed: output.seed.unwrap_or(1),
            ..Default::default()
        };
        let report = enumerate_with_stop(&cfg, &mut || false)
            .map_err(|e| anyhow!("cross-check config: {e}"))?;
        match cross_check(&report, &sieve) {
            Ok(ck) => eprintln!(
                "cross-check ok: {} witness(es) agree{}",
                ck.matched,
                if ck.vacuous { " (vacuously: empty domain overlap)" } else { "" }
            ),
            Err(diff) => bail!("cross-check failed: {diff}"),
        }
    }
    let mut record = base_record(argv, output, output.seed.unwrap_or(1));
    record.payload = Payload::Sieve((&sieve).into());
    record.exit_status = 0;
    emit(&record, output)?;
    Ok(0)
}

fn cmd_facts(fixture: &std::path::Path, output: &OutputArgs, argv: &[String]) -> Result<u8> {
    let summary = defiperf::verify_fixture_file(fixture)?;
    let (confirmed, refuted, parse_errors) = summary.counts();
    eprintln!("facts: {confirmed} confirmed, {refuted} refuted, {parse_errors} parse error(s)");
    for (rec, actual) in &summary.refuted {
        eprintln!("refuted: {} -> {}", defiperf_core::facts::to_line(rec), actual);
    }
    for err in &summary.parse_errors {
        eprintln!("parse error: {err}");
    }
    let exit = if parse_errors > 0 {
        2
    } else if refuted > 0 {
        4
    } else {
        0
    };
    let mut record = base_record(argv, output, output.seed.unwrap_or(1));
    record.payload = Payload::Facts((&summary).into());
    record.exit_status = exit;
    emit(&record, output)?;
    Ok(exit as u8)
}
