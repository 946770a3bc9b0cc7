//! Command-line front end: analyze traces, run the two-phase diagnosis,
//! compare algorithms, and generate or perturb synthetic traces.
//!
//! Exit codes: 0 on success (races found is data, not failure), 2 on input
//! or configuration errors, 3 when a resource cap is exceeded.

use clap::{Args, Parser, Subcommand, ValueEnum};
use racediag::analyzers::{run_fasttrack, run_hb_partner, run_shb_partner, run_sshb_phase1};
use racediag::diagnosis::{self, Classification};
use racediag::lockset;
use racediag::perturb_gen::{gen_trace, perturb, GenConfig, PerturbMode};
use racediag::relations;
use racediag::report::{self, ReportDocument};
use racediag::trace::{
    insert_dummy_releases, parse_trace, serialize_trace, validate, Trace, ValidityLevel,
};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

const EXIT_INPUT: u8 = 2;
const EXIT_CAP: u8 = 3;

#[derive(Parser)]
#[command(name = "racediag", version, about = "Trace-based data race prediction and diagnosis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algo {
    Fasttrack,
    Hb,
    Shb,
    Sshb,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Rw,
    Rr,
}

#[derive(Args)]
struct InputArgs {
    /// Trace file to read.
    #[arg(long)]
    input: PathBuf,
    /// Append synthetic releases for dangling acquires before validation.
    #[arg(long)]
    insert_dummy_releases: bool,
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Collapse race pairs to unique code-location pairs.
    #[arg(long)]
    dedup_by_location: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one analyzer over a trace and report its races.
    Analyze {
        #[arg(long, value_enum)]
        algo: Algo,
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run both phases and classify each race as guaranteed or maybe.
    Diagnose {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        output: OutputArgs,
        /// Flag guaranteed races whose events hold a common mutex.
        #[arg(long)]
        lockset_filter: bool,
        /// Cross-check every verdict against exhaustive enumeration.
        #[arg(long)]
        oracle_check: bool,
        /// Combination cap for the oracle check.
        #[arg(long, default_value_t = relations::DEFAULT_PRODUCT_CAP)]
        oracle_cap: u64,
        /// Worker threads for pair classification.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Run hb, shb and the diagnosis side by side on one trace.
    Compare {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        output: OutputArgs,
        #[arg(long)]
        lockset_filter: bool,
    },
    /// Generate a synthetic strictly-valid trace.
    Gen {
        #[arg(long, default_value_t = 2)]
        threads: usize,
        #[arg(long, default_value_t = 2)]
        vars: usize,
        #[arg(long, default_value_t = 1)]
        locks: usize,
        #[arg(long, default_value_t = 20)]
        events: usize,
        /// Probability that an access happens inside a critical section.
        #[arg(long, default_value_t = 0.5)]
        lock_discipline: f64,
        /// Give every read a same-thread earlier write on its variable.
        #[arg(long)]
        ensure_initial_writes: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output trace file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reorder a trace the way an inaccurate tracer might record it.
    Perturb {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        /// Transposition attempts (defaults to the trace length).
        #[arg(long)]
        swaps: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn fail(code: u8, msg: &str) -> ExitCode {
    eprintln!("racediag: {msg}");
    ExitCode::from(code)
}

fn load_trace(args: &InputArgs) -> Result<Trace, ExitCode> {
    let text = std::fs::read_to_string(&args.input)
        .map_err(|e| fail(EXIT_INPUT, &format!("{}: {e}", args.input.display())))?;
    let mut t = parse_trace(&text)
        .map_err(|e| fail(EXIT_INPUT, &format!("{}: {e}", args.input.display())))?;
    if args.insert_dummy_releases {
        t = insert_dummy_releases(&t);
    }
    let rep = validate(&t, ValidityLevel::Lenient);
    if !rep.is_valid() {
        for v in &rep.violations {
            eprintln!("racediag: {}: event {}: {}", args.input.display(), v.pos, v.message);
        }
        return Err(fail(
            EXIT_INPUT,
            "trace is not well-formed (see violations above); --insert-dummy-releases repairs dangling acquires",
        ));
    }
    Ok(t)
}

fn emit(doc: &ReportDocument, output: &OutputArgs, compare_layout: bool) -> Result<(), ExitCode> {
    let text = match output.format {
        Format::Json => doc.to_json(),
        Format::Text if compare_layout => report::render_compare_text(doc),
        Format::Text => report::render_text(doc),
    };
    match &output.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| fail(EXIT_INPUT, &format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_analyze(algo: Algo, input: InputArgs, output: OutputArgs) -> Result<(), ExitCode> {
    let t = load_trace(&input)?;
    let mut doc = ReportDocument::new(
        "analyze",
        Some(input.input.display().to_string()),
        t.meta(),
    );
    doc.dedup_by_location = output.dedup_by_location;
    let start = Instant::now();
    let section = match algo {
        Algo::Fasttrack => {
            let rep = run_fasttrack(&t);
            report::fasttrack_section(&t, &rep, start.elapsed())
        }
        Algo::Hb | Algo::Shb | Algo::Sshb => {
            let (name, races, edges) = match algo {
                Algo::Hb => ("hb", run_hb_partner(&t), None),
                Algo::Shb => ("shb", run_shb_partner(&t), None),
                _ => {
                    let out = run_sshb_phase1(&t);
                    ("sshb", out.races, Some(out.edges.len()))
                }
            };
            let elapsed = start.elapsed();
            let races = if output.dedup_by_location {
                report::dedup_pairs_by_location(&t, &races)
            } else {
                races
            };
            report::algo_section(&t, name, &races, elapsed, edges)
        }
    };
    doc.algorithms.push(section);
    emit(&doc, &output, false)
}

fn diagnose_races(
    t: &Trace,
    lockset_filter: bool,
    jobs: usize,
) -> (racediag::diagnosis::DiagnosisReport, Vec<Classification>) {
    let mut rep = diagnosis::diagnose_all_jobs(t, jobs);
    if lockset_filter {
        let ls = lockset::compute_locksets(t);
        lockset::lockset_flags(&mut rep, &ls);
    }
    let races = rep.races.clone();
    (rep, races)
}

fn cmd_diagnose(
    input: InputArgs,
    output: OutputArgs,
    lockset_filter: bool,
    oracle_check: bool,
    oracle_cap: u64,
    jobs: usize,
) -> Result<(), ExitCode> {
    let t = load_trace(&input)?;
    let (rep, mut races) = diagnose_races(&t, lockset_filter, jobs);
    if output.dedup_by_location {
        races = report::dedup_classifications_by_location(&t, &races);
    }
    let mut doc = ReportDocument::new(
        "diagnose",
        Some(input.input.display().to_string()),
        t.meta(),
    );
    doc.dedup_by_location = output.dedup_by_location;
    let mut section = report::diag_section(&t, &rep, &races);

    if oracle_check {
        if t.len() > relations::CLOSURE_EVENT_LIMIT {
            return Err(fail(
                EXIT_CAP,
                &format!(
                    "oracle check supports at most {} events, trace has {}",
                    relations::CLOSURE_EVENT_LIMIT,
                    t.len()
                ),
            ));
        }
        let hb = relations::hb_relation(&t);
        let instances = match relations::enumerate_someshb_with_cap(&t, oracle_cap) {
            Ok(i) => i,
            Err(e) => return Err(fail(EXIT_CAP, &e.to_string())),
        };
        let mut agreed = 0;
        for (c, entry) in races.iter().zip(section.races.iter_mut()) {
            let verdict = relations::classify_with_instances(
                &t,
                &hb,
                &instances,
                c.pair.first,
                c.pair.second,
            );
            let matches = match (verdict, c.verdict) {
                (relations::OracleVerdict::Guaranteed, diagnosis::Verdict::Guaranteed) => true,
                (relations::OracleVerdict::Maybe, diagnosis::Verdict::Maybe) => true,
                _ => false,
            };
            agreed += matches as usize;
            entry.oracle = Some(
                match verdict {
                    relations::OracleVerdict::Guaranteed => "guaranteed",
                    relations::OracleVerdict::Maybe => "maybe",
                    relations::OracleVerdict::NotAnHbRace => "not-a-race",
                }
                .to_string(),
            );
        }
        doc.oracle = Some(report::OracleSection {
            checked: races.len(),
            agreed,
            agreement_pct: if races.is_empty() {
                100.0
            } else {
                100.0 * agreed as f64 / races.len() as f64
            },
        });
    }

    doc.diagnosis = Some(section);
    emit(&doc, &output, false)
}

fn cmd_compare(input: InputArgs, output: OutputArgs, lockset_filter: bool) -> Result<(), ExitCode> {
    let t = load_trace(&input)?;
    let mut doc = ReportDocument::new(
        "compare",
        Some(input.input.display().to_string()),
        t.meta(),
    );
    doc.dedup_by_location = output.dedup_by_location;

    let start = Instant::now();
    let hb = run_hb_partner(&t);
    let hb_time = start.elapsed();
    let start = Instant::now();
    let shb = run_shb_partner(&t);
    let shb_time = start.elapsed();
    let (rep, mut races) = diagnose_races(&t, lockset_filter, 1);

    let (hb, shb) = if output.dedup_by_location {
        races = report::dedup_classifications_by_location(&t, &races);
        (
            report::dedup_pairs_by_location(&t, &hb),
            report::dedup_pairs_by_location(&t, &shb),
        )
    } else {
        (hb, shb)
    };

    doc.algorithms
        .push(report::algo_section(&t, "hb", &hb, hb_time, None));
    doc.algorithms
        .push(report::algo_section(&t, "shb", &shb, shb_time, None));
    doc.diagnosis = Some(report::diag_section(&t, &rep, &races));
    emit(&doc, &output, true)
}

fn write_trace_out(t: &Trace, out: Option<PathBuf>) -> Result<(), ExitCode> {
    let text = serialize_trace(t);
    match out {
        Some(path) => std::fs::write(&path, text)
            .map_err(|e| fail(EXIT_INPUT, &format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze {
            algo,
            input,
            output,
        } => cmd_analyze(algo, input, output),
        Command::Diagnose {
            input,
            output,
            lockset_filter,
            oracle_check,
            oracle_cap,
            jobs,
        } => cmd_diagnose(
            input,
            output,
            lockset_filter,
            oracle_check,
            oracle_cap,
            jobs.max(1),
        ),
        Command::Compare {
            input,
            output,
            lockset_filter,
        } => cmd_compare(input, output, lockset_filter),
        Command::Gen {
            threads,
            vars,
            locks,
            events,
            lock_discipline,
            ensure_initial_writes,
            seed,
            out,
        } => {
            let cfg = GenConfig {
                threads,
                vars,
                locks,
                events,
                lock_discipline,
                ensure_initial_writes,
                seed,
            };
            match gen_trace(&cfg) {
                Ok(t) => write_trace_out(&t, out),
                Err(e) => Err(fail(EXIT_INPUT, &e.to_string())),
            }
        }
        Command::Perturb {
            input,
            mode,
            swaps,
            seed,
            out,
        } => {
            let args = InputArgs {
                input,
                insert_dummy_releases: false,
            };
            match load_trace(&args) {
                Ok(t) => {
                    let mode = match mode {
                        Mode::Rw => PerturbMode::Rw,
                        Mode::Rr => PerturbMode::Rr,
                    };
                    write_trace_out(&perturb(&t, mode, seed, swaps), out)
                }
                Err(code) => Err(code),
            }
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}
