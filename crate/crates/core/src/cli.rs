//! `rankwild test` and `rankwild simulate`.
//!
//! Exit codes: 0 on success (whatever the test outcome), 2 for usage and
//! config errors, 3 for data errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::analysis::Analysis;
use crate::bootstrap::{bootstrap_tests, BootstrapConfig, DEFAULT_REPLICATES};
use crate::contrasts::{hypothesis_matrix, ContrastSpec, HypothesisKind};
use crate::error::Error;
use crate::harness::{simulate, SimulationConfig};
use crate::io::{read_contrast, read_dataset, write_simulation, DesignSummary, TableFormat, TableSchema, TestOutput};
use crate::statistics::StatKind;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "rankwild", version, about = "Rank-based tests for incomplete repeated-measures designs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OutFormat {
    Json,
    Table,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Layout {
    Wide,
    Long,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Test hypotheses on a CSV dataset.
    Test {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value = "wide")]
        format: Layout,
        #[arg(long, default_value = "group")]
        group_col: String,
        #[arg(long, default_value = "subject")]
        subject_col: String,
        /// WIDE: comma-separated occasion columns (default: all others).
        #[arg(long, value_delimiter = ',')]
        occasion_cols: Vec<String>,
        /// LONG: occasion number column.
        #[arg(long, default_value = "occasion")]
        occasion_col: String,
        /// LONG: value column.
        #[arg(long, default_value = "value")]
        value_col: String,
        #[arg(long, default_value = "NA")]
        missing: String,
        /// group, time, interaction or custom:<path>; repeatable. Default: every
        /// hypothesis the design supports.
        #[arg(long)]
        hypothesis: Vec<String>,
        /// Comma-separated subset of wts, ats, mats.
        #[arg(long, value_delimiter = ',', default_value = "wts,ats,mats")]
        stats: Vec<String>,
        /// Bootstrap replicates.
        #[arg(long = "B", visible_alias = "bootstrap", default_value_t = DEFAULT_REPLICATES)]
        b: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, value_enum, default_value = "json")]
        out: OutFormat,
        /// Worker threads, 0 = all cores.
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Run a Monte Carlo study described by a JSON config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
}

struct Failure {
    code: i32,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config { .. } => EXIT_USAGE,
            _ => EXIT_DATA,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn pool(threads: usize) -> Result<rayon::ThreadPool, Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| usage(format!("cannot start thread pool: {e}")))
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
                return EXIT_USAGE;
            }
            let _ = write!(stdout, "{}", e.render());
            return EXIT_OK;
        }
    };
    let result = match cli.command {
        Command::Test {
            data,
            format,
            group_col,
            subject_col,
            occasion_cols,
            occasion_col,
            value_col,
            missing,
            hypothesis,
            stats,
            b,
            seed,
            alpha,
            out,
            threads,
        } => {
            let schema = TableSchema {
                format: match format {
                    Layout::Wide => TableFormat::Wide,
                    Layout::Long => TableFormat::Long,
                },
                group: group_col,
                subject: subject_col,
                occasions: occasion_cols,
                occasion: occasion_col,
                value: value_col,
                missing,
            };
            run_test(TestArgs {
                data,
                schema,
                hypotheses: hypothesis,
                stats,
                replicates: b,
                seed,
                alpha,
                table: matches!(out, OutFormat::Table),
                threads,
            })
            .and_then(|text| writeln!(stdout, "{text}").map_err(|e| Error::from(e).into()))
        }
        Command::Simulate {
            config,
            out_dir,
            threads,
        } => run_simulate(&config, &out_dir, threads)
            .and_then(|text| write!(stdout, "{text}").map_err(|e| Error::from(e).into())),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

struct TestArgs {
    data: PathBuf,
    schema: TableSchema,
    hypotheses: Vec<String>,
    stats: Vec<String>,
    replicates: usize,
    seed: u64,
    alpha: f64,
    table: bool,
    threads: usize,
}

fn run_test(args: TestArgs) -> Result<String, Failure> {
    if args.replicates == 0 {
        return Err(usage("--B must be at least 1"));
    }
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(usage("--alpha must lie in (0, 1)"));
    }
    let mut stats = Vec::new();
    for s in &args.stats {
        let k = StatKind::parse(s).ok_or_else(|| usage(format!("unknown statistic `{s}`")))?;
        if !stats.contains(&k) {
            stats.push(k);
        }
    }
    stats.sort();

    let labeled = read_dataset(&args.data, &args.schema)?;
    let (a, d) = (labeled.data.groups(), labeled.data.occasions());
    let mut contrasts: Vec<ContrastSpec> = Vec::new();
    if args.hypotheses.is_empty() {
        for k in [HypothesisKind::Group, HypothesisKind::Time, HypothesisKind::Interaction] {
            if k.applies_to(a, d) {
                contrasts.push(hypothesis_matrix(a, d, k)?);
            }
        }
        if contrasts.is_empty() {
            return Err(usage("the design supports no standard hypothesis; pass --hypothesis custom:<path>"));
        }
    }
    for h in &args.hypotheses {
        if let Some(path) = h.strip_prefix("custom:") {
            contrasts.push(read_contrast(path)?);
        } else {
            let k: HypothesisKind = h.parse().map_err(|_| usage(format!("unknown hypothesis `{h}`")))?;
            if k == HypothesisKind::Custom {
                return Err(usage("use custom:<path> for a custom contrast"));
            }
            contrasts.push(hypothesis_matrix(a, d, k)?);
        }
    }

    let design = DesignSummary::of(&labeled);
    let validated = labeled.data.validate()?;
    let config = BootstrapConfig::new(args.replicates, args.seed).with_statistics(&stats);
    let reports = pool(args.threads)?.install(|| {
        let analysis = Analysis::new(&validated);
        bootstrap_tests(&analysis, &contrasts, &config)
    })?;
    let output = TestOutput::new(design, args.alpha, reports);
    Ok(if args.table { output.to_table() } else { output.to_json() })
}

fn run_simulate(config: &PathBuf, out_dir: &PathBuf, threads: usize) -> Result<String, Failure> {
    let text = std::fs::read_to_string(config).map_err(|e| usage(format!("cannot read {}: {e}", config.display())))?;
    let config = SimulationConfig::from_json(&text)?;
    let result = pool(threads)?.install(|| simulate(&config))?;
    write_simulation(out_dir, &result)?;
    Ok(format!(
        "{} cells, {} replication records, {} summary rows written to {}\n",
        result.cells.len(),
        result.records.len(),
        result.summary.len(),
        out_dir.display()
    ))
}
