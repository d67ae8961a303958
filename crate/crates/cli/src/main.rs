//! `gym`: validate and transform decompositions, generate fixtures and run
//! the join engines under the cost simulator.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use gym_core::bsp::{MachineConfig, SimError, DEFAULT_BUCKET_CAP};
use gym_core::engine::{dym_d, dym_n, gym, serial_yannakakis, EngineError, EngineKind, GymMode};
use gym_core::fixtures::{gen_data, DataMode, DataSpec, FixtureError};
use gym_core::ghd::{fixture_ghd, stats, validate_ghd, Ghd, GhdError, GhdFamily, GhdStats};
use gym_core::query::{oracle_join_bounded, Database, Instance, Query, QueryError};
use gym_core::transform::{c_gta_sizes, c_gta_then_log, log_gta, TraceEvent, TransformError};

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("invalid GHD:\n{0}")]
    InvalidGhd(String),
    #[error("width must be 1 for engine {engine}, got {width}; use --engine gym")]
    Width { engine: &'static str, width: usize },
    #[error("simulator aborted: {0}")]
    Aborted(SimError),
    #[error("{0}")]
    Mismatch(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::InvalidGhd(_) => 1,
            CliError::Input(_) | CliError::Width { .. } => 2,
            CliError::Aborted(_) => 3,
            CliError::Mismatch(_) => 4,
        }
    }
}

macro_rules! input_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Input(e.to_string())
            }
        }
    )*};
}
input_error!(QueryError, GhdError, FixtureError, std::io::Error, serde_json::Error);

impl From<TransformError> for CliError {
    fn from(e: TransformError) -> Self {
        match e {
            TransformError::Invalid(s) => CliError::InvalidGhd(s),
            other => CliError::Input(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "gym", version, about = "Multiround distributed joins over generalized hypertree decompositions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a decomposition and print its width, depth and intersection width.
    Validate(Source),
    /// Rewrite a decomposition to reduce its depth.
    Transform {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value = "loggta")]
        transform: TransformMode,
        /// Where to write the transformed decomposition.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Where to write the Log-GTA inactivation trace.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Evaluate the query with one of the engines.
    Run(RunArgs),
    /// Write a fixture's query, decomposition and random data to a directory.
    Generate {
        #[arg(long)]
        fixture: FixtureName,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Clone)]
struct Source {
    /// Query file: one atom per line, e.g. `R(A,B)`.
    #[arg(long, requires = "ghd", conflicts_with = "fixture")]
    query: Option<PathBuf>,
    /// Decomposition JSON.
    #[arg(long, requires = "query")]
    ghd: Option<PathBuf>,
    /// Built-in fixture: `S:n`, `C:n`, `TC:n`, `CG:n:g` or `c16-width3`.
    #[arg(long)]
    fixture: Option<FixtureName>,
    /// Largest cover size tried when computing intersection width.
    #[arg(long, default_value_t = 4)]
    iw_budget: usize,
}

#[derive(Args, Clone)]
struct DataArgs {
    /// Seed for all randomness; falls back to `GYM_SEED`, then 0.
    #[arg(long, env = "GYM_SEED", default_value_t = 0)]
    seed: u64,
    /// Values are drawn from `1..=domain`.
    #[arg(long, default_value_t = 8)]
    domain: i64,
    /// Rows per generated relation.
    #[arg(long, default_value_t = 16)]
    rows: usize,
    /// Generate matching data: no value repeats within a column.
    #[arg(long)]
    matching: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    /// Directory with one `<relation>.tsv` per relation. Fixtures generate
    /// data when this is absent.
    #[arg(long)]
    data: Option<PathBuf>,
    #[command(flatten)]
    gen: DataArgs,
    #[arg(long, default_value = "gym")]
    engine: EngineName,
    /// Scheduling used by the gym engine after materialization.
    #[arg(long, value_enum, default_value_t = Schedule::Parallel)]
    schedule: Schedule,
    #[arg(long, default_value = "none")]
    transform: TransformMode,
    /// Per-reducer memory M in tuples.
    #[arg(long, default_value_t = 64)]
    memory: usize,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Upper limit on first-level hash buckets in duplicate elimination and
    /// intersection.
    #[arg(long, default_value_t = DEFAULT_BUCKET_CAP)]
    bucket_cap: usize,
    /// Compare the output against a brute-force join.
    #[arg(long)]
    check_oracle: bool,
    /// Largest output the brute-force join may produce.
    #[arg(long, default_value_t = 1_000_000)]
    oracle_budget: usize,
    /// Fail when a join-phase intermediate is larger than the output.
    #[arg(long)]
    max_intermediate_watch: bool,
    /// Output relation as TSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run report as JSON; printed to stdout when absent.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Inactivation trace of the transform, if one is applied.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Schedule {
    Parallel,
    Sequential,
}

#[derive(Copy, Clone)]
struct EngineName(EngineKind);

impl std::str::FromStr for EngineName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        EngineKind::parse(s)
            .map(EngineName)
            .ok_or_else(|| format!("unknown engine `{s}`; expected serial, dym-n, dym-d or gym"))
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
enum TransformMode {
    None,
    LogGta,
    CGta(usize),
}

impl std::str::FromStr for TransformMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(TransformMode::None),
            "loggta" => Ok(TransformMode::LogGta),
            _ => s
                .strip_prefix("cgta:")
                .and_then(|i| i.parse().ok())
                .map(TransformMode::CGta)
                .ok_or_else(|| format!("unknown transform `{s}`; expected none, loggta or cgta:<passes>")),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
struct FixtureName(GhdFamily);

impl std::str::FromStr for FixtureName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("c16-width3") {
            return Ok(FixtureName(GhdFamily::C16Width3));
        }
        let bad = || format!("unknown fixture `{s}`; expected S:n, C:n, TC:n, CG:n:g or c16-width3");
        let parts: Vec<&str> = s.split(':').collect();
        let num = |i: usize| parts.get(i).and_then(|p| p.parse::<usize>().ok()).ok_or_else(bad);
        let family = match (parts[0].to_ascii_uppercase().as_str(), parts.len()) {
            ("S", 2) => GhdFamily::Star(num(1)?),
            ("C", 2) => GhdFamily::Chain(num(1)?),
            ("TC", 2) => GhdFamily::TriangleChain(num(1)?),
            ("CG", 3) => GhdFamily::ChainGrouped {
                n: num(1)?,
                group: num(2)?,
            },
            _ => return Err(bad()),
        };
        Ok(FixtureName(family))
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load(source: &Source) -> Result<(Query, Ghd), CliError> {
    match (&source.fixture, &source.query, &source.ghd) {
        (Some(f), _, _) => Ok(fixture_ghd(f.0)?),
        (None, Some(q), Some(g)) => {
            let q = Query::parse(&read(q)?)?;
            let d = Ghd::from_json(&q, &read(g)?)?;
            Ok((q, d))
        }
        _ => Err(CliError::Input("give either --fixture or both --query and --ghd".into())),
    }
}

fn ensure_valid(q: &Query, d: &Ghd) -> Result<(), CliError> {
    let report = validate_ghd(q, d);
    if report.is_valid() {
        Ok(())
    } else {
        Err(CliError::InvalidGhd(report.to_string()))
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// One JSON object per line, one line per inactivation.
fn trace_lines(events: &[TraceEvent]) -> Result<String, CliError> {
    let mut s = String::new();
    for e in events {
        s.push_str(&serde_json::to_string(e)?);
        s.push('\n');
    }
    Ok(s)
}

fn apply_transform(q: &Query, d: &Ghd, mode: TransformMode) -> Result<(Ghd, Vec<TraceEvent>), CliError> {
    Ok(match mode {
        TransformMode::None => (d.clone(), Vec::new()),
        TransformMode::LogGta => {
            let out = log_gta(q, d)?;
            (out.ghd, out.trace)
        }
        TransformMode::CGta(i) => {
            let out = c_gta_then_log(q, d, i)?;
            (out.ghd, out.trace)
        }
    })
}

fn cmd_validate(source: &Source) -> Result<(), CliError> {
    let (q, d) = load(source)?;
    let report = validate_ghd(&q, &d);
    print!("{}", to_json(&stats(&q, &d, source.iw_budget))?);
    if report.is_valid() {
        Ok(())
    } else {
        Err(CliError::InvalidGhd(report.to_string()))
    }
}

#[derive(Serialize)]
struct TransformSummary {
    before: GhdStats,
    /// Node counts before and after each merge pass.
    #[serde(skip_serializing_if = "Option::is_none")]
    merge_passes: Option<Vec<usize>>,
    after: GhdStats,
}

fn cmd_transform(source: &Source, mode: TransformMode, out: Option<&Path>, trace: Option<&Path>) -> Result<(), CliError> {
    let (q, d) = load(source)?;
    ensure_valid(&q, &d)?;
    let (t, events) = apply_transform(&q, &d, mode)?;
    if let Some(path) = out {
        write(path, &t.to_json(&q))?;
    }
    if let Some(path) = trace {
        write(path, &trace_lines(&events)?)?;
    }
    let summary = TransformSummary {
        before: stats(&q, &d, source.iw_budget),
        merge_passes: match mode {
            TransformMode::CGta(i) => Some(c_gta_sizes(&q, &d, i)?),
            _ => None,
        },
        after: stats(&q, &t, source.iw_budget),
    };
    print!("{}", to_json(&summary)?);
    Ok(())
}

fn data_spec(args: &DataArgs) -> DataSpec {
    DataSpec {
        seed: args.seed,
        domain: args.domain,
        rows: args.rows,
        mode: if args.matching { DataMode::Matching } else { DataMode::Uniform },
    }
}

fn cmd_generate(fixture: FixtureName, args: &DataArgs, out: &Path) -> Result<(), CliError> {
    let (q, d) = fixture_ghd(fixture.0)?;
    let db = gen_data(&q, &data_spec(args))?;
    write(&out.join("query.txt"), &q.to_text())?;
    write(&out.join("ghd.json"), &d.to_json(&q))?;
    fs::create_dir_all(out.join("data"))?;
    db.write_dir(&out.join("data"))?;
    Ok(())
}

fn engine_error(kind: EngineKind, e: EngineError, report: Option<&Path>) -> CliError {
    match e {
        EngineError::Width(width) => CliError::Width {
            engine: kind.label(),
            width,
        },
        EngineError::Invalid(s) => CliError::InvalidGhd(s),
        EngineError::Aborted { error, ledger } => {
            if let Some(path) = report {
                if let Err(e) = write(path, &ledger.to_json()) {
                    log::error!("could not write the aborted ledger: {e}");
                }
            }
            CliError::Aborted(error)
        }
        other => CliError::Input(other.to_string()),
    }
}

fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let (q, d) = load(&args.source)?;
    let db = match &args.data {
        Some(dir) => Database::load_dir(dir, &q)?,
        None if args.source.fixture.is_some() => gen_data(&q, &data_spec(&args.gen))?,
        None => return Err(CliError::Input("--data is required with --query".into())),
    };
    let inst = Instance::new(q, db)?;
    ensure_valid(&inst.query, &d)?;
    let (d, events) = apply_transform(&inst.query, &d, args.transform)?;
    if let Some(path) = &args.trace {
        write(path, &trace_lines(&events)?)?;
    }

    let mut cfg = MachineConfig::new(args.memory, args.gen.seed)
        .map_err(|e| CliError::Input(e.to_string()))?
        .with_bucket_cap(args.bucket_cap);
    if let Some(eps) = args.epsilon {
        cfg = cfg.with_epsilon(eps).map_err(|e| CliError::Input(e.to_string()))?;
    }
    let kind = args.engine.0;
    let run = match kind {
        EngineKind::Serial => serial_yannakakis(&inst, &d),
        EngineKind::DymN => dym_n(&inst, &d, &cfg),
        EngineKind::DymD => dym_d(&inst, &d, &cfg),
        EngineKind::Gym => {
            let mode = match args.schedule {
                Schedule::Parallel => GymMode::Parallel,
                Schedule::Sequential => GymMode::Sequential,
            };
            gym(&inst, &d, &cfg, mode)
        }
    }
    .map_err(|e| engine_error(kind, e, args.report.as_deref()))?;

    if let Some(path) = &args.out {
        write(path, &inst.relation_tsv(&run.output))?;
    }
    match &args.report {
        Some(path) => write(path, &run.report.to_json())?,
        None => print!("{}", run.report.to_json()),
    }
    if args.max_intermediate_watch && !run.report.intermediates_within_output() {
        return Err(CliError::Mismatch(format!(
            "join-phase intermediate of {} rows exceeds the output size {}",
            run.report.max_intermediate, run.report.output_size
        )));
    }
    if args.check_oracle {
        let expected = oracle_join_bounded(&inst, args.oracle_budget)?;
        if !run.output.same_contents(&expected) {
            return Err(CliError::Mismatch(format!(
                "output has {} rows, the brute-force join has {}",
                run.output.len(),
                expected.len()
            )));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate(source) => cmd_validate(source),
        Command::Transform {
            source,
            transform,
            out,
            trace,
        } => cmd_transform(source, *transform, out.as_deref(), trace.as_deref()),
        Command::Run(args) => cmd_run(args),
        Command::Generate { fixture, data, out } => cmd_generate(*fixture, data, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gym: {e}");
            ExitCode::from(e.code())
        }
    }
}
