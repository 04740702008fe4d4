//! Command-line front end. [`run`] takes the arguments and output streams
//! so the binary and the tests share one entry point.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kldt_core::pointloc::{brute_position_vector, parse_arrangement, parse_queries, PLConfig, PLTree};
use kldt_core::record::{decision_label, run_grid, to_csv, to_json, BenchGrid, RunRecord};
use kldt_core::{brute_decide, decide, parse_instance, Error, LdtInstance, Rat, SolverConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const EXIT_NO: i32 = 0;
pub const EXIT_YES: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;
/// `verify` found a disagreement with the brute-force decision.
pub const EXIT_DISAGREE: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "kldt", version, about = "Exact k-SUM / k-LDT decisions in the linear decision tree model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide one instance file. Exit 0 = NO, 1 = YES.
    Solve {
        path: PathBuf,
        #[command(flatten)]
        solver: SolverFlags,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Compare decisions against brute force on seeded random instances.
    Verify {
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 6)]
        n_min: usize,
        #[arg(long, default_value_t = 14)]
        n_max: usize,
        /// Comma-separated k values.
        #[arg(long, value_delimiter = ',', default_value = "3,4,5")]
        k: Vec<usize>,
        #[arg(long, default_value_t = 0.5)]
        planted_ratio: f64,
        /// Draw random LDT coefficients instead of k-SUM.
        #[arg(long)]
        ldt: bool,
        #[command(flatten)]
        solver: SolverFlags,
    },
    /// Solve a grid of random k-SUM instances and emit one row per solve
    /// plus per-(n, k) aggregates.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "16,20,24,28")]
        n: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "3")]
        k: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        #[arg(long, default_value_t = 0.0)]
        planted_ratio: f64,
        #[command(flatten)]
        solver: SolverFlags,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Build the point-location structure of an arrangement and answer the
    /// query points, checking each against direct evaluation.
    Pointloc {
        arrangement: PathBuf,
        queries: PathBuf,
        /// Shrink factor per tree level (default 1/d).
        #[arg(long, value_parser = parse_rat_arg)]
        epsilon: Option<Rat>,
        #[arg(long, value_parser = parse_rat_arg)]
        sample_const: Option<Rat>,
        /// Fixed sample size per node.
        #[arg(long)]
        sample_size: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Build every prism up front.
        #[arg(long)]
        eager: bool,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

#[derive(Args, Debug, Clone)]
struct SolverFlags {
    #[arg(long, value_parser = parse_rat_arg)]
    epsilon: Option<Rat>,
    #[arg(long, value_parser = parse_rat_arg)]
    sample_const: Option<Rat>,
    /// Conflict lists at most this long are tested directly.
    #[arg(long)]
    threshold: Option<usize>,
    #[arg(long)]
    max_resamples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Switch::Off)]
    dedup: Switch,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Switch {
    On,
    Off,
}

fn parse_rat_arg(s: &str) -> Result<Rat, String> {
    kldt_core::parse_rat(s).ok_or_else(|| format!("invalid rational `{s}`"))
}

impl SolverFlags {
    fn config(&self) -> SolverConfig {
        let d = SolverConfig::default();
        SolverConfig {
            epsilon: self.epsilon.clone().unwrap_or(d.epsilon),
            sample_const: self.sample_const.clone().unwrap_or(d.sample_const),
            direct_threshold: self.threshold.unwrap_or(d.direct_threshold),
            max_resamples: self.max_resamples.unwrap_or(d.max_resamples),
            seed: self.seed,
            dedup: self.dedup == Switch::On,
            ..d
        }
    }
}

/// Failure of a command, mapped to an exit code.
enum Failure {
    Parse(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse { .. } | Error::InvalidInstance(_) | Error::Config(_) | Error::CapExceeded(_) => {
                Failure::Parse(e.to_string())
            }
            other => Failure::Internal(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Internal(format!("output: {e}"))
    }
}

fn read(path: &PathBuf) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))
}

/// Runs the command line `args` (including the program name). Returns the
/// exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = match cli.command {
        Command::Solve { path, solver, format } => solve(&path, &solver, format, out),
        Command::Verify {
            count,
            n_min,
            n_max,
            k,
            planted_ratio,
            ldt,
            solver,
        } => verify(count, n_min, n_max, &k, planted_ratio, ldt, &solver, out),
        Command::Bench {
            n,
            k,
            reps,
            planted_ratio,
            solver,
            format,
        } => bench(n, k, reps, planted_ratio, &solver, format, out),
        Command::Pointloc {
            arrangement,
            queries,
            epsilon,
            sample_const,
            sample_size,
            seed,
            eager,
            format,
        } => pointloc(&arrangement, &queries, epsilon, sample_const, sample_size, seed, eager, format, out),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Parse(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_PARSE
        }
        Err(Failure::Internal(msg)) => {
            let _ = writeln!(err, "internal error: {msg}");
            EXIT_INTERNAL
        }
    }
}

fn solve(path: &PathBuf, flags: &SolverFlags, format: Option<Format>, out: &mut dyn Write) -> Result<i32, Failure> {
    let inst = parse_instance(&read(path)?)?;
    let config = flags.config();
    config.validate()?;
    let report = decide(&inst, &config)?;
    let record = RunRecord::from_report(&report, flags.seed);
    match format {
        None => {
            writeln!(out, "{}", decision_label(&report.decision))?;
            writeln!(
                out,
                "queries {} (distinct {}), rounds {}, resamples {}, flagged {}",
                record.queries_raw, record.queries_dedup, record.rounds, record.resamples, record.flagged
            )?;
            writeln!(out, "transform seed {}, restarts {}", report.transform_seed, report.restarts)?;
        }
        Some(Format::Csv) => out.write_all(to_csv(&[record])?.as_bytes())?,
        Some(Format::Json) => out.write_all(to_json(&[record]).as_bytes())?,
    }
    Ok(if report.decision.is_yes() { EXIT_YES } else { EXIT_NO })
}

#[allow(clippy::too_many_arguments)]
fn verify(
    count: usize,
    n_min: usize,
    n_max: usize,
    ks: &[usize],
    planted_ratio: f64,
    ldt: bool,
    flags: &SolverFlags,
    out: &mut dyn Write,
) -> Result<i32, Failure> {
    const MAX_N: usize = 20;
    if n_min > n_max || n_max > MAX_N {
        return Err(Failure::Parse(format!("n range must satisfy n-min <= n-max <= {MAX_N}")));
    }
    if ks.is_empty() || ks.iter().any(|&k| k < 2 || k > n_min) {
        return Err(Failure::Parse("every k must satisfy 2 <= k <= n-min".into()));
    }
    if !(0.0..=1.0).contains(&planted_ratio) {
        return Err(Failure::Parse("planted ratio must lie in [0, 1]".into()));
    }
    let base = flags.config();
    base.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(flags.seed);
    let mut agree = 0;
    let mut yes = 0;
    for i in 0..count {
        let seed: u64 = rng.gen();
        let mut inst_rng = ChaCha8Rng::seed_from_u64(seed);
        let n = inst_rng.gen_range(n_min..=n_max);
        let k = ks[inst_rng.gen_range(0..ks.len())];
        let planted = inst_rng.gen_bool(planted_ratio);
        let spec = kldt_core::instance::InstanceSpec {
            ldt,
            max_denominator: 50,
            ..kldt_core::instance::InstanceSpec::ksum(n, k, planted)
        };
        let inst = kldt_core::instance::random_instance(&mut inst_rng, &spec);
        let config = SolverConfig { seed, ..base.clone() };
        let report = decide(&inst, &config)?;
        let expect = brute_decide(&inst);
        let ok = report.decision.is_yes() == expect.is_yes() && witness_holds(&inst, &report.decision);
        if ok {
            agree += 1;
        } else {
            writeln!(out, "disagreement on instance {i} (seed {seed}, n {n}, k {k})")?;
        }
        yes += usize::from(report.decision.is_yes());
    }
    writeln!(out, "agreement {agree}/{count} (YES {yes}, NO {})", count - yes)?;
    Ok(if agree == count { 0 } else { EXIT_DISAGREE })
}

fn witness_holds(inst: &LdtInstance, decision: &kldt_core::Decision) -> bool {
    decision.witness().is_none_or(|id| inst.value_at(id) == Rat::from_integer(0.into()))
}

#[allow(clippy::too_many_arguments)]
fn bench(
    ns: Vec<usize>,
    ks: Vec<usize>,
    reps: usize,
    planted_ratio: f64,
    flags: &SolverFlags,
    format: Format,
    out: &mut dyn Write,
) -> Result<i32, Failure> {
    if ns.iter().any(|&n| ks.iter().any(|&k| k < 2 || k > n)) {
        return Err(Failure::Parse("every k must satisfy 2 <= k <= n".into()));
    }
    let config = flags.config();
    config.validate()?;
    let grid = BenchGrid {
        planted_ratio,
        ..BenchGrid::new(ns, ks, reps, flags.seed)
    };
    let rows = run_grid(&grid, &config)?;
    match format {
        Format::Csv => out.write_all(to_csv(&rows)?.as_bytes())?,
        Format::Json => out.write_all(to_json(&rows).as_bytes())?,
    }
    Ok(0)
}

#[derive(serde::Serialize)]
struct QueryRow {
    query: usize,
    point: String,
    position: String,
    cost: usize,
    agrees: bool,
}

#[allow(clippy::too_many_arguments)]
fn pointloc(
    arrangement: &PathBuf,
    queries: &PathBuf,
    epsilon: Option<Rat>,
    sample_const: Option<Rat>,
    sample_size: Option<usize>,
    seed: u64,
    eager: bool,
    format: Format,
    out: &mut dyn Write,
) -> Result<i32, Failure> {
    let (d, forms) = parse_arrangement(&read(arrangement)?)?;
    let points = parse_queries(&read(queries)?, d)?;
    let defaults = PLConfig::for_dim(d);
    let config = PLConfig {
        epsilon: epsilon.unwrap_or(defaults.epsilon.clone()),
        sample_const: sample_const.unwrap_or(defaults.sample_const.clone()),
        sample_size,
        seed,
        eager,
        ..defaults
    };
    let mut tree = PLTree::build(&forms, config)?;
    let mut rows = Vec::with_capacity(points.len());
    for (i, q) in points.iter().enumerate() {
        let (pv, cost) = tree.query_with_cost(q)?;
        let agrees = pv == brute_position_vector(&forms, q)?;
        let point: Vec<String> = q.iter().map(Rat::to_string).collect();
        rows.push(QueryRow {
            query: i,
            point: point.join(" "),
            position: pv.to_string(),
            cost,
            agrees,
        });
    }
    let agree = rows.iter().filter(|r| r.agrees).count();
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in &rows {
                w.serialize(r).map_err(|e| Failure::Internal(e.to_string()))?;
            }
            let bytes = w.into_inner().map_err(|e| Failure::Internal(e.to_string()))?;
            out.write_all(&bytes)?;
            let stats = tree.stats();
            writeln!(
                out,
                "# agreement {agree}/{}; r {}; primary nodes {}; prisms {}; flagged {}",
                rows.len(),
                tree.sample_size(),
                stats.primary_nodes,
                stats.prisms,
                stats.flagged
            )?;
        }
        Format::Json => {
            let doc = serde_json::json!({
                "queries": rows,
                "agreement": agree,
                "total": points.len(),
                "sample_size": tree.sample_size(),
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("serializable"))?;
        }
    }
    Ok(if agree == rows.len() { 0 } else { EXIT_DISAGREE })
}
