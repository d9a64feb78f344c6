mod config;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use maxeffect::cart::{Criterion, PruneRule};
use maxeffect::oracle::{verify_model, verify_random_models, DiscreteScm, RandomScmConfig, VerifyConfig, VerifyReport};
use maxeffect::pipeline::{fit, FitConfig};
use maxeffect::sim::{simulate, SimSpec};
use maxeffect::sweep::{run_sweep, write_metrics_csv, SweepConfig};
use maxeffect::tabular::{load_csv, read_header, write_csv, HonestSplitConfig, OutcomeKind, Schema};
use maxeffect::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NO_SUBGROUP: u8 = 3;
const EXIT_VERIFY: u8 = 4;

const GROUND_TRUTH_SCHEMA_VERSION: u32 = 1;
const VERIFY_SCHEMA_VERSION: u32 = 1;

/// Maximum-effect subgroup discovery.
#[derive(Parser)]
#[command(name = "maxeffect", version, args_override_self = true)]
struct Cli {
    /// Read `key = value` defaults for the subcommand's flags from a file.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a benchmark dataset and its ground-truth subgroup.
    Simulate(SimulateArgs),
    /// Find the maximum-effect subgroup of a CSV file.
    Fit(FitArgs),
    /// Repeat simulate + fit over a grid and summarize recovery.
    Sweep(SweepArgs),
    /// Check the partition results on random finite models.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    sim: u8,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Receives data.csv and ground_truth.json.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "t")]
    treatment: String,
    #[arg(long, default_value = "y")]
    outcome: String,
    /// Potential-outcome columns as `Y0,Y1`. Defaults to `y0,y1` when both exist.
    #[arg(long, value_name = "Y0,Y1")]
    potential_outcomes: Option<String>,
    /// `binary`, `real`, or `auto` (binary when every outcome is 0 or 1).
    #[arg(long, default_value = "auto")]
    outcome_kind: String,
    /// gini, mse, max-child or abs-diff; defaults to gini / mse by outcome kind.
    #[arg(long)]
    criterion: Option<Criterion>,
    #[arg(long, default_value_t = 0.5)]
    honest_fraction: f64,
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, default_value_t = 5)]
    min_arm_support: usize,
    /// `min` or `one-se`.
    #[arg(long, default_value = "min")]
    prune_rule: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the pruned tree as JSON.
    #[arg(long)]
    tree_out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_delimiter = ',', default_value = "1,2,3", value_parser = clap::value_parser!(u8).range(1..=3))]
    sims: Vec<u8>,
    /// Comma list or `START..END:STEP` (inclusive).
    #[arg(long, default_value = "1000..5000:1000", value_parser = parse_grid)]
    ns: Grid,
    #[arg(long, default_value_t = 50)]
    reps: usize,
    #[arg(long, value_delimiter = ',', default_value = "gini,max-child,abs-diff")]
    methods: Vec<Criterion>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Receives metrics.csv and aggregate.json.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Add rank-sum comparisons against the reference method.
    #[arg(long)]
    significance: bool,
    /// Fill the runtime_ms column (makes the CSV run-dependent).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    count: u64,
    #[arg(long, default_value_t = 12, value_parser = clap::value_parser!(u64).range(2..=20))]
    max_points: u64,
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
    max_cells: u64,
    /// Add a hidden confounder to every model.
    #[arg(long)]
    confounder: bool,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(2..))]
    max_u: u64,
    /// Nested subgroup pairs checked per model.
    #[arg(long, default_value_t = 20)]
    pairs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Check this model (JSON) instead of random ones.
    #[arg(long)]
    scm: Option<PathBuf>,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Debug)]
struct Grid(Vec<usize>);

fn parse_grid(s: &str) -> Result<Grid, String> {
    let num = |v: &str| v.trim().parse::<usize>().map_err(|_| format!("`{v}` is not a sample size"));
    let values = if let Some((range, step)) = s.split_once(':') {
        let (start, end) = range.split_once("..").ok_or("expected START..END:STEP")?;
        let (start, end, step) = (num(start)?, num(end)?, num(step)?);
        if step == 0 || start > end {
            return Err("range needs START <= END and STEP >= 1".into());
        }
        (start..=end).step_by(step).collect()
    } else {
        s.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    if values.contains(&0) {
        return Err("sample sizes must be at least 1".into());
    }
    Ok(Grid(values))
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NoEstimableSubgroup => EXIT_NO_SUBGROUP,
            Error::InvalidParameter(_) => EXIT_USAGE,
            _ => EXIT_DATA,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Error::Io {
        path: path.to_owned(),
        source: e,
    }
    .into()
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| io_failure(path, e))
}

fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    text.push('\n');
    match path {
        Some(p) => fs::write(p, text).map_err(|e| io_failure(p, e)),
        None => io::stdout().write_all(text.as_bytes()).map_err(|e| io_failure(Path::new("<stdout>"), e)),
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), Failure> {
    let spec = SimSpec {
        sim_id: args.sim,
        n: args.n as usize,
        seed: args.seed,
    };
    let (ds, truth) = simulate(&spec)?;
    fs::create_dir_all(&args.out_dir).map_err(|e| io_failure(&args.out_dir, e))?;
    let data_path = args.out_dir.join("data.csv");
    write_csv(&ds, create(&data_path)?)?;

    #[derive(Serialize)]
    struct GroundTruthFile<'a> {
        schema_version: u32,
        spec: SimSpec,
        #[serde(flatten)]
        truth: &'a maxeffect::sim::GroundTruth,
    }
    let truth_path = args.out_dir.join("ground_truth.json");
    write_json(
        &GroundTruthFile {
            schema_version: GROUND_TRUTH_SCHEMA_VERSION,
            spec,
            truth: &truth,
        },
        Some(&truth_path),
    )?;
    eprintln!("wrote {} and {}", data_path.display(), truth_path.display());
    Ok(())
}

fn header_has(path: &Path, columns: &[&str]) -> Result<bool, Failure> {
    let header = read_header(path)?;
    Ok(columns.iter().all(|c| header.iter().any(|h| h == c)))
}

fn cmd_fit(args: FitArgs) -> Result<(), Failure> {
    let mut schema = Schema::new(&args.treatment, &args.outcome);
    match &args.potential_outcomes {
        Some(spec) => {
            let (y0, y1) = spec
                .split_once(',')
                .ok_or_else(|| usage("--potential-outcomes expects `Y0,Y1`"))?;
            schema = schema.with_potential_outcomes(y0.trim(), y1.trim());
        }
        None if header_has(&args.data, &["y0", "y1"])? => schema = schema.with_potential_outcomes("y0", "y1"),
        None => {}
    }
    match args.outcome_kind.as_str() {
        "auto" => {}
        "binary" => schema = schema.with_outcome_kind(OutcomeKind::Binary),
        "real" => schema = schema.with_outcome_kind(OutcomeKind::Real),
        other => return Err(usage(format!("unknown outcome kind `{other}`"))),
    }
    let prune_rule = match args.prune_rule.as_str() {
        "min" => PruneRule::Min,
        "one-se" => PruneRule::OneSe,
        other => return Err(usage(format!("unknown prune rule `{other}`"))),
    };
    let ds = load_csv(&args.data, &schema)?;
    let config = FitConfig {
        criterion: args.criterion,
        honest: HonestSplitConfig {
            train_fraction: args.honest_fraction,
            ..HonestSplitConfig::default()
        },
        folds: args.folds,
        min_arm_support: args.min_arm_support,
        prune_rule,
        ..FitConfig::default()
    };
    let result = fit(&ds, &config, args.seed)?;
    if let Some(path) = &args.tree_out {
        write_json(&result.tree.to_document(&args.treatment), Some(path))?;
    }
    write_json(&result.report, args.out.as_deref())?;
    eprintln!(
        "{}: estimated effect {:.4} ({} treated, {} control)",
        result.report.description,
        result.report.estimate.effect,
        result.report.estimate.n_treated,
        result.report.estimate.n_control
    );
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), Failure> {
    let config = SweepConfig {
        sims: args.sims,
        ns: args.ns.0,
        reps: args.reps,
        methods: args.methods,
        seed: args.seed,
        workers: args.workers,
        timing: args.timing,
        significance: args.significance,
        fit: FitConfig::default(),
    };
    let out = run_sweep(&config)?;
    fs::create_dir_all(&args.out).map_err(|e| io_failure(&args.out, e))?;
    let metrics = args.out.join("metrics.csv");
    write_metrics_csv(&out.rows, create(&metrics)?)?;
    let aggregate = args.out.join("aggregate.json");
    write_json(&out.aggregate, Some(&aggregate))?;
    for g in &out.aggregate.groups {
        eprintln!(
            "sim {} n {:>5} {:<9} jaccard {:.3} ± {:.3}  gap {}",
            g.sim_id,
            g.n,
            g.method,
            g.jaccard_mean,
            g.jaccard_se,
            g.effect_gap_mean.map_or("-".into(), |m| format!("{m:.3}"))
        );
    }
    eprintln!("wrote {} and {}", metrics.display(), aggregate.display());
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<(), Failure> {
    let report: VerifyReport = match &args.scm {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
            let scm: DiscreteScm = serde_json::from_str(&text).map_err(Error::from)?;
            verify_model(&scm, args.pairs, args.seed)?
        }
        None => {
            let config = VerifyConfig {
                count: args.count as usize,
                models: RandomScmConfig {
                    max_points: args.max_points as usize,
                    max_cells: args.max_cells as usize,
                    max_u: args.confounder.then_some(args.max_u as usize),
                    tied_effects: false,
                },
                pairs_per_model: args.pairs,
                ..VerifyConfig::default()
            };
            verify_random_models(&config, args.seed)?
        }
    };

    #[derive(Serialize)]
    struct VerifyFile<'a> {
        schema_version: u32,
        passed: bool,
        #[serde(flatten)]
        report: &'a VerifyReport,
    }
    let passed = report.all_passed();
    write_json(
        &VerifyFile {
            schema_version: VERIFY_SCHEMA_VERSION,
            passed,
            report: &report,
        },
        args.out.as_deref(),
    )?;
    let line = |name: &str, t: &maxeffect::oracle::Tally| eprintln!("{name:<22} {}/{}", t.passed, t.total);
    line("decomposition", &report.decomposition);
    line("partition optimality", &report.partition_optimality);
    match &report.identifiability {
        Some(t) => line("identifiability", t),
        None => eprintln!("{:<22} skipped (hidden confounder)", "identifiability"),
    }
    line("convexity", &report.convexity);
    if passed {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_VERIFY,
            message: "verification failed".into(),
        })
    }
}

fn run() -> Result<(), Failure> {
    let argv = config::expand_config(std::env::args_os().collect()).map_err(usage)?;
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return Ok(());
        }
        Err(e) => {
            let _ = e.print();
            return Err(Failure {
                code: EXIT_USAGE,
                message: String::new(),
            });
        }
    };
    debug_assert!(cli.config.is_none());
    match cli.command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Verify(a) => cmd_verify(a),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}
