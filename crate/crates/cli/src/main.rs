//! `cellplan` command-line front end.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 a node's load exceeds
//! one cell's capacity, 3 internal error.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cellplan_core::{
    compare_methods, emit_map, generate_map, parse_map, plan, render_comparison, rows_to_csv,
    run_experiment, AdjustmentMethod, Algorithm, CellParams, ClusterError, DensityMode,
    ExperimentConfig, ExperimentError, ExperimentRow, PlanError, SyntheticSpec,
};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

#[derive(Parser)]
#[command(name = "cellplan", version, about = "Base-station planning by load-weighted k-medoids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan base stations for one map.
    Plan(PlanArgs),
    /// Generate a synthetic map with fixed node count, area and load.
    Generate(GenerateArgs),
    /// Run an experiment matrix described by a JSON config.
    Compare(CompareArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Pam,
    Mpam,
    CwnPam,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum DensityArg {
    Homogeneous,
    Heterogeneous,
}

#[derive(Parser)]
struct PlanArgs {
    #[arg(long)]
    map: PathBuf,
    #[arg(long, value_enum)]
    algorithm: AlgorithmArg,
    /// Adjustment method for cwn-pam: 1 re-clusters everything with k+1,
    /// 2 splits only infeasible clusters.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    method: Option<u8>,
    /// Cluster count (pam only).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    cell_range_m: f64,
    #[arg(long)]
    subs_per_cell: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Parser)]
struct GenerateArgs {
    #[arg(long)]
    nodes: usize,
    #[arg(long)]
    subscribers: u64,
    #[arg(long)]
    area_m2: f64,
    #[arg(long, value_enum, default_value = "homogeneous")]
    density: DensityArg,
    /// Hotspot node count (heterogeneous only); defaults to 10% of nodes.
    #[arg(long)]
    hotspot_count: Option<usize>,
    /// Share of load on hotspots (heterogeneous only).
    #[arg(long)]
    hotspot_share: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Parser)]
struct CompareArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's `output`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Record wall time per row in the `ms` column (otherwise 0).
    #[arg(long)]
    timing: bool,
    /// Print the Method I vs Method II base-station comparison to stderr.
    #[arg(long)]
    summary: bool,
}

enum CliError {
    Usage(String),
    Infeasible(String),
    Internal(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Infeasible(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Infeasible(m) | CliError::Internal(m) => m,
        }
    }
}

impl From<PlanError> for CliError {
    fn from(e: PlanError) -> Self {
        match e {
            PlanError::InfeasibleCapacity { .. } => CliError::Infeasible(e.to_string()),
            PlanError::Cluster(ClusterError::KOutOfRange { .. }) => CliError::Usage(e.to_string()),
            PlanError::Cluster(_) => CliError::Internal(e.to_string()),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Csv(_) => CliError::Internal(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::Usage(format!("reading {}: {e}", path.display())))
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    let result = match out {
        Some(path) => fs::write(path, text),
        None => io::stdout().lock().write_all(text.as_bytes()),
    };
    result.map_err(|e| CliError::Internal(format!("writing output: {e}")))
}

fn run_plan(args: PlanArgs) -> Result<(), CliError> {
    let algorithm = match args.algorithm {
        AlgorithmArg::Pam => Algorithm::Pam {
            k: args.k.ok_or_else(|| CliError::Usage("--algorithm pam requires --k".into()))?,
        },
        AlgorithmArg::Mpam => Algorithm::MPam,
        AlgorithmArg::CwnPam => {
            let m = args
                .method
                .ok_or_else(|| CliError::Usage("--algorithm cwn-pam requires --method {1,2}".into()))?;
            Algorithm::CwnPam(AdjustmentMethod::from_number(m).expect("range-checked by clap"))
        }
    };
    if args.k.is_some() && !matches!(algorithm, Algorithm::Pam { .. }) {
        return Err(CliError::Usage("--k is only valid with --algorithm pam".into()));
    }
    if args.method.is_some() && algorithm.method().is_none() {
        return Err(CliError::Usage("--method is only valid with --algorithm cwn-pam".into()));
    }
    let map = parse_map(&read(&args.map)?)
        .map_err(|e| CliError::Usage(format!("{}: {e}", args.map.display())))?;
    let params =
        CellParams::new(args.cell_range_m, args.subs_per_cell).map_err(|e| CliError::Usage(e.to_string()))?;
    let plan = plan(&map, &params, algorithm, args.seed)?;
    let text = match args.format {
        Format::Json => plan.to_json() + "\n",
        Format::Csv => plan.to_csv(),
    };
    write_output(args.out.as_deref(), &text)
}

fn run_generate(args: GenerateArgs) -> Result<(), CliError> {
    let density = match args.density {
        DensityArg::Homogeneous => {
            if args.hotspot_count.is_some() || args.hotspot_share.is_some() {
                return Err(CliError::Usage("hotspot options need --density heterogeneous".into()));
            }
            DensityMode::Homogeneous
        }
        DensityArg::Heterogeneous => match DensityMode::default_heterogeneous(args.nodes) {
            DensityMode::Heterogeneous {
                hotspot_count,
                hotspot_share,
            } => DensityMode::Heterogeneous {
                hotspot_count: args.hotspot_count.unwrap_or(hotspot_count),
                hotspot_share: args.hotspot_share.unwrap_or(hotspot_share),
            },
            DensityMode::Homogeneous => unreachable!(),
        },
    };
    let map = generate_map(&SyntheticSpec {
        node_count: args.nodes,
        total_subscribers: args.subscribers,
        area_m2: args.area_m2,
        density,
        seed: args.seed,
    })
    .map_err(|e| CliError::Usage(e.to_string()))?;
    write_output(args.out.as_deref(), &(emit_map(&map) + "\n"))
}

fn rows_to_json(rows: &[ExperimentRow]) -> String {
    let rows: Vec<_> = rows
        .iter()
        .map(|r| {
            json!({
                "dataset": r.dataset,
                "algorithm": r.algorithm,
                "method": r.method,
                "cell_range_m": r.cell_range_m,
                "subs_per_cell": r.subs_per_cell,
                "seed": r.seed,
                "num_bs": r.num_bs,
                "total_cost": r.total_cost,
                "feasible": r.feasible,
                "rounds": r.rounds,
                "ms": r.ms,
                "medoids": r.medoids,
                "error": r.error,
            })
        })
        .collect();
    serde_json::to_string_pretty(&rows).expect("rows serialize") + "\n"
}

fn run_compare(args: CompareArgs) -> Result<(), CliError> {
    let config = ExperimentConfig::from_json(&read(&args.config)?)?;
    let base = args.config.parent().unwrap_or(Path::new(".")).to_path_buf();
    let rows = run_experiment(&config, &base, args.timing)?;
    for r in &rows {
        if let Some(e) = &r.error {
            eprintln!(
                "{} {} method={:?} range={} seed={}: {e}",
                r.dataset, r.algorithm, r.method, r.cell_range_m, r.seed
            );
        }
    }
    let text = match args.format {
        Format::Csv => rows_to_csv(&rows),
        Format::Json => rows_to_json(&rows),
    };
    let out = args.out.or_else(|| config.output.as_ref().map(|p| base.join(p)));
    write_output(out.as_deref(), &text)?;
    if args.summary {
        eprint!("{}", render_comparison(&compare_methods(&rows)));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Plan(a) => run_plan(a),
        Command::Generate(a) => run_generate(a),
        Command::Compare(a) => run_compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
