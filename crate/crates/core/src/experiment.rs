//! Comparison matrix runner: every (dataset, algorithm, cell range, seed)
//! combination is planned and reported as one CSV row.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dimensioning::{CellParams, DimensionError};
use crate::map::{parse_map, MapError, PlanningMap};
use crate::planner::{plan, AdjustmentMethod, Algorithm};

pub const CSV_HEADER: [&str; 11] = [
    "dataset",
    "algorithm",
    "method",
    "cell_range_m",
    "subs_per_cell",
    "seed",
    "num_bs",
    "total_cost",
    "feasible",
    "rounds",
    "ms",
];

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("dataset {path}: {source}")]
    Map { path: PathBuf, source: MapError },
    #[error("malformed experiment config: {0}")]
    Config(#[from] serde_json::Error),
    #[error("experiment config field `{0}` must not be empty")]
    Empty(&'static str),
    #[error("unknown adjustment method {0} (expected 1 or 2)")]
    BadMethod(u8),
    #[error(transparent)]
    Params(#[from] DimensionError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Algorithm entry of an experiment config, e.g.
/// `{"algorithm": "cwn-pam", "method": 2}` or `{"algorithm": "pam", "k": 5}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "kebab-case")]
pub enum AlgorithmSpec {
    Pam { k: usize },
    Mpam,
    CwnPam { method: u8 },
}

impl AlgorithmSpec {
    pub fn resolve(self) -> Result<Algorithm, ExperimentError> {
        Ok(match self {
            AlgorithmSpec::Pam { k } => Algorithm::Pam { k },
            AlgorithmSpec::Mpam => Algorithm::MPam,
            AlgorithmSpec::CwnPam { method } => {
                Algorithm::CwnPam(AdjustmentMethod::from_number(method).ok_or(ExperimentError::BadMethod(method))?)
            }
        })
    }
}

/// Experiment description as stored on disk. Dataset paths are relative
/// to the config file. Cell ranges are in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub datasets: Vec<PathBuf>,
    pub algorithms: Vec<AlgorithmSpec>,
    pub cell_ranges: Vec<f64>,
    pub subscribers_per_cell: u64,
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(bytes: &[u8]) -> Result<Self, ExperimentError> {
        let cfg: Self = serde_json::from_slice(bytes)?;
        for (name, empty) in [
            ("datasets", cfg.datasets.is_empty()),
            ("algorithms", cfg.algorithms.is_empty()),
            ("cell_ranges", cfg.cell_ranges.is_empty()),
            ("seeds", cfg.seeds.is_empty()),
        ] {
            if empty {
                return Err(ExperimentError::Empty(name));
            }
        }
        for a in &cfg.algorithms {
            a.resolve()?;
        }
        for &r in &cfg.cell_ranges {
            CellParams::new(r, cfg.subscribers_per_cell)?;
        }
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, ExperimentError> {
        let bytes = std::fs::read(path).map_err(|source| ExperimentError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&bytes)
    }
}

/// A loaded dataset and the label used in result rows.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub map: PlanningMap,
}

impl Dataset {
    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let bytes = std::fs::read(path).map_err(|source| ExperimentError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let map = parse_map(&bytes).map_err(|source| ExperimentError::Map {
            path: path.to_path_buf(),
            source,
        })?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        Ok(Self { name, map })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub dataset: String,
    pub algorithm: String,
    pub method: Option<u8>,
    pub cell_range_m: f64,
    pub subs_per_cell: u64,
    pub seed: u64,
    pub num_bs: Option<usize>,
    pub total_cost: Option<f64>,
    pub feasible: bool,
    pub rounds: Option<usize>,
    /// Wall time in milliseconds; zero unless timing was requested.
    pub ms: u64,
    /// Medoid node ids of the plan (not part of the CSV).
    pub medoids: Vec<u64>,
    /// Planner error for this cell of the matrix (not part of the CSV).
    pub error: Option<String>,
}

/// Loads every dataset (relative to `base_dir`) and runs the full matrix.
pub fn run_experiment(
    config: &ExperimentConfig,
    base_dir: &Path,
    timing: bool,
) -> Result<Vec<ExperimentRow>, ExperimentError> {
    let datasets = config
        .datasets
        .iter()
        .map(|p| Dataset::load(&base_dir.join(p)))
        .collect::<Result<Vec<_>, _>>()?;
    run_matrix(config, &datasets, timing)
}

/// Runs the matrix over already-loaded datasets. Rows come out in
/// dataset, algorithm, cell range, seed order regardless of scheduling.
pub fn run_matrix(
    config: &ExperimentConfig,
    datasets: &[Dataset],
    timing: bool,
) -> Result<Vec<ExperimentRow>, ExperimentError> {
    let algorithms = config
        .algorithms
        .iter()
        .map(|a| a.resolve())
        .collect::<Result<Vec<_>, _>>()?;
    let mut cells = Vec::new();
    for d in datasets {
        for &a in &algorithms {
            for &r in &config.cell_ranges {
                for &s in &config.seeds {
                    cells.push((d, a, r, s));
                }
            }
        }
    }
    let subs = config.subscribers_per_cell;
    cells
        .into_par_iter()
        .map(|(d, algorithm, range, seed)| {
            let params = CellParams::new(range, subs)?;
            let start = Instant::now();
            let outcome = plan(&d.map, &params, algorithm, seed);
            let ms = if timing {
                start.elapsed().as_millis() as u64
            } else {
                0
            };
            let mut row = ExperimentRow {
                dataset: d.name.clone(),
                algorithm: algorithm.name().to_string(),
                method: algorithm.method().map(AdjustmentMethod::number),
                cell_range_m: range,
                subs_per_cell: subs,
                seed,
                num_bs: None,
                total_cost: None,
                feasible: false,
                rounds: None,
                ms,
                medoids: Vec::new(),
                error: None,
            };
            match outcome {
                Ok(p) => {
                    row.num_bs = Some(p.num_base_stations());
                    row.total_cost = Some(p.total_cost);
                    row.feasible = p.feasible();
                    row.rounds = Some(p.adjustment_rounds);
                    row.medoids = p.medoid_ids();
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            Ok(row)
        })
        .collect()
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

/// Writes the rows as CSV with the fixed header.
pub fn emit_csv<W: Write>(rows: &[ExperimentRow], out: W) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.dataset.clone(),
            r.algorithm.clone(),
            opt(&r.method),
            r.cell_range_m.to_string(),
            r.subs_per_cell.to_string(),
            r.seed.to_string(),
            opt(&r.num_bs),
            opt(&r.total_cost),
            r.feasible.to_string(),
            opt(&r.rounds),
            r.ms.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn rows_to_csv(rows: &[ExperimentRow]) -> String {
    let mut buf = Vec::new();
    emit_csv(rows, &mut buf).expect("in-memory csv");
    String::from_utf8(buf).expect("utf-8")
}

/// Reads rows written by [`emit_csv`]. Medoids and error text are not part
/// of the file and come back empty.
pub fn parse_csv(text: &str) -> Result<Vec<ExperimentRow>, ExperimentError> {
    fn field<T: std::str::FromStr>(s: &str) -> Result<Option<T>, csv::Error> {
        if s.is_empty() {
            return Ok(None);
        }
        s.parse().map(Some).map_err(|_| {
            csv::Error::from(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("bad field {s:?}"),
            ))
        })
    }
    fn required<T: std::str::FromStr>(s: &str) -> Result<T, csv::Error> {
        field(s)?.ok_or_else(|| {
            csv::Error::from(std::io::Error::new(std::io::ErrorKind::InvalidData, "missing field"))
        })
    }
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        rows.push(ExperimentRow {
            dataset: rec[0].to_string(),
            algorithm: rec[1].to_string(),
            method: field(&rec[2])?,
            cell_range_m: required(&rec[3])?,
            subs_per_cell: required(&rec[4])?,
            seed: required(&rec[5])?,
            num_bs: field(&rec[6])?,
            total_cost: field(&rec[7])?,
            feasible: required(&rec[8])?,
            rounds: field(&rec[9])?,
            ms: required(&rec[10])?,
            medoids: Vec::new(),
            error: None,
        });
    }
    Ok(rows)
}

/// Method I against Method II for one (dataset, cell range, seed).
#[derive(Debug, Clone, PartialEq)]
pub struct MethodComparison {
    pub dataset: String,
    pub cell_range_m: f64,
    pub seed: u64,
    pub global_bs: Option<usize>,
    pub split_bs: Option<usize>,
}

impl MethodComparison {
    /// The method number with fewer base stations, `None` on a tie or when
    /// either run failed.
    pub fn winner(&self) -> Option<u8> {
        match (self.global_bs, self.split_bs) {
            (Some(a), Some(b)) if a < b => Some(1),
            (Some(a), Some(b)) if b < a => Some(2),
            _ => None,
        }
    }
}

/// Pairs up the CWN-PAM Method I and Method II rows.
pub fn compare_methods(rows: &[ExperimentRow]) -> Vec<MethodComparison> {
    let mut out: Vec<MethodComparison> = Vec::new();
    for r in rows.iter().filter(|r| r.algorithm == "cwn-pam") {
        let bs = if r.feasible { r.num_bs } else { None };
        let idx = out
            .iter()
            .position(|c| c.dataset == r.dataset && c.cell_range_m == r.cell_range_m && c.seed == r.seed);
        let entry = match idx {
            Some(i) => &mut out[i],
            None => {
                out.push(MethodComparison {
                    dataset: r.dataset.clone(),
                    cell_range_m: r.cell_range_m,
                    seed: r.seed,
                    global_bs: None,
                    split_bs: None,
                });
                out.last_mut().expect("just pushed")
            }
        };
        match r.method {
            Some(1) => entry.global_bs = bs,
            Some(2) => entry.split_bs = bs,
            _ => {}
        }
    }
    out
}

/// Plain-text table of [`compare_methods`] output.
pub fn render_comparison(cmp: &[MethodComparison]) -> String {
    let mut s = String::from("dataset\tcell_range_m\tseed\tmethod_1_bs\tmethod_2_bs\tfewer_bs\n");
    for c in cmp {
        let winner = match c.winner() {
            Some(m) => format!("method {m}"),
            None if c.global_bs.is_some() && c.split_bs.is_some() => "tie".into(),
            None => "n/a".into(),
        };
        s.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            c.dataset,
            c.cell_range_m,
            c.seed,
            opt(&c.global_bs),
            opt(&c.split_bs),
            winner
        ));
    }
    s
}
