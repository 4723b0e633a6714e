use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use super::config::RunConfig;
use super::report::{cell_label, records_to_jsonl, sweep_to_csv, Comparison, EpisodeSummary, ResultTable, SweepRow};
use super::run::{success_by_distance, CurvePoint, Experiment};
use super::svg::{plot_slice, render_svg};
use super::{HarnessError, Precondition};
use crate::dataset::{save_dataset_binary, save_dataset_text, VertexSet};
use crate::distance::Distance;
use crate::graph::{save_graph, DistanceMatrix};
use crate::planner::{plan_episode, StepBudget};
use crate::simenv::{generate_dataset, generate_maze, Layout, OracleDistance, ReliabilityProfile, SimError};

/// Runs `f` on a rayon pool capped by `TTGS_WORKERS` when that is set.
pub fn with_workers<T: Send>(f: impl FnOnce() -> Result<T, HarnessError> + Send) -> Result<T, HarnessError> {
    match std::env::var("TTGS_WORKERS") {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| HarnessError::Config(format!("TTGS_WORKERS must be a positive integer, got {v:?}")))?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| HarnessError::Stage {
                    stage: "workers",
                    precondition: false,
                    source: Box::new(e),
                })?;
            pool.install(f)
        }
        Err(_) => f(),
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, HarnessError> {
    std::fs::create_dir_all(dir).map_err(|source| HarnessError::Output {
        path: dir.to_path_buf(),
        source,
    })?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|source| HarnessError::Output {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildReport {
    pub m: usize,
    pub tau: f64,
    pub seconds: f64,
    pub clipped: u64,
    pub fingerprint: String,
    pub path: PathBuf,
}

impl fmt::Display for BuildReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "M = {}", self.m)?;
        writeln!(f, "tau = {}", self.tau)?;
        writeln!(f, "build time = {:.3} s", self.seconds)?;
        writeln!(f, "clipped queries = {}", self.clipped)?;
        writeln!(f, "fingerprint = {}", self.fingerprint)?;
        write!(f, "cache = {}", self.path.display())
    }
}

/// Builds the planning graph for the configured cell and writes the cache.
pub fn cmd_build_graph(config: &RunConfig) -> Result<BuildReport, HarnessError> {
    let exp = Experiment::prepare(config)?;
    let cell = config.cell();
    let start = Instant::now();
    let (vertices, matrix) = exp.vertices_and_matrix(cell.m)?;
    let graph = exp.graph_from_matrix(vertices, &matrix, cell)?;
    let seconds = start.elapsed().as_secs_f64();
    let path = if config.graph_cache.is_empty() {
        Path::new(&config.out_dir).join("graph.ttgg")
    } else {
        PathBuf::from(&config.graph_cache)
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| HarnessError::Output {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    save_graph(&graph, &path).map_err(|e| e.at("graph cache"))?;
    Ok(BuildReport {
        m: graph.len(),
        tau: graph.tau(),
        seconds,
        clipped: matrix.clipped_queries(),
        fingerprint: graph.fingerprint().to_hex(),
        path,
    })
}

#[derive(Debug, Clone)]
pub struct EvalOutput {
    pub table: ResultTable,
    pub comparison: Comparison,
    pub records: Vec<EpisodeSummary>,
}

/// Base-only and TTGS conditions over the same task, seed and rollout grid.
/// Writes `results.csv`, `comparison.csv` and `episodes.jsonl`.
pub fn cmd_eval(config: &RunConfig) -> Result<EvalOutput, HarnessError> {
    let exp = Experiment::prepare(config)?;
    let cell = config.cell();
    let label = cell_label(cell);
    let base = exp.run_base()?;
    let ttgs = if base.is_empty() {
        Vec::new()
    } else {
        let graph = exp.graph(cell)?;
        exp.run_ttgs(&graph, cell.budget, &label)?
    };
    let comparison = Comparison::new(&label, &base, &ttgs, config.bootstrap, config.master_seed);
    let mut records = base;
    records.extend(ttgs);
    let table = ResultTable::from_records(&records);
    let dir = Path::new(&config.out_dir);
    write(dir, "results.csv", &table.to_csv())?;
    write(dir, "comparison.csv", &comparison.to_csv())?;
    write(dir, "episodes.jsonl", &records_to_jsonl(&records))?;
    Ok(EvalOutput {
        table,
        comparison,
        records,
    })
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub table: ResultTable,
    pub records: Vec<EpisodeSummary>,
}

/// One TTGS evaluation per grid cell against a single shared base run.
/// Distance matrices are reused across cells with the same `M`. A failing
/// cell is recorded and the sweep continues.
pub fn cmd_sweep(config: &RunConfig) -> Result<SweepOutput, HarnessError> {
    let cells = config.sweep_cells()?;
    let exp = Experiment::prepare(config)?;
    let base = exp.run_base()?;
    let mut matrices: BTreeMap<usize, Result<(VertexSet, DistanceMatrix), String>> = BTreeMap::new();
    let mut rows = Vec::new();
    let mut records = base.clone();
    for cell in cells {
        let label = cell_label(cell);
        let outcome = (|| {
            if base.is_empty() {
                return Ok(Vec::new());
            }
            let built = matrices
                .entry(cell.m)
                .or_insert_with(|| exp.vertices_and_matrix(cell.m).map_err(|e| e.to_string()));
            let (vertices, matrix) = built.as_ref().map_err(Clone::clone)?;
            let graph = exp
                .graph_from_matrix(vertices.clone(), matrix, cell)
                .map_err(|e| e.to_string())?;
            exp.run_ttgs(&graph, cell.budget, &label).map_err(|e| e.to_string())
        })();
        let outcome = outcome.map(|ttgs| {
            let cmp = Comparison::new(&label, &base, &ttgs, config.bootstrap, config.master_seed);
            records.extend(ttgs);
            cmp
        });
        rows.push(SweepRow { cell, outcome });
    }
    let table = ResultTable::from_records(&records);
    let dir = Path::new(&config.out_dir);
    write(dir, "sweep.csv", &sweep_to_csv(&rows))?;
    write(dir, "results.csv", &table.to_csv())?;
    write(dir, "episodes.jsonl", &records_to_jsonl(&records))?;
    Ok(SweepOutput { rows, table, records })
}

/// Renders the distance field and guide path for task `viz_task` to
/// `<out_dir>/viz.svg`.
pub fn cmd_viz(config: &RunConfig) -> Result<PathBuf, HarnessError> {
    let exp = Experiment::prepare(config)?;
    let slice = plot_slice(exp.dataset().state_dim(), config.slice()?)?;
    let tasks = exp.maze().tasks(exp.oracle());
    let &(start, goal) = tasks
        .get(config.viz_task)
        .ok_or_else(|| HarnessError::Config(format!("viz_task {} out of range", config.viz_task)))?;
    let cell = config.cell();
    let graph = exp.graph(cell)?;
    let (s, g) = (start.to_state(), goal.to_state());
    let budget = StepBudget::new(cell.budget).map_err(|e| e.at("planner"))?;
    let plan = plan_episode(&graph, exp.predictor(), &s, &g, budget).map_err(|e| e.at("plan"))?;
    let pairs: Vec<(&[f32], &[f32])> = graph.vertices().vertices().iter().map(|v| (v.as_slice(), g.as_slice())).collect();
    let distances: Vec<f64> = exp
        .predictor()
        .evaluate_batch(&pairs)
        .map_err(|e| e.source.at("viz"))?
        .into_iter()
        .map(|e| e.distance.get())
        .collect();
    let svg = render_svg(exp.maze(), graph.vertices(), slice, &distances, plan.guide(), &s, &g);
    write(Path::new(&config.out_dir), "viz.svg", &svg)
}

/// Generates a dataset in the configured maze and regime and saves it:
/// JSON lines for `.jsonl` paths, the binary format otherwise.
pub fn cmd_gen_dataset(config: &RunConfig, path: &Path) -> Result<usize, HarnessError> {
    let layout: Layout = config.maze.parse().map_err(|e: SimError| e.at("maze"))?;
    let oracle = OracleDistance::new(Arc::new(generate_maze(layout)));
    let ds = generate_dataset(&oracle, config.regime, config.n_transitions, config.dataset_seed)
        .map_err(|e| e.at("dataset"))?;
    let result = if path.extension().is_some_and(|e| e == "jsonl") {
        save_dataset_text(&ds, path)
    } else {
        save_dataset_binary(&ds, path)
    };
    result.map_err(|source| HarnessError::Output {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(ds.num_transitions())
}

/// One-shot success against goal distance; writes `curve.csv`.
pub fn cmd_curve(config: &RunConfig) -> Result<Vec<CurvePoint>, HarnessError> {
    let layout: Layout = config.maze.parse().map_err(|e: SimError| e.at("maze"))?;
    let oracle = OracleDistance::new(Arc::new(generate_maze(layout)));
    let profile = ReliabilityProfile {
        r_near: config.r_near,
        d_reliable: config.d_reliable,
        r_far: config.r_far,
        d_max: config.d_max,
    };
    let points = success_by_distance(
        &oracle,
        profile,
        &config.curve_distances()?,
        config.curve_rollouts,
        config.master_seed,
        config.bootstrap,
    )?;
    let mut csv = String::from("n,rollouts,successes,rate,lo,hi\n");
    for p in &points {
        csv.push_str(&format!(
            "{},{},{},{:.4},{:.4},{:.4}\n",
            p.n, p.rollouts, p.successes, p.rate, p.lo, p.hi
        ));
    }
    write(Path::new(&config.out_dir), "curve.csv", &csv)?;
    Ok(points)
}
