//! Benchmark matrix runner.
//!
//! Every (instance, variant, threads) group is run `iterations` times. Each
//! run gets its own CSV row; the group's mean and standard deviation of
//! duration and expanded nodes are repeated on all of its rows.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use ucsched_core::domain::ScheduleProblem;
use ucsched_core::instances::{random_problem, InstanceParams};
use ucsched_core::search::{SearchConfig, SearchError};

use crate::ingestion::{load_scenario, read_to_string, IngestError};
use crate::parallel::MergeTrigger;
use crate::solver::{solve, SolveOptions, SolverKind};

pub const CSV_HEADER: [&str; 15] = [
    "instance_id",
    "variant",
    "threads",
    "iteration",
    "status",
    "duration_ms",
    "nodes_expanded",
    "nodes_pruned_policy",
    "nodes_pruned_dominance",
    "total_cost",
    "iterations_mean",
    "iterations_stddev",
    "nodes_expanded_mean",
    "nodes_expanded_stddev",
    "total_cost_micro",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchMatrix {
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_variants")]
    pub variants: Vec<String>,
    #[serde(default = "default_threads")]
    pub threads: Vec<usize>,
    #[serde(default)]
    pub merge_threshold: Option<usize>,
    #[serde(default)]
    pub node_budget: Option<u64>,
    #[serde(default, rename = "instance")]
    pub instances: Vec<BenchInstance>,
}

fn default_iterations() -> usize {
    10
}

fn default_variants() -> Vec<String> {
    vec!["parallel".into()]
}

fn default_threads() -> Vec<usize> {
    vec![1]
}

/// Either a scenario file (relative to the matrix file) or a random
/// instance with fixed size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchInstance {
    pub id: String,
    #[serde(default)]
    pub scenario: Option<PathBuf>,
    #[serde(default)]
    pub random: Option<RandomInstance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomInstance {
    pub seed: u64,
    pub devices: usize,
    pub horizon: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub instance_id: String,
    pub variant: SolverKind,
    pub threads: usize,
    pub iteration: usize,
    /// `ok`, or the failure kind.
    pub status: String,
    pub duration_ms: f64,
    pub nodes_expanded: u64,
    pub nodes_pruned_policy: u64,
    pub nodes_pruned_dominance: u64,
    pub total_cost_micro: Option<i64>,
    pub iterations_mean: f64,
    pub iterations_stddev: f64,
    pub nodes_expanded_mean: f64,
    pub nodes_expanded_stddev: f64,
}

impl BenchRow {
    fn record(&self) -> Vec<String> {
        let cost = |f: fn(i64) -> String| self.total_cost_micro.map(f).unwrap_or_default();
        vec![
            self.instance_id.clone(),
            self.variant.to_string(),
            self.threads.to_string(),
            self.iteration.to_string(),
            self.status.clone(),
            format!("{:.3}", self.duration_ms),
            self.nodes_expanded.to_string(),
            self.nodes_pruned_policy.to_string(),
            self.nodes_pruned_dominance.to_string(),
            cost(|c| format!("{:.6}", c as f64 / 1e6)),
            format!("{:.3}", self.iterations_mean),
            format!("{:.3}", self.iterations_stddev),
            format!("{:.3}", self.nodes_expanded_mean),
            format!("{:.3}", self.nodes_expanded_stddev),
            cost(|c| c.to_string()),
        ]
    }
}

pub fn load_matrix(path: &Path) -> Result<BenchMatrix, IngestError> {
    let text = read_to_string(path)?;
    let matrix: BenchMatrix =
        toml::from_str(&text).map_err(|e| IngestError::parse(path, None, e.message()))?;
    for v in &matrix.variants {
        v.parse::<SolverKind>().map_err(|e| IngestError::content(path, e))?;
    }
    if matrix.threads.contains(&0) {
        return Err(IngestError::content(path, "thread counts must be positive"));
    }
    for inst in &matrix.instances {
        if inst.scenario.is_some() == inst.random.is_some() {
            return Err(IngestError::content(
                path,
                format!("instance {}: give exactly one of scenario or random", inst.id),
            ));
        }
    }
    Ok(matrix)
}

/// Resolves the problems of a matrix; scenario paths are taken relative to
/// `base`.
pub fn resolve_instances(
    matrix: &BenchMatrix,
    base: &Path,
) -> Result<Vec<(String, ScheduleProblem)>, IngestError> {
    matrix
        .instances
        .iter()
        .map(|inst| {
            let problem = match (&inst.scenario, &inst.random) {
                (Some(path), _) => load_scenario(&base.join(path))?.problem,
                (None, Some(r)) => random_problem(
                    r.seed,
                    &InstanceParams {
                        devices: (r.devices, r.devices),
                        horizon: (r.horizon, r.horizon),
                        ..InstanceParams::default()
                    },
                ),
                (None, None) => unreachable!("checked by load_matrix"),
            };
            Ok((inst.id.clone(), problem))
        })
        .collect()
}

fn mean_stddev(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn status(err: &SearchError) -> &'static str {
    match err {
        SearchError::Invalid(_) => "invalid",
        SearchError::NoSolution => "infeasible",
        SearchError::BudgetExceeded { .. } => "budget_exceeded",
        SearchError::TooLarge(_) => "too_large",
        SearchError::Replay(_) => "replay_error",
    }
}

/// Runs the whole matrix. Only the parallel variant varies the thread
/// count; the others run once per iteration with `threads = 1`. Failures
/// are recorded in the row's status and the run continues.
pub fn run_matrix(
    matrix: &BenchMatrix,
    instances: &[(String, ScheduleProblem)],
    mut progress: impl FnMut(&BenchRow),
) -> Vec<BenchRow> {
    let mut search = SearchConfig::default();
    if let Some(b) = matrix.node_budget {
        search.node_budget = b;
    }
    let merge = matrix
        .merge_threshold
        .map_or(MergeTrigger::default(), MergeTrigger::Above);
    let variants: Vec<SolverKind> = matrix
        .variants
        .iter()
        .filter_map(|v| v.parse().ok())
        .collect();
    let mut rows = Vec::new();
    for (id, problem) in instances {
        for &variant in &variants {
            let threads: &[usize] = if variant == SolverKind::Parallel {
                &matrix.threads
            } else {
                &[1]
            };
            for &t in threads {
                let options = SolveOptions {
                    solver: variant,
                    threads: t,
                    merge,
                    search: search.clone(),
                };
                let mut group: Vec<BenchRow> = (0..matrix.iterations)
                    .map(|iteration| {
                        let mut row = BenchRow {
                            instance_id: id.clone(),
                            variant,
                            threads: t,
                            iteration,
                            status: "ok".into(),
                            duration_ms: 0.0,
                            nodes_expanded: 0,
                            nodes_pruned_policy: 0,
                            nodes_pruned_dominance: 0,
                            total_cost_micro: None,
                            iterations_mean: 0.0,
                            iterations_stddev: 0.0,
                            nodes_expanded_mean: 0.0,
                            nodes_expanded_stddev: 0.0,
                        };
                        match solve(problem, &options) {
                            Ok(timed) => {
                                let s = &timed.solution.stats;
                                row.duration_ms = timed.duration.as_secs_f64() * 1e3;
                                row.nodes_expanded = s.nodes_expanded;
                                row.nodes_pruned_policy = s.nodes_pruned_policy;
                                row.nodes_pruned_dominance = s.nodes_pruned_dominance;
                                row.total_cost_micro = Some(timed.solution.schedule.total_cost.micros());
                            }
                            Err(e) => row.status = status(&e).into(),
                        }
                        row
                    })
                    .collect();
                let durations: Vec<f64> = group.iter().map(|r| r.duration_ms).collect();
                let nodes: Vec<f64> = group.iter().map(|r| r.nodes_expanded as f64).collect();
                let (dm, ds) = mean_stddev(&durations);
                let (nm, ns) = mean_stddev(&nodes);
                for row in &mut group {
                    row.iterations_mean = dm;
                    row.iterations_stddev = ds;
                    row.nodes_expanded_mean = nm;
                    row.nodes_expanded_stddev = ns;
                    progress(row);
                }
                rows.append(&mut group);
            }
        }
    }
    rows
}

pub fn write_csv<W: std::io::Write>(out: W, rows: &[BenchRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.write_record(row.record())?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(text: &str) -> BenchMatrix {
        toml::from_str(text).unwrap()
    }

    #[test]
    fn empty_matrix_is_header_only() {
        let m = matrix("iterations = 3");
        let rows = run_matrix(&m, &[], |_| {});
        let mut out = Vec::new();
        write_csv(&mut out, &rows).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("instance_id,variant,threads,"));
    }

    #[test]
    fn sequential_rows_have_zero_node_spread() {
        let m = matrix(
            "iterations = 4\nvariants = [\"sequential\", \"memopt\"]\nthreads = [1, 2]\n\
             [[instance]]\nid = \"r\"\nrandom = { seed = 5, devices = 2, horizon = 5 }\n",
        );
        let instances = resolve_instances(&m, Path::new(".")).unwrap();
        let rows = run_matrix(&m, &instances, |_| {});
        assert_eq!(rows.len(), 8);
        assert!(rows.iter().all(|r| r.nodes_expanded_stddev == 0.0));
        let seq: Vec<_> = rows.iter().filter(|r| r.variant == SolverKind::Sequential).collect();
        let mem: Vec<_> = rows.iter().filter(|r| r.variant == SolverKind::MemOpt).collect();
        assert_eq!(seq[0].nodes_expanded, mem[0].nodes_expanded);
        assert_eq!(seq[0].total_cost_micro, mem[0].total_cost_micro);
    }

    #[test]
    fn thread_sweep_gives_one_row_per_run() {
        let m = matrix(
            "iterations = 2\nthreads = [1, 2, 3]\n\
             [[instance]]\nid = \"r\"\nrandom = { seed = 9, devices = 2, horizon = 4 }\n",
        );
        let instances = resolve_instances(&m, Path::new(".")).unwrap();
        let rows = run_matrix(&m, &instances, |_| {});
        assert_eq!(rows.len(), 6);
        let first = rows[0].total_cost_micro;
        assert!(rows.iter().all(|r| r.status == "ok" && r.total_cost_micro == first));
    }
}
