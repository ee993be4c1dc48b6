//! One entry point for all four solvers.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use ucsched_core::domain::ScheduleProblem;
use ucsched_core::search::{
    solve_oracle, solve_sequential, OracleLimits, SearchConfig, SearchError, SearchStats, Solution,
};

use crate::parallel::{solve_parallel, MergeTrigger, ParallelConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverKind {
    Oracle,
    Sequential,
    MemOpt,
    Parallel,
}

impl SolverKind {
    pub const ALL: [SolverKind; 4] = [
        SolverKind::Oracle,
        SolverKind::Sequential,
        SolverKind::MemOpt,
        SolverKind::Parallel,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SolverKind::Oracle => "oracle",
            SolverKind::Sequential => "sequential",
            SolverKind::MemOpt => "memopt",
            SolverKind::Parallel => "parallel",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SolverKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown solver {s:?}; expected oracle, sequential, memopt or parallel"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveOptions {
    pub solver: SolverKind,
    pub threads: usize,
    pub merge: MergeTrigger,
    pub search: SearchConfig,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            solver: SolverKind::Parallel,
            threads: 1,
            merge: MergeTrigger::default(),
            search: SearchConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Timed {
    pub solution: Solution,
    pub duration: Duration,
}

pub fn solve(problem: &ScheduleProblem, options: &SolveOptions) -> Result<Timed, SearchError> {
    let start = Instant::now();
    let solution = match options.solver {
        SolverKind::Oracle => Solution {
            schedule: solve_oracle(problem, &OracleLimits::default())?,
            stats: SearchStats::default(),
        },
        SolverKind::Sequential => solve_sequential(problem, false, &options.search)?,
        SolverKind::MemOpt => solve_sequential(problem, true, &options.search)?,
        SolverKind::Parallel => solve_parallel(
            problem,
            &ParallelConfig {
                threads: options.threads,
                merge: options.merge,
                search: options.search.clone(),
            },
        )?,
    };
    Ok(Timed {
        solution,
        duration: start.elapsed(),
    })
}
