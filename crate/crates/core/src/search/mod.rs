//! Optimal schedule search.
//!
//! Three solvers live here: an exhaustive oracle for tiny instances and two
//! sequential uniform-cost searches that differ only in how they store
//! nodes. All share [`Expander`] for successor generation, so their
//! expansion order and node counts agree exactly. The multi-threaded solver
//! lives in the `ucsched` crate and is built on the same pieces.

mod expand;
mod frontier;
mod oracle;
mod sequential;

use alloc::vec::Vec;

pub use expand::{Child, Expander, Scratch, KEY_CHARGE, KEY_DEPTH, KEY_DIGESTS};
pub use frontier::{Entry, Frontier};
pub use oracle::{solve_oracle, OracleLimits};
pub use sequential::solve_sequential;

use crate::dispatch::{replay, ReplayError};
use crate::domain::{BatteryAction, ScheduleProblem, Schedule, ValidationReport};
use crate::units::Cost;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchConfig {
    /// Discard nodes whose key was already reached at lower or equal cost.
    pub dominance: bool,
    /// Give up after this many expansions.
    pub node_budget: u64,
    /// Keep the cost of every expanded node in [`SearchStats::popped_costs`].
    pub record_pops: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            dominance: true,
            node_budget: 50_000_000,
            record_pops: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub nodes_expanded: u64,
    pub nodes_generated: u64,
    pub nodes_pruned_policy: u64,
    pub nodes_pruned_dominance: u64,
    /// Popped entries skipped because a cheaper node with the same key
    /// arrived after they were queued.
    pub nodes_stale: u64,
    pub peak_frontier: usize,
    pub popped_costs: Vec<Cost>,
}

impl SearchStats {
    pub fn absorb(&mut self, other: &SearchStats) {
        self.nodes_expanded += other.nodes_expanded;
        self.nodes_generated += other.nodes_generated;
        self.nodes_pruned_policy += other.nodes_pruned_policy;
        self.nodes_pruned_dominance += other.nodes_pruned_dominance;
        self.nodes_stale += other.nodes_stale;
        self.peak_frontier = self.peak_frontier.max(other.peak_frontier);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub schedule: Schedule,
    pub stats: SearchStats,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SearchError {
    #[error("invalid problem: {0}")]
    Invalid(ValidationReport),
    #[error("no schedule satisfies every policy")]
    NoSolution,
    #[error("node budget of {budget} expansions exhausted; best bound {best_bound}")]
    BudgetExceeded { budget: u64, best_bound: Cost },
    #[error("instance too large for exhaustive enumeration: {0}")]
    TooLarge(alloc::string::String),
    #[error(transparent)]
    Replay(#[from] ReplayError),
}

/// Builds the full schedule for a goal path given as per-slot state rows.
pub fn reconstruct(
    problem: &ScheduleProblem,
    rows: Vec<Vec<usize>>,
    actions: Vec<BatteryAction>,
    expected: Cost,
) -> Result<Schedule, SearchError> {
    let schedule = replay(problem, rows, actions)?;
    debug_assert_eq!(schedule.total_cost, expected, "replay disagrees with search");
    let _ = expected;
    Ok(schedule)
}

#[cfg(test)]
mod tests;
