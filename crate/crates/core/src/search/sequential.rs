use alloc::boxed::Box;
use alloc::vec::Vec;
use core::hash::BuildHasher;

use hashbrown::hash_map::EntryRef;
use hashbrown::{DefaultHashBuilder, HashMap, HashTable};

use crate::domain::{BatteryAction, ScheduleProblem};
use crate::units::Cost;

use super::{
    reconstruct, Expander, Frontier, Scratch, SearchConfig, SearchError, SearchStats, Solution,
    KEY_DEPTH,
};

/// Sequential uniform-cost search.
///
/// With `memory_optimized` false every node owns a copy of its whole
/// assignment prefix and the dominance map owns boxed keys. With it true,
/// nodes live in flat arrays, store only their own slot plus a parent link,
/// and the dominance table holds node indices. Both variants expand nodes
/// in the same order.
pub fn solve_sequential(
    problem: &ScheduleProblem,
    memory_optimized: bool,
    config: &SearchConfig,
) -> Result<Solution, SearchError> {
    let expander = Expander::new(problem)?;
    if memory_optimized {
        compact(&expander, config)
    } else {
        plain(&expander, config)
    }
}

struct PathNode {
    key: Box<[u64]>,
    /// `depth × devices` state indices, slot-major.
    rows: Vec<u16>,
    actions: Vec<BatteryAction>,
}

fn plain(expander: &Expander<'_>, config: &SearchConfig) -> Result<Solution, SearchError> {
    let n = expander.devices();
    let mut stats = SearchStats::default();
    let mut frontier = Frontier::new();
    let mut best: HashMap<Box<[u64]>, Cost> = HashMap::new();
    let mut scratch = Scratch::default();
    let mut seq = 0u64;

    let root: Box<[u64]> = expander.root_key().into_boxed_slice();
    if config.dominance {
        best.insert(root.clone(), Cost::ZERO);
    }
    frontier.push(
        Cost::ZERO,
        0,
        seq,
        PathNode {
            key: root,
            rows: Vec::new(),
            actions: Vec::new(),
        },
    );

    while let Some(entry) = frontier.pop() {
        let node = entry.node;
        if config.dominance && best.get(&node.key).is_some_and(|c| *c < entry.cost) {
            stats.nodes_stale += 1;
            continue;
        }
        if expander.is_goal(&node.key) {
            let rows = (0..expander.horizon())
                .map(|t| node.rows[t * n..(t + 1) * n].iter().map(|&s| usize::from(s)).collect())
                .collect();
            let schedule = reconstruct(expander.problem(), rows, node.actions, entry.cost)?;
            return Ok(Solution { schedule, stats });
        }
        if stats.nodes_expanded >= config.node_budget {
            return Err(SearchError::BudgetExceeded {
                budget: config.node_budget,
                best_bound: entry.cost,
            });
        }
        stats.nodes_expanded += 1;
        if config.record_pops {
            stats.popped_costs.push(entry.cost);
        }
        let pruned = expander.expand(&node.key, &mut scratch, |child| {
            stats.nodes_generated += 1;
            let cost = entry.cost + child.slot_cost;
            if config.dominance {
                match best.entry_ref(child.key) {
                    EntryRef::Occupied(mut o) => {
                        if *o.get() <= cost {
                            stats.nodes_pruned_dominance += 1;
                            return;
                        }
                        o.insert(cost);
                    }
                    EntryRef::Vacant(v) => {
                        v.insert(cost);
                    }
                }
            }
            let mut rows = Vec::with_capacity(node.rows.len() + n);
            rows.extend_from_slice(&node.rows);
            rows.extend_from_slice(child.states);
            let mut actions = node.actions.clone();
            actions.push(child.action);
            seq += 1;
            frontier.push(
                cost,
                child.key[KEY_DEPTH] as u32,
                seq,
                PathNode {
                    key: child.key.into(),
                    rows,
                    actions,
                },
            );
        });
        stats.nodes_pruned_policy += pruned;
        stats.peak_frontier = stats.peak_frontier.max(frontier.len());
    }
    Err(SearchError::NoSolution)
}

const NO_PARENT: u32 = u32::MAX;

/// Flat node storage: node `i` owns `keys[i*k..(i+1)*k]` and
/// `states[i*n..(i+1)*n]`.
struct Arena {
    key_len: usize,
    devices: usize,
    keys: Vec<u64>,
    states: Vec<u16>,
    parent: Vec<u32>,
    action: Vec<BatteryAction>,
    cost: Vec<Cost>,
    superseded: Vec<bool>,
}

impl Arena {
    fn key(&self, i: u32) -> &[u64] {
        let i = i as usize * self.key_len;
        &self.keys[i..i + self.key_len]
    }

    fn push(&mut self, key: &[u64], states: &[u16], parent: u32, action: BatteryAction, cost: Cost) -> u32 {
        let id = self.parent.len() as u32;
        self.keys.extend_from_slice(key);
        self.states.extend_from_slice(states);
        self.parent.push(parent);
        self.action.push(action);
        self.cost.push(cost);
        self.superseded.push(false);
        id
    }

    fn path(&self, mut node: u32) -> (Vec<Vec<usize>>, Vec<BatteryAction>) {
        let mut rows = Vec::new();
        let mut actions = Vec::new();
        while self.parent[node as usize] != NO_PARENT {
            let i = node as usize;
            rows.push(
                self.states[i * self.devices..(i + 1) * self.devices]
                    .iter()
                    .map(|&s| usize::from(s))
                    .collect(),
            );
            actions.push(self.action[i]);
            node = self.parent[i];
        }
        rows.reverse();
        actions.reverse();
        (rows, actions)
    }
}

fn compact(expander: &Expander<'_>, config: &SearchConfig) -> Result<Solution, SearchError> {
    let mut stats = SearchStats::default();
    let mut arena = Arena {
        key_len: expander.key_len(),
        devices: expander.devices(),
        keys: Vec::new(),
        states: Vec::new(),
        parent: Vec::new(),
        action: Vec::new(),
        cost: Vec::new(),
        superseded: Vec::new(),
    };
    let hasher = DefaultHashBuilder::default();
    let mut table: HashTable<u32> = HashTable::new();
    let mut frontier: Frontier<u32> = Frontier::new();
    let mut scratch = Scratch::default();
    let mut parent_key = Vec::with_capacity(arena.key_len);
    let mut seq = 0u64;

    let root_states = alloc::vec![0u16; arena.devices];
    let root = arena.push(&expander.root_key(), &root_states, NO_PARENT, BatteryAction::Idle, Cost::ZERO);
    if config.dominance {
        let h = hasher.hash_one(arena.key(root));
        table.insert_unique(h, root, |&i| hasher.hash_one(arena.key(i)));
    }
    frontier.push(Cost::ZERO, 0, seq, root);

    while let Some(entry) = frontier.pop() {
        let id = entry.node;
        if arena.superseded[id as usize] {
            stats.nodes_stale += 1;
            continue;
        }
        if expander.is_goal(arena.key(id)) {
            let (rows, actions) = arena.path(id);
            let schedule = reconstruct(expander.problem(), rows, actions, entry.cost)?;
            return Ok(Solution { schedule, stats });
        }
        if stats.nodes_expanded >= config.node_budget {
            return Err(SearchError::BudgetExceeded {
                budget: config.node_budget,
                best_bound: entry.cost,
            });
        }
        stats.nodes_expanded += 1;
        if config.record_pops {
            stats.popped_costs.push(entry.cost);
        }
        parent_key.clear();
        parent_key.extend_from_slice(arena.key(id));
        let pruned = expander.expand(&parent_key, &mut scratch, |child| {
            stats.nodes_generated += 1;
            let cost = entry.cost + child.slot_cost;
            if config.dominance {
                let h = hasher.hash_one(child.key);
                let found = table.find(h, |&i| arena.key(i) == child.key).copied();
                if let Some(old) = found {
                    if arena.cost[old as usize] <= cost {
                        stats.nodes_pruned_dominance += 1;
                        return;
                    }
                    arena.superseded[old as usize] = true;
                }
                let new = arena.push(child.key, child.states, id, child.action, cost);
                match found {
                    Some(old) => {
                        *table
                            .find_mut(h, |&i| i == old)
                            .expect("entry located above") = new;
                    }
                    None => {
                        table.insert_unique(h, new, |&i| hasher.hash_one(arena.key(i)));
                    }
                }
                seq += 1;
                frontier.push(cost, child.key[KEY_DEPTH] as u32, seq, new);
            } else {
                let new = arena.push(child.key, child.states, id, child.action, cost);
                seq += 1;
                frontier.push(cost, child.key[KEY_DEPTH] as u32, seq, new);
            }
        });
        stats.nodes_pruned_policy += pruned;
        stats.peak_frontier = stats.peak_frontier.max(frontier.len());
    }
    Err(SearchError::NoSolution)
}
