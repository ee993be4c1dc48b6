//! Multi-threaded uniform-cost search with a shared global frontier and
//! per-worker local frontiers.
//!
//! Workers seed themselves from the global frontier, expand locally, and
//! push their whole local frontier back when it crosses the merge
//! threshold or when its cheapest node costs more than the cheapest global
//! one. A worker that pops a goal stops every other worker at a
//! barrier where all local frontiers are merged; the goal is accepted only
//! if nothing cheaper remains anywhere, otherwise it goes back into the
//! global frontier and the search resumes.

use std::sync::atomic::{AtomicBool, AtomicI64, AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex, MutexGuard};

use hashbrown::hash_map::EntryRef;
use hashbrown::HashMap;
use ucsched_core::domain::{BatteryAction, ScheduleProblem};
use ucsched_core::search::{
    reconstruct, Entry, Expander, Frontier, Scratch, SearchConfig, SearchError, SearchStats,
    Solution, KEY_DEPTH,
};
use ucsched_core::units::Cost;

/// When a worker hands its local frontier to the global one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MergeTrigger {
    /// Merge once the local frontier holds more than this many nodes.
    Above(usize),
    /// Merge whenever the local frontier holds at most this many nodes.
    AtMost(usize),
}

impl MergeTrigger {
    fn fires(self, local: usize) -> bool {
        match self {
            MergeTrigger::Above(t) => local > t,
            MergeTrigger::AtMost(t) => local <= t,
        }
    }
}

impl Default for MergeTrigger {
    fn default() -> Self {
        MergeTrigger::Above(64)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParallelConfig {
    pub threads: usize,
    pub merge: MergeTrigger,
    pub search: SearchConfig,
}

impl Default for ParallelConfig {
    fn default() -> Self {
        ParallelConfig {
            threads: 1,
            merge: MergeTrigger::default(),
            search: SearchConfig::default(),
        }
    }
}

impl ParallelConfig {
    pub fn with_threads(threads: usize) -> Self {
        ParallelConfig {
            threads,
            ..Default::default()
        }
    }
}

#[derive(Debug)]
struct Node {
    key: Box<[u64]>,
    states: Box<[u16]>,
    action: BatteryAction,
    parent: Option<Arc<Node>>,
}

type Item = Entry<Arc<Node>>;

#[derive(Default)]
struct Global {
    frontier: Frontier<Arc<Node>>,
    best: HashMap<Box<[u64]>, Cost>,
    seq: u64,
    /// Workers whose local frontier may be non-empty.
    busy: usize,
    /// Barrier in progress.
    pausing: bool,
    parked: usize,
    outcome: Option<Result<(Arc<Node>, Cost), SearchError>>,
    stats: SearchStats,
}

struct Shared<'p> {
    expander: Expander<'p>,
    config: ParallelConfig,
    global: Mutex<Global>,
    wake: Condvar,
    pause_flag: AtomicBool,
    finished: AtomicBool,
    expanded: AtomicU64,
    /// Cost of the cheapest global frontier entry, `i64::MAX` when empty.
    global_min: AtomicI64,
}

impl Shared<'_> {
    fn publish_min(&self, g: &Global) {
        let min = g.frontier.peek().map_or(i64::MAX, |e| e.cost.micros());
        self.global_min.store(min, Ordering::Release);
    }

    fn finish(&self, g: &mut Global, outcome: Result<(Arc<Node>, Cost), SearchError>) {
        if g.outcome.is_none() {
            g.outcome = Some(outcome);
        }
        self.finished.store(true, Ordering::Release);
        self.wake.notify_all();
    }
}

/// Parallel uniform-cost search over `config.threads` workers.
///
/// The returned cost is optimal. With cost ties the chosen schedule may
/// depend on thread timing.
pub fn solve_parallel(
    problem: &ScheduleProblem,
    config: &ParallelConfig,
) -> Result<Solution, SearchError> {
    let expander = Expander::new(problem)?;
    let threads = config.threads.max(1);
    let root = Arc::new(Node {
        key: expander.root_key().into_boxed_slice(),
        states: Box::new([]),
        action: BatteryAction::Idle,
        parent: None,
    });
    let mut global = Global::default();
    if config.search.dominance {
        global.best.insert(root.key.clone(), Cost::ZERO);
    }
    global.frontier.push(Cost::ZERO, 0, 0, root);
    let shared = Shared {
        expander,
        config: ParallelConfig {
            threads,
            ..config.clone()
        },
        global: Mutex::new(global),
        wake: Condvar::new(),
        pause_flag: AtomicBool::new(false),
        finished: AtomicBool::new(false),
        expanded: AtomicU64::new(0),
        global_min: AtomicI64::new(0),
    };

    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| Worker::new(&shared).run());
        }
    });

    let mut global = shared.global.into_inner().expect("worker panicked");
    let stats = std::mem::take(&mut global.stats);
    match global.outcome.take().unwrap_or(Err(SearchError::NoSolution)) {
        Ok((goal, cost)) => {
            let (rows, actions) = path(&goal);
            let schedule = reconstruct(problem, rows, actions, cost)?;
            Ok(Solution { schedule, stats })
        }
        Err(e) => Err(e),
    }
}

fn path(goal: &Arc<Node>) -> (Vec<Vec<usize>>, Vec<BatteryAction>) {
    let mut rows = Vec::new();
    let mut actions = Vec::new();
    let mut node = goal;
    while let Some(parent) = &node.parent {
        rows.push(node.states.iter().map(|&s| usize::from(s)).collect());
        actions.push(node.action);
        node = parent;
    }
    rows.reverse();
    actions.reverse();
    (rows, actions)
}

struct Worker<'s, 'p> {
    shared: &'s Shared<'p>,
    local: Frontier<Arc<Node>>,
    best: HashMap<Box<[u64]>, Cost>,
    holding: bool,
    seq: u64,
    stats: SearchStats,
    scratch: Scratch,
}

impl<'s, 'p> Worker<'s, 'p> {
    fn new(shared: &'s Shared<'p>) -> Self {
        Worker {
            shared,
            local: Frontier::new(),
            best: HashMap::new(),
            holding: false,
            seq: 0,
            stats: SearchStats::default(),
            scratch: Scratch::default(),
        }
    }

    fn lock(&self) -> MutexGuard<'s, Global> {
        self.shared.global.lock().expect("worker panicked")
    }

    fn run(mut self) {
        loop {
            if self.shared.finished.load(Ordering::Acquire) {
                break;
            }
            if self.shared.pause_flag.load(Ordering::Acquire) {
                let g = self.lock();
                let g = self.merge_into(g);
                if self.park(g).is_none() {
                    break;
                }
                continue;
            }
            let (item, local) = match self.local.pop() {
                Some(item) => (item, true),
                None => match self.pull() {
                    Some(item) => (item, false),
                    None => break,
                },
            };
            if self.shared.config.search.dominance
                && self.best.get(&item.node.key).is_some_and(|c| *c < item.cost)
            {
                self.stats.nodes_stale += 1;
                continue;
            }
            if local && item.cost.micros() > self.shared.global_min.load(Ordering::Acquire) {
                // Something cheaper waits globally: stop running ahead.
                self.local.push_entry(item);
                let g = self.lock();
                drop(self.merge_into(g));
                continue;
            }
            if self.shared.expander.is_goal(&item.node.key) {
                if !self.offer_goal(item) {
                    break;
                }
                continue;
            }
            if !self.expand(item) {
                break;
            }
            if self.shared.config.merge.fires(self.local.len()) && !self.local.is_empty() {
                let g = self.lock();
                drop(self.merge_into(g));
            }
        }
        let mut g = self.lock();
        g.stats.absorb(&self.stats);
    }

    /// Takes the cheapest global node, waiting while other workers still
    /// hold work. `None` once the search is over.
    fn pull(&mut self) -> Option<Item> {
        let mut g = self.lock();
        if self.holding {
            self.holding = false;
            g.busy -= 1;
        }
        loop {
            if g.outcome.is_some() {
                return None;
            }
            if g.pausing {
                g = self.park(g)?;
                continue;
            }
            if let Some(item) = g.frontier.pop() {
                if self.shared.config.search.dominance
                    && g.best.get(&item.node.key).is_some_and(|c| *c < item.cost)
                {
                    self.stats.nodes_stale += 1;
                    continue;
                }
                self.shared.publish_min(&g);
                self.holding = true;
                g.busy += 1;
                return Some(item);
            }
            if g.busy == 0 {
                self.shared.finish(&mut g, Err(SearchError::NoSolution));
                return None;
            }
            g = self.shared.wake.wait(g).expect("worker panicked");
        }
    }

    /// Moves the local frontier into the global one, dropping entries the
    /// global dominance map already covers.
    fn merge_into<'g>(&mut self, mut g: MutexGuard<'g, Global>) -> MutexGuard<'g, Global> {
        let dominance = self.shared.config.search.dominance;
        for item in self.local.drain() {
            if dominance {
                match g.best.entry_ref(&item.node.key[..]) {
                    EntryRef::Occupied(mut o) => {
                        if *o.get() <= item.cost {
                            self.stats.nodes_pruned_dominance += 1;
                            continue;
                        }
                        o.insert(item.cost);
                    }
                    EntryRef::Vacant(v) => {
                        v.insert(item.cost);
                    }
                }
            }
            g.seq += 1;
            let seq = g.seq;
            g.frontier.push(item.cost, item.depth, seq, item.node);
        }
        self.shared.publish_min(&g);
        if self.holding {
            self.holding = false;
            g.busy -= 1;
        }
        self.shared.wake.notify_all();
        g
    }

    /// Waits out a barrier raised by another worker. The local frontier must
    /// already be empty. `None` if the search ended meanwhile.
    fn park<'g>(&self, mut g: MutexGuard<'g, Global>) -> Option<MutexGuard<'g, Global>> {
        debug_assert!(self.local.is_empty());
        if !g.pausing {
            return if g.outcome.is_some() { None } else { Some(g) };
        }
        g.parked += 1;
        self.shared.wake.notify_all();
        while g.pausing && g.outcome.is_none() {
            g = self.shared.wake.wait(g).expect("worker panicked");
        }
        g.parked -= 1;
        if g.outcome.is_some() {
            None
        } else {
            Some(g)
        }
    }

    /// Barrier check for a popped goal. Returns false when the search is
    /// over.
    fn offer_goal(&mut self, item: Item) -> bool {
        let mut g = self.lock();
        if g.outcome.is_some() {
            return false;
        }
        if g.pausing {
            // Someone else is already checking a goal: hand ours over and
            // join their barrier. The goal may already be registered in the
            // global map, so it bypasses the dominance check.
            g.seq += 1;
            let seq = g.seq;
            g.frontier.push(item.cost, item.depth, seq, item.node);
            let g = self.merge_into(g);
            return self.park(g).is_some();
        }
        g.pausing = true;
        self.shared.pause_flag.store(true, Ordering::Release);
        g = self.merge_into(g);
        let others = self.shared.config.threads - 1;
        while g.parked < others && g.outcome.is_none() {
            g = self.shared.wake.wait(g).expect("worker panicked");
        }
        let cheaper = g
            .frontier
            .peek()
            .is_some_and(|top| top.cost < item.cost);
        if cheaper {
            g.seq += 1;
            let seq = g.seq;
            g.frontier.push(item.cost, item.depth, seq, item.node);
            self.shared.publish_min(&g);
        } else {
            self.shared.finish(&mut g, Ok((item.node, item.cost)));
        }
        g.pausing = false;
        self.shared.pause_flag.store(false, Ordering::Release);
        self.shared.wake.notify_all();
        g.outcome.is_none()
    }

    /// Expands one node into the local frontier. Returns false when the node
    /// budget ran out.
    fn expand(&mut self, item: Item) -> bool {
        let budget = self.shared.config.search.node_budget;
        if self.shared.expanded.fetch_add(1, Ordering::Relaxed) >= budget {
            let mut g = self.lock();
            let err = SearchError::BudgetExceeded {
                budget,
                best_bound: item.cost,
            };
            self.shared.finish(&mut g, Err(err));
            return false;
        }
        self.stats.nodes_expanded += 1;
        let dominance = self.shared.config.search.dominance;
        let parent = item.node;
        let stats = &mut self.stats;
        let best = &mut self.best;
        let local = &mut self.local;
        let seq = &mut self.seq;
        let mut generated = 0u64;
        let pruned = self
            .shared
            .expander
            .expand(&parent.key, &mut self.scratch, |child| {
                generated += 1;
                let cost = item.cost + child.slot_cost;
                if dominance {
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
                let node = Arc::new(Node {
                    key: child.key.into(),
                    states: child.states.into(),
                    action: child.action,
                    parent: Some(Arc::clone(&parent)),
                });
                *seq += 1;
                local.push(cost, child.key[KEY_DEPTH] as u32, *seq, node);
            });
        self.stats.nodes_generated += generated;
        self.stats.nodes_pruned_policy += pruned;
        self.stats.peak_frontier = self.stats.peak_frontier.max(self.local.len());
        true
    }
}
