use alloc::vec::Vec;

use crate::dispatch::MeritCurve;
use crate::domain::{validate_problem, BatteryAction, BatteryQuanta, BatterySpec, ScheduleProblem};
use crate::policies::{can_return, Tracker};
use crate::units::{Cost, Energy};

use super::SearchError;

/// Offsets into a node key: `[depth, battery charge, digest of device 0, ...]`.
pub const KEY_DEPTH: usize = 0;
pub const KEY_CHARGE: usize = 1;
pub const KEY_DIGESTS: usize = 2;

/// One child produced by [`Expander::expand`]. The slices borrow scratch
/// space and are only valid inside the callback.
#[derive(Debug)]
pub struct Child<'a> {
    pub key: &'a [u64],
    /// State index per device for the newly assigned slot.
    pub states: &'a [u16],
    pub action: BatteryAction,
    pub demand: Energy,
    pub slot_cost: Cost,
}

/// Reusable buffers for [`Expander::expand`].
#[derive(Debug, Default)]
pub struct Scratch {
    key: Vec<u64>,
    states: Vec<u16>,
}

/// Successor generation for all solvers.
///
/// A node is fully described by its key: depth, battery charge and one
/// policy digest per device. Two nodes with equal keys admit the same
/// completions at the same future cost, which is what makes the key usable
/// for dominance pruning.
#[derive(Debug)]
pub struct Expander<'p> {
    problem: &'p ScheduleProblem,
    trackers: Vec<Tracker>,
    /// `energy[i][s]`: energy of device `i` in state `s` over one slot.
    energy: Vec<Vec<Energy>>,
    curves: Vec<MeritCurve>,
    battery: Option<(&'p BatterySpec, BatteryQuanta)>,
}

impl<'p> Expander<'p> {
    pub fn new(problem: &'p ScheduleProblem) -> Result<Self, SearchError> {
        let report = validate_problem(problem);
        if !report.is_ok() {
            return Err(SearchError::Invalid(report));
        }
        let h = problem.grid.horizon_slots;
        let mut trackers = Vec::with_capacity(problem.devices.len());
        for device in &problem.devices {
            let lookup = |s: &str| device.state_index(s).map(|i| i as u16);
            match Tracker::compile(&device.policy.rule, h, lookup) {
                Some(t) => trackers.push(t),
                None => return Err(SearchError::NoSolution),
            }
        }
        let energy = problem
            .devices
            .iter()
            .map(|d| {
                d.states
                    .iter()
                    .map(|s| Energy::from_power(s.power_w, problem.grid.slot_seconds))
                    .collect()
            })
            .collect();
        let curves = problem.sources.iter().map(|s| MeritCurve::new(s)).collect();
        let battery = problem
            .battery
            .as_ref()
            .map(|b| (b, b.quanta(&problem.grid)));
        Ok(Expander {
            problem,
            trackers,
            energy,
            curves,
            battery,
        })
    }

    pub fn problem(&self) -> &'p ScheduleProblem {
        self.problem
    }

    pub fn horizon(&self) -> usize {
        self.problem.grid.horizon_slots
    }

    pub fn devices(&self) -> usize {
        self.trackers.len()
    }

    pub fn key_len(&self) -> usize {
        KEY_DIGESTS + self.trackers.len()
    }

    pub fn root_key(&self) -> Vec<u64> {
        let mut key = alloc::vec![0; self.key_len()];
        if let Some((b, _)) = self.battery {
            key[KEY_CHARGE] = b.initial_charge.0 as u64;
        }
        for (i, t) in self.trackers.iter().enumerate() {
            key[KEY_DIGESTS + i] = t.initial();
        }
        key
    }

    pub fn is_goal(&self, key: &[u64]) -> bool {
        key[KEY_DEPTH] as usize == self.horizon()
    }

    fn battery_actions(&self) -> &'static [BatteryAction] {
        if self.battery.is_some() {
            &BatteryAction::ALL
        } else {
            &BatteryAction::ALL[..1]
        }
    }

    fn choices(&self, device: usize, slot: usize) -> usize {
        if self.trackers[device].forced(slot).is_some() {
            1
        } else {
            self.energy[device].len()
        }
    }

    /// Calls `emit` for every child of the node with key `key` that passes
    /// the policy trackers, the battery bounds and the end-of-day charge
    /// check. Children come in a fixed order: device states ascending,
    /// device 0 most significant, then idle, charge, discharge.
    ///
    /// Returns how many candidate children were rejected.
    pub fn expand<F: FnMut(&Child<'_>)>(&self, key: &[u64], scratch: &mut Scratch, mut emit: F) -> u64 {
        let slot = key[KEY_DEPTH] as usize;
        debug_assert!(slot < self.horizon());
        scratch.key.clear();
        scratch.key.extend_from_slice(key);
        scratch.key[KEY_DEPTH] += 1;
        scratch.states.clear();
        scratch.states.resize(self.devices(), 0);
        let mut pruned = 0;
        self.descend(slot, 0, Energy::ZERO, key, scratch, &mut emit, &mut pruned);
        pruned
    }

    #[allow(clippy::too_many_arguments)]
    fn descend<F: FnMut(&Child<'_>)>(
        &self,
        slot: usize,
        device: usize,
        load: Energy,
        parent: &[u64],
        scratch: &mut Scratch,
        emit: &mut F,
        pruned: &mut u64,
    ) {
        if device == self.devices() {
            self.finish(slot, load, parent, scratch, emit, pruned);
            return;
        }
        let tracker = &self.trackers[device];
        let digest = parent[KEY_DIGESTS + device];
        let states: core::ops::Range<u16> = match tracker.forced(slot) {
            Some(s) => s..s + 1,
            None => 0..self.energy[device].len() as u16,
        };
        for s in states {
            match tracker.step(digest, slot, s) {
                Some(d) => {
                    scratch.key[KEY_DIGESTS + device] = d;
                    scratch.states[device] = s;
                    let load = load + self.energy[device][s as usize];
                    self.descend(slot, device + 1, load, parent, scratch, emit, pruned);
                }
                None => *pruned += self.subtree_size(slot, device + 1),
            }
        }
    }

    fn subtree_size(&self, slot: usize, from: usize) -> u64 {
        let devices: u64 = (from..self.devices())
            .map(|j| self.choices(j, slot) as u64)
            .product();
        devices * self.battery_actions().len() as u64
    }

    fn finish<F: FnMut(&Child<'_>)>(
        &self,
        slot: usize,
        load: Energy,
        parent: &[u64],
        scratch: &mut Scratch,
        emit: &mut F,
        pruned: &mut u64,
    ) {
        let remaining = self.horizon() - slot - 1;
        for &action in self.battery_actions() {
            let demand = match (action, &self.battery) {
                (BatteryAction::Idle, _) | (_, None) => load,
                (a, Some((spec, q))) => {
                    let charge = Energy(parent[KEY_CHARGE] as i64 + spec.delta(q, a));
                    let in_bounds = charge >= spec.capacity_min && charge <= spec.capacity_max;
                    let recoverable =
                        !spec.enforce_end_equals_start || can_return(spec, q, charge, remaining);
                    if !(in_bounds && recoverable) {
                        *pruned += 1;
                        continue;
                    }
                    scratch.key[KEY_CHARGE] = charge.0 as u64;
                    if a == BatteryAction::Charge {
                        load + q.charge_drawn
                    } else {
                        load.saturating_sub_floor_zero(q.discharge_delivered)
                    }
                }
            };
            if action == BatteryAction::Idle {
                scratch.key[KEY_CHARGE] = parent[KEY_CHARGE];
                if let Some((spec, q)) = &self.battery {
                    if spec.enforce_end_equals_start
                        && !can_return(spec, q, Energy(parent[KEY_CHARGE] as i64), remaining)
                    {
                        *pruned += 1;
                        continue;
                    }
                }
            }
            let Ok(slot_cost) = self.curves[slot].cost(demand) else {
                *pruned += 1;
                continue;
            };
            emit(&Child {
                key: &scratch.key,
                states: &scratch.states,
                action,
                demand,
                slot_cost,
            });
        }
    }
}
