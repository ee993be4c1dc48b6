use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use crate::dispatch::{replay, slot_cost};
use crate::domain::{validate_problem, BatteryAction, ScheduleProblem, Schedule};
use crate::policies::{battery_feasible, satisfied};
use crate::units::{Cost, Energy};

use super::SearchError;

/// Size guard for [`solve_oracle`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_devices: usize,
    pub max_horizon: usize,
    /// Upper bound on the combinations formed at any folding step and on
    /// the number of scored (load, battery column) pairs.
    pub max_combinations: u64,
    /// Upper bound on distinct load profiles held in memory.
    pub max_profiles: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits {
            max_devices: 4,
            max_horizon: 8,
            max_combinations: 20_000_000,
            max_profiles: 1_000_000,
        }
    }
}

/// Exhaustive search over every complete assignment.
///
/// Each device's admissible columns are enumerated on their own and
/// filtered with the complete-column policy check; the battery's columns
/// likewise. Every distinct load profile is then scored against every
/// battery column with [`slot_cost`]. The first cheapest combination in
/// enumeration order wins.
pub fn solve_oracle(problem: &ScheduleProblem, limits: &OracleLimits) -> Result<Schedule, SearchError> {
    let report = validate_problem(problem);
    if !report.is_ok() {
        return Err(SearchError::Invalid(report));
    }
    let h = problem.grid.horizon_slots;
    let n = problem.devices.len();
    if n > limits.max_devices || h > limits.max_horizon {
        return Err(SearchError::TooLarge(format!(
            "{n} devices over {h} slots; limit is {} devices over {} slots",
            limits.max_devices, limits.max_horizon
        )));
    }

    // Per device: admissible columns with their per-slot energy.
    let mut device_columns: Vec<Vec<(Vec<usize>, Vec<Energy>)>> = Vec::with_capacity(n);
    for device in &problem.devices {
        let mut valid = Vec::new();
        for column in all_columns(device.states.len(), h) {
            let ids: Vec<&str> = column.iter().map(|&s| device.states[s].id.as_str()).collect();
            if satisfied(&device.policy, &ids, &problem.grid) {
                let energy = column
                    .iter()
                    .map(|&s| Energy::from_power(device.states[s].power_w, problem.grid.slot_seconds))
                    .collect();
                valid.push((column, energy));
            }
        }
        if valid.is_empty() {
            return Err(SearchError::NoSolution);
        }
        device_columns.push(valid);
    }

    let battery_columns: Vec<Vec<BatteryAction>> = match &problem.battery {
        None => alloc::vec![alloc::vec![BatteryAction::Idle; h]],
        Some(spec) => all_columns(3, h)
            .map(|c| c.into_iter().map(|a| BatteryAction::ALL[a]).collect::<Vec<_>>())
            .filter(|c| battery_feasible(spec, c, &problem.grid).viable)
            .collect(),
    };
    if battery_columns.is_empty() {
        return Err(SearchError::NoSolution);
    }

    // Device combinations folded one device at a time. Combinations with the
    // same per-slot load score identically, so only the first one in
    // enumeration order is kept.
    let mut loads: Vec<(Vec<Energy>, Vec<usize>)> = alloc::vec![(alloc::vec![Energy::ZERO; h], Vec::new())];
    for columns in &device_columns {
        let pairs = (loads.len() as u64).saturating_mul(columns.len() as u64);
        if pairs > limits.max_combinations {
            return Err(too_large(limits));
        }
        let mut seen = BTreeSet::new();
        let mut next = Vec::new();
        for (load, pick) in &loads {
            for (c, (_, energy)) in columns.iter().enumerate() {
                let sum: Vec<Energy> = load.iter().zip(energy).map(|(&a, &b)| a + b).collect();
                if seen.insert(sum.clone()) {
                    let mut p = pick.clone();
                    p.push(c);
                    next.push((sum, p));
                    if next.len() > limits.max_profiles
                        || (next.len() as u64).saturating_mul(battery_columns.len() as u64)
                            > limits.max_combinations
                    {
                        return Err(too_large(limits));
                    }
                }
            }
        }
        loads = next;
    }
    if (loads.len() as u64).saturating_mul(battery_columns.len() as u64) > limits.max_combinations {
        return Err(too_large(limits));
    }

    let quanta = problem.battery.as_ref().map(|b| b.quanta(&problem.grid));
    let mut best: Option<(Cost, usize, usize)> = None;
    for (l, (load, _)) in loads.iter().enumerate() {
        'battery: for (b, actions) in battery_columns.iter().enumerate() {
            let mut total = Cost::ZERO;
            for t in 0..h {
                let demand = match (actions[t], &quanta) {
                    (BatteryAction::Charge, Some(q)) => load[t] + q.charge_drawn,
                    (BatteryAction::Discharge, Some(q)) => {
                        load[t].saturating_sub_floor_zero(q.discharge_delivered)
                    }
                    _ => load[t],
                };
                match slot_cost(&problem.sources[t], demand) {
                    Ok(a) => total += a.cost,
                    Err(_) => continue 'battery,
                }
                if best.as_ref().is_some_and(|(c, _, _)| total >= *c) {
                    continue 'battery;
                }
            }
            if best.as_ref().is_none_or(|(c, _, _)| total < *c) {
                best = Some((total, l, b));
            }
        }
    }

    let (cost, l, b) = best.ok_or(SearchError::NoSolution)?;
    let pick = &loads[l].1;
    let rows = (0..h)
        .map(|t| (0..n).map(|i| device_columns[i][pick[i]].0[t]).collect())
        .collect();
    let schedule = replay(problem, rows, battery_columns[b].clone())?;
    debug_assert_eq!(schedule.total_cost, cost);
    Ok(schedule)
}

fn too_large(limits: &OracleLimits) -> SearchError {
    SearchError::TooLarge(format!(
        "more than {} admissible combinations or {} load profiles",
        limits.max_combinations, limits.max_profiles
    ))
}

/// Odometer over `pick`, least significant digit last.
fn advance(pick: &mut [usize], radix: impl Fn(usize) -> usize) -> bool {
    for i in (0..pick.len()).rev() {
        pick[i] += 1;
        if pick[i] < radix(i) {
            return true;
        }
        pick[i] = 0;
    }
    false
}

/// Every column of length `h` over `states` symbols, in lexicographic order.
fn all_columns(states: usize, h: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut next = if states == 0 && h > 0 {
        None
    } else {
        Some(alloc::vec![0usize; h])
    };
    core::iter::from_fn(move || {
        let current = next.take()?;
        let mut succ = current.clone();
        if advance(&mut succ, |_| states) {
            next = Some(succ);
        }
        Some(current)
    })
}
