//! Merit-order dispatch of a slot's net demand over its energy sources.

use alloc::format;
use alloc::vec::Vec;

use crate::domain::{
    schedule_energy, BatteryAction, DomainError, EnergySource, ScheduleProblem, Schedule, Supply,
};
use crate::units::{Cost, Energy, Price};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotAllocation {
    /// Energy drawn from each source, in the order the sources were given.
    pub draws: Vec<Energy>,
    pub cost: Cost,
    pub unserved: Energy,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DispatchError {
    #[error("demand {demand} exceeds the {available} available in the slot")]
    InsufficientSupply { demand: Energy, available: Energy },
    #[error("negative demand {0}")]
    NegativeDemand(Energy),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReplayError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("slot {slot}: {source}")]
    Dispatch { slot: usize, source: DispatchError },
}

/// Indices of `sources` in dispatch order: ascending price, ties broken by
/// source id.
fn merit_order(sources: &[EnergySource]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..sources.len()).collect();
    order.sort_by(|&a, &b| {
        (sources[a].price, &sources[a].id).cmp(&(sources[b].price, &sources[b].id))
    });
    order
}

/// Fills `demand` from the cheapest sources first.
pub fn slot_cost(sources: &[EnergySource], demand: Energy) -> Result<SlotAllocation, DispatchError> {
    if demand.0 < 0 {
        return Err(DispatchError::NegativeDemand(demand));
    }
    let mut draws = alloc::vec![Energy::ZERO; sources.len()];
    let mut left = demand;
    let mut pico: i128 = 0;
    for i in merit_order(sources) {
        if left.0 == 0 {
            break;
        }
        let take = match sources[i].supply {
            Supply::Unbounded => left,
            Supply::Limited(cap) => Energy(left.0.min(cap.0.max(0))),
        };
        draws[i] = take;
        pico += sources[i].price.pico_cost(take);
        left -= take;
    }
    if left.0 > 0 {
        return Err(DispatchError::InsufficientSupply {
            demand,
            available: demand - left,
        });
    }
    Ok(SlotAllocation {
        draws,
        cost: Cost::from_pico(pico),
        unserved: left,
    })
}

/// Device load plus battery flow, floored at zero: surplus discharge is
/// forfeited rather than exported.
pub fn net_demand(device_energies: &[Energy], action: BatteryAction, battery_energy: Energy) -> Energy {
    let load: Energy = device_energies.iter().copied().sum();
    match action {
        BatteryAction::Idle => load,
        BatteryAction::Charge => load + battery_energy,
        BatteryAction::Discharge => load.saturating_sub_floor_zero(battery_energy),
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    start: i64,
    price: Price,
    pico_before: i128,
}

/// A slot's sources folded into a piecewise-linear cost curve, so that
/// [`MeritCurve::cost`] costs one binary search instead of a sort.
///
/// Agrees exactly with [`slot_cost`].
#[derive(Debug, Clone)]
pub struct MeritCurve {
    segments: Vec<Segment>,
    /// Total supply when no source is unbounded.
    limit: Option<i64>,
}

impl MeritCurve {
    pub fn new(sources: &[EnergySource]) -> Self {
        let mut segments = Vec::new();
        let mut start = 0i64;
        let mut pico = 0i128;
        let mut limit = None;
        for i in merit_order(sources) {
            let s = &sources[i];
            match s.supply {
                Supply::Unbounded => {
                    segments.push(Segment {
                        start,
                        price: s.price,
                        pico_before: pico,
                    });
                    return MeritCurve {
                        segments,
                        limit: None,
                    };
                }
                Supply::Limited(cap) if cap.0 > 0 => {
                    segments.push(Segment {
                        start,
                        price: s.price,
                        pico_before: pico,
                    });
                    pico += s.price.pico_cost(cap);
                    start += cap.0;
                }
                Supply::Limited(_) => {}
            }
            limit = Some(start);
        }
        MeritCurve {
            segments,
            limit: limit.or(Some(0)),
        }
    }

    pub fn cost(&self, demand: Energy) -> Result<Cost, DispatchError> {
        if demand.0 < 0 {
            return Err(DispatchError::NegativeDemand(demand));
        }
        if demand.0 == 0 {
            return Ok(Cost::ZERO);
        }
        if let Some(limit) = self.limit {
            if demand.0 > limit {
                return Err(DispatchError::InsufficientSupply {
                    demand,
                    available: Energy(limit),
                });
            }
        }
        // Last segment starting strictly below the demand.
        let idx = self.segments.partition_point(|s| s.start < demand.0) - 1;
        let seg = &self.segments[idx];
        let pico = seg.pico_before + seg.price.pico_cost(Energy(demand.0 - seg.start));
        Ok(Cost::from_pico(pico))
    }
}

/// Recomputes demand, per-slot cost and battery trajectory of a fixed
/// assignment.
pub fn replay(
    problem: &ScheduleProblem,
    assignments: Vec<Vec<usize>>,
    battery_actions: Vec<BatteryAction>,
) -> Result<Schedule, ReplayError> {
    let h = problem.grid.horizon_slots;
    let battery_actions = if battery_actions.is_empty() {
        alloc::vec![BatteryAction::Idle; h]
    } else {
        battery_actions
    };
    if battery_actions.len() != h || problem.sources.len() != h {
        return Err(DomainError::Shape(format!(
            "{} battery actions and {} source lists for {h} slots",
            battery_actions.len(),
            problem.sources.len()
        ))
        .into());
    }
    let mut schedule = Schedule {
        assignments,
        battery_actions,
        per_slot_cost: Vec::with_capacity(h),
        per_slot_demand: Vec::new(),
        battery_trajectory: Vec::with_capacity(h + 1),
        total_cost: Cost::ZERO,
    };
    schedule.per_slot_demand = schedule_energy(
        &schedule,
        &problem.grid,
        &problem.devices,
        problem.battery.as_ref(),
    )?;
    for (slot, demand) in schedule.per_slot_demand.iter().enumerate() {
        let alloc = slot_cost(&problem.sources[slot], *demand)
            .map_err(|source| ReplayError::Dispatch { slot, source })?;
        schedule.per_slot_cost.push(alloc.cost);
    }
    schedule.total_cost = schedule.per_slot_cost.iter().copied().sum();
    if let Some(battery) = &problem.battery {
        let quanta = battery.quanta(&problem.grid);
        let mut charge = battery.initial_charge;
        schedule.battery_trajectory.push(charge);
        for &a in &schedule.battery_actions {
            charge = Energy(charge.0 + battery.delta(&quanta, a));
            schedule.battery_trajectory.push(charge);
        }
    }
    Ok(schedule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::SourceKind;
    use alloc::string::ToString;
    use alloc::vec;
    use proptest::prelude::*;

    fn src(id: &str, price: f64, kwh: Option<f64>) -> EnergySource {
        match kwh {
            Some(e) => EnergySource::limited(id, SourceKind::Prosumer, Price::per_kwh(price), Energy::from_kwh(e)),
            None => EnergySource::grid(id, Price::per_kwh(price)),
        }
    }

    fn three() -> Vec<EnergySource> {
        vec![
            src("grid", 0.50, None),
            src("pv", 0.06, Some(0.5)),
            src("wind", 0.08, Some(0.3)),
        ]
    }

    #[test]
    fn merit_order_example() {
        let a = slot_cost(&three(), Energy::from_kwh(1.0)).unwrap();
        assert_eq!(a.cost, Cost(154_000));
        assert_eq!(
            a.draws,
            vec![Energy::from_kwh(0.2), Energy::from_kwh(0.5), Energy::from_kwh(0.3)]
        );
        assert_eq!(a.unserved, Energy::ZERO);
    }

    #[test]
    fn zero_demand() {
        let a = slot_cost(&three(), Energy::ZERO).unwrap();
        assert_eq!(a.cost, Cost::ZERO);
        assert!(a.draws.iter().all(|d| *d == Energy::ZERO));
    }

    #[test]
    fn single_grid_source() {
        let a = slot_cost(&[src("grid", 0.5, None)], Energy::from_kwh(0.4)).unwrap();
        assert_eq!(a.cost.to_string(), "0.200000");
    }

    #[test]
    fn shortfall_without_grid() {
        let e = slot_cost(&[src("pv", 0.06, Some(0.5))], Energy::from_kwh(0.6));
        assert!(matches!(e, Err(DispatchError::InsufficientSupply { .. })));
        let curve = MeritCurve::new(&[src("pv", 0.06, Some(0.5))]);
        assert!(curve.cost(Energy::from_kwh(0.6)).is_err());
        assert_eq!(curve.cost(Energy::from_kwh(0.5)).unwrap(), Cost(30_000));
    }

    #[test]
    fn ties_break_by_id() {
        let s = vec![src("b", 0.1, Some(1.0)), src("a", 0.1, Some(1.0)), src("g", 0.5, None)];
        let a = slot_cost(&s, Energy::from_kwh(0.5)).unwrap();
        assert_eq!(a.draws[1], Energy::from_kwh(0.5));
        assert_eq!(a.draws[0], Energy::ZERO);
    }

    #[test]
    fn net_demand_cases() {
        let d = [Energy::from_kwh(0.5)];
        let b = Energy::from_kwh(0.75);
        assert_eq!(net_demand(&d, BatteryAction::Charge, b), Energy::from_kwh(1.25));
        assert_eq!(net_demand(&d, BatteryAction::Discharge, b), Energy::ZERO);
        assert_eq!(net_demand(&d, BatteryAction::Idle, b), Energy::from_kwh(0.5));
    }

    /// Cheapest allocation by trying every split on a 0.1 kWh lattice.
    fn brute_force(sources: &[(i64, Option<i64>)], demand: i64) -> Option<i128> {
        fn go(sources: &[(i64, Option<i64>)], left: i64) -> Option<i128> {
            let Some((&(price, cap), rest)) = sources.split_first() else {
                return (left == 0).then_some(0);
            };
            let max = cap.unwrap_or(left).min(left);
            (0..=max)
                .filter_map(|take| go(rest, left - take).map(|c| c + i128::from(price) * i128::from(take)))
                .min()
        }
        go(sources, demand)
    }

    proptest! {
        #[test]
        fn greedy_matches_exhaustive(
            offers in prop::collection::vec((0i64..10, prop::option::weighted(0.8, 0i64..6)), 1..=4),
            demand in 0i64..12,
        ) {
            let lattice = 100_000; // 0.1 kWh
            let sources: Vec<EnergySource> = offers
                .iter()
                .enumerate()
                .map(|(i, (p, cap))| EnergySource {
                    id: format!("s{i}"),
                    kind: if cap.is_none() { SourceKind::Grid } else { SourceKind::Prosumer },
                    price: Price(p * 10_000),
                    supply: match cap {
                        Some(c) => Supply::Limited(Energy(c * lattice)),
                        None => Supply::Unbounded,
                    },
                })
                .collect();
            let expected = brute_force(&offers, demand);
            let greedy = slot_cost(&sources, Energy(demand * lattice));
            match expected {
                Some(pico_units) => {
                    let want = Cost::from_pico(pico_units * 10_000 * i128::from(lattice));
                    prop_assert_eq!(greedy.unwrap().cost, want);
                }
                None => prop_assert!(greedy.is_err()),
            }
        }

        #[test]
        fn curve_agrees_and_is_monotone(
            offers in prop::collection::vec((0i64..900_000, 0i64..2_000_000), 0..6),
            grid_price in 0i64..900_000,
            d1 in 0i64..5_000_000,
            d2 in 0i64..5_000_000,
        ) {
            let mut sources: Vec<EnergySource> = offers
                .iter()
                .enumerate()
                .map(|(i, (p, e))| EnergySource::limited(format!("p{i}"), SourceKind::Prosumer, Price(*p), Energy(*e)))
                .collect();
            sources.push(EnergySource::grid("grid", Price(grid_price)));
            let curve = MeritCurve::new(&sources);
            let (lo, hi) = (d1.min(d2), d1.max(d2));
            let c_lo = slot_cost(&sources, Energy(lo)).unwrap().cost;
            let c_hi = slot_cost(&sources, Energy(hi)).unwrap().cost;
            prop_assert_eq!(curve.cost(Energy(lo)).unwrap(), c_lo);
            prop_assert_eq!(curve.cost(Energy(hi)).unwrap(), c_hi);
            prop_assert!(c_lo <= c_hi);
        }

        #[test]
        fn more_sources_never_cost_more(
            a in prop::collection::vec((0i64..900_000, 0i64..2_000_000), 0..4),
            b in prop::collection::vec((0i64..900_000, 0i64..2_000_000), 0..4),
            demand in 0i64..5_000_000,
        ) {
            let mk = |v: &[(i64, i64)], tag: &str| -> Vec<EnergySource> {
                v.iter().enumerate()
                    .map(|(i, (p, e))| EnergySource::limited(format!("{tag}{i}"), SourceKind::Prosumer, Price(*p), Energy(*e)))
                    .collect()
            };
            let mut base = mk(&a, "a");
            base.push(EnergySource::grid("grid", Price(700_000)));
            let mut merged = base.clone();
            merged.extend(mk(&b, "b"));
            let c_base = slot_cost(&base, Energy(demand)).unwrap().cost;
            let c_merged = slot_cost(&merged, Energy(demand)).unwrap().cost;
            prop_assert!(c_merged <= c_base);
        }
    }
}
