use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use proptest::prelude::*;

use super::*;
use crate::domain::{
    BatterySpec, DeviceSpec, DeviceState, EfficiencyMode, EnergySource, SourceKind, TimeGrid,
};
use crate::instances::{random_problem, InstanceParams};
use crate::policies::{Policy, PolicyRule};
use crate::units::{Energy, Price};

fn device(id: &str, watts: &[f64], rule: PolicyRule) -> DeviceSpec {
    let states = watts
        .iter()
        .enumerate()
        .map(|(i, w)| DeviceState::new(format!("S{i}"), *w))
        .collect();
    DeviceSpec::new(id, states, Policy::new(format!("{id}-p"), rule))
}

fn grid_prices(prices: &[f64]) -> Vec<Vec<EnergySource>> {
    prices
        .iter()
        .map(|p| vec![EnergySource::grid("grid", Price::per_kwh(*p))])
        .collect()
}

fn problem(devices: Vec<DeviceSpec>, prices: &[f64]) -> ScheduleProblem {
    ScheduleProblem {
        grid: TimeGrid::quarter_hourly(prices.len()),
        devices,
        sources: grid_prices(prices),
        battery: None,
    }
}

fn total(target: &str, slots: usize) -> PolicyRule {
    PolicyRule::Total {
        target: target.into(),
        slots,
    }
}

fn smile3(enforce: bool) -> BatterySpec {
    BatterySpec {
        capacity_max: Energy::from_kwh(2.8),
        capacity_min: Energy::ZERO,
        charge_rate_w: 3000.0,
        discharge_rate_w: 3000.0,
        efficiency: 1.0,
        initial_charge: Energy::ZERO,
        enforce_end_equals_start: enforce,
        efficiency_mode: EfficiencyMode::DivideBoth,
    }
}

fn cfg() -> SearchConfig {
    SearchConfig::default()
}

#[test]
fn oracle_turns_device_on_in_cheap_slot() {
    let p = problem(vec![device("a", &[0.0, 100.0], total("S1", 1))], &[0.2, 0.9]);
    let s = solve_oracle(&p, &OracleLimits::default()).unwrap();
    assert_eq!(s.assignments, vec![vec![1], vec![0]]);
    assert_eq!(s.total_cost, Cost(5_000));
    for memopt in [false, true] {
        let sol = solve_sequential(&p, memopt, &cfg()).unwrap();
        assert_eq!(sol.schedule, s);
    }
}

#[test]
fn fixed_devices_have_one_schedule() {
    let strict = PolicyRule::Strict {
        states: vec!["S1".into(), "S0".into(), "S1".into()],
    };
    let pattern = PolicyRule::Pattern {
        states: vec!["S0".into(), "S0".into(), "S1".into()],
    };
    let p = problem(
        vec![device("a", &[0.0, 400.0], strict), device("b", &[10.0, 200.0], pattern)],
        &[0.5, 0.1, 0.7],
    );
    let s = solve_oracle(&p, &OracleLimits::default()).unwrap();
    assert_eq!(s.assignments, vec![vec![1, 0], vec![0, 0], vec![1, 1]]);
    let sol = solve_sequential(&p, true, &cfg()).unwrap();
    assert_eq!(sol.schedule.assignments, s.assignments);
    // One child per node: nothing to choose.
    assert_eq!(sol.stats.nodes_expanded, 3);
    assert_eq!(sol.stats.nodes_generated, 3);
}

#[test]
fn unfittable_jobs_have_no_solution() {
    // Two 2-slot jobs need a gap between them: five slots, one too many.
    let jobs = PolicyRule::Multiple {
        target: "S1".into(),
        jobs: 2,
        job_length: 2,
    };
    let p = problem(vec![device("a", &[0.0, 100.0], jobs)], &[0.5; 4]);
    assert_eq!(solve_oracle(&p, &OracleLimits::default()), Err(SearchError::NoSolution));
    for memopt in [false, true] {
        assert_eq!(solve_sequential(&p, memopt, &cfg()).unwrap_err(), SearchError::NoSolution);
    }
}

#[test]
fn expansion_branching() {
    let p = problem(
        vec![
            device("a", &[0.0, 100.0], total("S1", 2)),
            device("b", &[0.0, 100.0], total("S1", 2)),
        ],
        &[0.5; 4],
    );
    let e = Expander::new(&p).unwrap();
    let mut n = 0;
    e.expand(&e.root_key(), &mut Scratch::default(), |_| n += 1);
    assert_eq!(n, 4);

    let strict = PolicyRule::Strict {
        states: vec!["S1".into(); 4],
    };
    let p = problem(
        vec![device("a", &[0.0, 100.0], total("S1", 2)), device("b", &[0.0, 50.0], strict)],
        &[0.5; 4],
    );
    let e = Expander::new(&p).unwrap();
    let mut n = 0;
    e.expand(&e.root_key(), &mut Scratch::default(), |c| {
        assert_eq!(c.states[1], 1);
        n += 1;
    });
    assert_eq!(n, 2);
}

#[test]
fn sleeping_child_is_absent() {
    let sleep = PolicyRule::Sleep {
        target: "S0".into(),
        start: 0,
        end: 2,
    };
    let p = problem(vec![device("a", &[0.0, 100.0], sleep)], &[0.5; 4]);
    let e = Expander::new(&p).unwrap();
    let mut children = Vec::new();
    let pruned = e.expand(&e.root_key(), &mut Scratch::default(), |c| children.push(c.states[0]));
    assert_eq!(children, vec![0]);
    assert_eq!(pruned, 0);
}

#[test]
fn zero_cost_sources() {
    let p = problem(
        vec![
            device("a", &[5.0, 900.0], total("S1", 2)),
            device(
                "b",
                &[0.0, 300.0, 800.0],
                PolicyRule::Repeat {
                    target: "S2".into(),
                    slots_on: 1,
                    period: 3,
                },
            ),
        ],
        &[0.0; 6],
    );
    for memopt in [false, true] {
        let sol = solve_sequential(&p, memopt, &cfg()).unwrap();
        assert_eq!(sol.schedule.total_cost, Cost::ZERO);
    }
}

#[test]
fn single_slot_forced_device() {
    let p = problem(
        vec![device(
            "a",
            &[0.0, 1000.0],
            PolicyRule::Strict {
                states: vec!["S1".into()],
            },
        )],
        &[0.4],
    );
    let sol = solve_sequential(&p, true, &cfg()).unwrap();
    assert_eq!(sol.schedule.assignments, vec![vec![1]]);
    assert_eq!(sol.schedule.total_cost, Cost(100_000));
}

#[test]
fn battery_shifts_load_to_cheap_slot() {
    // 3 kW load in the expensive second slot; charge at 0.1, discharge at 0.9.
    let strict = PolicyRule::Strict {
        states: vec!["S0".into(), "S1".into()],
    };
    let mut p = problem(vec![device("a", &[0.0, 3000.0], strict)], &[0.1, 0.9]);
    let flat = solve_sequential(&p, true, &cfg()).unwrap().schedule.total_cost;
    assert_eq!(flat, Cost(675_000));
    p.battery = Some(smile3(true));
    let oracle = solve_oracle(&p, &OracleLimits::default()).unwrap();
    assert_eq!(
        oracle.battery_actions,
        vec![BatteryAction::Charge, BatteryAction::Discharge]
    );
    assert_eq!(oracle.total_cost, Cost(75_000));
    assert_eq!(
        oracle.battery_trajectory,
        vec![Energy::ZERO, Energy::from_kwh(0.75), Energy::ZERO]
    );
    for memopt in [false, true] {
        let sol = solve_sequential(&p, memopt, &cfg()).unwrap();
        assert_eq!(sol.schedule, oracle);
    }
}

#[test]
fn budget_is_enforced() {
    let p = problem(vec![device("a", &[0.0, 100.0], total("S1", 3))], &[0.5; 8]);
    let config = SearchConfig {
        node_budget: 2,
        ..cfg()
    };
    assert!(matches!(
        solve_sequential(&p, true, &config),
        Err(SearchError::BudgetExceeded { budget: 2, .. })
    ));
}

#[test]
fn invalid_problem_is_rejected() {
    let mut p = problem(vec![device("a", &[0.0, 100.0], total("S9", 1))], &[0.5]);
    assert!(matches!(solve_sequential(&p, true, &cfg()), Err(SearchError::Invalid(_))));
    p.devices[0].policy.rule = total("S1", 1);
    p.sources[0].clear();
    assert!(matches!(solve_oracle(&p, &OracleLimits::default()), Err(SearchError::Invalid(_))));
}

fn outcome(r: &Result<Schedule, SearchError>) -> Result<Cost, String> {
    match r {
        Ok(s) => Ok(s.total_cost),
        Err(e) => Err(format!("{e}")),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn sequential_variants_match_oracle(seed in any::<u64>()) {
        let p = random_problem(seed, &InstanceParams::default());
        let oracle = solve_oracle(&p, &OracleLimits::default());
        prop_assume!(!matches!(oracle, Err(SearchError::TooLarge(_))));
        let config = SearchConfig { record_pops: true, ..cfg() };
        let plain = solve_sequential(&p, false, &config);
        let compact = solve_sequential(&p, true, &config);
        let expected = outcome(&oracle);
        prop_assert_eq!(outcome(&plain.clone().map(|s| s.schedule)), expected.clone());
        prop_assert_eq!(outcome(&compact.clone().map(|s| s.schedule)), expected);
        if let (Ok(a), Ok(b)) = (plain, compact) {
            prop_assert_eq!(a.stats.nodes_expanded, b.stats.nodes_expanded);
            prop_assert_eq!(&a.schedule, &b.schedule);
            prop_assert!(a.stats.popped_costs.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn dominance_never_changes_cost(seed in any::<u64>()) {
        let p = random_problem(seed, &InstanceParams::default());
        let on = solve_sequential(&p, true, &cfg());
        let off = solve_sequential(&p, true, &SearchConfig { dominance: false, ..cfg() });
        match (on, off) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(a.schedule.total_cost, b.schedule.total_cost);
                prop_assert!(a.stats.nodes_expanded <= b.stats.nodes_expanded);
            }
            (Err(a), Err(b)) => prop_assert_eq!(a, b),
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a.map(|s| s.schedule.total_cost), b.map(|s| s.schedule.total_cost)),
        }
    }
}

#[test]
fn prosumer_offers_are_used_before_grid() {
    let mut p = problem(vec![device("a", &[0.0, 2000.0], total("S1", 1))], &[0.5, 0.5]);
    p.sources[1].push(EnergySource::limited(
        "p0",
        SourceKind::Prosumer,
        Price::per_kwh(0.1),
        Energy::from_kwh(0.4),
    ));
    let s = solve_sequential(&p, false, &cfg()).unwrap().schedule;
    assert_eq!(s.assignments, vec![vec![0], vec![1]]);
    // 0.4 kWh at 0.1 + 0.1 kWh at 0.5
    assert_eq!(s.total_cost, Cost(90_000));
}
