//! Seeded random problem instances for cross-checking solvers and for
//! synthetic benchmarks.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::{
    BatterySpec, DeviceSpec, DeviceState, EfficiencyMode, EnergySource, ScheduleProblem, SourceKind,
    TimeGrid,
};
use crate::policies::{Policy, PolicyRule};
use crate::units::{Energy, Price};

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceParams {
    pub devices: (usize, usize),
    pub horizon: (usize, usize),
    pub max_states: usize,
    /// Limited offers per slot besides the grid.
    pub max_extra_sources: usize,
    pub battery_probability: f64,
}

impl Default for InstanceParams {
    fn default() -> Self {
        InstanceParams {
            devices: (1, 3),
            horizon: (1, 8),
            max_states: 3,
            max_extra_sources: 2,
            battery_probability: 0.5,
        }
    }
}

/// Builds one instance; the same `seed` always yields the same problem.
///
/// Policies are drawn so that their parameters are well formed for the
/// horizon, but the instance as a whole may still be infeasible.
pub fn random_problem(seed: u64, params: &InstanceParams) -> ScheduleProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = rng.random_range(params.horizon.0..=params.horizon.1);
    let n = rng.random_range(params.devices.0..=params.devices.1);
    let grid = TimeGrid::quarter_hourly(h);
    let devices = (0..n)
        .map(|i| random_device(&mut rng, format!("d{i}"), h, params.max_states))
        .collect();
    let sources = (0..h)
        .map(|_| {
            let extra = rng.random_range(0..=params.max_extra_sources);
            let mut slot: Vec<EnergySource> = (0..extra)
                .map(|k| {
                    EnergySource::limited(
                        format!("p{k}"),
                        SourceKind::Prosumer,
                        Price(rng.random_range(0..=600) * 1000),
                        Energy(rng.random_range(0..=1000) * 1000),
                    )
                })
                .collect();
            slot.push(EnergySource::grid("grid", Price(rng.random_range(200..=800) * 1000)));
            slot
        })
        .collect();
    let battery = rng
        .random_bool(params.battery_probability)
        .then(|| random_battery(&mut rng));
    ScheduleProblem {
        grid,
        devices,
        sources,
        battery,
    }
}

fn state_ids(k: usize) -> Vec<String> {
    (0..k).map(|s| format!("S{s}")).collect()
}

fn random_device(rng: &mut ChaCha8Rng, id: String, h: usize, max_states: usize) -> DeviceSpec {
    let k = rng.random_range(2..=max_states.max(2));
    let ids = state_ids(k);
    let states = ids
        .iter()
        .enumerate()
        .map(|(s, sid)| {
            let w = if s == 0 {
                rng.random_range(0..=50) as f64
            } else {
                rng.random_range(100..=3000) as f64
            };
            DeviceState::new(sid.clone(), w)
        })
        .collect();
    let pick = |rng: &mut ChaCha8Rng| ids[rng.random_range(0..k)].clone();
    let rule = match rng.random_range(0..7) {
        0 => PolicyRule::Total {
            target: pick(rng),
            slots: rng.random_range(0..=h),
        },
        1 => PolicyRule::Continuous {
            target: pick(rng),
            slots: rng.random_range(0..=h),
        },
        2 => {
            let period = rng.random_range(1..=h.min(6));
            PolicyRule::Repeat {
                target: pick(rng),
                slots_on: rng.random_range(0..=period.min(2)),
                period,
            }
        }
        3 => {
            let job_length = rng.random_range(1..=h.clamp(1, 3));
            let max_jobs = (h + 1) / (job_length + 1);
            PolicyRule::Multiple {
                target: pick(rng),
                jobs: rng.random_range(0..=max_jobs),
                job_length,
            }
        }
        4 => PolicyRule::Strict {
            states: (0..h).map(|_| pick(rng)).collect(),
        },
        5 => PolicyRule::Pattern {
            states: (0..h).map(|_| pick(rng)).collect(),
        },
        _ => {
            let start = rng.random_range(0..=h);
            let end = rng.random_range(start..=h);
            PolicyRule::Sleep {
                target: pick(rng),
                start,
                end,
            }
        }
    };
    DeviceSpec::new(id, states, Policy::new("policy", rule))
}

fn random_battery(rng: &mut ChaCha8Rng) -> BatterySpec {
    let charge_rate_w = [1500.0, 3000.0][rng.random_range(0..2)];
    let equal_rates = rng.random_bool(0.8);
    let discharge_rate_w = if equal_rates {
        charge_rate_w
    } else {
        [1000.0, 1500.0, 3000.0][rng.random_range(0..3)]
    };
    let efficiency = [1.0, 1.0, 0.9][rng.random_range(0..3)];
    let quantum = Energy::from_power(charge_rate_w, 900);
    let steps = rng.random_range(1..=4);
    let capacity_max = Energy(quantum.0 * steps);
    let initial_charge = Energy(quantum.0 * rng.random_range(0..=steps));
    BatterySpec {
        capacity_max,
        capacity_min: Energy::ZERO,
        charge_rate_w,
        discharge_rate_w,
        efficiency,
        initial_charge,
        enforce_end_equals_start: rng.random_bool(0.7),
        efficiency_mode: if rng.random_bool(0.8) {
            EfficiencyMode::DivideBoth
        } else {
            EfficiencyMode::Physical
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::validate_problem;

    #[test]
    fn instances_are_valid_and_reproducible() {
        let params = InstanceParams::default();
        for seed in 0..300 {
            let p = random_problem(seed, &params);
            let report = validate_problem(&p);
            assert!(report.is_ok(), "seed {seed}: {report}");
            assert_eq!(p, random_problem(seed, &params));
        }
    }
}
