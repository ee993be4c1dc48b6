//! Reference checks shared by the core integration tests and the
//! acceptance run of the `ucsched` crate.

#![allow(dead_code)]

use ucsched_core::domain::{BatteryAction, BatterySpec, EfficiencyMode, Schedule, ScheduleProblem, TimeGrid};
use ucsched_core::policies::{prefix_viable, satisfied, Policy, PolicyRule};
use ucsched_core::units::Energy;

pub const A: &str = "A";
pub const B: &str = "B";

pub fn columns(h: usize, alphabet: &[&'static str]) -> Vec<Vec<&'static str>> {
    let k = alphabet.len();
    let total = k.pow(h as u32);
    (0..total)
        .map(|mut code| {
            (0..h)
                .map(|_| {
                    let s = alphabet[code % k];
                    code /= k;
                    s
                })
                .collect()
        })
        .collect()
}

/// Lengths of the maximal blocks of `target`, scanning with indices.
fn blocks(col: &[&str], target: &str) -> Vec<usize> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < col.len() {
        if col[i] == target {
            let mut j = i;
            while j < col.len() && col[j] == target {
                j += 1;
            }
            out.push(j - i);
            i = j;
        } else {
            i += 1;
        }
    }
    out
}

/// The rule of each variant, written directly from its description.
pub fn reference(rule: &PolicyRule, col: &[&str]) -> bool {
    match rule {
        PolicyRule::Total { target, slots } => {
            let mut n = 0;
            for s in col {
                if s == target {
                    n += 1;
                }
            }
            n == *slots
        }
        PolicyRule::Continuous { target, slots } => {
            let b = blocks(col, target);
            if *slots == 0 {
                b.is_empty()
            } else {
                b == vec![*slots]
            }
        }
        PolicyRule::Repeat {
            target,
            slots_on,
            period,
        } => {
            if *period == 0 {
                return false;
            }
            if col.len() < *period {
                return true;
            }
            for start in 0..=col.len() - period {
                let mut n = 0;
                for s in &col[start..start + period] {
                    if s == target {
                        n += 1;
                    }
                }
                if n < *slots_on {
                    return false;
                }
            }
            true
        }
        PolicyRule::Multiple {
            target,
            jobs,
            job_length,
        } => {
            let b = blocks(col, target);
            b.len() == *jobs && b.iter().all(|len| len == job_length)
        }
        PolicyRule::Strict { states } | PolicyRule::Pattern { states } => {
            states.len() == col.len() && (0..col.len()).all(|t| states[t] == col[t])
        }
        PolicyRule::Sleep { target, start, end } => {
            (*start..*end).all(|t| t < col.len() && col[t] == target)
        }
        PolicyRule::Battery(spec) => battery_reference(spec, col),
    }
}

/// Battery column check with the quanta computed from the rates:
/// `rate × 900 s / 3600` Wh, scaled by the efficiency as configured.
fn battery_reference(spec: &BatterySpec, col: &[&str]) -> bool {
    let mwh = |w: f64| (w * 900.0 / 3.6).round() as i64;
    let eta = spec.efficiency;
    let up = match spec.efficiency_mode {
        EfficiencyMode::DivideBoth => mwh(spec.charge_rate_w / eta),
        EfficiencyMode::Physical => mwh(spec.charge_rate_w * eta),
    };
    let down = mwh(spec.discharge_rate_w / eta);
    let mut c = spec.initial_charge.0;
    for s in col {
        c += match *s {
            "idle" => 0,
            "charge" => up,
            "discharge" => -down,
            _ => return false,
        };
        if c < spec.capacity_min.0 || c > spec.capacity_max.0 {
            return false;
        }
    }
    !spec.enforce_end_equals_start || c == spec.initial_charge.0
}

pub fn rules(h: usize) -> Vec<PolicyRule> {
    let mut out = Vec::new();
    for slots in 0..=h {
        out.push(PolicyRule::Total {
            target: B.into(),
            slots,
        });
        out.push(PolicyRule::Continuous {
            target: B.into(),
            slots,
        });
    }
    for period in 1..=h {
        for slots_on in 0..=period.min(3) {
            out.push(PolicyRule::Repeat {
                target: B.into(),
                slots_on,
                period,
            });
        }
    }
    for job_length in 1..=3 {
        for jobs in 0..=4 {
            out.push(PolicyRule::Multiple {
                target: B.into(),
                jobs,
                job_length,
            });
        }
    }
    out.push(PolicyRule::Multiple {
        target: B.into(),
        jobs: 0,
        job_length: 0,
    });
    let fixed: Vec<String> = (0..h).map(|t| if t % 3 == 1 { B } else { A }.to_string()).collect();
    out.push(PolicyRule::Strict { states: fixed.clone() });
    out.push(PolicyRule::Pattern { states: fixed });
    for start in 0..=h {
        for end in start..=h {
            out.push(PolicyRule::Sleep {
                target: A.into(),
                start,
                end,
            });
        }
    }
    out
}

pub fn batteries() -> Vec<BatterySpec> {
    let base = BatterySpec {
        capacity_max: Energy(1_500_000),
        capacity_min: Energy::ZERO,
        charge_rate_w: 3000.0,
        discharge_rate_w: 3000.0,
        efficiency: 1.0,
        initial_charge: Energy::ZERO,
        enforce_end_equals_start: true,
        efficiency_mode: EfficiencyMode::DivideBoth,
    };
    vec![
        base.clone(),
        BatterySpec {
            initial_charge: Energy(750_000),
            enforce_end_equals_start: false,
            ..base.clone()
        },
        BatterySpec {
            discharge_rate_w: 1500.0,
            capacity_max: Energy(2_250_000),
            initial_charge: Energy(750_000),
            ..base.clone()
        },
        BatterySpec {
            efficiency: 0.9,
            efficiency_mode: EfficiencyMode::Physical,
            capacity_max: Energy(3_000_000),
            enforce_end_equals_start: false,
            ..base.clone()
        },
        BatterySpec {
            capacity_min: Energy(375_000),
            initial_charge: Energy(375_000),
            charge_rate_w: 1500.0,
            discharge_rate_w: 1500.0,
            ..base
        },
    ]
}

/// Compares `satisfied` with [`reference`] on every column over
/// `alphabet`, and `prefix_viable` on every prefix of accepted columns.
pub fn check(rule: PolicyRule, h: usize, alphabet: &[&'static str]) -> Result<usize, String> {
    let grid = TimeGrid::quarter_hourly(h);
    let policy = Policy::new("p", rule);
    let mut columns_checked = 0;
    for col in columns(h, alphabet) {
        let expected = reference(&policy.rule, &col);
        if satisfied(&policy, &col, &grid) != expected {
            return Err(format!("{:?} on {col:?}: expected {expected}", policy.rule));
        }
        if expected {
            if let Some(k) = (0..=h).find(|&k| !prefix_viable(&policy, &col[..k], &grid)) {
                return Err(format!("{:?} pruned prefix {:?} of accepted {col:?}", policy.rule, &col[..k]));
            }
        }
        columns_checked += 1;
    }
    Ok(columns_checked)
}

fn variant_index(rule: &PolicyRule) -> usize {
    match rule {
        PolicyRule::Total { .. } => 0,
        PolicyRule::Continuous { .. } => 1,
        PolicyRule::Repeat { .. } => 2,
        PolicyRule::Multiple { .. } => 3,
        PolicyRule::Strict { .. } => 4,
        PolicyRule::Pattern { .. } => 5,
        PolicyRule::Sleep { .. } => 6,
        PolicyRule::Battery(_) => 7,
    }
}

/// Runs [`check`] over all horizons 1..=8 and every parameterisation.
/// Returns the number of columns checked per variant.
pub fn soundness_sweep() -> Result<[usize; 8], String> {
    let mut per_variant = [0usize; 8];
    for h in 1..=8 {
        for rule in rules(h) {
            let i = variant_index(&rule);
            per_variant[i] += check(rule, h, &[A, B])?;
        }
        for spec in batteries() {
            per_variant[7] += check(PolicyRule::Battery(spec), h, &["idle", "charge", "discharge"])?;
        }
    }
    Ok(per_variant)
}

/// Independent check of one schedule's battery column, in mWh.
pub fn check_battery(problem: &ScheduleProblem, schedule: &Schedule) -> Result<(), String> {
    let spec = problem.battery.as_ref().expect("instance has a battery");
    let secs = f64::from(problem.grid.slot_seconds);
    let h = problem.grid.horizon_slots;
    let traj = &schedule.battery_trajectory;
    if traj.len() != h + 1 || schedule.battery_actions.len() != h {
        return Err(format!("lengths {} / {}", traj.len(), schedule.battery_actions.len()));
    }
    if traj[0] != spec.initial_charge {
        return Err("trajectory does not start at the initial charge".into());
    }
    let eta = spec.efficiency;
    let max_in = match spec.efficiency_mode {
        EfficiencyMode::DivideBoth => spec.charge_rate_w / eta,
        EfficiencyMode::Physical => spec.charge_rate_w * eta,
    } * secs
        / 3.6;
    let max_out = spec.discharge_rate_w / eta * secs / 3.6;
    for (t, c) in traj.iter().enumerate() {
        if *c < spec.capacity_min || *c > spec.capacity_max {
            return Err(format!("boundary {t}: charge {c} out of range"));
        }
    }
    for t in 0..h {
        let step = (traj[t + 1].0 - traj[t].0) as f64;
        let ok = match schedule.battery_actions[t] {
            BatteryAction::Idle => step == 0.0,
            BatteryAction::Charge => step > 0.0 && step <= max_in + 0.5,
            BatteryAction::Discharge => step < 0.0 && -step <= max_out + 0.5,
        };
        if !ok {
            return Err(format!("slot {t}: step {step} for {:?}", schedule.battery_actions[t]));
        }
    }
    if spec.enforce_end_equals_start && traj[h] != traj[0] {
        return Err(format!("ends at {} instead of {}", traj[h], traj[0]));
    }
    Ok(())
}
