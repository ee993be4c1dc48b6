//! Device scheduling policies.
//!
//! Each policy is available in two forms:
//!
//! * [`satisfied`] judges a complete column of state ids directly.
//! * [`Tracker`] consumes a column one slot at a time, carrying a small
//!   integer digest of progress so far, and rejects a prefix as soon as no
//!   completion can satisfy the policy. The search uses the digest both for
//!   pruning and as part of its dominance key.
//!
//! [`prefix_viable`] exposes the tracker on string columns.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::domain::{
    check_battery, BatteryAction, BatteryQuanta, BatterySpec, DeviceSpec, TimeGrid,
    ValidationReport,
};
use crate::units::Energy;

/// Widest Repeat period whose window occupancy fits in a 64-bit digest.
pub const MAX_REPEAT_PERIOD: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub id: String,
    pub rule: PolicyRule,
}

impl Policy {
    pub fn new(id: impl Into<String>, rule: PolicyRule) -> Self {
        Policy {
            id: id.into(),
            rule,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PolicyRule {
    /// `slots` slots in `target`, not necessarily contiguous.
    Total { target: String, slots: usize },
    /// `slots` slots in `target` as a single uninterrupted run.
    Continuous { target: String, slots: usize },
    /// Every full window of `period` consecutive slots holds at least
    /// `slots_on` slots in `target`.
    Repeat {
        target: String,
        slots_on: usize,
        period: usize,
    },
    /// Exactly `jobs` maximal runs of `target`, each exactly `job_length`
    /// slots long.
    Multiple {
        target: String,
        jobs: usize,
        job_length: usize,
    },
    /// Column fixed ahead of time.
    Strict { states: Vec<String> },
    /// Expected usage of an uncontrollable device; scheduled like Strict.
    Pattern { states: Vec<String> },
    /// Device held in `target` for slots `start..end`.
    Sleep {
        target: String,
        start: usize,
        end: usize,
    },
    Battery(BatterySpec),
}

impl PolicyRule {
    pub fn variant_name(&self) -> &'static str {
        match self {
            PolicyRule::Total { .. } => "total",
            PolicyRule::Continuous { .. } => "continuous",
            PolicyRule::Repeat { .. } => "repeat",
            PolicyRule::Multiple { .. } => "multiple",
            PolicyRule::Strict { .. } => "strict",
            PolicyRule::Pattern { .. } => "pattern",
            PolicyRule::Sleep { .. } => "sleep",
            PolicyRule::Battery(_) => "battery",
        }
    }

    fn referenced_states(&self) -> Vec<&str> {
        match self {
            PolicyRule::Total { target, .. }
            | PolicyRule::Continuous { target, .. }
            | PolicyRule::Repeat { target, .. }
            | PolicyRule::Multiple { target, .. }
            | PolicyRule::Sleep { target, .. } => alloc::vec![target.as_str()],
            PolicyRule::Strict { states } | PolicyRule::Pattern { states } => {
                states.iter().map(String::as_str).collect()
            }
            PolicyRule::Battery(_) => Vec::new(),
        }
    }
}

pub(crate) fn check_policy(
    policy: &Policy,
    device: &DeviceSpec,
    grid: &TimeGrid,
    report: &mut ValidationReport,
) {
    let subject = format!("device {} policy {}", device.id, policy.id);
    let h = grid.horizon_slots;
    for s in policy.rule.referenced_states() {
        if device.state_index(s).is_none() {
            report.push(&subject, "state", format!("unknown state id {s}"));
        }
    }
    match &policy.rule {
        PolicyRule::Total { slots, .. } | PolicyRule::Continuous { slots, .. } => {
            if *slots > h {
                report.push(&subject, "slots_required", "exceeds the horizon");
            }
        }
        PolicyRule::Repeat {
            slots_on, period, ..
        } => {
            if *period == 0 || *period > MAX_REPEAT_PERIOD {
                report.push(
                    &subject,
                    "period_slots",
                    format!("period must lie in 1..={MAX_REPEAT_PERIOD}"),
                );
            }
            if *slots_on > *period {
                report.push(&subject, "slots_on", "exceeds the period");
            }
        }
        PolicyRule::Multiple {
            jobs, job_length, ..
        } => {
            if *jobs > 0 && *job_length == 0 {
                report.push(&subject, "job_length_slots", "jobs need a positive length");
            }
            if jobs * job_length > h {
                report.push(&subject, "job_count", "jobs do not fit in the horizon");
            }
        }
        PolicyRule::Strict { states } | PolicyRule::Pattern { states } => {
            if states.len() != h {
                report.push(
                    &subject,
                    "state_per_slot",
                    format!("{} entries for {h} slots", states.len()),
                );
            }
        }
        PolicyRule::Sleep { start, end, .. } => {
            if start > end || *end > h {
                report.push(&subject, "window", "need start <= end <= horizon");
            }
        }
        PolicyRule::Battery(spec) => {
            check_battery(spec, &subject, report);
            report.push(
                &subject,
                "variant",
                "battery policies are attached through the problem's battery",
            );
        }
    }
}

/// True iff a complete column satisfies the policy.
pub fn satisfied<S: AsRef<str>>(policy: &Policy, column: &[S], grid: &TimeGrid) -> bool {
    if column.len() != grid.horizon_slots {
        return false;
    }
    let col: Vec<&str> = column.iter().map(AsRef::as_ref).collect();
    let is = |s: &str, t: &str| s == t;
    match &policy.rule {
        PolicyRule::Total { target, slots } => col.iter().filter(|s| is(s, target)).count() == *slots,
        PolicyRule::Continuous { target, slots } => {
            let runs = runs_of(&col, target);
            match runs.as_slice() {
                [] => *slots == 0,
                [only] => *only == *slots,
                _ => false,
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
            col.windows(*period)
                .all(|w| w.iter().filter(|s| is(s, target)).count() >= *slots_on)
        }
        PolicyRule::Multiple {
            target,
            jobs,
            job_length,
        } => {
            let runs = runs_of(&col, target);
            runs.len() == *jobs && runs.iter().all(|r| r == job_length)
        }
        PolicyRule::Strict { states } | PolicyRule::Pattern { states } => {
            states.len() == col.len() && states.iter().zip(&col).all(|(a, b)| a == b)
        }
        PolicyRule::Sleep { target, start, end } => {
            *end <= col.len() && col[*start.min(end)..*end].iter().all(|s| is(s, target))
        }
        PolicyRule::Battery(spec) => match parse_actions(&col) {
            Some(actions) => battery_feasible(spec, &actions, grid).viable,
            None => false,
        },
    }
}

fn runs_of(col: &[&str], target: &str) -> Vec<usize> {
    let mut runs = Vec::new();
    let mut len = 0;
    for s in col {
        if *s == target {
            len += 1;
        } else if len > 0 {
            runs.push(len);
            len = 0;
        }
    }
    if len > 0 {
        runs.push(len);
    }
    runs
}

fn parse_actions(col: &[&str]) -> Option<Vec<BatteryAction>> {
    col.iter().map(|s| BatteryAction::parse(s)).collect()
}

/// False only if no completion of `prefix` can satisfy the policy.
pub fn prefix_viable<S: AsRef<str>>(policy: &Policy, prefix: &[S], grid: &TimeGrid) -> bool {
    let h = grid.horizon_slots;
    if prefix.len() > h {
        return false;
    }
    if let PolicyRule::Battery(spec) = &policy.rule {
        let col: Vec<&str> = prefix.iter().map(AsRef::as_ref).collect();
        return match parse_actions(&col) {
            Some(actions) => battery_feasible(spec, &actions, grid).viable,
            None => false,
        };
    }

    // Local vocabulary: policy ids first, then anything else the prefix uses.
    let mut vocab: Vec<&str> = policy.rule.referenced_states();
    for s in prefix {
        if !vocab.contains(&s.as_ref()) {
            vocab.push(s.as_ref());
        }
    }
    let lookup = |s: &str| vocab.iter().position(|v| *v == s).map(|i| i as u16);
    let tracker = match Tracker::compile(&policy.rule, h, lookup) {
        Some(t) => t,
        None => return false,
    };
    let mut digest = tracker.initial();
    for (slot, s) in prefix.iter().enumerate() {
        let state = lookup(s.as_ref()).expect("prefix entry is in the vocabulary");
        match tracker.step(digest, slot, state) {
            Some(d) => digest = d,
            None => return false,
        }
    }
    true
}

/// Outcome of simulating a battery action column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatteryCheck {
    pub viable: bool,
    /// Charge at each boundary reached, starting with the initial charge.
    pub trajectory: Vec<Energy>,
}

/// Simulates the charge update slot by slot and checks the storage bounds
/// and the end-of-day return to the initial charge.
///
/// A complete column (length == horizon) must end exactly at the initial
/// charge when the battery enforces it. A shorter prefix is rejected when the
/// remaining slots cannot bring the charge back.
pub fn battery_feasible(
    spec: &BatterySpec,
    actions: &[BatteryAction],
    grid: &TimeGrid,
) -> BatteryCheck {
    let quanta = spec.quanta(grid);
    let h = grid.horizon_slots;
    let mut trajectory = Vec::with_capacity(actions.len() + 1);
    let mut charge = spec.initial_charge;
    trajectory.push(charge);
    if actions.len() > h {
        return BatteryCheck {
            viable: false,
            trajectory,
        };
    }
    for &action in actions {
        charge = Energy(charge.0 + spec.delta(&quanta, action));
        trajectory.push(charge);
        if charge < spec.capacity_min || charge > spec.capacity_max {
            return BatteryCheck {
                viable: false,
                trajectory,
            };
        }
    }
    let viable = !spec.enforce_end_equals_start
        || can_return(spec, &quanta, charge, h - actions.len());
    BatteryCheck { viable, trajectory }
}

/// Whether some mix of at most `remaining` charge and discharge slots moves
/// `charge` exactly back to the initial charge. Intermediate bounds are not
/// considered, so this never rejects a recoverable state.
pub(crate) fn can_return(
    spec: &BatterySpec,
    quanta: &BatteryQuanta,
    charge: Energy,
    remaining: usize,
) -> bool {
    let target = spec.initial_charge.0;
    let up = quanta.charge_stored.0;
    let down = quanta.discharge_stored.0;
    let diff = target - charge.0;
    if diff == 0 {
        return true;
    }
    if up == down && up > 0 {
        return diff % up == 0 && (diff.unsigned_abs() / up as u64) as usize <= remaining;
    }
    for ups in 0..=remaining as i64 {
        let rest = charge.0 + ups * up - target;
        if rest < 0 {
            continue;
        }
        if down == 0 {
            if rest == 0 {
                return true;
            }
            continue;
        }
        if rest % down == 0 && ups + rest / down <= remaining as i64 {
            return true;
        }
    }
    false
}

/// Incremental form of a policy over state indices.
///
/// `step` receives the digest after slots `0..slot` and the state chosen for
/// `slot`; it returns the new digest, or `None` once no completion can
/// satisfy the policy. Digests are minimal: two prefixes of equal length and
/// equal digest admit exactly the same completions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tracker {
    Total {
        target: u16,
        slots: u32,
        horizon: usize,
    },
    Continuous {
        target: u16,
        slots: u32,
        horizon: usize,
    },
    Repeat {
        target: u16,
        on: u32,
        period: usize,
        horizon: usize,
    },
    Multiple {
        target: u16,
        jobs: u32,
        length: u32,
        horizon: usize,
    },
    Fixed {
        states: Vec<u16>,
    },
    Sleep {
        target: u16,
        start: usize,
        end: usize,
    },
}

const RUN_IDLE: u64 = 0;
const RUN_OPEN: u64 = 1;
const RUN_DONE: u64 = 2;

impl Tracker {
    /// Resolves state ids through `lookup`. Returns `None` for battery
    /// policies and for references to unknown states.
    pub fn compile(
        rule: &PolicyRule,
        horizon: usize,
        lookup: impl Fn(&str) -> Option<u16>,
    ) -> Option<Tracker> {
        Some(match rule {
            PolicyRule::Total { target, slots } => Tracker::Total {
                target: lookup(target)?,
                slots: *slots as u32,
                horizon,
            },
            PolicyRule::Continuous { target, slots } => Tracker::Continuous {
                target: lookup(target)?,
                slots: *slots as u32,
                horizon,
            },
            PolicyRule::Repeat {
                target,
                slots_on,
                period,
            } => {
                if *period == 0 || *period > MAX_REPEAT_PERIOD {
                    return None;
                }
                Tracker::Repeat {
                    target: lookup(target)?,
                    on: *slots_on as u32,
                    period: *period,
                    horizon,
                }
            }
            PolicyRule::Multiple {
                target,
                jobs,
                job_length,
            } => {
                if *job_length == 0 && *jobs > 0 {
                    return None;
                }
                Tracker::Multiple {
                    target: lookup(target)?,
                    jobs: *jobs as u32,
                    length: *job_length as u32,
                    horizon,
                }
            }
            PolicyRule::Strict { states } | PolicyRule::Pattern { states } => Tracker::Fixed {
                states: states.iter().map(|s| lookup(s)).collect::<Option<_>>()?,
            },
            PolicyRule::Sleep { target, start, end } => Tracker::Sleep {
                target: lookup(target)?,
                start: *start,
                end: *end,
            },
            PolicyRule::Battery(_) => return None,
        })
    }

    pub fn initial(&self) -> u64 {
        0
    }

    /// The only admissible state in `slot`, if the policy pins it.
    pub fn forced(&self, slot: usize) -> Option<u16> {
        match self {
            Tracker::Fixed { states } => states.get(slot).copied(),
            Tracker::Sleep { target, start, end } if (*start..*end).contains(&slot) => {
                Some(*target)
            }
            _ => None,
        }
    }

    pub fn step(&self, digest: u64, slot: usize, state: u16) -> Option<u64> {
        match *self {
            Tracker::Total {
                target,
                slots,
                horizon,
            } => {
                let count = digest + u64::from(state == target);
                let remaining = (horizon - slot - 1) as u64;
                (count <= u64::from(slots) && count + remaining >= u64::from(slots))
                    .then_some(count)
            }
            Tracker::Continuous {
                target,
                slots,
                horizon,
            } => {
                let slots = u64::from(slots);
                let mut count = digest & 0xffff_ffff;
                let mut phase = digest >> 32;
                if state == target {
                    if phase == RUN_DONE {
                        return None;
                    }
                    count += 1;
                    phase = RUN_OPEN;
                    if count > slots {
                        return None;
                    }
                } else if phase == RUN_OPEN {
                    if count != slots {
                        return None;
                    }
                    phase = RUN_DONE;
                }
                let remaining = (horizon - slot - 1) as u64;
                let ok = match phase {
                    RUN_IDLE => remaining >= slots,
                    RUN_OPEN => count + remaining >= slots,
                    _ => true,
                };
                ok.then_some(count | (phase << 32))
            }
            Tracker::Repeat {
                target,
                on,
                period,
                horizon,
            } => repeat_step(digest, slot, state == target, on, period, horizon),
            Tracker::Multiple {
                target,
                jobs,
                length,
                horizon,
            } => {
                let mut done = digest & 0xffff_ffff;
                let mut run = digest >> 32;
                let (jobs, length) = (u64::from(jobs), u64::from(length));
                if state == target {
                    if length == 0 || (run == 0 && done + 1 > jobs) {
                        return None;
                    }
                    run += 1;
                    if run > length {
                        return None;
                    }
                } else if run > 0 {
                    if run != length {
                        return None;
                    }
                    done += 1;
                    run = 0;
                }
                let remaining = (horizon - slot - 1) as u64;
                let open = u64::from(run > 0);
                let unstarted = jobs - done - open;
                let needed = if run > 0 {
                    (length - run) + unstarted * (length + 1)
                } else if unstarted > 0 {
                    unstarted * (length + 1) - 1
                } else {
                    0
                };
                (needed <= remaining).then_some(done | (run << 32))
            }
            Tracker::Fixed { ref states } => (states.get(slot) == Some(&state)).then_some(0),
            Tracker::Sleep { target, start, end } => {
                (!(start..end).contains(&slot) || state == target).then_some(0)
            }
        }
    }
}

/// Repeat digest: bit `i` is set when slot `k-1-i` was in the target state,
/// for the last `period - 1` slots, keeping only the `on` most recent set
/// bits (older ones can never decide a window).
fn repeat_step(
    digest: u64,
    slot: usize,
    hit: bool,
    on: u32,
    period: usize,
    horizon: usize,
) -> Option<u64> {
    if on as usize > period && horizon >= period {
        return None;
    }
    let full: u128 = (u128::from(digest) << 1) | u128::from(hit);
    let assigned = slot + 1;
    let ones_in_last = |m: usize| -> u32 {
        let mask = if m >= 128 { u128::MAX } else { (1u128 << m) - 1 };
        (full & mask).count_ones()
    };
    // Window that just closed.
    if assigned >= period && ones_in_last(period) < on {
        return None;
    }
    // Windows straddling the boundary that still fit in the horizon.
    let first = assigned.saturating_sub(period - 1);
    for start in first..assigned {
        if start + period > horizon {
            break;
        }
        let past = assigned - start;
        let future = period - past;
        if ones_in_last(past) as usize + future < on as usize {
            return None;
        }
    }
    let keep = period - 1;
    let mut mask = if keep == 0 {
        0
    } else {
        (full & ((1u128 << keep) - 1)) as u64
    };
    // Keep only the `on` lowest (most recent) set bits.
    let mut canonical = 0u64;
    for _ in 0..on {
        if mask == 0 {
            break;
        }
        let low = mask & mask.wrapping_neg();
        canonical |= low;
        mask ^= low;
    }
    Some(canonical)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::EfficiencyMode;
    use alloc::vec;

    fn grid(h: usize) -> TimeGrid {
        TimeGrid::quarter_hourly(h)
    }

    fn p(rule: PolicyRule) -> Policy {
        Policy::new("p", rule)
    }

    fn total(n: usize) -> Policy {
        p(PolicyRule::Total {
            target: "S1".into(),
            slots: n,
        })
    }

    fn cols(s: &str) -> Vec<String> {
        s.split(',').map(String::from).collect()
    }

    #[test]
    fn total_need_not_be_contiguous() {
        assert!(satisfied(&total(3), &cols("S1,S0,S1,S0,S1,S0"), &grid(6)));
        assert!(!satisfied(&total(2), &cols("S1,S0,S1,S0,S1,S0"), &grid(6)));
    }

    #[test]
    fn continuous_needs_single_run() {
        let c = p(PolicyRule::Continuous {
            target: "S1".into(),
            slots: 3,
        });
        assert!(!satisfied(&c, &cols("S1,S0,S1,S0,S1,S0"), &grid(6)));
        assert!(satisfied(&c, &cols("S0,S1,S1,S1,S0,S0"), &grid(6)));
    }

    #[test]
    fn repeat_sliding_window() {
        let r = p(PolicyRule::Repeat {
            target: "S1".into(),
            slots_on: 1,
            period: 4,
        });
        assert!(!satisfied(&r, &cols("S1,S0,S0,S0,S0,S0,S0,S1"), &grid(8)));
        assert!(satisfied(&r, &cols("S0,S0,S0,S1,S0,S0,S1,S0"), &grid(8)));
    }

    #[test]
    fn sleep_prefix_violation() {
        let s = p(PolicyRule::Sleep {
            target: "S0".into(),
            start: 4,
            end: 24,
        });
        let prefix = cols("S1,S1,S0,S1,S0,S1");
        assert!(!prefix_viable(&s, &prefix, &grid(24)));
        assert!(prefix_viable(&s, &prefix[..5], &grid(24)));
    }

    #[test]
    fn total_prefix_counting() {
        let prefix = cols("S0,S0,S0,S0");
        assert!(!prefix_viable(&total(3), &prefix, &grid(6)));
        assert!(prefix_viable(&total(2), &prefix, &grid(6)));
    }

    #[test]
    fn multiple_requires_gap_between_jobs() {
        let m = p(PolicyRule::Multiple {
            target: "S1".into(),
            jobs: 2,
            job_length: 2,
        });
        assert!(satisfied(&m, &cols("S1,S1,S0,S1,S1,S0"), &grid(6)));
        assert!(!satisfied(&m, &cols("S1,S1,S1,S1,S0,S0"), &grid(6)));
        // Two jobs of two slots plus a gap need five slots.
        assert!(!prefix_viable(&m, &cols("S0,S0"), &grid(6)));
        assert!(prefix_viable(&m, &cols("S0"), &grid(6)));
    }

    fn smile3() -> BatterySpec {
        BatterySpec {
            capacity_max: Energy::from_kwh(2.8),
            capacity_min: Energy::ZERO,
            charge_rate_w: 3000.0,
            discharge_rate_w: 3000.0,
            efficiency: 1.0,
            initial_charge: Energy::ZERO,
            enforce_end_equals_start: false,
            efficiency_mode: EfficiencyMode::DivideBoth,
        }
    }

    #[test]
    fn one_charge_slot() {
        let check = battery_feasible(&smile3(), &[BatteryAction::Charge], &grid(4));
        assert!(check.viable);
        assert_eq!(check.trajectory, vec![Energy::ZERO, Energy::from_kwh(0.75)]);
    }

    #[test]
    fn discharge_from_empty() {
        let check = battery_feasible(&smile3(), &[BatteryAction::Discharge], &grid(4));
        assert!(!check.viable);
    }

    #[test]
    fn idle_day_is_flat() {
        let mut spec = smile3();
        spec.enforce_end_equals_start = true;
        let check = battery_feasible(&spec, &[BatteryAction::Idle; 8], &grid(8));
        assert!(check.viable);
        assert!(check.trajectory.iter().all(|c| *c == Energy::ZERO));
    }

    #[test]
    fn unreturnable_prefix() {
        let mut spec = smile3();
        spec.enforce_end_equals_start = true;
        let a = [BatteryAction::Charge, BatteryAction::Charge];
        assert!(!battery_feasible(&spec, &a, &grid(3)).viable);
        assert!(battery_feasible(&spec, &a, &grid(4)).viable);
        assert!(!battery_feasible(&spec, &a[..1], &grid(1)).viable);
    }

    #[test]
    fn overcharge_rejected() {
        let check = battery_feasible(&smile3(), &[BatteryAction::Charge; 4], &grid(8));
        assert!(!check.viable);
        assert_eq!(check.trajectory.last(), Some(&Energy::from_kwh(3.0)));
    }

    #[test]
    fn battery_policy_on_string_column() {
        let mut spec = smile3();
        spec.enforce_end_equals_start = true;
        let policy = p(PolicyRule::Battery(spec));
        assert!(satisfied(&policy, &cols("charge,idle,discharge"), &grid(3)));
        assert!(!satisfied(&policy, &cols("charge,idle,idle"), &grid(3)));
        assert!(!satisfied(&policy, &cols("charge,bogus,discharge"), &grid(3)));
    }

    #[test]
    fn unequal_quanta_return() {
        let mut spec = smile3();
        spec.discharge_rate_w = 1500.0;
        spec.enforce_end_equals_start = true;
        let quanta = spec.quanta(&grid(8));
        // +0.75 needs two 0.375 discharges.
        assert!(can_return(&spec, &quanta, Energy::from_kwh(0.75), 2));
        assert!(!can_return(&spec, &quanta, Energy::from_kwh(0.75), 1));
        assert!(can_return(&spec, &quanta, Energy::from_kwh(0.375), 3));
    }

    #[test]
    fn repeat_digest_is_canonical() {
        // Period 5, one slot on: only the most recent hit matters.
        let t = Tracker::Repeat {
            target: 1,
            on: 1,
            period: 5,
            horizon: 20,
        };
        let a = [1u16, 0, 1, 0];
        let b = [0u16, 0, 1, 0];
        let run = |col: &[u16]| {
            col.iter()
                .enumerate()
                .try_fold(0u64, |d, (i, &s)| t.step(d, i, s))
        };
        assert_eq!(run(&a), run(&b));
        assert_eq!(run(&a), Some(0b10));
    }
}
