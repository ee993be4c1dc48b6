//! Problem and schedule data model.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::dispatch;
use crate::policies::{self, Policy};
use crate::units::{Cost, Energy, Price};

/// Day split into fixed-length slots.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    pub horizon_slots: usize,
    pub slot_seconds: u32,
    /// ISO-8601 start of slot 0; metadata only.
    pub start_label: String,
}

impl TimeGrid {
    pub fn new(horizon_slots: usize, slot_seconds: u32) -> Self {
        TimeGrid {
            horizon_slots,
            slot_seconds,
            start_label: String::new(),
        }
    }

    /// Quarter-hour grid, the default granularity.
    pub fn quarter_hourly(horizon_slots: usize) -> Self {
        Self::new(horizon_slots, 900)
    }

    pub fn with_start(mut self, label: impl Into<String>) -> Self {
        self.start_label = label.into();
        self
    }

    pub fn slot_hours(&self) -> f64 {
        f64::from(self.slot_seconds) / 3600.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceState {
    pub id: String,
    pub power_w: f64,
}

impl DeviceState {
    pub fn new(id: impl Into<String>, power_w: f64) -> Self {
        DeviceState {
            id: id.into(),
            power_w,
        }
    }
}

/// A schedulable device with its power states and the one policy that
/// constrains it.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceSpec {
    pub id: String,
    pub states: Vec<DeviceState>,
    pub policy: Policy,
}

impl DeviceSpec {
    pub fn new(id: impl Into<String>, states: Vec<DeviceState>, policy: Policy) -> Self {
        DeviceSpec {
            id: id.into(),
            states,
            policy,
        }
    }

    pub fn state_index(&self, state_id: &str) -> Option<usize> {
        self.states.iter().position(|s| s.id == state_id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SourceKind {
    Wind,
    Pv,
    Prosumer,
    Grid,
    BatteryInternal,
}

impl SourceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SourceKind::Wind => "wind",
            SourceKind::Pv => "pv",
            SourceKind::Prosumer => "prosumer",
            SourceKind::Grid => "grid",
            SourceKind::BatteryInternal => "battery-internal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Supply {
    Limited(Energy),
    Unbounded,
}

/// One supply offer for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergySource {
    pub id: String,
    pub kind: SourceKind,
    pub price: Price,
    pub supply: Supply,
}

impl EnergySource {
    pub fn limited(id: impl Into<String>, kind: SourceKind, price: Price, energy: Energy) -> Self {
        EnergySource {
            id: id.into(),
            kind,
            price,
            supply: Supply::Limited(energy),
        }
    }

    pub fn grid(id: impl Into<String>, price: Price) -> Self {
        EnergySource {
            id: id.into(),
            kind: SourceKind::Grid,
            price,
            supply: Supply::Unbounded,
        }
    }
}

/// How the efficiency enters the charge update.
///
/// `DivideBoth` divides by η on both charge and discharge. `Physical`
/// multiplies by η when charging and divides when discharging.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EfficiencyMode {
    #[default]
    DivideBoth,
    Physical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatterySpec {
    pub capacity_max: Energy,
    pub capacity_min: Energy,
    pub charge_rate_w: f64,
    pub discharge_rate_w: f64,
    pub efficiency: f64,
    pub initial_charge: Energy,
    pub enforce_end_equals_start: bool,
    pub efficiency_mode: EfficiencyMode,
}

/// Per-slot energy amounts of the three battery actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatteryQuanta {
    /// Stored energy gained by one charge slot.
    pub charge_stored: Energy,
    /// Energy drawn from the sources by one charge slot.
    pub charge_drawn: Energy,
    /// Stored energy lost by one discharge slot.
    pub discharge_stored: Energy,
    /// Energy delivered to the building by one discharge slot.
    pub discharge_delivered: Energy,
}

impl BatterySpec {
    pub fn quanta(&self, grid: &TimeGrid) -> BatteryQuanta {
        let s = grid.slot_seconds;
        let eta = self.efficiency;
        let charge_stored = match self.efficiency_mode {
            EfficiencyMode::DivideBoth => Energy::from_power(self.charge_rate_w / eta, s),
            EfficiencyMode::Physical => Energy::from_power(self.charge_rate_w * eta, s),
        };
        BatteryQuanta {
            charge_stored,
            charge_drawn: Energy::from_power(self.charge_rate_w, s),
            discharge_stored: Energy::from_power(self.discharge_rate_w / eta, s),
            discharge_delivered: Energy::from_power(self.discharge_rate_w, s),
        }
    }

    /// Change of stored energy caused by `action`.
    pub fn delta(&self, quanta: &BatteryQuanta, action: BatteryAction) -> i64 {
        match action {
            BatteryAction::Idle => 0,
            BatteryAction::Charge => quanta.charge_stored.0,
            BatteryAction::Discharge => -quanta.discharge_stored.0,
        }
    }
}

/// The discretized battery alphabet: full-rate charge, full-rate discharge
/// or idle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum BatteryAction {
    #[default]
    Idle,
    Charge,
    Discharge,
}

impl BatteryAction {
    pub const ALL: [BatteryAction; 3] = [
        BatteryAction::Idle,
        BatteryAction::Charge,
        BatteryAction::Discharge,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BatteryAction::Idle => "idle",
            BatteryAction::Charge => "charge",
            BatteryAction::Discharge => "discharge",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "idle" => Some(BatteryAction::Idle),
            "charge" => Some(BatteryAction::Charge),
            "discharge" => Some(BatteryAction::Discharge),
            _ => None,
        }
    }
}

impl fmt::Display for BatteryAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Full search input.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleProblem {
    pub grid: TimeGrid,
    pub devices: Vec<DeviceSpec>,
    /// `sources[t]` lists the offers available in slot `t`.
    pub sources: Vec<Vec<EnergySource>>,
    pub battery: Option<BatterySpec>,
}

/// A complete schedule with its replayed costs.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    /// `assignments[t][i]` is the state index of device `i` in slot `t`.
    pub assignments: Vec<Vec<usize>>,
    pub battery_actions: Vec<BatteryAction>,
    pub per_slot_cost: Vec<Cost>,
    /// Net demand drawn from the sources.
    pub per_slot_demand: Vec<Energy>,
    /// Stored energy at every slot boundary (`horizon + 1` entries).
    pub battery_trajectory: Vec<Energy>,
    pub total_cost: Cost,
}

impl Schedule {
    pub fn horizon(&self) -> usize {
        self.assignments.len()
    }

    /// State ids of one device across the horizon.
    pub fn device_column<'a>(&self, device: &'a DeviceSpec, index: usize) -> Vec<&'a str> {
        self.assignments
            .iter()
            .map(|row| device.states[row[index]].id.as_str())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DomainError {
    #[error("slot {slot}: device {device} has no state with index {state}")]
    UnknownState {
        slot: usize,
        device: String,
        state: usize,
    },
    #[error("schedule shape does not match the problem: {0}")]
    Shape(String),
    #[error("schedule uses the battery but the problem has none")]
    MissingBattery,
}

/// One broken invariant found by [`validate_problem`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub subject: String,
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]: {}", self.subject, self.field, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub(crate) fn push(
        &mut self,
        subject: impl Into<String>,
        field: impl Into<String>,
        message: impl Into<String>,
    ) {
        self.violations.push(Violation {
            subject: subject.into(),
            field: field.into(),
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Lists every violated type invariant; an empty report means the problem is
/// well formed.
pub fn validate_problem(problem: &ScheduleProblem) -> ValidationReport {
    let mut report = ValidationReport::default();
    let grid = &problem.grid;
    if grid.horizon_slots == 0 {
        report.push("grid", "horizon_slots", "horizon must be at least one slot");
    }
    if grid.horizon_slots > usize::from(u16::MAX) {
        report.push("grid", "horizon_slots", "horizon exceeds 65535 slots");
    }
    if grid.slot_seconds == 0 {
        report.push("grid", "slot_duration", "slot duration must be positive");
    }

    for (i, device) in problem.devices.iter().enumerate() {
        let subject = format!("device {}", device.id);
        if problem.devices[..i].iter().any(|d| d.id == device.id) {
            report.push(&subject, "device_id", "duplicate device id");
        }
        if device.states.is_empty() {
            report.push(&subject, "states", "device has no states");
        }
        if device.states.len() > usize::from(u16::MAX) {
            report.push(&subject, "states", "too many states");
        }
        for (j, state) in device.states.iter().enumerate() {
            if !(state.power_w.is_finite() && state.power_w >= 0.0) {
                report.push(
                    &subject,
                    format!("states[{j}].power_w"),
                    format!("power {} W is not a non-negative number", state.power_w),
                );
            }
            if device.states[..j].iter().any(|s| s.id == state.id) {
                report.push(
                    &subject,
                    format!("states[{j}].state_id"),
                    format!("duplicate state id {}", state.id),
                );
            }
        }
        policies::check_policy(&device.policy, device, grid, &mut report);
    }

    if problem.sources.len() != grid.horizon_slots {
        report.push(
            "sources",
            "sources_per_slot",
            format!(
                "{} source lists for {} slots",
                problem.sources.len(),
                grid.horizon_slots
            ),
        );
    }
    for (t, slot) in problem.sources.iter().enumerate() {
        let unbounded = slot
            .iter()
            .filter(|s| s.supply == Supply::Unbounded)
            .count();
        let grids = slot.iter().filter(|s| s.kind == SourceKind::Grid).count();
        if unbounded == 0 {
            report.push("sources", format!("slot {t}"), format!("no unbounded source at slot {t}"));
        }
        if grids != 1 {
            report.push(
                "sources",
                format!("slot {t}"),
                format!("{grids} grid sources at slot {t}, expected exactly one"),
            );
        }
        for source in slot {
            let subject = format!("source {} (slot {t})", source.id);
            if source.price.0 < 0 {
                report.push(&subject, "cost", "negative unit cost");
            }
            match source.supply {
                Supply::Limited(e) if e.0 < 0 => {
                    report.push(&subject, "energy", "negative available energy")
                }
                Supply::Unbounded if source.kind != SourceKind::Grid => {
                    report.push(&subject, "energy", "only the grid may be unbounded")
                }
                _ => {}
            }
        }
    }

    if let Some(battery) = &problem.battery {
        check_battery(battery, "battery", &mut report);
    }
    report
}

pub(crate) fn check_battery(b: &BatterySpec, subject: &str, report: &mut ValidationReport) {
    if b.capacity_min.0 < 0 || b.capacity_min > b.capacity_max {
        report.push(subject, "capacity_min", "need 0 <= capacity_min <= capacity_max");
    }
    if !(b.charge_rate_w > 0.0 && b.charge_rate_w.is_finite()) {
        report.push(subject, "charge_rate_max", "charge rate must be positive");
    }
    if !(b.discharge_rate_w > 0.0 && b.discharge_rate_w.is_finite()) {
        report.push(subject, "discharge_rate_max", "discharge rate must be positive");
    }
    if !(b.efficiency > 0.0 && b.efficiency <= 1.0) {
        report.push(subject, "efficiency", "efficiency must lie in (0, 1]");
    }
    if b.initial_charge < b.capacity_min || b.initial_charge > b.capacity_max {
        report.push(
            subject,
            "initial_charge",
            "initial charge outside [capacity_min, capacity_max]",
        );
    }
}

/// Net demand per slot: summed device energy plus battery flows (charging
/// adds load, discharging offsets it down to zero).
pub fn schedule_energy(
    schedule: &Schedule,
    grid: &TimeGrid,
    devices: &[DeviceSpec],
    battery: Option<&BatterySpec>,
) -> Result<Vec<Energy>, DomainError> {
    if schedule.assignments.len() != grid.horizon_slots {
        return Err(DomainError::Shape(format!(
            "{} slots assigned, horizon is {}",
            schedule.assignments.len(),
            grid.horizon_slots
        )));
    }
    let quanta = battery.map(|b| b.quanta(grid));
    let mut out = Vec::with_capacity(grid.horizon_slots);
    for (t, row) in schedule.assignments.iter().enumerate() {
        if row.len() != devices.len() {
            return Err(DomainError::Shape(format!(
                "slot {t} assigns {} devices, problem has {}",
                row.len(),
                devices.len()
            )));
        }
        let mut energies = Vec::with_capacity(devices.len());
        for (device, &state) in devices.iter().zip(row) {
            let s = device
                .states
                .get(state)
                .ok_or_else(|| DomainError::UnknownState {
                    slot: t,
                    device: device.id.clone(),
                    state,
                })?;
            energies.push(Energy::from_power(s.power_w, grid.slot_seconds));
        }
        let action = schedule
            .battery_actions
            .get(t)
            .copied()
            .unwrap_or(BatteryAction::Idle);
        let battery_energy = match (action, &quanta) {
            (BatteryAction::Idle, _) => Energy::ZERO,
            (_, None) => return Err(DomainError::MissingBattery),
            (BatteryAction::Charge, Some(q)) => q.charge_drawn,
            (BatteryAction::Discharge, Some(q)) => q.discharge_delivered,
        };
        out.push(dispatch::net_demand(&energies, action, battery_energy));
    }
    Ok(out)
}
