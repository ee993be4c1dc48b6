use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use ucsched_core::domain::{BatteryAction, Schedule, ScheduleProblem};

use super::scenario::slot_start;
use super::{read_to_string, IngestError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleMetadata {
    pub scenario_id: String,
    pub solver: String,
    pub threads: usize,
    pub duration_ms: f64,
    pub nodes_expanded: u64,
    pub horizon_slots: usize,
    pub slot_seconds: u32,
    pub start: DateTime<Utc>,
    pub battery_charge_start_mwh: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub slot_index: usize,
    pub start: DateTime<Utc>,
    /// Device id to state id.
    pub states: BTreeMap<String, String>,
    pub battery_action: String,
    /// Stored energy at the end of the slot.
    pub battery_charge_kwh: f64,
    pub battery_charge_mwh: i64,
    pub demand_kwh: f64,
    pub demand_mwh: i64,
    pub cost_micro: i64,
    pub cost: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub total_cost_micro: i64,
    pub total_cost: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleDocument {
    pub metadata: ScheduleMetadata,
    pub slots: Vec<SlotRecord>,
    pub totals: Totals,
}

impl ScheduleDocument {
    /// `metadata.horizon_slots`, `slot_seconds` and the battery start are
    /// overwritten from the problem and schedule.
    pub fn new(problem: &ScheduleProblem, schedule: &Schedule, mut metadata: ScheduleMetadata) -> Self {
        metadata.horizon_slots = schedule.horizon();
        metadata.slot_seconds = problem.grid.slot_seconds;
        metadata.battery_charge_start_mwh = schedule
            .battery_trajectory
            .first()
            .map_or(0, |e| e.milliwatt_hours());
        let slots = (0..schedule.horizon())
            .map(|t| {
                let charge = schedule.battery_trajectory.get(t + 1).copied().unwrap_or_default();
                let demand = schedule.per_slot_demand[t];
                let cost = schedule.per_slot_cost[t];
                SlotRecord {
                    slot_index: t,
                    start: slot_start(metadata.start, metadata.slot_seconds, t),
                    states: problem
                        .devices
                        .iter()
                        .zip(&schedule.assignments[t])
                        .map(|(d, &s)| (d.id.clone(), d.states[s].id.clone()))
                        .collect(),
                    battery_action: schedule
                        .battery_actions
                        .get(t)
                        .copied()
                        .unwrap_or_default()
                        .as_str()
                        .to_string(),
                    battery_charge_kwh: charge.kwh(),
                    battery_charge_mwh: charge.milliwatt_hours(),
                    demand_kwh: demand.kwh(),
                    demand_mwh: demand.milliwatt_hours(),
                    cost_micro: cost.micros(),
                    cost: cost.to_string(),
                }
            })
            .collect();
        ScheduleDocument {
            metadata,
            slots,
            totals: Totals {
                total_cost_micro: schedule.total_cost.micros(),
                total_cost: schedule.total_cost.to_string(),
            },
        }
    }

    /// Maps state ids back to indices of `problem`, ready for replay.
    pub fn decisions(
        &self,
        problem: &ScheduleProblem,
    ) -> Result<(Vec<Vec<usize>>, Vec<BatteryAction>), String> {
        let mut rows = Vec::with_capacity(self.slots.len());
        let mut actions = Vec::with_capacity(self.slots.len());
        for rec in &self.slots {
            let row = problem
                .devices
                .iter()
                .map(|d| {
                    let id = rec
                        .states
                        .get(&d.id)
                        .ok_or_else(|| format!("slot {}: no state for device {}", rec.slot_index, d.id))?;
                    d.state_index(id)
                        .ok_or_else(|| format!("slot {}: device {} has no state {id}", rec.slot_index, d.id))
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
            actions.push(BatteryAction::parse(&rec.battery_action).ok_or_else(|| {
                format!("slot {}: unknown battery action {}", rec.slot_index, rec.battery_action)
            })?);
        }
        Ok((rows, actions))
    }
}

pub fn write_schedule(path: &Path, document: &ScheduleDocument) -> Result<(), IngestError> {
    let text = serde_json::to_string_pretty(document)
        .map_err(|e| IngestError::content(path, e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_schedule(path: &Path) -> Result<ScheduleDocument, IngestError> {
    let text = read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| IngestError::parse(path, Some(e.line() as u64), e))
}
