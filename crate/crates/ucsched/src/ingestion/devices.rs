use std::path::Path;

use serde::{Deserialize, Serialize};
use ucsched_core::domain::{DeviceSpec, DeviceState};
use ucsched_core::policies::{Policy, PolicyRule};

use super::{read_to_string, BatterySection, IngestError};

/// One entry of the device repository file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceRecord {
    pub device_id: String,
    pub states: Vec<StateRecord>,
    pub policy: PolicyRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateRecord {
    pub state_id: String,
    pub power_w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
pub enum PolicyRecord {
    Total {
        #[serde(default)]
        policy_id: Option<String>,
        target_state: String,
        slots_required: usize,
    },
    Continuous {
        #[serde(default)]
        policy_id: Option<String>,
        target_state: String,
        slots_required: usize,
    },
    Repeat {
        #[serde(default)]
        policy_id: Option<String>,
        target_state: String,
        slots_on: usize,
        period_slots: usize,
    },
    Multiple {
        #[serde(default)]
        policy_id: Option<String>,
        target_state: String,
        job_count: usize,
        job_length_slots: usize,
    },
    Strict {
        #[serde(default)]
        policy_id: Option<String>,
        state_per_slot: Vec<String>,
    },
    Pattern {
        #[serde(default)]
        policy_id: Option<String>,
        state_per_slot: Vec<String>,
    },
    Sleep {
        #[serde(default)]
        policy_id: Option<String>,
        target_state: String,
        window_start_slot: usize,
        window_end_slot: usize,
    },
    Battery {
        #[serde(default)]
        policy_id: Option<String>,
        spec: BatterySection,
    },
}

impl PolicyRecord {
    fn into_policy(self, device_id: &str) -> Policy {
        let (id, rule) = match self {
            PolicyRecord::Total {
                policy_id,
                target_state,
                slots_required,
            } => (
                policy_id,
                PolicyRule::Total {
                    target: target_state,
                    slots: slots_required,
                },
            ),
            PolicyRecord::Continuous {
                policy_id,
                target_state,
                slots_required,
            } => (
                policy_id,
                PolicyRule::Continuous {
                    target: target_state,
                    slots: slots_required,
                },
            ),
            PolicyRecord::Repeat {
                policy_id,
                target_state,
                slots_on,
                period_slots,
            } => (
                policy_id,
                PolicyRule::Repeat {
                    target: target_state,
                    slots_on,
                    period: period_slots,
                },
            ),
            PolicyRecord::Multiple {
                policy_id,
                target_state,
                job_count,
                job_length_slots,
            } => (
                policy_id,
                PolicyRule::Multiple {
                    target: target_state,
                    jobs: job_count,
                    job_length: job_length_slots,
                },
            ),
            PolicyRecord::Strict {
                policy_id,
                state_per_slot,
            } => (
                policy_id,
                PolicyRule::Strict {
                    states: state_per_slot,
                },
            ),
            PolicyRecord::Pattern {
                policy_id,
                state_per_slot,
            } => (
                policy_id,
                PolicyRule::Pattern {
                    states: state_per_slot,
                },
            ),
            PolicyRecord::Sleep {
                policy_id,
                target_state,
                window_start_slot,
                window_end_slot,
            } => (
                policy_id,
                PolicyRule::Sleep {
                    target: target_state,
                    start: window_start_slot,
                    end: window_end_slot,
                },
            ),
            PolicyRecord::Battery { policy_id, spec } => {
                (policy_id, PolicyRule::Battery(spec.to_spec()))
            }
        };
        let variant = rule.variant_name();
        Policy::new(id.unwrap_or_else(|| format!("{device_id}-{variant}")), rule)
    }
}

impl DeviceRecord {
    pub fn into_spec(self) -> DeviceSpec {
        let states = self
            .states
            .into_iter()
            .map(|s| DeviceState::new(s.state_id, s.power_w))
            .collect();
        let policy = self.policy.into_policy(&self.device_id);
        DeviceSpec::new(self.device_id, states, policy)
    }
}

pub fn parse_devices(text: &str, path: &Path) -> Result<Vec<DeviceRecord>, IngestError> {
    serde_json::from_str(text).map_err(|e| IngestError::parse(path, Some(e.line() as u64), e))
}

/// Reads the device repository; policies are checked later, against the
/// scenario's time grid.
pub fn load_devices(path: &Path) -> Result<Vec<DeviceRecord>, IngestError> {
    parse_devices(&read_to_string(path)?, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_each_variant() {
        let text = r#"[
          {"device_id": "fridge", "states": [{"state_id": "S0", "power_w": 0.05}, {"state_id": "S1", "power_w": 50.8}],
           "policy": {"variant": "repeat", "target_state": "S1", "slots_on": 1, "period_slots": 4}},
          {"device_id": "printer", "states": [{"state_id": "S0", "power_w": 11.13}, {"state_id": "S1", "power_w": 654.59}],
           "policy": {"variant": "multiple", "policy_id": "jobs", "target_state": "S1", "job_count": 2, "job_length_slots": 2}},
          {"device_id": "lamp", "states": [{"state_id": "off", "power_w": 0}, {"state_id": "on", "power_w": 9}],
           "policy": {"variant": "sleep", "target_state": "off", "window_start_slot": 0, "window_end_slot": 4}}
        ]"#;
        let records = parse_devices(text, Path::new("devices.json")).unwrap();
        let specs: Vec<DeviceSpec> = records.into_iter().map(|r| r.into_spec()).collect();
        assert_eq!(specs[0].policy.id, "fridge-repeat");
        assert_eq!(
            specs[0].policy.rule,
            PolicyRule::Repeat {
                target: "S1".into(),
                slots_on: 1,
                period: 4
            }
        );
        assert_eq!(specs[1].policy.id, "jobs");
        assert_eq!(specs[2].states[1].power_w, 9.0);
    }

    #[test]
    fn unknown_variant_names_the_file() {
        let text = r#"[{"device_id": "x", "states": [], "policy": {"variant": "sometimes"}}]"#;
        let err = parse_devices(text, Path::new("repo.json")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.starts_with("repo.json:1"), "{msg}");
        assert!(msg.contains("sometimes"), "{msg}");
    }
}
