//! Scenario, device, price, weather and schedule files.

mod devices;
mod scenario;
mod schedule_json;
mod series;

use std::path::{Path, PathBuf};

pub use devices::{load_devices, parse_devices, DeviceRecord, PolicyRecord, StateRecord};
pub use scenario::{
    load_scenario, load_scenario_seeded, BatterySection, EfficiencyModeName, PanelSection,
    PriceBounds, ProsumerSection, Scenario, ScenarioFile, TurbineSection,
};
pub use schedule_json::{
    read_schedule, write_schedule, ScheduleDocument, ScheduleMetadata, SlotRecord, Totals,
};
pub use series::{
    cluster_power_states, hourly_to_slots, load_power_trace, load_prices, load_weather, PowerTrace, PriceRow,
};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}{}: {message}", path.display(), line.map(|l| format!(":{l}")).unwrap_or_default())]
    Parse {
        path: PathBuf,
        line: Option<u64>,
        message: String,
    },
    #[error("{}: {message}", path.display())]
    Content { path: PathBuf, message: String },
}

impl IngestError {
    pub(crate) fn content(path: &Path, message: impl Into<String>) -> Self {
        IngestError::Content {
            path: path.to_path_buf(),
            message: message.into(),
        }
    }

    pub(crate) fn parse(path: &Path, line: Option<u64>, message: impl ToString) -> Self {
        IngestError::Parse {
            path: path.to_path_buf(),
            line,
            message: message.to_string(),
        }
    }
}

pub(crate) fn read_to_string(path: &Path) -> Result<String, IngestError> {
    std::fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}
