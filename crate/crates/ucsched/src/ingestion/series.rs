use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, Duration, DurationRound, Utc};
use serde::Deserialize;
use ucsched_core::domain::DeviceState;
use ucsched_core::energy::WeatherSample;
use ucsched_core::profile::{kmeans_1d, ProfileError};

use super::{read_to_string, IngestError};

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct PriceRow {
    pub timestamp: DateTime<Utc>,
    /// Raw day-ahead price, typically per MWh.
    pub price: f64,
}

fn csv_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, IngestError> {
    let text = read_to_string(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    reader
        .deserialize()
        .map(|r| {
            r.map_err(|e| {
                let line = e.position().map(|p| p.line());
                IngestError::parse(path, line, e)
            })
        })
        .collect()
}

pub fn load_prices(path: &Path) -> Result<Vec<PriceRow>, IngestError> {
    let rows: Vec<PriceRow> = csv_rows(path)?;
    for w in rows.windows(2) {
        if w[1].timestamp <= w[0].timestamp {
            return Err(IngestError::content(
                path,
                format!("price timestamps not increasing at {}", w[1].timestamp.to_rfc3339()),
            ));
        }
    }
    Ok(rows)
}

/// Spreads hourly prices over the slots of the grid: every slot takes the
/// price of the hour it starts in.
pub fn hourly_to_slots(
    rows: &[PriceRow],
    start: DateTime<Utc>,
    horizon_slots: usize,
    slot_seconds: u32,
    path: &Path,
) -> Result<Vec<f64>, IngestError> {
    let mut by_hour = BTreeMap::new();
    for row in rows {
        let hour = row
            .timestamp
            .duration_trunc(Duration::hours(1))
            .map_err(|e| IngestError::content(path, e.to_string()))?;
        if by_hour.insert(hour, row.price).is_some() {
            return Err(IngestError::content(
                path,
                format!("two prices for the hour starting {}", hour.to_rfc3339()),
            ));
        }
    }
    (0..horizon_slots)
        .map(|t| {
            let at = start + Duration::seconds(i64::from(slot_seconds) * t as i64);
            let hour = at
                .duration_trunc(Duration::hours(1))
                .map_err(|e| IngestError::content(path, e.to_string()))?;
            by_hour.get(&hour).copied().ok_or_else(|| {
                IngestError::content(
                    path,
                    format!("missing hourly price for {} (slot {t})", hour.to_rfc3339()),
                )
            })
        })
        .collect()
}

#[derive(Debug, Deserialize)]
struct WeatherRecord {
    timestamp: DateTime<Utc>,
    temperature_c: f64,
    dew_point_c: f64,
    pressure_hpa: f64,
    wind_speed_ms: f64,
    dni_wm2: f64,
}

/// Weather file as CSV (by extension) or a JSON array of records.
pub fn load_weather(path: &Path) -> Result<Vec<(DateTime<Utc>, WeatherSample)>, IngestError> {
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let records: Vec<WeatherRecord> = if is_json {
        let text = read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| IngestError::parse(path, Some(e.line() as u64), e))?
    } else {
        csv_rows(path)?
    };
    records
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            if r.pressure_hpa.is_nan() || r.pressure_hpa <= 0.0 || r.wind_speed_ms < 0.0 || r.dni_wm2 < 0.0 {
                return Err(IngestError::content(
                    path,
                    format!("record {i}: pressure must be positive, wind speed and irradiance non-negative"),
                ));
            }
            Ok((
                r.timestamp,
                WeatherSample {
                    timestamp: r.timestamp.to_rfc3339(),
                    temperature_c: r.temperature_c,
                    dew_point_c: r.dew_point_c,
                    pressure_hpa: r.pressure_hpa,
                    wind_speed_ms: r.wind_speed_ms,
                    dni_wm2: r.dni_wm2,
                },
            ))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerTrace {
    pub device_id: String,
    pub samples: Vec<(DateTime<Utc>, f64)>,
}

impl PowerTrace {
    pub fn watts(&self) -> Vec<f64> {
        self.samples.iter().map(|(_, w)| *w).collect()
    }
}

#[derive(Debug, Deserialize)]
struct TraceRecord {
    timestamp: DateTime<Utc>,
    watts: f64,
}

pub fn load_power_trace(path: &Path, device_id: &str) -> Result<PowerTrace, IngestError> {
    let rows: Vec<TraceRecord> = csv_rows(path)?;
    for (i, r) in rows.iter().enumerate() {
        if r.watts.is_nan() || r.watts < 0.0 {
            return Err(IngestError::content(path, format!("sample {i}: negative power {}", r.watts)));
        }
        if i > 0 && r.timestamp <= rows[i - 1].timestamp {
            return Err(IngestError::content(
                path,
                format!("sample {i}: timestamps must be strictly increasing"),
            ));
        }
    }
    Ok(PowerTrace {
        device_id: device_id.to_string(),
        samples: rows.into_iter().map(|r| (r.timestamp, r.watts)).collect(),
    })
}

/// Power states of a device from its trace: one state per 1-D k-means
/// centroid, ids `S0`, `S1`, ... in ascending power.
pub fn cluster_power_states(trace: &PowerTrace, k: usize) -> Result<Vec<DeviceState>, ProfileError> {
    let clusters = kmeans_1d(&trace.watts(), k)?;
    Ok(clusters
        .centroids
        .iter()
        .enumerate()
        .map(|(i, &w)| DeviceState::new(format!("S{i}"), w))
        .collect())
}
