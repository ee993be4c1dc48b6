use std::collections::HashMap;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};
use ucsched_core::domain::{validate_problem, BatterySpec, EfficiencyMode, ScheduleProblem, TimeGrid};
use ucsched_core::energy::{
    build_sources, normalize_grid_prices, PanelSpec, ProsumerModel, TurbineSpec, WeatherSample,
};
use ucsched_core::units::{Energy, Price};

use super::{hourly_to_slots, load_devices, load_prices, load_weather, read_to_string, IngestError};

/// Top-level scenario file (TOML). Data file paths are relative to the
/// scenario's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub id: String,
    pub start: DateTime<Utc>,
    pub horizon_slots: usize,
    #[serde(default = "default_slot_minutes")]
    pub slot_minutes: u32,
    pub devices: PathBuf,
    pub prices: PathBuf,
    /// Needed only when a turbine or panel is configured.
    #[serde(default)]
    pub weather: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub price_bounds: PriceBounds,
    #[serde(default)]
    pub turbine: Option<TurbineSection>,
    #[serde(default)]
    pub panel: Option<PanelSection>,
    #[serde(default)]
    pub prosumers: ProsumerSection,
    #[serde(default)]
    pub battery: Option<BatterySection>,
}

fn default_slot_minutes() -> u32 {
    15
}

/// Target range (per kWh) for the min-max rescaled grid price.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriceBounds {
    pub low: f64,
    pub high: f64,
}

impl Default for PriceBounds {
    fn default() -> Self {
        PriceBounds {
            low: 0.40,
            high: 0.60,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TurbineSection {
    pub swept_area_m2: f64,
    pub power_coefficient: f64,
    pub cut_in_ms: f64,
    pub cut_out_ms: f64,
    pub unit_cost: f64,
}

impl Default for TurbineSection {
    fn default() -> Self {
        let t = TurbineSpec::windspot();
        TurbineSection {
            swept_area_m2: t.swept_area_m2,
            power_coefficient: t.power_coefficient,
            cut_in_ms: t.cut_in_ms,
            cut_out_ms: t.cut_out_ms,
            unit_cost: t.unit_cost.as_f64(),
        }
    }
}

impl TurbineSection {
    pub fn to_spec(&self) -> TurbineSpec {
        TurbineSpec {
            swept_area_m2: self.swept_area_m2,
            power_coefficient: self.power_coefficient,
            cut_in_ms: self.cut_in_ms,
            cut_out_ms: self.cut_out_ms,
            unit_cost: Price::per_kwh(self.unit_cost),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PanelSection {
    pub area_m2: f64,
    pub efficiency: f64,
    pub unit_cost: f64,
}

impl Default for PanelSection {
    fn default() -> Self {
        let p = PanelSpec::hitech_array();
        PanelSection {
            area_m2: p.area_m2,
            efficiency: p.efficiency,
            unit_cost: p.unit_cost.as_f64(),
        }
    }
}

impl PanelSection {
    pub fn to_spec(&self) -> PanelSpec {
        PanelSpec {
            area_m2: self.area_m2,
            efficiency: self.efficiency,
            unit_cost: Price::per_kwh(self.unit_cost),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProsumerSection {
    pub count: usize,
    pub cost_mean_divisor: f64,
    pub cost_sigma: f64,
    pub energy_min_kwh: f64,
    pub energy_max_kwh: f64,
}

impl Default for ProsumerSection {
    fn default() -> Self {
        let m = ProsumerModel::default();
        ProsumerSection {
            count: m.count,
            cost_mean_divisor: m.cost_mean_divisor,
            cost_sigma: m.cost_sigma,
            energy_min_kwh: m.energy_min_kwh,
            energy_max_kwh: m.energy_max_kwh,
        }
    }
}

impl ProsumerSection {
    pub fn to_model(&self, seed: u64) -> ProsumerModel {
        ProsumerModel {
            count: self.count,
            cost_mean_divisor: self.cost_mean_divisor,
            cost_sigma: self.cost_sigma,
            energy_min_kwh: self.energy_min_kwh,
            energy_max_kwh: self.energy_max_kwh,
            rng_seed: seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatterySection {
    pub capacity_kwh: f64,
    #[serde(default)]
    pub min_charge_kwh: f64,
    pub charge_rate_w: f64,
    pub discharge_rate_w: f64,
    #[serde(default = "one")]
    pub efficiency: f64,
    #[serde(default)]
    pub initial_charge_kwh: f64,
    #[serde(default = "yes")]
    pub enforce_end_equals_start: bool,
    /// `divide-both` (default) or `physical`.
    #[serde(default)]
    pub efficiency_mode: EfficiencyModeName,
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EfficiencyModeName {
    #[default]
    DivideBoth,
    Physical,
}

impl BatterySection {
    pub fn to_spec(&self) -> BatterySpec {
        BatterySpec {
            capacity_max: Energy::from_kwh(self.capacity_kwh),
            capacity_min: Energy::from_kwh(self.min_charge_kwh),
            charge_rate_w: self.charge_rate_w,
            discharge_rate_w: self.discharge_rate_w,
            efficiency: self.efficiency,
            initial_charge: Energy::from_kwh(self.initial_charge_kwh),
            enforce_end_equals_start: self.enforce_end_equals_start,
            efficiency_mode: match self.efficiency_mode {
                EfficiencyModeName::DivideBoth => EfficiencyMode::DivideBoth,
                EfficiencyModeName::Physical => EfficiencyMode::Physical,
            },
        }
    }
}

/// A scenario with every input resolved, ready to solve.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub dir: PathBuf,
    pub seed: u64,
    pub problem: ScheduleProblem,
    /// One sample per slot; placeholder calm weather when no file is given.
    pub weather: Vec<WeatherSample>,
    pub grid_prices: Vec<Price>,
    pub turbine: Option<TurbineSpec>,
    pub panel: Option<PanelSpec>,
}

impl Scenario {
    pub fn id(&self) -> &str {
        &self.file.id
    }

    pub fn start(&self) -> DateTime<Utc> {
        self.file.start
    }

    pub fn slot_start(&self, slot: usize) -> DateTime<Utc> {
        slot_start(self.file.start, self.problem.grid.slot_seconds, slot)
    }
}

pub(crate) fn slot_start(start: DateTime<Utc>, slot_seconds: u32, slot: usize) -> DateTime<Utc> {
    start + Duration::seconds(i64::from(slot_seconds) * slot as i64)
}

fn placeholder_weather(at: DateTime<Utc>) -> WeatherSample {
    WeatherSample {
        timestamp: at.to_rfc3339(),
        temperature_c: 15.0,
        dew_point_c: -60.0,
        pressure_hpa: 1013.25,
        wind_speed_ms: 0.0,
        dni_wm2: 0.0,
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario, IngestError> {
    load_scenario_seeded(path, None)
}

/// Like [`load_scenario`], with `seed` replacing the file's prosumer seed.
pub fn load_scenario_seeded(path: &Path, seed: Option<u64>) -> Result<Scenario, IngestError> {
    let text = read_to_string(path)?;
    let file: ScenarioFile = toml::from_str(&text).map_err(|e| {
        let line = e
            .span()
            .map(|s| text[..s.start].matches('\n').count() as u64 + 1);
        IngestError::parse(path, line, e.message())
    })?;
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    assemble(file, dir, seed, path)
}

fn assemble(
    file: ScenarioFile,
    dir: PathBuf,
    seed: Option<u64>,
    path: &Path,
) -> Result<Scenario, IngestError> {
    if file.horizon_slots == 0 {
        return Err(IngestError::content(path, "horizon_slots must be positive"));
    }
    if file.slot_minutes == 0 {
        return Err(IngestError::content(path, "slot_minutes must be positive"));
    }
    let seed = seed.unwrap_or(file.seed);
    let h = file.horizon_slots;
    let slot_seconds = file.slot_minutes * 60;
    let grid = TimeGrid::new(h, slot_seconds).with_start(file.start.to_rfc3339());

    let devices_path = dir.join(&file.devices);
    let devices = load_devices(&devices_path)?
        .into_iter()
        .map(|r| r.into_spec())
        .collect();

    let prices_path = dir.join(&file.prices);
    let rows = load_prices(&prices_path)?;
    let raw = hourly_to_slots(&rows, file.start, h, slot_seconds, &prices_path)?;
    let grid_prices = normalize_grid_prices(&raw, file.price_bounds.low, file.price_bounds.high)
        .map_err(|e| IngestError::content(path, format!("price_bounds: {e}")))?;

    let turbine = file.turbine.as_ref().map(TurbineSection::to_spec);
    let panel = file.panel.as_ref().map(PanelSection::to_spec);
    let weather = match &file.weather {
        Some(rel) => {
            let weather_path = dir.join(rel);
            let by_time: HashMap<_, _> = load_weather(&weather_path)?.into_iter().collect();
            (0..h)
                .map(|t| {
                    let at = slot_start(file.start, slot_seconds, t);
                    by_time.get(&at).cloned().ok_or_else(|| {
                        IngestError::content(
                            &weather_path,
                            format!("no weather record for slot {t} ({})", at.to_rfc3339()),
                        )
                    })
                })
                .collect::<Result<Vec<_>, _>>()?
        }
        None if turbine.is_some() || panel.is_some() => {
            return Err(IngestError::content(
                path,
                "a weather file is required when a turbine or panel is configured",
            ));
        }
        None => (0..h)
            .map(|t| placeholder_weather(slot_start(file.start, slot_seconds, t)))
            .collect(),
    };

    let model = file.prosumers.to_model(seed);
    let sources = build_sources(&grid, &weather, turbine.as_ref(), panel.as_ref(), &model, &grid_prices)
        .map_err(|e| IngestError::content(path, e.to_string()))?;

    let problem = ScheduleProblem {
        grid,
        devices,
        sources,
        battery: file.battery.as_ref().map(BatterySection::to_spec),
    };
    let report = validate_problem(&problem);
    if !report.is_ok() {
        return Err(IngestError::content(path, report.to_string()));
    }
    Ok(Scenario {
        file,
        dir,
        seed,
        problem,
        weather,
        grid_prices,
        turbine,
        panel,
    })
}
