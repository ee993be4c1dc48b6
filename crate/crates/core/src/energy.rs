//! Generation models that turn weather and market data into per-slot
//! [`EnergySource`] lists.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};

use crate::domain::{EnergySource, SourceKind, TimeGrid};
use crate::units::{Energy, Price};

/// Specific gas constant of dry air, J/(kg·K).
pub const R_DRY_AIR: f64 = 287.058;
/// Specific gas constant of water vapour, J/(kg·K).
pub const R_WATER_VAPOUR: f64 = 461.495;
/// Upper bound on the power coefficient of any rotor.
pub const BETZ_LIMIT: f64 = 0.59;

const WOBUS_E_SO: f64 = 6.1078;
const WOBUS: [f64; 10] = [
    0.999_996_83,
    -9.082_695_1e-3,
    7.873_616_9e-5,
    -6.111_795_8e-7,
    4.388_418_7e-9,
    -2.988_388_5e-11,
    2.187_442_5e-13,
    -1.789_232_1e-15,
    1.111_201_8e-17,
    -3.099_457_1e-20,
];
const WOBUS_MIN_C: f64 = -50.0;
const WOBUS_MAX_C: f64 = 60.0;

#[derive(Debug, Clone, PartialEq)]
pub struct WeatherSample {
    pub timestamp: String,
    pub temperature_c: f64,
    pub dew_point_c: f64,
    pub pressure_hpa: f64,
    pub wind_speed_ms: f64,
    pub dni_wm2: f64,
}

impl WeatherSample {
    pub fn temperature_k(&self) -> f64 {
        self.temperature_c + 273.15
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TurbineSpec {
    pub swept_area_m2: f64,
    pub power_coefficient: f64,
    pub cut_in_ms: f64,
    pub cut_out_ms: f64,
    pub unit_cost: Price,
}

impl TurbineSpec {
    /// Windspot 3.5 kW small turbine as used in the bundled scenarios.
    pub fn windspot() -> Self {
        TurbineSpec {
            swept_area_m2: 12.88,
            power_coefficient: 0.11,
            cut_in_ms: 3.0,
            cut_out_ms: 60.0,
            unit_cost: Price::per_kwh(0.08),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PanelSpec {
    /// Total array area.
    pub area_m2: f64,
    pub efficiency: f64,
    pub unit_cost: Price,
}

impl PanelSpec {
    /// Six HiTech 1.65 m² panels at 15.3 %.
    pub fn hitech_array() -> Self {
        PanelSpec {
            area_m2: 9.9,
            efficiency: 0.153,
            unit_cost: Price::per_kwh(0.06),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProsumerModel {
    pub count: usize,
    /// Mean offer price is the grid price divided by this.
    pub cost_mean_divisor: f64,
    pub cost_sigma: f64,
    pub energy_min_kwh: f64,
    pub energy_max_kwh: f64,
    pub rng_seed: u64,
}

impl Default for ProsumerModel {
    fn default() -> Self {
        ProsumerModel {
            count: 10,
            cost_mean_divisor: 1.5,
            cost_sigma: 0.025,
            energy_min_kwh: 0.0,
            energy_max_kwh: 1.0,
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EnergyError {
    #[error("dew point {0} °C outside the polynomial's range [-50, 60]")]
    DewPointOutOfRange(f64),
    #[error("vapour pressure {vapour} hPa exceeds total pressure {total} hPa")]
    VapourExceedsPressure { vapour: f64, total: f64 },
    #[error("temperature must be positive, got {0} K")]
    NonPositiveTemperature(f64),
    #[error("{what}: expected {expected} entries, got {actual}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Saturation vapour pressure in hPa at dew point `dew_point_c`, from the
/// Wobus polynomial.
pub fn saturation_vapour_pressure(dew_point_c: f64) -> Result<f64, EnergyError> {
    if !(WOBUS_MIN_C..=WOBUS_MAX_C).contains(&dew_point_c) {
        return Err(EnergyError::DewPointOutOfRange(dew_point_c));
    }
    let c = WOBUS
        .iter()
        .rev()
        .fold(0.0, |acc, coeff| acc * dew_point_c + coeff);
    Ok(WOBUS_E_SO / libm::pow(c, 8.0))
}

/// Density of moist air in kg/m³.
///
/// A dew point below the polynomial's range is treated as dry air.
pub fn air_density(pressure_hpa: f64, temperature_k: f64, dew_point_c: f64) -> Result<f64, EnergyError> {
    if temperature_k.is_nan() || temperature_k <= 0.0 {
        return Err(EnergyError::NonPositiveTemperature(temperature_k));
    }
    let p_s = if dew_point_c < WOBUS_MIN_C {
        0.0
    } else {
        saturation_vapour_pressure(dew_point_c)?
    };
    if p_s > pressure_hpa {
        return Err(EnergyError::VapourExceedsPressure {
            vapour: p_s,
            total: pressure_hpa,
        });
    }
    let p_d = pressure_hpa - p_s;
    Ok(100.0 * p_d / (R_DRY_AIR * temperature_k) + 100.0 * p_s / (R_WATER_VAPOUR * temperature_k))
}

/// Turbine output in watts; zero outside the cut-in/cut-out band.
pub fn wind_power(turbine: &TurbineSpec, rho: f64, wind_speed_ms: f64) -> f64 {
    let v = wind_speed_ms;
    if v < turbine.cut_in_ms || v > turbine.cut_out_ms {
        return 0.0;
    }
    0.5 * rho * turbine.power_coefficient * turbine.swept_area_m2 * v * v * v
}

/// Array output in watts with linear temperature derating, never negative.
pub fn pv_power(panel: &PanelSpec, dni_wm2: f64, temperature_c: f64) -> f64 {
    let p = panel.efficiency * panel.area_m2 * dni_wm2 * (1.0 - 0.005 * (temperature_c - 25.0));
    p.max(0.0)
}

/// Offers below this are dropped.
const MIN_OFFER: Energy = Energy(1);

/// Samples `count` prosumer offers per slot: price from a normal around
/// `grid_price / divisor` clamped at zero, energy uniform in
/// `[energy_min, energy_max]` kWh.
pub fn generate_prosumers(
    model: &ProsumerModel,
    grid_prices: &[Price],
) -> Result<Vec<Vec<EnergySource>>, EnergyError> {
    if !(model.cost_sigma >= 0.0 && model.cost_sigma.is_finite()) {
        return Err(EnergyError::InvalidParameter(format!(
            "cost sigma {}",
            model.cost_sigma
        )));
    }
    if !(model.energy_min_kwh >= 0.0 && model.energy_min_kwh <= model.energy_max_kwh) {
        return Err(EnergyError::InvalidParameter(format!(
            "energy range [{}, {}]",
            model.energy_min_kwh, model.energy_max_kwh
        )));
    }
    if model.cost_mean_divisor.is_nan() || model.cost_mean_divisor <= 0.0 {
        return Err(EnergyError::InvalidParameter(format!(
            "cost mean divisor {}",
            model.cost_mean_divisor
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(model.rng_seed);
    let energy = Uniform::new_inclusive(model.energy_min_kwh, model.energy_max_kwh)
        .map_err(|e| EnergyError::InvalidParameter(format!("{e}")))?;
    let mut out = Vec::with_capacity(grid_prices.len());
    for grid_price in grid_prices {
        let cost = Normal::new(grid_price.as_f64() / model.cost_mean_divisor, model.cost_sigma)
            .map_err(|e| EnergyError::InvalidParameter(format!("{e}")))?;
        let mut slot = Vec::with_capacity(model.count);
        for k in 0..model.count {
            let price = cost.sample(&mut rng).max(0.0);
            let kwh = energy.sample(&mut rng);
            let e = Energy::from_kwh(kwh);
            if e < MIN_OFFER {
                continue;
            }
            slot.push(EnergySource::limited(
                format!("prosumer-{k}"),
                SourceKind::Prosumer,
                Price::per_kwh(price),
                e,
            ));
        }
        out.push(slot);
    }
    Ok(out)
}

/// Min-max rescale of a raw price series into `[low, high]` per kWh. A
/// constant series maps to the midpoint.
pub fn normalize_grid_prices(raw: &[f64], low: f64, high: f64) -> Result<Vec<Price>, EnergyError> {
    if raw.is_empty() {
        return Err(EnergyError::InvalidParameter("empty price series".into()));
    }
    if low.is_nan() || high.is_nan() || low >= high {
        return Err(EnergyError::InvalidParameter(format!(
            "price bounds [{low}, {high}]"
        )));
    }
    let min = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let max = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(raw
        .iter()
        .map(|&x| {
            let v = if max > min {
                low + (x - min) / (max - min) * (high - low)
            } else {
                (low + high) / 2.0
            };
            Price::per_kwh(v)
        })
        .collect())
}

/// Per-slot source lists: wind, PV, prosumers and one unbounded grid offer.
pub fn build_sources(
    grid: &TimeGrid,
    weather: &[WeatherSample],
    turbine: Option<&TurbineSpec>,
    panel: Option<&PanelSpec>,
    prosumers: &ProsumerModel,
    grid_prices: &[Price],
) -> Result<Vec<Vec<EnergySource>>, EnergyError> {
    let h = grid.horizon_slots;
    let check = |what, actual| {
        if actual == h {
            Ok(())
        } else {
            Err(EnergyError::LengthMismatch {
                what,
                expected: h,
                actual,
            })
        }
    };
    check("weather samples", weather.len())?;
    check("grid prices", grid_prices.len())?;
    let mut offers = generate_prosumers(prosumers, grid_prices)?;
    let mut out = Vec::with_capacity(h);
    for (t, w) in weather.iter().enumerate() {
        let mut slot = Vec::new();
        if let Some(turbine) = turbine {
            let rho = air_density(w.pressure_hpa, w.temperature_k(), w.dew_point_c)?;
            let watts = wind_power(turbine, rho, w.wind_speed_ms);
            slot.push(EnergySource::limited(
                "wind",
                SourceKind::Wind,
                turbine.unit_cost,
                Energy::from_power(watts, grid.slot_seconds),
            ));
        }
        if let Some(panel) = panel {
            let watts = pv_power(panel, w.dni_wm2, w.temperature_c);
            slot.push(EnergySource::limited(
                "pv",
                SourceKind::Pv,
                panel.unit_cost,
                Energy::from_power(watts, grid.slot_seconds),
            ));
        }
        slot.append(&mut offers[t]);
        slot.push(EnergySource::grid("grid", grid_prices[t]));
        out.push(slot);
    }
    Ok(out)
}
