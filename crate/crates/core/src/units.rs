//! Integer quantities for energy, unit prices and money.
//!
//! Energy is counted in milliwatt-hours (10⁻⁶ kWh), prices in micro-units per
//! kWh and costs in micro-units. The product of an [`Energy`] and a [`Price`]
//! is exact in 10⁻¹² units; it is rounded to micro-units once per slot.

use core::fmt;
use core::iter::Sum;
use core::ops::{Add, AddAssign, Sub, SubAssign};

const MICRO: i64 = 1_000_000;

/// Energy in milliwatt-hours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Energy(pub i64);

impl Energy {
    pub const ZERO: Energy = Energy(0);

    /// Rounds a kWh amount to the nearest milliwatt-hour.
    pub fn from_kwh(kwh: f64) -> Self {
        Energy(libm::round(kwh * MICRO as f64) as i64)
    }

    /// Energy drawn by a constant `watts` load over `seconds`.
    pub fn from_power(watts: f64, seconds: u32) -> Self {
        // W·s / 3600 = Wh, × 1000 = mWh
        Energy(libm::round(watts * f64::from(seconds) / 3.6) as i64)
    }

    pub fn kwh(self) -> f64 {
        self.0 as f64 / MICRO as f64
    }

    pub fn milliwatt_hours(self) -> i64 {
        self.0
    }

    pub fn saturating_sub_floor_zero(self, other: Energy) -> Energy {
        Energy((self.0 - other.0).max(0))
    }
}

impl Add for Energy {
    type Output = Energy;
    fn add(self, rhs: Energy) -> Energy {
        Energy(self.0 + rhs.0)
    }
}

impl Sub for Energy {
    type Output = Energy;
    fn sub(self, rhs: Energy) -> Energy {
        Energy(self.0 - rhs.0)
    }
}

impl AddAssign for Energy {
    fn add_assign(&mut self, rhs: Energy) {
        self.0 += rhs.0;
    }
}

impl SubAssign for Energy {
    fn sub_assign(&mut self, rhs: Energy) {
        self.0 -= rhs.0;
    }
}

impl Sum for Energy {
    fn sum<I: Iterator<Item = Energy>>(iter: I) -> Energy {
        Energy(iter.map(|e| e.0).sum())
    }
}

impl fmt::Display for Energy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_micro(f, self.0)?;
        f.write_str(" kWh")
    }
}

/// Unit price in micro-units per kWh. The currency is opaque: euros and
/// grams of CO₂-equivalent work the same way.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Price(pub i64);

impl Price {
    pub fn per_kwh(units: f64) -> Self {
        Price(libm::round(units * MICRO as f64) as i64)
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / MICRO as f64
    }

    /// Exact cost of `energy` at this price, in 10⁻¹² units.
    pub fn pico_cost(self, energy: Energy) -> i128 {
        i128::from(self.0) * i128::from(energy.0)
    }
}

impl fmt::Display for Price {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_micro(f, self.0)?;
        f.write_str("/kWh")
    }
}

/// Money in micro-units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Cost(pub i64);

impl Cost {
    pub const ZERO: Cost = Cost(0);

    /// Rounds a 10⁻¹² amount to micro-units, half away from zero.
    pub fn from_pico(pico: i128) -> Self {
        let half = 500_000i128;
        let q = if pico >= 0 {
            (pico + half) / 1_000_000
        } else {
            (pico - half) / 1_000_000
        };
        Cost(q as i64)
    }

    pub fn micros(self) -> i64 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / MICRO as f64
    }
}

impl Add for Cost {
    type Output = Cost;
    fn add(self, rhs: Cost) -> Cost {
        Cost(self.0 + rhs.0)
    }
}

impl Sub for Cost {
    type Output = Cost;
    fn sub(self, rhs: Cost) -> Cost {
        Cost(self.0 - rhs.0)
    }
}

impl AddAssign for Cost {
    fn add_assign(&mut self, rhs: Cost) {
        self.0 += rhs.0;
    }
}

impl Sum for Cost {
    fn sum<I: Iterator<Item = Cost>>(iter: I) -> Cost {
        Cost(iter.map(|c| c.0).sum())
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_micro(f, self.0)
    }
}

fn write_micro(f: &mut fmt::Formatter<'_>, v: i64) -> fmt::Result {
    let sign = if v < 0 { "-" } else { "" };
    let a = v.unsigned_abs();
    write!(f, "{sign}{}.{:06}", a / MICRO as u64, a % MICRO as u64)
}
