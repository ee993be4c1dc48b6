//! Cost-optimal day-ahead scheduling of building devices.
//!
//! The crate is `no_std` (it needs `alloc`) and holds everything that does not
//! touch threads, clocks or files:
//!
//! * [`domain`]: time grid, devices, energy sources, battery and schedules.
//! * [`energy`]: wind, air density, PV and prosumer models that produce the
//!   per-slot source lists.
//! * [`policies`]: the eight device policies as complete-column predicates and
//!   as incremental prefix trackers used for pruning.
//! * [`dispatch`]: merit-order allocation of a slot's demand over its sources.
//! * [`search`]: brute-force oracle and sequential uniform-cost search (plain
//!   and memory-optimized).
//! * [`profile`]: one-dimensional k-means used to derive device power states.
//! * [`instances`]: seeded random problems for cross-checks and benchmarks.
//!
//! All money and energy arithmetic runs on the integer types in [`units`], so
//! search ordering and cost equality are exact.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod dispatch;
pub mod domain;
pub mod energy;
pub mod instances;
pub mod policies;
pub mod profile;
pub mod search;
pub mod units;

pub use domain::{
    BatteryAction, BatterySpec, DeviceSpec, DeviceState, EfficiencyMode, EnergySource,
    ScheduleProblem, Schedule, SourceKind, Supply, TimeGrid,
};
pub use policies::{Policy, PolicyRule};
pub use units::{Cost, Energy, Price};
