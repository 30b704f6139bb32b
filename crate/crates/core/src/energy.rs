//! Battery dynamics, solar radiation under cloud attenuation, and the
//! sustainability rule (enough charge left to climb to the charging layer).
//!
//! Rates in [`EnergyModel`] are expressed per slot. The defaults describe an
//! hour-long slot; [`EnergyModel::per_slot`] rescales them for shorter slots.

use std::f64::consts::{LN_10, PI};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::world::{Uav, UavStatus};

/// Attenuation constant for which intensity drops to a tenth 300 m below the
/// cloud top.
pub const DEFAULT_ATTENUATION: f64 = LN_10 / 300.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergyModel {
    /// Battery capacity, Wh.
    pub b_max: f64,
    /// Hovering, Wh per slot.
    pub hover_cost: f64,
    /// Horizontal flight, Wh per meter.
    pub move_cost: f64,
    /// Transmission while serving, Wh per slot.
    pub serve_cost: f64,
    /// Idling on the ground, Wh per slot.
    pub idle_cost: f64,
    /// Ascent, Wh per meter climbed.
    pub climb_cost: f64,
    /// Harvest at unit normalized intensity, Wh per slot.
    pub pv_rate: f64,
    pub cloud_top: f64,
    /// 1/m.
    pub attenuation_k: f64,
    /// Sustainability margin as a fraction of `b_max`.
    pub reserve_fraction: f64,
    /// Optional 24-entry above-cloud intensity table, one value per hour.
    /// When absent the clear-day half-sine from 06:00 to 18:00 is used.
    pub day_profile: Option<Vec<f64>>,
}

impl Default for EnergyModel {
    fn default() -> Self {
        EnergyModel {
            b_max: 500.0,
            hover_cost: 4.0,
            move_cost: 0.01,
            serve_cost: 2.0,
            idle_cost: 0.5,
            climb_cost: 0.1,
            pv_rate: 60.0,
            cloud_top: 2000.0,
            attenuation_k: DEFAULT_ATTENUATION,
            reserve_fraction: 0.02,
            day_profile: None,
        }
    }
}

impl EnergyModel {
    pub fn validate(&self) -> Result<()> {
        let costs = [
            ("hover_cost", self.hover_cost),
            ("move_cost", self.move_cost),
            ("serve_cost", self.serve_cost),
            ("idle_cost", self.idle_cost),
            ("climb_cost", self.climb_cost),
            ("pv_rate", self.pv_rate),
            ("reserve_fraction", self.reserve_fraction),
        ];
        for (name, v) in costs {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(format!("energy.{name} must be >= 0, got {v}")));
            }
        }
        if !(self.b_max > 0.0) {
            return Err(Error::config("energy.b_max must be positive"));
        }
        if !(self.attenuation_k > 0.0) {
            return Err(Error::config("energy.attenuation_k must be positive"));
        }
        if let Some(table) = &self.day_profile {
            if table.len() != 24 || table.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::config(
                    "energy.day_profile must hold 24 values in [0, 1]",
                ));
            }
        }
        Ok(())
    }

    /// Rescales per-slot rates for slots lasting `slot_hours` hours.
    pub fn per_slot(&self, slot_hours: f64) -> EnergyModel {
        EnergyModel {
            hover_cost: self.hover_cost * slot_hours,
            serve_cost: self.serve_cost * slot_hours,
            idle_cost: self.idle_cost * slot_hours,
            pv_rate: self.pv_rate * slot_hours,
            ..self.clone()
        }
    }

    pub fn reserve(&self) -> f64 {
        self.reserve_fraction * self.b_max
    }

    /// Above-cloud normalized intensity at a time of day, in hours.
    pub fn above_cloud(&self, hour: f64) -> f64 {
        let t = hour.rem_euclid(24.0);
        match &self.day_profile {
            Some(table) => table[(t.floor() as usize).min(23)],
            None => (PI * (t - 6.0) / 12.0).sin().max(0.0),
        }
    }

    /// Hourly intensity table as `hour,intensity` CSV.
    pub fn intensity_csv(&self) -> String {
        let mut out = String::from("hour,intensity\n");
        for h in 0..24 {
            let _ = writeln!(out, "{h},{}", self.above_cloud(h as f64));
        }
        out
    }
}

pub fn solar_intensity(hour: f64, depth_below_cloud_top: f64, model: &EnergyModel) -> f64 {
    let depth = depth_below_cloud_top.max(0.0);
    model.above_cloud(hour) * (-model.attenuation_k * depth).exp()
}

/// Battery level after one slot in the UAV's current status.
///
/// Charging UAVs sit at the cloud top, so they harvest the unattenuated
/// intensity.
pub fn step_battery(uav: &Uav, moved: f64, model: &EnergyModel, hour: f64) -> f64 {
    let b = uav.battery;
    let next = match uav.status {
        UavStatus::Serving => b - model.hover_cost - model.serve_cost - model.move_cost * moved,
        UavStatus::Idle => b - model.idle_cost,
        UavStatus::Charging => (b + model.pv_rate * solar_intensity(hour, 0.0, model)).min(model.b_max),
        UavStatus::Away => b,
    };
    next.clamp(0.0, model.b_max)
}

/// Energy needed to climb from `altitude` to the cloud top.
pub fn energy_to_charge(altitude: f64, model: &EnergyModel) -> f64 {
    model.climb_cost * (model.cloud_top - altitude).max(0.0)
}

pub fn is_sustainable(uav: &Uav, model: &EnergyModel) -> bool {
    uav.battery >= energy_to_charge(uav.position.z, model) + model.reserve()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::Position;
    use proptest::prelude::*;

    fn uav(status: UavStatus, battery: f64, z: f64) -> Uav {
        Uav {
            id: 0,
            position: Position { x: 0.0, y: 0.0, z },
            battery,
            status,
            join_countdown: 0,
        }
    }

    #[test]
    fn no_attenuation_at_cloud_top() {
        let m = EnergyModel::default();
        assert_eq!(solar_intensity(12.0, 0.0, &m), m.above_cloud(12.0));
        assert!((m.above_cloud(12.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn three_hundred_meters_leaves_a_tenth() {
        let m = EnergyModel::default();
        assert!((DEFAULT_ATTENUATION - 0.0076753).abs() < 1e-7);
        for hour in [8.0, 12.0, 15.5] {
            let ratio = solar_intensity(hour, 300.0, &m) / solar_intensity(hour, 0.0, &m);
            assert!((ratio - 0.1).abs() < 1e-9);
        }
    }

    #[test]
    fn night_is_dark_at_any_depth() {
        let m = EnergyModel::default();
        for depth in [0.0, 50.0, 1000.0] {
            assert_eq!(solar_intensity(2.0, depth, &m), 0.0);
            assert_eq!(solar_intensity(21.0, depth, &m), 0.0);
        }
    }

    #[test]
    fn table_profile_overrides_half_sine() {
        let mut table = vec![0.0; 24];
        table[10] = 0.25;
        let m = EnergyModel {
            day_profile: Some(table),
            ..Default::default()
        };
        assert_eq!(m.above_cloud(10.7), 0.25);
        assert_eq!(m.above_cloud(12.0), 0.0);
        assert!(m.validate().is_ok());
    }

    #[test]
    fn battery_steps() {
        let m = EnergyModel {
            hover_cost: 1.0,
            serve_cost: 0.5,
            pv_rate: 6.0,
            ..Default::default()
        };
        assert_eq!(step_battery(&uav(UavStatus::Charging, 500.0, 2000.0), 0.0, &m, 12.0), 500.0);
        assert_eq!(step_battery(&uav(UavStatus::Serving, 100.0, 100.0), 0.0, &m, 12.0), 98.5);
        assert_eq!(step_battery(&uav(UavStatus::Charging, 100.0, 2000.0), 0.0, &m, 12.0), 106.0);
        assert_eq!(step_battery(&uav(UavStatus::Charging, 497.0, 2000.0), 0.0, &m, 12.0), 500.0);
        assert_eq!(step_battery(&uav(UavStatus::Idle, 100.0, 0.0), 0.0, &m, 12.0), 99.5);
        assert_eq!(step_battery(&uav(UavStatus::Away, 42.0, 100.0), 30.0, &m, 12.0), 42.0);
        assert_eq!(step_battery(&uav(UavStatus::Serving, 1.0, 100.0), 0.0, &m, 12.0), 0.0);
    }

    #[test]
    fn moving_costs_energy() {
        let m = EnergyModel::default();
        let u = uav(UavStatus::Serving, 100.0, 100.0);
        assert!(step_battery(&u, 30.0, &m, 0.0) < step_battery(&u, 0.0, &m, 0.0));
    }

    #[test]
    fn climb_energy() {
        let m = EnergyModel {
            climb_cost: 0.2,
            cloud_top: 2000.0,
            ..Default::default()
        };
        assert_eq!(energy_to_charge(2000.0, &m), 0.0);
        assert_eq!(energy_to_charge(2500.0, &m), 0.0);
        assert!((energy_to_charge(0.0, &m) - 400.0).abs() < 1e-9);
        let m = EnergyModel {
            climb_cost: 0.1,
            cloud_top: 2100.0,
            ..Default::default()
        };
        assert!((energy_to_charge(100.0, &m) - 200.0).abs() < 1e-9);
    }

    #[test]
    fn sustainability_boundaries() {
        let m = EnergyModel {
            climb_cost: 0.1,
            cloud_top: 2100.0,
            reserve_fraction: 0.0,
            ..Default::default()
        };
        assert!(is_sustainable(&uav(UavStatus::Serving, 200.0, 100.0), &m));
        assert!(!is_sustainable(&uav(UavStatus::Serving, 0.0, 100.0), &m));
        let m = EnergyModel {
            climb_cost: 0.1,
            cloud_top: 4100.0,
            reserve_fraction: 0.1,
            ..Default::default()
        };
        // climb 400, reserve 50
        assert!(is_sustainable(&uav(UavStatus::Serving, 500.0, 100.0), &m));
        assert!(!is_sustainable(&uav(UavStatus::Serving, 449.0, 100.0), &m));
    }

    #[test]
    fn per_slot_scales_rates_only() {
        let m = EnergyModel::default().per_slot(10.0 / 3600.0);
        assert!((m.hover_cost - 4.0 / 360.0).abs() < 1e-12);
        assert_eq!(m.move_cost, 0.01);
        assert_eq!(m.climb_cost, 0.1);
        assert_eq!(m.b_max, 500.0);
    }

    #[test]
    fn intensity_csv_has_header_and_24_rows() {
        let csv = EnergyModel::default().intensity_csv();
        assert_eq!(csv.lines().count(), 25);
        assert!(csv.starts_with("hour,intensity\n0,0\n"));
    }

    proptest! {
        #[test]
        fn intensity_decreases_with_depth(hour in 6.5..17.5f64, d1 in 0.0..3000.0f64, d2 in 0.0..3000.0f64) {
            let m = EnergyModel::default();
            let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
            prop_assert!(solar_intensity(hour, lo, &m) >= solar_intensity(hour, hi, &m));
            let i = solar_intensity(hour, lo, &m);
            prop_assert!((0.0..=1.0).contains(&i));
        }

        #[test]
        fn battery_stays_in_range(b in 0.0..500.0f64, moved in 0.0..100.0f64, hour in 0.0..24.0f64, s in 0usize..4) {
            let m = EnergyModel::default();
            let status = [UavStatus::Serving, UavStatus::Away, UavStatus::Charging, UavStatus::Idle][s];
            let u = uav(status, b, 100.0);
            let next = step_battery(&u, moved, &m, hour);
            prop_assert!((0.0..=m.b_max).contains(&next));
            match status {
                UavStatus::Charging => prop_assert!(next >= b),
                UavStatus::Serving | UavStatus::Idle => prop_assert!(next <= b),
                UavStatus::Away => prop_assert_eq!(next, b),
            }
        }
    }
}
