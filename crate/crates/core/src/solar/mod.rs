//! Charging-profile design for solar-powered UAVs.
//!
//! The day is split in two nested problems. A mapping table records, per
//! hour, how many users `k` well placed UAVs can serve. A DDPG scheduler then
//! picks a serve / charge / idle status for every UAV each hour; its
//! continuous scores are turned into a feasible assignment by
//! [`relax_and_repair`].

mod mapping;
mod sched;

pub use mapping::{baseline_min_uavs, build_mapping, grid_search_best, oracle_placement, MappingBackend, MappingTable};
pub use sched::{
    enumerate_optimal, evaluate_profile, relax_and_repair, run_policy, scheduler_reward, train_scheduler,
    ChargeProfile, HourOutcome, Repair, RepairRules, SchedStatus, SchedulerEnv, SchedulerOutcome, SchedulerSpec, Violation,
    ViolationKind, ENUMERATION_LIMIT,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchedulerConfig {
    /// Hours per scheduling episode.
    pub hours: usize,
    /// Hour of day of the first scheduling hour.
    pub start_hour: usize,
    /// Fraction of `users.total` active in each hour of the day (24 values).
    pub demand_profile: Vec<f64>,
    /// Minimum fraction of demand that must be served each hour.
    pub p_min: f64,
    /// Weight of residual energy against served users.
    pub coeff: f64,
    pub theta_charge: f64,
    pub theta_serve: f64,
    pub violation_penalty: f64,
    pub initial_status: SchedStatus,
    /// Half-width of the uniform perturbation of initial batteries at each
    /// reset, as a fraction of `B_max`.
    pub battery_jitter: f64,
    pub mapping_backend: MappingBackend,
    pub mapping_restarts: usize,
    pub mapping_seed: u64,
    /// Training episodes and slots per cell for the learned mapping backend.
    pub mapping_episodes: usize,
    pub mapping_slots: usize,
}

/// Double-hump day: peaks at 09:00 and 20:00, trough at 03:00.
pub fn default_demand_profile() -> Vec<f64> {
    let anchors = [(3.0, 0.1), (9.0, 1.0), (14.0, 0.6), (20.0, 1.0), (27.0, 0.1)];
    (0..24)
        .map(|h| {
            let t = if (h as f64) < 3.0 { h as f64 + 24.0 } else { h as f64 };
            let i = anchors.windows(2).position(|w| t >= w[0].0 && t <= w[1].0).expect("anchors span the day");
            let ((t0, v0), (t1, v1)) = (anchors[i], anchors[i + 1]);
            v0 + (v1 - v0) * (t - t0) / (t1 - t0)
        })
        .collect()
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        SchedulerConfig {
            hours: 24,
            start_hour: 0,
            demand_profile: default_demand_profile(),
            p_min: 0.6,
            coeff: 0.5,
            theta_charge: 0.5,
            theta_serve: 0.8,
            violation_penalty: 1.0,
            initial_status: SchedStatus::Idle,
            battery_jitter: 0.0,
            mapping_backend: MappingBackend::Oracle,
            mapping_restarts: 10,
            mapping_seed: 0,
            mapping_episodes: 100,
            mapping_slots: 20,
        }
    }
}

impl SchedulerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::config(m.to_string()));
        if self.hours == 0 || self.start_hour >= 24 {
            return bad("scheduler.hours must be positive and scheduler.start_hour below 24");
        }
        if self.demand_profile.len() != 24 || self.demand_profile.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return bad("scheduler.demand_profile must hold 24 values in [0, 1]");
        }
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !unit(self.p_min) || !unit(self.coeff) || !unit(self.theta_charge) || !unit(self.theta_serve) {
            return bad("scheduler.p_min, coeff, theta_charge and theta_serve must lie in [0, 1]");
        }
        if self.theta_serve < self.theta_charge {
            return bad("scheduler.theta_serve must not be below theta_charge");
        }
        if self.violation_penalty < 0.0 || !(0.0..=1.0).contains(&self.battery_jitter) {
            return bad("scheduler.violation_penalty must be non-negative and battery_jitter in [0, 1]");
        }
        if self.mapping_restarts == 0 || self.mapping_slots == 0 {
            return bad("scheduler.mapping_restarts and mapping_slots must be positive");
        }
        Ok(())
    }

    /// Hour of day of scheduling hour `h`.
    pub fn hour_of_day(&self, h: usize) -> usize {
        (self.start_hour + h) % 24
    }

    /// Users demanding service in each scheduling hour.
    pub fn demand(&self, total_users: usize) -> Vec<usize> {
        (0..self.hours)
            .map(|h| (total_users as f64 * self.demand_profile[self.hour_of_day(h)]).round() as usize)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demand_shape() {
        let p = default_demand_profile();
        assert_eq!(p.len(), 24);
        assert_eq!(p[9], 1.0);
        assert_eq!(p[20], 1.0);
        assert_eq!(p[3], 0.1);
        let argmin = (0..24).min_by(|&a, &b| p[a].total_cmp(&p[b])).unwrap();
        assert_eq!(argmin, 3);
        assert!(p[14] < p[9] && p[14] < p[20]);
    }

    #[test]
    fn demand_counts_follow_start_hour() {
        let c = SchedulerConfig {
            hours: 3,
            start_hour: 8,
            ..Default::default()
        };
        let d = c.demand(100);
        assert_eq!(d[1], 100);
        assert_eq!(c.hour_of_day(20), 4);
    }
}
