//! Independent per-UAV deep Q-learners trained on two complementary
//! environment copies: a UAV that quits copy A joins copy B at the same spot,
//! so every episode exercises both quitting and joining.

mod agent;
mod dual;
mod eval;

pub use agent::{DqnAgent, DqnAgentSet};
pub use dual::{
    random_schedule, run_dual_episode, train_marl, DualCopyEpisode, DualEpisodeStats, MarlEpisodeRecord,
    MarlOutcome, QuitSchedule,
};
pub use eval::{evaluate_random_crew, random_crew_script, MarlEvalResult};

use serde::{Deserialize, Serialize};

use crate::coverage::{footprint_radius, overlap_area};
use crate::error::{Error, Result};
use crate::geom::Point;
use crate::world::WorldState;

pub const N_ACTIONS: usize = 9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MarlConfig {
    pub hidden: Vec<usize>,
    pub lr: f64,
    pub gamma: f64,
    pub tau: f64,
    pub batch: usize,
    pub buffer_capacity: usize,
    pub warmup: usize,
    /// Displacement of one compass move, meters.
    pub step: f64,
    /// Weight of the footprint-overlap penalty.
    pub overlap_penalty: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay_fraction: f64,
    /// Slots between Q updates.
    pub train_every: usize,
}

impl Default for MarlConfig {
    fn default() -> Self {
        MarlConfig {
            hidden: vec![64, 64],
            lr: 5e-4,
            gamma: 0.99,
            tau: 0.005,
            batch: 64,
            buffer_capacity: 50_000,
            warmup: 256,
            step: 25.0,
            overlap_penalty: 0.3,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_fraction: 0.5,
            train_every: 1,
        }
    }
}

impl MarlConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::config(m.to_string()));
        if self.hidden.contains(&0) {
            return bad("marl.hidden widths must be positive");
        }
        if !(self.lr > 0.0) || !(0.0..=1.0).contains(&self.gamma) || !(0.0..=1.0).contains(&self.tau) {
            return bad("marl.lr must be positive, gamma and tau in [0, 1]");
        }
        if self.batch == 0 || self.buffer_capacity < self.batch || self.train_every == 0 {
            return bad("marl.batch and marl.train_every must be positive, batch must fit the buffer");
        }
        if !(self.step > 0.0) || self.overlap_penalty < 0.0 {
            return bad("marl.step must be positive and overlap_penalty non-negative");
        }
        let eps_ok = |e: f64| (0.0..=1.0).contains(&e);
        if !eps_ok(self.epsilon_start) || !eps_ok(self.epsilon_end) || !eps_ok(self.epsilon_decay_fraction) {
            return bad("marl epsilon schedule must lie in [0, 1]");
        }
        Ok(())
    }

    pub fn epsilon(&self, episode: usize, total: usize) -> f64 {
        let span = self.epsilon_decay_fraction * total as f64;
        if span <= 0.0 {
            return self.epsilon_end;
        }
        let f = (episode as f64 / span).min(1.0);
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * f
    }
}

/// Stay, then N, NE, E, SE, S, SW, W, NW at distance `delta`.
pub fn discrete_actions(delta: f64) -> [Point; N_ACTIONS] {
    let d = delta * std::f64::consts::FRAC_1_SQRT_2;
    [
        Point::ZERO,
        Point::new(0.0, delta),
        Point::new(d, d),
        Point::new(delta, 0.0),
        Point::new(d, -d),
        Point::new(0.0, -delta),
        Point::new(-d, -d),
        Point::new(-delta, 0.0),
        Point::new(-d, d),
    ]
}

pub const EAST: usize = 3;

/// `(x/W, y/H)`, the active bit of every id, then `slot/T`.
pub fn local_state(world: &WorldState, id: usize) -> Vec<f64> {
    let u = &world.uavs[id];
    let mut s = Vec::with_capacity(world.n_max() + 3);
    s.push((u.position.x / world.region.width).clamp(0.0, 1.0));
    s.push((u.position.y / world.region.height).clamp(0.0, 1.0));
    s.extend(world.uavs.iter().map(|v| if world.is_active(v.id) { 1.0 } else { 0.0 }));
    s.push((world.clock.slot_index as f64 / world.clock.slots_per_episode as f64).min(1.0));
    s
}

/// Per-slot view every agent shares: position, activity and load of each UAV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharedSummary {
    pub positions: Vec<Point>,
    pub active: Vec<bool>,
    pub served: Vec<usize>,
}

impl SharedSummary {
    pub fn capture(world: &WorldState, per_uav_served: &[usize]) -> Self {
        let mut served = vec![0; world.n_max()];
        for (site, &n) in world.sites().iter().zip(per_uav_served) {
            served[site.id] = n;
        }
        SharedSummary {
            positions: world.uavs.iter().map(|u| u.position.ground()).collect(),
            active: world.uavs.iter().map(|u| world.is_active(u.id)).collect(),
            served,
        }
    }
}

/// `served/total − λ·Σ overlap/(π r_i²)`.
pub fn local_reward(served_total: usize, total_users: usize, overlaps: &[f64], own_radius: f64, lambda: f64) -> f64 {
    let service = if total_users == 0 {
        0.0
    } else {
        served_total as f64 / total_users as f64
    };
    let own = std::f64::consts::PI * own_radius * own_radius;
    service - lambda * overlaps.iter().sum::<f64>() / own
}

/// Overlap areas between `id` and every other active UAV in `world`, with the
/// radius of `id`'s footprint.
pub fn overlaps_of(world: &WorldState, id: usize) -> Result<(Vec<f64>, f64)> {
    let me = &world.uavs[id];
    let r = footprint_radius(me.position.z, &world.rules.coverage)?;
    let mut areas = Vec::new();
    for other in &world.uavs {
        if other.id == id || !world.is_active(other.id) {
            continue;
        }
        let r2 = footprint_radius(other.position.z, &world.rules.coverage)?;
        areas.push(overlap_area(me.position.ground(), r, other.position.ground(), r2));
    }
    Ok((areas, r))
}
