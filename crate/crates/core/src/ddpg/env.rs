use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::geom::Point;
use crate::world::{init_world, SlotReport, UavStatus, WorldState};

/// Result of one environment step.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvStep {
    pub next_state: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    /// Users served after the step.
    pub served: usize,
}

/// A fixed-dimension continuous-control task the APC harness can train on.
pub trait Environment: Send {
    fn observation_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    /// Identity of the configuration, excluding the seed. Worker copies must
    /// agree on it.
    fn fingerprint(&self) -> String;
    fn reset(&mut self, seed: u64) -> Result<Vec<f64>>;
    fn step(&mut self, action: &[f64]) -> Result<EnvStep>;
    /// Multiplier on the exploration noise for the coming step.
    fn exploration_scale(&self) -> f64 {
        1.0
    }
}

/// Fixed-dimension encoding: per UAV id `(x/W, y/H, b/B_max, countdown/T)`,
/// then `slot/T`.
pub fn encode_state(world: &WorldState) -> Vec<f64> {
    let t = world.clock.slots_per_episode as f64;
    let b_max = world.rules.energy.b_max;
    let mut s = Vec::with_capacity(4 * world.n_max() + 1);
    for u in &world.uavs {
        s.push((u.position.x / world.region.width).clamp(0.0, 1.0));
        s.push((u.position.y / world.region.height).clamp(0.0, 1.0));
        s.push((u.battery / b_max).clamp(0.0, 1.0));
        s.push((u.join_countdown as f64 / t).min(1.0));
    }
    s.push((world.clock.slot_index as f64 / t).min(1.0));
    s
}

/// `served/total_users − β·flags/max(1, active)`.
pub fn reward(served: usize, total_users: usize, oob_flags: usize, active: usize, beta: f64) -> f64 {
    let service = if total_users == 0 {
        0.0
    } else {
        served as f64 / total_users as f64
    };
    service - beta * oob_flags as f64 / active.max(1) as f64
}

/// The positioning task: one world per episode, actions are per-UAV
/// displacements in `[-1, 1]²` scaled by `d_max`.
#[derive(Debug, Clone)]
pub struct PositioningEnv {
    scenario: ScenarioConfig,
    beta: f64,
    boost: Option<(f64, usize)>,
    world: Option<WorldState>,
    event_slots: Vec<usize>,
    last_report: Option<SlotReport>,
}

impl PositioningEnv {
    pub fn new(scenario: ScenarioConfig, oob_penalty: f64) -> Result<Self> {
        scenario.validate()?;
        Ok(PositioningEnv {
            scenario,
            beta: oob_penalty,
            boost: None,
            world: None,
            event_slots: Vec::new(),
            last_report: None,
        })
    }

    /// Multiplies exploration by `factor` within `window` slots of each
    /// scheduled crew event.
    pub fn with_event_boost(mut self, factor: f64, window: usize) -> Self {
        self.boost = Some((factor, window));
        self
    }

    pub fn scenario(&self) -> &ScenarioConfig {
        &self.scenario
    }

    pub fn world(&self) -> Option<&WorldState> {
        self.world.as_ref()
    }

    pub fn last_report(&self) -> Option<&SlotReport> {
        self.last_report.as_ref()
    }

    pub fn n_max(&self) -> usize {
        self.scenario.uavs.count
    }
}

/// Converts normalized actions into displacements.
pub(crate) fn to_moves(action: &[f64], d_max: f64) -> Vec<Point> {
    action
        .chunks_exact(2)
        .map(|a| Point::new(a[0].clamp(-1.0, 1.0) * d_max, a[1].clamp(-1.0, 1.0) * d_max))
        .collect()
}

impl Environment for PositioningEnv {
    fn observation_dim(&self) -> usize {
        4 * self.n_max() + 1
    }

    fn action_dim(&self) -> usize {
        2 * self.n_max()
    }

    fn fingerprint(&self) -> String {
        format!(
            "positioning|{}|beta={}|boost={:?}",
            toml::to_string(&self.scenario).unwrap_or_default(),
            self.beta,
            self.boost
        )
    }

    fn reset(&mut self, seed: u64) -> Result<Vec<f64>> {
        let world = init_world(&self.scenario, seed)?;
        self.event_slots = world.scheduled_slots();
        let s = encode_state(&world);
        self.world = Some(world);
        self.last_report = None;
        Ok(s)
    }

    fn step(&mut self, action: &[f64]) -> Result<EnvStep> {
        let world = self
            .world
            .as_mut()
            .ok_or_else(|| Error::Domain("step called before reset".into()))?;
        if action.len() != 2 * world.n_max() {
            return Err(Error::Shape {
                expected: 2 * world.n_max(),
                found: action.len(),
            });
        }
        let active = world.uavs.iter().filter(|u| u.status == UavStatus::Serving).count();
        let report = world.advance_slot(&to_moves(action, world.rules.d_max))?;
        let users = world.sample_users();
        let served = world.serve(&users).total;
        let r = reward(served, users.len(), report.out_of_bound_count(), active, self.beta);
        let done = world.clock.is_done();
        let next_state = encode_state(world);
        self.last_report = Some(report);
        Ok(EnvStep {
            next_state,
            reward: r,
            done,
            served,
        })
    }

    fn exploration_scale(&self) -> f64 {
        match (self.boost, &self.world) {
            (Some((factor, window)), Some(w)) => {
                let slot = w.clock.slot_index;
                if self.event_slots.iter().any(|&s| slot.abs_diff(s) <= window) {
                    factor
                } else {
                    1.0
                }
            }
            _ => 1.0,
        }
    }
}
