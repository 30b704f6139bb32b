//! Centralized DDPG positioning agent trained by one host and parallel
//! rollout workers.

mod agent;
mod apc;
mod env;
mod eval;

pub use agent::{DdpgAgent, TrainStats};
pub use apc::{apc_run, ApcHarness, ApcOutcome, Budget, EpisodeRecord};
pub use env::{encode_state, reward, EnvStep, Environment, PositioningEnv};
pub use eval::{evaluate, placement_oracle, policy_moves, EvalResult, EvalSummary, PolicyMode};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DdpgConfig {
    pub actor_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub gamma: f64,
    pub tau: f64,
    pub batch: usize,
    pub buffer_capacity: usize,
    /// Transitions collected before training starts.
    pub warmup: usize,
    pub sigma_start: f64,
    pub sigma_end: f64,
    /// Fraction of the episode budget over which sigma decays.
    pub sigma_decay_fraction: f64,
    /// Multiply sigma near scheduled crew events.
    pub event_boost: bool,
    pub boost_factor: f64,
    pub boost_window: usize,
    /// Weight of the out-of-bound penalty.
    pub oob_penalty: f64,
    /// Weight of the squared actor pre-activation in the actor loss; keeps
    /// tanh outputs out of saturation.
    pub preact_penalty: f64,
    /// Untrained transitions workers may run ahead of the host.
    pub backlog_limit: usize,
}

impl Default for DdpgConfig {
    fn default() -> Self {
        DdpgConfig {
            actor_hidden: vec![64, 64],
            critic_hidden: vec![64, 64],
            actor_lr: 1e-4,
            critic_lr: 1e-3,
            gamma: 0.99,
            tau: 0.005,
            batch: 64,
            buffer_capacity: 100_000,
            warmup: 256,
            sigma_start: 0.3,
            sigma_end: 0.05,
            sigma_decay_fraction: 0.6,
            event_boost: false,
            boost_factor: 2.0,
            boost_window: 5,
            oob_penalty: 0.5,
            preact_penalty: 0.01,
            backlog_limit: 4096,
        }
    }
}

impl DdpgConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::config(m.to_string()));
        if self.actor_hidden.contains(&0) || self.critic_hidden.contains(&0) {
            return bad("hidden layer widths must be positive");
        }
        if !(self.actor_lr > 0.0 && self.critic_lr > 0.0) {
            return bad("learning rates must be positive");
        }
        if !(0.0..=1.0).contains(&self.gamma) || !(0.0..=1.0).contains(&self.tau) {
            return bad("gamma and tau must lie in [0, 1]");
        }
        if self.batch == 0 || self.buffer_capacity < self.batch {
            return bad("batch must be positive and fit in the buffer");
        }
        if self.sigma_start < 0.0 || self.sigma_end < 0.0 || !(0.0..=1.0).contains(&self.sigma_decay_fraction) {
            return bad("noise schedule out of range");
        }
        if self.oob_penalty < 0.0 || self.boost_factor < 0.0 || self.preact_penalty < 0.0 {
            return bad("penalty and boost weights must be non-negative");
        }
        Ok(())
    }

    /// Exploration std for episode `episode` of `total`.
    pub fn sigma(&self, episode: usize, total: usize) -> f64 {
        let span = self.sigma_decay_fraction * total as f64;
        if span <= 0.0 {
            return self.sigma_end;
        }
        let f = (episode as f64 / span).min(1.0);
        self.sigma_start + (self.sigma_end - self.sigma_start) * f
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_schedule_is_linear_then_flat() {
        let c = DdpgConfig::default();
        assert_eq!(c.sigma(0, 100), 0.3);
        assert!((c.sigma(30, 100) - 0.175).abs() < 1e-12);
        assert!((c.sigma(60, 100) - 0.05).abs() < 1e-12);
        assert!((c.sigma(99, 100) - 0.05).abs() < 1e-12);
    }
}
