use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::DdpgConfig;
use crate::error::{Error, Result};
use crate::nn::{Mlp, OutputActivation, ReplayBuffer, Trainable, Transition};

const OUTPUT_INIT: f64 = 3e-3;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrainStats {
    pub critic_loss: f64,
    /// Mean `Q(s, μ(s))` over the batch before the actor step.
    pub actor_objective: f64,
}

/// Actor, critic and their target copies.
#[derive(Debug, Clone)]
pub struct DdpgAgent {
    pub actor: Trainable,
    pub critic: Trainable,
    pub target_actor: Mlp,
    pub target_critic: Mlp,
    pub gamma: f64,
    pub tau: f64,
    pub batch: usize,
    pub preact_penalty: f64,
}

fn layer_sizes(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    let mut s = Vec::with_capacity(hidden.len() + 2);
    s.push(input);
    s.extend_from_slice(hidden);
    s.push(output);
    s
}

impl DdpgAgent {
    /// Fresh networks. Output layers start near zero so the actor begins
    /// away from tanh saturation.
    pub fn new<R: Rng + ?Sized>(state_dim: usize, action_dim: usize, cfg: &DdpgConfig, rng: &mut R) -> Result<Self> {
        let mut actor = Mlp::new(
            &layer_sizes(state_dim, &cfg.actor_hidden, action_dim),
            OutputActivation::Tanh,
            rng,
        )?;
        let mut critic = Mlp::new(
            &layer_sizes(state_dim + action_dim, &cfg.critic_hidden, 1),
            OutputActivation::Identity,
            rng,
        )?;
        actor.reinit_output_layer(OUTPUT_INIT, rng);
        critic.reinit_output_layer(OUTPUT_INIT, rng);
        Self::from_networks(actor, critic, cfg)
    }

    /// Builds an agent around existing online networks; targets start as
    /// copies.
    pub fn from_networks(actor: Mlp, critic: Mlp, cfg: &DdpgConfig) -> Result<Self> {
        let (s, a) = (actor.input_dim(), actor.output_dim());
        if critic.input_dim() != s + a || critic.output_dim() != 1 {
            return Err(Error::Architecture {
                expected: vec![s + a, 1],
                found: vec![critic.input_dim(), critic.output_dim()],
            });
        }
        Ok(DdpgAgent {
            target_actor: actor.clone(),
            target_critic: critic.clone(),
            actor: Trainable::new(actor, cfg.actor_lr),
            critic: Trainable::new(critic, cfg.critic_lr),
            gamma: cfg.gamma,
            tau: cfg.tau,
            batch: cfg.batch,
            preact_penalty: cfg.preact_penalty,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.actor.net.input_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.actor.net.output_dim()
    }

    /// Actor output, plus clamped Gaussian noise of std `sigma` when
    /// exploring.
    pub fn act<R: Rng + ?Sized>(&self, s: &[f64], explore: bool, sigma: f64, rng: &mut R) -> Result<Vec<f64>> {
        act_with(&self.actor.net, s, explore, sigma, rng)
    }

    /// `r + γ(1−d)·Q'(s', μ'(s'))` for each transition.
    pub fn critic_targets(&self, batch: &[Transition]) -> Result<Vec<f64>> {
        batch
            .iter()
            .map(|t| {
                if t.terminal {
                    return Ok(t.reward);
                }
                let a = self.target_actor.forward(&t.next_state)?;
                let q = self.target_critic.forward(&concat(&t.next_state, &a))?[0];
                Ok(t.reward + self.gamma * q)
            })
            .collect()
    }

    pub fn train_step<R: Rng + ?Sized>(&mut self, buf: &ReplayBuffer, rng: &mut R) -> Result<TrainStats> {
        let batch = buf.sample(self.batch, rng)?;
        self.train_on(&batch)
    }

    /// One critic step, one actor step and a soft target update on `batch`.
    /// The actor descends `−Q(s, μ(s)) + λ·|z|²`, `z` the pre-tanh output.
    pub fn train_on(&mut self, batch: &[Transition]) -> Result<TrainStats> {
        let n = batch.len() as f64;
        let targets = self.critic_targets(batch)?;

        self.critic.zero_grad();
        let mut loss = 0.0;
        for (t, y) in batch.iter().zip(&targets) {
            let cache = self.critic.net.forward_cached(&concat(&t.state, t.action.continuous()))?;
            let err = cache.output()[0] - y;
            loss += err * err;
            self.critic.accumulate(&cache, &[2.0 * err / n])?;
        }
        self.critic.apply()?;

        let a_dim = self.action_dim();
        self.actor.zero_grad();
        let mut objective = 0.0;
        for t in batch {
            let a_cache = self.actor.net.forward_cached(&t.state)?;
            let q_cache = self.critic.net.forward_cached(&concat(&t.state, a_cache.output()))?;
            objective += q_cache.output()[0];
            let dq = self.critic.net.input_gradient(&q_cache, &[1.0])?;
            // Ascend Q: descend −Q.
            let upstream: Vec<f64> = dq[dq.len() - a_dim..].iter().map(|g| -g / n).collect();
            let z = a_cache.pre.last().expect("at least one layer");
            let pull: Vec<f64> = z.iter().map(|z| 2.0 * self.preact_penalty * z / n).collect();
            self.actor.accumulate_with_pre(&a_cache, &upstream, &pull)?;
        }
        self.actor.apply()?;

        self.target_critic.soft_update(&self.critic.net, self.tau)?;
        self.target_actor.soft_update(&self.actor.net, self.tau)?;
        Ok(TrainStats {
            critic_loss: loss / n,
            actor_objective: objective / n,
        })
    }
}

pub(crate) fn act_with<R: Rng + ?Sized>(actor: &Mlp, s: &[f64], explore: bool, sigma: f64, rng: &mut R) -> Result<Vec<f64>> {
    let mut a = actor.forward(s)?;
    if explore && sigma > 0.0 {
        let noise = Normal::new(0.0, sigma).map_err(|e| Error::Domain(e.to_string()))?;
        for v in &mut a {
            *v += noise.sample(rng);
        }
    }
    for v in &mut a {
        *v = v.clamp(-1.0, 1.0);
    }
    Ok(a)
}

pub(crate) fn concat(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(a.len() + b.len());
    v.extend_from_slice(a);
    v.extend_from_slice(b);
    v
}
