use rand::Rng;

use super::{MarlConfig, N_ACTIONS};
use crate::error::{Error, Result};
use crate::nn::{Mlp, OutputActivation, ReplayBuffer, Trainable, Transition};

/// One UAV's Q-network, target network and private replay buffer.
#[derive(Debug, Clone)]
pub struct DqnAgent {
    pub id: usize,
    pub q: Trainable,
    pub target: Mlp,
    pub buffer: ReplayBuffer,
    pub gamma: f64,
    pub tau: f64,
}

impl DqnAgent {
    pub fn new<R: Rng + ?Sized>(id: usize, state_dim: usize, cfg: &MarlConfig, rng: &mut R) -> Result<Self> {
        let mut sizes = vec![state_dim];
        sizes.extend_from_slice(&cfg.hidden);
        sizes.push(N_ACTIONS);
        let net = Mlp::new(&sizes, OutputActivation::Identity, rng)?;
        Ok(Self::from_network(id, net, cfg))
    }

    pub fn from_network(id: usize, net: Mlp, cfg: &MarlConfig) -> Self {
        DqnAgent {
            id,
            target: net.clone(),
            q: Trainable::new(net, cfg.lr),
            buffer: ReplayBuffer::new(cfg.buffer_capacity),
            gamma: cfg.gamma,
            tau: cfg.tau,
        }
    }

    pub fn greedy(&self, s: &[f64]) -> Result<usize> {
        let q = self.q.net.forward(s)?;
        // First maximum wins, so ties resolve to the lower action index.
        Ok(q.iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
            .0)
    }

    pub fn act<R: Rng + ?Sized>(&self, s: &[f64], epsilon: f64, rng: &mut R) -> Result<usize> {
        if epsilon > 0.0 && rng.random::<f64>() < epsilon {
            Ok(rng.random_range(0..N_ACTIONS))
        } else {
            self.greedy(s)
        }
    }

    /// `r + γ(1−d)·max_a Q'(s', a)`.
    pub fn td_targets(&self, batch: &[Transition]) -> Result<Vec<f64>> {
        batch
            .iter()
            .map(|t| {
                if t.terminal || self.gamma == 0.0 {
                    return Ok(t.reward);
                }
                let q = self.target.forward(&t.next_state)?;
                Ok(t.reward + self.gamma * q.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
            })
            .collect()
    }

    /// One TD regression step and a soft target refresh; returns the loss.
    pub fn q_update(&mut self, batch: &[Transition]) -> Result<f64> {
        let targets = self.td_targets(batch)?;
        let n = batch.len() as f64;
        self.q.zero_grad();
        let mut loss = 0.0;
        let mut upstream = [0.0; N_ACTIONS];
        for (t, y) in batch.iter().zip(&targets) {
            let a = t
                .action
                .index()
                .filter(|&a| a < N_ACTIONS)
                .ok_or_else(|| Error::Domain("DQN transition without a discrete action".into()))?;
            let cache = self.q.net.forward_cached(&t.state)?;
            let err = cache.output()[a] - y;
            loss += err * err;
            upstream.fill(0.0);
            upstream[a] = 2.0 * err / n;
            self.q.accumulate(&cache, &upstream)?;
        }
        self.q.apply()?;
        self.target.soft_update(&self.q.net, self.tau)?;
        Ok(loss / n)
    }

    pub fn train_step<R: Rng + ?Sized>(&mut self, batch: usize, rng: &mut R) -> Result<f64> {
        let b = self.buffer.sample(batch, rng)?;
        self.q_update(&b)
    }
}

/// One agent per UAV id.
#[derive(Debug, Clone)]
pub struct DqnAgentSet {
    pub agents: Vec<DqnAgent>,
    pub cfg: MarlConfig,
}

impl DqnAgentSet {
    pub fn new<R: Rng + ?Sized>(n: usize, state_dim: usize, cfg: &MarlConfig, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let agents = (0..n)
            .map(|id| DqnAgent::new(id, state_dim, cfg, rng))
            .collect::<Result<_>>()?;
        Ok(DqnAgentSet {
            agents,
            cfg: cfg.clone(),
        })
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn state_dim(&self) -> usize {
        self.agents.first().map_or(0, |a| a.q.net.input_dim())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Action, Tag};
    use crate::seed;

    fn tr(r: f64, a: usize, terminal: bool) -> Transition {
        Transition {
            state: vec![1.0],
            action: Action::Discrete(a),
            reward: r,
            next_state: vec![2.0],
            terminal,
            tag: Tag::default(),
        }
    }

    fn cfg() -> MarlConfig {
        MarlConfig {
            hidden: vec![8],
            lr: 1e-2,
            ..Default::default()
        }
    }

    #[test]
    fn terminal_and_zero_gamma_targets_are_rewards() {
        let mut agent = DqnAgent::new(0, 1, &cfg(), &mut seed::rng(1, &[])).unwrap();
        let batch = [tr(0.5, 0, true), tr(-1.0, 3, true)];
        assert_eq!(agent.td_targets(&batch).unwrap(), vec![0.5, -1.0]);
        agent.gamma = 0.0;
        let batch = [tr(0.5, 0, false), tr(-1.0, 3, false)];
        assert_eq!(agent.td_targets(&batch).unwrap(), vec![0.5, -1.0]);
    }

    #[test]
    fn hand_set_linear_q_target() {
        // Q(s) = (s·w_a + b_a) for nine actions; action 2 has the largest slope.
        let mut params = vec![0.0; 9 + 9];
        for a in 0..9 {
            params[a] = a as f64 * 0.1;
            params[9 + a] = 1.0;
        }
        params[2] = 3.0;
        let net = Mlp::from_params(&[1, 9], OutputActivation::Identity, params).unwrap();
        let c = MarlConfig { gamma: 0.5, ..cfg() };
        let agent = DqnAgent::from_network(0, net, &c);
        // s' = 2: max_a Q = 3·2 + 1 = 7.
        let y = agent.td_targets(&[tr(1.0, 0, false)]).unwrap();
        assert_eq!(y, vec![1.0 + 0.5 * 7.0]);
        assert_eq!(agent.greedy(&[2.0]).unwrap(), 2);
    }

    #[test]
    fn epsilon_one_is_uniform_and_zero_is_greedy() {
        let agent = DqnAgent::new(0, 1, &cfg(), &mut seed::rng(1, &[])).unwrap();
        let mut rng = seed::rng(5, &[]);
        let n = 18_000;
        let mut counts = [0usize; N_ACTIONS];
        for _ in 0..n {
            counts[agent.act(&[0.3], 1.0, &mut rng).unwrap()] += 1;
        }
        let expect = n as f64 / 9.0;
        let sigma = (n as f64 * (1.0 / 9.0) * (8.0 / 9.0)).sqrt();
        assert!(counts.iter().all(|&c| (c as f64 - expect).abs() < 4.0 * sigma), "{counts:?}");
        let g = agent.greedy(&[0.3]).unwrap();
        for _ in 0..20 {
            assert_eq!(agent.act(&[0.3], 0.0, &mut rng).unwrap(), g);
        }
    }

    #[test]
    fn q_update_moves_toward_target() {
        let mut agent = DqnAgent::new(0, 1, &cfg(), &mut seed::rng(1, &[])).unwrap();
        let batch = [tr(2.0, 4, true)];
        let first = agent.q_update(&batch).unwrap();
        let mut last = first;
        for _ in 0..500 {
            last = agent.q_update(&batch).unwrap();
        }
        assert!(last < 1e-3 * first.max(1e-3), "{first} -> {last}");
    }
}
