//! Host/worker training loop.
//!
//! Workers own one environment copy each, act with the most recent policy
//! snapshot and push transitions into a shared buffer. The host owns the
//! networks and performs one train step per collected transition once the
//! buffer holds `max(warmup, batch)` items. With one worker everything runs on
//! the calling thread and the run is bit-reproducible.

use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::{mpsc, Arc, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::agent::act_with;
use super::env::Environment;
use super::{DdpgAgent, DdpgConfig, TrainStats};
use crate::error::{Error, Result};
use crate::nn::{Action, Mlp, ReplayBuffer, SharedReplayBuffer, Tag, Transition};
use crate::seed;

const ENV_STREAM: u64 = 0xE0;
const NOISE_STREAM: u64 = 0xE1;
const HOST_STREAM: u64 = 0xE2;
const INIT_STREAM: u64 = 0xE3;

/// When to stop collecting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    pub episodes: usize,
    pub wall: Option<Duration>,
}

impl Budget {
    pub fn episodes(n: usize) -> Self {
        Budget { episodes: n, wall: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    /// Global episode index (drives the noise schedule).
    pub episode: usize,
    pub worker: usize,
    pub env_seed: u64,
    #[serde(rename = "return")]
    pub episode_return: f64,
    /// Mean critic loss over train steps since the previous record; NaN
    /// before training starts.
    pub critic_loss: f64,
    pub steps: usize,
    pub mean_served: f64,
}

#[derive(Debug, Clone)]
pub struct ApcOutcome {
    pub agent: DdpgAgent,
    pub curve: Vec<EpisodeRecord>,
    pub transitions: u64,
    pub train_steps: u64,
    pub buffer: ReplayBuffer,
}

impl ApcOutcome {
    /// `episode,return,critic_loss` CSV.
    pub fn curve_csv(&self) -> String {
        curve_csv(&self.curve)
    }
}

pub fn curve_csv(curve: &[EpisodeRecord]) -> String {
    let mut out = String::from("episode,worker,return,critic_loss,mean_served\n");
    for r in curve {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.episode, r.worker, r.episode_return, r.critic_loss, r.mean_served
        ));
    }
    out
}

pub struct ApcHarness<E: Environment> {
    envs: Vec<E>,
    agent: DdpgAgent,
    cfg: DdpgConfig,
    seed: u64,
}

impl<E: Environment> ApcHarness<E> {
    /// One environment per worker. All copies must share a configuration.
    pub fn new(envs: Vec<E>, cfg: DdpgConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let first = envs
            .first()
            .ok_or_else(|| Error::config("at least one worker is required"))?;
        let fp = first.fingerprint();
        if let Some(i) = envs.iter().position(|e| e.fingerprint() != fp) {
            return Err(Error::config(format!(
                "worker {i} environment differs from worker 0 in configuration"
            )));
        }
        let mut rng = seed::rng(seed, &[INIT_STREAM]);
        let agent = DdpgAgent::new(first.observation_dim(), first.action_dim(), &cfg, &mut rng)?;
        Ok(ApcHarness { envs, agent, cfg, seed })
    }

    /// Replaces the freshly initialized agent, e.g. to resume training.
    pub fn with_agent(mut self, agent: DdpgAgent) -> Result<Self> {
        if agent.state_dim() != self.envs[0].observation_dim() || agent.action_dim() != self.envs[0].action_dim() {
            return Err(Error::Architecture {
                expected: vec![self.envs[0].observation_dim(), self.envs[0].action_dim()],
                found: vec![agent.state_dim(), agent.action_dim()],
            });
        }
        self.agent = agent;
        Ok(self)
    }

    pub fn workers(&self) -> usize {
        self.envs.len()
    }

    pub fn agent(&self) -> &DdpgAgent {
        &self.agent
    }

    pub fn run(self, budget: Budget) -> Result<ApcOutcome> {
        if self.envs.len() == 1 {
            self.run_single(budget)
        } else {
            self.run_parallel(budget)
        }
    }

    fn train_threshold(&self) -> usize {
        self.cfg.warmup.max(self.cfg.batch)
    }

    fn run_single(mut self, budget: Budget) -> Result<ApcOutcome> {
        let start = Instant::now();
        let mut env = self.envs.pop().expect("one env");
        let mut buf = ReplayBuffer::new(self.cfg.buffer_capacity);
        let mut noise = seed::rng(self.seed, &[NOISE_STREAM, 0]);
        let mut host = seed::rng(self.seed, &[HOST_STREAM]);
        let threshold = self.train_threshold();
        let mut curve = Vec::new();
        let mut train_steps = 0u64;
        'episodes: for ep in 0..budget.episodes {
            let env_seed = seed::derive(self.seed, &[ENV_STREAM, 0, ep as u64]);
            let sigma = self.cfg.sigma(ep, budget.episodes);
            let mut s = env.reset(env_seed)?;
            let (mut ret, mut steps, mut served) = (0.0, 0usize, 0usize);
            let mut losses = LossMean::default();
            loop {
                if budget.wall.is_some_and(|w| start.elapsed() >= w) {
                    break 'episodes;
                }
                let a = act_with(&self.agent.actor.net, &s, true, sigma * env.exploration_scale(), &mut noise)?;
                let st = env.step(&a)?;
                ret += st.reward;
                steps += 1;
                served += st.served;
                buf.push(Transition {
                    state: std::mem::take(&mut s),
                    action: Action::Continuous(a),
                    reward: st.reward,
                    next_state: st.next_state.clone(),
                    terminal: st.done,
                    tag: Tag::default(),
                });
                if buf.len() >= threshold {
                    losses.add(self.agent.train_step(&buf, &mut host)?);
                    train_steps += 1;
                }
                s = st.next_state;
                if st.done {
                    break;
                }
            }
            curve.push(EpisodeRecord {
                episode: ep,
                worker: 0,
                env_seed,
                episode_return: ret,
                critic_loss: losses.mean(),
                steps,
                mean_served: served as f64 / steps.max(1) as f64,
            });
        }
        Ok(ApcOutcome {
            agent: self.agent,
            curve,
            transitions: buf.inserted(),
            train_steps,
            buffer: buf,
        })
    }

    fn run_parallel(self, budget: Budget) -> Result<ApcOutcome> {
        let ApcHarness {
            envs,
            mut agent,
            cfg,
            seed: base,
        } = self;
        let start = Instant::now();
        let shared = SharedReplayBuffer::new(cfg.buffer_capacity);
        let snapshot = Mutex::new(Arc::new(agent.actor.net.clone()));
        let consumed = AtomicU64::new(0);
        let stop = AtomicBool::new(false);
        let finished = AtomicUsize::new(0);
        let n_workers = envs.len();
        let threshold = cfg.warmup.max(cfg.batch);
        let (tx, rx) = mpsc::channel::<Result<EpisodeRecord>>();

        let mut curve = Vec::new();
        let mut train_steps = 0u64;
        let mut host = seed::rng(base, &[HOST_STREAM]);

        std::thread::scope(|scope| -> Result<()> {
            for (w, mut env) in envs.into_iter().enumerate() {
                let tx = tx.clone();
                let (shared, snapshot, consumed, stop, finished, cfg) =
                    (&shared, &snapshot, &consumed, &stop, &finished, &cfg);
                scope.spawn(move || {
                    let mut noise = seed::rng(base, &[NOISE_STREAM, w as u64]);
                    // Episodes are dealt round-robin so every worker contributes.
                    for (local_ep, ep) in (w..budget.episodes).step_by(n_workers).enumerate() {
                        if stop.load(Ordering::Relaxed) {
                            break;
                        }
                        let policy: Arc<Mlp> = snapshot.lock().unwrap_or_else(|p| p.into_inner()).clone();
                        let env_seed = seed::derive(base, &[ENV_STREAM, w as u64, local_ep as u64]);
                        let sigma = cfg.sigma(ep, budget.episodes);
                        let rec = worker_episode(
                            &mut env, &policy, shared, consumed, stop, cfg, &mut noise, sigma, w, ep, env_seed,
                        );
                        let failed = rec.is_err();
                        if tx.send(rec).is_err() || failed {
                            break;
                        }
                    }
                    finished.fetch_add(1, Ordering::Release);
                });
            }
            drop(tx);

            let mut losses = LossMean::default();
            loop {
                let mut progressed = false;
                while let Ok(rec) = rx.try_recv() {
                    let mut rec = rec?;
                    rec.critic_loss = losses.mean();
                    losses = LossMean::default();
                    curve.push(rec);
                    progressed = true;
                }
                let inserted = shared.inserted();
                let mut done_now = consumed.load(Ordering::Acquire);
                let mut trained = false;
                while done_now < inserted {
                    // Same cadence as the single-worker loop: train once the
                    // buffer held `threshold` items when this transition landed.
                    if done_now + 1 >= threshold as u64 {
                        let buf = shared.lock();
                        let batch = buf.sample(agent.batch, &mut host)?;
                        drop(buf);
                        losses.add(agent.train_on(&batch)?);
                        train_steps += 1;
                        trained = true;
                    }
                    done_now += 1;
                    consumed.store(done_now, Ordering::Release);
                    if budget.wall.is_some_and(|w| start.elapsed() >= w) {
                        break;
                    }
                }
                if trained {
                    *snapshot.lock().unwrap_or_else(|p| p.into_inner()) = Arc::new(agent.actor.net.clone());
                    progressed = true;
                }
                if budget.wall.is_some_and(|w| start.elapsed() >= w) {
                    stop.store(true, Ordering::Relaxed);
                }
                if finished.load(Ordering::Acquire) == n_workers {
                    // Drain the remaining records and stop.
                    while let Ok(rec) = rx.try_recv() {
                        let mut rec = rec?;
                        rec.critic_loss = losses.mean();
                        losses = LossMean::default();
                        curve.push(rec);
                    }
                    if stop.load(Ordering::Relaxed) || consumed.load(Ordering::Acquire) >= shared.inserted() {
                        break;
                    }
                }
                if !progressed {
                    std::thread::sleep(Duration::from_micros(200));
                }
            }
            stop.store(true, Ordering::Relaxed);
            Ok(())
        })?;

        let buffer = shared.snapshot();
        Ok(ApcOutcome {
            agent,
            curve,
            transitions: buffer.inserted(),
            train_steps,
            buffer,
        })
    }
}

#[allow(clippy::too_many_arguments)]
fn worker_episode<E: Environment>(
    env: &mut E,
    policy: &Mlp,
    shared: &SharedReplayBuffer,
    consumed: &AtomicU64,
    stop: &AtomicBool,
    cfg: &DdpgConfig,
    noise: &mut seed::Rng,
    sigma: f64,
    worker: usize,
    episode: usize,
    env_seed: u64,
) -> Result<EpisodeRecord> {
    let mut s = env.reset(env_seed)?;
    let (mut ret, mut steps, mut served) = (0.0, 0usize, 0usize);
    loop {
        while shared.inserted().saturating_sub(consumed.load(Ordering::Acquire)) > cfg.backlog_limit as u64 {
            if stop.load(Ordering::Relaxed) {
                break;
            }
            std::thread::sleep(Duration::from_micros(100));
        }
        if stop.load(Ordering::Relaxed) {
            break;
        }
        let a = act_with(policy, &s, true, sigma * env.exploration_scale(), noise)?;
        let st = env.step(&a)?;
        ret += st.reward;
        steps += 1;
        served += st.served;
        shared.push(Transition {
            state: std::mem::take(&mut s),
            action: Action::Continuous(a),
            reward: st.reward,
            next_state: st.next_state.clone(),
            terminal: st.done,
            tag: Tag {
                stream: worker as u32,
                agent: 0,
            },
        });
        s = st.next_state;
        if st.done {
            break;
        }
    }
    Ok(EpisodeRecord {
        episode,
        worker,
        env_seed,
        episode_return: ret,
        critic_loss: f64::NAN,
        steps,
        mean_served: served as f64 / steps.max(1) as f64,
    })
}

#[derive(Debug, Default)]
struct LossMean {
    sum: f64,
    n: usize,
}

impl LossMean {
    fn add(&mut self, s: TrainStats) {
        self.sum += s.critic_loss;
        self.n += 1;
    }

    fn mean(&self) -> f64 {
        if self.n == 0 {
            f64::NAN
        } else {
            self.sum / self.n as f64
        }
    }
}

/// Builds a harness with `workers` copies of `env` and trains it.
pub fn apc_run<E: Environment + Clone>(
    env: E,
    workers: usize,
    cfg: DdpgConfig,
    seed: u64,
    budget: Budget,
) -> Result<ApcOutcome> {
    if workers == 0 {
        return Err(Error::config("workers must be at least 1"));
    }
    ApcHarness::new(vec![env; workers], cfg, seed)?.run(budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ScenarioConfig, UavFleetConfig};
    use crate::ddpg::PositioningEnv;
    use crate::geom::Point;
    use std::collections::BTreeSet;

    fn tiny() -> (PositioningEnv, DdpgConfig) {
        let mut sc = ScenarioConfig::default();
        sc.world.slots = 10;
        sc.users.total = 30;
        sc.uavs = UavFleetConfig {
            count: 1,
            start_positions: vec![Point::new(400.0, 400.0)],
            ..Default::default()
        };
        let cfg = DdpgConfig {
            actor_hidden: vec![16],
            critic_hidden: vec![16],
            batch: 8,
            warmup: 16,
            ..Default::default()
        };
        (PositioningEnv::new(sc, 0.5).unwrap(), cfg)
    }

    fn bits(m: &Mlp) -> Vec<u64> {
        m.params().iter().map(|p| p.to_bits()).collect()
    }

    #[test]
    fn single_worker_runs_are_bit_identical() {
        let (env, cfg) = tiny();
        let a = apc_run(env.clone(), 1, cfg.clone(), 9, Budget::episodes(6)).unwrap();
        let b = apc_run(env, 1, cfg, 9, Budget::episodes(6)).unwrap();
        assert_eq!(a.curve_csv(), b.curve_csv());
        assert_eq!(bits(&a.agent.actor.net), bits(&b.agent.actor.net));
        assert_eq!(bits(&a.agent.target_critic), bits(&b.agent.target_critic));
        assert_eq!(a.transitions, 60);
        assert!(a.train_steps > 0);
    }

    #[test]
    fn four_workers_fill_the_buffer_from_four_streams() {
        let (env, cfg) = tiny();
        let out = apc_run(env, 4, cfg, 9, Budget::episodes(12)).unwrap();
        let streams: BTreeSet<u32> = out.buffer.iter().map(|t| t.tag.stream).collect();
        assert_eq!(streams, (0..4).collect());
        assert_eq!(out.curve.len(), 12);
        assert_eq!(out.transitions, 120);
        assert_eq!(out.train_steps, 120 - 15);
        let seeds: BTreeSet<u64> = out.curve.iter().map(|r| r.env_seed).collect();
        assert_eq!(seeds.len(), 12);
    }

    #[test]
    fn diverging_worker_configs_are_rejected() {
        let (env, cfg) = tiny();
        let mut other = env.scenario().clone();
        other.users.total = 31;
        let other = PositioningEnv::new(other, 0.5).unwrap();
        let err = ApcHarness::new(vec![env, other], cfg, 0).err().unwrap();
        assert!(matches!(err, Error::Config(_)), "{err}");
    }

    #[test]
    fn parallel_collection_keeps_up_under_a_wall_budget() {
        let (env, cfg) = tiny();
        let budget = Budget {
            episodes: usize::MAX,
            wall: Some(Duration::from_millis(400)),
        };
        let one = apc_run(env.clone(), 1, cfg.clone(), 1, budget).unwrap();
        let four = apc_run(env, 4, cfg, 1, budget).unwrap();
        assert!(four.transitions >= one.transitions, "{} < {}", four.transitions, one.transitions);
    }
}
