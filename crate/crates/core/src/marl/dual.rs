use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::agent::DqnAgentSet;
use super::{discrete_actions, local_reward, local_state, overlaps_of, MarlConfig};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::geom::Point;
use crate::nn::{Action, Tag, Transition};
use crate::seed;
use crate::trace::TraceRecord;
use crate::world::{init_world, WorldState};

const COPY_A: u64 = 0xA0;
const COPY_B: u64 = 0xB0;
const SCHEDULE_STREAM: u64 = 0xA1;
const ACT_STREAM: u64 = 0xA2;
const INIT_STREAM: u64 = 0xA3;

/// UAVs leave copy A in `order`; `order[i]` quits at the end of slot
/// `slots[i]`. The last id in `order` never quits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuitSchedule {
    pub order: Vec<usize>,
    pub slots: Vec<usize>,
}

impl QuitSchedule {
    pub fn validate(&self, n: usize) -> Result<()> {
        if let Some(&id) = self.order.iter().find(|&&id| id >= n) {
            return Err(Error::config(format!("quit schedule references UAV {id} but only {n} exist")));
        }
        let mut seen = vec![false; n];
        for &id in &self.order {
            if std::mem::replace(&mut seen[id], true) {
                return Err(Error::config(format!("quit schedule lists UAV {id} twice")));
            }
        }
        if self.slots.len() > self.order.len() || self.slots.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::config("quit slots must be sorted, one per quitting UAV"));
        }
        Ok(())
    }

    /// Ids quitting at the end of `slot`.
    pub fn quits_at(&self, slot: usize) -> impl Iterator<Item = usize> + '_ {
        self.slots
            .iter()
            .zip(&self.order)
            .filter(move |(s, _)| **s == slot)
            .map(|(_, &id)| id)
    }
}

/// Random permutation of the crew, with `n−1` distinct quit slots in
/// `1..slots`.
pub fn random_schedule<R: Rng + ?Sized>(n: usize, slots: usize, rng: &mut R) -> QuitSchedule {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let quits = n.saturating_sub(1).min(slots.saturating_sub(1));
    let mut at: Vec<usize> = index::sample(rng, slots.saturating_sub(1), quits)
        .into_iter()
        .map(|i| i + 1)
        .collect();
    at.sort_unstable();
    QuitSchedule { order, slots: at }
}

/// Two worlds with the same configuration: A starts with the full crew and
/// B with nobody.
#[derive(Debug, Clone)]
pub struct DualCopyEpisode {
    pub a: WorldState,
    pub b: WorldState,
    pub schedule: QuitSchedule,
}

impl DualCopyEpisode {
    pub fn new(scenario: &ScenarioConfig, seed_a: u64, seed_b: u64, schedule: QuitSchedule) -> Result<Self> {
        let mut sc = scenario.clone();
        // Crew changes come from the schedule only.
        sc.events.clear();
        sc.uavs.initial_status.clear();
        let mut a = init_world(&sc, seed_a)?;
        let mut b = init_world(&sc, seed_b)?;
        schedule.validate(a.n_max())?;
        for w in [&mut a, &mut b] {
            w.rules.quit_threshold = f64::NEG_INFINITY;
        }
        for id in 0..b.n_max() {
            b.force_quit(id);
        }
        Ok(DualCopyEpisode { a, b, schedule })
    }

    pub fn partition_holds(&self) -> bool {
        (0..self.a.n_max()).all(|id| self.a.is_active(id) != self.b.is_active(id))
    }

    fn copy(&self, c: usize) -> &WorldState {
        if c == 0 {
            &self.a
        } else {
            &self.b
        }
    }

    fn copy_mut(&mut self, c: usize) -> &mut WorldState {
        if c == 0 {
            &mut self.a
        } else {
            &mut self.b
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DualEpisodeStats {
    /// Summed local reward per agent.
    pub returns: Vec<f64>,
    /// Served users per slot in each copy.
    pub served: [Vec<usize>; 2],
    /// Slots at which the partition invariant failed.
    pub violations: usize,
    /// Transitions pushed per agent, split by copy.
    pub pushed: Vec<[usize; 2]>,
    pub losses: Vec<f64>,
    /// Per-slot records tagged `A` / `B`, when requested.
    pub records: Vec<TraceRecord>,
}

/// Runs one dual-copy episode with ε-greedy agents, pushing each agent's
/// transitions from both copies into its own buffer and training every
/// `train_every` slots once a buffer holds `max(warmup, batch)` items.
pub fn run_dual_episode<R: Rng + ?Sized>(
    agents: &mut DqnAgentSet,
    episode: &mut DualCopyEpisode,
    epsilon: f64,
    train: bool,
    record: bool,
    rng: &mut R,
) -> Result<DualEpisodeStats> {
    let n = episode.a.n_max();
    if agents.len() != n {
        return Err(Error::Shape {
            expected: n,
            found: agents.len(),
        });
    }
    let cfg = agents.cfg.clone();
    let actions = discrete_actions(cfg.step);
    let threshold = cfg.warmup.max(cfg.batch);
    let mut stats = DualEpisodeStats {
        returns: vec![0.0; n],
        pushed: vec![[0, 0]; n],
        ..Default::default()
    };
    if !episode.partition_holds() {
        stats.violations += 1;
    }

    while !episode.a.clock.is_done() {
        let slot = episode.a.clock.slot_index;
        // Decide in both copies before either moves.
        let mut chosen: [Vec<Option<(Vec<f64>, usize)>>; 2] = [vec![None; n], vec![None; n]];
        for (c, picks) in chosen.iter_mut().enumerate() {
            let w = episode.copy(c);
            for id in 0..n {
                if w.is_active(id) {
                    let s = local_state(w, id);
                    let a = agents.agents[id].act(&s, epsilon, rng)?;
                    picks[id] = Some((s, a));
                }
            }
        }

        let mut rewards: [Vec<f64>; 2] = [vec![0.0; n], vec![0.0; n]];
        for (c, picks) in chosen.iter().enumerate() {
            let moves: Vec<Point> = picks
                .iter()
                .map(|p| p.as_ref().map_or(Point::ZERO, |(_, a)| actions[*a]))
                .collect();
            let w = episode.copy_mut(c);
            let report = w.advance_slot(&moves)?;
            let users = w.sample_users();
            let service = w.serve(&users);
            stats.served[c].push(service.total);
            for id in 0..n {
                if picks[id].is_some() && w.is_active(id) {
                    let (ov, r) = overlaps_of(w, id)?;
                    rewards[c][id] = local_reward(service.total, users.len(), &ov, r, cfg.overlap_penalty);
                }
            }
            if record {
                let mut rec = TraceRecord::capture(w, slot, service.total, users.len(), &report.fired);
                rec.copy = Some(if c == 0 { "A" } else { "B" }.to_string());
                stats.records.push(rec);
            }
        }

        // Slot-boundary hand-off from A to B.
        let quitting: Vec<usize> = episode.schedule.quits_at(slot).collect();
        for &id in &quitting {
            let at = episode.a.uavs[id].position.ground();
            episode.a.force_quit(id);
            episode.b.force_join(id, at);
        }
        if !episode.partition_holds() {
            stats.violations += 1;
        }

        let done = episode.a.clock.is_done();
        for (c, picks) in chosen.into_iter().enumerate() {
            for (id, pick) in picks.into_iter().enumerate() {
                let Some((s, a)) = pick else { continue };
                let left = c == 0 && quitting.contains(&id);
                let agent = &mut agents.agents[id];
                agent.buffer.push(Transition {
                    state: s,
                    action: Action::Discrete(a),
                    reward: rewards[c][id],
                    next_state: local_state(episode.copy(c), id),
                    terminal: done || left,
                    tag: Tag {
                        stream: c as u32,
                        agent: id as u32,
                    },
                });
                stats.pushed[id][c] += 1;
                stats.returns[id] += rewards[c][id];
            }
        }

        if train && slot.is_multiple_of(cfg.train_every) {
            for agent in &mut agents.agents {
                if agent.buffer.len() >= threshold {
                    stats.losses.push(agent.train_step(cfg.batch, rng)?);
                }
            }
        }
    }
    Ok(stats)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarlEpisodeRecord {
    pub episode: usize,
    pub epsilon: f64,
    #[serde(rename = "return")]
    pub episode_return: f64,
    pub mean_served_a: f64,
    pub mean_served_b: f64,
    pub loss: f64,
    pub violations: usize,
    pub order: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct MarlOutcome {
    pub agents: DqnAgentSet,
    pub curve: Vec<MarlEpisodeRecord>,
    pub violations: usize,
}

impl MarlOutcome {
    pub fn curve_csv(&self) -> String {
        let mut out = String::from("episode,epsilon,return,mean_served_a,mean_served_b,loss,violations\n");
        for r in &self.curve {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.episode, r.epsilon, r.episode_return, r.mean_served_a, r.mean_served_b, r.loss, r.violations
            ));
        }
        out
    }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn mean_usize(v: &[usize]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<usize>() as f64 / v.len() as f64
    }
}

/// Trains one agent per UAV over `episodes` dual-copy episodes with fresh
/// random quit schedules.
pub fn train_marl(scenario: &ScenarioConfig, cfg: &MarlConfig, episodes: usize, seed: u64) -> Result<MarlOutcome> {
    scenario.validate()?;
    let n = scenario.uavs.count;
    let mut init = seed::rng(seed, &[INIT_STREAM]);
    let mut agents = DqnAgentSet::new(n, n + 3, cfg, &mut init)?;
    let mut act = seed::rng(seed, &[ACT_STREAM]);
    let mut curve = Vec::with_capacity(episodes);
    let mut violations = 0;
    for ep in 0..episodes {
        let mut srng = seed::rng(seed, &[SCHEDULE_STREAM, ep as u64]);
        let schedule = random_schedule(n, scenario.world.slots, &mut srng);
        let mut episode = DualCopyEpisode::new(
            scenario,
            seed::derive(seed, &[COPY_A, ep as u64]),
            seed::derive(seed, &[COPY_B, ep as u64]),
            schedule.clone(),
        )?;
        let eps = cfg.epsilon(ep, episodes);
        let stats = run_dual_episode(&mut agents, &mut episode, eps, true, false, &mut act)?;
        violations += stats.violations;
        curve.push(MarlEpisodeRecord {
            episode: ep,
            epsilon: eps,
            episode_return: stats.returns.iter().sum(),
            mean_served_a: mean_usize(&stats.served[0]),
            mean_served_b: mean_usize(&stats.served[1]),
            loss: mean(&stats.losses),
            violations: stats.violations,
            order: schedule.order,
        });
    }
    Ok(MarlOutcome {
        agents,
        curve,
        violations,
    })
}
