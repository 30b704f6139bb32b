use rand::seq::IndexedRandom;
use rand::Rng;

use super::agent::DqnAgentSet;
use super::{discrete_actions, local_state};
use crate::config::{EventConfig, ScenarioConfig};
use crate::ddpg::PolicyMode;
use crate::error::{Error, Result};
use crate::geom::Point;
use crate::trace::{rollout, EventWindow, Rollout};
use crate::world::{init_world, CrewEventKind};

#[derive(Debug, Clone, PartialEq)]
pub struct MarlEvalResult {
    pub seed: u64,
    pub rollout: Rollout,
    pub windows: Vec<EventWindow>,
    /// Ground positions at the end of each phase between crew changes.
    pub phase_positions: Vec<Vec<Point>>,
}

/// `changes` crew changes at distinct random slots. Each change quits a
/// random serving UAV, or brings back a random away one; the crew never drops
/// below one UAV.
pub fn random_crew_script<R: Rng + ?Sized>(n: usize, slots: usize, changes: usize, rng: &mut R) -> Vec<EventConfig> {
    let mut at: Vec<usize> = rand::seq::index::sample(rng, slots.saturating_sub(2).max(1), changes.min(slots.saturating_sub(2)))
        .into_iter()
        .map(|s| s + 1)
        .collect();
    at.sort_unstable();
    let mut active: Vec<usize> = (0..n).collect();
    let mut away: Vec<usize> = Vec::new();
    let mut script = Vec::with_capacity(at.len());
    for slot in at {
        let quit = away.is_empty() || (active.len() > 1 && rng.random_bool(0.5));
        let (from, to, kind) = if quit {
            (&mut active, &mut away, CrewEventKind::Quit)
        } else {
            (&mut away, &mut active, CrewEventKind::Join)
        };
        if quit && from.len() <= 1 {
            continue;
        }
        let id = *from.choose(rng).expect("non-empty");
        from.retain(|&x| x != id);
        to.push(id);
        script.push(EventConfig {
            kind,
            uav: id,
            at_slot: Some(slot),
            battery_below: None,
            notice: 0,
        });
    }
    script
}

/// Greedy rollouts of every agent on its local state.
pub fn evaluate_random_crew(
    agents: &DqnAgentSet,
    scenario: &ScenarioConfig,
    seeds: &[u64],
    window: usize,
    mode: PolicyMode,
) -> Result<Vec<MarlEvalResult>> {
    if agents.len() != scenario.uavs.count {
        return Err(Error::Shape {
            expected: scenario.uavs.count,
            found: agents.len(),
        });
    }
    let actions = discrete_actions(agents.cfg.step);
    seeds
        .iter()
        .map(|&seed| {
            let world = init_world(scenario, seed)?;
            let mut crew = world.active_set();
            let mut frozen = false;
            let rollout = rollout(world, |w| {
                if mode == PolicyMode::FreezeAfterEvent && !frozen {
                    let now = w.active_set();
                    frozen = now != crew;
                    crew = now;
                }
                (0..w.n_max())
                    .map(|id| {
                        if frozen || !w.is_active(id) {
                            Ok(Point::ZERO)
                        } else {
                            Ok(actions[agents.agents[id].greedy(&local_state(w, id))?])
                        }
                    })
                    .collect()
            })?;
            let windows = rollout.event_windows(window);
            let mut phase_positions: Vec<Vec<Point>> = rollout
                .events
                .iter()
                .map(|&(slot, _)| slot)
                .filter(|&s| s > 0)
                .map(|s| rollout.records[s - 1].uavs.iter().map(|u| Point::new(u.x, u.y)).collect())
                .collect();
            phase_positions.push(rollout.final_positions.clone());
            Ok(MarlEvalResult {
                seed,
                rollout,
                windows,
                phase_positions,
            })
        })
        .collect()
}
