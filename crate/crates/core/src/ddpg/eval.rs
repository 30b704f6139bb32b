use serde::{Deserialize, Serialize};

use super::env::{encode_state, to_moves};
use crate::config::ScenarioConfig;
use crate::coverage::{count_served, Site};
use crate::error::{Error, Result};
use crate::geom::Point;
use crate::nn::Mlp;
use crate::trace::{rollout, EventWindow, Rollout};
use crate::world::{init_world, WorldState};

/// How the evaluated policy is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyMode {
    /// The policy controls every slot.
    Full,
    /// The policy controls until the crew first changes, then every UAV
    /// holds its position.
    FreezeAfterEvent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub seed: u64,
    pub rollout: Rollout,
    pub windows: Vec<EventWindow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub seed: u64,
    pub mean_served: f64,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub windows: Vec<EventWindow>,
}

impl EvalResult {
    pub fn summary(&self) -> EvalSummary {
        EvalSummary {
            seed: self.seed,
            mean_served: self.rollout.mean_served(),
            windows: self.windows.clone(),
        }
    }
}

/// Noise-free displacement for every UAV id.
pub fn policy_moves(actor: &Mlp, world: &WorldState) -> Result<Vec<Point>> {
    let a = actor.forward(&encode_state(world))?;
    Ok(to_moves(&a, world.rules.d_max))
}

/// Rolls out a policy on one seed.
pub fn rollout_policy(actor: &Mlp, scenario: &ScenarioConfig, seed: u64, mode: PolicyMode) -> Result<Rollout> {
    let world = init_world(scenario, seed)?;
    let mut crew = world.active_set();
    let mut frozen = false;
    rollout(world, |w| {
        if mode == PolicyMode::FreezeAfterEvent && !frozen {
            let now = w.active_set();
            frozen = now != crew;
            crew = now;
        }
        if frozen {
            Ok(vec![Point::ZERO; w.n_max()])
        } else {
            policy_moves(actor, w)
        }
    })
}

/// Noise-free rollouts on each seed, with served-user windows of `window`
/// slots around every crew event.
pub fn evaluate(
    actor: &Mlp,
    scenario: &ScenarioConfig,
    seeds: &[u64],
    window: usize,
    mode: PolicyMode,
) -> Result<Vec<EvalResult>> {
    seeds
        .iter()
        .map(|&seed| {
            let rollout = rollout_policy(actor, scenario, seed, mode)?;
            let windows = rollout.event_windows(window);
            Ok(EvalResult { seed, rollout, windows })
        })
        .collect()
}

/// Mean served users of the best fixed position on a `grid × grid` lattice
/// of cell centers, for a one-UAV scenario on one seed. Users are the same
/// draws a rollout on that seed sees.
pub fn placement_oracle(scenario: &ScenarioConfig, seed: u64, grid: usize) -> Result<f64> {
    if scenario.uavs.count != 1 || grid == 0 {
        return Err(Error::Domain("placement oracle needs one UAV and a non-empty grid".into()));
    }
    let mut world = init_world(scenario, seed)?;
    let (w, h) = (world.region.width, world.region.height);
    let cells: Vec<Point> = (0..grid * grid)
        .map(|i| {
            Point::new(
                (i % grid) as f64 * w / grid as f64 + w / (2.0 * grid as f64),
                (i / grid) as f64 * h / grid as f64 + h / (2.0 * grid as f64),
            )
        })
        .collect();
    let mut totals = vec![0usize; cells.len()];
    let mut slots = 0;
    while !world.clock.is_done() {
        world.advance_slot(&[Point::ZERO])?;
        let users = world.sample_users();
        for (c, total) in cells.iter().zip(&mut totals) {
            let site = Site {
                id: 0,
                position: *c,
                altitude: scenario.uavs.altitude,
            };
            *total += count_served(&users, &[site], &scenario.coverage).total;
        }
        slots += 1;
    }
    Ok(totals.into_iter().max().unwrap_or(0) as f64 / slots.max(1) as f64)
}
