//! Train one UAV to hover over a crowd and compare it with the best fixed
//! spot on a 20×20 grid.
//!
//! cargo run --release --example positioning [episodes] [seed]

use std::time::Instant;

use ucn::config::ExperimentConfig;
use ucn::ddpg::{apc_run, evaluate, placement_oracle, Budget, PolicyMode, PositioningEnv};

fn main() -> ucn::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let mut cfg = ExperimentConfig::from_toml(include_str!("../scenarios/single_cluster.toml"))?;
    if let Some(e) = args.get(1) {
        cfg.run.episodes = e.parse().expect("episodes");
    }
    if let Some(s) = args.get(2) {
        cfg.run.seed = s.parse().expect("seed");
    }
    let start = Instant::now();
    let env = PositioningEnv::new(cfg.scenario.clone(), cfg.agent.ddpg.oob_penalty)?;
    let out = apc_run(env, 1, cfg.agent.ddpg.clone(), cfg.run.seed, Budget::episodes(cfg.run.episodes))?;
    println!("trained {} episodes in {:.1?}", cfg.run.episodes, start.elapsed());
    for r in out.curve.iter().step_by((cfg.run.episodes / 10).max(1)) {
        println!("  episode {:4}  return {:7.3}  served {:5.2}", r.episode, r.episode_return, r.mean_served);
    }
    let seeds = &cfg.run.eval_seeds;
    let results = evaluate(&out.agent.actor.net, &cfg.scenario, seeds, 0, PolicyMode::Full)?;
    for r in results {
        let oracle = placement_oracle(&cfg.scenario, r.seed, 20)?;
        let served = r.rollout.mean_served();
        let end = r.rollout.final_positions[0];
        println!(
            "seed {}: served {served:.2}, grid oracle {oracle:.2}, ratio {:.3}, final position ({:.0}, {:.0})",
            r.seed,
            served / oracle,
            end.x,
            end.y
        );
    }
    Ok(())
}
