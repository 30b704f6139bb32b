//! A UAV quits mid-episode. Compare the trained policy with the same policy
//! frozen in place from the moment the crew changes.
//!
//! cargo run --release --example responsive_quit [episodes] [seed]

use std::time::Instant;

use ucn::config::ExperimentConfig;
use ucn::ddpg::{apc_run, evaluate, Budget, PolicyMode, PositioningEnv};

fn main() -> ucn::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let mut cfg = ExperimentConfig::from_toml(include_str!("../scenarios/quit_response.toml"))?;
    if let Some(e) = args.get(1) {
        cfg.run.episodes = e.parse().expect("episodes");
    }
    if let Some(s) = args.get(2) {
        cfg.run.seed = s.parse().expect("seed");
    }
    let a = &cfg.agent.ddpg;
    let start = Instant::now();
    let mut env = PositioningEnv::new(cfg.scenario.clone(), a.oob_penalty)?;
    if a.event_boost {
        env = env.with_event_boost(a.boost_factor, a.boost_window);
    }
    let out = apc_run(env, cfg.run.workers, a.clone(), cfg.run.seed, Budget::episodes(cfg.run.episodes))?;
    println!("trained {} episodes in {:.1?}", cfg.run.episodes, start.elapsed());
    for r in out.curve.iter().step_by((cfg.run.episodes / 10).max(1)) {
        println!("  episode {:4}  return {:7.3}  served {:5.2}", r.episode, r.episode_return, r.mean_served);
    }
    let actor = &out.agent.actor.net;
    let seeds = &cfg.run.eval_seeds;
    let full = evaluate(actor, &cfg.scenario, seeds, 10, PolicyMode::Full)?;
    let frozen = evaluate(actor, &cfg.scenario, seeds, 10, PolicyMode::FreezeAfterEvent)?;
    for (f, z) in full.iter().zip(&frozen) {
        let (wf, wz) = (&f.windows[0], &z.windows[0]);
        println!(
            "seed {}: before {:.1}, after {:.1} (frozen {:.1}), final x {:?}",
            f.seed,
            wf.pre_mean,
            wf.post_mean,
            wz.post_mean,
            f.rollout.final_positions.iter().map(|p| p.x.round()).collect::<Vec<_>>()
        );
    }
    Ok(())
}
