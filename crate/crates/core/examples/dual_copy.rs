//! Train one deep Q-learner per UAV on two complementary copies of the
//! world, then check that the copies always split the crew and that quit
//! orders look uniform.
//!
//! cargo run --release --example dual_copy [episodes] [seed]

use std::time::Instant;

use statrs::distribution::{ChiSquared, ContinuousCDF};
use ucn::config::ExperimentConfig;
use ucn::marl::train_marl;

fn main() -> ucn::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let mut cfg = ExperimentConfig::from_toml(include_str!("../scenarios/crew_handoff.toml"))?;
    if let Some(e) = args.get(1) {
        cfg.run.episodes = e.parse().expect("episodes");
    }
    if let Some(s) = args.get(2) {
        cfg.run.seed = s.parse().expect("seed");
    }
    let start = Instant::now();
    let out = train_marl(&cfg.scenario, &cfg.agent.marl, cfg.run.episodes, cfg.run.seed)?;
    println!("trained {} episodes in {:.1?}", out.curve.len(), start.elapsed());
    for r in out.curve.iter().step_by((out.curve.len() / 10).max(1)) {
        println!(
            "  episode {:4}  eps {:.2}  return {:8.3}  served A {:5.1}  B {:5.1}",
            r.episode, r.epsilon, r.episode_return, r.mean_served_a, r.mean_served_b
        );
    }
    println!("partition violations: {}", out.violations);

    // id × position-in-order table; independence of rows and columns.
    let n = cfg.scenario.uavs.count;
    let mut table = vec![vec![0.0; n]; n];
    for r in &out.curve {
        for (pos, &id) in r.order.iter().enumerate() {
            table[id][pos] += 1.0;
        }
    }
    let expected = out.curve.len() as f64 / n as f64;
    let stat: f64 = table.iter().flatten().map(|o| (o - expected).powi(2) / expected).sum();
    let dof = ((n - 1) * (n - 1)) as f64;
    let p = 1.0 - ChiSquared::new(dof).expect("dof").cdf(stat);
    println!("quit order chi-square {stat:.2} on {dof} dof, p = {p:.3}");
    Ok(())
}
