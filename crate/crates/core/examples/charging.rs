//! Charging profiles for solar UAVs: mapping table, minimum-UAV baseline,
//! a trained scheduler and, on a toy instance, the brute-force optimum.
//!
//! cargo run --release --example charging [seed] [coeff] [episodes]

use std::time::Instant;

use ucn::config::ExperimentConfig;
use ucn::solar::{baseline_min_uavs, build_mapping, enumerate_optimal, train_scheduler, SchedulerSpec};

fn main() -> ucn::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let seed: u64 = args.get(1).map_or(0, |s| s.parse().expect("seed"));
    for (name, text) in [
        ("day", include_str!("../scenarios/solar_desk.toml")),
        ("toy", include_str!("../scenarios/solar_toy.toml")),
    ] {
        let mut cfg = ExperimentConfig::from_toml(text)?;
        if let Some(c) = args.get(2) {
            cfg.scenario.scheduler.coeff = c.parse().expect("coeff");
        }
        if let Some(e) = args.get(3) {
            cfg.run.episodes = e.parse().expect("episodes");
        }
        let sc = &cfg.scenario;
        let map = build_mapping(sc, sc.scheduler.mapping_backend, &cfg.agent.ddpg)?;
        let demand = sc.scheduler.demand(sc.users.total);
        let k_min = baseline_min_uavs(&map, &demand, sc.scheduler.p_min)?;
        println!("[{name}] demand {demand:?}");
        println!("[{name}] k_min  {k_min:?}");
        let spec = SchedulerSpec::new(sc, map)?;
        let start = Instant::now();
        let out = train_scheduler(&spec, &cfg.agent.scheduler, cfg.run.episodes, 1, seed)?;
        let p = &out.profile;
        println!(
            "[{name}] trained in {:.1?}: objective {:.3}, served {}, final energy {:.1}, violations {}",
            start.elapsed(),
            p.objective,
            p.total_served(),
            p.final_energy(),
            p.violations.len()
        );
        for (i, row) in p.status.iter().enumerate() {
            let s: String = row.iter().map(|s| &s.name()[..1]).collect();
            println!("[{name}]   uav {i}: {s}");
        }
        if name == "toy" {
            let best = enumerate_optimal(&spec)?;
            println!("[{name}] optimum {:.3}, ratio {:.3}", best.objective, p.objective / best.objective);
            for (i, row) in best.status.iter().enumerate() {
                let s: String = row.iter().map(|s| &s.name()[..1]).collect();
                println!("[{name}]   uav {i}: {s}");
            }
        }
    }
    Ok(())
}
