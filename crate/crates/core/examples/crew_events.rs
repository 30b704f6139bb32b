//! A hand-driven crew: three UAVs head for their clusters, one runs its
//! battery down and quits, and a scripted join brings it back with notice.
//! Prints one line per slot.
//!
//! cargo run --release --example crew_events [seed]

use ucn::config::ExperimentConfig;
use ucn::geom::Point;
use ucn::trace::rollout;
use ucn::world::{init_world, UavStatus};

const SCENARIO: &str = r#"
[scenario.world]
slots = 30
slot_duration = 600.0
start_hour = 9.0
d_max = 60.0

[scenario.users]
total = 90
clusters = [
    { center = [250.0, 500.0], std_dev = 40.0, weight = 0.25 },
    { center = [500.0, 250.0], std_dev = 40.0, weight = 0.5 },
    { center = [750.0, 500.0], std_dev = 40.0, weight = 0.25 },
]

[scenario.uavs]
count = 3
start_positions = [[500.0, 500.0], [500.0, 500.0], [500.0, 500.0]]
initial_battery = [500.0, 500.0, 33.0]

[scenario.coverage]
capacity = 30

[[scenario.events]]
kind = "join"
uav = 2
at_slot = 18
notice = 3
"#;

fn main() -> ucn::Result<()> {
    let seed = std::env::args().nth(1).map_or(0, |s| s.parse().expect("seed"));
    let cfg = ExperimentConfig::from_toml(SCENARIO)?;
    let world = init_world(&cfg.scenario, seed)?;
    let targets: Vec<Point> = cfg.scenario.users.clusters.iter().map(|c| c.center).collect();
    let run = rollout(world, |w| {
        Ok(w.uavs
            .iter()
            .map(|u| targets[u.id % targets.len()] - u.position.ground())
            .collect())
    })?;

    println!("slot  served/users  uav0          uav1          uav2          events");
    for r in &run.records {
        let uavs: Vec<String> = r
            .uavs
            .iter()
            .map(|u| {
                let s = match u.status {
                    UavStatus::Serving => "S",
                    UavStatus::Away => "A",
                    UavStatus::Charging => "C",
                    UavStatus::Idle => "I",
                };
                format!("{s} {:>4.0}Wh    ", u.battery)
            })
            .collect();
        let events: Vec<String> = r.event_fired.iter().map(|e| format!("{:?} uav{} ({:?})", e.kind, e.uav, e.cause)).collect();
        println!("{:>4}  {:>5}/{:<6}  {}{}", r.slot, r.served_count, r.users, uavs.concat(), events.join(", "));
    }
    println!("mean served {:.1}", run.mean_served());
    for w in run.event_windows(5) {
        println!(
            "{:?} uav{} at slot {}: {:.1} served before, {:.1} after",
            w.event.kind, w.event.uav, w.slot, w.pre_mean, w.post_mean
        );
    }
    Ok(())
}
