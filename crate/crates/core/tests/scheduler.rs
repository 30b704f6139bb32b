use std::sync::OnceLock;

use proptest::prelude::*;
use rand::Rng;

use ucn::config::ExperimentConfig;
use ucn::seed;
use ucn::solar::{
    build_mapping, enumerate_optimal, evaluate_profile, relax_and_repair, scheduler_reward, SchedStatus, SchedulerEnv,
    SchedulerSpec, ViolationKind,
};

fn spec(text: &str) -> SchedulerSpec {
    let cfg = ExperimentConfig::from_toml(text).unwrap();
    let sc = &cfg.scenario;
    let map = build_mapping(sc, sc.scheduler.mapping_backend, &cfg.agent.ddpg).unwrap();
    SchedulerSpec::new(sc, map).unwrap()
}

fn toy() -> SchedulerSpec {
    spec(include_str!("../scenarios/solar_toy.toml"))
}

/// Objective of a plan, replayed step by step from the energy rules.
fn replay(spec: &SchedulerSpec, plan: &[Vec<SchedStatus>]) -> f64 {
    let mut b = spec.initial_battery.clone();
    let mut prev = vec![spec.initial_status; spec.n];
    let b_max = spec.rules.energy.b_max;
    let mut total = 0.0;
    for (h, st) in plan.iter().enumerate() {
        for i in 0..spec.n {
            b[i] = spec.rules.step(b[i], prev[i], st[i], spec.solar_hour(h));
        }
        let served = spec.served(st.iter().filter(|&&s| s == SchedStatus::Serve).count(), h);
        let floor = (served as f64) < spec.p_min * spec.demand[h] as f64 - 1e-9;
        let broken = floor || (0..spec.n).any(|i| !spec.rules.sustainable(b[i], st[i]));
        let last = h + 1 == spec.hours;
        total += scheduler_reward(served, spec.demand[h], &b, b_max, last && !broken, spec.coeff);
        if broken {
            return total - spec.penalty;
        }
        prev = st.clone();
    }
    total
}

#[test]
fn enumeration_agrees_with_rollouts_on_random_profiles() {
    let spec = toy();
    let best = enumerate_optimal(&spec).unwrap();
    let best_plan: Vec<Vec<SchedStatus>> = (0..best.hours_played()).map(|h| (0..spec.n).map(|i| best.status[i][h]).collect()).collect();
    assert!((replay(&spec, &best_plan) - best.objective).abs() < 1e-12);

    let mut rng = seed::rng(4, &[]);
    for _ in 0..100 {
        let plan: Vec<Vec<SchedStatus>> = (0..spec.hours)
            .map(|_| (0..spec.n).map(|_| SchedStatus::ALL[rng.random_range(0..3)]).collect())
            .collect();
        let p = evaluate_profile(&spec, &plan).unwrap();
        assert!((p.objective - replay(&spec, &plan)).abs() < 1e-12, "{plan:?}");
        assert!(p.objective <= best.objective + 1e-12);
        assert!(p.violations.len() <= 1);
        if let Some(v) = p.violations.first() {
            assert_eq!(v.hour + 1, p.hours_played());
        }
    }
}

#[test]
fn enumeration_beats_every_fixed_profile_it_could_have_chosen() {
    let spec = toy();
    let best = enumerate_optimal(&spec).unwrap();
    for s in [SchedStatus::Serve, SchedStatus::Charge, SchedStatus::Idle] {
        let plan = vec![vec![s; spec.n]; spec.hours];
        assert!(evaluate_profile(&spec, &plan).unwrap().objective <= best.objective);
    }
}

fn desk() -> SchedulerSpec {
    static DESK: OnceLock<SchedulerSpec> = OnceLock::new();
    DESK.get_or_init(|| spec(include_str!("../scenarios/solar_desk.toml"))).clone()
}

fn statuses() -> impl Strategy<Value = SchedStatus> {
    prop::sample::select(SchedStatus::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn repair_is_rank_based_for_the_floor(
        scores in prop::collection::vec(0.0..1.0f64, 4),
        batteries in prop::collection::vec(0.0..150.0f64, 4),
        current in prop::collection::vec(statuses(), 4),
        k_min in 0usize..=4,
        hour in 6usize..20,
        scale in 0.01..100.0f64,
    ) {
        let rules = desk().rules;
        let t = hour as f64 + 0.5;
        let a = relax_and_repair(&scores, &batteries, &current, k_min, t, &rules);
        let again = relax_and_repair(&scores, &batteries, &current, k_min, t, &rules);
        prop_assert_eq!(&a, &again);
        let scaled: Vec<f64> = scores.iter().map(|s| s * scale).collect();
        let b = relax_and_repair(&scaled, &batteries, &current, k_min, t, &rules);
        prop_assert_eq!(&a.forced, &b.forced);
        prop_assert_eq!(a.shortfall, b.shortfall);

        // The floor set: the top free UAVs by score, ties to the lower id.
        let mut free: Vec<usize> = (0..4).filter(|i| !a.forced.contains(i)).collect();
        free.sort_by(|&x, &y| scores[y].total_cmp(&scores[x]).then(x.cmp(&y)));
        for &i in free.iter().take(k_min) {
            prop_assert_eq!(a.statuses[i], SchedStatus::Serve);
            prop_assert_eq!(b.statuses[i], SchedStatus::Serve);
        }
        for &i in &a.forced {
            prop_assert_eq!(a.statuses[i], SchedStatus::Charge);
        }
        prop_assert_eq!(a.shortfall.is_some(), free.len() < k_min);
    }

    #[test]
    fn repaired_hours_meet_the_floor_when_enough_uavs_can_serve(
        scores in prop::collection::vec(prop::collection::vec(0.0..1.0f64, 4), 14),
        start in prop::collection::vec(20.0..150.0f64, 4),
    ) {
        let mut spec = desk();
        spec.initial_battery = start;
        spec.battery_jitter = 0.0;
        let mut env = SchedulerEnv::new(spec);
        for s in &scores {
            if env.done {
                break;
            }
            let r = env.repair(s);
            let out = env.apply(&r.statuses).unwrap();
            if r.shortfall.is_none() {
                prop_assert!(
                    out.violation.is_none_or(|v| v.kind == ViolationKind::Sustainability && r.forced.contains(&v.uav.unwrap())),
                    "{:?} {:?}", out.violation, r
                );
            } else {
                prop_assert!(out.violation.is_some());
            }
        }
    }
}
