//! Hour-scale serve / charge / idle scheduling.

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mapping::{baseline_min_uavs, MappingTable};
use crate::config::ScenarioConfig;
use crate::ddpg::{apc_run, ApcOutcome, Budget, DdpgConfig, EnvStep, Environment};
use crate::energy::{energy_to_charge, step_battery, EnergyModel};
use crate::error::{Error, Result};
use crate::nn::Mlp;
use crate::seed;
use crate::world::{Position, Uav, UavStatus};

pub const ENUMERATION_LIMIT: u128 = 1_000_000;
const JITTER_STREAM: u64 = 0x5C;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchedStatus {
    Serve,
    Charge,
    Idle,
}

impl SchedStatus {
    pub const ALL: [SchedStatus; 3] = [SchedStatus::Serve, SchedStatus::Charge, SchedStatus::Idle];

    pub fn name(self) -> &'static str {
        match self {
            SchedStatus::Serve => "SERVE",
            SchedStatus::Charge => "CHARGE",
            SchedStatus::Idle => "IDLE",
        }
    }

    fn one_hot(self) -> [f64; 3] {
        match self {
            SchedStatus::Serve => [1.0, 0.0, 0.0],
            SchedStatus::Charge => [0.0, 1.0, 0.0],
            SchedStatus::Idle => [0.0, 0.0, 1.0],
        }
    }

    fn world_status(self) -> UavStatus {
        match self {
            SchedStatus::Serve => UavStatus::Serving,
            SchedStatus::Charge => UavStatus::Charging,
            SchedStatus::Idle => UavStatus::Idle,
        }
    }
}

/// Energy rules shared by the repair step and the environment.
#[derive(Debug, Clone, PartialEq)]
pub struct RepairRules {
    pub energy: EnergyModel,
    pub serve_altitude: f64,
    pub theta_charge: f64,
    pub theta_serve: f64,
}

impl RepairRules {
    pub fn altitude(&self, s: SchedStatus) -> f64 {
        match s {
            SchedStatus::Serve => self.serve_altitude,
            SchedStatus::Charge => self.energy.cloud_top,
            SchedStatus::Idle => 0.0,
        }
    }

    /// Battery after spending hour `hour_of_day` in `next`, coming from
    /// `prev`. Entering CHARGE pays the climb; descending is free.
    pub fn step(&self, battery: f64, prev: SchedStatus, next: SchedStatus, hour_of_day: f64) -> f64 {
        let mut b = battery;
        if next == SchedStatus::Charge && prev != SchedStatus::Charge {
            b -= energy_to_charge(self.altitude(prev), &self.energy);
        }
        let uav = self.uav(b.max(0.0), next);
        step_battery(&uav, 0.0, &self.energy, hour_of_day)
    }

    fn uav(&self, battery: f64, s: SchedStatus) -> Uav {
        Uav {
            id: 0,
            position: Position {
                x: 0.0,
                y: 0.0,
                z: self.altitude(s),
            },
            battery,
            status: s.world_status(),
            join_countdown: 0,
        }
    }

    pub fn sustainable(&self, battery: f64, s: SchedStatus) -> bool {
        battery >= energy_to_charge(self.altitude(s), &self.energy) + self.energy.reserve()
    }

    /// Whether one more hour in `next` still leaves enough to climb.
    fn survives(&self, battery: f64, prev: SchedStatus, next: SchedStatus, hour_of_day: f64) -> bool {
        self.sustainable(self.step(battery, prev, next, hour_of_day), next)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Repair {
    pub statuses: Vec<SchedStatus>,
    /// UAVs forced to charge by the sustainability rule.
    pub forced: Vec<usize>,
    /// Set when fewer than `k_min` UAVs could serve.
    pub shortfall: Option<usize>,
}

/// Maps scores in `[0, 1]` to a status assignment:
///
/// 1. UAVs that would be unsustainable after one more serving hour charge.
/// 2. The `k_min` highest-scoring remaining UAVs serve (ties to the lower id).
/// 3. Others serve if `score ≥ θ_serve`, charge if `score < θ_charge`, and
///    idle otherwise. A UAV that could not afford an idle hour charges
///    instead.
pub fn relax_and_repair(
    scores: &[f64],
    batteries: &[f64],
    current: &[SchedStatus],
    k_min: usize,
    hour_of_day: f64,
    rules: &RepairRules,
) -> Repair {
    let n = scores.len();
    let mut statuses = vec![SchedStatus::Charge; n];
    let forced: Vec<usize> = (0..n)
        .filter(|&i| !rules.survives(batteries[i], current[i], SchedStatus::Serve, hour_of_day))
        .collect();
    let mut free: Vec<usize> = (0..n).filter(|i| !forced.contains(i)).collect();
    free.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let serving = k_min.min(free.len());
    for &i in &free[..serving] {
        statuses[i] = SchedStatus::Serve;
    }
    for &i in &free[serving..] {
        let s = scores[i];
        statuses[i] = if s >= rules.theta_serve {
            SchedStatus::Serve
        } else if s < rules.theta_charge
            || !rules.survives(batteries[i], current[i], SchedStatus::Idle, hour_of_day)
        {
            SchedStatus::Charge
        } else {
            SchedStatus::Idle
        };
    }
    Repair {
        statuses,
        forced,
        shortfall: (free.len() < k_min).then(|| k_min - free.len()),
    }
}

/// `(1−coeff)·served/demand`, plus `coeff·Σb/(N·B_max)` on the last hour.
pub fn scheduler_reward(served: usize, demand: usize, batteries: &[f64], b_max: f64, last_hour: bool, coeff: f64) -> f64 {
    let service = if demand == 0 {
        0.0
    } else {
        served as f64 / demand as f64
    };
    let mut r = (1.0 - coeff) * service;
    if last_hour && !batteries.is_empty() {
        r += coeff * batteries.iter().sum::<f64>() / (batteries.len() as f64 * b_max);
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    ServiceFloor,
    Sustainability,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub hour: usize,
    pub kind: ViolationKind,
    pub uav: Option<usize>,
}

/// Everything the scheduler needs, resolved from a scenario and a mapping
/// table.
#[derive(Debug, Clone, PartialEq)]
pub struct SchedulerSpec {
    pub n: usize,
    pub hours: usize,
    pub start_hour: usize,
    pub demand: Vec<usize>,
    pub k_min: Vec<usize>,
    pub map: MappingTable,
    pub rules: RepairRules,
    pub initial_battery: Vec<f64>,
    pub initial_status: SchedStatus,
    pub battery_jitter: f64,
    pub p_min: f64,
    pub coeff: f64,
    pub penalty: f64,
}

impl SchedulerSpec {
    /// Refuses scenarios whose service floor cannot be met in some hour.
    pub fn new(scenario: &ScenarioConfig, map: MappingTable) -> Result<Self> {
        scenario.validate()?;
        let sc = &scenario.scheduler;
        let n = scenario.uavs.count;
        if map.n_max() != n || map.hours() != sc.hours {
            return Err(Error::Shape {
                expected: (n + 1) * sc.hours,
                found: map.users.len() * map.hours(),
            });
        }
        let demand = sc.demand(scenario.users.total);
        let k_min = baseline_min_uavs(&map, &demand, sc.p_min)?;
        Ok(SchedulerSpec {
            n,
            hours: sc.hours,
            start_hour: sc.start_hour,
            demand,
            k_min,
            map,
            rules: RepairRules {
                energy: scenario.energy.clone(),
                serve_altitude: scenario.uavs.altitude,
                theta_charge: sc.theta_charge,
                theta_serve: sc.theta_serve,
            },
            initial_battery: scenario.uavs.initial_batteries(scenario.energy.b_max),
            initial_status: sc.initial_status,
            battery_jitter: sc.battery_jitter,
            p_min: sc.p_min,
            coeff: sc.coeff,
            penalty: sc.violation_penalty,
        })
    }

    /// Mid-hour time of day of scheduling hour `h`, used for solar input.
    pub fn solar_hour(&self, h: usize) -> f64 {
        ((self.start_hour + h) % 24) as f64 + 0.5
    }

    pub fn served(&self, serving: usize, h: usize) -> usize {
        self.map.get(serving, h).min(self.demand[h])
    }

    pub fn observation_dim(&self) -> usize {
        4 * self.n + 1
    }
}

/// Outcome of one scheduled hour.
#[derive(Debug, Clone, PartialEq)]
pub struct HourOutcome {
    pub served: usize,
    pub reward: f64,
    pub violation: Option<Violation>,
    pub done: bool,
}

/// The scheduling environment: one episode is one planning horizon.
#[derive(Debug, Clone)]
pub struct SchedulerEnv {
    pub spec: SchedulerSpec,
    pub batteries: Vec<f64>,
    pub statuses: Vec<SchedStatus>,
    pub hour: usize,
    pub done: bool,
    last: Option<Repair>,
    last_outcome: Option<HourOutcome>,
}

impl SchedulerEnv {
    pub fn new(spec: SchedulerSpec) -> Self {
        let mut env = SchedulerEnv {
            batteries: Vec::new(),
            statuses: Vec::new(),
            hour: 0,
            done: false,
            last: None,
            last_outcome: None,
            spec,
        };
        env.restart(0);
        env
    }

    fn restart(&mut self, seed: u64) {
        let b_max = self.spec.rules.energy.b_max;
        self.batteries = self.spec.initial_battery.clone();
        if self.spec.battery_jitter > 0.0 {
            let mut rng = seed::rng(seed, &[JITTER_STREAM]);
            let j = self.spec.battery_jitter * b_max;
            for b in &mut self.batteries {
                *b = (*b + rng.random_range(-j..=j)).clamp(0.0, b_max);
            }
        }
        self.statuses = vec![self.spec.initial_status; self.spec.n];
        self.hour = 0;
        self.done = false;
        self.last = None;
        self.last_outcome = None;
    }

    pub fn state(&self) -> Vec<f64> {
        let b_max = self.spec.rules.energy.b_max;
        let mut s = Vec::with_capacity(self.spec.observation_dim());
        for (b, st) in self.batteries.iter().zip(&self.statuses) {
            s.push((b / b_max).clamp(0.0, 1.0));
            s.extend(st.one_hot());
        }
        s.push((self.hour as f64 / self.spec.hours as f64).min(1.0));
        s
    }

    pub fn last_repair(&self) -> Option<&Repair> {
        self.last.as_ref()
    }

    pub fn last_outcome(&self) -> Option<&HourOutcome> {
        self.last_outcome.as_ref()
    }

    /// Repairs actor scores into statuses for the current hour.
    pub fn repair(&self, scores: &[f64]) -> Repair {
        relax_and_repair(
            scores,
            &self.batteries,
            &self.statuses,
            self.spec.k_min[self.hour],
            self.spec.solar_hour(self.hour),
            &self.spec.rules,
        )
    }

    /// Applies a status assignment for the current hour, as is.
    pub fn apply(&mut self, statuses: &[SchedStatus]) -> Result<HourOutcome> {
        if self.done {
            return Err(Error::Domain("scheduling episode already finished".into()));
        }
        if statuses.len() != self.spec.n {
            return Err(Error::Shape {
                expected: self.spec.n,
                found: statuses.len(),
            });
        }
        let h = self.hour;
        let t = self.spec.solar_hour(h);
        for i in 0..self.spec.n {
            self.batteries[i] = self.spec.rules.step(self.batteries[i], self.statuses[i], statuses[i], t);
        }
        self.statuses = statuses.to_vec();
        let serving = statuses.iter().filter(|&&s| s == SchedStatus::Serve).count();
        let served = self.spec.served(serving, h);
        let demand = self.spec.demand[h];

        let violation = if (served as f64) < self.spec.p_min * demand as f64 - 1e-9 {
            Some(Violation {
                hour: h,
                kind: ViolationKind::ServiceFloor,
                uav: None,
            })
        } else {
            (0..self.spec.n)
                .find(|&i| !self.spec.rules.sustainable(self.batteries[i], statuses[i]))
                .map(|i| Violation {
                    hour: h,
                    kind: ViolationKind::Sustainability,
                    uav: Some(i),
                })
        };

        self.hour += 1;
        let last = self.hour == self.spec.hours;
        let b_max = self.spec.rules.energy.b_max;
        let reward = match violation {
            Some(_) => scheduler_reward(served, demand, &self.batteries, b_max, false, self.spec.coeff) - self.spec.penalty,
            None => scheduler_reward(served, demand, &self.batteries, b_max, last, self.spec.coeff),
        };
        self.done = last || violation.is_some();
        let out = HourOutcome {
            served,
            reward,
            violation,
            done: self.done,
        };
        self.last_outcome = Some(out.clone());
        Ok(out)
    }
}

impl Environment for SchedulerEnv {
    fn observation_dim(&self) -> usize {
        self.spec.observation_dim()
    }

    fn action_dim(&self) -> usize {
        self.spec.n
    }

    fn fingerprint(&self) -> String {
        format!("{:?}", self.spec)
    }

    fn reset(&mut self, seed: u64) -> Result<Vec<f64>> {
        self.restart(seed);
        Ok(self.state())
    }

    fn step(&mut self, action: &[f64]) -> Result<EnvStep> {
        if action.len() != self.spec.n {
            return Err(Error::Shape {
                expected: self.spec.n,
                found: action.len(),
            });
        }
        let scores: Vec<f64> = action.iter().map(|a| (a.clamp(-1.0, 1.0) + 1.0) / 2.0).collect();
        let repair = self.repair(&scores);
        let out = self.apply(&repair.statuses)?;
        self.last = Some(repair);
        Ok(EnvStep {
            next_state: self.state(),
            reward: out.reward,
            done: out.done,
            served: out.served,
        })
    }
}

/// A per-UAV, per-hour status plan and its consequences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargeProfile {
    /// `status[i][h]`.
    pub status: Vec<Vec<SchedStatus>>,
    /// Batteries before the first hour.
    pub start_battery: Vec<f64>,
    /// Battery of UAV `i` at the end of hour `h`.
    pub battery: Vec<Vec<f64>>,
    pub served: Vec<usize>,
    pub demand: Vec<usize>,
    pub violations: Vec<Violation>,
    pub objective: f64,
}

impl ChargeProfile {
    pub fn total_served(&self) -> usize {
        self.served.iter().sum()
    }

    /// Battery summed over UAVs at the end of the last played hour.
    pub fn final_energy(&self) -> f64 {
        self.battery.iter().filter_map(|b| b.last()).sum()
    }

    pub fn hours_played(&self) -> usize {
        self.served.len()
    }

    /// `uav,hour,status,battery` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("uav,hour,status,battery\n");
        for (i, (st, b)) in self.status.iter().zip(&self.battery).enumerate() {
            for (h, (s, v)) in st.iter().zip(b).enumerate() {
                let _ = writeln!(out, "{i},{h},{},{v}", s.name());
            }
        }
        out
    }
}

fn empty_profile(env: &SchedulerEnv) -> ChargeProfile {
    let n = env.spec.n;
    ChargeProfile {
        status: vec![Vec::new(); n],
        start_battery: env.batteries.clone(),
        battery: vec![Vec::new(); n],
        served: Vec::new(),
        demand: Vec::new(),
        violations: Vec::new(),
        objective: 0.0,
    }
}

fn record(profile: &mut ChargeProfile, env: &SchedulerEnv, statuses: &[SchedStatus], out: &HourOutcome) {
    for i in 0..statuses.len() {
        profile.status[i].push(statuses[i]);
        profile.battery[i].push(env.batteries[i]);
    }
    profile.served.push(out.served);
    profile.demand.push(env.spec.demand[env.hour - 1]);
    profile.violations.extend(out.violation);
    profile.objective += out.reward;
}

/// Plays a fixed plan, `plan[h][i]`, stopping at the first violation.
pub fn evaluate_profile(spec: &SchedulerSpec, plan: &[Vec<SchedStatus>]) -> Result<ChargeProfile> {
    let mut env = SchedulerEnv::new(spec.clone());
    let mut profile = empty_profile(&env);
    for statuses in plan {
        if env.done {
            break;
        }
        let out = env.apply(statuses)?;
        record(&mut profile, &env, statuses, &out);
    }
    Ok(profile)
}

/// Plays the noise-free actor policy through the repair step.
pub fn run_policy(spec: &SchedulerSpec, actor: &Mlp, seed: u64) -> Result<ChargeProfile> {
    let mut env = SchedulerEnv::new(spec.clone());
    let mut s = env.reset(seed)?;
    let mut profile = empty_profile(&env);
    while !env.done {
        let a = actor.forward(&s)?;
        s = env.step(&a)?.next_state;
        let out = env.last_outcome.clone().expect("stepped");
        let statuses = env.statuses.clone();
        record(&mut profile, &env, &statuses, &out);
    }
    Ok(profile)
}

/// Exhaustive search over all `3^(N·H)` plans with the environment's
/// dynamics. Plans that hit a violation end there, so every continuation of
/// a violating prefix shares its value.
pub fn enumerate_optimal(spec: &SchedulerSpec) -> Result<ChargeProfile> {
    let size = 3u128.checked_pow((spec.n * spec.hours) as u32).unwrap_or(u128::MAX);
    if size > ENUMERATION_LIMIT {
        return Err(Error::TooLarge {
            size,
            limit: ENUMERATION_LIMIT,
        });
    }
    let combos: Vec<Vec<SchedStatus>> = (0..3usize.pow(spec.n as u32))
        .map(|mut c| {
            (0..spec.n)
                .map(|_| {
                    let s = SchedStatus::ALL[c % 3];
                    c /= 3;
                    s
                })
                .collect()
        })
        .collect();

    struct Search<'a> {
        combos: &'a [Vec<SchedStatus>],
        best_value: f64,
        best_plan: Vec<Vec<SchedStatus>>,
        plan: Vec<Vec<SchedStatus>>,
    }
    fn dfs(s: &mut Search, env: &SchedulerEnv, value: f64) -> Result<()> {
        if env.done {
            if value > s.best_value {
                s.best_value = value;
                s.best_plan = s.plan.clone();
            }
            return Ok(());
        }
        for c in s.combos {
            let mut next = env.clone();
            let out = next.apply(c)?;
            s.plan.push(c.clone());
            dfs(s, &next, value + out.reward)?;
            s.plan.pop();
        }
        Ok(())
    }
    let mut search = Search {
        combos: &combos,
        best_value: f64::NEG_INFINITY,
        best_plan: Vec::new(),
        plan: Vec::new(),
    };
    dfs(&mut search, &SchedulerEnv::new(spec.clone()), 0.0)?;
    evaluate_profile(spec, &search.best_plan)
}

#[derive(Debug, Clone)]
pub struct SchedulerOutcome {
    pub training: ApcOutcome,
    pub profile: ChargeProfile,
}

/// Trains the scheduler's actor and plays its greedy profile.
pub fn train_scheduler(
    spec: &SchedulerSpec,
    cfg: &DdpgConfig,
    episodes: usize,
    workers: usize,
    seed: u64,
) -> Result<SchedulerOutcome> {
    let env = SchedulerEnv::new(spec.clone());
    let training = apc_run(env, workers, cfg.clone(), seed, Budget::episodes(episodes))?;
    let profile = run_policy(spec, &training.agent.actor.net, 0)?;
    Ok(SchedulerOutcome { training, profile })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solar::MappingBackend;

    fn rules() -> RepairRules {
        RepairRules {
            energy: EnergyModel::default(),
            serve_altitude: 100.0,
            theta_charge: 0.5,
            theta_serve: 0.8,
        }
    }

    #[test]
    fn equal_scores_pick_lowest_ids() {
        let r = relax_and_repair(&[0.5; 4], &[500.0; 4], &[SchedStatus::Idle; 4], 2, 12.5, &rules());
        use SchedStatus::*;
        assert_eq!(r.statuses, vec![Serve, Serve, Idle, Idle]);
        assert!(r.forced.is_empty() && r.shortfall.is_none());
    }

    #[test]
    fn rule_application_example() {
        let r = relax_and_repair(&[0.9, 0.2, 0.6], &[500.0; 3], &[SchedStatus::Idle; 3], 1, 12.5, &rules());
        use SchedStatus::*;
        assert_eq!(r.statuses, vec![Serve, Charge, Idle]);
    }

    #[test]
    fn boundary_uav_is_forced_to_charge() {
        // Serving needs 190 (climb from 100 m) + 10 (reserve) after the 6 Wh hour.
        let rl = rules();
        let r = relax_and_repair(&[1.0, 0.1], &[205.9, 500.0], &[SchedStatus::Serve; 2], 1, 12.5, &rl);
        assert_eq!(r.forced, vec![0]);
        assert_eq!(r.statuses, vec![SchedStatus::Charge, SchedStatus::Serve]);
        let ok = relax_and_repair(&[1.0, 0.1], &[206.0, 500.0], &[SchedStatus::Serve; 2], 1, 12.5, &rl);
        assert!(ok.forced.is_empty());
    }

    #[test]
    fn shortfall_is_reported() {
        let r = relax_and_repair(&[0.5; 2], &[100.0, 500.0], &[SchedStatus::Serve; 2], 2, 12.5, &rules());
        assert_eq!(r.shortfall, Some(1));
    }

    #[test]
    fn reward_examples() {
        let b = [500.0, 500.0];
        assert_eq!(scheduler_reward(30, 60, &b, 500.0, true, 0.0), 0.5);
        assert_eq!(scheduler_reward(30, 60, &b, 500.0, false, 1.0), 0.0);
        assert_eq!(scheduler_reward(30, 60, &[250.0, 500.0], 500.0, true, 1.0), 0.75);
        for coeff in [0.0, 0.3, 1.0] {
            let h = 5;
            let total: f64 = (0..h).map(|i| scheduler_reward(10, 10, &b, 500.0, i == h - 1, coeff)).sum();
            assert!((total - ((1.0 - coeff) * h as f64 + coeff)).abs() < 1e-12);
        }
    }

    fn toy_spec(n: usize, hours: usize, start: usize, users: Vec<usize>) -> SchedulerSpec {
        let mut rows = vec![vec![0; hours]];
        for k in 1..=n {
            rows.push(vec![users[k.min(users.len() - 1)]; hours]);
        }
        let map = MappingTable {
            backend: rows.iter().map(|r| vec![MappingBackend::Oracle; r.len()]).collect(),
            users: rows,
        };
        SchedulerSpec {
            n,
            hours,
            start_hour: start,
            demand: vec![users[users.len() - 1]; hours],
            k_min: vec![0; hours],
            map,
            rules: rules(),
            initial_battery: vec![400.0; n],
            initial_status: SchedStatus::Idle,
            battery_jitter: 0.0,
            p_min: 0.0,
            coeff: 0.5,
            penalty: 1.0,
        }
    }

    #[test]
    fn no_demand_never_serves() {
        let mut spec = toy_spec(1, 1, 22, vec![0, 0]);
        spec.demand = vec![0];
        let best = enumerate_optimal(&spec).unwrap();
        assert_ne!(best.status[0][0], SchedStatus::Serve);
    }

    #[test]
    fn daytime_energy_objective_charges() {
        let mut spec = toy_spec(1, 2, 11, vec![0, 10]);
        spec.coeff = 1.0;
        spec.initial_status = SchedStatus::Charge;
        spec.initial_battery = vec![300.0];
        let best = enumerate_optimal(&spec).unwrap();
        assert_eq!(best.status[0], vec![SchedStatus::Charge, SchedStatus::Charge]);
    }

    #[test]
    fn size_guard() {
        let spec = toy_spec(3, 10, 0, vec![0, 5]);
        assert!(matches!(enumerate_optimal(&spec), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn enumeration_agrees_with_replay() {
        let mut spec = toy_spec(2, 3, 8, vec![0, 6, 10]);
        spec.p_min = 0.5;
        spec.k_min = vec![1; 3];
        let best = enumerate_optimal(&spec).unwrap();
        let plan: Vec<Vec<SchedStatus>> = (0..best.hours_played())
            .map(|h| (0..2).map(|i| best.status[i][h]).collect())
            .collect();
        let replay = evaluate_profile(&spec, &plan).unwrap();
        assert_eq!(replay, best);
        assert!(best.violations.is_empty());
    }
}
