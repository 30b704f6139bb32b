//! Per-hour mapping from the number of serving UAVs to the users they can
//! serve.

use std::fmt::Write as _;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::coverage::{count_served, CoverageModel, Site};
use crate::ddpg::{apc_run, policy_moves, Budget, DdpgConfig, PositioningEnv};
use crate::error::{Error, Result};
use crate::geom::Point;
use crate::seed;
use crate::trace::rollout;
use crate::world::{init_world, Region, UserField};

const USERS_STREAM: u64 = 0x50;
const RESTART_STREAM: u64 = 0x51;
const LLOYD_ITERATIONS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MappingBackend {
    Oracle,
    Ddpg,
}

impl MappingBackend {
    pub fn name(self) -> &'static str {
        match self {
            MappingBackend::Oracle => "oracle",
            MappingBackend::Ddpg => "ddpg",
        }
    }
}

/// `users[k][h]`: users servable by `k` UAVs in scheduling hour `h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingTable {
    pub users: Vec<Vec<usize>>,
    /// Backend that produced each cell's value (a running maximum may carry
    /// the value of a smaller `k`).
    pub backend: Vec<Vec<MappingBackend>>,
}

impl MappingTable {
    pub fn n_max(&self) -> usize {
        self.users.len().saturating_sub(1)
    }

    pub fn hours(&self) -> usize {
        self.users.first().map_or(0, Vec::len)
    }

    pub fn get(&self, k: usize, h: usize) -> usize {
        self.users[k.min(self.n_max())][h]
    }

    pub fn is_monotone(&self) -> bool {
        self.users.windows(2).all(|w| w[0].iter().zip(&w[1]).all(|(a, b)| a <= b))
            && self.users.first().is_none_or(|row| row.iter().all(|&u| u == 0))
    }

    /// Running maximum over `k`.
    fn enforce_monotone(&mut self) {
        for k in 1..self.users.len() {
            for h in 0..self.hours() {
                if self.users[k][h] < self.users[k - 1][h] {
                    self.users[k][h] = self.users[k - 1][h];
                    self.backend[k][h] = self.backend[k - 1][h];
                }
            }
        }
    }

    /// `k,hour,users,backend` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,hour,users,backend\n");
        for (k, row) in self.users.iter().enumerate() {
            for (h, u) in row.iter().enumerate() {
                let _ = writeln!(out, "{k},{h},{u},{}", self.backend[k][h].name());
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut cells = Vec::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            let parse = |s: &str| {
                s.parse::<usize>()
                    .map_err(|e| Error::config(format!("mapping CSV line {}: {e}", i + 1)))
            };
            if f.len() != 4 {
                return Err(Error::config(format!("mapping CSV line {} needs 4 fields", i + 1)));
            }
            let backend = match f[3] {
                "oracle" => MappingBackend::Oracle,
                "ddpg" => MappingBackend::Ddpg,
                other => return Err(Error::config(format!("mapping CSV line {}: unknown backend {other}", i + 1))),
            };
            cells.push((parse(f[0])?, parse(f[1])?, parse(f[2])?, backend));
        }
        let n = cells.iter().map(|c| c.0).max().map_or(0, |k| k + 1);
        let hours = cells.iter().map(|c| c.1).max().map_or(0, |h| h + 1);
        if cells.len() != n * hours {
            return Err(Error::config(format!(
                "mapping CSV holds {} cells, expected {n} x {hours}",
                cells.len()
            )));
        }
        let mut table = MappingTable {
            users: vec![vec![0; hours]; n],
            backend: vec![vec![MappingBackend::Oracle; hours]; n],
        };
        for (k, h, u, b) in cells {
            table.users[k][h] = u;
            table.backend[k][h] = b;
        }
        if !table.is_monotone() {
            return Err(Error::config("mapping table is not monotone in k"));
        }
        Ok(table)
    }
}

fn sites(centers: &[Point], altitude: f64) -> Vec<Site> {
    centers
        .iter()
        .enumerate()
        .map(|(id, &position)| Site { id, position, altitude })
        .collect()
}

fn served(users: &[Point], centers: &[Point], altitude: f64, cov: &CoverageModel) -> usize {
    count_served(users, &sites(centers, altitude), cov).total
}

/// k-means placement (best of `restarts` random restarts), followed by a
/// coordinate hill climb on the served count.
pub fn oracle_placement(
    users: &[Point],
    k: usize,
    altitude: f64,
    cov: &CoverageModel,
    region: &Region,
    restarts: usize,
    seed: u64,
) -> (Vec<Point>, usize) {
    if k == 0 || users.is_empty() {
        return (vec![region.center(); k], 0);
    }
    let mut best = (Vec::new(), 0usize);
    for r in 0..restarts.max(1) {
        let mut rng = seed::rng(seed, &[RESTART_STREAM, r as u64]);
        let picks = index::sample(&mut rng, users.len(), k.min(users.len()));
        let mut centers: Vec<Point> = picks.iter().map(|i| users[i]).collect();
        while centers.len() < k {
            centers.push(region.center());
        }
        for _ in 0..LLOYD_ITERATIONS {
            let mut sum = vec![(Point::ZERO, 0usize); k];
            for &u in users {
                let j = (0..k)
                    .min_by(|&a, &b| u.dist_sq(centers[a]).total_cmp(&u.dist_sq(centers[b])))
                    .expect("k > 0");
                sum[j].0 = sum[j].0 + u;
                sum[j].1 += 1;
            }
            let next: Vec<Point> = sum
                .iter()
                .zip(&centers)
                .map(|(&(s, n), &c)| if n == 0 { c } else { s.scale(1.0 / n as f64) })
                .collect();
            if next == centers {
                break;
            }
            centers = next;
        }
        let (centers, value) = polish(users, centers, altitude, cov, region);
        if value > best.1 || best.0.is_empty() {
            best = (centers, value);
        }
    }
    best
}

fn polish(users: &[Point], mut centers: Vec<Point>, altitude: f64, cov: &CoverageModel, region: &Region) -> (Vec<Point>, usize) {
    let mut value = served(users, &centers, altitude, cov);
    let mut step = 40.0;
    while step >= 2.5 {
        let mut improved = true;
        while improved {
            improved = false;
            for j in 0..centers.len() {
                for d in [Point::new(step, 0.0), Point::new(-step, 0.0), Point::new(0.0, step), Point::new(0.0, -step)] {
                    let old = centers[j];
                    centers[j] = region.clamp(old + d);
                    let v = served(users, &centers, altitude, cov);
                    if v > value {
                        value = v;
                        improved = true;
                    } else {
                        centers[j] = old;
                    }
                }
            }
        }
        step /= 2.0;
    }
    (centers, value)
}

/// Best placement of `k` UAVs over all combinations of the cell centers of a
/// `grid` x `grid` lattice (with repetition).
pub fn grid_search_best(users: &[Point], k: usize, altitude: f64, cov: &CoverageModel, region: &Region, grid: usize) -> usize {
    let points: Vec<Point> = (0..grid * grid)
        .map(|i| {
            Point::new(
                (i % grid) as f64 * region.width / grid as f64 + region.width / (2.0 * grid as f64),
                (i / grid) as f64 * region.height / grid as f64 + region.height / (2.0 * grid as f64),
            )
        })
        .collect();
    #[allow(clippy::too_many_arguments)]
    fn rec(
        users: &[Point],
        points: &[Point],
        from: usize,
        left: usize,
        chosen: &mut Vec<Point>,
        altitude: f64,
        cov: &CoverageModel,
        best: &mut usize,
    ) {
        if left == 0 {
            *best = (*best).max(served(users, chosen, altitude, cov));
            return;
        }
        for i in from..points.len() {
            chosen.push(points[i]);
            rec(users, points, i, left - 1, chosen, altitude, cov, best);
            chosen.pop();
        }
    }
    let mut best = 0;
    rec(users, &points, 0, k, &mut Vec::new(), altitude, cov, &mut best);
    best
}

/// Users active in scheduling hour `h`, drawn from the scenario's mixture.
pub(crate) fn hour_users(scenario: &ScenarioConfig, demand: usize, h: usize) -> Vec<Point> {
    let field = UserField {
        clusters: scenario.users.clusters.clone(),
        total_users: demand,
        demand_profile: vec![1.0; 24],
    };
    let region = Region {
        width: scenario.world.width,
        height: scenario.world.height,
    };
    let mut rng = seed::rng(scenario.scheduler.mapping_seed, &[USERS_STREAM, h as u64]);
    field.draw(demand, 0, &region, &mut rng)
}

/// Builds the table for `k = 0..=uavs.count` and every scheduling hour.
pub fn build_mapping(scenario: &ScenarioConfig, backend: MappingBackend, agent: &DdpgConfig) -> Result<MappingTable> {
    scenario.validate()?;
    let sc = &scenario.scheduler;
    let n = scenario.uavs.count;
    let demand = sc.demand(scenario.users.total);
    let region = Region {
        width: scenario.world.width,
        height: scenario.world.height,
    };
    let mut table = MappingTable {
        users: vec![vec![0; sc.hours]; n + 1],
        backend: vec![vec![backend; sc.hours]; n + 1],
    };
    for (h, &d) in demand.iter().enumerate() {
        let users = hour_users(scenario, d, h);
        for k in 1..=n {
            table.users[k][h] = match backend {
                MappingBackend::Oracle => {
                    let cell_seed = seed::derive(sc.mapping_seed, &[k as u64, h as u64]);
                    oracle_placement(&users, k, scenario.uavs.altitude, &scenario.coverage, &region, sc.mapping_restarts, cell_seed).1
                }
                MappingBackend::Ddpg => learned_cell(scenario, agent, k, d, h)?,
            };
        }
    }
    table.enforce_monotone();
    Ok(table)
}

/// Trains a positioning agent for `k` UAVs and `demand` static users and
/// reports the best served count of its noise-free rollout.
fn learned_cell(scenario: &ScenarioConfig, agent: &DdpgConfig, k: usize, demand: usize, h: usize) -> Result<usize> {
    if demand == 0 {
        return Ok(0);
    }
    let sc = &scenario.scheduler;
    let mut cell = scenario.clone();
    cell.events.clear();
    cell.uavs.count = k;
    cell.uavs.start_positions.clear();
    cell.uavs.initial_status.clear();
    cell.uavs.initial_battery = None;
    cell.users.total = demand;
    cell.users.demand_profile = None;
    for c in &mut cell.users.clusters {
        c.velocity = Point::ZERO;
    }
    cell.world.slots = sc.mapping_slots;
    let env = PositioningEnv::new(cell.clone(), agent.oob_penalty)?;
    let run_seed = seed::derive(sc.mapping_seed, &[k as u64, h as u64]);
    let out = apc_run(env, 1, agent.clone(), run_seed, Budget::episodes(sc.mapping_episodes))?;
    let world = init_world(&cell, run_seed)?;
    let r = rollout(world, |w| policy_moves(&out.agent.actor.net, w))?;
    Ok(r.served.iter().copied().max().unwrap_or(0))
}

/// Least `k` per hour with `U[k][h] ≥ p_min·demand[h]`.
pub fn baseline_min_uavs(map: &MappingTable, demand: &[usize], p_min: f64) -> Result<Vec<usize>> {
    if !map.is_monotone() {
        return Err(Error::Domain("mapping table is not monotone in k".into()));
    }
    if demand.len() != map.hours() {
        return Err(Error::Shape {
            expected: map.hours(),
            found: demand.len(),
        });
    }
    demand
        .iter()
        .enumerate()
        .map(|(h, &d)| {
            let need = p_min * d as f64;
            (0..=map.n_max())
                .find(|&k| map.users[k][h] as f64 >= need - 1e-9)
                .ok_or_else(|| Error::Infeasible {
                    hour: h,
                    reason: format!(
                        "{} UAVs serve at most {} of {d} users, below the floor of {need:.1}",
                        map.n_max(),
                        map.users[map.n_max()][h]
                    ),
                })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::Cluster;

    fn table(rows: Vec<Vec<usize>>) -> MappingTable {
        let p = rows.iter().map(|r| vec![MappingBackend::Oracle; r.len()]).collect();
        MappingTable { users: rows, backend: p }
    }

    #[test]
    fn baseline_examples() {
        let t = table(vec![vec![0], vec![40], vec![75], vec![95]]);
        assert_eq!(baseline_min_uavs(&t, &[100], 0.7).unwrap(), vec![2]);
        assert_eq!(baseline_min_uavs(&t, &[100], 0.0).unwrap(), vec![0]);
        let err = baseline_min_uavs(&t, &[200], 0.7).unwrap_err();
        assert!(matches!(err, Error::Infeasible { hour: 0, .. }));
    }

    #[test]
    fn csv_round_trip_and_shape() {
        let mut sc = ScenarioConfig::default();
        sc.uavs.count = 2;
        sc.users.total = 30;
        sc.scheduler.hours = 3;
        sc.scheduler.mapping_restarts = 2;
        let t = build_mapping(&sc, MappingBackend::Oracle, &DdpgConfig::default()).unwrap();
        let csv = t.to_csv();
        assert_eq!(csv.lines().count(), 1 + 3 * 3);
        assert_eq!(MappingTable::from_csv(&csv).unwrap(), t);
        assert!(t.is_monotone());
        assert!(t.users[0].iter().all(|&u| u == 0));
    }

    #[test]
    fn single_point_crowd_is_fully_served() {
        let users = vec![Point::new(300.0, 300.0); 12];
        let cov = CoverageModel { capacity: 20, ..Default::default() };
        let region = Region { width: 1000.0, height: 1000.0 };
        let (_, v) = oracle_placement(&users, 1, 100.0, &cov, &region, 3, 0);
        assert_eq!(v, 12);
    }

    #[test]
    fn running_max_restores_monotonicity() {
        let mut t = table(vec![vec![0, 0], vec![10, 7], vec![9, 12]]);
        t.backend[1][0] = MappingBackend::Ddpg;
        t.enforce_monotone();
        assert_eq!(t.users, vec![vec![0, 0], vec![10, 7], vec![10, 12]]);
        assert_eq!(t.backend[2][0], MappingBackend::Ddpg);
    }

    #[test]
    fn oracle_is_close_to_a_grid_search_on_two_clusters() {
        let region = Region { width: 1000.0, height: 1000.0 };
        let field = UserField {
            clusters: vec![
                Cluster { center: Point::new(300.0, 600.0), velocity: Point::ZERO, std_dev: 70.0, weight: 0.6 },
                Cluster { center: Point::new(700.0, 300.0), velocity: Point::ZERO, std_dev: 90.0, weight: 0.4 },
            ],
            total_users: 50,
            demand_profile: vec![1.0; 24],
        };
        let users = field.draw(50, 0, &region, &mut seed::rng(12, &[]));
        let cov = CoverageModel { capacity: 25, ..Default::default() };
        let (_, mine) = oracle_placement(&users, 2, 100.0, &cov, &region, 10, 3);
        let grid = grid_search_best(&users, 2, 100.0, &cov, &region, 20);
        assert!(mine as f64 >= 0.98 * grid as f64, "oracle {mine} vs grid {grid}");
    }
}
