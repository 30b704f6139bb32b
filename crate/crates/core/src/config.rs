//! Scenario and experiment configuration.
//!
//! Configs are TOML documents. Every field has a default and unknown keys are
//! rejected, so a typo surfaces as an error naming the key and its line.
//! `--set key=value` style overrides are applied on the parsed document before
//! it is turned into typed structs.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coverage::CoverageModel;
use crate::ddpg::DdpgConfig;
use crate::energy::EnergyModel;
use crate::error::{Error, Result};
use crate::geom::Point;
use crate::marl::MarlConfig;
use crate::solar::SchedulerConfig;
use crate::world::{Cluster, CrewEventKind, Region, UavStatus};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WorldParams {
    pub width: f64,
    pub height: f64,
    /// Slots per episode.
    pub slots: usize,
    /// Seconds per slot.
    pub slot_duration: f64,
    /// Time of day at slot 0, hours.
    pub start_hour: f64,
    /// Maximum displacement per slot, meters.
    pub d_max: f64,
}

impl Default for WorldParams {
    fn default() -> Self {
        WorldParams {
            width: 1000.0,
            height: 1000.0,
            slots: 100,
            slot_duration: 10.0,
            start_hour: 12.0,
            d_max: 30.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UsersConfig {
    pub total: usize,
    pub clusters: Vec<Cluster>,
    /// Active fraction per hour of day (24 values). Absent means always 1.
    pub demand_profile: Option<Vec<f64>>,
}

impl Default for UsersConfig {
    fn default() -> Self {
        // Four clusters drifting towards the center at 1 m/slot.
        let center = Point::new(500.0, 500.0);
        let clusters = [(250.0, 250.0), (750.0, 250.0), (250.0, 750.0), (750.0, 750.0)]
            .into_iter()
            .map(|(x, y)| {
                let c = Point::new(x, y);
                let dir = center - c;
                Cluster {
                    center: c,
                    velocity: dir.scale(1.0 / dir.norm()),
                    std_dev: 60.0,
                    weight: 0.25,
                }
            })
            .collect();
        UsersConfig {
            total: 100,
            clusters,
            demand_profile: None,
        }
    }
}

impl UsersConfig {
    pub fn demand_profile(&self) -> Vec<f64> {
        self.demand_profile.clone().unwrap_or_else(|| vec![1.0; 24])
    }
}

/// A value given once for the whole fleet or once per UAV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerUav {
    Uniform(f64),
    Each(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UavFleetConfig {
    /// Maximum crew size; ids are `0..count`.
    pub count: usize,
    /// Serving altitude, meters.
    pub altitude: f64,
    /// Empty means evenly spaced on a circle around the region center.
    pub start_positions: Vec<Point>,
    /// Wh; absent means full.
    pub initial_battery: Option<PerUav>,
    /// Empty means every UAV starts serving.
    pub initial_status: Vec<UavStatus>,
    /// Where joining UAVs appear; absent means the middle of the west edge.
    pub spawn_position: Option<Point>,
    /// Wh; absent means full.
    pub joiner_battery: Option<f64>,
    pub quit_threshold_fraction: f64,
}

impl Default for UavFleetConfig {
    fn default() -> Self {
        UavFleetConfig {
            count: 5,
            altitude: 100.0,
            start_positions: Vec::new(),
            initial_battery: None,
            initial_status: Vec::new(),
            spawn_position: None,
            joiner_battery: None,
            quit_threshold_fraction: 0.05,
        }
    }
}

impl UavFleetConfig {
    pub fn start_positions(&self, region: &Region) -> Vec<Point> {
        if !self.start_positions.is_empty() {
            return self.start_positions.clone();
        }
        let c = region.center();
        let r = 0.25 * region.width.min(region.height);
        (0..self.count)
            .map(|i| {
                if self.count == 1 {
                    return c;
                }
                let a = 2.0 * PI * i as f64 / self.count as f64;
                Point::new(c.x + r * a.cos(), c.y + r * a.sin())
            })
            .collect()
    }

    pub fn initial_statuses(&self) -> Vec<UavStatus> {
        if self.initial_status.is_empty() {
            vec![UavStatus::Serving; self.count]
        } else {
            self.initial_status.clone()
        }
    }

    pub fn initial_batteries(&self, b_max: f64) -> Vec<f64> {
        match &self.initial_battery {
            None => vec![b_max; self.count],
            Some(PerUav::Uniform(b)) => vec![*b; self.count],
            Some(PerUav::Each(v)) => v.clone(),
        }
    }

    pub fn spawn_position(&self, region: &Region) -> Point {
        self.spawn_position
            .unwrap_or(Point::new(0.0, region.height / 2.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventConfig {
    pub kind: CrewEventKind,
    pub uav: usize,
    #[serde(default)]
    pub at_slot: Option<usize>,
    /// Wh; quit events only.
    #[serde(default)]
    pub battery_below: Option<f64>,
    /// Join events only: slots of advance notice (countdown length).
    #[serde(default)]
    pub notice: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub world: WorldParams,
    pub users: UsersConfig,
    pub uavs: UavFleetConfig,
    pub events: Vec<EventConfig>,
    pub coverage: CoverageModel,
    pub energy: EnergyModel,
    pub scheduler: SchedulerConfig,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let w = &self.world;
        if !(w.width > 0.0 && w.height > 0.0) {
            return Err(Error::config(format!(
                "world region must be positive, got {} x {}",
                w.width, w.height
            )));
        }
        if w.slots == 0 {
            return Err(Error::config("world.slots must be at least 1"));
        }
        if !(w.slot_duration > 0.0) {
            return Err(Error::config("world.slot_duration must be positive"));
        }
        if !(w.d_max > 0.0) {
            return Err(Error::config("world.d_max must be positive"));
        }

        let u = &self.users;
        if u.clusters.is_empty() {
            return Err(Error::config("users.clusters must not be empty"));
        }
        let weight_sum: f64 = u.clusters.iter().map(|c| c.weight).sum();
        if (weight_sum - 1.0).abs() > 1e-6 || u.clusters.iter().any(|c| c.weight < 0.0) {
            return Err(Error::config(format!(
                "users.clusters weights must be non-negative and sum to 1, got {weight_sum}"
            )));
        }
        if u.clusters.iter().any(|c| !(c.std_dev > 0.0)) {
            return Err(Error::config("users.clusters std_dev must be positive"));
        }
        if let Some(p) = &u.demand_profile {
            if p.len() != 24 || p.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::config(
                    "users.demand_profile must hold 24 values in [0, 1]",
                ));
            }
        }

        let f = &self.uavs;
        if f.count == 0 {
            return Err(Error::config("uavs.count must be at least 1"));
        }
        if !(f.altitude > 0.0) {
            return Err(Error::config("uavs.altitude must be positive"));
        }
        let region = Region {
            width: w.width,
            height: w.height,
        };
        if !f.start_positions.is_empty() {
            if f.start_positions.len() != f.count {
                return Err(Error::config(format!(
                    "uavs.start_positions lists {} entries for {} UAVs",
                    f.start_positions.len(),
                    f.count
                )));
            }
            if let Some(p) = f.start_positions.iter().find(|p| !region.contains(**p)) {
                return Err(Error::config(format!(
                    "uavs.start_positions entry {p:?} lies outside the region"
                )));
            }
        }
        if !f.initial_status.is_empty() && f.initial_status.len() != f.count {
            return Err(Error::config("uavs.initial_status must list one status per UAV"));
        }
        let batteries = f.initial_batteries(self.energy.b_max);
        if batteries.len() != f.count
            || batteries.iter().any(|b| !(0.0..=self.energy.b_max).contains(b))
        {
            return Err(Error::config(format!(
                "uavs.initial_battery must give {} values in [0, {}]",
                f.count, self.energy.b_max
            )));
        }
        if !(0.0..1.0).contains(&f.quit_threshold_fraction) {
            return Err(Error::config("uavs.quit_threshold_fraction must lie in [0, 1)"));
        }

        for (i, e) in self.events.iter().enumerate() {
            if e.uav >= f.count {
                return Err(Error::config(format!(
                    "events[{i}] references UAV {} but only {} exist",
                    e.uav, f.count
                )));
            }
            match (e.kind, e.at_slot, e.battery_below) {
                (_, None, None) => {
                    return Err(Error::config(format!("events[{i}] needs at_slot or battery_below")))
                }
                (CrewEventKind::Join, None, Some(_)) => {
                    return Err(Error::config(format!(
                        "events[{i}]: join events are triggered by at_slot only"
                    )))
                }
                _ => {}
            }
        }

        self.coverage.validate()?;
        self.energy.validate()?;
        self.scheduler.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct AgentConfig {
    pub ddpg: DdpgConfig,
    pub marl: MarlConfig,
    /// DDPG settings for the charging scheduler.
    pub scheduler: DdpgConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub episodes: usize,
    pub workers: usize,
    pub seed: u64,
    pub eval_seeds: Vec<u64>,
    pub out: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            episodes: 300,
            workers: 1,
            seed: 0,
            eval_seeds: vec![1000, 1001, 1002, 1003, 1004],
            out: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    pub agent: AgentConfig,
    pub run: RunConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Self::from_toml_with(text, &[])
    }

    /// Parses a config and applies `key=value` overrides on dotted paths
    /// such as `agent.ddpg.actor_lr=3e-4`.
    pub fn from_toml_with(text: &str, overrides: &[String]) -> Result<Self> {
        let parsed: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        if overrides.is_empty() {
            parsed.scenario.validate()?;
            return Ok(parsed);
        }
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::config(e.to_string()))?;
        for ov in overrides {
            apply_override(&mut table, ov)?;
        }
        let cfg: ExperimentConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::config(format!("after overrides {overrides:?}: {e}")))?;
        cfg.scenario.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_with(&text, overrides)
            .map_err(|e| Error::config(format!("{}: {}", path.display(), strip_prefix(e))))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical TOML echo, hex encoded.
    pub fn hash(&self) -> String {
        hex_digest(self.to_toml().as_bytes())
    }
}

fn strip_prefix(e: Error) -> String {
    match e {
        Error::Config(m) => m,
        other => other.to_string(),
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn apply_override(table: &mut toml::Table, ov: &str) -> Result<()> {
    let (key, raw) = ov
        .split_once('=')
        .ok_or_else(|| Error::config(format!("override `{ov}` is not key=value")))?;
    let key = key.trim();
    let value = parse_value(raw.trim());
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts
        .pop()
        .filter(|s| !s.is_empty())
        .ok_or_else(|| Error::config(format!("override `{ov}` has an empty key")))?;
    let mut cursor = table;
    for part in parts {
        let entry = cursor
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = entry
            .as_table_mut()
            .ok_or_else(|| Error::config(format!("override key `{key}`: `{part}` is not a table")))?;
    }
    cursor.insert(last.to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = ExperimentConfig::from_toml("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.scenario.uavs.count, 5);
        assert_eq!(cfg.scenario.world.slots, 100);
    }

    #[test]
    fn unknown_key_is_named_with_line() {
        let err = ExperimentConfig::from_toml("[scenario.world]\nwidth = 10.0\nwidht = 3.0\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("widht"), "{err}");
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn overrides_reach_nested_keys() {
        let cfg = ExperimentConfig::from_toml_with(
            "[run]\nepisodes = 5\n",
            &[
                "scenario.scheduler.coeff=0.9".into(),
                "run.workers=4".into(),
                "scenario.uavs.count = 3".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.scenario.scheduler.coeff, 0.9);
        assert_eq!(cfg.run.workers, 4);
        assert_eq!(cfg.run.episodes, 5);
        assert_eq!(cfg.scenario.uavs.count, 3);
    }

    #[test]
    fn unknown_override_key_is_rejected() {
        let err = ExperimentConfig::from_toml_with("", &["run.epsiodes=3".into()])
            .unwrap_err()
            .to_string();
        assert!(err.contains("epsiodes"), "{err}");
        assert!(ExperimentConfig::from_toml_with("", &["novalue".into()]).is_err());
    }

    #[test]
    fn invalid_scenarios_are_rejected() {
        assert!(ExperimentConfig::from_toml("[scenario.uavs]\ncount = 0\n").is_err());
        assert!(ExperimentConfig::from_toml("[scenario.world]\nheight = -1.0\n").is_err());
        let bad_event = "[[scenario.events]]\nkind = \"quit\"\nuav = 9\nat_slot = 3\n";
        let err = ExperimentConfig::from_toml(bad_event).unwrap_err().to_string();
        assert!(err.contains("UAV 9"), "{err}");
    }

    #[test]
    fn echo_round_trips_and_hash_is_stable() {
        let mut cfg = ExperimentConfig::default();
        cfg.scenario.uavs.initial_battery = Some(PerUav::Each(vec![100.0; 5]));
        cfg.run.seed = 42;
        let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        assert_eq!(cfg.hash().len(), 64);
    }

    #[test]
    fn default_start_positions_fill_the_fleet() {
        let f = UavFleetConfig::default();
        let r = Region {
            width: 1000.0,
            height: 1000.0,
        };
        let starts = f.start_positions(&r);
        assert_eq!(starts.len(), 5);
        assert!(starts.iter().all(|p| r.contains(*p)));
    }
}
