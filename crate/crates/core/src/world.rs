//! Slotted simulation state: region, user field, UAV roster and crew events.
//!
//! [`WorldState`] is a plain value. [`WorldState::advance_slot`] moves the
//! serving UAVs, drains or charges batteries, fires crew events and ticks the
//! clock. User positions are not persisted between slots; they are resampled
//! from the drifting Gaussian mixture by [`WorldState::sample_users`].

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::config::{EventConfig, ScenarioConfig};
use crate::coverage::{count_served, CoverageModel, Service, Site};
use crate::energy::{step_battery, EnergyModel};
use crate::error::{Error, Result};
use crate::geom::Point;
use crate::seed;

const USERS_STREAM: u64 = 0x5553_4552;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub width: f64,
    pub height: f64,
}

impl Region {
    pub fn center(&self) -> Point {
        Point::new(self.width / 2.0, self.height / 2.0)
    }

    pub fn contains(&self, p: Point) -> bool {
        (0.0..=self.width).contains(&p.x) && (0.0..=self.height).contains(&p.y)
    }

    pub fn clamp(&self, p: Point) -> Point {
        Point::new(p.x.clamp(0.0, self.width), p.y.clamp(0.0, self.height))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotClock {
    pub slot_index: usize,
    pub slots_per_episode: usize,
    /// Seconds.
    pub slot_duration: f64,
    /// Time of day at slot 0, hours.
    pub start_hour: f64,
}

impl SlotClock {
    /// Time of day at the start of the current slot, hours in [0, 24).
    pub fn hour(&self) -> f64 {
        (self.start_hour + self.slot_index as f64 * self.slot_duration / 3600.0).rem_euclid(24.0)
    }

    pub fn is_done(&self) -> bool {
        self.slot_index >= self.slots_per_episode
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cluster {
    pub center: Point,
    /// Meters per slot.
    #[serde(default)]
    pub velocity: Point,
    pub std_dev: f64,
    pub weight: f64,
}

impl Cluster {
    pub fn center_at(&self, slot: usize) -> Point {
        self.center + self.velocity.scale(slot as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserField {
    pub clusters: Vec<Cluster>,
    pub total_users: usize,
    /// Active-user fraction per hour of day; 24 entries.
    pub demand_profile: Vec<f64>,
}

impl UserField {
    pub fn demand_fraction(&self, hour: f64) -> f64 {
        let h = (hour.rem_euclid(24.0).floor() as usize).min(23);
        self.demand_profile[h]
    }

    /// Number of active users at a time of day.
    pub fn active_users(&self, hour: f64) -> usize {
        let exact = self.total_users as f64 * self.demand_fraction(hour);
        (exact - 1e-9).ceil().max(0.0) as usize
    }

    /// Draws `n` users from the mixture with centers drifted to `slot`,
    /// clamped to the region.
    pub fn draw(&self, n: usize, slot: usize, region: &Region, rng: &mut seed::Rng) -> Vec<Point> {
        if n == 0 {
            return Vec::new();
        }
        let picker = WeightedIndex::new(self.clusters.iter().map(|c| c.weight))
            .expect("cluster weights validated at init");
        let unit = Normal::new(0.0, 1.0).expect("unit normal");
        (0..n)
            .map(|_| {
                let c = &self.clusters[picker.sample(rng)];
                let mean = c.center_at(slot);
                let p = Point::new(
                    mean.x + c.std_dev * unit.sample(rng),
                    mean.y + c.std_dev * unit.sample(rng),
                );
                region.clamp(p)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UavStatus {
    Serving,
    Away,
    Charging,
    Idle,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position {
    pub fn ground(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Uav {
    pub id: usize,
    pub position: Position,
    /// Wh.
    pub battery: f64,
    pub status: UavStatus,
    /// Slots until a pending join completes; 0 when no join is pending.
    pub join_countdown: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrewEventKind {
    Quit,
    Join,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Trigger {
    /// Fires at the end of this slot.
    Slot(usize),
    /// Fires at the end of the first slot the battery is at or below this
    /// level (Wh).
    BatteryBelow(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrewEvent {
    pub kind: CrewEventKind,
    pub uav_id: usize,
    pub trigger: Trigger,
    /// Join only: countdown started when the event fires.
    pub notice: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FireCause {
    Scripted,
    Battery,
    Countdown,
}

/// A crew change applied during a slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiredEvent {
    pub kind: CrewEventKind,
    pub uav: usize,
    pub cause: FireCause,
}

/// Fixed per-scenario rules carried alongside the state.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldRules {
    /// Maximum horizontal displacement per slot, meters.
    pub d_max: f64,
    pub altitude: f64,
    pub spawn_position: Point,
    pub joiner_battery: f64,
    /// Serving UAVs at or below this battery level quit, Wh.
    pub quit_threshold: f64,
    /// Rates already scaled to the slot length.
    pub energy: EnergyModel,
    pub coverage: CoverageModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub region: Region,
    pub clock: SlotClock,
    pub user_field: UserField,
    pub uavs: Vec<Uav>,
    pub events: Vec<CrewEvent>,
    pub rng_seed: u64,
    pub rules: WorldRules,
}

/// What happened during one slot, per UAV where applicable.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SlotReport {
    /// Displacement was cut to `d_max`.
    pub clipped: Vec<bool>,
    /// Position was clamped back into the region.
    pub out_of_bound: Vec<bool>,
    /// Distance actually flown, meters.
    pub moved: Vec<f64>,
    pub fired: Vec<FiredEvent>,
    /// Scripted events dropped because the UAV was in the wrong status.
    pub skipped: Vec<CrewEvent>,
}

impl SlotReport {
    pub fn out_of_bound_count(&self) -> usize {
        self.out_of_bound.iter().filter(|&&f| f).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ActiveSet {
    pub active: Vec<usize>,
    pub joining: Vec<usize>,
}

pub fn init_world(config: &ScenarioConfig, seed: u64) -> Result<WorldState> {
    config.validate()?;
    let w = &config.world;
    let region = Region {
        width: w.width,
        height: w.height,
    };
    let fleet = &config.uavs;
    let n = fleet.count;
    let starts = fleet.start_positions(&region);
    let statuses = fleet.initial_statuses();
    let batteries = fleet.initial_batteries(config.energy.b_max);

    let uavs = (0..n)
        .map(|id| Uav {
            id,
            position: Position {
                x: starts[id].x,
                y: starts[id].y,
                z: fleet.altitude,
            },
            battery: batteries[id],
            status: statuses[id],
            join_countdown: 0,
        })
        .collect();

    let events = config.events.iter().map(EventConfig::to_event).collect();

    Ok(WorldState {
        region,
        clock: SlotClock {
            slot_index: 0,
            slots_per_episode: w.slots,
            slot_duration: w.slot_duration,
            start_hour: w.start_hour,
        },
        user_field: UserField {
            clusters: config.users.clusters.clone(),
            total_users: config.users.total,
            demand_profile: config.users.demand_profile(),
        },
        uavs,
        events,
        rng_seed: seed,
        rules: WorldRules {
            d_max: w.d_max,
            altitude: fleet.altitude,
            spawn_position: fleet.spawn_position(&region),
            joiner_battery: fleet.joiner_battery.unwrap_or(config.energy.b_max),
            quit_threshold: fleet.quit_threshold_fraction * config.energy.b_max,
            energy: config.energy.per_slot(w.slot_duration / 3600.0),
            coverage: config.coverage,
        },
    })
}

impl WorldState {
    pub fn n_max(&self) -> usize {
        self.uavs.len()
    }

    /// Users active in the current slot.
    pub fn sample_users(&self) -> Vec<Point> {
        let slot = self.clock.slot_index;
        let n = self.user_field.active_users(self.clock.hour());
        let mut rng = seed::rng(self.rng_seed, &[USERS_STREAM, slot as u64]);
        self.user_field.draw(n, slot, &self.region, &mut rng)
    }

    pub fn active_set(&self) -> ActiveSet {
        let mut set = ActiveSet::default();
        for u in &self.uavs {
            if u.status == UavStatus::Serving {
                set.active.push(u.id);
            } else if u.join_countdown > 0 {
                set.joining.push(u.id);
            }
        }
        set
    }

    pub fn is_active(&self, id: usize) -> bool {
        self.uavs[id].status == UavStatus::Serving
    }

    pub fn sites(&self) -> Vec<Site> {
        self.uavs
            .iter()
            .filter(|u| u.status == UavStatus::Serving)
            .map(|u| Site {
                id: u.id,
                position: u.position.ground(),
                altitude: u.position.z,
            })
            .collect()
    }

    pub fn serve(&self, users: &[crate::geom::Point]) -> Service {
        count_served(users, &self.sites(), &self.rules.coverage)
    }

    /// Advances one slot. `movements` holds one displacement per UAV id;
    /// entries for non-serving UAVs are ignored.
    pub fn advance_slot(&mut self, movements: &[Point]) -> Result<SlotReport> {
        let n = self.n_max();
        if movements.len() != n {
            return Err(Error::Shape {
                expected: n,
                found: movements.len(),
            });
        }
        if self.clock.is_done() {
            return Err(Error::Domain(format!(
                "episode already finished at slot {}",
                self.clock.slot_index
            )));
        }
        let hour = self.clock.hour();
        let mut report = SlotReport {
            clipped: vec![false; n],
            out_of_bound: vec![false; n],
            moved: vec![0.0; n],
            ..Default::default()
        };

        for (uav, &step) in self.uavs.iter_mut().zip(movements) {
            if uav.status != UavStatus::Serving {
                continue;
            }
            let id = uav.id;
            let mut step = if step.x.is_finite() && step.y.is_finite() {
                step
            } else {
                Point::ZERO
            };
            let len = step.norm();
            if len > self.rules.d_max {
                step = step.scale(self.rules.d_max / len);
                report.clipped[id] = true;
            }
            let from = uav.position.ground();
            let target = from + step;
            let landed = self.region.clamp(target);
            report.out_of_bound[id] = landed != target;
            report.moved[id] = landed.dist(from);
            uav.position.x = landed.x;
            uav.position.y = landed.y;
        }

        for uav in self.uavs.iter_mut() {
            uav.battery = step_battery(uav, report.moved[uav.id], &self.rules.energy, hour);
        }

        // Pending joins tick before new events fire, so a join announced with
        // notice k completes k slots later.
        for uav in self.uavs.iter_mut() {
            if uav.join_countdown > 0 {
                uav.join_countdown -= 1;
                if uav.join_countdown == 0 {
                    Self::spawn(uav, &self.rules);
                    report.fired.push(FiredEvent {
                        kind: CrewEventKind::Join,
                        uav: uav.id,
                        cause: FireCause::Countdown,
                    });
                }
            }
        }

        let slot = self.clock.slot_index;
        let mut pending = Vec::with_capacity(self.events.len());
        for ev in std::mem::take(&mut self.events) {
            let uav = &self.uavs[ev.uav_id];
            let due = match ev.trigger {
                Trigger::Slot(s) => s <= slot,
                Trigger::BatteryBelow(level) => {
                    uav.status == UavStatus::Serving && uav.battery <= level
                }
            };
            if !due {
                pending.push(ev);
                continue;
            }
            if self.apply_event(ev.kind, ev.uav_id, ev.notice, FireCause::Scripted, &mut report) {
                continue;
            }
            report.skipped.push(ev);
        }
        self.events = pending;

        for id in 0..n {
            let uav = &self.uavs[id];
            if uav.status == UavStatus::Serving && uav.battery <= self.rules.quit_threshold {
                self.apply_event(CrewEventKind::Quit, id, 0, FireCause::Battery, &mut report);
            }
        }

        self.clock.slot_index += 1;
        Ok(report)
    }

    fn spawn(uav: &mut Uav, rules: &WorldRules) {
        uav.status = UavStatus::Serving;
        uav.join_countdown = 0;
        uav.position = Position {
            x: rules.spawn_position.x,
            y: rules.spawn_position.y,
            z: rules.altitude,
        };
        uav.battery = rules.joiner_battery;
    }

    fn apply_event(
        &mut self,
        kind: CrewEventKind,
        id: usize,
        notice: usize,
        cause: FireCause,
        report: &mut SlotReport,
    ) -> bool {
        let uav = &mut self.uavs[id];
        let applied = match kind {
            CrewEventKind::Quit if uav.status == UavStatus::Serving => {
                uav.status = UavStatus::Away;
                true
            }
            CrewEventKind::Join if uav.status == UavStatus::Away && uav.join_countdown == 0 => {
                if notice == 0 {
                    Self::spawn(uav, &self.rules);
                } else {
                    uav.join_countdown = notice;
                }
                true
            }
            _ => false,
        };
        if applied && !(kind == CrewEventKind::Join && notice > 0) {
            report.fired.push(FiredEvent { kind, uav: id, cause });
        }
        applied
    }

    /// Removes a serving UAV immediately (slot-boundary hand-off).
    pub fn force_quit(&mut self, id: usize) -> bool {
        let uav = &mut self.uavs[id];
        if uav.status != UavStatus::Serving {
            return false;
        }
        uav.status = UavStatus::Away;
        uav.join_countdown = 0;
        true
    }

    /// Brings an away UAV into service at `at` immediately.
    pub fn force_join(&mut self, id: usize, at: Point) -> bool {
        let altitude = self.rules.altitude;
        let uav = &mut self.uavs[id];
        if uav.status != UavStatus::Away {
            return false;
        }
        uav.status = UavStatus::Serving;
        uav.join_countdown = 0;
        uav.position = Position {
            x: at.x,
            y: at.y,
            z: altitude,
        };
        true
    }

    /// Slots at which scripted events are due, for exploration boosts and
    /// evaluation windows.
    pub fn scheduled_slots(&self) -> Vec<usize> {
        self.events
            .iter()
            .filter_map(|e| match e.trigger {
                Trigger::Slot(s) => Some(s),
                Trigger::BatteryBelow(_) => None,
            })
            .collect()
    }
}

impl EventConfig {
    pub fn to_event(&self) -> CrewEvent {
        let trigger = match (self.at_slot, self.battery_below) {
            (Some(s), _) => Trigger::Slot(s),
            (None, Some(b)) => Trigger::BatteryBelow(b),
            (None, None) => Trigger::Slot(usize::MAX),
        };
        CrewEvent {
            kind: self.kind,
            uav_id: self.uav,
            trigger,
            notice: self.notice,
        }
    }
}
