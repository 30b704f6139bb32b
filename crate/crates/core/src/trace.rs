//! Per-slot traces (JSONL), policy rollouts and crew-event windows.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::world::{FiredEvent, UavStatus, WorldState};

pub const TRACE_SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UavRecord {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub battery: f64,
    pub status: UavStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub slot: usize,
    /// Environment copy tag for dual-copy runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub copy: Option<String>,
    pub uavs: Vec<UavRecord>,
    pub served_count: usize,
    pub users: usize,
    pub event_fired: Vec<FiredEvent>,
}

impl TraceRecord {
    pub fn capture(world: &WorldState, slot: usize, served: usize, users: usize, fired: &[FiredEvent]) -> Self {
        TraceRecord {
            slot,
            copy: None,
            uavs: world
                .uavs
                .iter()
                .map(|u| UavRecord {
                    id: u.id,
                    x: u.position.x,
                    y: u.position.y,
                    z: u.position.z,
                    battery: u.battery,
                    status: u.status,
                })
                .collect(),
            served_count: served,
            users,
            event_fired: fired.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub schema: u32,
    pub seed: u64,
    pub n_max: usize,
    pub slots: usize,
}

/// Writes a header line followed by one JSON record per slot.
pub fn write_trace<W: Write>(out: &mut W, header: &TraceHeader, records: &[TraceRecord]) -> Result<()> {
    let io = |e| Error::io("<trace>", e);
    serde_json::to_writer(&mut *out, header)?;
    out.write_all(b"\n").map_err(io)?;
    for r in records {
        serde_json::to_writer(&mut *out, r)?;
        out.write_all(b"\n").map_err(io)?;
    }
    Ok(())
}

pub fn read_trace(text: &str) -> Result<(TraceHeader, Vec<TraceRecord>)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: TraceHeader = serde_json::from_str(
        lines
            .next()
            .ok_or_else(|| Error::Domain("empty trace".into()))?,
    )?;
    if header.schema != TRACE_SCHEMA {
        return Err(Error::Domain(format!(
            "trace schema {} is not supported (expected {TRACE_SCHEMA})",
            header.schema
        )));
    }
    let records = lines
        .map(serde_json::from_str)
        .collect::<std::result::Result<Vec<TraceRecord>, _>>()?;
    Ok((header, records))
}

/// Outcome of driving one world through a full episode.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Rollout {
    /// Served users after each slot.
    pub served: Vec<usize>,
    /// Active users in each slot.
    pub users: Vec<usize>,
    /// Crew changes with the slot they fired in.
    pub events: Vec<(usize, FiredEvent)>,
    pub records: Vec<TraceRecord>,
    /// Ground positions at the end of the episode, per UAV id.
    pub final_positions: Vec<Point>,
}

impl Rollout {
    pub fn mean_served(&self) -> f64 {
        mean(self.served.iter().map(|&s| s as f64))
    }

    /// Mean served over the `window` slots before and after each crew event.
    /// The slot in which the event fires is excluded from both sides.
    pub fn event_windows(&self, window: usize) -> Vec<EventWindow> {
        self.events
            .iter()
            .map(|&(slot, event)| {
                let pre_lo = slot.saturating_sub(window);
                let post_hi = (slot + 1 + window).min(self.served.len());
                let post_lo = (slot + 1).min(post_hi);
                EventWindow {
                    slot,
                    event,
                    pre_mean: mean(self.served[pre_lo..slot].iter().map(|&s| s as f64)),
                    post_mean: mean(self.served[post_lo..post_hi].iter().map(|&s| s as f64)),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventWindow {
    pub slot: usize,
    pub event: FiredEvent,
    pub pre_mean: f64,
    pub post_mean: f64,
}

fn mean(it: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

/// Runs `world` to the end of its episode. `policy` maps the current world to
/// one displacement per UAV id.
pub fn rollout<P>(mut world: WorldState, mut policy: P) -> Result<Rollout>
where
    P: FnMut(&WorldState) -> Result<Vec<Point>>,
{
    let mut out = Rollout::default();
    while !world.clock.is_done() {
        let slot = world.clock.slot_index;
        let moves = policy(&world)?;
        let report = world.advance_slot(&moves)?;
        let users = world.sample_users();
        let served = world.serve(&users).total;
        out.served.push(served);
        out.users.push(users.len());
        out.events.extend(report.fired.iter().map(|&e| (slot, e)));
        out.records
            .push(TraceRecord::capture(&world, slot, served, users.len(), &report.fired));
    }
    out.final_positions = world.uavs.iter().map(|u| u.position.ground()).collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{EventConfig, ScenarioConfig};
    use crate::world::{init_world, CrewEventKind};

    fn scenario() -> ScenarioConfig {
        let mut cfg = ScenarioConfig::default();
        cfg.world.slots = 12;
        cfg.uavs.count = 3;
        cfg.events = vec![EventConfig {
            kind: CrewEventKind::Quit,
            uav: 1,
            at_slot: Some(5),
            battery_below: None,
            notice: 0,
        }];
        cfg
    }

    #[test]
    fn still_rollout_records_every_slot_and_the_quit() {
        let world = init_world(&scenario(), 3).unwrap();
        let r = rollout(world, |w| Ok(vec![Point::ZERO; w.n_max()])).unwrap();
        assert_eq!(r.served.len(), 12);
        assert_eq!(r.records.len(), 12);
        assert_eq!(r.events.len(), 1);
        assert_eq!(r.events[0].0, 5);
        assert_eq!(r.records[5].event_fired.len(), 1);
        assert_eq!(r.records[6].uavs[1].status, UavStatus::Away);
        let w = r.event_windows(3);
        assert_eq!(w.len(), 1);
        let pre: f64 = r.served[2..5].iter().map(|&s| s as f64).sum::<f64>() / 3.0;
        let post: f64 = r.served[6..9].iter().map(|&s| s as f64).sum::<f64>() / 3.0;
        assert_eq!(w[0].pre_mean, pre);
        assert_eq!(w[0].post_mean, post);
    }

    #[test]
    fn no_events_no_windows() {
        let mut cfg = scenario();
        cfg.events.clear();
        let r = rollout(init_world(&cfg, 3).unwrap(), |w| Ok(vec![Point::ZERO; w.n_max()])).unwrap();
        assert!(r.event_windows(10).is_empty());
    }

    #[test]
    fn trace_round_trip() {
        let r = rollout(init_world(&scenario(), 3).unwrap(), |w| Ok(vec![Point::new(5.0, -3.0); w.n_max()])).unwrap();
        let header = TraceHeader {
            schema: TRACE_SCHEMA,
            seed: 3,
            n_max: 3,
            slots: 12,
        };
        let mut buf = Vec::new();
        write_trace(&mut buf, &header, &r.records).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("{\"schema\":1,"));
        let (h, recs) = read_trace(&text).unwrap();
        assert_eq!(h, header);
        assert_eq!(recs, r.records);
    }
}
