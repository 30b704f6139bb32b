//! Footprints, capacity-limited user service and footprint overlap.
//!
//! A UAV covers the ground disc of radius `h * tan(aperture / 2)` below it.
//! Users are served greedily: in ascending index order, each user goes to
//! the nearest covering UAV that still has capacity, ties broken by the
//! lower UAV id.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Point;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoverageModel {
    /// Full aperture angle of the transmit cone, in degrees.
    pub aperture_deg: f64,
    /// Users one UAV can serve at once.
    pub capacity: usize,
}

impl Default for CoverageModel {
    fn default() -> Self {
        CoverageModel {
            aperture_deg: 90.0,
            capacity: 20,
        }
    }
}

impl CoverageModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.aperture_deg > 0.0 && self.aperture_deg < 180.0) {
            return Err(Error::config(format!(
                "coverage.aperture_deg must lie in (0, 180), got {}",
                self.aperture_deg
            )));
        }
        if self.capacity == 0 {
            return Err(Error::config("coverage.capacity must be positive"));
        }
        Ok(())
    }

    pub fn aperture(&self) -> f64 {
        self.aperture_deg.to_radians()
    }
}

pub fn footprint_radius(altitude: f64, model: &CoverageModel) -> Result<f64> {
    if altitude <= 0.0 || !altitude.is_finite() {
        return Err(Error::Domain(format!(
            "footprint altitude must be positive, got {altitude}"
        )));
    }
    Ok(altitude * (model.aperture() / 2.0).tan())
}

/// A serving UAV as seen by the coverage model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Site {
    pub id: usize,
    pub position: Point,
    pub altitude: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Service {
    pub total: usize,
    /// Aligned with the `sites` slice passed to [`count_served`].
    pub per_uav: Vec<usize>,
    /// UAV id serving each user, if any.
    pub assignment: Vec<Option<usize>>,
}

pub fn count_served(users: &[Point], sites: &[Site], model: &CoverageModel) -> Service {
    let radii_sq: Vec<f64> = sites
        .iter()
        .map(|s| {
            let r = footprint_radius(s.altitude, model).unwrap_or(0.0);
            r * r
        })
        .collect();
    let mut remaining = vec![model.capacity; sites.len()];
    let mut per_uav = vec![0; sites.len()];
    let mut assignment = Vec::with_capacity(users.len());
    let mut total = 0;

    for user in users {
        let mut best: Option<(f64, usize, usize)> = None;
        for (k, site) in sites.iter().enumerate() {
            if remaining[k] == 0 {
                continue;
            }
            let d = user.dist_sq(site.position);
            if d > radii_sq[k] {
                continue;
            }
            let better = match best {
                None => true,
                Some((bd, bid, _)) => d < bd || (d == bd && site.id < bid),
            };
            if better {
                best = Some((d, site.id, k));
            }
        }
        match best {
            Some((_, id, k)) => {
                remaining[k] -= 1;
                per_uav[k] += 1;
                total += 1;
                assignment.push(Some(id));
            }
            None => assignment.push(None),
        }
    }

    Service {
        total,
        per_uav,
        assignment,
    }
}

/// Area of the intersection of two discs.
pub fn overlap_area(p1: Point, r1: f64, p2: Point, r2: f64) -> f64 {
    let d = p1.dist(p2);
    if r1 <= 0.0 || r2 <= 0.0 || d >= r1 + r2 {
        return 0.0;
    }
    let small = r1.min(r2);
    if d <= (r1 - r2).abs() {
        return PI * small * small;
    }
    let a1 = ((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1)).clamp(-1.0, 1.0).acos();
    let a2 = ((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2)).clamp(-1.0, 1.0).acos();
    let kite = 0.5
        * ((-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2))
            .max(0.0)
            .sqrt();
    let area = r1 * r1 * a1 + r2 * r2 * a2 - kite;
    area.clamp(0.0, PI * small * small)
}
