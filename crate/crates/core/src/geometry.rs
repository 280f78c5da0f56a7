//! Local east-north-up frame in meters, drone transmit directions and the
//! feasible region around a point of interest.
//!
//! Azimuth is measured counterclockwise from +x (east) in `[0, 2π)`; the
//! polar angle is measured from the zenith (+z) in `[0, π]`.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{CdcpError, Result};

/// Meters per international foot.
pub const FOOT: f64 = 0.3048;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Location3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Location3D {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn distance(&self, other: &Location3D) -> f64 {
        distance(*self, *other)
    }

    pub(crate) fn offset_to(&self, other: &Location3D) -> [f64; 3] {
        [other.x - self.x, other.y - self.y, other.z - self.z]
    }
}

/// Transmit direction of the drone antenna boresight.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Direction {
    pub azimuth: f64,
    pub polar: f64,
}

impl Direction {
    /// Builds a direction from arbitrary angles, wrapping the azimuth into
    /// `[0, 2π)` and reflecting the polar angle at the poles.
    pub fn new(azimuth: f64, polar: f64) -> Self {
        let mut polar = polar.rem_euclid(TAU);
        let mut azimuth = azimuth;
        if polar > PI {
            polar = TAU - polar;
            azimuth += PI;
        }
        Self {
            azimuth: wrap_azimuth(azimuth),
            polar,
        }
    }

    pub fn unit_vector(&self) -> [f64; 3] {
        let (sp, cp) = self.polar.sin_cos();
        let (sa, ca) = self.azimuth.sin_cos();
        [sp * ca, sp * sa, cp]
    }

    fn from_vector(v: [f64; 3]) -> Self {
        let horizontal = v[0].hypot(v[1]);
        let azimuth = if horizontal == 0.0 {
            0.0
        } else {
            wrap_azimuth(v[1].atan2(v[0]))
        };
        Self {
            azimuth,
            polar: horizontal.atan2(v[2]),
        }
    }
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_azimuth(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

pub fn distance(a: Location3D, b: Location3D) -> f64 {
    let d = a.offset_to(&b);
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

/// Direction of the ray from `from` toward `to`. A target straight below or
/// above gets azimuth 0.
pub fn direction_to(from: Location3D, to: Location3D) -> Result<Direction> {
    let v = from.offset_to(&to);
    if v == [0.0; 3] {
        return Err(CdcpError::DegenerateDirection);
    }
    Ok(Direction::from_vector(v))
}

/// Angle in `[0, π]` between two directions.
pub fn angular_offset(pointing: Direction, target: Direction) -> f64 {
    let a = pointing.unit_vector();
    let b = target.unit_vector();
    let cross = [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ];
    let sin = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
    let cos = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    sin.atan2(cos)
}

/// Angle between a unit vector and an arbitrary non-zero vector.
pub(crate) fn offset_to_vector(unit: [f64; 3], v: [f64; 3]) -> f64 {
    let cross = [
        unit[1] * v[2] - unit[2] * v[1],
        unit[2] * v[0] - unit[0] * v[2],
        unit[0] * v[1] - unit[1] * v[0],
    ];
    let sin = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
    let cos = unit[0] * v[0] + unit[1] * v[1] + unit[2] * v[2];
    sin.atan2(cos)
}

/// Closed ball of radius `radius` around `center`, cut by the half-space
/// `z >= min_altitude`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibleRegion {
    pub center: Location3D,
    pub radius: f64,
    pub min_altitude: f64,
}

impl FeasibleRegion {
    pub fn new(center: Location3D, radius: f64, min_altitude: f64) -> Result<Self> {
        let region = Self {
            center,
            radius,
            min_altitude,
        };
        region.validate()?;
        Ok(region)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.center.is_finite() {
            return Err(CdcpError::invalid("poi", "coordinates must be finite"));
        }
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(CdcpError::invalid("dis_max", "must be positive and finite"));
        }
        if !(self.min_altitude >= 0.0) || !self.min_altitude.is_finite() {
            return Err(CdcpError::invalid("min_altitude", "must be non-negative"));
        }
        let top = self.center.z + self.radius;
        if top < self.min_altitude {
            return Err(CdcpError::DegenerateRegion {
                top,
                floor: self.min_altitude,
            });
        }
        Ok(())
    }

    pub fn contains(&self, p: Location3D) -> bool {
        p.z >= self.min_altitude && distance(p, self.center) <= self.radius
    }

    /// Axis-aligned bounding box `(lower, upper)` of the region.
    pub fn bounding_box(&self) -> (Location3D, Location3D) {
        let c = self.center;
        let r = self.radius;
        (
            Location3D::new(c.x - r, c.y - r, (c.z - r).max(self.min_altitude)),
            Location3D::new(c.x + r, c.y + r, c.z + r),
        )
    }
}

/// Euclidean projection onto the feasible region.
///
/// Feasible points are returned unchanged. Otherwise the nearest point of the
/// ball is used if it clears the altitude floor, the altitude-clamped point if
/// it lies in the ball, and the nearest point of the circle where the floor
/// plane cuts the sphere when both constraints are active.
pub fn project_feasible(candidate: Location3D, region: &FeasibleRegion) -> Location3D {
    if region.contains(candidate) {
        return candidate;
    }
    let c = region.center;
    let r = region.radius;
    let h = region.min_altitude;

    let d = distance(candidate, c);
    if d > r {
        let q = shrink_into_ball(c, c.offset_to(&candidate), r);
        if q.z >= h {
            return q;
        }
    }

    let clamped = Location3D::new(candidate.x, candidate.y, candidate.z.max(h));
    if distance(clamped, c) <= r {
        return clamped;
    }

    // Both constraints active: nearest point on the circle z = h of the sphere.
    let dz = h - c.z;
    let mut rho = (r * r - dz * dz).max(0.0).sqrt();
    let (hx, hy) = (candidate.x - c.x, candidate.y - c.y);
    let norm = hx.hypot(hy);
    let (ux, uy) = if norm > 0.0 { (hx / norm, hy / norm) } else { (1.0, 0.0) };
    let mut shrink = f64::EPSILON;
    loop {
        let p = Location3D::new(c.x + rho * ux, c.y + rho * uy, h);
        if distance(p, c) <= r || rho == 0.0 {
            return p;
        }
        rho *= 1.0 - shrink;
        shrink *= 2.0;
    }
}

/// `center + offset * radius / |offset|`, nudged inward until the computed
/// distance does not exceed `radius`.
fn shrink_into_ball(center: Location3D, offset: [f64; 3], radius: f64) -> Location3D {
    let norm = (offset[0] * offset[0] + offset[1] * offset[1] + offset[2] * offset[2]).sqrt();
    let mut scale = radius / norm;
    let mut shrink = f64::EPSILON;
    loop {
        let p = Location3D::new(
            center.x + offset[0] * scale,
            center.y + offset[1] * scale,
            center.z + offset[2] * scale,
        );
        if distance(p, center) <= radius {
            return p;
        }
        scale *= 1.0 - shrink;
        shrink *= 2.0;
    }
}
