//! Arc-length sampled polyline paths and projection into path coordinates.
//!
//! Coordinates are inertial north/east. The signed lateral deviation `e` is
//! positive to the left of the direction of travel.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default sample spacing along the path, in meters.
pub const PATH_SPACING: f64 = 0.25;

#[derive(Debug, Error, PartialEq)]
pub enum PathError {
    #[error("path needs at least two points, got {0}")]
    TooShort(usize),
    #[error("path contains a non-finite coordinate at index {0}")]
    NonFinite(usize),
    #[error("path has zero length")]
    Degenerate,
}

/// A point in the inertial frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NorthEast {
    pub north: f64,
    pub east: f64,
}

impl NorthEast {
    pub fn new(north: f64, east: f64) -> Self {
        Self { north, east }
    }
}

/// Result of projecting a point onto a path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    /// Arc length of the nearest path point.
    pub s: f64,
    /// Signed lateral offset, positive left of the path direction.
    pub e: f64,
    /// Set when the nearest point lies before the start or past the end of
    /// the path; `s` is then clamped to the path extent.
    pub clamped: bool,
}

/// Piecewise-linear path with cumulative arc length at each vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    points: Vec<NorthEast>,
    arc: Vec<f64>,
}

impl Path {
    /// Builds a path from vertices, dropping repeated points.
    pub fn from_points(points: Vec<NorthEast>) -> Result<Self, PathError> {
        if points.len() < 2 {
            return Err(PathError::TooShort(points.len()));
        }
        if let Some(i) = points
            .iter()
            .position(|p| !p.north.is_finite() || !p.east.is_finite())
        {
            return Err(PathError::NonFinite(i));
        }
        let mut kept: Vec<NorthEast> = Vec::with_capacity(points.len());
        let mut arc = Vec::with_capacity(points.len());
        for p in points {
            match kept.last() {
                None => {
                    kept.push(p);
                    arc.push(0.0);
                }
                Some(last) => {
                    let d = (p.north - last.north).hypot(p.east - last.east);
                    if d > 1e-12 {
                        arc.push(arc.last().unwrap() + d);
                        kept.push(p);
                    }
                }
            }
        }
        if kept.len() < 2 {
            return Err(PathError::Degenerate);
        }
        Ok(Self { points: kept, arc })
    }

    /// Straight path from `start` along `heading` (radians from north toward east).
    pub fn straight(start: NorthEast, heading: f64, length: f64) -> Result<Self, PathError> {
        let n = (length / PATH_SPACING).ceil().max(1.0) as usize;
        let points = (0..=n)
            .map(|i| {
                let s = (i as f64 * PATH_SPACING).min(length);
                NorthEast::new(
                    start.north + s * heading.cos(),
                    start.east + s * heading.sin(),
                )
            })
            .collect();
        Self::from_points(points)
    }

    /// Resamples the polyline at uniform arc-length spacing up to `max_length`.
    pub fn resampled(&self, spacing: f64, max_length: f64) -> Result<Self, PathError> {
        let total = self.length().min(max_length);
        let n = (total / spacing).floor() as usize;
        let mut pts: Vec<NorthEast> = (0..=n).map(|i| self.point_at(i as f64 * spacing)).collect();
        if total - n as f64 * spacing > 1e-9 {
            pts.push(self.point_at(total));
        }
        Self::from_points(pts)
    }

    pub fn points(&self) -> &[NorthEast] {
        &self.points
    }

    pub fn length(&self) -> f64 {
        *self.arc.last().unwrap()
    }

    fn segment_at(&self, s: f64) -> usize {
        let i = self.arc.partition_point(|&a| a <= s);
        i.saturating_sub(1).min(self.points.len() - 2)
    }

    /// Point at arc length `s`, clamped to the path ends.
    pub fn point_at(&self, s: f64) -> NorthEast {
        let s = s.clamp(0.0, self.length());
        let i = self.segment_at(s);
        let (p0, p1) = (self.points[i], self.points[i + 1]);
        let len = self.arc[i + 1] - self.arc[i];
        let t = ((s - self.arc[i]) / len).clamp(0.0, 1.0);
        NorthEast::new(
            p0.north + t * (p1.north - p0.north),
            p0.east + t * (p1.east - p0.east),
        )
    }

    /// Path heading at arc length `s` (radians from north toward east).
    pub fn heading_at(&self, s: f64) -> f64 {
        let i = self.segment_at(s.clamp(0.0, self.length()));
        let (p0, p1) = (self.points[i], self.points[i + 1]);
        (p1.east - p0.east).atan2(p1.north - p0.north)
    }

    /// Curvature estimate at `s` from the heading change across neighbouring
    /// segments. Positive curvature turns right (heading increasing).
    pub fn curvature_at(&self, s: f64) -> f64 {
        let h = 0.5;
        let s0 = (s - h).max(0.0);
        let s1 = (s + h).min(self.length());
        if s1 - s0 < 1e-9 {
            return 0.0;
        }
        wrap_angle(self.heading_at(s1) - self.heading_at(s0)) / (s1 - s0)
    }

    /// Projects a point onto the nearest location of the polyline.
    pub fn project(&self, p: NorthEast) -> Projection {
        self.project_range(p, 0, self.points.len() - 1)
    }

    /// Projection restricted to segments overlapping `[s_min, s_max]`.
    pub fn project_near(&self, p: NorthEast, s_min: f64, s_max: f64) -> Projection {
        let i0 = self.segment_at(s_min.max(0.0));
        let i1 = (self.segment_at(s_max.min(self.length())) + 1).min(self.points.len() - 1);
        self.project_range(p, i0, i1)
    }

    fn project_range(&self, p: NorthEast, first: usize, last_vertex: usize) -> Projection {
        let last_seg = self.points.len() - 2;
        let mut best = (f64::INFINITY, 0.0, 0.0, false);
        for i in first..last_vertex.min(last_seg + 1) {
            let (a, b) = (self.points[i], self.points[i + 1]);
            let (dn, de) = (b.north - a.north, b.east - a.east);
            let len = self.arc[i + 1] - self.arc[i];
            let (tn, te) = (dn / len, de / len);
            let (rn, re) = (p.north - a.north, p.east - a.east);
            let along = rn * tn + re * te;
            let (t, outside) = if along < 0.0 {
                (0.0, i == 0)
            } else if along > len {
                (len, i == last_seg)
            } else {
                (along, false)
            };
            let (cn, ce) = (a.north + tn * t, a.east + te * t);
            let d2 = (p.north - cn).powi(2) + (p.east - ce).powi(2);
            if d2 < best.0 - 1e-15 {
                // Left normal of a north/east direction (tn, te) is (te, -tn).
                let lateral = rn * te - re * tn;
                let clamped = outside && (along < -1e-9 || along > len + 1e-9);
                best = (d2, self.arc[i] + t, lateral, clamped);
            }
        }
        Projection {
            s: best.1,
            e: best.2,
            clamped: best.3,
        }
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut x = a % std::f64::consts::TAU;
    if x <= -std::f64::consts::PI {
        x += std::f64::consts::TAU;
    } else if x > std::f64::consts::PI {
        x -= std::f64::consts::TAU;
    }
    x
}
