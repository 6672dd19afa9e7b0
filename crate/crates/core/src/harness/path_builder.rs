//! Fixed avoidance path around a vehicle parked in the ego lane.

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::path::{NorthEast, Path, PATH_SPACING};
use crate::world::{Obstacle, Scene};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathConfig {
    /// Lateral clearance between the ego body and the occluder, m.
    pub margin: f64,
    /// Half the ego body width, m.
    pub ego_half_width: f64,
    /// Length of the lateral shift out of the lane, m.
    pub ramp_length: f64,
    /// Full offset is reached this far before the occluder, m.
    pub lead_distance: f64,
    /// Full offset is held this far past the occluder, m.
    pub hold_distance: f64,
    /// Length of the shift back into the lane, m.
    pub return_length: f64,
}

impl Default for PathConfig {
    fn default() -> Self {
        Self {
            margin: 2.3,
            ego_half_width: 0.9,
            ramp_length: 20.0,
            lead_distance: 17.0,
            hold_distance: 2.0,
            return_length: 15.0,
        }
    }
}

/// Smooth 0 -> 1 blend with zero slope at both ends.
fn cosine_step(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    0.5 * (1.0 - (std::f64::consts::PI * u).cos())
}

/// First obstacle that overlaps the ego lane, by distance along the road.
pub fn ego_lane_occluder(scene: &Scene) -> Option<&Obstacle> {
    let half_lane = scene.road.lane_width / 2.0;
    scene
        .obstacles
        .iter()
        .filter(|o| {
            let ys = o.corners().map(|c| c.1);
            let lo = ys.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            lo < half_lane && hi > -half_lane && o.x > 0.0
        })
        .min_by(|a, b| a.x.total_cmp(&b.x))
}

/// Builds the path in the road frame and converts it to north/east
/// (`north = x`, `east = -y`). The path starts at the origin heading north,
/// shifts left around the ego-lane occluder, returns to the lane, and is cut
/// at `scene.path_length` of arc length.
pub fn build_avoidance_path(scene: &Scene, cfg: &PathConfig) -> Result<Path, HarnessError> {
    if cfg.margin < 0.5 {
        return Err(HarnessError::Config(format!(
            "path margin {} m is below the 0.5 m minimum",
            cfg.margin
        )));
    }
    let length = scene.path_length;
    let Some(occ) = ego_lane_occluder(scene) else {
        return Ok(Path::straight(NorthEast::new(0.0, 0.0), 0.0, length)?);
    };

    let corners = occ.corners();
    let rear = corners.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    let front = corners.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max);
    let left_edge = corners.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    let offset = left_edge + cfg.ego_half_width + cfg.margin;
    if offset + cfg.ego_half_width > scene.road.left {
        return Err(HarnessError::InfeasiblePath(format!(
            "offset {offset:.2} m leaves the road (left edge {:.2} m)",
            scene.road.left
        )));
    }

    let ramp_end = rear - cfg.lead_distance;
    let ramp_start = (ramp_end - cfg.ramp_length).max(0.0);
    if ramp_end - ramp_start < 0.25 * cfg.ramp_length {
        return Err(HarnessError::InfeasiblePath(
            "occluder too close to the path start to change lanes".into(),
        ));
    }
    let back_start = front + cfg.hold_distance;
    let back_end = back_start + cfg.return_length;

    let lateral = |x: f64| -> f64 {
        if x <= ramp_end {
            offset * cosine_step((x - ramp_start) / (ramp_end - ramp_start))
        } else if x <= back_start {
            offset
        } else {
            offset * (1.0 - cosine_step((x - back_start) / (back_end - back_start)))
        }
    };

    // Dense sampling in x, then uniform arc-length resampling.
    let step = 0.05;
    let x_max = length + 5.0;
    let n = (x_max / step).ceil() as usize;
    let dense: Vec<NorthEast> = (0..=n)
        .map(|i| {
            let x = i as f64 * step;
            NorthEast::new(x, -lateral(x))
        })
        .collect();
    let path = Path::from_points(dense)?.resampled(PATH_SPACING, length)?;
    Ok(path)
}

/// Path distance at which the path reaches the crosswalk's near edge.
pub fn crosswalk_line_s(path: &Path, scene: &Scene) -> f64 {
    let target = scene.crosswalk.start;
    let (mut lo, mut hi) = (0.0, path.length());
    if path.point_at(hi).north < target {
        return hi;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if path.point_at(mid).north < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Inclusive band of distance bins (below `crosswalk_bin`) from which some
/// point of the crosswalk centerline is hidden by an obstacle when the ego
/// sits on the path.
pub fn occlusion_zone(
    scene: &Scene,
    path: &Path,
    crosswalk_bin: usize,
    bin_width: f64,
) -> Option<[usize; 2]> {
    let cx = scene.crosswalk.start + scene.crosswalk.width / 2.0;
    let n_samples = ((scene.road.left - scene.road.right) / 0.25).round() as usize;
    let samples: Vec<(f64, f64)> = (0..=n_samples)
        .map(|i| (cx, scene.road.right + i as f64 * 0.25))
        .collect();
    let shadowed: Vec<usize> = (0..crosswalk_bin)
        .filter(|&d| {
            let p = path.point_at(d as f64 * bin_width);
            let origin = (p.north, -p.east);
            samples.iter().any(|&c| {
                scene
                    .obstacles
                    .iter()
                    .any(|o| o.intersects_segment(origin, c))
            })
        })
        .collect();
    Some([*shadowed.first()?, *shadowed.last()?])
}
