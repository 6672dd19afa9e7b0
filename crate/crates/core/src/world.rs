//! Simulated ternary occupancy grid and pedestrian visibility.
//!
//! The world is planar and described in a road frame: `x` runs along the
//! road (north in the inertial frame) and `y` is lateral, positive to the
//! left (west). The grid is aligned with the road, not with the vehicle.

use std::fmt::Write as _;
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Cells along the road ahead of the ego.
pub const GRID_ROWS: usize = 210;
/// Cells across the road.
pub const GRID_COLS: usize = 48;
/// Cells per meter.
pub const GRID_RESOLUTION: f64 = 3.0;
/// Column holding the ego vehicle.
pub const EGO_COL: usize = 24;
/// Forward range of the grid in meters.
pub const FORWARD_RANGE: f64 = GRID_ROWS as f64 / GRID_RESOLUTION;
/// Lateral half-width of the grid in meters.
pub const LATERAL_RANGE: f64 = EGO_COL as f64 / GRID_RESOLUTION;

/// Number of unobservable tiles spanned by the observation bins.
pub const COUNT_BIN_RANGE: usize = 1800;
pub const COUNT_BINS: usize = 10;
const COUNT_BIN_WIDTH: usize = COUNT_BIN_RANGE / COUNT_BINS;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("crosswalk at {0} m lies outside the path extent")]
    CrosswalkOutOfRange(f64),
    #[error("pedestrian at ({x}, {y}) is not inside the crosswalk band")]
    PedestrianOutsideCrosswalk { x: f64, y: f64 },
    #[error("obstacle {0} has non-positive dimensions")]
    BadObstacle(usize),
    #[error("road bounds are inverted")]
    BadRoad,
    #[error("failed to read scene {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("failed to parse scene {path}: {source}")]
    Parse {
        path: String,
        source: toml::de::Error,
    },
}

/// Oriented rectangle in the road frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    /// Center along the road, m.
    pub x: f64,
    /// Center lateral offset, m (positive left).
    pub y: f64,
    /// Extent along its own heading, m.
    pub length: f64,
    /// Extent across its own heading, m.
    pub width: f64,
    /// Rotation relative to the road direction, rad (counter-clockwise in
    /// the x/y road frame).
    #[serde(default)]
    pub yaw: f64,
}

impl Obstacle {
    pub fn axis_aligned(x: f64, y: f64, length: f64, width: f64) -> Self {
        Self {
            x,
            y,
            length,
            width,
            yaw: 0.0,
        }
    }

    fn local_coords(&self, px: f64, py: f64) -> (f64, f64) {
        let (s, c) = self.yaw.sin_cos();
        let (dx, dy) = (px - self.x, py - self.y);
        (c * dx + s * dy, -s * dx + c * dy)
    }

    /// Closed containment test.
    pub fn contains(&self, px: f64, py: f64) -> bool {
        let (lx, ly) = self.local_coords(px, py);
        lx.abs() <= self.length / 2.0 && ly.abs() <= self.width / 2.0
    }

    /// Whether the closed segment `p0 -> p1` touches the rectangle
    /// (slab clipping in the rectangle frame).
    pub fn intersects_segment(&self, p0: (f64, f64), p1: (f64, f64)) -> bool {
        let a = self.local_coords(p0.0, p0.1);
        let b = self.local_coords(p1.0, p1.1);
        let d = (b.0 - a.0, b.1 - a.1);
        let half = (self.length / 2.0, self.width / 2.0);
        let (mut t0, mut t1) = (0.0_f64, 1.0_f64);
        for (start, delta, h) in [(a.0, d.0, half.0), (a.1, d.1, half.1)] {
            if delta == 0.0 {
                if start.abs() > h {
                    return false;
                }
                continue;
            }
            let mut ta = (-h - start) / delta;
            let mut tb = (h - start) / delta;
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
            if t0 > t1 {
                return false;
            }
        }
        true
    }

    /// Corner points, counter-clockwise, in the road frame.
    pub fn corners(&self) -> [(f64, f64); 4] {
        let (s, c) = self.yaw.sin_cos();
        let (hl, hw) = (self.length / 2.0, self.width / 2.0);
        [(hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw)].map(|(lx, ly)| {
            (self.x + c * lx - s * ly, self.y + s * lx + c * ly)
        })
    }

    /// Euclidean distance from a point to the rectangle (zero inside).
    pub fn distance_to(&self, px: f64, py: f64) -> f64 {
        let (lx, ly) = self.local_coords(px, py);
        let dx = (lx.abs() - self.length / 2.0).max(0.0);
        let dy = (ly.abs() - self.width / 2.0).max(0.0);
        dx.hypot(dy)
    }
}

/// Crosswalk band across the road.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crosswalk {
    /// Near edge (the stop line) along the road, m.
    pub start: f64,
    /// Band width along the road, m.
    pub width: f64,
}

impl Crosswalk {
    pub fn contains_x(&self, x: f64) -> bool {
        x >= self.start && x <= self.start + self.width
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pedestrian {
    pub x: f64,
    pub y: f64,
    /// A pedestrian standing in the crosswalk means a crossing event.
    #[serde(default = "default_true")]
    pub present: bool,
}

fn default_true() -> bool {
    true
}

/// Lateral road edges in the road frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoadBounds {
    /// Right edge (most negative `y`).
    pub right: f64,
    /// Left edge.
    pub left: f64,
    /// Width of one lane; the ego lane is centered on `y = 0`.
    pub lane_width: f64,
}

impl Default for RoadBounds {
    fn default() -> Self {
        Self {
            right: -1.8,
            left: 5.4,
            lane_width: 3.6,
        }
    }
}

/// Static scene around the crosswalk.
///
/// TOML layout:
///
/// ```toml
/// path_length = 60.0
/// [crosswalk]
/// start = 40.0
/// width = 3.0
/// [road]
/// right = -1.8
/// left = 5.4
/// lane_width = 3.6
/// [[obstacles]]
/// x = 34.5
/// y = 0.0
/// length = 8.0
/// width = 2.5
/// [pedestrian]
/// x = 41.5
/// y = -1.0
/// present = true
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
    pub crosswalk: Crosswalk,
    #[serde(default)]
    pub pedestrian: Option<Pedestrian>,
    #[serde(default)]
    pub road: RoadBounds,
    #[serde(default = "default_path_length")]
    pub path_length: f64,
}

fn default_path_length() -> f64 {
    60.0
}

/// Where the pedestrian stands for the two reference layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PedestrianPlacement {
    /// In the shadow of the parked vehicle.
    Hidden,
    /// In the crosswalk, in view from the approach.
    Exposed,
    None,
}

impl Scene {
    /// Reference layout: a car parked toward the right edge of the ego lane
    /// shortly before the crosswalk on a two-lane road.
    pub fn reference(placement: PedestrianPlacement) -> Self {
        let crosswalk = Crosswalk {
            start: 40.0,
            width: 3.0,
        };
        let pedestrian = match placement {
            PedestrianPlacement::Hidden => Some(Pedestrian {
                x: 41.5,
                y: -1.5,
                present: true,
            }),
            PedestrianPlacement::Exposed => Some(Pedestrian {
                x: 41.5,
                y: 3.6,
                present: true,
            }),
            PedestrianPlacement::None => None,
        };
        Self {
            obstacles: vec![Obstacle::axis_aligned(36.85, -0.8, 4.7, 1.8)],
            crosswalk,
            pedestrian,
            road: RoadBounds::default(),
            path_length: 60.0,
        }
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        if self.crosswalk.start < 0.0 || self.crosswalk.start > self.path_length {
            return Err(SceneError::CrosswalkOutOfRange(self.crosswalk.start));
        }
        if let Some(p) = self.pedestrian {
            if !self.crosswalk.contains_x(p.x) {
                return Err(SceneError::PedestrianOutsideCrosswalk { x: p.x, y: p.y });
            }
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            if !(o.length > 0.0 && o.width > 0.0) {
                return Err(SceneError::BadObstacle(i));
            }
        }
        if self.road.left <= self.road.right {
            return Err(SceneError::BadRoad);
        }
        Ok(())
    }

    /// Whether a pedestrian crossing event is actually happening.
    pub fn crossing_active(&self) -> bool {
        self.pedestrian.is_some_and(|p| p.present)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, SceneError> {
        let scene: Self = toml::from_str(text).map_err(|source| SceneError::Parse {
            path: "<string>".into(),
            source,
        })?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn load(path: &FsPath) -> Result<Self, SceneError> {
        let text = std::fs::read_to_string(path).map_err(|source| SceneError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let scene: Self = toml::from_str(&text).map_err(|source| SceneError::Parse {
            path: path.display().to_string(),
            source,
        })?;
        scene.validate()?;
        Ok(scene)
    }
}

/// Ego pose in the inertial frame. Only position matters for the
/// road-aligned grid; heading is carried for completeness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EgoPose {
    pub north: f64,
    pub east: f64,
    pub heading: f64,
}

impl EgoPose {
    /// Sensor origin in the road frame.
    pub fn road_xy(&self) -> (f64, f64) {
        (self.north, -self.east)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Cell {
    Free = 0,
    Occupied = 1,
    Unobservable = 2,
}

/// Road-aligned 210 x 48 ternary grid; row 0 starts at the ego and rows run
/// forward, column 24 starts at the ego and columns increase to the left.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccupancyGrid {
    cells: Vec<Cell>,
}

impl OccupancyGrid {
    pub fn all_free() -> Self {
        Self {
            cells: vec![Cell::Free; GRID_ROWS * GRID_COLS],
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (GRID_ROWS, GRID_COLS)
    }

    pub fn get(&self, row: usize, col: usize) -> Cell {
        self.cells[row * GRID_COLS + col]
    }

    pub fn set(&mut self, row: usize, col: usize, cell: Cell) {
        self.cells[row * GRID_COLS + col] = cell;
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    /// Cell containing the road-frame point, if inside the grid.
    pub fn cell_of(pose: &EgoPose, x: f64, y: f64) -> Option<(usize, usize)> {
        let (ex, ey) = pose.road_xy();
        let fr = (x - ex) * GRID_RESOLUTION;
        let fc = (y - ey) * GRID_RESOLUTION + EGO_COL as f64;
        if fr < 0.0 || fc < 0.0 || fr >= GRID_ROWS as f64 || fc >= GRID_COLS as f64 {
            return None;
        }
        Some((fr as usize, fc as usize))
    }

    /// Writes the raster as CSV, one grid row per line
    /// (0 = free, 1 = occupied, 2 = unobservable).
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(GRID_ROWS * GRID_COLS * 2);
        for row in 0..GRID_ROWS {
            for col in 0..GRID_COLS {
                if col > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{}", self.get(row, col) as u8);
            }
            out.push('\n');
        }
        out
    }
}

/// Road-frame center of a grid cell for the given pose.
pub fn cell_center(pose: &EgoPose, row: usize, col: usize) -> (f64, f64) {
    let (ex, ey) = pose.road_xy();
    (
        ex + (row as f64 + 0.5) / GRID_RESOLUTION,
        ey + (col as f64 - EGO_COL as f64 + 0.5) / GRID_RESOLUTION,
    )
}

/// Labels each cell by casting one ray from the ego sensor origin to the
/// cell center.
pub fn build_grid(scene: &Scene, pose: &EgoPose) -> OccupancyGrid {
    let origin = pose.road_xy();
    let mut grid = OccupancyGrid::all_free();
    // Obstacles that overlap the grid window at all.
    let relevant: Vec<&Obstacle> = scene
        .obstacles
        .iter()
        .filter(|o| {
            o.corners().iter().any(|&(x, _)| x >= origin.0)
                || o.contains(origin.0, origin.1)
        })
        .collect();
    if relevant.is_empty() {
        return grid;
    }
    for row in 0..GRID_ROWS {
        for col in 0..GRID_COLS {
            let c = cell_center(pose, row, col);
            let cell = if relevant.iter().any(|o| o.contains(c.0, c.1)) {
                Cell::Occupied
            } else if relevant.iter().any(|o| o.intersects_segment(origin, c)) {
                Cell::Unobservable
            } else {
                Cell::Free
            };
            grid.set(row, col, cell);
        }
    }
    grid
}

pub fn count_unobservable(grid: &OccupancyGrid) -> usize {
    grid.cells.iter().filter(|&&c| c == Cell::Unobservable).count()
}

/// Bins an unobservable count into ten equal intervals of [0, 1800);
/// counts at or above 1800 land in the top bin.
pub fn bin_observation(count: usize) -> usize {
    (count / COUNT_BIN_WIDTH).min(COUNT_BINS - 1)
}

/// True when a present pedestrian is inside the grid window and the line of
/// sight from the sensor origin is clear of every obstacle.
pub fn pedestrian_visible(scene: &Scene, pose: &EgoPose) -> bool {
    let Some(ped) = scene.pedestrian.filter(|p| p.present) else {
        return false;
    };
    let origin = pose.road_xy();
    let (dx, dy) = (ped.x - origin.0, ped.y - origin.1);
    if !(0.0..=FORWARD_RANGE).contains(&dx) || dy.abs() > LATERAL_RANGE {
        return false;
    }
    !scene
        .obstacles
        .iter()
        .any(|o| o.intersects_segment(origin, (ped.x, ped.y)))
}

/// Per-step sensor summary fed to the policies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensorObservation {
    pub unobservable_count: usize,
    pub count_bin: usize,
    pub pedestrian_detected: bool,
}

impl SensorObservation {
    pub fn new(unobservable_count: usize, pedestrian_detected: bool) -> Self {
        Self {
            unobservable_count,
            count_bin: bin_observation(unobservable_count),
            pedestrian_detected,
        }
    }
}

/// Builds the grid and the sensor summary for one pose.
pub fn sense(scene: &Scene, pose: &EgoPose) -> (OccupancyGrid, SensorObservation) {
    let grid = build_grid(scene, pose);
    let obs = SensorObservation::new(count_unobservable(&grid), pedestrian_visible(scene, pose));
    (grid, obs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn origin_pose() -> EgoPose {
        EgoPose {
            north: 0.0,
            east: 0.0,
            heading: 0.0,
        }
    }

    fn empty_scene() -> Scene {
        Scene {
            obstacles: vec![],
            ..Scene::reference(PedestrianPlacement::None)
        }
    }

    #[test]
    fn empty_scene_is_free() {
        let g = build_grid(&empty_scene(), &origin_pose());
        assert_eq!(g.dims(), (210, 48));
        assert!(g.cells().iter().all(|&c| c == Cell::Free));
        assert_eq!(count_unobservable(&g), 0);
    }

    #[test]
    fn obstacle_behind_is_ignored() {
        let mut scene = empty_scene();
        scene.obstacles.push(Obstacle::axis_aligned(-10.0, 0.0, 4.0, 2.0));
        let g = build_grid(&scene, &origin_pose());
        assert!(g.cells().iter().all(|&c| c == Cell::Free));
    }

    #[test]
    fn count_helpers() {
        let mut g = OccupancyGrid::all_free();
        assert_eq!(count_unobservable(&g), 0);
        g.set(5, 7, Cell::Unobservable);
        assert_eq!(count_unobservable(&g), 1);
    }

    #[test]
    fn binning_examples() {
        assert_eq!(bin_observation(0), 0);
        assert_eq!(bin_observation(179), 0);
        assert_eq!(bin_observation(180), 1);
        assert_eq!(bin_observation(900), 5);
        assert_eq!(bin_observation(1799), 9);
        assert_eq!(bin_observation(2500), 9);
    }

    #[test]
    fn pedestrian_visibility_examples() {
        let pose = origin_pose();
        assert!(!pedestrian_visible(&empty_scene(), &pose));

        let mut clear = empty_scene();
        clear.pedestrian = Some(Pedestrian {
            x: 41.5,
            y: 0.0,
            present: true,
        });
        assert!(pedestrian_visible(&clear, &pose));

        let hidden = Scene::reference(PedestrianPlacement::Hidden);
        assert!(!pedestrian_visible(&hidden, &pose));
        let exposed = Scene::reference(PedestrianPlacement::Exposed);
        assert!(pedestrian_visible(&exposed, &pose));

        let mut absent = hidden.clone();
        absent.pedestrian.as_mut().unwrap().present = false;
        assert!(!pedestrian_visible(&absent, &pose));
    }

    #[test]
    fn segment_test_cases() {
        let o = Obstacle::axis_aligned(10.0, 0.0, 2.0, 2.0);
        assert!(o.intersects_segment((0.0, 0.0), (20.0, 0.0)));
        assert!(!o.intersects_segment((0.0, 0.0), (8.0, 0.0)));
        assert!(!o.intersects_segment((0.0, 2.0), (20.0, 2.0)));
        assert!(o.intersects_segment((0.0, 3.0), (20.0, -3.0)));
        let rotated = Obstacle {
            yaw: std::f64::consts::FRAC_PI_4,
            ..o
        };
        assert!(rotated.contains(10.0, 1.3));
        assert!(!o.contains(10.0, 1.3));
    }

    #[test]
    fn csv_dump_shape() {
        let g = build_grid(&Scene::reference(PedestrianPlacement::None), &origin_pose());
        let csv = g.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 210);
        assert!(lines.iter().all(|l| l.split(',').count() == 48));
        assert!(csv.contains('1') && csv.contains('2'));
    }

    #[test]
    fn scene_toml_round_trip() {
        let scene = Scene::reference(PedestrianPlacement::Hidden);
        let text = toml::to_string(&scene).unwrap();
        assert_eq!(Scene::from_toml_str(&text).unwrap(), scene);
    }

    #[test]
    fn scene_validation() {
        let mut s = Scene::reference(PedestrianPlacement::Hidden);
        s.pedestrian.as_mut().unwrap().x = 10.0;
        assert!(matches!(
            s.validate(),
            Err(SceneError::PedestrianOutsideCrosswalk { .. })
        ));
        let mut s = Scene::reference(PedestrianPlacement::None);
        s.crosswalk.start = 70.0;
        assert!(matches!(s.validate(), Err(SceneError::CrosswalkOutOfRange(_))));
    }
}
