//! Ground-truth 2D world: layout, discrete kinematics and simulated sensing.
//!
//! Objects are non-blocking semantic markers; only wall and clutter cells
//! occlude rays or block motion.

mod format;
mod generate;
pub mod vocab;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::grid::{Cell, CellWalk, GridDims, Point};

pub use format::{load_scene, load_scene_dir, parse_scene, save_scene, scene_to_json, SCENE_FORMAT_VERSION};
pub use generate::{generate_dataset, generate_scene, reachable_from, sample_episode, SceneParams};

/// Distance covered by one `Forward` action.
pub const FORWARD_STEP_M: f64 = 0.20;
/// Rotation of one turn action, in degrees.
pub const TURN_DEG: u16 = 30;
/// Goal must be visible and at most this far away when `Stop` is issued.
pub const SUCCESS_RADIUS_M: f64 = 0.25;

const HEADINGS: u8 = 12;

/// Heading as a multiple of 30°, counter-clockwise from +x.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(into = "u16", try_from = "u16")]
pub struct Heading(u8);

impl Heading {
    pub fn from_steps(steps: i32) -> Self {
        Self(steps.rem_euclid(HEADINGS as i32) as u8)
    }

    pub fn from_degrees(deg: u16) -> Option<Self> {
        (deg.is_multiple_of(TURN_DEG) && deg < 360).then_some(Self((deg / TURN_DEG) as u8))
    }

    pub fn steps(self) -> u8 {
        self.0
    }

    pub fn degrees(self) -> u16 {
        self.0 as u16 * TURN_DEG
    }

    pub fn radians(self) -> f64 {
        self.degrees() as f64 * PI / 180.0
    }

    /// Exact unit vector; avoids `cos(π/2) ≈ 6e-17` drift.
    pub fn unit(self) -> (f64, f64) {
        const H: f64 = 0.866_025_403_784_438_6; // √3/2
        const TABLE: [(f64, f64); 12] = [
            (1.0, 0.0),
            (H, 0.5),
            (0.5, H),
            (0.0, 1.0),
            (-0.5, H),
            (-H, 0.5),
            (-1.0, 0.0),
            (-H, -0.5),
            (-0.5, -H),
            (0.0, -1.0),
            (0.5, -H),
            (H, -0.5),
        ];
        TABLE[self.0 as usize]
    }

    pub fn left(self) -> Self {
        Self::from_steps(self.0 as i32 + 1)
    }

    pub fn right(self) -> Self {
        Self::from_steps(self.0 as i32 - 1)
    }
}

impl From<Heading> for u16 {
    fn from(h: Heading) -> u16 {
        h.degrees()
    }
}

impl TryFrom<u16> for Heading {
    type Error = String;
    fn try_from(deg: u16) -> Result<Self, String> {
        Heading::from_degrees(deg).ok_or_else(|| format!("heading {deg}° is not a multiple of 30 in [0, 360)"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    #[serde(rename = "heading_deg")]
    pub heading: Heading,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: Heading) -> Self {
        Self { x, y, heading }
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Forward,
    TurnLeft,
    TurnRight,
    Stop,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectInstance {
    pub category: String,
    pub anchor: Point,
    pub footprint: Vec<Cell>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub id: String,
    pub dims: GridDims,
    /// Row-major ground truth, `true` = occupied.
    pub occupied: Vec<bool>,
    pub objects: Vec<ObjectInstance>,
    pub start_pose: Pose,
    pub goal_category: String,
}

impl Scene {
    /// Out-of-bounds counts as occupied.
    pub fn is_occupied(&self, c: Cell) -> bool {
        !self.dims.contains(c) || self.occupied[self.dims.index(c)]
    }

    pub fn is_free(&self, c: Cell) -> bool {
        !self.is_occupied(c)
    }

    pub fn goal_instances(&self) -> impl Iterator<Item = &ObjectInstance> {
        self.objects
            .iter()
            .filter(move |o| o.category == self.goal_category)
    }

    /// True when no occupied cell lies on the segment between two points.
    pub fn line_of_sight(&self, from: Point, to: Point) -> bool {
        if !self.dims.contains(self.dims.world_to_cell(to.x, to.y)) {
            return false;
        }
        CellWalk::between(self.dims, (from.x, from.y), (to.x, to.y))
            .all(|(c, _)| !self.occupied[self.dims.index(c)])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorConfig {
    pub fov_deg: f64,
    pub n_rays: usize,
    pub max_range_m: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            fov_deg: 90.0,
            n_rays: 181,
            max_range_m: 5.0,
        }
    }
}

impl SensorConfig {
    /// Absolute ray angles (radians) for a given heading, left to right
    /// in ascending order. Odd ray counts include the exact center ray.
    pub fn ray_angles(&self, heading: Heading) -> impl Iterator<Item = f64> + '_ {
        let fov = self.fov_deg.to_radians();
        let base = heading.radians();
        let n = self.n_rays;
        (0..n).map(move |i| {
            if n == 1 {
                base
            } else {
                base - fov / 2.0 + fov * i as f64 / (n - 1) as f64
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RayReading {
    /// Absolute angle in radians.
    pub angle: f64,
    pub range: f64,
    pub hit: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VisibleObject {
    pub category: String,
    pub range: f64,
    /// Relative to the pose heading, radians in `(-π, π]`, positive = left.
    pub bearing: f64,
}

impl VisibleObject {
    /// World position reconstructed from range and bearing.
    pub fn world_position(&self, pose: &Pose) -> Point {
        let a = pose.heading.radians() + self.bearing;
        Point::new(pose.x + self.range * a.cos(), pose.y + self.range * a.sin())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub depth: Vec<RayReading>,
    pub visible_objects: Vec<VisibleObject>,
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// Applies one action. A blocked forward move leaves the pose unchanged.
pub fn step(scene: &Scene, pose: Pose, action: Action) -> Pose {
    match action {
        Action::Forward => {
            let (ux, uy) = pose.heading.unit();
            let next = Pose::new(
                pose.x + FORWARD_STEP_M * ux,
                pose.y + FORWARD_STEP_M * uy,
                pose.heading,
            );
            if !scene.dims.contains(scene.dims.world_to_cell(next.x, next.y)) {
                return pose;
            }
            let blocked = CellWalk::new(scene.dims, pose.x, pose.y, ux, uy, FORWARD_STEP_M)
                .any(|(c, _)| scene.occupied[scene.dims.index(c)]);
            if blocked {
                pose
            } else {
                next
            }
        }
        Action::TurnLeft => Pose {
            heading: pose.heading.left(),
            ..pose
        },
        Action::TurnRight => Pose {
            heading: pose.heading.right(),
            ..pose
        },
        Action::Stop => pose,
    }
}

/// Casts a single ray and returns `(range, hit)`.
pub fn cast_ray(scene: &Scene, origin: Point, angle: f64, max_range: f64) -> (f64, bool) {
    let (dx, dy) = (angle.cos(), angle.sin());
    for (c, t) in CellWalk::new(scene.dims, origin.x, origin.y, dx, dy, max_range) {
        if scene.occupied[scene.dims.index(c)] {
            return (t.min(max_range), true);
        }
    }
    (max_range, false)
}

pub fn sense(scene: &Scene, pose: &Pose, sensor: &SensorConfig) -> Observation {
    let origin = pose.position();
    let depth = sensor
        .ray_angles(pose.heading)
        .map(|angle| {
            let (range, hit) = cast_ray(scene, origin, angle, sensor.max_range_m);
            RayReading { angle, range, hit }
        })
        .collect();

    let half_fov = sensor.fov_deg.to_radians() / 2.0;
    let visible_objects = scene
        .objects
        .iter()
        .filter_map(|o| {
            let range = origin.dist(o.anchor);
            if range > sensor.max_range_m {
                return None;
            }
            let bearing = if range < 1e-9 {
                0.0
            } else {
                wrap_angle((o.anchor.y - pose.y).atan2(o.anchor.x - pose.x) - pose.heading.radians())
            };
            if bearing.abs() > half_fov + 1e-9 || !scene.line_of_sight(origin, o.anchor) {
                return None;
            }
            Some(VisibleObject {
                category: o.category.clone(),
                range,
                bearing,
            })
        })
        .collect();

    Observation {
        depth,
        visible_objects,
    }
}

/// Success predicate: a goal-category object is visible within the success radius.
pub fn goal_reached(scene: &Scene, _pose: &Pose, obs: &Observation) -> bool {
    obs.visible_objects
        .iter()
        .any(|v| v.category == scene.goal_category && v.range <= SUCCESS_RADIUS_M + 1e-9)
}
