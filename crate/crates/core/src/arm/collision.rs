//! Sphere-swept link segments against oriented boxes, and the planning scene.

use std::collections::BTreeSet;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::chain::KinematicChain;
use super::ArmError;
use crate::geometry::{JointConfig, Pose};

/// Penetration below this depth counts as touching, not colliding.
pub const CONTACT_TOLERANCE: f64 = 1e-3;

/// Oriented box: `pose` is the box center, `dims` the full edge lengths.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrientedBox {
    pub pose: Pose,
    pub dims: [f64; 3],
}

impl OrientedBox {
    pub fn new(pose: Pose, dims: [f64; 3]) -> Self {
        Self { pose, dims }
    }

    pub fn half_extents(&self) -> Vector3<f64> {
        Vector3::new(self.dims[0], self.dims[1], self.dims[2]) * 0.5
    }

    pub fn circumradius(&self) -> f64 {
        self.half_extents().norm()
    }

    pub fn contains_point(&self, p: &Vector3<f64>) -> bool {
        let local = self.pose.inverse().transform_point(p);
        let h = self.half_extents();
        (0..3).all(|i| local[i].abs() <= h[i])
    }

    /// Euclidean distance from `p` to the solid box (zero inside).
    pub fn distance_to_point(&self, p: &Vector3<f64>) -> f64 {
        let local = self.pose.inverse().transform_point(p);
        point_aabb_distance(&local, &self.half_extents())
    }

    pub fn corners(&self) -> [Vector3<f64>; 8] {
        let h = self.half_extents();
        let mut out = [Vector3::zeros(); 8];
        for (i, c) in out.iter_mut().enumerate() {
            let s = |bit: usize| if i & (1 << bit) == 0 { -1.0 } else { 1.0 };
            *c = self
                .pose
                .transform_point(&Vector3::new(s(0) * h.x, s(1) * h.y, s(2) * h.z));
        }
        out
    }

    /// Separating-axis test; overlaps shallower than `tolerance` are ignored.
    pub fn intersects(&self, other: &OrientedBox, tolerance: f64) -> bool {
        let d = other.pose.translation - self.pose.translation;
        if d.norm() > self.circumradius() + other.circumradius() {
            return false;
        }
        let ra = self.pose.rotation_matrix();
        let rb = other.pose.rotation_matrix();
        let ha = self.half_extents();
        let hb = other.half_extents();
        let axes_a = [ra.column(0).into(), ra.column(1).into(), ra.column(2).into()];
        let axes_b = [rb.column(0).into(), rb.column(1).into(), rb.column(2).into()];
        let mut axes: Vec<Vector3<f64>> = Vec::with_capacity(15);
        axes.extend_from_slice(&axes_a);
        axes.extend_from_slice(&axes_b);
        for a in &axes_a {
            for b in &axes_b {
                let c: Vector3<f64> = a.cross(b);
                if c.norm() > 1e-9 {
                    axes.push(c.normalize());
                }
            }
        }
        for axis in &axes {
            let proj_a: f64 = (0..3).map(|i| ha[i] * axes_a[i].dot(axis).abs()).sum();
            let proj_b: f64 = (0..3).map(|i| hb[i] * axes_b[i].dot(axis).abs()).sum();
            let gap = d.dot(axis).abs() - (proj_a + proj_b);
            if gap > -tolerance {
                return false;
            }
        }
        true
    }
}

fn point_aabb_distance(p: &Vector3<f64>, half: &Vector3<f64>) -> f64 {
    let mut sq = 0.0;
    for i in 0..3 {
        let excess = p[i].abs() - half[i];
        if excess > 0.0 {
            sq += excess * excess;
        }
    }
    sq.sqrt()
}

/// A segment swept by a sphere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Capsule {
    pub a: Vector3<f64>,
    pub b: Vector3<f64>,
    pub radius: f64,
}

impl Capsule {
    pub fn point(&self, t: f64) -> Vector3<f64> {
        self.a + (self.b - self.a) * t
    }

    /// Distance from the segment's centerline to the box.
    ///
    /// The point-to-box distance is convex along the segment, so a golden-section
    /// search over the segment parameter finds the minimum.
    pub fn distance_to_box(&self, bx: &OrientedBox) -> f64 {
        let inv = bx.pose.inverse();
        let a = inv.transform_point(&self.a);
        let b = inv.transform_point(&self.b);
        let half = bx.half_extents();
        let f = |t: f64| point_aabb_distance(&(a + (b - a) * t), &half);
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let (mut lo, mut hi) = (0.0, 1.0);
        let mut x1 = hi - phi * (hi - lo);
        let mut x2 = lo + phi * (hi - lo);
        let (mut f1, mut f2) = (f(x1), f(x2));
        for _ in 0..64 {
            if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - phi * (hi - lo);
                f1 = f(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + phi * (hi - lo);
                f2 = f(x2);
            }
            if f1 == 0.0 || f2 == 0.0 {
                return 0.0;
            }
        }
        f1.min(f2).min(f(0.0)).min(f(1.0))
    }

    pub fn intersects_box(&self, bx: &OrientedBox) -> bool {
        let mid = (self.a + self.b) * 0.5;
        let half_len = (self.b - self.a).norm() * 0.5;
        if (mid - bx.pose.translation).norm() > half_len + self.radius + bx.circumradius() {
            return false;
        }
        self.distance_to_box(bx) < self.radius - CONTACT_TOLERANCE
    }
}

/// Upright cylinder around the world z axis bounding everything the arm may touch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorkspaceBounds {
    pub radius: f64,
    pub z_min: f64,
    pub z_max: f64,
}

impl Default for WorkspaceBounds {
    fn default() -> Self {
        Self {
            radius: 1.2,
            z_min: -0.2,
            z_max: 1.4,
        }
    }
}

impl WorkspaceBounds {
    /// True when a sphere of `radius` at `p` lies fully inside.
    pub fn contains_sphere(&self, p: &Vector3<f64>, radius: f64) -> bool {
        p.xy().norm() + radius <= self.radius && p.z - radius >= self.z_min && p.z + radius <= self.z_max
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub id: String,
    #[serde(flatten)]
    pub shape: OrientedBox,
}

/// Object rigidly held by the gripper.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttachedObject {
    pub id: String,
    pub dims: [f64; 3],
    /// Object pose expressed in the tool frame.
    pub grasp: Pose,
}

impl AttachedObject {
    pub fn shape_at(&self, tool: &Pose) -> OrientedBox {
        OrientedBox::new(tool * &self.grasp, self.dims)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlanningScene {
    pub obstacles: Vec<SceneObject>,
    pub bounds: WorkspaceBounds,
    pub disabled: BTreeSet<String>,
    pub attached: Option<AttachedObject>,
}

/// What a configuration touches.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ContactReport {
    pub obstacles: Vec<String>,
    pub out_of_bounds: bool,
}

impl ContactReport {
    pub fn is_clear(&self) -> bool {
        self.obstacles.is_empty() && !self.out_of_bounds
    }
}

impl PlanningScene {
    pub fn with_bounds(bounds: WorkspaceBounds) -> Self {
        Self {
            bounds,
            ..Default::default()
        }
    }

    pub fn contains(&self, id: &str) -> bool {
        self.obstacles.iter().any(|o| o.id == id) || self.attached.as_ref().is_some_and(|a| a.id == id)
    }

    pub fn object(&self, id: &str) -> Option<&SceneObject> {
        self.obstacles.iter().find(|o| o.id == id)
    }

    pub fn upsert(&mut self, object: SceneObject) {
        match self.obstacles.iter_mut().find(|o| o.id == object.id) {
            Some(slot) => *slot = object,
            None => self.obstacles.push(object),
        }
    }

    pub fn remove(&mut self, id: &str) -> Option<SceneObject> {
        let idx = self.obstacles.iter().position(|o| o.id == id)?;
        Some(self.obstacles.remove(idx))
    }

    /// Enables or disables collision checking against `id`.
    pub fn set_collisions(&mut self, id: &str, enabled: bool) -> Result<(), ArmError> {
        if !self.contains(id) {
            return Err(ArmError::UnknownObject(id.to_string()));
        }
        if enabled {
            self.disabled.remove(id);
        } else {
            self.disabled.insert(id.to_string());
        }
        Ok(())
    }

    pub fn is_active(&self, id: &str) -> bool {
        !self.disabled.contains(id)
    }

    pub fn active_obstacles(&self) -> impl Iterator<Item = &SceneObject> {
        self.obstacles.iter().filter(|o| self.is_active(&o.id))
    }

    /// Returns a copy with `id` additionally disabled.
    pub fn without(&self, id: &str) -> PlanningScene {
        let mut s = self.clone();
        s.disabled.insert(id.to_string());
        s
    }
}

/// The capsules swept by the arm links at `q`. The last capsule runs from the
/// flange to the tool point and uses the tool radius.
pub fn link_capsules(chain: &KinematicChain, q: &JointConfig) -> Result<Vec<Capsule>, ArmError> {
    let points = chain.link_points(q)?;
    let n = points.len();
    Ok(points
        .windows(2)
        .enumerate()
        .map(|(i, w)| Capsule {
            a: w[0],
            b: w[1],
            radius: if i + 2 == n {
                chain.tool_radius()
            } else {
                chain.link_radius()
            },
        })
        .collect())
}

/// Everything the arm (and its held object) touches at `q`.
pub fn contacts(chain: &KinematicChain, q: &JointConfig, scene: &PlanningScene) -> Result<ContactReport, ArmError> {
    let capsules = link_capsules(chain, q)?;
    let mut report = ContactReport {
        out_of_bounds: capsules
            .iter()
            .any(|c| !scene.bounds.contains_sphere(&c.a, c.radius) || !scene.bounds.contains_sphere(&c.b, c.radius)),
        ..ContactReport::default()
    };
    let held = match &scene.attached {
        Some(att) => Some(att.shape_at(&chain.forward_kinematics(q)?)),
        None => None,
    };
    if let Some(h) = &held {
        if h.corners().iter().any(|c| !scene.bounds.contains_sphere(c, 0.0)) {
            report.out_of_bounds = true;
        }
    }
    for obstacle in scene.active_obstacles() {
        let hit = capsules.iter().any(|c| c.intersects_box(&obstacle.shape))
            || held
                .as_ref()
                .is_some_and(|h| h.intersects(&obstacle.shape, CONTACT_TOLERANCE));
        if hit {
            report.obstacles.push(obstacle.id.clone());
        }
    }
    Ok(report)
}

/// True iff the arm at `q` touches an active obstacle, the held object touches
/// one, or anything leaves the workspace bounds.
pub fn collision_check(chain: &KinematicChain, q: &JointConfig, scene: &PlanningScene) -> Result<bool, ArmError> {
    let capsules = link_capsules(chain, q)?;
    let in_bounds =
        |c: &Capsule| scene.bounds.contains_sphere(&c.a, c.radius) && scene.bounds.contains_sphere(&c.b, c.radius);
    if !capsules.iter().all(in_bounds) {
        return Ok(true);
    }
    let held = match &scene.attached {
        Some(att) => {
            let shape = att.shape_at(&chain.forward_kinematics(q)?);
            if shape.corners().iter().any(|c| !scene.bounds.contains_sphere(c, 0.0)) {
                return Ok(true);
            }
            Some(shape)
        }
        None => None,
    };
    for obstacle in scene.active_obstacles() {
        if capsules.iter().any(|c| c.intersects_box(&obstacle.shape)) {
            return Ok(true);
        }
        if let Some(h) = &held {
            if h.intersects(&obstacle.shape, CONTACT_TOLERANCE) {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Checks the straight joint-space segment `a -> b` at `resolution` (max per-joint
/// step). `a` itself is not checked.
pub fn segment_is_free(
    chain: &KinematicChain,
    a: &JointConfig,
    b: &JointConfig,
    scene: &PlanningScene,
    resolution: f64,
) -> Result<bool, ArmError> {
    let steps = (a.max_abs_diff(b) / resolution).ceil().max(1.0) as usize;
    for k in 1..=steps {
        let q = a.lerp(b, k as f64 / steps as f64);
        if collision_check(chain, &q, scene)? {
            return Ok(false);
        }
    }
    Ok(true)
}
