use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::arm::{Capsule, OrientedBox, CONTACT_TOLERANCE};
use crate::geometry::{JointConfig, Pose};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GripperState {
    Open,
    Closed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldObject {
    /// Ground-truth identity; never shown to the robot.
    pub uid: String,
    #[serde(rename = "class")]
    pub object_class: String,
    pub pose: Pose,
    pub initial_pose: Pose,
    pub dims: [f64; 3],
    /// Order of the rotational symmetry about the object's z axis.
    pub symmetry_order: usize,
    /// Fixtures (the table) never move and are always known to the planner.
    pub fixed: bool,
}

impl WorldObject {
    pub fn shape(&self) -> OrientedBox {
        OrientedBox::new(self.pose, self.dims)
    }

    pub fn top(&self) -> f64 {
        self.pose.translation.z + 0.5 * self.dims[2]
    }

    /// Whether the point's x/y lies over this object's footprint.
    pub fn covers(&self, p: &Vector3<f64>) -> bool {
        let local = self.pose.inverse().transform_point(p);
        local.x.abs() <= 0.5 * self.dims[0] && local.y.abs() <= 0.5 * self.dims[1]
    }
}

/// Circular region on the table, in world x/y.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Workspace {
    pub center: [f64; 2],
    pub radius: f64,
}

impl Workspace {
    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        let dx = p.x - self.center[0];
        let dy = p.y - self.center[1];
        (dx * dx + dy * dy).sqrt() <= self.radius
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Attachment {
    pub uid: String,
    /// Object pose in the tool frame.
    pub grasp: Pose,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub objects: Vec<WorldObject>,
    pub table_frame: Pose,
    pub workspace: Workspace,
    pub q: JointConfig,
    pub gripper: GripperState,
    pub attached: Option<Attachment>,
}

/// How far from an object's vertical axis the tool point may be for a close to grab it.
pub const GRASP_CAPTURE_RADIUS: f64 = 0.02;

fn upright(rotation: &UnitQuaternion<f64>) -> UnitQuaternion<f64> {
    let x = rotation * Vector3::x();
    UnitQuaternion::from_axis_angle(&Vector3::z_axis(), x.y.atan2(x.x))
}

impl WorldState {
    pub fn object(&self, uid: &str) -> Option<&WorldObject> {
        self.objects.iter().find(|o| o.uid == uid)
    }

    fn object_mut(&mut self, uid: &str) -> Option<&mut WorldObject> {
        self.objects.iter_mut().find(|o| o.uid == uid)
    }

    pub fn table_height(&self) -> f64 {
        self.table_frame.translation.z
    }

    pub fn is_attached(&self, uid: &str) -> bool {
        self.attached.as_ref().is_some_and(|a| a.uid == uid)
    }

    /// Free objects that are not in the gripper.
    pub fn loose_objects(&self) -> impl Iterator<Item = &WorldObject> {
        self.objects.iter().filter(|o| !o.fixed && !self.is_attached(&o.uid))
    }

    /// Moves the held object along with the tool.
    pub fn carry(&mut self, tool: &Pose) {
        if let Some(att) = self.attached.clone() {
            if let Some(o) = self.object_mut(&att.uid) {
                o.pose = tool * &att.grasp;
            }
        }
    }

    /// Closes the gripper. Attaches the loose object that [`grasp_offset`]
    /// accepts with the smallest offset, if any.
    pub fn close_gripper(&mut self, tool: &Pose) -> Option<String> {
        self.gripper = GripperState::Closed;
        if self.attached.is_some() {
            return None;
        }
        let hit = self
            .loose_objects()
            .filter_map(|o| Some((grasp_offset(&o.pose, o.dims, &tool.translation)?, o.uid.clone())))
            .min_by(|a, b| a.0.total_cmp(&b.0))?;
        let obj = self.object(&hit.1)?;
        self.attached = Some(Attachment {
            uid: hit.1.clone(),
            grasp: tool.inverse() * obj.pose,
        });
        Some(hit.1)
    }

    /// Opens the gripper; a held object drops onto whatever is under it.
    pub fn open_gripper(&mut self) -> Option<String> {
        self.gripper = GripperState::Open;
        let att = self.attached.take()?;
        self.settle(&att.uid);
        Some(att.uid)
    }

    /// Highest support surface under `p` other than `uid` itself.
    pub fn support_height(&self, uid: &str, p: &Vector3<f64>) -> f64 {
        self.objects
            .iter()
            .filter(|o| o.uid != uid && !self.is_attached(&o.uid))
            .filter(|o| o.covers(p) && o.top() <= p.z + 1e-9)
            .map(WorldObject::top)
            .fold(self.table_height(), f64::max)
    }

    /// Drops an object straight down onto its support and stands it upright.
    pub fn settle(&mut self, uid: &str) {
        let Some(obj) = self.object(uid) else { return };
        let center = obj.pose.translation;
        let half = 0.5 * obj.dims[2];
        let bottom = Vector3::new(center.x, center.y, center.z - half);
        let z = self.support_height(uid, &bottom) + half;
        let rotation = upright(&obj.pose.rotation);
        if let Some(o) = self.object_mut(uid) {
            o.pose = Pose::new(Vector3::new(center.x, center.y, z), rotation);
        }
    }

    /// Pushes loose objects out of the way of the arm. Returns the uids moved.
    /// Objects in `immune` (the one being grasped or just released) are left alone.
    pub fn push_objects(&mut self, capsules: &[Capsule], held: Option<&OrientedBox>, immune: &[String]) -> Vec<String> {
        let mut moved = Vec::new();
        let candidates: Vec<String> = self
            .loose_objects()
            .filter(|o| !immune.contains(&o.uid))
            .map(|o| o.uid.clone())
            .collect();
        for uid in candidates {
            let obj = self.object(&uid).expect("candidate exists").clone();
            let shape = obj.shape();
            let center = obj.pose.translation;
            let mut push: Option<Vector3<f64>> = None;
            for c in capsules {
                let d = c.distance_to_box(&shape);
                if d >= c.radius - CONTACT_TOLERANCE {
                    continue;
                }
                let contact = (0..=20)
                    .map(|i| c.point(i as f64 / 20.0))
                    .min_by(|a, b| shape.distance_to_point(a).total_cmp(&shape.distance_to_point(b)))
                    .expect("non-empty");
                let dir = horizontal(center - contact);
                push = Some(dir * (c.radius - d + 0.01));
                break;
            }
            if push.is_none() {
                if let Some(h) = held {
                    if h.intersects(&shape, CONTACT_TOLERANCE) {
                        push = Some(horizontal(center - h.pose.translation) * 0.02);
                    }
                }
            }
            if let Some(v) = push {
                if let Some(o) = self.object_mut(&uid) {
                    o.pose.translation += v;
                }
                self.settle(&uid);
                moved.push(uid);
            }
        }
        moved
    }

    /// Loose objects whose box contains `p`.
    pub fn objects_containing(&self, p: &Vector3<f64>) -> Vec<String> {
        self.loose_objects()
            .filter(|o| o.shape().contains_point(p))
            .map(|o| o.uid.clone())
            .collect()
    }

    /// Position in the table frame.
    pub fn in_table_frame(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.table_frame.inverse().transform_point(p)
    }
}

/// Lateral distance of `tool` from the object's vertical axis when the tool
/// point is inside the object and close enough to that axis for the fingers
/// to close on it.
pub fn grasp_offset(pose: &Pose, dims: [f64; 3], tool: &Vector3<f64>) -> Option<f64> {
    let local = pose.inverse().transform_point(tool);
    let lateral = local.xy().norm();
    (local.z.abs() <= 0.5 * dims[2] && lateral <= GRASP_CAPTURE_RADIUS).then_some(lateral)
}

fn horizontal(v: Vector3<f64>) -> Vector3<f64> {
    let h = Vector3::new(v.x, v.y, 0.0);
    if h.norm() < 1e-9 {
        Vector3::x()
    } else {
        h.normalize()
    }
}
