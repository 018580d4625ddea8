//! Serial DH chains and forward kinematics.

use nalgebra::{Matrix6xX, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::ArmError;
use crate::geometry::{JointConfig, Pose};

/// One revolute joint in standard Denavit-Hartenberg form:
/// `Rz(theta + theta_offset) * Tz(d) * Tx(a) * Rx(alpha)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DhJoint {
    pub a: f64,
    pub alpha: f64,
    pub d: f64,
    #[serde(default)]
    pub theta_offset: f64,
    /// `[low, high]` in radians.
    pub limits: [f64; 2],
}

impl DhJoint {
    fn transform(&self, theta: f64) -> Pose {
        let rz = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), theta + self.theta_offset);
        let rx = UnitQuaternion::from_axis_angle(&Vector3::x_axis(), self.alpha);
        Pose::new(rz * Vector3::new(self.a, 0.0, self.d), rz * rx)
    }
}

/// Chain config document as shipped in `data/chains/`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub name: String,
    #[serde(default)]
    pub base: Pose,
    pub joints: Vec<DhJoint>,
    pub ee_offset: Pose,
    #[serde(default = "default_link_radius")]
    pub link_radius: f64,
    /// Radius of the flange-to-tool segment; defaults to `link_radius`.
    #[serde(default)]
    pub tool_radius: Option<f64>,
    /// Configuration giving the camera an unobstructed view of the workspace.
    pub home: Vec<f64>,
}

fn default_link_radius() -> f64 {
    0.05
}

#[derive(Clone, Debug, PartialEq)]
pub struct KinematicChain {
    config: ChainConfig,
    reach: f64,
}

impl KinematicChain {
    pub fn from_config(config: ChainConfig) -> Result<Self, ArmError> {
        if config.joints.is_empty() {
            return Err(ArmError::InvalidChain("chain needs at least one joint".into()));
        }
        for (i, j) in config.joints.iter().enumerate() {
            let [lo, hi] = j.limits;
            if !(lo < hi) {
                return Err(ArmError::InvalidChain(format!(
                    "joint {i}: limits not ordered ({lo} >= {hi})"
                )));
            }
            if ![j.a, j.alpha, j.d, j.theta_offset].iter().all(|v| v.is_finite()) {
                return Err(ArmError::InvalidChain(format!("joint {i}: non-finite parameter")));
            }
        }
        if config.link_radius < 0.0 || config.tool_radius.is_some_and(|r| r < 0.0) {
            return Err(ArmError::InvalidChain("negative collision radius".into()));
        }
        if config.home.len() != config.joints.len() {
            return Err(ArmError::InvalidChain(format!(
                "home has {} angles, chain has {} joints",
                config.home.len(),
                config.joints.len()
            )));
        }
        let reach =
            config.joints.iter().map(|j| j.a.abs() + j.d.abs()).sum::<f64>() + config.ee_offset.translation.norm();
        let chain = Self { config, reach };
        let home = chain.home();
        if !chain.within_limits(&home) {
            return Err(ArmError::InvalidChain("home outside joint limits".into()));
        }
        Ok(chain)
    }

    pub fn from_json(text: &str) -> Result<Self, ArmError> {
        let config: ChainConfig = serde_json::from_str(text).map_err(|e| ArmError::InvalidChain(e.to_string()))?;
        Self::from_config(config)
    }

    /// Two-link planar arm with unit links, used throughout the tests.
    pub fn planar(links: &[f64]) -> Self {
        let joints = links
            .iter()
            .map(|&a| DhJoint {
                a,
                alpha: 0.0,
                d: 0.0,
                theta_offset: 0.0,
                limits: [-std::f64::consts::PI, std::f64::consts::PI],
            })
            .collect::<Vec<_>>();
        let home = vec![0.0; joints.len()];
        Self::from_config(ChainConfig {
            name: "planar".into(),
            base: Pose::identity(),
            joints,
            ee_offset: Pose::identity(),
            link_radius: 0.05,
            tool_radius: None,
            home,
        })
        .expect("planar chain is valid")
    }

    pub fn config(&self) -> &ChainConfig {
        &self.config
    }

    pub fn dof(&self) -> usize {
        self.config.joints.len()
    }

    pub fn joints(&self) -> &[DhJoint] {
        &self.config.joints
    }

    pub fn base(&self) -> &Pose {
        &self.config.base
    }

    pub fn home(&self) -> JointConfig {
        JointConfig(self.config.home.clone())
    }

    /// Conservative upper bound on the distance from the base to the tool point.
    pub fn reach(&self) -> f64 {
        self.reach
    }

    pub fn link_radius(&self) -> f64 {
        self.config.link_radius
    }

    pub fn tool_radius(&self) -> f64 {
        self.config.tool_radius.unwrap_or(self.config.link_radius)
    }

    pub fn limits(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.config.joints.iter().map(|j| (j.limits[0], j.limits[1]))
    }

    pub fn within_limits(&self, q: &JointConfig) -> bool {
        q.len() == self.dof() && q.0.iter().zip(self.limits()).all(|(v, (lo, hi))| *v >= lo && *v <= hi)
    }

    pub fn clamp(&self, q: &mut JointConfig) {
        for (v, (lo, hi)) in q.0.iter_mut().zip(self.limits()) {
            *v = v.clamp(lo, hi);
        }
    }

    pub(crate) fn check_dof(&self, q: &JointConfig) -> Result<(), ArmError> {
        if q.len() != self.dof() {
            return Err(ArmError::Dimension {
                expected: self.dof(),
                found: q.len(),
            });
        }
        Ok(())
    }

    /// Frames of every joint: `frames[0]` is the base, `frames[i]` the frame after
    /// joint `i`, and the final entry is the tool frame.
    pub fn frames(&self, q: &JointConfig) -> Result<Vec<Pose>, ArmError> {
        self.check_dof(q)?;
        let mut frames = Vec::with_capacity(self.dof() + 2);
        let mut current = self.config.base;
        frames.push(current);
        for (joint, theta) in self.config.joints.iter().zip(&q.0) {
            current = current * joint.transform(*theta);
            frames.push(current);
        }
        frames.push(current * self.config.ee_offset);
        Ok(frames)
    }

    pub fn forward_kinematics(&self, q: &JointConfig) -> Result<Pose, ArmError> {
        Ok(*self.frames(q)?.last().expect("frames is never empty"))
    }

    /// Points between which the collision capsules are swept: base origin, each
    /// joint frame origin, tool point.
    pub fn link_points(&self, q: &JointConfig) -> Result<Vec<Vector3<f64>>, ArmError> {
        Ok(self.frames(q)?.iter().map(|f| f.translation).collect())
    }

    /// Geometric Jacobian of the tool frame; rows are `[v; w]`.
    pub fn jacobian(&self, q: &JointConfig) -> Result<Matrix6xX<f64>, ArmError> {
        let frames = self.frames(q)?;
        let tool = frames.last().expect("frames is never empty").translation;
        let mut jac = Matrix6xX::zeros(self.dof());
        for (i, frame) in frames.iter().take(self.dof()).enumerate() {
            // joint i rotates about the z axis of the frame preceding it
            let z = frame.z_axis();
            let p = frame.translation;
            let lin = z.cross(&(tool - p));
            jac.fixed_view_mut::<3, 1>(0, i).copy_from(&lin);
            jac.fixed_view_mut::<3, 1>(3, i).copy_from(&z);
        }
        Ok(jac)
    }
}
