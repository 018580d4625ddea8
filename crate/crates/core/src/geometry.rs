//! Rigid transforms, joint vectors and the distance metrics used for goal ranking.
//!
//! Rotations are stored as unit quaternions. Rotation matrices are accepted at
//! the boundary ([`Pose::from_matrix`]) and converted immediately.

use std::fmt;
use std::ops::Mul;

use nalgebra::{Matrix3, Matrix4, Rotation3, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected} joints, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("quaternion has zero or non-finite norm")]
    DegenerateRotation,
    #[error("non-finite value in pose")]
    NonFinite,
}

/// A rigid transform in SE(3): rotate, then translate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub translation: Vector3<f64>,
    pub rotation: UnitQuaternion<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            translation: Vector3::zeros(),
            rotation: UnitQuaternion::identity(),
        }
    }

    pub fn new(translation: Vector3<f64>, rotation: UnitQuaternion<f64>) -> Self {
        Self {
            translation,
            rotation: renormalize(rotation),
        }
    }

    pub fn from_translation(x: f64, y: f64, z: f64) -> Self {
        Self::new(Vector3::new(x, y, z), UnitQuaternion::identity())
    }

    pub fn from_axis_angle(axis: Vector3<f64>, angle: f64) -> Self {
        Self::new(
            Vector3::zeros(),
            UnitQuaternion::from_axis_angle(&Unit::new_normalize(axis), angle),
        )
    }

    pub fn rot_z(angle: f64) -> Self {
        Self::from_axis_angle(Vector3::z(), angle)
    }

    /// Builds a pose from a rotation matrix, re-orthonormalizing it first.
    pub fn from_matrix(rotation: &Matrix3<f64>, translation: Vector3<f64>) -> Self {
        let rot = Rotation3::from_matrix(rotation);
        Self::new(translation, UnitQuaternion::from_rotation_matrix(&rot))
    }

    /// Builds a pose from `[qx, qy, qz, qw]`, normalizing the quaternion.
    pub fn from_components(t: [f64; 3], q: [f64; 4]) -> Result<Self, GeometryError> {
        if t.iter().chain(q.iter()).any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let raw = nalgebra::Quaternion::new(q[3], q[0], q[1], q[2]);
        let norm = raw.norm();
        if norm < 1e-12 || !norm.is_finite() {
            return Err(GeometryError::DegenerateRotation);
        }
        Ok(Self::new(
            Vector3::new(t[0], t[1], t[2]),
            UnitQuaternion::new_normalize(raw),
        ))
    }

    pub fn compose(&self, other: &Pose) -> Pose {
        Pose::new(
            self.translation + self.rotation * other.translation,
            self.rotation * other.rotation,
        )
    }

    pub fn inverse(&self) -> Pose {
        let inv = self.rotation.inverse();
        Pose::new(-(inv * self.translation), inv)
    }

    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn transform_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    pub fn x_axis(&self) -> Vector3<f64> {
        self.rotation * Vector3::x()
    }

    pub fn y_axis(&self) -> Vector3<f64> {
        self.rotation * Vector3::y()
    }

    pub fn z_axis(&self) -> Vector3<f64> {
        self.rotation * Vector3::z()
    }

    /// Same orientation, translation shifted by `offset` in the parent frame.
    pub fn translated(&self, offset: &Vector3<f64>) -> Pose {
        Pose {
            translation: self.translation + offset,
            rotation: self.rotation,
        }
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        self.rotation.to_rotation_matrix().into_inner()
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation_matrix());
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    pub fn translation_array(&self) -> [f64; 3] {
        [self.translation.x, self.translation.y, self.translation.z]
    }

    /// `[qx, qy, qz, qw]`
    pub fn rotation_array(&self) -> [f64; 4] {
        let q = self.rotation.quaternion();
        [q.i, q.j, q.k, q.w]
    }

    /// Linear interpolation of translation with spherical interpolation of rotation.
    pub fn interpolate(&self, other: &Pose, s: f64) -> Pose {
        let rotation = self
            .rotation
            .try_slerp(&other.rotation, s, 1e-12)
            .unwrap_or(other.rotation);
        Pose::new(self.translation.lerp(&other.translation, s), rotation)
    }
}

impl Mul for Pose {
    type Output = Pose;

    fn mul(self, rhs: Pose) -> Pose {
        self.compose(&rhs)
    }
}

impl Mul<&Pose> for &Pose {
    type Output = Pose;

    fn mul(self, rhs: &Pose) -> Pose {
        self.compose(rhs)
    }
}

impl fmt::Display for Pose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = self.translation_array();
        let q = self.rotation_array();
        write!(
            f,
            "t=[{:.4}, {:.4}, {:.4}] q=[{:.4}, {:.4}, {:.4}, {:.4}]",
            t[0], t[1], t[2], q[0], q[1], q[2], q[3]
        )
    }
}

fn renormalize(q: UnitQuaternion<f64>) -> UnitQuaternion<f64> {
    UnitQuaternion::new_normalize(q.into_inner())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoseDoc {
    translation: [f64; 3],
    rotation: [f64; 4],
}

impl Serialize for Pose {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        PoseDoc {
            translation: self.translation_array(),
            rotation: self.rotation_array(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Pose {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let doc = PoseDoc::deserialize(deserializer)?;
        Pose::from_components(doc.translation, doc.rotation).map_err(serde::de::Error::custom)
    }
}

/// Euclidean distance between the two translations, in meters.
pub fn translation_distance(a: &Pose, b: &Pose) -> f64 {
    (a.translation - b.translation).norm()
}

/// Geodesic angle on SO(3) between the two rotations, in `[0, pi]`.
///
/// Uses `2 atan2(|v|, |w|)` of the relative quaternion, which is insensitive to
/// the quaternion sign and stays accurate near zero and near pi.
pub fn rotation_distance(a: &Pose, b: &Pose) -> f64 {
    let rel = a.rotation.inverse() * b.rotation;
    let q = rel.quaternion();
    2.0 * q.imag().norm().atan2(q.w.abs())
}

/// A vector of joint angles in radians.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct JointConfig(pub Vec<f64>);

impl JointConfig {
    pub fn new(angles: Vec<f64>) -> Self {
        Self(angles)
    }

    pub fn zeros(dof: usize) -> Self {
        Self(vec![0.0; dof])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn lerp(&self, other: &JointConfig, s: f64) -> JointConfig {
        if s >= 1.0 {
            return other.clone();
        }
        JointConfig(self.0.iter().zip(&other.0).map(|(a, b)| a + (b - a) * s).collect())
    }

    /// Largest single-joint difference.
    pub fn max_abs_diff(&self, other: &JointConfig) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl From<Vec<f64>> for JointConfig {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl std::ops::Index<usize> for JointConfig {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Norm used for the joint-space term of the goal cost.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointMetric {
    #[default]
    L2,
    LInf,
}

/// L2 distance between two joint vectors.
pub fn joint_distance(a: &JointConfig, b: &JointConfig) -> Result<f64, GeometryError> {
    joint_distance_with(a, b, JointMetric::L2)
}

pub fn joint_distance_with(a: &JointConfig, b: &JointConfig, metric: JointMetric) -> Result<f64, GeometryError> {
    if a.len() != b.len() {
        return Err(GeometryError::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let diffs = a.0.iter().zip(&b.0).map(|(x, y)| x - y);
    Ok(match metric {
        JointMetric::L2 => diffs.map(|d| d * d).sum::<f64>().sqrt(),
        JointMetric::LInf => diffs.map(f64::abs).fold(0.0, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn arb_pose() -> impl Strategy<Value = Pose> {
        (prop::array::uniform3(-2.0..2.0f64), prop::array::uniform4(-1.0..1.0f64)).prop_filter_map(
            "degenerate quaternion",
            |(t, q)| {
                let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
                (n > 0.1).then(|| Pose::from_components(t, q).unwrap())
            },
        )
    }

    fn arb_joints(n: usize) -> impl Strategy<Value = JointConfig> {
        prop::collection::vec(-PI..PI, n).prop_map(JointConfig)
    }

    #[test]
    fn compose_identity_and_inverse() {
        let p = Pose::new(
            Vector3::new(0.3, -0.2, 1.1),
            UnitQuaternion::from_euler_angles(0.3, -1.2, 2.0),
        );
        let left = Pose::identity() * p;
        assert_relative_eq!(left.translation, p.translation, epsilon = 1e-12);
        assert!(rotation_distance(&left, &p) < 1e-12);

        let id = p * p.inverse();
        assert!(id.translation.norm() < 1e-9);
        assert!(rotation_distance(&id, &Pose::identity()) < 1e-9);
    }

    #[test]
    fn compose_commuting_translations() {
        let t = Pose::from_translation(1.0, 0.0, 0.0);
        let sum = t * t;
        assert_relative_eq!(sum.translation, Vector3::new(2.0, 0.0, 0.0), epsilon = 1e-12);
    }

    #[test]
    fn translation_distance_cases() {
        let p = Pose::from_translation(0.1, 0.2, 0.3);
        assert_eq!(translation_distance(&p, &p), 0.0);
        let o = Pose::identity();
        let q = Pose::from_translation(3.0, 4.0, 0.0);
        assert_relative_eq!(translation_distance(&o, &q), 5.0, epsilon = 1e-12);
    }

    #[test]
    fn rotation_distance_cases() {
        let p = Pose::rot_z(0.7);
        assert!(rotation_distance(&p, &p) < 1e-12);
        assert_relative_eq!(
            rotation_distance(&Pose::identity(), &Pose::rot_z(FRAC_PI_2)),
            FRAC_PI_2,
            epsilon = 1e-12
        );
        // same rotation, opposite quaternion sign
        let q = Pose::rot_z(1.3).rotation.into_inner();
        let neg = Pose::from_components([0.0; 3], [-q.i, -q.j, -q.k, -q.w]).unwrap();
        assert!(rotation_distance(&Pose::rot_z(1.3), &neg) < 1e-12);
        // half turn
        assert_relative_eq!(
            rotation_distance(&Pose::identity(), &Pose::rot_z(PI)),
            PI,
            epsilon = 1e-12
        );
    }

    #[test]
    fn joint_distance_cases() {
        let q = JointConfig(vec![0.1, 0.2]);
        assert_eq!(joint_distance(&q, &q).unwrap(), 0.0);
        let a = JointConfig(vec![0.0, 0.0]);
        let b = JointConfig(vec![3.0, 4.0]);
        assert_relative_eq!(joint_distance(&a, &b).unwrap(), 5.0);
        assert_relative_eq!(joint_distance_with(&a, &b, JointMetric::LInf).unwrap(), 4.0);
        assert_eq!(
            joint_distance(&a, &JointConfig(vec![1.0])),
            Err(GeometryError::DimensionMismatch { expected: 2, found: 1 })
        );
    }

    #[test]
    fn matrix_boundary_round_trip() {
        let p = Pose::new(
            Vector3::new(1.0, 2.0, 3.0),
            UnitQuaternion::from_euler_angles(0.1, 0.2, 0.3),
        );
        let back = Pose::from_matrix(&p.rotation_matrix(), p.translation);
        assert!(rotation_distance(&p, &back) < 1e-12);
    }

    #[test]
    fn serde_layout() {
        let p = Pose::from_translation(1.0, 2.0, 3.0);
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"translation":[1.0,2.0,3.0],"rotation":[0.0,0.0,0.0,1.0]}"#);
        let bad = r#"{"translation":[0,0,0],"rotation":[0,0,0,0]}"#;
        assert!(serde_json::from_str::<Pose>(bad).is_err());
        let unnormalized = r#"{"translation":[0,0,0],"rotation":[0,0,0,2]}"#;
        let p: Pose = serde_json::from_str(unnormalized).unwrap();
        assert_relative_eq!(p.rotation.quaternion().norm(), 1.0, epsilon = 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn compose_keeps_unit_norm_and_inverts(a in arb_pose(), b in arb_pose()) {
            let c = a * b;
            prop_assert!((c.rotation.quaternion().norm() - 1.0).abs() < 1e-9);
            let id = c * c.inverse();
            prop_assert!(id.translation.norm() < 1e-9);
            prop_assert!(rotation_distance(&id, &Pose::identity()) < 1e-9);
        }

        #[test]
        fn compose_is_associative(a in arb_pose(), b in arb_pose(), c in arb_pose()) {
            let l = (a * b) * c;
            let r = a * (b * c);
            prop_assert!(translation_distance(&l, &r) < 1e-9);
            prop_assert!(rotation_distance(&l, &r) < 1e-9);
        }

        #[test]
        fn translation_metric_axioms(a in arb_pose(), b in arb_pose(), c in arb_pose()) {
            let ab = translation_distance(&a, &b);
            let d = a.translation - b.translation;
            let brute = (d.x * d.x + d.y * d.y + d.z * d.z).sqrt();
            prop_assert!((ab - brute).abs() < 1e-12);
            prop_assert!((ab - translation_distance(&b, &a)).abs() < 1e-12);
            prop_assert!(ab <= translation_distance(&a, &c) + translation_distance(&c, &b) + 1e-9);
        }

        #[test]
        fn rotation_metric_axioms(a in arb_pose(), b in arb_pose(), c in arb_pose()) {
            let ab = rotation_distance(&a, &b);
            prop_assert!((0.0..=PI + 1e-12).contains(&ab));
            prop_assert!((ab - rotation_distance(&b, &a)).abs() < 1e-9);
            prop_assert!(ab <= rotation_distance(&a, &c) + rotation_distance(&c, &b) + 1e-9);
        }

        #[test]
        fn rotation_metric_left_invariant(a in arb_pose(), b in arb_pose(), g in arb_pose()) {
            let ga = Pose::new(Vector3::zeros(), g.rotation * a.rotation);
            let gb = Pose::new(Vector3::zeros(), g.rotation * b.rotation);
            prop_assert!((rotation_distance(&ga, &gb) - rotation_distance(&a, &b)).abs() < 1e-9);
        }

        #[test]
        fn joint_metric_axioms(a in arb_joints(6), b in arb_joints(6), c in arb_joints(6)) {
            let ab = joint_distance(&a, &b).unwrap();
            let brute = a.0.iter().zip(&b.0).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            prop_assert!((ab - brute).abs() < 1e-12);
            prop_assert!((ab - joint_distance(&b, &a).unwrap()).abs() < 1e-12);
            prop_assert!(ab <= joint_distance(&a, &c).unwrap() + joint_distance(&c, &b).unwrap() + 1e-9);
            let inf = joint_distance_with(&a, &b, JointMetric::LInf).unwrap();
            prop_assert!(inf <= joint_distance_with(&a, &c, JointMetric::LInf).unwrap()
                + joint_distance_with(&c, &b, JointMetric::LInf).unwrap() + 1e-9);
        }
    }
}
