//! Damped-least-squares inverse kinematics with seeded random restarts.

use nalgebra::{DVector, Matrix6, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::chain::KinematicChain;
use crate::geometry::{rotation_distance, translation_distance, JointConfig, Pose};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IkConfig {
    pub restarts: usize,
    pub max_iterations: usize,
    pub damping: f64,
    /// Largest joint update per iteration (L2, radians).
    pub max_step: f64,
    pub position_tolerance: f64,
    pub rotation_tolerance: f64,
    pub restart_seed: u64,
}

impl Default for IkConfig {
    fn default() -> Self {
        Self {
            restarts: 20,
            max_iterations: 150,
            damping: 0.02,
            max_step: 0.4,
            position_tolerance: 1e-3,
            rotation_tolerance: 1e-2,
            restart_seed: 0x1c0ffee,
        }
    }
}

#[derive(Clone, Debug)]
pub struct IkSolver {
    pub config: IkConfig,
}

impl Default for IkSolver {
    fn default() -> Self {
        Self::new(IkConfig::default())
    }
}

impl IkSolver {
    pub fn new(config: IkConfig) -> Self {
        Self { config }
    }

    /// Solves for a configuration reaching `target`, starting from `seed` and then
    /// from up to `restarts` random configurations. Returns `None` when no
    /// attempt lands within tolerance and joint limits.
    pub fn solve(&self, chain: &KinematicChain, target: &Pose, seed: &JointConfig) -> Option<JointConfig> {
        if seed.len() != chain.dof() {
            return None;
        }
        let shoulder = chain.base().translation;
        if (target.translation - shoulder).norm() > chain.reach() + self.config.position_tolerance {
            return None;
        }
        if let Some(q) = self.descend(chain, target, seed.clone()) {
            return Some(q);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.restart_seed);
        for _ in 0..self.config.restarts {
            let start = JointConfig(chain.limits().map(|(lo, hi)| rng.random_range(lo..=hi)).collect());
            if let Some(q) = self.descend(chain, target, start) {
                return Some(q);
            }
        }
        None
    }

    /// Single damped-least-squares descent without restarts.
    pub fn descend(&self, chain: &KinematicChain, target: &Pose, mut q: JointConfig) -> Option<JointConfig> {
        chain.clamp(&mut q);
        let lambda2 = self.config.damping * self.config.damping;
        for _ in 0..self.config.max_iterations {
            let current = chain.forward_kinematics(&q).ok()?;
            let err = pose_error(&current, target);
            let pos_err = err.fixed_rows::<3>(0).norm();
            let rot_err = err.fixed_rows::<3>(3).norm();
            if pos_err < 0.05 * self.config.position_tolerance && rot_err < 0.05 * self.config.rotation_tolerance {
                break;
            }
            let jac = chain.jacobian(&q).ok()?;
            let jjt: Matrix6<f64> = (&jac * jac.transpose()).fixed_view::<6, 6>(0, 0).into();
            let solved = (jjt + Matrix6::identity() * lambda2)
                .cholesky()
                .map(|c| c.solve(&err))?;
            let mut dq: DVector<f64> = jac.transpose() * solved;
            let norm = dq.norm();
            if norm > self.config.max_step {
                dq *= self.config.max_step / norm;
            }
            for (v, d) in q.0.iter_mut().zip(dq.iter()) {
                *v += d;
            }
            chain.clamp(&mut q);
        }
        self.accepts(chain, target, &q).then_some(q)
    }

    pub fn accepts(&self, chain: &KinematicChain, target: &Pose, q: &JointConfig) -> bool {
        if !chain.within_limits(q) {
            return false;
        }
        match chain.forward_kinematics(q) {
            Ok(p) => {
                translation_distance(&p, target) <= self.config.position_tolerance
                    && rotation_distance(&p, target) <= self.config.rotation_tolerance
            }
            Err(_) => false,
        }
    }
}

/// `[target.t - current.t; log(target.R * current.R^T)]`, both in the world frame.
fn pose_error(current: &Pose, target: &Pose) -> Vector6<f64> {
    let dp = target.translation - current.translation;
    let dr = (target.rotation * current.rotation.inverse()).scaled_axis();
    Vector6::new(dp.x, dp.y, dp.z, dr.x, dr.y, dr.z)
}
