//! Goal ranking cost: weighted joint, translation and rotation deltas plus a
//! flat penalty for a projected collision.

use serde::{Deserialize, Serialize};

use super::KnowledgeError;
use crate::arm::KinematicChain;
use crate::geometry::JointMetric;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostWeights {
    /// Per radian of joint-space distance.
    pub w_q: f64,
    /// Per meter of tool translation.
    pub w_t: f64,
    /// Per radian of tool rotation.
    pub w_r: f64,
    /// Added when the goal configuration is in collision.
    pub lambda: f64,
    #[serde(default)]
    pub joint_metric: JointMetric,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self {
            w_q: 1.0,
            w_t: 1.0,
            w_r: 1.0,
            lambda: 1e4,
            joint_metric: JointMetric::L2,
        }
    }
}

impl CostWeights {
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            w_q: self.w_q * k,
            w_t: self.w_t * k,
            w_r: self.w_r * k,
            lambda: self.lambda * k,
            joint_metric: self.joint_metric,
        }
    }

    /// Largest weighted sum the three distance terms can reach on `chain`.
    pub fn max_distance_term(&self, chain: &KinematicChain) -> f64 {
        let dq = chain.limits().map(|(lo, hi)| (hi - lo) * (hi - lo)).sum::<f64>().sqrt();
        let dt = 2.0 * chain.reach();
        self.w_q * dq + self.w_t * dt + self.w_r * std::f64::consts::PI
    }

    /// Rejects negative weights and a collision penalty that some collision-free
    /// candidate could outweigh.
    pub fn validate(&self, chain: &KinematicChain) -> Result<(), KnowledgeError> {
        let all = [self.w_q, self.w_t, self.w_r, self.lambda];
        if all.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(KnowledgeError::InvalidWeights(
                "weights must be finite and non-negative".into(),
            ));
        }
        let bound = self.max_distance_term(chain);
        if self.lambda <= bound {
            return Err(KnowledgeError::InvalidWeights(format!(
                "lambda {} must exceed the largest distance term {bound:.3}",
                self.lambda
            )));
        }
        Ok(())
    }
}

pub fn compute_cost(dq: f64, dt: f64, dr: f64, in_collision: bool, w: &CostWeights) -> f64 {
    let base = w.w_q * dq + w.w_t * dt + w.w_r * dr;
    if in_collision {
        base + w.lambda
    } else {
        base
    }
}
