//! Hand-written tracking controller. It reads only the observation vector, so
//! it can stand in for a learned policy in evaluation.

use super::config::EnvConfig;
use super::world::{layout, ActionVector};
use crate::geometry::{UnitQuaternion, Vector3};

#[derive(Clone, Debug, PartialEq)]
pub struct TrackingController {
    pub max_action_translation: f64,
    pub max_action_rotation: f64,
    pub dt: f64,
    /// Distance behind the goal, along the approach axis, at which the
    /// gripper lines up before closing in.
    pub standoff: f64,
    pub lateral_tolerance: f64,
    pub angle_tolerance: f64,
    /// Lateral distance from the approach axis at which the gripper can pass
    /// the target without touching it.
    pub clearance: f64,
}

impl TrackingController {
    pub fn new(config: &EnvConfig) -> Self {
        Self {
            max_action_translation: config.max_action_translation,
            max_action_rotation: config.max_action_rotation,
            dt: config.dt,
            standoff: 0.15,
            lateral_tolerance: 0.03,
            angle_tolerance: 0.2,
            clearance: 0.4,
        }
    }

    pub fn act(&self, obs: &[f64]) -> ActionVector {
        let v3 = |at: usize| Vector3::new(obs[at], obs[at + 1], obs[at + 2]);
        let q = UnitQuaternion::new_normalize(obs[3], obs[4], obs[5], obs[6]).unwrap_or_default();
        let to_goal = v3(layout::GOAL_OFFSET);
        let turn = v3(layout::GOAL_ROTATION);
        let target_velocity = v3(layout::TARGET_TWIST);

        let goal_q = UnitQuaternion::from_rotation_vector(turn) * q;
        let approach = goal_q.rotate(Vector3::Z);
        let along = to_goal.dot(approach);
        let offset = approach * along - to_goal;
        let radius = offset.norm();
        let outward = offset
            .try_normalize(1e-9)
            .unwrap_or_else(|| any_perpendicular(approach));
        let angle = turn.norm();
        let behind = along >= 0.8 * self.standoff;
        let final_approach = along > -0.02
            && if behind {
                radius < self.lateral_tolerance && angle < self.angle_tolerance
            } else {
                radius < 2.0 * self.lateral_tolerance && angle < 1.5 * self.angle_tolerance
            };
        let standoff_point = to_goal - approach * self.standoff;
        let aim = if final_approach {
            to_goal
        } else if behind {
            standoff_point
        } else if radius < self.clearance {
            outward * (self.clearance + 0.05 - radius)
        } else {
            standoff_point + outward * self.clearance
        };
        let shift = q.inverse_rotate(aim + target_velocity * self.dt) / self.max_action_translation;
        let shift = shift / shift.abs().max_component().max(1.0);
        let body_turn = q.inverse_rotate(turn) / self.max_action_rotation;
        let c = |x: f64| x.clamp(-1.0, 1.0);
        ActionVector::new(&[
            c(shift.x),
            c(shift.y),
            c(shift.z),
            c(body_turn.x),
            c(body_turn.y),
            c(body_turn.z),
        ])
        .expect("clamped components")
    }
}

fn any_perpendicular(v: Vector3) -> Vector3 {
    let helper = if v.x.abs() < 0.9 { Vector3::X } else { Vector3::Y };
    v.cross(helper).try_normalize(1e-12).unwrap_or(Vector3::Y)
}
