use serde::{Deserialize, Serialize};

/// Per-step reward terms.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    /// `1 - tanh(distance to goal)`.
    pub r_d: f64,
    /// `1 - tanh(geodesic angle to goal orientation)`.
    pub r_theta: f64,
    /// 1 when a target keypoint lies inside the gripper hull.
    pub r_top: f64,
    /// -1 when any contact force acts.
    pub p_f: f64,
    pub total: f64,
}

impl RewardBreakdown {
    pub fn new(distance: f64, angle: f64, keypoint_inside: bool, contact_force: f64) -> Self {
        let r_d = 1.0 - distance.tanh();
        let r_theta = 1.0 - angle.tanh();
        let r_top = if keypoint_inside { 1.0 } else { 0.0 };
        let p_f = if contact_force > 0.0 { -1.0 } else { 0.0 };
        Self {
            r_d,
            r_theta,
            r_top,
            p_f,
            total: r_d + r_theta + r_top + p_f,
        }
    }

    pub fn accumulate(&mut self, other: &RewardBreakdown) {
        self.r_d += other.r_d;
        self.r_theta += other.r_theta;
        self.r_top += other.r_top;
        self.p_f += other.p_f;
        self.total += other.total;
    }
}

/// Latches once the per-step reward has exceeded `threshold` for
/// `required_run` consecutive steps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuccessTracker {
    pub consecutive_count: usize,
    pub threshold: f64,
    pub required_run: usize,
    pub succeeded: bool,
}

impl SuccessTracker {
    pub fn new(threshold: f64, required_run: usize) -> Self {
        Self {
            consecutive_count: 0,
            threshold,
            required_run,
            succeeded: false,
        }
    }

    pub fn update(&mut self, total_reward: f64) {
        if total_reward > self.threshold {
            self.consecutive_count += 1;
        } else {
            self.consecutive_count = 0;
        }
        if self.consecutive_count >= self.required_run {
            self.succeeded = true;
        }
    }
}

pub fn update_success(mut tracker: SuccessTracker, total_reward: f64) -> SuccessTracker {
    tracker.update(total_reward);
    tracker
}
