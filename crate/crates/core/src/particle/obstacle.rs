use std::f64::consts::TAU;

use crate::agent::{AgentState, Group};
use crate::error::ConfigError;
use crate::math::Vec2;

/// A circular obstacle represented by a ring of fixed artificial agents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleObstacle {
    pub center: Vec2,
    pub radius: f64,
    pub n_points: usize,
    /// Magnitude of the outward artificial velocity.
    pub speed_scale: f64,
}

impl CircleObstacle {
    pub fn agents(&self) -> Result<Vec<AgentState>, ConfigError> {
        make_circle_obstacle(self.center, self.radius, self.n_points, self.speed_scale)
    }
}

/// Places `n_points` obstacle agents evenly on a circle, each carrying the
/// outward normal scaled by `speed_scale` as its artificial velocity.
pub fn make_circle_obstacle(
    center: Vec2,
    radius: f64,
    n_points: usize,
    speed_scale: f64,
) -> Result<Vec<AgentState>, ConfigError> {
    if n_points < 3 {
        return Err(ConfigError::invalid("obstacle", format!("n_points = {n_points} < 3")));
    }
    if !(radius > 0.0 && radius.is_finite()) || !center.is_finite() || !speed_scale.is_finite() {
        return Err(ConfigError::invalid("obstacle", "need finite centre, radius > 0 and finite speed"));
    }
    Ok((0..n_points)
        .map(|k| {
            let theta = TAU * k as f64 / n_points as f64;
            let normal = Vec2::new(theta.cos(), theta.sin());
            AgentState::new(center + normal * radius, normal * speed_scale, Group::Obstacle)
        })
        .collect())
}
