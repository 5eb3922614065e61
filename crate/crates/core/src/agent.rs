use std::fmt;
use std::str::FromStr;

use crate::math::Vec2;

/// Membership of an agent. Obstacles are fixed artificial agents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Group {
    Red,
    Blue,
    Obstacle,
}

impl Group {
    /// Single-letter tag used in snapshot files.
    pub fn tag(self) -> &'static str {
        match self {
            Group::Red => "r",
            Group::Blue => "b",
            Group::Obstacle => "o",
        }
    }

    pub fn is_pedestrian(self) -> bool {
        !matches!(self, Group::Obstacle)
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Group {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "r" => Ok(Group::Red),
            "b" => Ok(Group::Blue),
            "o" => Ok(Group::Obstacle),
            other => Err(format!("unknown group tag `{other}`")),
        }
    }
}

/// Position, velocity and group of one agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentState {
    pub x: Vec2,
    pub v: Vec2,
    pub group: Group,
}

impl AgentState {
    pub fn new(x: Vec2, v: Vec2, group: Group) -> Self {
        AgentState { x, v, group }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.v.is_finite()
    }
}
