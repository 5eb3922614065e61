//! Rectangular domains with periodic or reflecting edges.

use log::warn;

use crate::agent::AgentState;
use crate::error::ConfigError;
use crate::math::{Rect, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    Periodic,
    ReflectiveWall,
}

impl EdgeKind {
    pub fn name(self) -> &'static str {
        match self {
            EdgeKind::Periodic => "periodic",
            EdgeKind::ReflectiveWall => "reflective",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "periodic" => Some(EdgeKind::Periodic),
            "reflective" | "wall" => Some(EdgeKind::ReflectiveWall),
            _ => None,
        }
    }
}

/// Edge order used by [`DomainSpec::edges`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edge {
    Left = 0,
    Right = 1,
    Bottom = 2,
    Top = 3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainSpec {
    pub x1_min: f64,
    pub x1_max: f64,
    pub x2_min: f64,
    pub x2_max: f64,
    /// Indexed by [`Edge`]: left, right, bottom, top.
    pub edges: [EdgeKind; 4],
}

impl DomainSpec {
    pub fn new(x1: (f64, f64), x2: (f64, f64), x1_kind: EdgeKind, x2_kind: EdgeKind) -> Self {
        DomainSpec {
            x1_min: x1.0,
            x1_max: x1.1,
            x2_min: x2.0,
            x2_max: x2.1,
            edges: [x1_kind, x1_kind, x2_kind, x2_kind],
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bounds = [self.x1_min, self.x1_max, self.x2_min, self.x2_max];
        if bounds.iter().any(|b| !b.is_finite()) {
            return Err(ConfigError::invalid("domain", "bounds must be finite"));
        }
        if self.x1_min >= self.x1_max || self.x2_min >= self.x2_max {
            return Err(ConfigError::invalid("domain", "need x1_min < x1_max and x2_min < x2_max"));
        }
        let paired = |a: EdgeKind, b: EdgeKind| a == b || (a != EdgeKind::Periodic && b != EdgeKind::Periodic);
        if !paired(self.edges[0], self.edges[1]) || !paired(self.edges[2], self.edges[3]) {
            return Err(ConfigError::invalid("boundary", "periodic edges must come in opposite pairs"));
        }
        Ok(())
    }

    pub fn edge(&self, e: Edge) -> EdgeKind {
        self.edges[e as usize]
    }

    pub fn x1_periodic(&self) -> bool {
        self.edges[0] == EdgeKind::Periodic
    }

    pub fn x2_periodic(&self) -> bool {
        self.edges[2] == EdgeKind::Periodic
    }

    pub fn x1_kind(&self) -> EdgeKind {
        self.edges[0]
    }

    pub fn x2_kind(&self) -> EdgeKind {
        self.edges[2]
    }

    pub fn width(&self) -> f64 {
        self.x1_max - self.x1_min
    }

    pub fn height(&self) -> f64 {
        self.x2_max - self.x2_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Vec2 {
        Vec2::new(0.5 * (self.x1_min + self.x1_max), 0.5 * (self.x2_min + self.x2_max))
    }

    pub fn rect(&self) -> Rect {
        Rect::new(self.x1_min, self.x1_max, self.x2_min, self.x2_max)
    }

    /// Closed-box containment.
    pub fn contains(&self, x: Vec2) -> bool {
        x.c1 >= self.x1_min && x.c1 <= self.x1_max && x.c2 >= self.x2_min && x.c2 <= self.x2_max
    }
}

#[inline]
fn wrap(x: f64, min: f64, max: f64) -> f64 {
    if x >= min && x < max {
        return x;
    }
    let period = max - min;
    let w = min + (x - min).rem_euclid(period);
    // rem_euclid can round up to exactly `period` for tiny negative offsets.
    if w >= max {
        min
    } else {
        w
    }
}

/// Wraps every periodic coordinate into `[min, max)`.
pub fn apply_periodic(x: Vec2, domain: &DomainSpec) -> Vec2 {
    let mut out = x;
    if domain.x1_periodic() {
        out.c1 = wrap(x.c1, domain.x1_min, domain.x1_max);
    }
    if domain.x2_periodic() {
        out.c2 = wrap(x.c2, domain.x2_min, domain.x2_max);
    }
    out
}

fn reflect_axis(x: &mut f64, v: &mut f64, min: f64, max: f64, lo_wall: bool, hi_wall: bool) {
    for _ in 0..2 {
        if lo_wall && *x < min {
            *x = 2.0 * min - *x;
            *v = -*v;
        } else if hi_wall && *x > max {
            *x = 2.0 * max - *x;
            *v = -*v;
        } else {
            return;
        }
    }
    if lo_wall && *x < min {
        warn!("reflection overshoot at {x}; clamping to wall {min}");
        *x = min;
        *v = v.abs();
    } else if hi_wall && *x > max {
        warn!("reflection overshoot at {x}; clamping to wall {max}");
        *x = max;
        *v = -v.abs();
    }
}

/// Mirrors a position back across every violated reflecting wall and flips
/// the normal velocity component. Tangential components are left alone.
pub fn apply_reflective(x: Vec2, v: Vec2, domain: &DomainSpec) -> (Vec2, Vec2) {
    let (mut x, mut v) = (x, v);
    let wall = |e: Edge| domain.edge(e) == EdgeKind::ReflectiveWall;
    reflect_axis(
        &mut x.c1,
        &mut v.c1,
        domain.x1_min,
        domain.x1_max,
        wall(Edge::Left),
        wall(Edge::Right),
    );
    reflect_axis(
        &mut x.c2,
        &mut v.c2,
        domain.x2_min,
        domain.x2_max,
        wall(Edge::Bottom),
        wall(Edge::Top),
    );
    (x, v)
}

/// Periodic wrap followed by wall reflection.
pub fn apply_boundaries(x: Vec2, v: Vec2, domain: &DomainSpec) -> (Vec2, Vec2) {
    apply_reflective(apply_periodic(x, domain), v, domain)
}

fn axis_shifts(x: f64, min: f64, max: f64, r_cut: f64) -> [Option<f64>; 2] {
    let period = max - min;
    [
        (x - min < r_cut).then_some(period),
        (max - x < r_cut).then_some(-period),
    ]
}

/// Returns `agents` followed by shifted copies of every agent lying within
/// `r_cut` of a periodic edge. Per agent the copies appear in the order:
/// shift along x1, shift along x2, shift along both.
pub fn ghost_copies(agents: &[AgentState], domain: &DomainSpec, r_cut: f64) -> Vec<AgentState> {
    let mut out = agents.to_vec();
    let px = domain.x1_periodic();
    let py = domain.x2_periodic();
    if !px && !py {
        return out;
    }
    for a in agents {
        let sx = if px {
            axis_shifts(a.x.c1, domain.x1_min, domain.x1_max, r_cut)
        } else {
            [None, None]
        };
        let sy = if py {
            axis_shifts(a.x.c2, domain.x2_min, domain.x2_max, r_cut)
        } else {
            [None, None]
        };
        for dx in sx.iter().flatten() {
            out.push(AgentState { x: a.x + Vec2::new(*dx, 0.0), ..*a });
        }
        for dy in sy.iter().flatten() {
            out.push(AgentState { x: a.x + Vec2::new(0.0, *dy), ..*a });
        }
        for dx in sx.iter().flatten() {
            for dy in sy.iter().flatten() {
                out.push(AgentState { x: a.x + Vec2::new(*dx, *dy), ..*a });
            }
        }
    }
    out
}
