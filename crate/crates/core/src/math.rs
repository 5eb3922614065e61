//! Planar vector algebra and the velocity-dependent force rotation.
//!
//! The anisotropy of the model lives entirely here: two agents with
//! velocities `v` and `w` interact through a force that is rotated by
//! `alpha = lambda * angle(v, w)`. Parallel walkers feel the plain isotropic
//! force, head-on walkers feel it turned by `lambda * pi`.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use crate::error::ConfigError;

/// Velocities with a norm at or below this value count as "standing still"
/// and produce no rotation.
pub const ZERO_VELOCITY_EPS: f64 = 1e-12;

/// Largest anisotropy magnitude accepted without the wide-range override.
pub const LAMBDA_LIMIT: f64 = 0.25;

/// Largest anisotropy magnitude accepted with the wide-range override.
pub const LAMBDA_LIMIT_WIDE: f64 = 1.0;

/// Two-component real vector used for positions, velocities and forces.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub c1: f64,
    pub c2: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { c1: 0.0, c2: 0.0 };

    #[inline]
    pub const fn new(c1: f64, c2: f64) -> Self {
        Vec2 { c1, c2 }
    }

    #[inline]
    pub fn dot(self, other: Vec2) -> f64 {
        self.c1 * other.c1 + self.c2 * other.c2
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.c1 * self.c1 + self.c2 * self.c2
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.c1.is_finite() && self.c2.is_finite()
    }

    /// Reflection across the first coordinate axis.
    #[inline]
    pub fn mirror_c2(self) -> Vec2 {
        Vec2::new(self.c1, -self.c2)
    }
}

impl fmt::Display for Vec2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.c1, self.c2)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.c1 + rhs.c1, self.c2 + rhs.c2)
    }
}

impl AddAssign for Vec2 {
    #[inline]
    fn add_assign(&mut self, rhs: Vec2) {
        self.c1 += rhs.c1;
        self.c2 += rhs.c2;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.c1 - rhs.c1, self.c2 - rhs.c2)
    }
}

impl SubAssign for Vec2 {
    #[inline]
    fn sub_assign(&mut self, rhs: Vec2) {
        self.c1 -= rhs.c1;
        self.c2 -= rhs.c2;
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.c1, -self.c2)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.c1 * s, self.c2 * s)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    #[inline]
    fn mul(self, v: Vec2) -> Vec2 {
        Vec2::new(self * v.c1, self * v.c2)
    }
}

/// Axis-aligned box `[min1, max1] x [min2, max2]`, used for sampling
/// regions and velocity grids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min1: f64,
    pub max1: f64,
    pub min2: f64,
    pub max2: f64,
}

impl Rect {
    pub const fn new(min1: f64, max1: f64, min2: f64, max2: f64) -> Self {
        Rect { min1, max1, min2, max2 }
    }

    pub fn area(&self) -> f64 {
        (self.max1 - self.min1) * (self.max2 - self.min2)
    }

    pub fn is_valid(&self) -> bool {
        [self.min1, self.max1, self.min2, self.max2].iter().all(|b| b.is_finite())
            && self.min1 < self.max1
            && self.min2 < self.max2
    }

    pub fn contains(&self, p: Vec2) -> bool {
        p.c1 >= self.min1 && p.c1 <= self.max1 && p.c2 >= self.min2 && p.c2 <= self.max2
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.min1 >= self.min1 && other.max1 <= self.max1 && other.min2 >= self.min2 && other.max2 <= self.max2
    }

    pub fn center(&self) -> Vec2 {
        Vec2::new(0.5 * (self.min1 + self.max1), 0.5 * (self.min2 + self.max2))
    }
}

/// Anisotropy strength. Positive values make agents evade to their right,
/// negative values to their left, zero recovers the isotropic model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnisotropyParam(f64);

impl AnisotropyParam {
    /// Accepts `lambda` in `[-0.25, 0.25]`, or `[-1, 1]` when `allow_wide` is set.
    pub fn new(lambda: f64, allow_wide: bool) -> Result<Self, ConfigError> {
        let limit = if allow_wide { LAMBDA_LIMIT_WIDE } else { LAMBDA_LIMIT };
        if !lambda.is_finite() || lambda.abs() > limit {
            return Err(ConfigError::Invalid {
                key: "lambda".into(),
                reason: format!("{lambda} is outside [-{limit}, {limit}] (set allow_wide_lambda = true for [-1, 1])"),
            });
        }
        Ok(AnisotropyParam(lambda))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for AnisotropyParam {
    fn default() -> Self {
        AnisotropyParam(LAMBDA_LIMIT)
    }
}

/// Rotation of the plane by a fixed angle, with cached cosine and sine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation2 {
    angle: f64,
    cos: f64,
    sin: f64,
}

impl Rotation2 {
    pub fn new(angle: f64) -> Self {
        let (sin, cos) = angle.sin_cos();
        Rotation2 { angle, cos, sin }
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn cos(&self) -> f64 {
        self.cos
    }

    pub fn sin(&self) -> f64 {
        self.sin
    }

    /// Row-major matrix `[[cos, -sin], [sin, cos]]`.
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [[self.cos, -self.sin], [self.sin, self.cos]]
    }

    #[inline]
    pub fn apply(&self, f: Vec2) -> Vec2 {
        if self.angle == 0.0 {
            return f;
        }
        Vec2::new(f.c1 * self.cos - f.c2 * self.sin, f.c1 * self.sin + f.c2 * self.cos)
    }
}

/// Interaction angle between two velocities: `lambda * arccos(v.w / (|v||w|))`,
/// or zero if either velocity is (numerically) zero.
///
/// Evaluated as `atan2(|v x w|, v.w)`, which equals the arccos form but stays
/// well conditioned for nearly parallel velocities.
#[inline]
pub fn interaction_angle(v: Vec2, w: Vec2, lambda: AnisotropyParam) -> f64 {
    if v.norm() <= ZERO_VELOCITY_EPS || w.norm() <= ZERO_VELOCITY_EPS {
        return 0.0;
    }
    let cross = v.c1 * w.c2 - v.c2 * w.c1;
    lambda.value() * cross.abs().atan2(v.dot(w))
}

/// Rotates `f` counter-clockwise by `alpha` radians. A zero angle returns `f`
/// unchanged, bit for bit.
#[inline]
pub fn rotate(f: Vec2, alpha: f64) -> Vec2 {
    Rotation2::new(alpha).apply(f)
}

/// Upper bound on `|interaction_angle|` for a given anisotropy.
pub fn max_interaction_angle(lambda: AnisotropyParam) -> f64 {
    lambda.value().abs() * PI
}
