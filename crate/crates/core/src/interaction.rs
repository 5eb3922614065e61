//! Pairwise forces and the rotated interaction acceleration.
//!
//! The force kernel is `K(x_i, x_j) = grad_{x_i} P(|x_i - x_j|)` for the Morse
//! potential `P(d) = R exp(-d/r) - A exp(-d/a)`. The acceleration felt by an
//! agent is `-(1/N) * sum_j rotate(K(x_i, x_j), alpha_ij)`, so with `A = 0`
//! agents push each other apart.

use crate::agent::{AgentState, Group};
use crate::error::ConfigError;
use crate::math::{interaction_angle, rotate, AnisotropyParam, Vec2};

/// Separations at or below this distance produce no force.
pub const COINCIDENT_EPS: f64 = 1e-9;

/// Default interaction cutoff, twice the default repulsion range.
pub const DEFAULT_R_CUT: f64 = 3.0;

/// A pairwise force law `K(x_i, x_j, v_i, v_j)`.
///
/// Only position-dependent kernels ship, but the signature carries the
/// velocities so alignment-type kernels fit the same slot.
pub trait PairKernel: Sync {
    fn force(&self, xi: Vec2, xj: Vec2, vi: Vec2, vj: Vec2) -> Vec2;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MorseParams {
    /// Attraction strength `A`.
    pub attraction: f64,
    /// Repulsion strength `R`.
    pub repulsion: f64,
    /// Attraction range `a`.
    pub attraction_range: f64,
    /// Repulsion range `r`.
    pub repulsion_range: f64,
}

impl MorseParams {
    /// Purely repulsive pedestrians: `A = 0, R = 500, a = r = 1.5`.
    pub const PEDESTRIAN: MorseParams = MorseParams {
        attraction: 0.0,
        repulsion: 500.0,
        attraction_range: 1.5,
        repulsion_range: 1.5,
    };

    pub fn validate(&self) -> Result<(), ConfigError> {
        let checks = [
            ("morse_A", self.attraction, self.attraction >= 0.0),
            ("morse_R", self.repulsion, self.repulsion >= 0.0),
            ("morse_a", self.attraction_range, self.attraction_range > 0.0),
            ("morse_r", self.repulsion_range, self.repulsion_range > 0.0),
        ];
        for (key, value, ok) in checks {
            if !value.is_finite() || !ok {
                return Err(ConfigError::invalid(key, format!("{value} violates its range")));
            }
        }
        Ok(())
    }
}

impl Default for MorseParams {
    fn default() -> Self {
        MorseParams::PEDESTRIAN
    }
}

impl PairKernel for MorseParams {
    #[inline]
    fn force(&self, xi: Vec2, xj: Vec2, _vi: Vec2, _vj: Vec2) -> Vec2 {
        pair_force(xi, xj, self)
    }
}

/// Model parameters shared by the particle and mean-field solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub morse: MorseParams,
    pub lambda: AnisotropyParam,
    pub r_cut: f64,
    pub u_red: Vec2,
    pub u_blue: Vec2,
}

impl ModelParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.morse.validate()?;
        if !(self.r_cut.is_finite() && self.r_cut > 0.0) {
            return Err(ConfigError::invalid("r_cut", format!("{} must be > 0", self.r_cut)));
        }
        if !self.u_red.is_finite() || !self.u_blue.is_finite() {
            return Err(ConfigError::invalid("u_red/u_blue", "desired velocities must be finite"));
        }
        Ok(())
    }

    /// Desired velocity of a group; obstacles have none.
    pub fn desired_velocity(&self, group: Group) -> Option<Vec2> {
        match group {
            Group::Red => Some(self.u_red),
            Group::Blue => Some(self.u_blue),
            Group::Obstacle => None,
        }
    }
}

/// `P(d) = R exp(-d/r) - A exp(-d/a)`.
#[inline]
pub fn morse_potential(d: f64, p: &MorseParams) -> f64 {
    p.repulsion * (-d / p.repulsion_range).exp() - p.attraction * (-d / p.attraction_range).exp()
}

/// `P'(d) = -(R/r) exp(-d/r) + (A/a) exp(-d/a)`.
#[inline]
pub fn morse_derivative(d: f64, p: &MorseParams) -> f64 {
    let rep = -(p.repulsion / p.repulsion_range) * (-d / p.repulsion_range).exp();
    if p.attraction == 0.0 {
        return rep;
    }
    rep + (p.attraction / p.attraction_range) * (-d / p.attraction_range).exp()
}

/// `K(x_i, x_j) = P'(d) (x_i - x_j) / d`, zero for coincident points.
#[inline]
pub fn pair_force(xi: Vec2, xj: Vec2, p: &MorseParams) -> Vec2 {
    let diff = xi - xj;
    let d = diff.norm();
    if d <= COINCIDENT_EPS {
        return Vec2::ZERO;
    }
    diff * (morse_derivative(d, p) / d)
}

/// Relaxation drive `u - v` toward the group's desired velocity.
#[inline]
pub fn desired_acceleration(v: Vec2, u_group: Vec2) -> Vec2 {
    u_group - v
}

#[inline]
pub(crate) fn within_cutoff(xi: Vec2, xj: Vec2, r_cut_sq: f64) -> bool {
    (xi - xj).norm_sq() <= r_cut_sq
}

/// Interaction part of the velocity equation for agent `i`:
/// `-(1/n) * sum_{j != i, |x_i - x_j| <= r_cut} rotate(K(x_i, x_j), alpha(v_i, v_j))`.
///
/// `states` may contain ghost copies beyond the `n` agents that set the
/// normalisation. Terms are accumulated in index order.
pub fn interaction_acceleration(i: usize, states: &[AgentState], p: &ModelParams, n: usize) -> Vec2 {
    accumulate_interaction(i, states, 0..states.len(), p, n)
}

/// Same sum as [`interaction_acceleration`], restricted to `candidates`
/// (which must be sorted ascending and contain every neighbour in range).
pub(crate) fn accumulate_interaction<I>(
    i: usize,
    states: &[AgentState],
    candidates: I,
    p: &ModelParams,
    n: usize,
) -> Vec2
where
    I: IntoIterator<Item = usize>,
{
    let me = &states[i];
    let r_cut_sq = p.r_cut * p.r_cut;
    let mut sum = Vec2::ZERO;
    for j in candidates {
        if j == i {
            continue;
        }
        let other = &states[j];
        if !within_cutoff(me.x, other.x, r_cut_sq) {
            continue;
        }
        let k = p.morse.force(me.x, other.x, me.v, other.v);
        let alpha = interaction_angle(me.v, other.v, p.lambda);
        sum += rotate(k, alpha);
    }
    let nf = n as f64;
    Vec2::new(-sum.c1 / nf, -sum.c2 / nf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_4;

    fn params(lambda: f64) -> ModelParams {
        ModelParams {
            morse: MorseParams::PEDESTRIAN,
            lambda: AnisotropyParam::new(lambda, false).unwrap(),
            r_cut: 3.0,
            u_red: Vec2::new(0.2, 0.0),
            u_blue: Vec2::new(-0.2, 0.0),
        }
    }

    // Central difference of the potential along the separation, independent of
    // the analytic derivative.
    fn fd_derivative(d: f64, p: &MorseParams) -> f64 {
        let h = 1e-6;
        (morse_potential(d + h, p) - morse_potential(d - h, p)) / (2.0 * h)
    }

    #[test]
    fn potential_examples() {
        let p = MorseParams::PEDESTRIAN;
        assert!((morse_potential(0.0, &p) - 500.0).abs() < 1e-12);
        assert!(morse_potential(100.0, &p) < 1e-25);
        let sym = MorseParams {
            attraction: 3.0,
            repulsion: 3.0,
            attraction_range: 0.7,
            repulsion_range: 0.7,
        };
        for d in [0.0, 0.3, 1.0, 5.0] {
            assert_eq!(morse_potential(d, &sym), 0.0);
        }
    }

    #[test]
    fn pair_force_unit_separation() {
        let p = MorseParams::PEDESTRIAN;
        let k = pair_force(Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), &p);
        // K = P'(1) * (-1, 0) with P'(1) taken from finite differences.
        let expected = -fd_derivative(1.0, &p);
        assert!((k.c1 - expected).abs() <= 1e-6 * expected.abs());
        assert!((k.c1 - 171.14).abs() < 0.01);
        assert_eq!(k.c2, 0.0);
    }

    #[test]
    fn coincident_points_have_no_force() {
        let x = Vec2::new(1.5, -2.0);
        assert_eq!(pair_force(x, x, &MorseParams::PEDESTRIAN), Vec2::ZERO);
    }

    #[test]
    fn single_agent_feels_nothing() {
        let s = [AgentState::new(Vec2::ZERO, Vec2::new(0.2, 0.0), Group::Red)];
        assert_eq!(interaction_acceleration(0, &s, &params(0.25), 1), Vec2::ZERO);
    }

    fn head_on() -> [AgentState; 2] {
        [
            AgentState::new(Vec2::new(0.0, 0.0), Vec2::new(0.2, 0.0), Group::Red),
            AgentState::new(Vec2::new(1.0, 0.0), Vec2::new(-0.2, 0.0), Group::Blue),
        ]
    }

    #[test]
    fn head_on_pair_steps_right() {
        let s = head_on();
        let k = pair_force(s[0].x, s[1].x, &MorseParams::PEDESTRIAN);
        let by_hand = rotate(k, FRAC_PI_4) * -0.5;
        let a = interaction_acceleration(0, &s, &params(0.25), 2);
        assert!((a.c1 - by_hand.c1).abs() < 1e-12 && (a.c2 - by_hand.c2).abs() < 1e-12);
        assert!((a.c1 + 60.51).abs() < 0.01 && (a.c2 + 60.51).abs() < 0.01);
        // Partner is pushed backward and upward: its own right.
        let b = interaction_acceleration(1, &s, &params(0.25), 2);
        assert!((b.c1 - 60.51).abs() < 0.01 && (b.c2 - 60.51).abs() < 0.01);
    }

    #[test]
    fn head_on_pair_isotropic() {
        let s = head_on();
        let a = interaction_acceleration(0, &s, &params(0.0), 2);
        assert!((a.c1 + 85.57).abs() < 0.01);
        assert_eq!(a.c2, 0.0);
    }

    #[test]
    fn desired_acceleration_examples() {
        let u = Vec2::new(0.2, 0.0);
        assert_eq!(desired_acceleration(Vec2::new(0.2, 0.0), u), Vec2::ZERO);
        assert_eq!(desired_acceleration(Vec2::ZERO, u), Vec2::new(0.2, 0.0));
        let d = desired_acceleration(Vec2::new(-0.1, 0.1), u);
        assert!((d.c1 - 0.3).abs() < 1e-15 && (d.c2 + 0.1).abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_finite_difference() {
        use rand_chacha::ChaCha8Rng;
        use rand_core::{RngCore, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = MorseParams {
            attraction: 40.0,
            repulsion: 500.0,
            attraction_range: 2.5,
            repulsion_range: 1.5,
        };
        for _ in 0..1000 {
            let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
            let d = 0.01 + u * (10.0 - 0.01);
            let analytic = morse_derivative(d, &p);
            let fd = fd_derivative(d, &p);
            assert!((analytic - fd).abs() <= 1e-6 * analytic.abs(), "d={d}: {analytic} vs {fd}");
        }
    }

    #[test]
    fn rotation_angle_is_shared_by_the_pair() {
        let s = head_on();
        let l = AnisotropyParam::new(0.25, false).unwrap();
        assert_eq!(
            interaction_angle(s[0].v, s[1].v, l).to_bits(),
            interaction_angle(s[1].v, s[0].v, l).to_bits()
        );
    }

    fn pt() -> impl Strategy<Value = Vec2> {
        (-20.0..20.0f64, -20.0..20.0f64).prop_map(|(a, b)| Vec2::new(a, b))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn pair_force_is_antisymmetric(a in pt(), b in pt()) {
            let p = MorseParams::PEDESTRIAN;
            let f = pair_force(a, b, &p);
            let g = pair_force(b, a, &p);
            prop_assert_eq!(f.c1, -g.c1);
            prop_assert_eq!(f.c2, -g.c2);
        }

        #[test]
        fn cutoff_beyond_farthest_pair_changes_nothing(pts in prop::collection::vec((pt(), pt()), 2..12)) {
            let states: Vec<AgentState> = pts
                .iter()
                .map(|(x, v)| AgentState::new(*x, *v * 0.05, Group::Red))
                .collect();
            let mut p = params(0.25);
            p.r_cut = 60.0;
            let mut q = p;
            q.r_cut = 1000.0;
            for i in 0..states.len() {
                let a = interaction_acceleration(i, &states, &p, states.len());
                let b = interaction_acceleration(i, &states, &q, states.len());
                prop_assert_eq!(a.c1.to_bits(), b.c1.to_bits());
                prop_assert_eq!(a.c2.to_bits(), b.c2.to_bits());
            }
        }

        #[test]
        fn zero_lambda_matches_unrotated_sum(pts in prop::collection::vec((pt(), pt()), 2..12)) {
            let states: Vec<AgentState> = pts
                .iter()
                .map(|(x, v)| AgentState::new(*x * 0.2, *v * 0.05, Group::Blue))
                .collect();
            let p = params(0.0);
            let n = states.len();
            for i in 0..n {
                let mut sum = Vec2::ZERO;
                for j in 0..n {
                    if j != i && (states[i].x - states[j].x).norm_sq() <= p.r_cut * p.r_cut {
                        sum += pair_force(states[i].x, states[j].x, &p.morse);
                    }
                }
                let reference = Vec2::new(-sum.c1 / n as f64, -sum.c2 / n as f64);
                let a = interaction_acceleration(i, &states, &p, n);
                prop_assert_eq!(a.c1.to_bits(), reference.c1.to_bits());
                prop_assert_eq!(a.c2.to_bits(), reference.c2.to_bits());
            }
        }
    }
}
