//! Observables for lanes, desired-velocity attainment, segregation and mass.

use std::collections::BTreeMap;

use ndarray::Array2;

use crate::agent::{AgentState, Group};
use crate::error::DiagnosticsError;
use crate::interaction::ModelParams;
use crate::math::Rect;
use crate::meanfield::PhaseDensity;

/// A bin belongs to a lane when one group outnumbers the other by this factor.
pub const LANE_DOMINANCE: f64 = 3.0;

/// A lane bin must hold more than this fraction of its group's agents.
pub const LANE_OCCUPANCY_FLOOR: f64 = 0.02;

/// Default histogram bin width, one repulsion range.
pub const DEFAULT_BIN_WIDTH: f64 = 1.5;

#[derive(Debug, Clone, PartialEq)]
pub struct LaneReport {
    pub lane_count: usize,
    /// x2 positions separating consecutive lanes, ascending.
    pub lane_boundaries: Vec<f64>,
    /// Fraction of pedestrians in bins where their own group is the strict majority.
    pub purity: f64,
    pub mean_x2_red: f64,
    pub mean_x2_blue: f64,
}

/// Histograms pedestrian x2 positions in bins `[k w, (k + 1) w)` and groups
/// dominated bins into lanes. Empty bins neither extend nor break a lane; a
/// non-empty bin without a dominant group ends the current one.
pub fn lane_metrics(agents: &[AgentState], bin_width: f64) -> LaneReport {
    let mut bins: BTreeMap<i64, (usize, usize)> = BTreeMap::new();
    let (mut n_red, mut n_blue) = (0usize, 0usize);
    let (mut sum_red, mut sum_blue) = (0.0, 0.0);
    for a in agents {
        let k = (a.x.c2 / bin_width).floor() as i64;
        match a.group {
            Group::Red => {
                bins.entry(k).or_default().0 += 1;
                n_red += 1;
                sum_red += a.x.c2;
            }
            Group::Blue => {
                bins.entry(k).or_default().1 += 1;
                n_blue += 1;
                sum_blue += a.x.c2;
            }
            Group::Obstacle => {}
        }
    }
    let total = n_red + n_blue;
    let mean = |s: f64, n: usize| if n > 0 { s / n as f64 } else { f64::NAN };

    let floor_red = LANE_OCCUPANCY_FLOOR * n_red as f64;
    let floor_blue = LANE_OCCUPANCY_FLOOR * n_blue as f64;
    let mut pure = 0usize;
    // (group, first bin, last bin) of each lane.
    let mut lanes: Vec<(Group, i64, i64)> = Vec::new();
    let mut open = false;
    for (&k, &(r, b)) in &bins {
        if r > b {
            pure += r;
        } else if b > r {
            pure += b;
        }
        let dom = if r as f64 >= LANE_DOMINANCE * b as f64 && r as f64 > floor_red && r > 0 {
            Some(Group::Red)
        } else if b as f64 >= LANE_DOMINANCE * r as f64 && b as f64 > floor_blue && b > 0 {
            Some(Group::Blue)
        } else {
            None
        };
        match dom {
            Some(g) => match lanes.last_mut() {
                Some(last) if open && last.0 == g => last.2 = k,
                _ => {
                    lanes.push((g, k, k));
                    open = true;
                }
            },
            None => open = false,
        }
    }
    let lane_boundaries = lanes
        .windows(2)
        .map(|w| 0.5 * ((w[0].2 + 1) as f64 + w[1].1 as f64) * bin_width)
        .collect();
    LaneReport {
        lane_count: if total > 0 { lanes.len().max(1) } else { 0 },
        lane_boundaries,
        purity: if total > 0 { pure as f64 / total as f64 } else { 0.0 },
        mean_x2_red: mean(sum_red, n_red),
        mean_x2_blue: mean(sum_blue, n_blue),
    }
}

/// Fraction of pedestrians whose velocity is within `eps` of their group's
/// desired velocity.
pub fn desired_velocity_fraction(agents: &[AgentState], params: &ModelParams, eps: f64) -> f64 {
    let mut hits = 0usize;
    let mut total = 0usize;
    for a in agents {
        if let Some(u) = params.desired_velocity(a.group) {
            total += 1;
            if (a.v - u).norm() <= eps {
                hits += 1;
            }
        }
    }
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X1,
    X2,
}

/// `sum (rho_b - rho_r) * x_axis * |cell|` over a cell-centred grid covering
/// `bounds`. Positive along x2 means blue lies above red.
pub fn segregation_index(
    rho_r: &Array2<f64>,
    rho_b: &Array2<f64>,
    bounds: &Rect,
    axis: Axis,
) -> Result<f64, DiagnosticsError> {
    if rho_r.dim() != rho_b.dim() {
        return Err(DiagnosticsError::ShapeMismatch(rho_r.dim(), rho_b.dim()));
    }
    let (nx, ny) = rho_r.dim();
    let dx1 = (bounds.max1 - bounds.min1) / nx as f64;
    let dx2 = (bounds.max2 - bounds.min2) / ny as f64;
    let mut sum = 0.0;
    for ((i, j), &r) in rho_r.indexed_iter() {
        let c = match axis {
            Axis::X1 => bounds.min1 + (i as f64 + 0.5) * dx1,
            Axis::X2 => bounds.min2 + (j as f64 + 0.5) * dx2,
        };
        sum += (rho_b[[i, j]] - r) * c;
    }
    Ok(sum * dx1 * dx2)
}

/// Total mass of a density.
pub fn mass_audit(f: &PhaseDensity) -> f64 {
    f.mass()
}

/// One row of a diagnostics time series.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub t: f64,
    pub metric: String,
    pub value: f64,
}

impl MetricRow {
    pub fn new(t: f64, metric: &str, value: f64) -> Self {
        MetricRow {
            t,
            metric: metric.to_string(),
            value,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Vec2;
    use crate::meanfield::{init_uniform, PhaseGrid};
    use crate::particle::{DomainSpec, EdgeKind};
    use crate::scenario::{sample_initial_particles, ScenarioConfig};
    use proptest::prelude::*;

    fn at(x1: f64, x2: f64, group: Group) -> AgentState {
        AgentState::new(Vec2::new(x1, x2), Vec2::ZERO, group)
    }

    #[test]
    fn two_separated_groups() {
        let mut agents: Vec<_> = (0..20).map(|i| at(i as f64, -5.0, Group::Red)).collect();
        agents.extend((0..20).map(|i| at(i as f64, 5.0, Group::Blue)));
        let r = lane_metrics(&agents, 1.5);
        assert_eq!(r.lane_count, 2);
        assert_eq!(r.purity, 1.0);
        assert!(r.mean_x2_red < r.mean_x2_blue);
        assert_eq!(r.lane_boundaries.len(), 1);
        assert!(r.lane_boundaries[0] > -5.0 && r.lane_boundaries[0] < 5.0);
    }

    #[test]
    fn four_alternating_bands() {
        let mut agents = Vec::new();
        for (band, g) in [(-12.0, Group::Red), (-4.0, Group::Blue), (4.0, Group::Red), (12.0, Group::Blue)] {
            agents.extend((0..10).map(|i| at(i as f64 * 3.0, band + 0.1 * i as f64, g)));
        }
        let r = lane_metrics(&agents, 1.5);
        assert_eq!(r.lane_count, 4);
        assert_eq!(r.lane_boundaries.len(), 3);
        assert_eq!(r.purity, 1.0);
    }

    #[test]
    fn fully_mixed_groups_have_half_purity() {
        let mut cfg = ScenarioConfig::channel();
        cfg.n_red = 2000;
        cfg.n_blue = 2000;
        cfg.seed = 3;
        let agents = sample_initial_particles(&cfg);
        let r = lane_metrics(&agents, 1.5);
        assert!((r.purity - 0.5).abs() <= 0.1, "purity {}", r.purity);
        assert_eq!(r.lane_count, 1);
    }

    #[test]
    fn obstacles_are_ignored() {
        let agents = vec![at(0.0, 1.0, Group::Red), at(0.0, 1.2, Group::Obstacle)];
        let r = lane_metrics(&agents, 1.5);
        assert_eq!(r.lane_count, 1);
        assert_eq!(r.purity, 1.0);
        assert!(r.mean_x2_blue.is_nan());
    }

    proptest! {
        #[test]
        fn lanes_ignore_x1_translation(
            pts in prop::collection::vec((-45.0f64..45.0, -15.0f64..15.0, any::<bool>()), 1..80),
            shift in -100.0f64..100.0,
        ) {
            let make = |s: f64| -> Vec<AgentState> {
                pts.iter().map(|&(x1, x2, red)| at(x1 + s, x2, if red { Group::Red } else { Group::Blue })).collect()
            };
            let a = lane_metrics(&make(0.0), 1.5);
            let b = lane_metrics(&make(shift), 1.5);
            prop_assert_eq!(a.lane_count, b.lane_count);
            prop_assert_eq!(a.purity, b.purity);
            prop_assert!((0.0..=1.0).contains(&a.purity));
            prop_assert!(a.lane_count >= 1);
        }
    }

    fn params() -> ModelParams {
        ScenarioConfig::crossing().model_params().unwrap()
    }

    #[test]
    fn desired_velocity_fraction_counts() {
        let p = params();
        let mut agents = vec![
            AgentState::new(Vec2::ZERO, p.u_red, Group::Red),
            AgentState::new(Vec2::ZERO, p.u_blue, Group::Blue),
        ];
        assert_eq!(desired_velocity_fraction(&agents, &p, 0.05), 1.0);
        agents.push(AgentState::new(Vec2::ZERO, Vec2::new(1.0, 1.0), Group::Red));
        agents.push(AgentState::new(Vec2::ZERO, Vec2::ZERO, Group::Blue));
        agents.push(AgentState::new(Vec2::ZERO, Vec2::ZERO, Group::Obstacle));
        assert_eq!(desired_velocity_fraction(&agents, &p, 0.05), 0.5);
        assert_eq!(desired_velocity_fraction(&agents[2..4], &p, 0.05), 0.0);
    }

    fn box_rect() -> Rect {
        Rect::new(-45.0, 45.0, -15.0, 15.0)
    }

    #[test]
    fn segregation_signs() {
        let rho = Array2::from_shape_fn((6, 4), |(i, j)| 1.0 + (i * j) as f64);
        assert_eq!(segregation_index(&rho, &rho, &box_rect(), Axis::X2).unwrap(), 0.0);
        let bottom = Array2::from_shape_fn((6, 4), |(_, j)| if j < 2 { 1.0 } else { 0.0 });
        let top = Array2::from_shape_fn((6, 4), |(_, j)| if j >= 2 { 1.0 } else { 0.0 });
        let s = segregation_index(&bottom, &top, &box_rect(), Axis::X2).unwrap();
        assert!(s > 0.0);
        assert_eq!(segregation_index(&top, &bottom, &box_rect(), Axis::X2).unwrap(), -s);
        let wrong = Array2::zeros((4, 6));
        assert!(segregation_index(&rho, &wrong, &box_rect(), Axis::X1).is_err());
    }

    #[test]
    fn segregation_is_linear() {
        let a = Array2::from_shape_fn((5, 3), |(i, j)| (i + 2 * j) as f64);
        let b = Array2::from_shape_fn((5, 3), |(i, j)| (3 * i + j) as f64 * 0.5);
        let c = Array2::from_shape_fn((5, 3), |(i, j)| ((i * j) % 4) as f64);
        let r = box_rect();
        let lhs = segregation_index(&a, &(&b + &(&c * 2.0)), &r, Axis::X2).unwrap();
        let rhs = segregation_index(&a, &b, &r, Axis::X2).unwrap() + 2.0 * segregation_index(&Array2::zeros((5, 3)), &c, &r, Axis::X2).unwrap();
        assert!((lhs - rhs).abs() < 1e-9);
    }

    #[test]
    fn mass_audit_values() {
        let d = DomainSpec::new((-45.0, 45.0), (-15.0, 15.0), EdgeKind::Periodic, EdgeKind::ReflectiveWall);
        let g = PhaseGrid::new(d, Rect::new(-0.5, 0.5, -0.5, 0.5), 50, 20, 10, 10).unwrap();
        let f = init_uniform(&g, &d.rect(), &Rect::new(0.1, 0.3, -0.2, 0.2), 0.5, Group::Red).unwrap();
        assert!((mass_audit(&f) - 0.5).abs() < 1e-12);
        assert_eq!(mass_audit(&PhaseDensity::zeros(g, Group::Blue)), 0.0);
    }
}
