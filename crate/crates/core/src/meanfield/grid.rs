//! Cell-centred four-dimensional phase-space grid and per-group densities.
//!
//! Values are stored row-major with `x1` slowest and `v2` fastest, so one
//! spatial cell owns a contiguous `nv1 * nv2` block of velocity cells.

use ndarray::{Array1, Array2};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::agent::Group;
use crate::error::{ConfigError, MeanFieldError};
use crate::math::{Rect, Vec2};
use crate::particle::{DomainSpec, EdgeKind};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseGrid {
    pub domain: DomainSpec,
    pub velocity: Rect,
    pub nx: usize,
    pub ny: usize,
    pub nv1: usize,
    pub nv2: usize,
}

impl PhaseGrid {
    pub fn new(
        domain: DomainSpec,
        velocity: Rect,
        nx: usize,
        ny: usize,
        nv1: usize,
        nv2: usize,
    ) -> Result<Self, ConfigError> {
        domain.validate()?;
        if !velocity.is_valid() {
            return Err(ConfigError::invalid("velocity_grid", "need finite bounds with min < max"));
        }
        for (key, n) in [("nx", nx), ("ny", ny), ("nv1", nv1), ("nv2", nv2)] {
            if n == 0 {
                return Err(ConfigError::invalid(key, "must be positive"));
            }
        }
        if nx.checked_mul(ny).and_then(|s| s.checked_mul(nv1 * nv2)).is_none() {
            return Err(ConfigError::invalid("nx", "grid too large"));
        }
        // Specular reflection maps a velocity sheet onto its mirror image, which
        // has to be a grid sheet as well.
        let symmetric = |lo: f64, hi: f64| (lo + hi).abs() <= 1e-12 * (hi - lo);
        if domain.x1_kind() == EdgeKind::ReflectiveWall && !symmetric(velocity.min1, velocity.max1) {
            return Err(ConfigError::invalid("velocity_grid", "v1 range must be symmetric about 0 with x1 walls"));
        }
        if domain.x2_kind() == EdgeKind::ReflectiveWall && !symmetric(velocity.min2, velocity.max2) {
            return Err(ConfigError::invalid("velocity_grid", "v2 range must be symmetric about 0 with x2 walls"));
        }
        Ok(PhaseGrid {
            domain,
            velocity,
            nx,
            ny,
            nv1,
            nv2,
        })
    }

    pub fn dx1(&self) -> f64 {
        self.domain.width() / self.nx as f64
    }

    pub fn dx2(&self) -> f64 {
        self.domain.height() / self.ny as f64
    }

    pub fn dv1(&self) -> f64 {
        (self.velocity.max1 - self.velocity.min1) / self.nv1 as f64
    }

    pub fn dv2(&self) -> f64 {
        (self.velocity.max2 - self.velocity.min2) / self.nv2 as f64
    }

    pub fn spatial_cell_area(&self) -> f64 {
        self.dx1() * self.dx2()
    }

    pub fn velocity_cell_area(&self) -> f64 {
        self.dv1() * self.dv2()
    }

    pub fn cell_volume(&self) -> f64 {
        self.spatial_cell_area() * self.velocity_cell_area()
    }

    pub fn x1_center(&self, i: usize) -> f64 {
        centered(self.domain.x1_min, self.domain.x1_max, self.nx, i)
    }

    pub fn x2_center(&self, j: usize) -> f64 {
        centered(self.domain.x2_min, self.domain.x2_max, self.ny, j)
    }

    pub fn v1_center(&self, k: usize) -> f64 {
        centered(self.velocity.min1, self.velocity.max1, self.nv1, k)
    }

    pub fn v2_center(&self, l: usize) -> f64 {
        centered(self.velocity.min2, self.velocity.max2, self.nv2, l)
    }

    pub fn x_center(&self, s: usize) -> Vec2 {
        Vec2::new(self.x1_center(s / self.ny), self.x2_center(s % self.ny))
    }

    pub fn v_center(&self, q: usize) -> Vec2 {
        Vec2::new(self.v1_center(q / self.nv2), self.v2_center(q % self.nv2))
    }

    pub fn n_spatial(&self) -> usize {
        self.nx * self.ny
    }

    pub fn n_velocity(&self) -> usize {
        self.nv1 * self.nv2
    }

    pub fn len(&self) -> usize {
        self.n_spatial() * self.n_velocity()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        ((i * self.ny + j) * self.nv1 + k) * self.nv2 + l
    }

    /// Velocity cell with the first component mirrored.
    #[inline]
    pub fn flip_v1(&self, q: usize) -> usize {
        let (k, l) = (q / self.nv2, q % self.nv2);
        (self.nv1 - 1 - k) * self.nv2 + l
    }

    /// Velocity cell with the second component mirrored.
    #[inline]
    pub fn flip_v2(&self, q: usize) -> usize {
        let (k, l) = (q / self.nv2, q % self.nv2);
        k * self.nv2 + (self.nv2 - 1 - l)
    }

    /// Same box and resolution; used to compare densities.
    pub fn same_shape(&self, other: &PhaseGrid) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && self.nv1 == other.nv1
            && self.nv2 == other.nv2
            && self.domain.rect() == other.domain.rect()
            && self.velocity == other.velocity
    }
}

/// Cell-averaged phase-space density of one group.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDensity {
    pub grid: PhaseGrid,
    pub group: Group,
    pub values: Vec<f64>,
}

/// Spatial, velocity and transverse marginals of a density.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginals {
    /// `rho[[i, j]]`: density over space, integrated over velocity.
    pub rho: Array2<f64>,
    /// `phi[[k, l]]`: density over velocity, integrated over space.
    pub phi: Array2<f64>,
    /// `rho2[j]`: spatial density integrated along x1.
    pub rho2: Array1<f64>,
}

impl PhaseDensity {
    pub fn zeros(grid: PhaseGrid, group: Group) -> Self {
        PhaseDensity {
            grid,
            group,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Velocity block owned by spatial cell `s`.
    pub fn block(&self, s: usize) -> &[f64] {
        let nv = self.grid.n_velocity();
        &self.values[s * nv..(s + 1) * nv]
    }

    /// Mean velocity `int v f / int f`, or `None` for an empty density.
    pub fn mean_velocity(&self) -> Option<Vec2> {
        let nv = self.grid.n_velocity();
        let mut total = 0.0;
        let mut first = Vec2::ZERO;
        for block in self.values.chunks_exact(nv) {
            for (q, &f) in block.iter().enumerate() {
                total += f;
                first += self.grid.v_center(q) * f;
            }
        }
        (total > 0.0).then(|| first * (1.0 / total))
    }

    /// Multiplies every spatial cell by `1 + amplitude * eta_s`, with `eta_s`
    /// uniform in `[-1, 1)` drawn from a ChaCha8 stream seeded by `seed`, then
    /// rescales to the original mass. Two densities perturbed with the same
    /// seed share the same spatial pattern.
    pub fn perturb(&mut self, amplitude: f64, seed: u64) {
        if amplitude == 0.0 {
            return;
        }
        let m0 = self.mass();
        if m0 == 0.0 {
            return;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nv = self.grid.n_velocity();
        for block in self.values.chunks_exact_mut(nv) {
            let eta = 2.0 * unit_uniform(&mut rng) - 1.0;
            let factor = 1.0 + amplitude * eta;
            block.iter_mut().for_each(|f| *f *= factor);
        }
        let scale = m0 / self.mass();
        self.values.iter_mut().for_each(|f| *f *= scale);
    }

    pub fn marginals(&self) -> Marginals {
        marginals(self)
    }
}

/// Centre of cell `i` of `n` on `[lo, hi]`, measured from the interval
/// midpoint so that mirror-image cells of a symmetric range have exactly
/// opposite centres.
#[inline]
fn centered(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    0.5 * (lo + hi) + (i as f64 + 0.5 - 0.5 * n as f64) * h
}

pub(crate) fn unit_uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform density of total `mass` on the cells whose centres lie in
/// `spatial x velocity`. The constant is `mass / (count * cell_volume)`, which
/// equals `mass / (|spatial| |velocity|)` when the boxes align with cell edges.
pub fn init_uniform(
    grid: &PhaseGrid,
    spatial: &Rect,
    velocity: &Rect,
    mass: f64,
    group: Group,
) -> Result<PhaseDensity, MeanFieldError> {
    let xs: Vec<usize> = (0..grid.n_spatial())
        .filter(|&s| spatial.contains(grid.x_center(s)))
        .collect();
    let vs: Vec<usize> = (0..grid.n_velocity())
        .filter(|&q| velocity.contains(grid.v_center(q)))
        .collect();
    if xs.is_empty() || vs.is_empty() {
        return Err(MeanFieldError::EmptySupport);
    }
    let mut f = PhaseDensity::zeros(*grid, group);
    if mass == 0.0 {
        return Ok(f);
    }
    let value = mass / ((xs.len() * vs.len()) as f64 * grid.cell_volume());
    let nv = grid.n_velocity();
    for &s in &xs {
        for &q in &vs {
            f.values[s * nv + q] = value;
        }
    }
    Ok(f)
}

pub fn marginals(f: &PhaseDensity) -> Marginals {
    let g = &f.grid;
    let nv = g.n_velocity();
    let dvol = g.velocity_cell_area();
    let dxa = g.spatial_cell_area();
    let mut rho = Array2::<f64>::zeros((g.nx, g.ny));
    let mut phi = Array2::<f64>::zeros((g.nv1, g.nv2));
    for (s, block) in f.values.chunks_exact(nv).enumerate() {
        let (i, j) = (s / g.ny, s % g.ny);
        rho[[i, j]] = block.iter().sum::<f64>() * dvol;
        for (q, &val) in block.iter().enumerate() {
            phi[[q / g.nv2, q % g.nv2]] += val * dxa;
        }
    }
    let dx1 = g.dx1();
    let rho2 = Array1::from_shape_fn(g.ny, |j| (0..g.nx).map(|i| rho[[i, j]]).sum::<f64>() * dx1);
    Marginals { rho, phi, rho2 }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn channel_grid(nx: usize, ny: usize, nv: usize) -> PhaseGrid {
        let d = DomainSpec::new((-45.0, 45.0), (-15.0, 15.0), EdgeKind::Periodic, EdgeKind::ReflectiveWall);
        PhaseGrid::new(d, Rect::new(-0.5, 0.5, -0.5, 0.5), nx, ny, nv, nv).unwrap()
    }

    #[test]
    fn channel_red_density_value() {
        let g = channel_grid(100, 40, 20);
        let f = init_uniform(
            &g,
            &g.domain.rect(),
            &Rect::new(0.1, 0.3, -0.2, 0.2),
            0.5,
            Group::Red,
        )
        .unwrap();
        let expected = 0.5 / 216.0;
        let max = f.max_value();
        assert!((max - expected).abs() < 1e-15);
        assert!((max - 2.3148e-3).abs() < 1e-7);
        assert!((f.mass() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_mass_and_empty_support() {
        let g = channel_grid(10, 4, 6);
        let f = init_uniform(&g, &g.domain.rect(), &Rect::new(-0.1, 0.1, -0.1, 0.1), 0.0, Group::Blue).unwrap();
        assert!(f.values.iter().all(|&v| v == 0.0));
        let err = init_uniform(&g, &g.domain.rect(), &Rect::new(0.01, 0.02, 0.01, 0.02), 1.0, Group::Blue);
        assert!(matches!(err, Err(MeanFieldError::EmptySupport)));
    }

    #[test]
    fn two_groups_total_unit_mass() {
        let g = channel_grid(50, 20, 10);
        let r = init_uniform(&g, &g.domain.rect(), &Rect::new(0.1, 0.3, -0.2, 0.2), 0.5, Group::Red).unwrap();
        let b = init_uniform(&g, &g.domain.rect(), &Rect::new(-0.3, -0.1, -0.2, 0.2), 0.5, Group::Blue).unwrap();
        assert!((r.mass() + b.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn marginals_of_uniform_and_single_cell() {
        let g = channel_grid(6, 4, 4);
        let f = init_uniform(&g, &g.domain.rect(), &Rect::new(-0.5, 0.5, -0.5, 0.5), 1.0, Group::Red).unwrap();
        let m = f.marginals();
        let first = m.rho[[0, 0]];
        assert!(m.rho.iter().all(|&r| (r - first).abs() < 1e-15));

        let mut single = PhaseDensity::zeros(g, Group::Red);
        let idx = g.index(2, 1, 3, 0);
        single.values[idx] = 7.0;
        let m = single.marginals();
        let dv = g.velocity_cell_area();
        let dx = g.spatial_cell_area();
        for ((i, j), &r) in m.rho.indexed_iter() {
            let expect = if (i, j) == (2, 1) { 7.0 * dv } else { 0.0 };
            assert_eq!(r, expect);
        }
        for ((k, l), &p) in m.phi.indexed_iter() {
            let expect = if (k, l) == (3, 0) { 7.0 * dx } else { 0.0 };
            assert_eq!(p, expect);
        }
        for (j, &r) in m.rho2.iter().enumerate() {
            let expect = if j == 1 { 7.0 * dv * g.dx1() } else { 0.0 };
            assert_eq!(r, expect);
        }
    }

    #[test]
    fn marginal_masses_agree() {
        let g = channel_grid(8, 6, 4);
        let mut f = PhaseDensity::zeros(g, Group::Red);
        for (n, v) in f.values.iter_mut().enumerate() {
            *v = ((n * 37) % 11) as f64 * 0.01;
        }
        let m = f.marginals();
        let mass = f.mass();
        let mr = m.rho.sum() * g.spatial_cell_area();
        let mp = m.phi.sum() * g.velocity_cell_area();
        let m2 = m.rho2.sum() * g.dx2();
        for x in [mr, mp, m2] {
            assert!((x - mass).abs() <= 1e-12 * mass);
        }
    }

    #[test]
    fn shared_perturbation_keeps_groups_spatially_identical() {
        let g = channel_grid(20, 10, 10);
        let mut r = init_uniform(&g, &g.domain.rect(), &Rect::new(0.1, 0.3, -0.2, 0.2), 0.5, Group::Red).unwrap();
        let mut b = init_uniform(&g, &g.domain.rect(), &Rect::new(-0.3, -0.1, -0.2, 0.2), 0.5, Group::Blue).unwrap();
        r.perturb(0.05, 9);
        b.perturb(0.05, 9);
        assert!((r.mass() - 0.5).abs() < 1e-14);
        assert_eq!(r.marginals().rho, b.marginals().rho);
        let rho = r.marginals().rho;
        assert!(rho.iter().any(|&x| (x - rho[[0, 0]]).abs() > 1e-6));
    }

    #[test]
    fn rejects_asymmetric_velocity_grid_with_walls() {
        let d = DomainSpec::new((-45.0, 45.0), (-15.0, 15.0), EdgeKind::Periodic, EdgeKind::ReflectiveWall);
        assert!(PhaseGrid::new(d, Rect::new(-0.5, 0.5, -0.4, 0.5), 4, 4, 4, 4).is_err());
        // Only the wall-normal component matters.
        assert!(PhaseGrid::new(d, Rect::new(-0.4, 0.5, -0.5, 0.5), 4, 4, 4, 4).is_ok());
    }
}
