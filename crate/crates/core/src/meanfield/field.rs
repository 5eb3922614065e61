//! Velocity-space drift `S_i(f)` of the kinetic equation.
//!
//! For a target cell `(x, v)` the convolution part is the quadrature
//!
//! ```text
//! sum_{x' in stencil(x)} sum_{v'} rotate(K(x, x'), alpha(v, v')) f(x', v') |cell|
//! ```
//!
//! Because the grid is uniform, `K(x, x')` only depends on the stencil offset,
//! and the rotation only depends on the velocity pair. The sum therefore
//! factors into a spatial pass `G = sum_offset K(offset) f(neighbour)` followed
//! by a dense product of `G` with the symmetric `cos alpha` / `sin alpha`
//! tables, done with a matrix multiply per source group.

use ndarray::linalg::general_mat_mul;
use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;

use crate::agent::Group;
use crate::error::MeanFieldError;
use crate::interaction::{pair_force, ModelParams};
use crate::math::{interaction_angle, Vec2};
use crate::particle::EdgeKind;

use super::grid::{PhaseDensity, PhaseGrid};

/// Stencil radius used when none is configured: offsets `-2..=2` per axis.
pub const DEFAULT_STENCIL_RADIUS: usize = 2;

/// Drift `S_i = conv - (u_i - v)` per (spatial cell, velocity cell), stored
/// as two component arrays of shape `(n_spatial, n_velocity)`. The velocity
/// equation advects `f` with speed `-S`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceField {
    pub s1: Array2<f64>,
    pub s2: Array2<f64>,
}

impl ForceField {
    pub fn at(&self, s: usize, q: usize) -> Vec2 {
        Vec2::new(self.s1[[s, q]], self.s2[[s, q]])
    }

    pub fn is_finite(&self) -> bool {
        self.s1.iter().chain(self.s2.iter()).all(|x| x.is_finite())
    }

    /// Largest Euclidean drift magnitude and the flat cell index holding it.
    pub fn max_norm(&self) -> (f64, usize) {
        let mut best = (0.0, 0);
        for (n, (a, b)) in self.s1.iter().zip(self.s2.iter()).enumerate() {
            let m = a.hypot(*b);
            if m > best.0 {
                best = (m, n);
            }
        }
        best
    }
}

/// One entry of the spatial stencil: where to read and what force to apply.
#[derive(Debug, Clone, Copy)]
struct Tap {
    source: usize,
    /// The source lies behind an x1 wall: read the v1-mirrored sheet.
    flip1: bool,
    /// The source lies behind an x2 wall: read the v2-mirrored sheet.
    flip2: bool,
    force: Vec2,
}

/// Precomputed stencil taps and rotation tables for one grid and parameter set.
#[derive(Debug, Clone)]
pub struct FieldOperator {
    grid: PhaseGrid,
    params: ModelParams,
    taps: Vec<Vec<Tap>>,
    cos: Array2<f64>,
    sin: Array2<f64>,
    flip1: Vec<usize>,
    flip2: Vec<usize>,
    parallel: bool,
}

/// Index of a stencil neighbour along one axis, or `None` when it falls
/// beyond a wall by more than one reflection.
fn neighbour(i: usize, d: isize, n: usize, kind: EdgeKind) -> Option<(usize, bool)> {
    let j = i as isize + d;
    let n_i = n as isize;
    if (0..n_i).contains(&j) {
        return Some((j as usize, false));
    }
    match kind {
        EdgeKind::Periodic => Some((j.rem_euclid(n_i) as usize, false)),
        EdgeKind::ReflectiveWall => {
            let m = if j < 0 { -1 - j } else { 2 * n_i - 1 - j };
            (0..n_i).contains(&m).then_some((m as usize, true))
        }
    }
}

impl FieldOperator {
    pub fn new(
        grid: &PhaseGrid,
        params: &ModelParams,
        stencil_radius: usize,
        parallel: bool,
    ) -> Result<Self, MeanFieldError> {
        if stencil_radius > grid.nx.max(grid.ny) {
            return Err(MeanFieldError::GridMismatch(format!(
                "stencil radius {stencil_radius} exceeds the grid ({} x {})",
                grid.nx, grid.ny
            )));
        }
        let r = stencil_radius as isize;
        let (dx1, dx2) = (grid.dx1(), grid.dx2());
        let mut taps = Vec::with_capacity(grid.n_spatial());
        for s in 0..grid.n_spatial() {
            let (i, j) = (s / grid.ny, s % grid.ny);
            let mut row = Vec::with_capacity((2 * stencil_radius + 1).pow(2));
            for di in -r..=r {
                let Some((ii, flip1)) = neighbour(i, di, grid.nx, grid.domain.x1_kind()) else {
                    continue;
                };
                for dj in -r..=r {
                    let Some((jj, flip2)) = neighbour(j, dj, grid.ny, grid.domain.x2_kind()) else {
                        continue;
                    };
                    // Mirror images sit at the ghost position, which is exactly
                    // the unwrapped offset from the target cell.
                    let offset = Vec2::new(di as f64 * dx1, dj as f64 * dx2);
                    let force = pair_force(Vec2::ZERO, offset, &params.morse);
                    if force == Vec2::ZERO {
                        continue;
                    }
                    row.push(Tap {
                        source: ii * grid.ny + jj,
                        flip1,
                        flip2,
                        force,
                    });
                }
            }
            taps.push(row);
        }

        let nv = grid.n_velocity();
        let lambda = params.lambda;
        let mut cos = Array2::<f64>::zeros((nv, nv));
        let mut sin = Array2::<f64>::zeros((nv, nv));
        for q in 0..nv {
            for qb in 0..nv {
                let a = interaction_angle(grid.v_center(q), grid.v_center(qb), lambda);
                cos[[q, qb]] = if a == 0.0 { 1.0 } else { a.cos() };
                sin[[q, qb]] = if a == 0.0 { 0.0 } else { a.sin() };
            }
        }
        Ok(FieldOperator {
            grid: *grid,
            params: *params,
            taps,
            cos,
            sin,
            flip1: (0..nv).map(|q| grid.flip_v1(q)).collect(),
            flip2: (0..nv).map(|q| grid.flip_v2(q)).collect(),
            parallel,
        })
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    /// Stencil-weighted force moments `(G1, G2)` of one density, each of
    /// shape `(n_spatial, n_velocity)`.
    fn moments(&self, f: &PhaseDensity) -> (Array2<f64>, Array2<f64>) {
        let ns = self.grid.n_spatial();
        let nv = self.grid.n_velocity();
        let mut g1 = Array2::<f64>::zeros((ns, nv));
        let mut g2 = Array2::<f64>::zeros((ns, nv));
        let fill = |s: usize, r1: &mut [f64], r2: &mut [f64]| {
            for tap in &self.taps[s] {
                let src = f.block(tap.source);
                let (k1, k2) = (tap.force.c1, tap.force.c2);
                match (tap.flip1, tap.flip2) {
                    (false, false) => {
                        for q in 0..nv {
                            r1[q] += k1 * src[q];
                            r2[q] += k2 * src[q];
                        }
                    }
                    (a, b) => {
                        for q in 0..nv {
                            let mut m = q;
                            if a {
                                m = self.flip1[m];
                            }
                            if b {
                                m = self.flip2[m];
                            }
                            r1[q] += k1 * src[m];
                            r2[q] += k2 * src[m];
                        }
                    }
                }
            }
        };
        let s1 = g1.as_slice_mut().expect("standard layout");
        let s2 = g2.as_slice_mut().expect("standard layout");
        if self.parallel {
            s1.par_chunks_mut(nv)
                .zip(s2.par_chunks_mut(nv))
                .enumerate()
                .for_each(|(s, (r1, r2))| fill(s, r1, r2));
        } else {
            for (s, (r1, r2)) in s1.chunks_mut(nv).zip(s2.chunks_mut(nv)).enumerate() {
                fill(s, r1, r2);
            }
        }
        (g1, g2)
    }

    /// Rotated convolution `(C1, C2)` of a single source density.
    pub fn group_convolution(&self, f: &PhaseDensity) -> Result<(Array2<f64>, Array2<f64>), MeanFieldError> {
        if !self.grid.same_shape(&f.grid) {
            return Err(MeanFieldError::GridMismatch("density grid differs from the field grid".into()));
        }
        let ns = self.grid.n_spatial();
        let nv = self.grid.n_velocity();
        let vol = self.grid.cell_volume();
        let mut c1 = Array2::<f64>::zeros((ns, nv));
        let mut c2 = Array2::<f64>::zeros((ns, nv));
        let (cos, sin): (ArrayView2<f64>, ArrayView2<f64>) = (self.cos.view(), self.sin.view());
        let (g1, g2) = self.moments(f);
        // The tables are symmetric, so G * table^T == G * table.
        general_mat_mul(vol, &g1, &cos, 0.0, &mut c1);
        general_mat_mul(-vol, &g2, &sin, 1.0, &mut c1);
        general_mat_mul(vol, &g1, &sin, 0.0, &mut c2);
        general_mat_mul(vol, &g2, &cos, 1.0, &mut c2);
        Ok((c1, c2))
    }

    /// Sum of the per-group convolutions. Each group is convolved on its own
    /// and the results are added last, so the sum is symmetric in the sources.
    pub fn convolution(&self, sources: &[&PhaseDensity]) -> Result<(Array2<f64>, Array2<f64>), MeanFieldError> {
        let ns = self.grid.n_spatial();
        let nv = self.grid.n_velocity();
        let mut c1 = Array2::<f64>::zeros((ns, nv));
        let mut c2 = Array2::<f64>::zeros((ns, nv));
        for f in sources {
            let (a1, a2) = self.group_convolution(f)?;
            c1 += &a1;
            c2 += &a2;
        }
        Ok((c1, c2))
    }

    /// `S_group` built from a precomputed convolution.
    pub fn field_from_convolution(&self, conv: &(Array2<f64>, Array2<f64>), group: Group) -> ForceField {
        let u = self.params.desired_velocity(group).unwrap_or(Vec2::ZERO);
        let nv = self.grid.n_velocity();
        let mut s1 = conv.0.clone();
        let mut s2 = conv.1.clone();
        for q in 0..nv {
            let v = self.grid.v_center(q);
            let drive = u - v;
            s1.column_mut(q).mapv_inplace(|c| c - drive.c1);
            s2.column_mut(q).mapv_inplace(|c| c - drive.c2);
        }
        ForceField { s1, s2 }
    }

    /// Drift of `group` induced by the red and blue densities.
    pub fn field(&self, f_r: &PhaseDensity, f_b: &PhaseDensity, group: Group) -> Result<ForceField, MeanFieldError> {
        let conv = self.convolution(&[f_r, f_b])?;
        Ok(self.field_from_convolution(&conv, group))
    }
}

/// One-shot drift computation; build a [`FieldOperator`] to reuse the tables.
pub fn interaction_field(
    f_r: &PhaseDensity,
    f_b: &PhaseDensity,
    group: Group,
    params: &ModelParams,
    stencil_radius: usize,
) -> Result<ForceField, MeanFieldError> {
    FieldOperator::new(&f_r.grid, params, stencil_radius, false)?.field(f_r, f_b, group)
}
