//! Spatial transport `f_t + v . grad_x f = 0` along straight characteristics.
//!
//! Each axis is swept separately. Along a line the cell averages are
//! reconstructed as a piecewise quadratic Bezier density (the derivative of a
//! cubic Bezier primitive) whose control values are limited to the range of
//! the neighbouring averages, so the density never leaves their convex hull.
//! The new average of a cell is the exact integral of this density over the
//! departure interval, which makes the update conservative and free of new
//! extrema.
//!
//! Reflecting walls are handled by unfolding: a velocity sheet and its mirror
//! sheet form a single periodic line of twice the length.

use rayon::prelude::*;

use crate::math::Vec2;
use crate::particle::EdgeKind;

use super::grid::{PhaseDensity, PhaseGrid};

/// Shifts within this distance of an integer are snapped to it.
const INTEGER_SNAP: f64 = 1e-12;

/// Departure offsets, one per velocity cell, for a spatial step of `tau`.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicTable {
    pub tau: f64,
    /// `offsets[q]` = departure point minus arrival point for velocity cell `q`.
    pub offsets: Vec<Vec2>,
}

impl CharacteristicTable {
    /// Integrates `dx/dt = v, dv/dt = 0` backwards over `tau` with the
    /// midpoint rule, which is exact for this field.
    pub fn new(grid: &PhaseGrid, tau: f64) -> Self {
        let offsets = (0..grid.n_velocity())
            .map(|q| {
                let v = grid.v_center(q);
                let rhs = |_x: Vec2| v;
                let k1 = rhs(Vec2::ZERO);
                let mid = k1 * (-0.5 * tau);
                let k2 = rhs(mid);
                k2 * (-tau)
            })
            .collect();
        CharacteristicTable { tau, offsets }
    }
}

/// Mass in the right-hand fraction `theta` of a cell with edge controls
/// `a` (left), `b` (right) and middle control `c`, in cell-average units.
#[inline]
fn right_mass(a: f64, b: f64, c: f64, theta: f64) -> f64 {
    let t2 = theta * theta;
    let t3 = t2 * theta;
    b * (theta - t2 + t3 / 3.0) + c * (t2 - 2.0 * t3 / 3.0) + a * (t3 / 3.0)
}

/// Reusable buffers for [`advect_periodic_line`].
#[derive(Debug, Clone, Default)]
pub struct LineScratch {
    padded: Vec<f64>,
    iface: Vec<f64>,
    right: Vec<f64>,
}

/// Fills `s.right[k]` with the mass in the right-hand fraction `theta` of
/// cell `k` under the limited quadratic reconstruction of a periodic line.
fn right_masses(line: &[f64], theta: f64, s: &mut LineScratch) {
    let n = line.len();
    // padded[k + 2] = line[k mod n] for k in -2..n+2
    s.padded.clear();
    s.padded.extend((0..n + 4).map(|k| line[(k + 2 * n - 2) % n]));
    let p = &s.padded;
    // iface[m] lies between cells m - 1 and m.
    s.iface.clear();
    s.iface.extend((1..n + 2).map(|k| {
        let (fl, fr) = (p[k], p[k + 1]);
        let raw = (7.0 * (fl + fr) - (p[k - 1] + p[k + 2])) / 12.0;
        raw.clamp(fl.min(fr), fl.max(fr))
    }));
    s.right.clear();
    for k in 0..n {
        let f = p[k + 2];
        let a = s.iface[k];
        let b = s.iface[k + 1];
        let lo = f.min(p[k + 1]).min(p[k + 3]);
        let hi = f.max(p[k + 1]).max(p[k + 3]);
        let excess = a + b - 2.0 * f;
        let c_full = f - excess;
        // Shrink both edges toward the mean until the middle control lies in
        // the local hull; theta = 0 gives the constant profile.
        let shrink = if c_full > hi {
            (f - hi) / excess
        } else if c_full < lo {
            (f - lo) / excess
        } else {
            1.0
        };
        let shrink = shrink.clamp(0.0, 1.0);
        let r = if shrink == 1.0 {
            right_mass(a, b, c_full, theta)
        } else {
            let a2 = f + shrink * (a - f);
            let b2 = f + shrink * (b - f);
            right_mass(a2, b2, 3.0 * f - a2 - b2, theta)
        };
        s.right.push(r);
    }
}

/// Advects a periodic line by `shift` cells (positive moves mass toward
/// larger indices), writing into `out`.
pub fn advect_periodic_line(line: &[f64], shift: f64, out: &mut [f64], scratch: &mut LineScratch) {
    let n = line.len();
    debug_assert_eq!(out.len(), n);
    let nearest = shift.round();
    let shift = if (shift - nearest).abs() <= INTEGER_SNAP { nearest } else { shift };
    let k = shift.floor();
    let theta = shift - k;
    let k = (k as i64).rem_euclid(n as i64) as usize;
    if theta == 0.0 {
        for (i, o) in out.iter_mut().enumerate() {
            *o = line[(i + n - k) % n];
        }
        return;
    }
    right_masses(line, theta, scratch);
    let r = &scratch.right;
    for (i, o) in out.iter_mut().enumerate() {
        let src = (i + n - k) % n;
        let left = (src + n - 1) % n;
        *o = line[src] + r[left] - r[src];
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Axis {
    X1,
    X2,
}

/// Full spatial step: an x1 sweep followed by an x2 sweep.
pub fn semi_lagrangian_transport(f: &PhaseDensity, table: &CharacteristicTable, parallel: bool) -> PhaseDensity {
    let mid = sweep(f, table, Axis::X1, parallel);
    sweep(&mid, table, Axis::X2, parallel)
}

/// One line of a sweep: a velocity sheet `q` at offset `start`, unfolded
/// with its mirror sheet when `partner` is set.
#[derive(Debug, Clone, Copy)]
struct LineJob {
    start: usize,
    q: usize,
    partner: Option<usize>,
}

#[derive(Default)]
struct SweepScratch {
    line: Vec<f64>,
    out: Vec<f64>,
    line_scratch: LineScratch,
}

fn sweep(f: &PhaseDensity, table: &CharacteristicTable, axis: Axis, parallel: bool) -> PhaseDensity {
    let g = f.grid;
    let nv = g.n_velocity();
    let (n, stride, other, kind, width) = match axis {
        Axis::X1 => (g.nx, g.ny * nv, g.ny, g.domain.x1_kind(), g.dx1()),
        Axis::X2 => (g.ny, nv, g.nx, g.domain.x2_kind(), g.dx2()),
    };
    let base = |o: usize| match axis {
        Axis::X1 => o * nv,
        Axis::X2 => o * g.ny * nv,
    };
    let mirror = |q: usize| match axis {
        Axis::X1 => g.flip_v1(q),
        Axis::X2 => g.flip_v2(q),
    };
    let shift = |q: usize| {
        let d = table.offsets[q];
        -match axis {
            Axis::X1 => d.c1,
            Axis::X2 => d.c2,
        } / width
    };

    let mut jobs: Vec<LineJob> = Vec::new();
    for o in 0..other {
        for q in 0..nv {
            let start = base(o);
            match kind {
                EdgeKind::Periodic => jobs.push(LineJob { start, q, partner: None }),
                EdgeKind::ReflectiveWall => {
                    let p = mirror(q);
                    if q <= p {
                        jobs.push(LineJob {
                            start,
                            q,
                            partner: Some(p),
                        });
                    }
                }
            }
        }
    }

    // Leaves the new line values in `sc.out`: sheet q first, then the
    // partner sheet in reverse order.
    let run = |job: &LineJob, sc: &mut SweepScratch| {
        let LineJob { start, q, partner } = *job;
        let at = |i: usize, sheet: usize| f.values[start + i * stride + sheet];
        sc.line.clear();
        sc.line.extend((0..n).map(|i| at(i, q)));
        match partner {
            Some(p) if p != q => sc.line.extend((0..n).rev().map(|i| at(i, p))),
            _ => {}
        }
        sc.out.clear();
        sc.out.resize(sc.line.len(), 0.0);
        let s = shift(q);
        if partner == Some(q) || s == 0.0 {
            sc.out.copy_from_slice(&sc.line);
        } else {
            advect_periodic_line(&sc.line, s, &mut sc.out, &mut sc.line_scratch);
        }
    };
    let scatter = |job: &LineJob, out: &[f64], values: &mut [f64]| {
        for i in 0..n {
            values[job.start + i * stride + job.q] = out[i];
        }
        if let Some(p) = job.partner.filter(|&p| p != job.q) {
            for i in 0..n {
                values[job.start + i * stride + p] = out[2 * n - 1 - i];
            }
        }
    };

    let mut next = PhaseDensity::zeros(g, f.group);
    if parallel {
        let results: Vec<Vec<f64>> = jobs
            .par_iter()
            .map_init(SweepScratch::default, |sc, job| {
                run(job, sc);
                sc.out.clone()
            })
            .collect();
        for (job, out) in jobs.iter().zip(&results) {
            scatter(job, out, &mut next.values);
        }
    } else {
        let mut sc = SweepScratch::default();
        for job in &jobs {
            run(job, &mut sc);
            scatter(job, &sc.out, &mut next.values);
        }
    }
    next
}
