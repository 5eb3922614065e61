//! Velocity-space drift `f_t + div_v(-S f) = 0` with frozen coefficients.
//!
//! Conservative finite volumes, split by dimension (v1 then v2). Interface
//! fluxes are Lax-Wendroff fluxes limited with the van Leer limiter, the
//! interface speed is the mean of the two adjacent cell-centre speeds, and no
//! mass crosses the edge of the velocity box.

use crate::error::MeanFieldError;

use super::field::ForceField;
use super::grid::PhaseDensity;

/// `phi(r) * delta` for the van Leer limiter with `r = upwind / delta`.
#[inline]
fn van_leer(upwind: f64, delta: f64) -> f64 {
    if upwind * delta > 0.0 {
        2.0 * upwind * delta / (upwind + delta)
    } else {
        0.0
    }
}

/// Largest Courant number `max|S| * h / min(dv1, dv2)` of a field.
pub fn courant_number(field: &ForceField, dv1: f64, dv2: f64, h: f64) -> (f64, usize, f64) {
    let (speed, cell) = field.max_norm();
    (speed * h / dv1.min(dv2), cell, speed)
}

/// Updates one line of cell averages in place. `speed[k]` is the advection
/// speed at cell centre `k`; `flux` and `scale` are scratch buffers.
fn update_line(values: &mut [f64], speed: &[f64], nu: f64, flux: &mut Vec<f64>, scale: &mut Vec<f64>) {
    let n = values.len();
    flux.clear();
    flux.resize(n + 1, 0.0);
    // flux[k] sits between cells k-1 and k; flux[0] and flux[n] stay zero.
    for k in 1..n {
        let a = 0.5 * (speed[k - 1] + speed[k]);
        if a == 0.0 {
            continue;
        }
        let (fl, fr) = (values[k - 1], values[k]);
        let delta = fr - fl;
        let (upwind_value, upwind_delta) = if a > 0.0 {
            (fl, if k >= 2 { fl - values[k - 2] } else { 0.0 })
        } else {
            (fr, if k + 1 < n { values[k + 1] - fr } else { 0.0 })
        };
        let c = (a * nu).abs();
        flux[k] = a * (upwind_value + 0.5 * (1.0 - c) * van_leer(upwind_delta, delta) * a.signum());
    }
    // Limit each donor so it never sends out more than it holds.
    scale.clear();
    scale.resize(n, 1.0);
    for k in 0..n {
        let out = nu * (flux[k + 1].max(0.0) + (-flux[k]).max(0.0));
        if out > values[k] && out > 0.0 {
            scale[k] = (values[k].max(0.0) / out).min(1.0);
        }
    }
    for k in 1..n {
        let donor = if flux[k] > 0.0 { k - 1 } else { k };
        flux[k] *= scale[donor];
    }
    for k in 0..n {
        values[k] -= nu * (flux[k + 1] - flux[k]);
    }
}

/// Advances `f` by `h` under the drift `field`. The advection speed is
/// `-field`. Errors when `max|field| * h / min(dv1, dv2) > 1`.
pub fn fv_velocity_halfstep(f: &PhaseDensity, field: &ForceField, h: f64) -> Result<PhaseDensity, MeanFieldError> {
    let g = f.grid;
    let (dv1, dv2) = (g.dv1(), g.dv2());
    let (cfl, cell, speed) = courant_number(field, dv1, dv2, h);
    if cfl > 1.0 {
        return Err(MeanFieldError::Cfl {
            cell,
            speed,
            cfl,
            suggested_dt: 2.0 * dv1.min(dv2) / speed,
        });
    }
    if !field.is_finite() {
        return Err(MeanFieldError::NonFinite);
    }
    let mut out = f.clone();
    let nv = g.n_velocity();
    let (nv1, nv2) = (g.nv1, g.nv2);
    let mut line = Vec::with_capacity(nv1.max(nv2));
    let mut spd = Vec::with_capacity(nv1.max(nv2));
    let (mut flux, mut scale) = (Vec::new(), Vec::new());
    for (s, block) in out.values.chunks_exact_mut(nv).enumerate() {
        let s1 = field.s1.row(s);
        let s2 = field.s2.row(s);
        // Along v1: cells k * nv2 + l for fixed l.
        for l in 0..nv2 {
            line.clear();
            spd.clear();
            for k in 0..nv1 {
                line.push(block[k * nv2 + l]);
                spd.push(-s1[k * nv2 + l]);
            }
            if spd.iter().all(|&c| c == 0.0) {
                continue;
            }
            update_line(&mut line, &spd, h / dv1, &mut flux, &mut scale);
            for k in 0..nv1 {
                block[k * nv2 + l] = line[k];
            }
        }
        // Along v2: contiguous rows.
        for k in 0..nv1 {
            let row = &mut block[k * nv2..(k + 1) * nv2];
            spd.clear();
            spd.extend((0..nv2).map(|l| -s2[k * nv2 + l]));
            if spd.iter().all(|&c| c == 0.0) {
                continue;
            }
            update_line(row, &spd, h / dv2, &mut flux, &mut scale);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::Group;
    use crate::math::Rect;
    use crate::meanfield::grid::PhaseGrid;
    use crate::particle::{DomainSpec, EdgeKind};
    use ndarray::Array2;
    use proptest::prelude::*;

    fn grid(nv: usize) -> PhaseGrid {
        let d = DomainSpec::new((0.0, 2.0), (0.0, 1.0), EdgeKind::Periodic, EdgeKind::Periodic);
        PhaseGrid::new(d, Rect::new(-1.0, 1.0, -1.0, 1.0), 2, 1, nv, nv).unwrap()
    }

    fn constant_field(g: &PhaseGrid, s: (f64, f64)) -> ForceField {
        let shape = (g.n_spatial(), g.n_velocity());
        ForceField {
            s1: Array2::from_elem(shape, s.0),
            s2: Array2::from_elem(shape, s.1),
        }
    }

    #[test]
    fn zero_field_is_identity() {
        let g = grid(8);
        let mut f = PhaseDensity::zeros(g, Group::Red);
        f.values.iter_mut().enumerate().for_each(|(n, v)| *v = (n % 5) as f64);
        let out = fv_velocity_halfstep(&f, &constant_field(&g, (0.0, 0.0)), 0.1).unwrap();
        assert_eq!(out, f);
    }

    #[test]
    fn cfl_violation_reports_dt() {
        let g = grid(10);
        let f = PhaseDensity::zeros(g, Group::Red);
        let err = fv_velocity_halfstep(&f, &constant_field(&g, (3.0, 4.0)), 0.1).unwrap_err();
        match err {
            MeanFieldError::Cfl { cfl, suggested_dt, .. } => {
                assert!((cfl - 2.5).abs() < 1e-12);
                assert!((suggested_dt - 0.08).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    /// Cell averages of a Gaussian on `[-1, 1]`, via the error function
    /// replaced by fine midpoint quadrature.
    fn gaussian_averages(n: usize, center: f64, width: f64) -> Vec<f64> {
        let h = 2.0 / n as f64;
        (0..n)
            .map(|k| {
                let a = -1.0 + k as f64 * h;
                let m = 64;
                (0..m)
                    .map(|i| {
                        let x = a + (i as f64 + 0.5) * h / m as f64;
                        (-((x - center) / width).powi(2)).exp()
                    })
                    .sum::<f64>()
                    / m as f64
            })
            .collect()
    }

    fn translation_error(n: usize) -> f64 {
        let speed = 0.5;
        let t_end = 0.8;
        let h = 2.0 / n as f64;
        let steps = n; // Courant number 0.5 * t_end / h / steps = 0.2
        let dt = t_end / steps as f64;
        let mut line = gaussian_averages(n, -0.3, 0.15);
        let spd = vec![speed; n];
        let (mut flux, mut scale) = (Vec::new(), Vec::new());
        for _ in 0..steps {
            update_line(&mut line, &spd, dt / h, &mut flux, &mut scale);
        }
        let exact = gaussian_averages(n, -0.3 + speed * t_end, 0.15);
        line.iter().zip(&exact).map(|(a, b)| (a - b).abs()).sum::<f64>() * h
    }

    #[test]
    fn translation_converges_at_high_order() {
        let errs: Vec<f64> = [50, 100, 200, 400].iter().map(|&n| translation_error(n)).collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order >= 1.5, "errors {errs:?}");
        }
    }

    #[test]
    fn two_dimensional_translation_moves_the_mean() {
        let g = grid(40);
        let mut f = PhaseDensity::zeros(g, Group::Red);
        for s in 0..g.n_spatial() {
            for q in 0..g.n_velocity() {
                let v = g.v_center(q);
                f.values[s * g.n_velocity() + q] = (-((v.c1 + 0.2).powi(2) + v.c2.powi(2)) / 0.02).exp();
            }
        }
        let m0 = f.mean_velocity().unwrap();
        // Drift S = (-0.5, 0.25) advects with speed (0.5, -0.25).
        let field = constant_field(&g, (-0.5, 0.25));
        for _ in 0..20 {
            f = fv_velocity_halfstep(&f, &field, 0.02).unwrap();
        }
        let m1 = f.mean_velocity().unwrap();
        assert!((m1.c1 - m0.c1 - 0.2).abs() < 1e-3, "{m1}");
        assert!((m1.c2 - m0.c2 + 0.1).abs() < 1e-3, "{m1}");
    }

    proptest! {
        #[test]
        fn conserves_mass_and_positivity(
            vals in prop::collection::vec(0.0f64..1.0, 16),
            speeds in prop::collection::vec(-4.0f64..4.0, 16),
            speeds2 in prop::collection::vec(-4.0f64..4.0, 16),
        ) {
            let g = PhaseGrid::new(
                DomainSpec::new((0.0, 1.0), (0.0, 1.0), EdgeKind::Periodic, EdgeKind::Periodic),
                Rect::new(-1.0, 1.0, -1.0, 1.0), 1, 1, 4, 4).unwrap();
            let mut f = PhaseDensity::zeros(g, Group::Blue);
            f.values.copy_from_slice(&vals);
            let field = ForceField {
                s1: Array2::from_shape_vec((1, 16), speeds).unwrap(),
                s2: Array2::from_shape_vec((1, 16), speeds2).unwrap(),
            };
            // max |S| < 5.7 with dv = 0.5: h = 0.08 keeps the Courant number below 1.
            let out = fv_velocity_halfstep(&f, &field, 0.08).unwrap();
            prop_assert!((out.mass() - f.mass()).abs() <= 1e-12 * f.mass().max(1.0));
            prop_assert!(out.min_value() >= -1e-12);
        }
    }
}
