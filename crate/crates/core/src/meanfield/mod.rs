//! Mesoscopic two-group kinetic solver on a 4D phase-space grid.
//!
//! Each step of size `tau` is a Strang splitting:
//!
//! ```text
//! S_r, S_b   from (f_r, f_b) at the start of the step
//! f <- velocity drift by S over tau/2      (finite volumes)
//! f <- spatial transport over tau          (semi-Lagrangian)
//! f <- velocity drift by the same S over tau/2
//! ```

pub mod field;
pub mod grid;
pub mod transport;
pub mod velocity;

use crate::agent::Group;
use crate::error::MeanFieldError;
use crate::interaction::ModelParams;

pub use field::{interaction_field, FieldOperator, ForceField, DEFAULT_STENCIL_RADIUS};
pub use grid::{init_uniform, marginals, Marginals, PhaseDensity, PhaseGrid};
pub use transport::{advect_periodic_line, LineScratch, semi_lagrangian_transport, CharacteristicTable};
pub use velocity::{courant_number, fv_velocity_halfstep};

/// Precomputed operators for one grid, parameter set and time step.
#[derive(Debug, Clone)]
pub struct MeanFieldSolver {
    pub tau: f64,
    pub parallel: bool,
    op: FieldOperator,
    table: CharacteristicTable,
}

impl MeanFieldSolver {
    pub fn new(
        grid: &PhaseGrid,
        params: &ModelParams,
        tau: f64,
        stencil_radius: usize,
        parallel: bool,
    ) -> Result<Self, MeanFieldError> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(MeanFieldError::GridMismatch(format!("time step must be positive, got {tau}")));
        }
        Ok(MeanFieldSolver {
            tau,
            parallel,
            op: FieldOperator::new(grid, params, stencil_radius, parallel)?,
            table: CharacteristicTable::new(grid, tau),
        })
    }

    pub fn grid(&self) -> &PhaseGrid {
        self.op.grid()
    }

    pub fn field_operator(&self) -> &FieldOperator {
        &self.op
    }

    /// Drifts of both groups from the current densities.
    pub fn fields(&self, f_r: &PhaseDensity, f_b: &PhaseDensity) -> Result<(ForceField, ForceField), MeanFieldError> {
        let conv = self.op.convolution(&[f_r, f_b])?;
        Ok((
            self.op.field_from_convolution(&conv, f_r.group),
            self.op.field_from_convolution(&conv, f_b.group),
        ))
    }

    /// One Strang step for both groups.
    pub fn step(&self, f_r: &PhaseDensity, f_b: &PhaseDensity) -> Result<(PhaseDensity, PhaseDensity), MeanFieldError> {
        let (s_r, s_b) = self.fields(f_r, f_b)?;
        let half = 0.5 * self.tau;
        let advance = |f: &PhaseDensity, s: &ForceField| -> Result<PhaseDensity, MeanFieldError> {
            let a = fv_velocity_halfstep(f, s, half)?;
            let b = semi_lagrangian_transport(&a, &self.table, self.parallel);
            let c = fv_velocity_halfstep(&b, s, half)?;
            if c.values.iter().any(|v| !v.is_finite()) {
                return Err(MeanFieldError::NonFinite);
            }
            Ok(c)
        };
        Ok((advance(f_r, &s_r)?, advance(f_b, &s_b)?))
    }
}

/// Evolving pair of densities.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldState {
    pub red: PhaseDensity,
    pub blue: PhaseDensity,
    pub t: f64,
    pub step_index: u64,
}

impl MeanFieldState {
    pub fn new(red: PhaseDensity, blue: PhaseDensity) -> Result<Self, MeanFieldError> {
        if !red.grid.same_shape(&blue.grid) {
            return Err(MeanFieldError::GridMismatch("red and blue grids differ".into()));
        }
        if red.group != Group::Red || blue.group != Group::Blue {
            return Err(MeanFieldError::GridMismatch("densities must be tagged red and blue".into()));
        }
        Ok(MeanFieldState {
            red,
            blue,
            t: 0.0,
            step_index: 0,
        })
    }

    pub fn advance(&mut self, solver: &MeanFieldSolver) -> Result<(), MeanFieldError> {
        let (r, b) = solver.step(&self.red, &self.blue)?;
        self.red = r;
        self.blue = b;
        self.step_index += 1;
        self.t = self.step_index as f64 * solver.tau;
        Ok(())
    }
}

/// One Strang step without reusing precomputed operators.
pub fn strang_step(
    f_r: &PhaseDensity,
    f_b: &PhaseDensity,
    params: &ModelParams,
    tau: f64,
    stencil_radius: usize,
) -> Result<(PhaseDensity, PhaseDensity), MeanFieldError> {
    MeanFieldSolver::new(&f_r.grid, params, tau, stencil_radius, false)?.step(f_r, f_b)
}
