//! Microscopic N-agent simulator.
//!
//! One step of size `tau` per pedestrian:
//!
//! ```text
//! x' = x + tau/2 v
//! v' = (v + tau u) / (1 + tau)          implicit relaxation toward u
//! v+ = v' + tau * a_int(x', v')         rotated interaction, frozen snapshot
//! x+ = x' + tau/2 v+
//! ```
//!
//! followed by periodic wrapping and wall reflection. Obstacles never move.

pub mod boundary;
pub mod neighbors;
pub mod obstacle;

use rayon::prelude::*;

use crate::agent::{AgentState, Group};
use crate::error::ParticleError;
use crate::interaction::{accumulate_interaction, ModelParams};
use crate::math::Vec2;

pub use boundary::{apply_boundaries, apply_periodic, apply_reflective, ghost_copies, DomainSpec, Edge, EdgeKind};
pub use neighbors::{CellList, NeighborSearch};
pub use obstacle::{make_circle_obstacle, CircleObstacle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StepOptions {
    pub search: NeighborSearch,
    /// Spread the force pass over the rayon pool. Results are identical to
    /// the serial pass because every agent sums its neighbours in index order.
    pub parallel: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSimState {
    pub agents: Vec<AgentState>,
    pub t: f64,
    pub step_index: u64,
    pub params: ModelParams,
    pub domain: DomainSpec,
    pub dt: f64,
}

impl ParticleSimState {
    pub fn new(agents: Vec<AgentState>, params: ModelParams, domain: DomainSpec, dt: f64) -> Self {
        ParticleSimState {
            agents,
            t: 0.0,
            step_index: 0,
            params,
            domain,
            dt,
        }
    }

    pub fn count(&self, group: Group) -> usize {
        self.agents.iter().filter(|a| a.group == group).count()
    }

    /// Advances in place by one step.
    pub fn advance(&mut self, opts: &StepOptions) -> Result<(), ParticleError> {
        let next = step(self, opts)?;
        *self = next;
        Ok(())
    }

    /// Runs `n` steps, calling `observe` after each.
    pub fn run<F>(&mut self, n: u64, opts: &StepOptions, mut observe: F) -> Result<(), ParticleError>
    where
        F: FnMut(&ParticleSimState),
    {
        for _ in 0..n {
            self.advance(opts)?;
            observe(self);
        }
        Ok(())
    }
}

/// Half drift plus implicit relaxation for one agent.
#[inline]
fn predictor(a: &AgentState, params: &ModelParams, tau: f64) -> AgentState {
    match params.desired_velocity(a.group) {
        None => *a,
        Some(u) => {
            let half = 0.5 * tau;
            let x = Vec2::new(a.x.c1 + half * a.v.c1, a.x.c2 + half * a.v.c2);
            let v = Vec2::new((a.v.c1 + tau * u.c1) / (1.0 + tau), (a.v.c2 + tau * u.c2) / (1.0 + tau));
            AgentState { x, v, group: a.group }
        }
    }
}

/// Interaction accelerations of the first `n` entries of `augmented`
/// (zero for obstacles), normalised by `n`.
pub fn interaction_pass(augmented: &[AgentState], n: usize, params: &ModelParams, opts: &StepOptions) -> Vec<Vec2> {
    let grid = match opts.search {
        NeighborSearch::CellList => {
            let pts: Vec<Vec2> = augmented.iter().map(|a| a.x).collect();
            Some(CellList::build(&pts, params.r_cut))
        }
        NeighborSearch::AllPairs => None,
    };
    let one = |i: usize, buf: &mut Vec<usize>| -> Vec2 {
        if !augmented[i].group.is_pedestrian() {
            return Vec2::ZERO;
        }
        match &grid {
            Some(g) => {
                g.candidates(augmented[i].x, buf);
                accumulate_interaction(i, augmented, buf.iter().copied(), params, n)
            }
            None => accumulate_interaction(i, augmented, 0..augmented.len(), params, n),
        }
    };
    if opts.parallel {
        (0..n).into_par_iter().map_init(Vec::new, |buf, i| one(i, buf)).collect()
    } else {
        let mut buf = Vec::new();
        (0..n).map(|i| one(i, &mut buf)).collect()
    }
}

/// One leap-frog step with split implicit relaxation and boundary handling.
pub fn step(state: &ParticleSimState, opts: &StepOptions) -> Result<ParticleSimState, ParticleError> {
    let tau = state.dt;
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(ParticleError::BadTimeStep(tau));
    }
    let params = &state.params;
    let n = state.agents.len();

    let next_step = state.step_index + 1;
    let primed: Vec<AgentState> = state.agents.iter().map(|a| predictor(a, params, tau)).collect();
    if let Some(agent) = primed.iter().position(|a| !a.is_finite()) {
        return Err(ParticleError::NonFinite { step: next_step, agent });
    }
    let augmented = ghost_copies(&primed, &state.domain, params.r_cut);
    let acc = interaction_pass(&augmented, n, params, opts);

    let half = 0.5 * tau;
    let max_jump = state.domain.width().min(state.domain.height());
    let mut agents = Vec::with_capacity(n);
    for (i, (p, a)) in primed.iter().zip(&acc).enumerate() {
        if !p.group.is_pedestrian() {
            agents.push(state.agents[i]);
            continue;
        }
        let v = Vec2::new(p.v.c1 + tau * a.c1, p.v.c2 + tau * a.c2);
        let x = Vec2::new(p.x.c1 + half * v.c1, p.x.c2 + half * v.c2);
        if !(x.is_finite() && v.is_finite()) {
            return Err(ParticleError::NonFinite { step: next_step, agent: i });
        }
        let displacement = (x - state.agents[i].x).norm();
        if displacement > max_jump {
            return Err(ParticleError::Unstable {
                step: next_step,
                agent: i,
                displacement,
            });
        }
        let (x, v) = apply_boundaries(x, v, &state.domain);
        agents.push(AgentState { x, v, group: p.group });
    }

    Ok(ParticleSimState {
        agents,
        t: next_step as f64 * tau,
        step_index: next_step,
        params: state.params,
        domain: state.domain,
        dt: tau,
    })
}
