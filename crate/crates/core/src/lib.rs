//! Crowd dynamics with anisotropic, rotation-based collision avoidance.
//!
//! Two solvers share one interaction model: a microscopic N-agent integrator
//! in [`particle`] and a kinetic mean-field solver on a phase-space grid in
//! [`meanfield`]. [`scenario`] provides presets and config parsing,
//! [`diagnostics`] the observables and [`io`] the file formats.

pub mod agent;
pub mod diagnostics;
pub mod error;
pub mod interaction;
pub mod io;
pub mod math;
pub mod meanfield;
pub mod particle;
pub mod scenario;

pub use agent::{AgentState, Group};
pub use error::{ConfigError, DiagnosticsError, FormatError, MeanFieldError, ParticleError};
pub use interaction::{ModelParams, MorseParams};
pub use math::{AnisotropyParam, Rect, Vec2};
pub use scenario::{sample_initial_particles, ScenarioConfig};
