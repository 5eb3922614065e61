//! `aniso diagnose`: metrics over saved snapshots, printed as `key = value`.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use aniso_core::diagnostics::{
    desired_velocity_fraction, lane_metrics, mass_audit, segregation_index, Axis, DEFAULT_BIN_WIDTH,
};
use aniso_core::io::{read_grid, read_particles, ParticleSnapshot};
use aniso_core::meanfield::PhaseDensity;
use aniso_core::particle::EdgeKind;
use aniso_core::scenario::ScenarioKind;
use aniso_core::{FormatError, Group, ScenarioConfig};
use clap::{Subcommand, ValueEnum};

use crate::{parse_scenario, CliError};

#[derive(Subcommand, Debug)]
pub enum Metric {
    /// Lane count, boundaries, purity and mean transverse positions.
    Lanes {
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BIN_WIDTH)]
        bin_width: f64,
        /// Snapshot time within a long-format file; the last one by default.
        #[arg(long)]
        time: Option<f64>,
    },
    /// Fraction of pedestrians within `eps` of their desired velocity.
    Dvf {
        input: PathBuf,
        #[arg(long)]
        eps: f64,
        /// Config supplying the desired velocities.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Preset supplying the desired velocities when no config is given.
        #[arg(long, value_parser = parse_scenario, default_value = "channel")]
        scenario: ScenarioKind,
        #[arg(long)]
        time: Option<f64>,
    },
    /// Segregation index of a red and a blue grid snapshot.
    Segregation {
        red: PathBuf,
        blue: PathBuf,
        #[arg(long, value_enum, default_value_t = AxisArg::X2)]
        axis: AxisArg,
    },
    /// Total mass of a grid snapshot.
    Mass { input: PathBuf },
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum AxisArg {
    X1,
    X2,
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn snapshot(path: &Path, time: Option<f64>) -> Result<ParticleSnapshot, CliError> {
    let mut snaps = read_particles(open(path)?)?;
    let pick = match time {
        None => snaps.len().checked_sub(1),
        Some(t) => snaps.iter().position(|s| (s.t - t).abs() <= 1e-9 * t.abs().max(1.0)),
    };
    match pick {
        Some(k) => Ok(snaps.swap_remove(k)),
        None => Err(FormatError::BadParticles(format!("no snapshot at the requested time in {}", path.display())).into()),
    }
}

/// Edge kinds do not affect any of the reported quantities.
fn grid(path: &Path, group: Group) -> Result<PhaseDensity, CliError> {
    Ok(read_grid(open(path)?, EdgeKind::Periodic, EdgeKind::Periodic, group)?)
}

pub fn run(metric: Metric) -> Result<(), CliError> {
    match metric {
        Metric::Lanes { input, bin_width, time } => {
            if !(bin_width > 0.0) {
                return Err(CliError::Usage("--bin-width must be positive".into()));
            }
            let snap = snapshot(&input, time)?;
            let r = lane_metrics(&snap.agents, bin_width);
            println!("t = {}", snap.t);
            println!("lane_count = {}", r.lane_count);
            let bounds: Vec<String> = r.lane_boundaries.iter().map(f64::to_string).collect();
            println!("lane_boundaries = {}", bounds.join(", "));
            println!("purity = {}", r.purity);
            println!("mean_x2_red = {}", r.mean_x2_red);
            println!("mean_x2_blue = {}", r.mean_x2_blue);
        }
        Metric::Dvf {
            input,
            eps,
            config,
            scenario,
            time,
        } => {
            if !(eps > 0.0) {
                return Err(CliError::Usage("--eps must be positive".into()));
            }
            let cfg = match config {
                Some(p) => ScenarioConfig::load(&p)?,
                None => ScenarioConfig::preset(scenario),
            };
            let snap = snapshot(&input, time)?;
            println!("t = {}", snap.t);
            println!("dvf = {}", desired_velocity_fraction(&snap.agents, &cfg.model_params()?, eps));
        }
        Metric::Segregation { red, blue, axis } => {
            let (fr, fb) = (grid(&red, Group::Red)?, grid(&blue, Group::Blue)?);
            if !fr.grid.same_shape(&fb.grid) {
                return Err(FormatError::BadGrid("red and blue snapshots have different grids".into()).into());
            }
            let axis = match axis {
                AxisArg::X1 => Axis::X1,
                AxisArg::X2 => Axis::X2,
            };
            let s = segregation_index(&fr.marginals().rho, &fb.marginals().rho, &fr.grid.domain.rect(), axis)
                .map_err(|e| FormatError::BadGrid(e.to_string()))?;
            println!("segregation = {s}");
        }
        Metric::Mass { input } => {
            let f = grid(&input, Group::Red)?;
            println!("mass = {}", mass_audit(&f));
        }
    }
    Ok(())
}
