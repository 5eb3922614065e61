//! Simulation drivers. All file writes of a run go through [`RunOutput`],
//! which records every path in the manifest.

use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use aniso_core::diagnostics::{
    desired_velocity_fraction, lane_metrics, mass_audit, segregation_index, Axis, MetricRow, DEFAULT_BIN_WIDTH,
};
use aniso_core::io::{write_grid, write_matrix, write_metrics, write_particles, write_profile, RunManifest};
use aniso_core::meanfield::{MeanFieldSolver, MeanFieldState, PhaseDensity};
use aniso_core::particle::{ParticleSimState, StepOptions};
use aniso_core::scenario::{ScenarioKind, SnapshotLayout};
use aniso_core::{sample_initial_particles, AgentState, FormatError, ModelParams, ScenarioConfig};
use log::info;

use crate::{resolve_config, resolve_out_dir, CliError, RunArgs};

/// Tolerance of the desired-velocity fraction logged during particle runs.
const DVF_EPS: f64 = 0.05;

struct RunOutput {
    dir: PathBuf,
    manifest: RunManifest,
    started: Instant,
}

impl RunOutput {
    fn create(dir: PathBuf, command: &str, cfg: &ScenarioConfig) -> Result<Self, CliError> {
        fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        let mut manifest = RunManifest::default();
        manifest.push("command", command);
        manifest.push("version", env!("CARGO_PKG_VERSION"));
        manifest.push("scenario", cfg.scenario.name());
        manifest.push("seed", cfg.seed);
        manifest.push("start_unix_s", unix_seconds());
        let mut out = RunOutput {
            dir,
            manifest,
            started: Instant::now(),
        };
        out.write_file("config.txt", |w| {
            w.write_all(cfg.to_config_string().as_bytes()).map_err(FormatError::from)
        })?;
        Ok(out)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn write_file<F>(&mut self, name: &str, body: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<(), FormatError>,
    {
        let path = self.path(name);
        let file = File::create(&path).map_err(|e| io_err(&path, e))?;
        let mut w = BufWriter::new(file);
        body(&mut w)?;
        w.flush().map_err(|e| io_err(&path, e))?;
        self.manifest.push("file", name);
        Ok(())
    }

    /// Appends to `name`, listing it in the manifest on first use.
    fn append_file<F>(&mut self, name: &str, body: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut BufWriter<File>, bool) -> Result<(), FormatError>,
    {
        let path = self.path(name);
        let fresh = !self.manifest.get_all("file").any(|f| f == name);
        let file = OpenOptions::new()
            .create(true)
            .write(true)
            .append(!fresh)
            .truncate(fresh)
            .open(&path)
            .map_err(|e| io_err(&path, e))?;
        let mut w = BufWriter::new(file);
        body(&mut w, fresh)?;
        w.flush().map_err(|e| io_err(&path, e))?;
        if fresh {
            self.manifest.push("file", name);
        }
        Ok(())
    }

    /// Writes the manifest. On failure the abort step and message are
    /// recorded before the error is passed back.
    fn finish(mut self, result: Result<(), CliError>) -> Result<(), CliError> {
        match &result {
            Ok(()) => self.manifest.push("status", "ok"),
            Err(e) => {
                self.manifest.push("status", "aborted");
                match e {
                    CliError::Particle { step, .. } | CliError::MeanField { step, .. } => {
                        self.manifest.push("abort_step", step)
                    }
                    _ => {}
                }
                self.manifest.push("error", e);
            }
        }
        self.manifest.push("end_unix_s", unix_seconds());
        self.manifest
            .push("wall_time_s", format!("{:.3}", self.started.elapsed().as_secs_f64()));
        let path = self.path("manifest.txt");
        let file = File::create(&path).map_err(|e| io_err(&path, e))?;
        self.manifest.write(BufWriter::new(file))?;
        result
    }
}

fn io_err(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn unix_seconds() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn particle_metrics(t: f64, agents: &[AgentState], params: &ModelParams) -> Vec<MetricRow> {
    let lanes = lane_metrics(agents, DEFAULT_BIN_WIDTH);
    vec![
        MetricRow::new(t, "lane_count", lanes.lane_count as f64),
        MetricRow::new(t, "lane_purity", lanes.purity),
        MetricRow::new(t, "mean_x2_red", lanes.mean_x2_red),
        MetricRow::new(t, "mean_x2_blue", lanes.mean_x2_blue),
        MetricRow::new(t, "dvf", desired_velocity_fraction(agents, params, DVF_EPS)),
    ]
}

pub fn particle(args: &RunArgs, default: ScenarioKind) -> Result<(), CliError> {
    let cfg = resolve_config(args, default)?;
    let dir = resolve_out_dir(args, &cfg);
    if !args.sweep_r.is_empty() {
        return sweep_r(&cfg, &args.sweep_r, dir);
    }
    let mut out = RunOutput::create(dir, "particle", &cfg)?;
    let result = particle_run(&cfg, &mut out);
    out.finish(result)
}

fn particle_run(cfg: &ScenarioConfig, out: &mut RunOutput) -> Result<(), CliError> {
    let params = cfg.model_params()?;
    let opts = StepOptions {
        search: cfg.neighbor_search,
        parallel: cfg.parallel,
    };
    let mut state = ParticleSimState::new(sample_initial_particles(cfg), params, cfg.domain, cfg.dt_particle);
    let n_steps = cfg.steps(cfg.dt_particle);
    let every = cfg.output_every.max(1);
    info!("particle run: {} agents, {n_steps} steps", state.agents.len());

    let mut rows = Vec::new();
    let mut snapshot = |out: &mut RunOutput, s: &ParticleSimState| -> Result<(), CliError> {
        rows.extend(particle_metrics(s.t, &s.agents, &params));
        match cfg.snapshot_layout {
            SnapshotLayout::PerFile => out.write_file(&format!("particles_{:08}.csv", s.step_index), |w| {
                write_particles(w, s.t, &s.agents, true)
            }),
            SnapshotLayout::Long => out.append_file("particles.csv", |w, fresh| {
                write_particles(w, s.t, &s.agents, fresh)
            }),
        }
    };

    snapshot(out, &state)?;
    let mut run = Ok(());
    while state.step_index < n_steps {
        if let Err(source) = state.advance(&opts) {
            run = Err(CliError::Particle {
                step: state.step_index + 1,
                source,
            });
            break;
        }
        if state.step_index % every == 0 || state.step_index == n_steps {
            snapshot(out, &state)?;
        }
    }
    out.write_file("diagnostics.csv", |w| write_metrics(w, &rows, true))?;
    run?;

    out.manifest.push("final_t", state.t);
    out.manifest.push("steps", state.step_index);
    for row in particle_metrics(state.t, &state.agents, &params) {
        out.manifest.push(format!("final_{}", row.metric), row.value);
    }
    Ok(())
}

/// Final lane metrics for each repulsion range, one run per value.
fn sweep_r(cfg: &ScenarioConfig, ranges: &[f64], dir: PathBuf) -> Result<(), CliError> {
    let mut out = RunOutput::create(dir, "particle-sweep-r", cfg)?;
    let mut rows = Vec::new();
    let mut result = Ok(());
    for &r in ranges {
        let mut c = cfg.clone();
        c.morse.repulsion_range = r;
        if let Err(e) = c.validate() {
            result = Err(e.into());
            break;
        }
        let params = c.model_params()?;
        let opts = StepOptions {
            search: c.neighbor_search,
            parallel: c.parallel,
        };
        let mut state = ParticleSimState::new(sample_initial_particles(&c), params, c.domain, c.dt_particle);
        if let Err(source) = state.run(c.steps(c.dt_particle), &opts, |_| {}) {
            result = Err(CliError::Particle {
                step: state.step_index + 1,
                source,
            });
            break;
        }
        let lanes = lane_metrics(&state.agents, DEFAULT_BIN_WIDTH);
        info!("r = {r}: {} lanes, purity {:.3}", lanes.lane_count, lanes.purity);
        rows.push((r, lanes.lane_count, lanes.purity));
    }
    out.write_file("sweep_r.csv", |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["r", "lane_count", "purity"])?;
        for (r, n, p) in &rows {
            csv.write_record([r.to_string(), n.to_string(), p.to_string()])?;
        }
        csv.flush()?;
        Ok(())
    })?;
    out.finish(result)
}

fn grid_snapshot(out: &mut RunOutput, f: &PhaseDensity, step: u64) -> Result<(), CliError> {
    let tag = f.group.tag();
    let m = f.marginals();
    let x2: Vec<f64> = (0..f.grid.ny).map(|j| f.grid.x2_center(j)).collect();
    out.write_file(&format!("f_{tag}_{step:08}.bin"), |w| write_grid(w, f))?;
    out.write_file(&format!("rho_{tag}_{step:08}.csv"), |w| write_matrix(w, &m.rho))?;
    out.write_file(&format!("phi_{tag}_{step:08}.csv"), |w| write_matrix(w, &m.phi))?;
    out.write_file(&format!("rho2_{tag}_{step:08}.csv"), |w| write_profile(w, &x2, &m.rho2))
}

fn meanfield_metrics(state: &MeanFieldState) -> Vec<MetricRow> {
    let (mr, mb) = (state.red.marginals(), state.blue.marginals());
    let bounds = state.red.grid.domain.rect();
    let t = state.t;
    let mut rows = Vec::new();
    if let Ok(s) = segregation_index(&mr.rho, &mb.rho, &bounds, Axis::X2) {
        rows.push(MetricRow::new(t, "segregation_x2", s));
    }
    rows.push(MetricRow::new(t, "min_red", state.red.min_value()));
    rows.push(MetricRow::new(t, "min_blue", state.blue.min_value()));
    rows
}

pub fn meanfield(args: &RunArgs) -> Result<(), CliError> {
    if !args.sweep_r.is_empty() {
        return Err(CliError::Usage("--sweep-r applies to particle runs only".into()));
    }
    let cfg = resolve_config(args, ScenarioKind::Channel)?;
    let mut out = RunOutput::create(resolve_out_dir(args, &cfg), "meanfield", &cfg)?;
    let result = meanfield_run(&cfg, &mut out);
    out.finish(result)
}

fn meanfield_run(cfg: &ScenarioConfig, out: &mut RunOutput) -> Result<(), CliError> {
    let params = cfg.model_params()?;
    let grid = cfg.phase_grid()?;
    let (red, blue) = cfg.initial_densities()?;
    let wrap = |step: u64| move |source| CliError::MeanField { step, source };
    let solver = MeanFieldSolver::new(&grid, &params, cfg.dt_meanfield, cfg.stencil_radius, cfg.parallel)
        .map_err(wrap(0))?;
    let mut state = MeanFieldState::new(red, blue).map_err(wrap(0))?;
    let n_steps = cfg.steps(cfg.dt_meanfield);
    let every = cfg.output_every_meanfield.max(1);
    info!("mean-field run: {} cells per group, {n_steps} steps", grid.len());

    let mut mass = Vec::new();
    let mut rows = Vec::new();
    let mut record = |out: &mut RunOutput, s: &MeanFieldState, snap: bool| -> Result<(), CliError> {
        mass.push(MetricRow::new(s.t, "mass_red", mass_audit(&s.red)));
        mass.push(MetricRow::new(s.t, "mass_blue", mass_audit(&s.blue)));
        if snap {
            rows.extend(meanfield_metrics(s));
            grid_snapshot(out, &s.red, s.step_index)?;
            grid_snapshot(out, &s.blue, s.step_index)?;
        }
        Ok(())
    };

    record(out, &state, true)?;
    let mut run = Ok(());
    while state.step_index < n_steps {
        if let Err(source) = state.advance(&solver) {
            run = Err(wrap(state.step_index + 1)(source));
            break;
        }
        let snap = state.step_index % every == 0 || state.step_index == n_steps;
        record(out, &state, snap)?;
    }
    out.write_file("mass.csv", |w| write_metrics(w, &mass, true))?;
    out.write_file("diagnostics.csv", |w| write_metrics(w, &rows, true))?;
    run?;

    out.manifest.push("final_t", state.t);
    out.manifest.push("steps", state.step_index);
    out.manifest.push("final_mass_red", mass_audit(&state.red));
    out.manifest.push("final_mass_blue", mass_audit(&state.blue));
    for row in meanfield_metrics(&state) {
        out.manifest.push(format!("final_{}", row.metric), row.value);
    }
    Ok(())
}
