//! Snapshot, marginal, diagnostics and manifest formats over generic readers
//! and writers. Opening files is left to the caller.
//!
//! * particles: CSV `t,id,group,x1,x2,v1,v2`, group tagged `r`/`b`/`o`
//! * grids: magic `ANISOF01`, `nx ny nv1 nv2` as u32 LE, the eight box bounds
//!   (x1, x2, v1, v2 ranges) as f64 LE, then the values with x1 slowest and
//!   v2 fastest
//! * matrices: CSV rows for the second index from high to low
//! * diagnostics: CSV `t,metric,value`
//! * manifests: `key = value` lines

use std::io::{Read, Write};

use ndarray::{Array1, Array2};

use crate::agent::{AgentState, Group};
use crate::diagnostics::MetricRow;
use crate::error::FormatError;
use crate::math::{Rect, Vec2};
use crate::meanfield::{PhaseDensity, PhaseGrid};
use crate::particle::{DomainSpec, EdgeKind};

pub const GRID_MAGIC: &[u8; 8] = b"ANISOF01";

const PARTICLE_HEADER: [&str; 7] = ["t", "id", "group", "x1", "x2", "v1", "v2"];

/// Writes one snapshot. The header is emitted only when `header` is set, so
/// snapshots can be appended to a long-format file.
pub fn write_particles<W: Write>(w: W, t: f64, agents: &[AgentState], header: bool) -> Result<(), FormatError> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    if header {
        out.write_record(PARTICLE_HEADER)?;
    }
    for (id, a) in agents.iter().enumerate() {
        out.write_record(&[
            t.to_string(),
            id.to_string(),
            a.group.tag().to_string(),
            a.x.c1.to_string(),
            a.x.c2.to_string(),
            a.v.c1.to_string(),
            a.v.c2.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// All snapshots in a particle CSV, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSnapshot {
    pub t: f64,
    pub agents: Vec<AgentState>,
}

pub fn read_particles<R: Read>(r: R) -> Result<Vec<ParticleSnapshot>, FormatError> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header = rd.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != PARTICLE_HEADER {
        return Err(FormatError::BadParticles(format!("unexpected header {header:?}")));
    }
    let mut snaps: Vec<ParticleSnapshot> = Vec::new();
    for (n, rec) in rd.records().enumerate() {
        let rec = rec?;
        let field = |k: usize| -> Result<f64, FormatError> {
            rec.get(k)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| FormatError::BadParticles(format!("row {}: bad column {}", n + 2, PARTICLE_HEADER[k])))
        };
        let t = field(0)?;
        let group: Group = rec
            .get(2)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| FormatError::BadParticles(format!("row {}: bad group", n + 2)))?;
        let agent = AgentState::new(Vec2::new(field(3)?, field(4)?), Vec2::new(field(5)?, field(6)?), group);
        match snaps.last_mut() {
            Some(s) if s.t == t => s.agents.push(agent),
            _ => snaps.push(ParticleSnapshot { t, agents: vec![agent] }),
        }
    }
    Ok(snaps)
}

pub fn write_grid<W: Write>(mut w: W, f: &PhaseDensity) -> Result<(), FormatError> {
    let g = &f.grid;
    let mut buf = Vec::with_capacity(8 + 16 + 64 + 8 * f.values.len());
    buf.extend_from_slice(GRID_MAGIC);
    for n in [g.nx, g.ny, g.nv1, g.nv2] {
        let n = u32::try_from(n).map_err(|_| FormatError::BadGrid(format!("dimension {n} exceeds u32")))?;
        buf.extend_from_slice(&n.to_le_bytes());
    }
    let d = g.domain;
    let v = g.velocity;
    for b in [d.x1_min, d.x1_max, d.x2_min, d.x2_max, v.min1, v.max1, v.min2, v.max2] {
        buf.extend_from_slice(&b.to_le_bytes());
    }
    for x in &f.values {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Reads a grid snapshot. The format does not record edge kinds, so the
/// caller supplies them.
pub fn read_grid<R: Read>(
    mut r: R,
    x1_kind: EdgeKind,
    x2_kind: EdgeKind,
    group: Group,
) -> Result<PhaseDensity, FormatError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() < 88 || &bytes[..8] != GRID_MAGIC {
        return Err(FormatError::BadGrid("missing ANISOF01 header".into()));
    }
    let u = |k: usize| u32::from_le_bytes(bytes[8 + 4 * k..12 + 4 * k].try_into().expect("4 bytes")) as usize;
    let f = |off: usize| f64::from_le_bytes(bytes[off..off + 8].try_into().expect("8 bytes"));
    let (nx, ny, nv1, nv2) = (u(0), u(1), u(2), u(3));
    let b: Vec<f64> = (0..8).map(|k| f(24 + 8 * k)).collect();
    let count = nx
        .checked_mul(ny)
        .and_then(|s| s.checked_mul(nv1))
        .and_then(|s| s.checked_mul(nv2))
        .ok_or_else(|| FormatError::BadGrid("dimensions overflow".into()))?;
    if bytes.len() != 88 + 8 * count {
        return Err(FormatError::BadGrid(format!(
            "expected {} value bytes, found {}",
            8 * count,
            bytes.len() - 88
        )));
    }
    let domain = DomainSpec::new((b[0], b[1]), (b[2], b[3]), x1_kind, x2_kind);
    let grid = PhaseGrid::new(domain, Rect::new(b[4], b[5], b[6], b[7]), nx, ny, nv1, nv2)
        .map_err(|e| FormatError::BadGrid(e.to_string()))?;
    let values = (0..count).map(|k| f(88 + 8 * k)).collect();
    Ok(PhaseDensity { grid, group, values })
}

/// Writes `m[[a, b]]` as CSV with one row per `b`, highest `b` first, and
/// `a` increasing along each row.
pub fn write_matrix<W: Write>(w: W, m: &Array2<f64>) -> Result<(), FormatError> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    let (na, nb) = m.dim();
    for b in (0..nb).rev() {
        out.write_record((0..na).map(|a| m[[a, b]].to_string()))?;
    }
    out.flush()?;
    Ok(())
}

/// Inverse of [`write_matrix`].
pub fn read_matrix<R: Read>(r: R) -> Result<Array2<f64>, FormatError> {
    let mut rd = csv::ReaderBuilder::new().has_headers(false).from_reader(r);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| FormatError::BadGrid(format!("matrix entry: {e}")))?;
        rows.push(row);
    }
    let nb = rows.len();
    let na = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != na) {
        return Err(FormatError::BadGrid("ragged matrix".into()));
    }
    Ok(Array2::from_shape_fn((na, nb), |(a, b)| rows[nb - 1 - b][a]))
}

/// Writes a profile as CSV `x,value`.
pub fn write_profile<W: Write>(w: W, coords: &[f64], values: &Array1<f64>) -> Result<(), FormatError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["x", "value"])?;
    for (x, v) in coords.iter().zip(values.iter()) {
        out.write_record([x.to_string(), v.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_metrics<W: Write>(w: W, rows: &[MetricRow], header: bool) -> Result<(), FormatError> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    if header {
        out.write_record(["t", "metric", "value"])?;
    }
    for r in rows {
        out.write_record([r.t.to_string(), r.metric.clone(), r.value.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_metrics<R: Read>(r: R) -> Result<Vec<MetricRow>, FormatError> {
    let mut rd = csv::Reader::from_reader(r);
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let num = |k: usize| {
            rec.get(k)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| FormatError::BadParticles("bad metric row".into()))
        };
        rows.push(MetricRow {
            t: num(0)?,
            metric: rec.get(1).unwrap_or_default().to_string(),
            value: num(2)?,
        });
    }
    Ok(rows)
}

/// Ordered flat key-value record of a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunManifest {
    pub entries: Vec<(String, String)>,
}

impl RunManifest {
    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn get_all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.entries.iter().filter(move |(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<(), FormatError> {
        for (k, v) in &self.entries {
            writeln!(w, "{k} = {}", v.replace('\n', " "))?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> RunManifest {
        let entries = text
            .lines()
            .filter_map(|l| l.split_once(" = "))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        RunManifest { entries }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meanfield::init_uniform;

    #[test]
    fn particle_round_trip() {
        let agents = vec![
            AgentState::new(Vec2::new(0.1, -2.5), Vec2::new(0.2, 1e-17), Group::Red),
            AgentState::new(Vec2::new(44.999999999, 3.0), Vec2::new(-0.3, 0.0), Group::Blue),
            AgentState::new(Vec2::new(1.0, 1.0), Vec2::new(0.2, 0.0), Group::Obstacle),
        ];
        let mut buf = Vec::new();
        write_particles(&mut buf, 0.0, &agents, true).unwrap();
        write_particles(&mut buf, 1.5, &agents[..2], false).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,id,group,x1,x2,v1,v2\n0,0,r,0.1,-2.5,"));
        let snaps = read_particles(buf.as_slice()).unwrap();
        assert_eq!(snaps.len(), 2);
        assert_eq!(snaps[0].agents, agents);
        assert_eq!(snaps[1].t, 1.5);
        assert_eq!(snaps[1].agents, agents[..2]);
    }

    #[test]
    fn bad_particle_files_are_rejected() {
        assert!(read_particles("a,b\n1,2\n".as_bytes()).is_err());
        assert!(read_particles("t,id,group,x1,x2,v1,v2\n0,0,q,0,0,0,0\n".as_bytes()).is_err());
    }

    #[test]
    fn grid_round_trip_and_layout() {
        let d = DomainSpec::new((-45.0, 45.0), (-15.0, 15.0), EdgeKind::Periodic, EdgeKind::ReflectiveWall);
        let g = PhaseGrid::new(d, Rect::new(-0.5, 0.5, -0.5, 0.5), 5, 4, 2, 3).unwrap();
        let mut f = init_uniform(&g, &d.rect(), &Rect::new(-0.5, 0.5, -0.5, 0.5), 0.5, Group::Red).unwrap();
        f.values[g.index(1, 2, 1, 0)] = 42.0;
        let mut buf = Vec::new();
        write_grid(&mut buf, &f).unwrap();
        assert_eq!(&buf[..8], b"ANISOF01");
        assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 5);
        assert_eq!(u32::from_le_bytes(buf[20..24].try_into().unwrap()), 3);
        assert_eq!(f64::from_le_bytes(buf[24..32].try_into().unwrap()), -45.0);
        let k = ((1 * 4 + 2) * 2 + 1) * 3;
        assert_eq!(f64::from_le_bytes(buf[88 + 8 * k..96 + 8 * k].try_into().unwrap()), 42.0);
        let back = read_grid(buf.as_slice(), EdgeKind::Periodic, EdgeKind::ReflectiveWall, Group::Red).unwrap();
        assert_eq!(back, f);
        assert!(read_grid(&buf[..100], EdgeKind::Periodic, EdgeKind::Periodic, Group::Red).is_err());
        assert!(read_grid(&b"NOTAGRID"[..], EdgeKind::Periodic, EdgeKind::Periodic, Group::Red).is_err());
    }

    #[test]
    fn matrix_rows_descend() {
        let m = Array2::from_shape_fn((3, 2), |(a, b)| (10 * a + b) as f64);
        let mut buf = Vec::new();
        write_matrix(&mut buf, &m).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "1,11,21\n0,10,20\n");
        assert_eq!(read_matrix(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn metrics_and_manifest_round_trip() {
        let rows = vec![MetricRow::new(0.0, "mass_red", 0.5), MetricRow::new(1.0, "lanes", 2.0)];
        let mut buf = Vec::new();
        write_metrics(&mut buf, &rows, true).unwrap();
        assert!(buf.starts_with(b"t,metric,value\n"));
        assert_eq!(read_metrics(buf.as_slice()).unwrap(), rows);

        let mut m = RunManifest::default();
        m.push("seed", 7);
        m.push("file", "a.csv");
        m.push("file", "b.bin");
        let mut out = Vec::new();
        m.write(&mut out).unwrap();
        let back = RunManifest::parse(&String::from_utf8(out).unwrap());
        assert_eq!(back, m);
        assert_eq!(back.get_all("file").count(), 2);
    }
}
