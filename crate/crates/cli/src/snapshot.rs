//! Binary snapshot files.
//!
//! Layout, all little-endian:
//!
//! | bytes        | content                         |
//! |--------------|---------------------------------|
//! | 4            | magic `NWF1`                    |
//! | 4            | version (`u32`, currently 1)    |
//! | 4            | dimension `N` (`u32`)           |
//! | 4 N          | nodes per axis (`u32`)          |
//! | 8 N          | extent per axis (`f64`)         |
//! | 8            | time (`f64`)                    |
//! | 8 n          | pressure, row-major             |
//! | 8 n N        | conductance components in order |

use std::fs;
use std::path::{Path, PathBuf};

use netform::coupling::{RunStatus, Snapshot, Trajectory};
use netform::{Grid, ScalarField, VectorField};

use crate::error::{CliError, Result};

pub const MAGIC: &[u8; 4] = b"NWF1";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotFile {
    pub grid: Grid,
    pub time: f64,
    pub p: ScalarField,
    pub m: VectorField,
}

impl SnapshotFile {
    pub fn new(time: f64, m: VectorField, p: ScalarField) -> Result<Self> {
        if m.grid() != p.grid() {
            return Err(CliError::Solver(netform::Error::ShapeMismatch("m and p live on different grids".into())));
        }
        Ok(SnapshotFile {
            grid: *p.grid(),
            time,
            p,
            m,
        })
    }

    pub fn into_snapshot(self) -> Snapshot {
        Snapshot {
            time: self.time,
            m: self.m,
            p: self.p,
        }
    }
}

pub fn encode(snap: &SnapshotFile) -> Vec<u8> {
    let g = snap.grid;
    let dim = g.dim();
    let mut out = Vec::with_capacity(12 + 12 * dim + 8 + 8 * g.node_count() * (dim + 1));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    for &n in g.n() {
        out.extend_from_slice(&(n as u32).to_le_bytes());
    }
    for &l in g.extent() {
        out.extend_from_slice(&l.to_le_bytes());
    }
    out.extend_from_slice(&snap.time.to_le_bytes());
    for field in std::iter::once(&snap.p).chain(snap.m.components()) {
        for v in field.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take<const K: usize>(&mut self) -> Option<[u8; K]> {
        let chunk = self.bytes.get(self.pos..self.pos + K)?;
        self.pos += K;
        chunk.try_into().ok()
    }

    fn u32(&mut self) -> Option<u32> {
        self.take::<4>().map(u32::from_le_bytes)
    }

    fn f64(&mut self) -> Option<f64> {
        self.take::<8>().map(f64::from_le_bytes)
    }
}

/// Decode a snapshot; `path` only labels errors.
pub fn decode(bytes: &[u8], path: &Path) -> Result<SnapshotFile> {
    let fail = |reason: String| CliError::Format {
        path: path.to_path_buf(),
        reason,
    };
    let short = || fail(format!("truncated header ({} bytes)", bytes.len()));
    let mut r = Reader { bytes, pos: 0 };
    let magic = r.take::<4>().ok_or_else(short)?;
    if &magic != MAGIC {
        return Err(fail(format!("bad magic {magic:?}, expected \"NWF1\"")));
    }
    let version = r.u32().ok_or_else(short)?;
    if version != VERSION {
        return Err(fail(format!("unsupported version {version}, expected {VERSION}")));
    }
    let dim = r.u32().ok_or_else(short)? as usize;
    if !(1..=2).contains(&dim) {
        return Err(fail(format!("dimension must be 1 or 2, got {dim}")));
    }
    let mut n = Vec::with_capacity(dim);
    for _ in 0..dim {
        n.push(r.u32().ok_or_else(short)? as usize);
    }
    let mut extent = Vec::with_capacity(dim);
    for _ in 0..dim {
        extent.push(r.f64().ok_or_else(short)?);
    }
    let time = r.f64().ok_or_else(short)?;
    let grid = Grid::new(dim, &n, &extent).map_err(|e| fail(e.to_string()))?;

    let count = grid.node_count();
    let expected = r.pos + 8 * count * (dim + 1);
    if bytes.len() != expected {
        return Err(fail(format!("payload is {} bytes, header implies {expected}", bytes.len())));
    }
    let mut field = || {
        let values = (0..count).map(|_| r.f64().expect("length checked")).collect();
        ScalarField::from_values(grid, values).expect("length checked")
    };
    let p = field();
    let comps = (0..dim).map(|_| field()).collect();
    let m = VectorField::from_components(comps).expect("same grid");
    Ok(SnapshotFile { grid, time, p, m })
}

pub fn write_snapshot(path: &Path, m: &VectorField, p: &ScalarField, t: f64) -> Result<()> {
    let snap = SnapshotFile::new(t, m.clone(), p.clone())?;
    fs::write(path, encode(&snap)).map_err(|e| CliError::io(path, e))
}

pub fn read_snapshot(path: &Path) -> Result<SnapshotFile> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode(&bytes, path)
}

const STATUS_FILE: &str = "status.txt";

fn snapshot_name(i: usize) -> String {
    format!("snap_{i:06}.nwf")
}

/// Write every snapshot of `traj` into `dir` together with a one-line
/// `status.txt`.
pub fn write_trajectory(dir: &Path, traj: &Trajectory) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut paths = Vec::with_capacity(traj.snapshots().len());
    for (i, s) in traj.snapshots().iter().enumerate() {
        let path = dir.join(snapshot_name(i));
        write_snapshot(&path, &s.m, &s.p, s.time)?;
        paths.push(path);
    }
    let status = match traj.status() {
        RunStatus::Completed => "completed".to_string(),
        RunStatus::BlewUp { time } => format!("blew_up {time:.16e}"),
        RunStatus::SolverFailed { time } => format!("solver_failed {time:.16e}"),
    };
    let path = dir.join(STATUS_FILE);
    fs::write(&path, status + "\n").map_err(|e| CliError::io(path, e))?;
    Ok(paths)
}

fn parse_status(text: &str, path: &Path) -> Result<RunStatus> {
    let fail = || CliError::Format {
        path: path.to_path_buf(),
        reason: format!("unrecognised status `{}`", text.trim()),
    };
    let mut parts = text.split_whitespace();
    let label = parts.next().ok_or_else(fail)?;
    let time = parts.next().map(|t| t.parse::<f64>().map_err(|_| fail())).transpose()?;
    match (label, time) {
        ("completed", None) => Ok(RunStatus::Completed),
        ("blew_up", Some(time)) => Ok(RunStatus::BlewUp { time }),
        ("solver_failed", Some(time)) => Ok(RunStatus::SolverFailed { time }),
        _ => Err(fail()),
    }
}

/// Load every `*.nwf` file of `dir` in name order as a trajectory.
pub fn read_trajectory(dir: &Path) -> Result<Trajectory> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "nwf") {
            paths.push(path);
        }
    }
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Format {
            path: dir.to_path_buf(),
            reason: "no .nwf snapshots found".into(),
        });
    }
    let snaps = paths
        .iter()
        .map(|p| read_snapshot(p).map(SnapshotFile::into_snapshot))
        .collect::<Result<Vec<_>>>()?;
    let status_path = dir.join(STATUS_FILE);
    let status = match fs::read_to_string(&status_path) {
        Ok(text) => parse_status(&text, &status_path)?,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => RunStatus::Completed,
        Err(e) => return Err(CliError::io(status_path, e)),
    };
    Trajectory::new(snaps, status).map_err(|e| CliError::Format {
        path: dir.to_path_buf(),
        reason: e.to_string(),
    })
}
