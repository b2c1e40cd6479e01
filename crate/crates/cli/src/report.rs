//! CSV report writers. Floats are written with 17 significant digits so the
//! values survive a text round trip.

use std::fs;
use std::path::{Path, PathBuf};

use netform::coupling::{PicardTrace, SweepRow};
use netform::diagnostics::{Classification, EnergyReport, ExcessReport, HolderEstimate, OscillationReport, Probe, ScanRecord};

use crate::error::{CliError, Result};

pub fn num(v: f64) -> String {
    // empty float sums come out as -0.0
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

struct Table {
    path: PathBuf,
    out: csv::Writer<fs::File>,
}

impl Table {
    fn create(path: &Path, header: &[&str]) -> Result<Self> {
        let out = csv::Writer::from_path(path).map_err(|source| CliError::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let mut t = Table {
            path: path.to_path_buf(),
            out,
        };
        t.row(header.iter().map(|s| s.to_string()))?;
        Ok(t)
    }

    fn row(&mut self, fields: impl IntoIterator<Item = String>) -> Result<()> {
        self.out.write_record(fields.into_iter().collect::<Vec<_>>()).map_err(|source| CliError::Csv {
            path: self.path.clone(),
            source,
        })
    }

    fn finish(mut self) -> Result<()> {
        self.out.flush().map_err(|e| CliError::io(&self.path, e))
    }
}

fn probe_fields(i: usize, p: &Probe) -> [String; 4] {
    [i.to_string(), num(p.y[0]), num(p.y[1]), num(p.tau)]
}

pub fn write_energy(path: &Path, report: Option<&EnergyReport>) -> Result<()> {
    let mut t = Table::create(
        path,
        &[
            "time", "kinetic", "diffusion", "activation", "metabolic", "pressure", "initial", "work", "lhs", "rhs", "residual",
            "second_lhs", "second_rhs", "second_residual",
        ],
    )?;
    for r in report.map_or(&[][..], |r| &r.rows) {
        let mut f: Vec<String> = [r.time, r.kinetic, r.diffusion, r.activation, r.metabolic, r.pressure, r.initial, r.work, r.lhs, r.rhs, r.residual]
            .into_iter()
            .map(num)
            .collect();
        f.push(opt(r.second.map(|s| s.lhs)));
        f.push(opt(r.second.map(|s| s.rhs)));
        f.push(opt(r.second.map(|s| s.residual)));
        t.row(f)?;
    }
    t.finish()
}

/// One row per (probe, radius), probe-major.
pub fn write_excess(path: &Path, reports: &[ExcessReport]) -> Result<()> {
    let mut t = Table::create(
        path,
        &["probe", "y0", "y1", "tau", "radius", "beta", "m_mean0", "m_mean1", "a_r", "e_r", "clipped"],
    )?;
    for (i, rep) in reports.iter().enumerate() {
        for r in &rep.rows {
            let mut f = probe_fields(i, &rep.probe).to_vec();
            f.extend([r.radius, rep.beta, r.m_mean[0], r.m_mean[1], r.a_r, r.e_r].map(num));
            f.push(r.clipped.to_string());
            t.row(f)?;
        }
    }
    t.finish()
}

/// One row per (probe, radius); the fitted exponent is repeated on each row
/// of its probe and left empty when the fit is undefined.
pub fn write_oscillation(path: &Path, reports: &[([f64; 2], OscillationReport)]) -> Result<()> {
    let mut t = Table::create(path, &["probe", "y0", "y1", "radius", "delta", "fit_beta", "fit_c"])?;
    for (i, (y, rep)) in reports.iter().enumerate() {
        for &(r, delta) in &rep.rows {
            t.row([
                i.to_string(),
                num(y[0]),
                num(y[1]),
                num(r),
                num(delta),
                opt(rep.fit.map(|f| f.beta)),
                opt(rep.fit.map(|f| f.c)),
            ])?;
        }
    }
    t.finish()
}

/// One row per iterate; `ratio` is `eta_k / eta_{k-1}` where defined.
pub fn write_picard(path: &Path, trace: Option<&PicardTrace>) -> Result<()> {
    let mut t = Table::create(path, &["k", "a_k", "b_k", "d_k", "eta_k", "ratio"])?;
    if let Some(trace) = trace {
        for it in &trace.iterates {
            t.row([it.k.to_string(), num(it.a), num(it.b), num(it.d), num(it.eta), opt(trace.ratio(it.k))])?;
        }
    }
    t.finish()
}

/// Rows sorted by scale, largest first.
pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut sorted = rows.to_vec();
    sorted.sort_by(|a, b| b.scale.total_cmp(&a.scale));
    let mut t = Table::create(path, &["scale", "smallness", "survival_time", "status", "status_time"])?;
    for r in &sorted {
        let time = match r.status {
            netform::coupling::RunStatus::Completed => None,
            netform::coupling::RunStatus::BlewUp { time } | netform::coupling::RunStatus::SolverFailed { time } => Some(time),
        };
        t.row([num(r.scale), num(r.smallness), num(r.survival_time), r.status.label().to_string(), opt(time)])?;
    }
    t.finish()
}

pub fn write_levels(path: &Path, levels: Option<(f64, &[f64])>) -> Result<()> {
    let mut t = Table::create(path, &["n", "k", "y_n"])?;
    if let Some((k, ys)) = levels {
        for (n, y) in ys.iter().enumerate() {
            t.row([n.to_string(), num(k), num(*y)])?;
        }
    }
    t.finish()
}

/// One row per (probe, radius) with the per-probe verdict repeated.
pub fn write_scan(path: &Path, radii: &[f64], records: &[ScanRecord]) -> Result<()> {
    let mut t = Table::create(
        path,
        &["probe", "y0", "y1", "tau", "radius", "con1", "con2", "min_excess", "max_mean", "class"],
    )?;
    for (i, rec) in records.iter().enumerate() {
        let class = match rec.class {
            Classification::RegularCandidate => "regular_candidate",
            Classification::SingularCandidate => "singular_candidate",
        };
        for (j, r) in radii.iter().enumerate() {
            let mut f = probe_fields(i, &rec.probe).to_vec();
            f.extend([*r, rec.con1[j], rec.con2[j], rec.min_excess, rec.max_mean].map(num));
            f.push(class.to_string());
            t.row(f)?;
        }
    }
    t.finish()
}

pub fn write_holder(path: &Path, est: Option<&HolderEstimate>) -> Result<()> {
    let mut t = Table::create(path, &["beta", "seminorm", "seminorm_coarse", "selected"])?;
    if let Some(est) = est {
        for &(b, all, coarse) in &est.table {
            t.row([num(b), num(all), num(coarse), (est.beta == Some(b)).to_string()])?;
        }
    }
    t.finish()
}

pub fn write_lp(path: &Path, rows: &[(f64, f64, f64)]) -> Result<()> {
    let mut t = Table::create(path, &["time", "exponent", "integral"])?;
    for &(time, q, v) in rows {
        t.row([num(time), num(q), num(v)])?;
    }
    t.finish()
}

/// Everything a command can report. Missing pieces produce header-only files.
#[derive(Debug, Clone, Default)]
pub struct Reports {
    pub energy: Option<EnergyReport>,
    pub excess: Vec<ExcessReport>,
    pub oscillation: Vec<([f64; 2], OscillationReport)>,
    pub picard: Option<PicardTrace>,
    pub sweep: Vec<SweepRow>,
    pub levels: Option<(f64, Vec<f64>)>,
    pub scan: Option<(Vec<f64>, Vec<ScanRecord>)>,
    pub holder: Option<HolderEstimate>,
    pub lp: Vec<(f64, f64, f64)>,
}

pub const REPORT_FILES: [&str; 9] = [
    "energy.csv",
    "excess.csv",
    "oscillation.csv",
    "picard_trace.csv",
    "sweep.csv",
    "levels.csv",
    "scan.csv",
    "holder.csv",
    "lp.csv",
];

/// Write all report files into `dir`.
pub fn emit_reports(dir: &Path, r: &Reports) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    write_energy(&dir.join("energy.csv"), r.energy.as_ref())?;
    write_excess(&dir.join("excess.csv"), &r.excess)?;
    write_oscillation(&dir.join("oscillation.csv"), &r.oscillation)?;
    write_picard(&dir.join("picard_trace.csv"), r.picard.as_ref())?;
    write_sweep(&dir.join("sweep.csv"), &r.sweep)?;
    write_levels(&dir.join("levels.csv"), r.levels.as_ref().map(|(k, y)| (*k, &y[..])))?;
    let (radii, scan) = r.scan.as_ref().map_or((&[][..], &[][..]), |(a, b)| (&a[..], &b[..]));
    write_scan(&dir.join("scan.csv"), radii, scan)?;
    write_holder(&dir.join("holder.csv"), r.holder.as_ref())?;
    write_lp(&dir.join("lp.csv"), &r.lp)
}
