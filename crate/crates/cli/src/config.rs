//! Experiment configuration in TOML.
//!
//! ```toml
//! mode = "run"
//! seed = 7
//!
//! [grid]
//! dim = 2
//! n = 33            # or [nx, ny]
//! extent = 1.0      # or [lx, ly]
//!
//! [params]
//! D = 1.0
//! E = 1.0
//! gamma = 1.0
//! source = "gaussian(0.5, 0.5, 0.1, 2.0)"
//! m0 = "bump_vector(0.3, 0.0)"
//! scale = 1.0
//!
//! [stepping]
//! dt = 0.001
//! t_end = 1.0
//! ```
//!
//! Every key is optional except `grid.dim` and `grid.n`. Unknown keys are
//! rejected.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use netform::coupling::{PicardConfig, RunConfig, SweepConfig, DEFAULT_BLOWUP_THRESHOLD};
use netform::diagnostics::{HolderConfig, Probe, ScanThresholds, DEFAULT_BETA};
use netform::parabolic::{PhysParams, StepConfig};
use netform::{Grid, ScalarField, VectorField};
use serde::Deserialize;

use crate::error::{CliError, Result};
use crate::snapshot::read_snapshot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Run,
    Picard,
    Sweep,
}

/// A field given by a preset or loaded from a snapshot file.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSpec {
    Zero,
    Constant(Vec<f64>),
    /// `amplitude * exp(-|x - center|^2 / (2 width^2))`
    Gaussian { center: Vec<f64>, width: f64, amplitude: f64 },
    /// `a_i * prod_j sin(pi x_j / L_j)` in component `i`.
    BumpVector(Vec<f64>),
    File(PathBuf),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Copy> OneOrMany<T> {
    fn expand(&self, dim: usize) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![*v; dim],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    mode: Option<Mode>,
    seed: Option<u64>,
    grid: Option<RawGrid>,
    #[serde(default)]
    params: RawParams,
    #[serde(default)]
    stepping: RawStepping,
    #[serde(default)]
    picard: RawPicard,
    #[serde(default)]
    sweep: RawSweep,
    #[serde(default)]
    diagnostics: RawDiagnostics,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    dim: Option<usize>,
    n: Option<OneOrMany<usize>>,
    extent: Option<OneOrMany<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    #[serde(rename = "D")]
    d: Option<f64>,
    #[serde(rename = "E")]
    e: Option<f64>,
    gamma: Option<f64>,
    source: Option<String>,
    m0: Option<String>,
    scale: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStepping {
    dt: Option<f64>,
    t_end: Option<f64>,
    store_every: Option<usize>,
    cg_tol: Option<f64>,
    eps_reg: Option<f64>,
    blowup_threshold: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPicard {
    k_max: Option<usize>,
    tol: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    scales: Option<Vec<f64>>,
    t_target: Option<f64>,
    bisect_steps: Option<usize>,
    workers: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDiagnostics {
    probes: Option<Vec<Vec<f64>>>,
    radii: Option<Vec<f64>>,
    beta: Option<f64>,
    excess_threshold: Option<f64>,
    growth: Option<f64>,
    checkpoints: Option<Vec<f64>>,
    second_identity: Option<bool>,
    level_k: Option<f64>,
    level_steps: Option<usize>,
    lp_exponents: Option<Vec<f64>>,
    holder_exponents: Option<Vec<f64>>,
    holder_pairs: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Physics {
    pub d: f64,
    pub e: f64,
    pub gamma: f64,
    pub source: DataSpec,
    pub m0: DataSpec,
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stepping {
    pub dt: f64,
    pub t_end: f64,
    pub store_every: usize,
    pub cg_tol: f64,
    pub eps_reg: f64,
    pub blowup_threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardSection {
    pub k_max: usize,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSection {
    /// Sorted descending.
    pub scales: Vec<f64>,
    pub t_target: f64,
    pub bisect_steps: usize,
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub probes: Vec<Probe>,
    pub radii: Vec<f64>,
    pub beta: f64,
    pub excess_threshold: Option<f64>,
    pub growth: f64,
    pub checkpoints: Vec<f64>,
    pub second_identity: bool,
    /// Level `k` for the level-set measures; `None` means `sup |m|^2`.
    pub level_k: Option<f64>,
    pub level_steps: usize,
    pub lp_exponents: Vec<f64>,
    pub holder_exponents: Vec<f64>,
    pub holder_pairs: usize,
}

/// A fully validated experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub seed: u64,
    pub grid: Grid,
    pub params: Physics,
    pub stepping: Stepping,
    pub picard: PicardSection,
    pub sweep: SweepSection,
    pub diagnostics: Diagnostics,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::validation(key, format!("must be positive and finite, got {v}")))
    }
}

fn numbers(key: &str, args: &str) -> Result<Vec<f64>> {
    if args.trim().is_empty() {
        return Ok(Vec::new());
    }
    args.split(',')
        .map(|a| {
            let a = a.trim();
            a.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::validation(key, format!("`{a}` is not a finite number")))
        })
        .collect()
}

fn parse_preset(key: &str, text: &str, dim: usize, vector: bool) -> Result<DataSpec> {
    let text = text.trim();
    if let Some(path) = text.strip_prefix("file:") {
        return Ok(DataSpec::File(PathBuf::from(path.trim())));
    }
    if text == "zero" {
        return Ok(DataSpec::Zero);
    }
    let (name, args) = text
        .strip_suffix(')')
        .and_then(|t| t.split_once('('))
        .ok_or_else(|| CliError::validation(key, format!("unrecognised preset `{text}`")))?;
    let args = numbers(key, args)?;
    let spec = match name.trim() {
        "zero" if args.is_empty() => DataSpec::Zero,
        "constant" if args.len() == 1 || (vector && args.len() == dim) => DataSpec::Constant(args),
        "gaussian" if !vector && args.len() == dim + 2 => {
            let width = positive(key, args[dim])?;
            DataSpec::Gaussian {
                center: args[..dim].to_vec(),
                width,
                amplitude: args[dim + 1],
            }
        }
        "bump_vector" if vector && args.len() == dim => DataSpec::BumpVector(args),
        "constant" => return Err(CliError::validation(key, "constant takes one value (or one per component)")),
        "gaussian" if vector => return Err(CliError::validation(key, "gaussian is a scalar preset")),
        "gaussian" => {
            return Err(CliError::validation(
                key,
                format!("gaussian takes {dim} centre coordinates, a width and an amplitude"),
            ))
        }
        "bump_vector" if !vector => return Err(CliError::validation(key, "bump_vector is a vector preset")),
        "bump_vector" => return Err(CliError::validation(key, format!("bump_vector takes {dim} amplitudes"))),
        other => return Err(CliError::validation(key, format!("unknown preset `{other}`"))),
    };
    Ok(spec)
}

/// Parse and validate a configuration, filling defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Parse {
        line: e.span().map_or(1, |s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;

    let rg = raw.grid.ok_or_else(|| CliError::validation("grid", "section is required"))?;
    let dim = rg.dim.ok_or_else(|| CliError::validation("grid.dim", "is required"))?;
    if !(1..=2).contains(&dim) {
        return Err(CliError::validation("grid.dim", format!("must be 1 or 2, got {dim}")));
    }
    let n = rg.n.ok_or_else(|| CliError::validation("grid.n", "is required"))?.expand(dim);
    if n.len() != dim {
        return Err(CliError::validation("grid.n", format!("expected {dim} values, got {}", n.len())));
    }
    let extent = rg.extent.map_or(vec![1.0; dim], |e| e.expand(dim));
    if extent.len() != dim {
        return Err(CliError::validation("grid.extent", format!("expected {dim} values, got {}", extent.len())));
    }
    let grid = Grid::new(dim, &n, &extent).map_err(|e| CliError::validation("grid", e.to_string()))?;

    let p = raw.params;
    let gamma = p.gamma.unwrap_or(1.0);
    if !(gamma > 0.5 && gamma.is_finite()) {
        return Err(CliError::validation(
            "params.gamma",
            format!("the metabolic exponent must satisfy gamma > 1/2, got {gamma}"),
        ));
    }
    let scale = p.scale.unwrap_or(1.0);
    if !(scale >= 0.0 && scale.is_finite()) {
        return Err(CliError::validation("params.scale", format!("must be non-negative, got {scale}")));
    }
    let params = Physics {
        d: positive("params.D", p.d.unwrap_or(1.0))?,
        e: positive("params.E", p.e.unwrap_or(1.0))?,
        gamma,
        source: parse_preset("params.source", p.source.as_deref().unwrap_or("zero"), dim, false)?,
        m0: parse_preset("params.m0", p.m0.as_deref().unwrap_or("zero"), dim, true)?,
        scale,
    };

    let s = raw.stepping;
    let store_every = s.store_every.unwrap_or(1);
    if store_every == 0 {
        return Err(CliError::validation("stepping.store_every", "must be at least 1"));
    }
    let cg_tol = positive("stepping.cg_tol", s.cg_tol.unwrap_or(1e-10))?;
    if cg_tol >= 1.0 {
        return Err(CliError::validation("stepping.cg_tol", format!("must be below 1, got {cg_tol}")));
    }
    let stepping = Stepping {
        dt: positive("stepping.dt", s.dt.unwrap_or(1e-3))?,
        t_end: positive("stepping.t_end", s.t_end.unwrap_or(1.0))?,
        store_every,
        cg_tol,
        eps_reg: positive("stepping.eps_reg", s.eps_reg.unwrap_or(1e-12))?,
        blowup_threshold: positive("stepping.blowup_threshold", s.blowup_threshold.unwrap_or(DEFAULT_BLOWUP_THRESHOLD))?,
    };

    let k_max = raw.picard.k_max.unwrap_or(10);
    if k_max == 0 {
        return Err(CliError::validation("picard.k_max", "must be at least 1"));
    }
    let picard = PicardSection {
        k_max,
        tol: positive("picard.tol", raw.picard.tol.unwrap_or(1e-12))?,
    };

    let mut scales = raw.sweep.scales.unwrap_or_else(|| (0..6).map(|k| 0.5f64.powi(k)).collect());
    if scales.is_empty() {
        return Err(CliError::validation("sweep.scales", "must not be empty"));
    }
    if let Some(bad) = scales.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
        return Err(CliError::validation("sweep.scales", format!("must be non-negative, got {bad}")));
    }
    scales.sort_by(|a, b| b.total_cmp(a));
    if raw.sweep.workers == Some(0) {
        return Err(CliError::validation("sweep.workers", "must be at least 1"));
    }
    let sweep = SweepSection {
        scales,
        t_target: positive("sweep.t_target", raw.sweep.t_target.unwrap_or(stepping.t_end))?,
        bisect_steps: raw.sweep.bisect_steps.unwrap_or(0),
        workers: raw.sweep.workers,
    };

    let diagnostics = diagnostics_section(raw.diagnostics, dim)?;

    Ok(ExperimentConfig {
        mode: raw.mode.unwrap_or(Mode::Run),
        seed: raw.seed.unwrap_or(0),
        grid,
        params,
        stepping,
        picard,
        sweep,
        diagnostics,
    })
}

fn diagnostics_section(d: RawDiagnostics, dim: usize) -> Result<Diagnostics> {
    let probes = d
        .probes
        .unwrap_or_default()
        .iter()
        .map(|v| {
            if v.len() != dim + 1 || v.iter().any(|x| !x.is_finite()) {
                return Err(CliError::validation(
                    "diagnostics.probes",
                    format!("each probe is {dim} coordinates followed by a time, got {v:?}"),
                ));
            }
            let mut y = [0.0; 2];
            y[..dim].copy_from_slice(&v[..dim]);
            Ok(Probe::new(y, v[dim]))
        })
        .collect::<Result<Vec<_>>>()?;
    let radii = d.radii.unwrap_or_default();
    for r in &radii {
        positive("diagnostics.radii", *r)?;
    }
    let beta = d.beta.unwrap_or(DEFAULT_BETA);
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(CliError::validation("diagnostics.beta", format!("must lie in (0, 1], got {beta}")));
    }
    let growth = d.growth.unwrap_or(2.0);
    if !(growth > 1.0 && growth.is_finite()) {
        return Err(CliError::validation("diagnostics.growth", format!("must exceed 1, got {growth}")));
    }
    let checkpoints = d.checkpoints.unwrap_or_default();
    if let Some(bad) = checkpoints.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
        return Err(CliError::validation("diagnostics.checkpoints", format!("must be non-negative, got {bad}")));
    }
    let lp_exponents = d.lp_exponents.unwrap_or_else(|| vec![1.0, 2.0, 4.0]);
    if let Some(bad) = lp_exponents.iter().find(|q| !(**q >= 1.0 && q.is_finite())) {
        return Err(CliError::validation("diagnostics.lp_exponents", format!("must be at least 1, got {bad}")));
    }
    let holder_exponents = d.holder_exponents.unwrap_or_else(|| (1..=10).map(|k| k as f64 * 0.1).collect());
    for b in &holder_exponents {
        positive("diagnostics.holder_exponents", *b)?;
    }
    Ok(Diagnostics {
        probes,
        radii,
        beta,
        excess_threshold: d.excess_threshold.map(|v| positive("diagnostics.excess_threshold", v)).transpose()?,
        growth,
        checkpoints,
        second_identity: d.second_identity.unwrap_or(false),
        level_k: d.level_k.map(|v| positive("diagnostics.level_k", v)).transpose()?,
        level_steps: d.level_steps.unwrap_or(30),
        lp_exponents,
        holder_exponents,
        holder_pairs: d.holder_pairs.unwrap_or(HolderConfig::default().pairs),
    })
}

/// Read and parse a configuration file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::validation("--config", format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

fn scalar_field(grid: Grid, spec: &DataSpec, key: &str) -> Result<ScalarField> {
    Ok(match spec {
        DataSpec::Zero => ScalarField::zeros(grid),
        DataSpec::Constant(a) => ScalarField::constant(grid, a[0]),
        DataSpec::Gaussian {
            center,
            width,
            amplitude,
        } => ScalarField::from_fn(grid, |x| {
            let r2: f64 = center.iter().enumerate().map(|(a, c)| (x[a] - c).powi(2)).sum();
            amplitude * (-r2 / (2.0 * width * width)).exp()
        }),
        DataSpec::BumpVector(_) => return Err(CliError::validation(key, "bump_vector is a vector preset")),
        DataSpec::File(path) => {
            let snap = read_snapshot(path)?;
            if snap.grid != grid {
                return Err(CliError::validation(key, format!("{} was written on a different grid", path.display())));
            }
            snap.p
        }
    })
}

fn vector_field(grid: Grid, spec: &DataSpec, key: &str) -> Result<VectorField> {
    let dim = grid.dim();
    let mut m = match spec {
        DataSpec::Zero => VectorField::zeros(grid),
        DataSpec::Constant(a) => {
            let comps = (0..dim).map(|i| ScalarField::constant(grid, a[i.min(a.len() - 1)])).collect();
            VectorField::from_components(comps)?
        }
        DataSpec::BumpVector(a) => {
            let ext = grid.extent().to_vec();
            let comps = (0..dim)
                .map(|i| ScalarField::from_fn(grid, |x| a[i] * (0..dim).map(|j| (PI * x[j] / ext[j]).sin()).product::<f64>()))
                .collect();
            VectorField::from_components(comps)?
        }
        DataSpec::Gaussian { .. } => return Err(CliError::validation(key, "gaussian is a scalar preset")),
        DataSpec::File(path) => {
            let snap = read_snapshot(path)?;
            if snap.grid != grid {
                return Err(CliError::validation(key, format!("{} was written on a different grid", path.display())));
            }
            return Ok(snap.m);
        }
    };
    // presets are defined on the closed domain; the boundary condition wins
    m.pin_boundary();
    Ok(m)
}

impl ExperimentConfig {
    /// Build the physical data, loading snapshot files where requested and
    /// applying `params.scale`.
    pub fn phys_params(&self) -> Result<PhysParams> {
        let p = &self.params;
        let source = scalar_field(self.grid, &p.source, "params.source")?;
        let m0 = vector_field(self.grid, &p.m0, "params.m0")?;
        let params = PhysParams::new(p.d, p.e, p.gamma, source, m0).map_err(|e| match e {
            netform::Error::InvalidParameter { name, reason } => CliError::validation(format!("params.{name}"), reason),
            other => CliError::validation("params", other.to_string()),
        })?;
        Ok(if p.scale == 1.0 { params } else { params.scaled(p.scale) })
    }

    pub fn step_config(&self) -> StepConfig {
        let mut step = StepConfig::new(self.stepping.dt);
        step.cg_tol = self.stepping.cg_tol;
        step.eps_reg = self.stepping.eps_reg;
        step
    }

    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            step: self.step_config(),
            store_every: self.stepping.store_every,
            blowup_threshold: self.stepping.blowup_threshold,
        }
    }

    pub fn picard_config(&self) -> PicardConfig {
        PicardConfig {
            run: self.run_config(),
            k_max: self.picard.k_max,
            tol: self.picard.tol,
        }
    }

    pub fn sweep_config(&self) -> SweepConfig {
        let mut cfg = SweepConfig::new(self.stepping.dt, self.sweep.t_target);
        cfg.run.step = self.step_config();
        cfg.run.blowup_threshold = self.stepping.blowup_threshold;
        cfg.bisect_steps = self.sweep.bisect_steps;
        if let Some(w) = self.sweep.workers {
            cfg.workers = w;
        }
        cfg
    }

    pub fn scan_thresholds(&self) -> ScanThresholds {
        ScanThresholds {
            excess: self.diagnostics.excess_threshold,
            growth: self.diagnostics.growth,
            beta: self.diagnostics.beta,
        }
    }

    pub fn holder_config(&self) -> HolderConfig {
        HolderConfig {
            pairs: self.diagnostics.holder_pairs,
            seed: self.seed,
            ..HolderConfig::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets() {
        assert_eq!(parse_preset("k", "zero", 2, false).unwrap(), DataSpec::Zero);
        assert_eq!(parse_preset("k", "constant(2.5)", 1, false).unwrap(), DataSpec::Constant(vec![2.5]));
        assert_eq!(
            parse_preset("k", "gaussian(0.5, 0.25, 0.1, 3)", 2, false).unwrap(),
            DataSpec::Gaussian {
                center: vec![0.5, 0.25],
                width: 0.1,
                amplitude: 3.0
            }
        );
        assert_eq!(parse_preset("k", "bump_vector(1, -1)", 2, true).unwrap(), DataSpec::BumpVector(vec![1.0, -1.0]));
        assert_eq!(parse_preset("k", "file: a/b.nwf", 2, true).unwrap(), DataSpec::File("a/b.nwf".into()));
        for bad in ["gaussian(0.5, 0.1)", "bump_vector(1)", "sine(2)", "constant(x)", "gaussian(0.5, 0, 1)"] {
            assert!(parse_preset("k", bad, 1, false).is_err(), "{bad}");
        }
        assert!(parse_preset("k", "gaussian(0.5, 0.1, 1)", 1, true).is_err());
    }

    #[test]
    fn line_numbers() {
        assert_eq!(line_of("a\nb\nc", 0), 1);
        assert_eq!(line_of("a\nb\nc", 2), 2);
        assert_eq!(line_of("a\nb\nc", 4), 3);
    }
}
