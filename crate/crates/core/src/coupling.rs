//! Drivers: time marching of the coupled system, the successive-approximation
//! (Picard) scheme with its bound and contraction bookkeeping, and life-span
//! sweeps over the size of the data.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::elliptic::{anisotropic_apply, EllipticOperator};
use crate::error::{Error, Result};
use crate::mesh::{dirichlet_energy, gradient, lq_norm, Grid, ScalarField, VectorField};
use crate::parabolic::{activation, ConductanceStepper, PhysParams, StepConfig};

/// Default threshold on `sup |m|` above which a run is declared blown up.
pub const DEFAULT_BLOWUP_THRESHOLD: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunStatus {
    Completed,
    /// `sup |m|` exceeded the threshold or became non-finite at `time`.
    BlewUp { time: f64 },
    /// A linear solve hit its iteration cap at `time`.
    SolverFailed { time: f64 },
}

impl RunStatus {
    pub fn label(&self) -> &'static str {
        match self {
            RunStatus::Completed => "completed",
            RunStatus::BlewUp { .. } => "blew_up",
            RunStatus::SolverFailed { .. } => "solver_failed",
        }
    }
}

/// State `(m, p)` at one stored time.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub m: VectorField,
    pub p: ScalarField,
}

/// Time-stamped sequence of snapshots produced by a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: Grid,
    snapshots: Vec<Snapshot>,
    status: RunStatus,
}

impl Trajectory {
    /// Build a trajectory from snapshots; times must start at 0 and increase
    /// strictly, and every snapshot must live on the same grid.
    pub fn new(snapshots: Vec<Snapshot>, status: RunStatus) -> Result<Self> {
        let first = snapshots
            .first()
            .ok_or_else(|| Error::InsufficientSnapshots("a trajectory needs at least one snapshot".into()))?;
        if first.time != 0.0 {
            return Err(Error::param("times", format!("first snapshot must be at t = 0, got {}", first.time)));
        }
        let grid = *first.p.grid();
        for w in snapshots.windows(2) {
            if !(w[1].time > w[0].time) {
                return Err(Error::param("times", format!("not increasing: {} then {}", w[0].time, w[1].time)));
            }
        }
        for s in &snapshots {
            grid.check_same(s.p.grid())?;
            grid.check_same(s.m.grid())?;
        }
        Ok(Trajectory {
            grid,
            snapshots,
            status,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.time).collect()
    }

    pub fn status(&self) -> RunStatus {
        self.status
    }

    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("non-empty by construction")
    }

    pub fn end_time(&self) -> f64 {
        self.last().time
    }

    /// `sup |m|` over all stored snapshots.
    pub fn sup_m(&self) -> f64 {
        self.snapshots.iter().map(|s| s.m.sup_norm()).fold(0.0, f64::max)
    }
}

/// Settings for [`run_coupled`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub step: StepConfig,
    /// Keep every `store_every`-th time level (the initial and final levels are
    /// always kept).
    pub store_every: usize,
    pub blowup_threshold: f64,
}

impl RunConfig {
    pub fn new(dt: f64) -> Self {
        RunConfig {
            step: StepConfig::new(dt),
            store_every: 1,
            blowup_threshold: DEFAULT_BLOWUP_THRESHOLD,
        }
    }

    fn validate(&self, t_end: f64) -> Result<()> {
        self.step.validate()?;
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::param("t_end", format!("must be positive, got {t_end}")));
        }
        if self.store_every == 0 {
            return Err(Error::param("store_every", "must be at least 1"));
        }
        if !(self.blowup_threshold > 0.0) {
            return Err(Error::param("blowup_threshold", "must be positive"));
        }
        Ok(())
    }
}

/// Time levels `0 = t_0 < ... < t_n = t_end` with spacing `dt` except for a
/// possibly shorter final step.
pub fn time_levels(dt: f64, t_end: f64) -> Vec<f64> {
    let n = ((t_end / dt) - 1e-9).ceil().max(1.0) as usize;
    (0..=n).map(|k| if k == n { t_end } else { k as f64 * dt }).collect()
}

fn exceeds(m: &VectorField, threshold: f64) -> bool {
    let s = m.sup_norm();
    !s.is_finite() || s > threshold || !m.is_finite()
}

/// March the coupled system: at each level solve for the pressure, then take
/// one conductance step.
///
/// Stops early with status [`RunStatus::BlewUp`] when `sup |m|` exceeds the
/// threshold; a failed linear solve is returned as
/// [`Error::SolverDiverged`] carrying the time.
fn pressure(m: &VectorField, source: &ScalarField, tol: f64, guess: Option<&ScalarField>) -> Result<ScalarField> {
    if source.values().iter().all(|&s| s == 0.0) {
        if !m.is_finite() {
            return Err(Error::NonFiniteField);
        }
        return Ok(ScalarField::zeros(*m.grid()));
    }
    Ok(EllipticOperator::assemble(m)?.solve(source, tol, guess)?.0)
}

pub fn run_coupled(params: &PhysParams, t_end: f64, cfg: &RunConfig) -> Result<Trajectory> {
    cfg.validate(t_end)?;
    let grid = *params.grid();
    let levels = time_levels(cfg.step.dt, t_end);
    let stepper = ConductanceStepper::new(grid);
    let tol = cfg.step.cg_tol;

    let mut m = params.m0().clone();
    let mut p = pressure(&m, params.source(), tol, None).map_err(|e| e.at_time(0.0))?;
    let mut snapshots = vec![Snapshot {
        time: 0.0,
        m: m.clone(),
        p: p.clone(),
    }];
    let mut status = RunStatus::Completed;
    let last = levels.len() - 1;
    for k in 1..levels.len() {
        let t = levels[k];
        let mut step = cfg.step;
        step.dt = t - levels[k - 1];
        let next = match stepper.advance(&m, &p, params, &step) {
            Ok(next) => next,
            Err(Error::BlowUp) => {
                status = RunStatus::BlewUp { time: t };
                break;
            }
            Err(e) => return Err(e.at_time(t)),
        };
        if exceeds(&next, cfg.blowup_threshold) {
            status = RunStatus::BlewUp { time: t };
            break;
        }
        m = next;
        p = pressure(&m, params.source(), tol, Some(&p)).map_err(|e| e.at_time(t))?;
        if k % cfg.store_every == 0 || k == last {
            snapshots.push(Snapshot {
                time: t,
                m: m.clone(),
                p: p.clone(),
            });
        }
    }
    Trajectory::new(snapshots, status)
}

/// Bookkeeping for one Picard iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardIterate {
    pub k: usize,
    /// `sup |w_k|` over space-time.
    pub a: f64,
    /// `sup_t || grad p_k ||_{2N}` with `N` the grid dimension.
    pub b: f64,
    /// `a + b`.
    pub d: f64,
    /// `int int |grad(w_k - w_{k-1})|^2 + |grad(p_k - p_{k-1})|^2`; zero for `k = 0`.
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardTrace {
    pub iterates: Vec<PicardIterate>,
    /// Uniform bound `max_k d_k` over the recorded iterates.
    pub c0: f64,
    /// Set when `eta_k / eta_{k-1} >= 1` for three consecutive iterates.
    pub non_contracting: bool,
    /// Set when `eta_k < tol * eta_1` was reached.
    pub converged: bool,
}

impl PicardTrace {
    pub fn len(&self) -> usize {
        self.iterates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterates.is_empty()
    }

    /// `eta_k / eta_{k-1}` for `k >= 2` (undefined entries are `None`).
    pub fn ratio(&self, k: usize) -> Option<f64> {
        if k < 2 || k >= self.iterates.len() {
            return None;
        }
        let (prev, cur) = (self.iterates[k - 1].eta, self.iterates[k].eta);
        (prev > 0.0).then(|| cur / prev)
    }
}

/// Settings for [`run_picard`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardConfig {
    pub run: RunConfig,
    pub k_max: usize,
    /// Stop once `eta_k < tol * eta_1`.
    pub tol: f64,
}

impl PicardConfig {
    pub fn new(dt: f64, k_max: usize) -> Self {
        PicardConfig {
            run: RunConfig::new(dt),
            k_max,
            tol: 1e-12,
        }
    }
}

fn gradient_lq(p: &ScalarField, q: f64) -> f64 {
    lq_norm(&gradient(p).magnitude(), q)
}

/// Trapezoid weights for a sequence of time levels.
pub fn trapezoid_weights(times: &[f64]) -> Vec<f64> {
    let n = times.len();
    let mut w = vec![0.0; n];
    for k in 1..n {
        let h = times[k] - times[k - 1];
        w[k - 1] += 0.5 * h;
        w[k] += 0.5 * h;
    }
    w
}

fn difference(a: &VectorField, b: &VectorField) -> VectorField {
    let comps = a
        .components()
        .iter()
        .zip(b.components())
        .map(|(x, y)| {
            ScalarField::from_values(*x.grid(), x.values().iter().zip(y.values()).map(|(u, v)| u - v).collect())
                .expect("same grid")
        })
        .collect();
    VectorField::from_components(comps).expect("same grid")
}

fn scalar_difference(a: &ScalarField, b: &ScalarField) -> ScalarField {
    ScalarField::from_values(*a.grid(), a.values().iter().zip(b.values()).map(|(u, v)| u - v).collect())
        .expect("same grid")
}

/// Successive approximations on the whole space-time slab.
///
/// `w_0 = m0` and `p_0` solves the pressure equation with coefficient `m0`.
/// For `k >= 1`, at every time level `p_k` solves the lagged Poisson problem
/// `-Lap p_k = S + div[(w_{k-1} . grad p_{k-1}) w_{k-1}]` (the anisotropic part
/// applied with the same discretization as the pressure operator), and `w_k`
/// solves the linear parabolic problem forced by
/// `E^2 (w_{k-1} . grad p_{k-1}) grad p_{k-1}` from `w_k(0) = m0`.
///
/// Only the previous iterate is retained. Returns the trace and the final
/// iterate as a trajectory.
pub fn run_picard(params: &PhysParams, t_end: f64, cfg: &PicardConfig) -> Result<(PicardTrace, Trajectory)> {
    cfg.run.validate(t_end)?;
    if cfg.k_max == 0 {
        return Err(Error::param("k_max", "must be at least 1"));
    }
    let grid = *params.grid();
    let q = 2.0 * grid.dim() as f64;
    let levels = time_levels(cfg.run.step.dt, t_end);
    let tw = trapezoid_weights(&levels);
    let stepper = ConductanceStepper::new(grid);
    let lap = EllipticOperator::laplacian(grid);
    let tol = cfg.run.step.cg_tol;
    let source = params.source();

    let p0 = EllipticOperator::assemble(params.m0())?
        .solve(source, tol, None)
        .map_err(|e| e.at_time(0.0))?
        .0;
    let mut w_prev: Vec<VectorField> = vec![params.m0().clone(); levels.len()];
    let mut p_prev: Vec<ScalarField> = vec![p0.clone(); levels.len()];
    let a0 = params.m0().sup_norm();
    let b0 = gradient_lq(&p0, q);
    let mut iterates = vec![PicardIterate {
        k: 0,
        a: a0,
        b: b0,
        d: a0 + b0,
        eta: 0.0,
    }];
    let mut status = RunStatus::Completed;
    let mut non_contracting = false;
    let mut converged = false;
    let mut growth_run = 0;

    for k in 1..=cfg.k_max {
        let mut p_next = Vec::with_capacity(levels.len());
        for (n, &t) in levels.iter().enumerate() {
            let lagged = anisotropic_apply(&w_prev[n], &p_prev[n]);
            let rhs = scalar_difference(source, &lagged);
            let (p, _) = lap.solve(&rhs, tol, Some(&p_prev[n])).map_err(|e| e.at_time(t))?;
            p_next.push(p);
        }
        let mut w_next = Vec::with_capacity(levels.len());
        w_next.push(params.m0().clone());
        for n in 1..levels.len() {
            let mut step = cfg.run.step;
            step.dt = levels[n] - levels[n - 1];
            let forcing = activation(&w_prev[n - 1], &p_prev[n - 1], params.e());
            let w = match stepper.step_forced(&w_next[n - 1], &forcing, params.d(), params.gamma(), &step, true) {
                Ok(w) => w,
                Err(Error::BlowUp) => {
                    status = RunStatus::BlewUp { time: levels[n] };
                    break;
                }
                Err(e) => return Err(e.at_time(levels[n])),
            };
            if exceeds(&w, cfg.run.blowup_threshold) {
                status = RunStatus::BlewUp { time: levels[n] };
                break;
            }
            w_next.push(w);
        }
        if status != RunStatus::Completed {
            // keep the blown-up iterate's finite prefix as the reported trajectory
            let snaps = w_next
                .into_iter()
                .zip(p_next)
                .zip(&levels)
                .map(|((m, p), &time)| Snapshot { time, m, p })
                .collect();
            let trace = PicardTrace {
                c0: iterates.iter().map(|i| i.d).fold(0.0, f64::max),
                iterates,
                non_contracting,
                converged,
            };
            return Ok((trace, Trajectory::new(snaps, status)?));
        }

        let mut eta = 0.0;
        let (mut a, mut b) = (0.0f64, 0.0f64);
        for n in 0..levels.len() {
            let dw: f64 = difference(&w_next[n], &w_prev[n]).components().iter().map(dirichlet_energy).sum();
            let dp = dirichlet_energy(&scalar_difference(&p_next[n], &p_prev[n]));
            eta += tw[n] * (dw + dp);
            a = a.max(w_next[n].sup_norm());
            b = b.max(gradient_lq(&p_next[n], q));
        }
        iterates.push(PicardIterate { k, a, b, d: a + b, eta });
        w_prev = w_next;
        p_prev = p_next;

        let eta1 = iterates[1].eta;
        if eta1 == 0.0 || eta < cfg.tol * eta1 {
            converged = true;
            break;
        }
        if k >= 2 {
            let prev = iterates[k - 1].eta;
            if eta >= prev {
                growth_run += 1;
            } else {
                growth_run = 0;
            }
            if growth_run >= 3 {
                non_contracting = true;
                break;
            }
        }
    }

    let last = levels.len() - 1;
    let snaps = w_prev
        .into_iter()
        .zip(p_prev)
        .zip(&levels)
        .enumerate()
        .filter(|(n, _)| n % cfg.run.store_every == 0 || *n == last)
        .map(|(_, ((m, p), &time))| Snapshot { time, m, p })
        .collect();
    let trace = PicardTrace {
        c0: iterates.iter().map(|i| i.d).fold(0.0, f64::max),
        iterates,
        non_contracting,
        converged,
    };
    Ok((trace, Trajectory::new(snaps, status)?))
}

/// Largest relative residual `||K(m) p - S|| / ||S||` of the pressure equation
/// over the snapshots of a trajectory (interior nodes, Euclidean norm).
pub fn pressure_residual(traj: &Trajectory, source: &ScalarField) -> Result<f64> {
    let mut worst = 0.0f64;
    for s in traj.snapshots() {
        let op = EllipticOperator::assemble(&s.m)?;
        let kp = op.apply(&s.p);
        let (mut num, mut den) = (0.0, 0.0);
        for &i in op.interior_nodes() {
            num += (kp.values()[i] - source.values()[i]).powi(2);
            den += source.values()[i].powi(2);
        }
        if den > 0.0 {
            worst = worst.max((num / den).sqrt());
        } else {
            worst = worst.max(num.sqrt());
        }
    }
    Ok(worst)
}

/// `(sum w |f|^q)^{1/q}` for any `q > 0` (a quasi-norm when `q < 1`).
fn lq_quasinorm(f: &ScalarField, q: f64) -> f64 {
    let g = f.grid();
    let s: f64 = f
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| g.weight(i) * v.abs().powf(q))
        .sum();
    s.powf(1.0 / q)
}

/// Size of the data: `||m0||_inf + ||S||_{2N/3}` with `N` the grid dimension.
pub fn data_smallness(params: &PhysParams) -> f64 {
    let n = params.grid().dim() as f64;
    params.m0().sup_norm() + lq_quasinorm(params.source(), 2.0 * n / 3.0)
}

/// Settings for [`lifespan_sweep`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub run: RunConfig,
    pub t_target: f64,
    /// Number of runs executed concurrently.
    pub workers: usize,
    /// Extra bisection runs between the largest surviving and the smallest
    /// failing scale.
    pub bisect_steps: usize,
}

impl SweepConfig {
    pub fn new(dt: f64, t_target: f64) -> Self {
        let mut run = RunConfig::new(dt);
        run.store_every = usize::MAX;
        SweepConfig {
            run,
            t_target,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            bisect_steps: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub scale: f64,
    /// `scale * (||m0||_inf + ||S||_{2N/3})`.
    pub smallness: f64,
    pub survival_time: f64,
    pub status: RunStatus,
}

impl SweepRow {
    pub fn survived(&self) -> bool {
        self.status == RunStatus::Completed
    }
}

fn survival(params: &PhysParams, scale: f64, cfg: &SweepConfig, base_smallness: f64) -> SweepRow {
    let scaled = params.scaled(scale);
    let (time, status) = match run_coupled(&scaled, cfg.t_target, &cfg.run) {
        Ok(traj) => match traj.status() {
            RunStatus::Completed => (cfg.t_target, RunStatus::Completed),
            RunStatus::BlewUp { time } | RunStatus::SolverFailed { time } => (time, traj.status()),
        },
        Err(Error::SolverDiverged { time, .. }) => {
            let t = time.unwrap_or(0.0);
            (t, RunStatus::SolverFailed { time: t })
        }
        Err(_) => (0.0, RunStatus::SolverFailed { time: 0.0 }),
    };
    SweepRow {
        scale,
        smallness: scale * base_smallness,
        survival_time: time,
        status,
    }
}

fn run_parallel(params: &PhysParams, scales: &[f64], cfg: &SweepConfig, base: f64) -> Vec<SweepRow> {
    let next = AtomicUsize::new(0);
    let rows: Mutex<Vec<Option<SweepRow>>> = Mutex::new(vec![None; scales.len()]);
    let workers = cfg.workers.clamp(1, scales.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= scales.len() {
                    break;
                }
                let row = survival(params, scales[i], cfg, base);
                rows.lock().expect("no worker panics while holding the lock")[i] = Some(row);
            });
        }
    });
    rows.into_inner()
        .expect("workers finished")
        .into_iter()
        .map(|r| r.expect("every scale was run"))
        .collect()
}

/// Run the coupled system with data `(s m0, s S)` for each scale `s` (given in
/// descending order) and record how long each run survives.
///
/// Rows come back sorted by scale, descending. With `bisect_steps > 0` the
/// gap between the smallest failing and the largest surviving scale is
/// bisected and the extra runs are merged into the table.
pub fn lifespan_sweep(params: &PhysParams, scales: &[f64], cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    cfg.run.validate(cfg.t_target)?;
    if scales.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
        return Err(Error::param("scales", "must be non-negative and finite"));
    }
    if scales.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::param("scales", "must be sorted in descending order"));
    }
    let base = data_smallness(params);
    let mut rows = run_parallel(params, scales, cfg, base);

    for _ in 0..cfg.bisect_steps {
        let largest_ok = rows.iter().filter(|r| r.survived()).map(|r| r.scale).fold(None, |m: Option<f64>, s| {
            Some(m.map_or(s, |m| m.max(s)))
        });
        let smallest_bad = rows
            .iter()
            .filter(|r| !r.survived())
            .map(|r| r.scale)
            .fold(None, |m: Option<f64>, s| Some(m.map_or(s, |m| m.min(s))));
        let (Some(lo), Some(hi)) = (largest_ok, smallest_bad) else {
            break;
        };
        if lo >= hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        rows.push(survival(params, mid, cfg, base));
    }
    rows.sort_by(|a, b| b.scale.total_cmp(&a.scale));
    Ok(rows)
}
