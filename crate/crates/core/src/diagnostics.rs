//! Analyses over stored trajectories: energy balances, local means and excess
//! functionals, oscillation decay, level-set measures, Hölder exponents and
//! higher integrability.
//!
//! Balls and cylinders are node sets. A ball `B_r(y)` is every node within
//! distance `r` of `y`; since nodes only live in the closed domain the ball is
//! clipped automatically. Time integrals over a window use the part of each
//! stored snapshot's Voronoi cell that falls inside the window.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coupling::{trapezoid_weights, Trajectory};
use crate::elliptic::solve_pressure;
use crate::error::{Error, Result};
use crate::mesh::{directional_energy, dirichlet_energy, gradient, vector_dirichlet_energy, Grid, ScalarField, VectorField};
use crate::parabolic::PhysParams;

/// Default Hölder exponent added to the excess functional.
pub const DEFAULT_BETA: f64 = 0.5;

/// Terms of the first energy identity at one checkpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRow {
    pub time: f64,
    /// `1/2 int |m(tau)|^2`
    pub kinetic: f64,
    /// `D^2 int int |grad m|^2`
    pub diffusion: f64,
    /// `E^2 int int (m . grad p)^2`
    pub activation: f64,
    /// `int int |m|^{2 gamma}`
    pub metabolic: f64,
    /// `2 E^2 int int |grad p|^2`
    pub pressure: f64,
    /// `1/2 int |m0|^2`
    pub initial: f64,
    /// `2 E^2 int int S p`
    pub work: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub second: Option<SecondIdentity>,
}

/// Terms of the second (time-derivative) energy identity at one checkpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondIdentity {
    /// `int int |d_t m|^2` with forward differences between snapshots.
    pub rate: f64,
    /// `D^2/2 int |grad m(tau)|^2`
    pub diffusion: f64,
    /// `E^2/2 int (m . grad p)^2` at `tau`
    pub activation: f64,
    /// `E^2/2 int |grad p|^2` at `tau`
    pub pressure: f64,
    /// `1/(2 gamma) int |m(tau)|^{2 gamma}`
    pub metabolic: f64,
    /// The same four terms evaluated on `(m0, p0)`.
    pub initial: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub rows: Vec<EnergyRow>,
}

impl EnergyReport {
    pub fn max_residual(&self) -> f64 {
        self.rows.iter().map(|r| r.residual).fold(0.0, f64::max)
    }
}

fn relative_gap(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).abs() / lhs.max(rhs).max(f64::MIN_POSITIVE)
}

fn power_integral(m: &VectorField, power: f64) -> f64 {
    let g = m.grid();
    m.norm_squared()
        .values()
        .iter()
        .enumerate()
        .map(|(i, s)| g.weight(i) * s.powf(power))
        .sum()
}

fn snapshot_index(traj: &Trajectory, tau: f64) -> Result<usize> {
    let end = traj.end_time();
    let slack = 1e-12 * end.max(1.0);
    if !(tau >= 0.0 && tau <= end + slack) {
        return Err(Error::param("checkpoints", format!("{tau} lies outside [0, {end}]")));
    }
    Ok(traj.snapshots().iter().rposition(|s| s.time <= tau + slack).unwrap_or(0))
}

/// Evaluate both sides of the energy balance
/// `1/2 int |m(tau)|^2 + D^2 int int |grad m|^2 + E^2 int int (m . grad p)^2
///  + int int |m|^{2 gamma} + 2 E^2 int int |grad p|^2 = 1/2 int |m0|^2 + 2 E^2 int int S p`
/// at each checkpoint (snapped down to the nearest stored time; empty means
/// the final time). Time integrals use the trapezoid rule over snapshots.
///
/// With `second = true` the time-derivative identity is evaluated too, with
/// `p0` recomputed from `m0`.
pub fn energy_report(traj: &Trajectory, params: &PhysParams, checkpoints: &[f64], second: bool) -> Result<EnergyReport> {
    let snaps = traj.snapshots();
    if snaps.len() < 2 {
        return Err(Error::InsufficientSnapshots(format!(
            "energy quadrature needs at least 2 snapshots, got {}",
            snaps.len()
        )));
    }
    traj.grid().check_same(params.grid())?;
    let (d2, e2, gamma) = (params.d().powi(2), params.e().powi(2), params.gamma());
    let source = params.source();

    let grad_m: Vec<f64> = snaps.iter().map(|s| vector_dirichlet_energy(&s.m)).collect();
    let act: Vec<f64> = snaps.iter().map(|s| directional_energy(&s.m, &s.p)).collect();
    let grad_p: Vec<f64> = snaps.iter().map(|s| dirichlet_energy(&s.p)).collect();
    let met: Vec<f64> = snaps.iter().map(|s| power_integral(&s.m, gamma)).collect();
    let work: Vec<f64> = snaps.iter().map(|s| source.inner(&s.p)).collect();
    let half_sq = |m: &VectorField| 0.5 * m.inner(m);

    let initial = half_sq(params.m0());
    let second_initial = if second {
        let p0 = solve_pressure(params.m0(), source, 1e-12)?;
        Some(
            0.5 * d2 * vector_dirichlet_energy(params.m0())
                + 0.5 * e2 * directional_energy(params.m0(), &p0)
                + 0.5 * e2 * dirichlet_energy(&p0)
                + power_integral(params.m0(), gamma) / (2.0 * gamma),
        )
    } else {
        None
    };

    let taus: Vec<f64> = if checkpoints.is_empty() {
        vec![traj.end_time()]
    } else {
        checkpoints.to_vec()
    };
    let mut rows = Vec::with_capacity(taus.len());
    for tau in taus {
        let k = snapshot_index(traj, tau)?;
        let times: Vec<f64> = snaps[..=k].iter().map(|s| s.time).collect();
        let tw = trapezoid_weights(&times);
        let integrate = |v: &[f64]| tw.iter().zip(v).map(|(w, x)| w * x).sum::<f64>();
        let s = &snaps[k];
        let kinetic = half_sq(&s.m);
        let diffusion = d2 * integrate(&grad_m);
        let activation = e2 * integrate(&act);
        let metabolic = integrate(&met);
        let pressure = 2.0 * e2 * integrate(&grad_p);
        let work = 2.0 * e2 * integrate(&work);
        let lhs = kinetic + diffusion + activation + metabolic + pressure;
        let rhs = initial + work;

        let second = second_initial.map(|init| {
            let rate: f64 = snaps[..=k]
                .windows(2)
                .map(|w| {
                    let dt = w[1].time - w[0].time;
                    let mut acc = 0.0;
                    for a in 0..w[0].m.dim() {
                        let g = w[0].m.grid();
                        for (i, (x, y)) in w[1].m.component(a).values().iter().zip(w[0].m.component(a).values()).enumerate() {
                            acc += g.weight(i) * (x - y).powi(2);
                        }
                    }
                    acc / dt
                })
                .sum();
            let diffusion = 0.5 * d2 * grad_m[k];
            let activation = 0.5 * e2 * act[k];
            let pressure = 0.5 * e2 * grad_p[k];
            let metabolic = met[k] / (2.0 * gamma);
            let lhs = rate + diffusion + activation + pressure + metabolic;
            SecondIdentity {
                rate,
                diffusion,
                activation,
                pressure,
                metabolic,
                initial: init,
                lhs,
                rhs: init,
                residual: relative_gap(lhs, init),
            }
        });

        rows.push(EnergyRow {
            time: s.time,
            kinetic,
            diffusion,
            activation,
            metabolic,
            pressure,
            initial,
            work,
            lhs,
            rhs,
            residual: relative_gap(lhs, rhs),
            second,
        });
    }
    Ok(EnergyReport { rows })
}

/// A space-time probe point `z = (y, tau)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe {
    pub y: [f64; 2],
    pub tau: f64,
}

impl Probe {
    pub fn new(y: [f64; 2], tau: f64) -> Self {
        Probe { y, tau }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExcessRow {
    pub radius: f64,
    /// Cylinder mean `m_{z,r}`; unused trailing components are zero.
    pub m_mean: [f64; 2],
    /// `(t, p_{y,r}(t))` for the stored times inside the window.
    pub p_mean: Vec<(f64, f64)>,
    pub a_r: f64,
    pub e_r: f64,
    /// The ball or the time window was cut by the boundary of the domain.
    pub clipped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExcessReport {
    pub probe: Probe,
    pub beta: f64,
    pub rows: Vec<ExcessRow>,
}

/// Weighted mean with the first value as a shift, so constant data averages
/// to that constant exactly.
fn shifted_mean(values: impl Iterator<Item = (f64, f64)> + Clone) -> f64 {
    let Some((_, c0)) = values.clone().next() else {
        return 0.0;
    };
    let (mut num, mut den) = (0.0, 0.0);
    for (w, v) in values {
        num += w * (v - c0);
        den += w;
    }
    if den > 0.0 {
        c0 + num / den
    } else {
        c0
    }
}

/// Length of the part of each snapshot's Voronoi cell inside `[lo, hi]`.
fn window_weights(times: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let n = times.len();
    (0..n)
        .map(|k| {
            let a = if k == 0 { times[0] } else { 0.5 * (times[k - 1] + times[k]) };
            let b = if k + 1 == n { times[n - 1] } else { 0.5 * (times[k] + times[k + 1]) };
            (b.min(hi) - a.max(lo)).max(0.0)
        })
        .collect()
}

fn ball(grid: &Grid, y: [f64; 2], r: f64) -> Result<Vec<usize>> {
    let nodes = grid.ball_nodes(&y, r);
    if nodes.is_empty() {
        Err(Error::EmptyBall { radius: r })
    } else {
        Ok(nodes)
    }
}

fn ball_clipped(grid: &Grid, y: [f64; 2], r: f64) -> bool {
    (0..grid.dim()).any(|a| y[a] - r < 0.0 || y[a] + r > grid.extent()[a])
}

fn ball_mean(f: &ScalarField, nodes: &[usize]) -> f64 {
    let g = f.grid();
    shifted_mean(nodes.iter().map(|&i| (g.weight(i), f.values()[i])))
}

/// Excess functional `E_r(z)` and pressure excess `A_r(z)` for each radius.
///
/// `E_r = r^{-(N+2)} int_{Q_r} |m - m_{z,r}|^2 + A_r + r^{2 beta}` with
/// `A_r = r^{-N} max_t int_{B_r} (p - p_{y,r}(t))^2`, the maximum taken over the
/// stored times inside `[tau - r^2/2, tau + r^2/2]`.
pub fn excess(traj: &Trajectory, z: Probe, radii: &[f64], beta: f64) -> Result<ExcessReport> {
    if !(beta > 0.0) {
        return Err(Error::param("beta", format!("must be positive, got {beta}")));
    }
    if radii.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::param("radii", "must be positive"));
    }
    let grid = *traj.grid();
    let end = traj.end_time();
    if !(z.tau >= 0.0 && z.tau <= end) {
        return Err(Error::DomainError(format!("probe time {} outside [0, {end}]", z.tau)));
    }
    let snaps = traj.snapshots();
    let times = traj.times();
    let n = grid.dim() as f64;
    let mut rows = Vec::with_capacity(radii.len());
    for &r in radii {
        let nodes = ball(&grid, z.y, r)?;
        let (lo, hi) = (z.tau - 0.5 * r * r, z.tau + 0.5 * r * r);
        let tw = window_weights(&times, lo, hi);
        let inside: Vec<usize> = (0..snaps.len()).filter(|&k| times[k] >= lo && times[k] <= hi).collect();
        if inside.is_empty() {
            return Err(Error::InsufficientSnapshots(format!(
                "no stored time in [{lo}, {hi}]; store snapshots more densely"
            )));
        }

        let mut m_mean = [0.0; 2];
        for (a, mean) in m_mean.iter_mut().enumerate().take(grid.dim()) {
            let (tw, nodes) = (&tw, &nodes);
            let samples = (0..snaps.len()).filter(|&k| tw[k] > 0.0).flat_map(move |k| {
                let vals = snaps[k].m.component(a).values();
                nodes.iter().map(move |&i| (tw[k] * grid.weight(i), vals[i]))
            });
            *mean = shifted_mean(samples);
        }
        let mut deviation = 0.0;
        for k in (0..snaps.len()).filter(|&k| tw[k] > 0.0) {
            for &i in &nodes {
                let v = snaps[k].m.at(i);
                let d2: f64 = (0..grid.dim()).map(|a| (v[a] - m_mean[a]).powi(2)).sum();
                deviation += tw[k] * grid.weight(i) * d2;
            }
        }

        let mut p_mean = Vec::with_capacity(inside.len());
        let mut worst = 0.0f64;
        for &k in &inside {
            let p = &snaps[k].p;
            let mean = ball_mean(p, &nodes);
            let spread: f64 = nodes.iter().map(|&i| grid.weight(i) * (p.values()[i] - mean).powi(2)).sum();
            worst = worst.max(spread);
            p_mean.push((times[k], mean));
        }
        let a_r = worst / r.powf(n);
        let e_r = deviation / r.powf(n + 2.0) + a_r + r.powf(2.0 * beta);
        rows.push(ExcessRow {
            radius: r,
            m_mean,
            p_mean,
            a_r,
            e_r,
            clipped: ball_clipped(&grid, z.y, r) || lo < 0.0 || hi > end,
        });
    }
    Ok(ExcessReport { probe: z, beta, rows })
}

/// Power law `c r^beta` fitted by least squares in log-log coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerFit {
    pub beta: f64,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscillationReport {
    /// `(r, delta_r)` in the order the radii were given.
    pub rows: Vec<(f64, f64)>,
    /// `None` when some `delta_r` is zero and the log fit is undefined.
    pub fit: Option<PowerFit>,
}

/// Least-squares slope and intercept of `y` against `x`.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// `delta_r(y) = max_t (max_{B_r} p - min_{B_r} p)` over the stored times, and
/// a power-law fit `delta_r ~ c r^beta`.
pub fn oscillation(traj: &Trajectory, y: [f64; 2], radii: &[f64]) -> Result<OscillationReport> {
    if radii.len() < 3 {
        return Err(Error::param("radii", format!("need at least 3 radii, got {}", radii.len())));
    }
    if radii.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::param("radii", "must be positive"));
    }
    let grid = traj.grid();
    let mut rows = Vec::with_capacity(radii.len());
    for &r in radii {
        let nodes = ball(grid, y, r)?;
        let delta = traj
            .snapshots()
            .iter()
            .map(|s| {
                let v = s.p.values();
                let (lo, hi) = nodes
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| (lo.min(v[i]), hi.max(v[i])));
                hi - lo
            })
            .fold(0.0, f64::max);
        rows.push((r, delta));
    }
    let distinct = rows.iter().any(|(r, _)| *r != rows[0].0);
    let fit = if rows.iter().all(|(_, d)| *d > 0.0) && distinct {
        let lx: Vec<f64> = rows.iter().map(|(r, _)| r.ln()).collect();
        let ly: Vec<f64> = rows.iter().map(|(_, d)| d.ln()).collect();
        let (beta, icpt) = linear_fit(&lx, &ly);
        Some(PowerFit { beta, c: icpt.exp() })
    } else {
        None
    };
    Ok(OscillationReport { rows, fit })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanThresholds {
    /// Excess level above which a probe is suspicious; `None` means ten times
    /// the median over the probes of `min_r E_r`.
    pub excess: Option<f64>,
    /// A proxy "grows" when its value at the smallest radius exceeds this
    /// multiple of its value at the second smallest.
    pub growth: f64,
    pub beta: f64,
}

impl Default for ScanThresholds {
    fn default() -> Self {
        ScanThresholds {
            excess: None,
            growth: 2.0,
            beta: DEFAULT_BETA,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    RegularCandidate,
    SingularCandidate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRecord {
    pub probe: Probe,
    pub min_excess: f64,
    /// `max_r |m_{z,r}|`
    pub max_mean: f64,
    /// `max_t |m_{y,r}(t)|` per radius.
    pub con1: Vec<f64>,
    /// `max_t r^{-(N-2)} int_{B_r} |grad m|^2` per radius.
    pub con2: Vec<f64>,
    pub class: Classification,
}

fn grows(values: &[(f64, f64)], factor: f64) -> bool {
    // values sorted by radius ascending: compare the two smallest radii
    if values.len() < 2 {
        return false;
    }
    let (small, next) = (values[0].1, values[1].1);
    if next > 0.0 {
        small > factor * next
    } else {
        small > 0.0
    }
}

/// Classify probe points as regular or singular candidates.
///
/// A probe is a singular candidate when `min_r E_r` exceeds the excess
/// threshold and at least one of the two boundedness proxies grows between
/// the two smallest radii.
pub fn regularity_scan(traj: &Trajectory, probes: &[Probe], radii: &[f64], thresholds: &ScanThresholds) -> Result<Vec<ScanRecord>> {
    if radii.is_empty() {
        return Err(Error::param("radii", "need at least one radius"));
    }
    let grid = *traj.grid();
    let n = grid.dim() as f64;
    let grads: Vec<Vec<f64>> = traj
        .snapshots()
        .iter()
        .map(|s| {
            let mut acc = vec![0.0; grid.node_count()];
            for c in s.m.components() {
                for gc in gradient(c).components() {
                    for (a, v) in acc.iter_mut().zip(gc.values()) {
                        *a += v * v;
                    }
                }
            }
            acc
        })
        .collect();

    let mut records = Vec::with_capacity(probes.len());
    for &z in probes {
        let rep = excess(traj, z, radii, thresholds.beta)?;
        let min_excess = rep.rows.iter().map(|r| r.e_r).fold(f64::INFINITY, f64::min);
        let max_mean = rep
            .rows
            .iter()
            .map(|r| (r.m_mean[0].powi(2) + r.m_mean[1].powi(2)).sqrt())
            .fold(0.0, f64::max);
        let mut con1 = Vec::with_capacity(radii.len());
        let mut con2 = Vec::with_capacity(radii.len());
        for &r in radii {
            let nodes = ball(&grid, z.y, r)?;
            let mut c1 = 0.0f64;
            let mut c2 = 0.0f64;
            for (s, g2) in traj.snapshots().iter().zip(&grads) {
                let mean: f64 = (0..grid.dim())
                    .map(|a| ball_mean(s.m.component(a), &nodes).powi(2))
                    .sum::<f64>()
                    .sqrt();
                c1 = c1.max(mean);
                let e: f64 = nodes.iter().map(|&i| grid.weight(i) * g2[i]).sum();
                c2 = c2.max(e / r.powf(n - 2.0));
            }
            con1.push(c1);
            con2.push(c2);
        }
        records.push(ScanRecord {
            probe: z,
            min_excess,
            max_mean,
            con1,
            con2,
            class: Classification::RegularCandidate,
        });
    }

    let threshold = match thresholds.excess {
        Some(t) => t,
        None => {
            let mut m: Vec<f64> = records.iter().map(|r| r.min_excess).collect();
            m.sort_by(f64::total_cmp);
            if m.is_empty() {
                0.0
            } else if m.len() % 2 == 1 {
                10.0 * m[m.len() / 2]
            } else {
                5.0 * (m[m.len() / 2 - 1] + m[m.len() / 2])
            }
        }
    };
    let mut order: Vec<usize> = (0..radii.len()).collect();
    order.sort_by(|&a, &b| radii[a].total_cmp(&radii[b]));
    for rec in &mut records {
        let by_radius = |v: &[f64]| order.iter().map(|&k| (radii[k], v[k])).collect::<Vec<_>>();
        let growing = grows(&by_radius(&rec.con1), thresholds.growth) || grows(&by_radius(&rec.con2), thresholds.growth);
        if rec.min_excess > threshold && growing {
            rec.class = Classification::SingularCandidate;
        }
    }
    Ok(records)
}

/// Level-set measures `y_n = |{(x, t) : |m|^2 > k_n}|`, `n = 0..=n_max`, with
/// `k_n = k - k / 2^n + M` and `M = sup |m0|^2` (taken from the first
/// snapshot). Space-time measure uses node weights and the trapezoid rule
/// over the stored times.
pub fn degiorgi_levels(traj: &Trajectory, k: f64, n_max: usize) -> Result<Vec<f64>> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::param("k", format!("must be positive, got {k}")));
    }
    let snaps = traj.snapshots();
    let grid = traj.grid();
    let big_m = snaps[0].m.sup_norm().powi(2);
    let tw = trapezoid_weights(&traj.times());
    let squares: Vec<ScalarField> = snaps.iter().map(|s| s.m.norm_squared()).collect();
    Ok((0..=n_max)
        .map(|n| {
            let level = k - k / 2f64.powi(n as i32) + big_m;
            squares
                .iter()
                .zip(&tw)
                .map(|(sq, w)| {
                    w * sq
                        .values()
                        .iter()
                        .enumerate()
                        .filter(|(_, v)| **v > level)
                        .map(|(i, _)| grid.weight(i))
                        .sum::<f64>()
                })
                .sum()
        })
        .collect())
}

/// Settings for [`holder_estimate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderConfig {
    /// Pairs drawn per separation scale.
    pub pairs: usize,
    /// Relative increase of the seminorm tolerated when the finest scale is
    /// added.
    pub tol: f64,
    pub seed: u64,
}

impl Default for HolderConfig {
    fn default() -> Self {
        HolderConfig {
            pairs: 400,
            tol: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolderEstimate {
    /// Largest stable exponent, `None` when no exponent was stable.
    pub beta: Option<f64>,
    /// Seminorm at `beta` (zero when `beta` is `None`).
    pub seminorm: f64,
    /// `(beta, seminorm with all scales, seminorm without the finest scale)`.
    pub table: Vec<(f64, f64, f64)>,
}

/// Empirical parabolic Hölder exponent of a field sequence.
///
/// Pairs `(x1, t1), (x2, t2)` are drawn at dyadic separation scales `s` from
/// the domain diameter down to about one mesh width, with `t2` the stored
/// time closest to `t1 +- s^2`. For each candidate exponent the seminorm
/// `max |f1 - f2| / (|x1 - x2| + |t1 - t2|^{1/2})^beta` is computed with and
/// without the finest scale; an exponent is stable when adding the finest
/// scale raises it by at most `tol`. Returns the largest stable exponent.
pub fn holder_estimate(times: &[f64], fields: &[ScalarField], exponents: &[f64], cfg: &HolderConfig) -> Result<HolderEstimate> {
    if fields.len() < 2 || times.len() != fields.len() {
        return Err(Error::InsufficientSnapshots(format!(
            "need at least 2 fields with matching times, got {} fields and {} times",
            fields.len(),
            times.len()
        )));
    }
    let grid = *fields[0].grid();
    for f in fields {
        grid.check_same(f.grid())?;
    }
    let dim = grid.dim();
    let diam = (0..dim).map(|a| grid.extent()[a].powi(2)).sum::<f64>().sqrt();
    let h = grid.h_max();
    let mut scales = vec![0.5 * diam];
    while scales.last().unwrap() * 0.5 >= h {
        let next = scales.last().unwrap() * 0.5;
        scales.push(next);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let nearest_node = |x: [f64; 2]| -> usize {
        let mut idx = [0usize; 2];
        for a in 0..dim {
            let k = (x[a] / grid.h()[a]).round().clamp(0.0, (grid.n()[a] - 1) as f64);
            idx[a] = k as usize;
        }
        grid.index(idx[0], idx[1])
    };
    let nearest_time = |t: f64| -> usize {
        (0..times.len())
            .min_by(|&a, &b| (times[a] - t).abs().total_cmp(&(times[b] - t).abs()))
            .expect("non-empty")
    };

    // (scale index, distance, |difference|)
    let mut samples: Vec<(usize, f64, f64)> = Vec::new();
    for (j, &s) in scales.iter().enumerate() {
        let mut drawn = 0;
        let mut attempts = 0;
        while drawn < cfg.pairs && attempts < 20 * cfg.pairs {
            attempts += 1;
            let i1 = rng.gen_range(0..grid.node_count());
            let k1 = rng.gen_range(0..times.len());
            let x1 = grid.coords(i1);
            let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let dir = if dim == 1 {
                [if theta < std::f64::consts::PI { 1.0 } else { -1.0 }, 0.0]
            } else {
                [theta.cos(), theta.sin()]
            };
            let target = [x1[0] + s * dir[0], x1[1] + s * dir[1]];
            if (0..dim).any(|a| target[a] < 0.0 || target[a] > grid.extent()[a]) {
                continue;
            }
            let i2 = nearest_node(target);
            let same_time = rng.gen_bool(0.5);
            let k2 = if same_time {
                k1
            } else {
                let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                nearest_time(times[k1] + sign * s * s)
            };
            if i1 == i2 && k1 == k2 {
                continue;
            }
            let x2 = grid.coords(i2);
            let dx = ((x1[0] - x2[0]).powi(2) + (x1[1] - x2[1]).powi(2)).sqrt();
            let dist = dx + (times[k1] - times[k2]).abs().sqrt();
            let diff = (fields[k1].values()[i1] - fields[k2].values()[i2]).abs();
            samples.push((j, dist, diff));
            drawn += 1;
        }
    }

    let finest = scales.len() - 1;
    let mut table = Vec::with_capacity(exponents.len());
    let mut best: Option<(f64, f64)> = None;
    for &beta in exponents {
        let (mut all, mut coarse) = (0.0f64, 0.0f64);
        for &(j, dist, diff) in &samples {
            let q = diff / dist.powf(beta);
            all = all.max(q);
            if j < finest {
                coarse = coarse.max(q);
            }
        }
        table.push((beta, all, coarse));
        let stable = all <= (1.0 + cfg.tol) * coarse || all == 0.0;
        if stable && best.map_or(true, |(b, _)| beta > b) {
            best = Some((beta, all));
        }
    }
    Ok(HolderEstimate {
        beta: best.map(|b| b.0),
        seminorm: best.map_or(0.0, |b| b.1),
        table,
    })
}

/// `(t, n, int |m(t)|^{2n})` for every snapshot and exponent, time-major.
pub fn lp_growth(traj: &Trajectory, exponents: &[f64]) -> Result<Vec<(f64, f64, f64)>> {
    if let Some(n) = exponents.iter().find(|n| !(**n >= 1.0)) {
        return Err(Error::param("exponents", format!("must be at least 1, got {n}")));
    }
    let mut rows = Vec::with_capacity(traj.snapshots().len() * exponents.len());
    for s in traj.snapshots() {
        for &n in exponents {
            rows.push((s.time, n, power_integral(&s.m, n)));
        }
    }
    Ok(rows)
}
