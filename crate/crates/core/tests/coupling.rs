use std::f64::consts::PI;

use netform::analysis::interpret_picard;
use netform::coupling::{lifespan_sweep, pressure_residual, run_coupled, run_picard, PicardConfig, RunConfig, RunStatus, SweepConfig};
use netform::diagnostics::energy_report;
use netform::elliptic::solve_pressure;
use netform::parabolic::PhysParams;
use netform::{Grid, ScalarField, VectorField};

fn bump_1d(g: Grid, amp: f64) -> VectorField {
    let mut m = VectorField::from_fn(g, |x| [amp * (PI * x[0]).sin(), 0.0]);
    m.pin_boundary();
    m
}

fn gaussian(g: Grid, amp: f64) -> ScalarField {
    ScalarField::from_fn(g, |x| {
        let r2 = (x[0] - 0.5).powi(2) + if g.dim() == 2 { (x[1] - 0.5).powi(2) } else { 0.0 };
        amp * (-r2 / 0.02).exp()
    })
}

#[test]
fn zero_source_keeps_pressure_zero_and_energy_decays() {
    let g = Grid::unit_square(17).unwrap();
    let mut m0 = VectorField::from_fn(g, |x| [(PI * x[0]).sin() * (PI * x[1]).sin(), 0.3 * x[0] * (1.0 - x[0]) * x[1]]);
    m0.pin_boundary();
    let params = PhysParams::new(0.7, 3.0, 1.5, ScalarField::zeros(g), m0).unwrap();
    let traj = run_coupled(&params, 0.5, &RunConfig::new(0.01)).unwrap();
    assert_eq!(traj.status(), RunStatus::Completed);
    let mut last = f64::INFINITY;
    for s in traj.snapshots() {
        assert_eq!(s.p.max(), 0.0);
        assert_eq!(s.p.min(), 0.0);
        let e = s.m.inner(&s.m);
        assert!(e < last);
        last = e;
    }
}

#[test]
fn small_gaussian_run_satisfies_energy_balance() {
    let g = Grid::unit_square(32).unwrap();
    let mut m0 = VectorField::from_fn(g, |x| [0.2 * (PI * x[0]).sin() * (PI * x[1]).sin(), 0.0]);
    m0.pin_boundary();
    let params = PhysParams::new(0.5, 1.0, 1.0, gaussian(g, 2.0), m0).unwrap();
    let traj = run_coupled(&params, 1.0, &RunConfig::new(0.01)).unwrap();
    assert_eq!(traj.status(), RunStatus::Completed);
    let rep = energy_report(&traj, &params, &[0.25, 0.5, 1.0], false).unwrap();
    assert!(rep.max_residual() <= 0.05, "{:?}", rep.rows);
}

#[test]
fn picard_with_zero_initial_data_repeats_poisson_solution() {
    let g = Grid::line(33, 1.0).unwrap();
    let s = gaussian(g, 1.0);
    let params = PhysParams::new(1.0, 1.0, 1.0, s.clone(), VectorField::zeros(g)).unwrap();
    let cfg = PicardConfig::new(0.05, 4);
    let (trace, traj) = run_picard(&params, 0.5, &cfg).unwrap();
    let p0 = solve_pressure(&VectorField::zeros(g), &s, cfg.run.step.cg_tol).unwrap();
    let first = &traj.snapshots()[0].p;
    for (a, b) in first.values().iter().zip(p0.values()) {
        assert!((a - b).abs() <= 1e-9 * p0.max().abs());
    }
    for it in &trace.iterates {
        assert_eq!(it.d, it.a + it.b);
    }
}

#[test]
fn small_data_picard_contracts() {
    let g = Grid::line(65, 1.0).unwrap();
    let params = PhysParams::new(1.0, 1.0, 1.0, gaussian(g, 0.8), bump_1d(g, 0.8)).unwrap();
    let (trace, traj) = run_picard(&params, 1.0, &PicardConfig::new(0.02, 10)).unwrap();
    assert!(!trace.non_contracting);
    for k in 2..trace.len() {
        assert!(trace.iterates[k].eta <= trace.iterates[k - 1].eta, "eta grew at k={k}");
    }
    let reading = interpret_picard(&trace).unwrap();
    assert!(reading.plateau_ok);
    assert!(reading.contraction_ratio < 1.0);
    for it in &trace.iterates {
        assert!(it.a >= 0.0 && it.b >= 0.0 && it.eta >= 0.0);
        assert_eq!(it.d, it.a + it.b);
    }
    // the true pressure equation is met better as the iteration proceeds
    let res = pressure_residual(&traj, params.source()).unwrap();
    let (_, early) = run_picard(&params, 1.0, &PicardConfig::new(0.02, 2)).unwrap();
    let res_early = pressure_residual(&early, params.source()).unwrap();
    assert!(res < res_early && res < 1e-3, "residual {res} after, {res_early} before");
}

#[test]
fn drivers_are_deterministic() {
    let g = Grid::unit_square(12).unwrap();
    let mut m0 = VectorField::from_fn(g, |x| [x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]), 0.1]);
    m0.pin_boundary();
    let params = PhysParams::new(1.0, 2.0, 0.8, gaussian(g, 3.0), m0).unwrap();
    let cfg = RunConfig::new(0.02);
    let a = run_coupled(&params, 0.2, &cfg).unwrap();
    let b = run_coupled(&params, 0.2, &cfg).unwrap();
    assert_eq!(a, b);
    let pc = PicardConfig::new(0.05, 3);
    assert_eq!(run_picard(&params, 0.2, &pc).unwrap(), run_picard(&params, 0.2, &pc).unwrap());
}

#[test]
fn sweep_is_sorted_and_independent_of_workers() {
    let g = Grid::line(33, 1.0).unwrap();
    let params = PhysParams::new(1.0, 1.0, 1.0, gaussian(g, 10.0), bump_1d(g, 0.05)).unwrap();
    let scales = [16.0, 8.0, 4.0, 2.0, 1.0, 0.0];
    let mut cfg = SweepConfig::new(0.01, 1.0);
    cfg.run.blowup_threshold = 1.0;
    cfg.workers = 1;
    let serial = lifespan_sweep(&params, &scales, &cfg).unwrap();
    cfg.workers = 4;
    let parallel = lifespan_sweep(&params, &scales, &cfg).unwrap();
    assert_eq!(serial, parallel);
    assert!(serial.windows(2).all(|w| w[0].scale > w[1].scale));
    assert!(serial.windows(2).all(|w| w[0].survival_time <= w[1].survival_time));
    assert_eq!(serial.last().unwrap().survival_time, 1.0);
    assert!(!serial[0].survived());
}
