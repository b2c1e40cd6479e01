use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use netform::analysis::{interpret_picard, small_check, ynb_iterate, ynb_threshold, GeometricRecursion, PerturbedRecursion};
use netform::coupling::{lifespan_sweep, run_coupled, run_picard, RunStatus, Trajectory};
use netform::diagnostics::{degiorgi_levels, energy_report, excess, holder_estimate, lp_growth, oscillation, regularity_scan};
use netform::parabolic::PhysParams;

use crate::config::{load_config, ExperimentConfig, Mode};
use crate::error::{CliError, Result};
use crate::report::{emit_reports, num, Reports};
use crate::snapshot::{read_trajectory, write_trajectory};

/// Exit code for a run that stopped on the blow-up threshold.
pub const EXIT_BLOWUP: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "netform", version, about = "Simulate and diagnose the network formation system")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the experiment selected by `mode` in the config.
    Run(Common),
    /// Run the successive-approximation scheme and write its trace.
    Picard(Common),
    /// Compute diagnostics on a stored trajectory.
    Diagnose {
        #[command(flatten)]
        common: Common,
        /// Directory of `.nwf` snapshots written by `run`.
        #[arg(long)]
        traj: PathBuf,
    },
    /// Survival time against data scale.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Concurrent runs; defaults to the config value or the number of CPUs.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Iterate one of the recursive inequalities at equality.
    LemmaCheck {
        #[command(subcommand)]
        lemma: Lemma,
        /// Accepted for symmetry with the other subcommands; unused.
        #[arg(long, global = true)]
        config: Option<PathBuf>,
        /// Also write the sequence to `lemma.csv` in this directory.
        #[arg(long, global = true)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum Lemma {
    /// `y_{n+1} = c b^n y_n^{1+alpha}`
    Ynb {
        #[arg(long)]
        c: f64,
        #[arg(long)]
        b: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        y0: f64,
        #[arg(long, default_value_t = 30)]
        n: usize,
    },
    /// `b_k = b0 + lambda b_{k-1}^{1+alpha}`
    Small {
        #[arg(long)]
        b0: f64,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 100)]
        k: usize,
    },
}

/// Diagnostics requested by the config, evaluated on `traj`.
pub fn diagnose(cfg: &ExperimentConfig, params: &PhysParams, traj: &Trajectory) -> Result<Reports> {
    let d = &cfg.diagnostics;
    let mut reports = Reports::default();
    if traj.snapshots().len() >= 2 {
        reports.energy = Some(energy_report(traj, params, &d.checkpoints, d.second_identity)?);
    }
    if !d.radii.is_empty() {
        for probe in &d.probes {
            reports.excess.push(excess(traj, *probe, &d.radii, d.beta)?);
        }
        if d.radii.len() >= 3 {
            for probe in &d.probes {
                reports.oscillation.push((probe.y, oscillation(traj, probe.y, &d.radii)?));
            }
        }
        if !d.probes.is_empty() {
            reports.scan = Some((d.radii.clone(), regularity_scan(traj, &d.probes, &d.radii, &cfg.scan_thresholds())?));
        }
    }
    let sup = traj.sup_m().powi(2);
    let k = d.level_k.unwrap_or(if sup > 0.0 { sup } else { 1.0 });
    reports.levels = Some((k, degiorgi_levels(traj, k, d.level_steps)?));
    if traj.snapshots().len() >= 2 && !d.holder_exponents.is_empty() {
        let fields: Vec<_> = traj.snapshots().iter().map(|s| s.m.component(0).clone()).collect();
        reports.holder = Some(holder_estimate(&traj.times(), &fields, &d.holder_exponents, &cfg.holder_config())?);
    }
    reports.lp = lp_growth(traj, &d.lp_exponents)?;
    Ok(reports)
}

fn finish_run(cfg: &ExperimentConfig, params: &PhysParams, traj: &Trajectory, out: &Path, mut reports: Reports) -> Result<i32> {
    write_trajectory(&out.join("traj"), traj)?;
    let code = match traj.status() {
        RunStatus::Completed => {
            let diag = diagnose(cfg, params, traj)?;
            reports = Reports {
                picard: reports.picard,
                sweep: reports.sweep,
                ..diag
            };
            0
        }
        RunStatus::BlewUp { time } => {
            eprintln!("blow-up threshold {} exceeded at t = {time}", cfg.stepping.blowup_threshold);
            EXIT_BLOWUP
        }
        RunStatus::SolverFailed { time } => {
            eprintln!("linear solver failed at t = {time}");
            3
        }
    };
    emit_reports(out, &reports)?;
    let last = traj.last();
    println!("status {}", traj.status().label());
    println!("end_time {}", num(last.time));
    println!("sup_m {}", num(traj.sup_m()));
    println!("snapshots {}", traj.snapshots().len());
    Ok(code)
}

fn cmd_run(cfg: &ExperimentConfig, out: &Path) -> Result<i32> {
    let params = cfg.phys_params()?;
    let traj = run_coupled(&params, cfg.stepping.t_end, &cfg.run_config())?;
    finish_run(cfg, &params, &traj, out, Reports::default())
}

fn cmd_picard(cfg: &ExperimentConfig, out: &Path) -> Result<i32> {
    let params = cfg.phys_params()?;
    let (trace, traj) = run_picard(&params, cfg.stepping.t_end, &cfg.picard_config())?;
    println!("iterates {}", trace.len());
    println!("c0 {}", num(trace.c0));
    println!("converged {}", trace.converged);
    println!("non_contracting {}", trace.non_contracting);
    match interpret_picard(&trace) {
        Ok(r) => {
            println!("plateau_ok {}", r.plateau_ok);
            println!("contraction_ratio {}", num(r.contraction_ratio));
        }
        Err(e) => eprintln!("{e}"),
    }
    let reports = Reports {
        picard: Some(trace),
        ..Reports::default()
    };
    finish_run(cfg, &params, &traj, out, reports)
}

fn cmd_sweep(cfg: &ExperimentConfig, out: &Path, workers: Option<usize>) -> Result<i32> {
    let params = cfg.phys_params()?;
    let mut sweep = cfg.sweep_config();
    if let Some(w) = workers {
        if w == 0 {
            return Err(CliError::validation("--workers", "must be at least 1"));
        }
        sweep.workers = w;
    }
    let rows = lifespan_sweep(&params, &cfg.sweep.scales, &sweep)?;
    for r in &rows {
        println!("{} {} {}", num(r.scale), num(r.survival_time), r.status.label());
    }
    let reports = Reports {
        sweep: rows,
        ..Reports::default()
    };
    emit_reports(out, &reports)?;
    Ok(0)
}

fn cmd_diagnose(cfg: &ExperimentConfig, traj_dir: &Path, out: &Path) -> Result<i32> {
    let params = cfg.phys_params()?;
    let traj = read_trajectory(traj_dir)?;
    if traj.grid() != &cfg.grid {
        return Err(CliError::validation("grid", format!("{} was written on a different grid", traj_dir.display())));
    }
    let reports = diagnose(cfg, &params, &traj)?;
    emit_reports(out, &reports)?;
    println!("snapshots {}", traj.snapshots().len());
    Ok(0)
}

fn write_lemma(out: Option<&Path>, header: &str, rows: &[f64]) -> Result<()> {
    let Some(dir) = out else { return Ok(()) };
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join("lemma.csv");
    let mut text = format!("n,{header}\n");
    for (n, v) in rows.iter().enumerate() {
        text.push_str(&format!("{n},{}\n", num(*v)));
    }
    std::fs::write(&path, text).map_err(|e| CliError::io(path, e))
}

fn cmd_lemma(lemma: &Lemma, out: Option<&Path>) -> Result<i32> {
    let stdout = std::io::stdout();
    let mut w = stdout.lock();
    let print = |w: &mut dyn Write, line: String| writeln!(w, "{line}").map_err(|e| CliError::io("<stdout>", e));
    match *lemma {
        Lemma::Ynb { c, b, alpha, y0, n } => {
            let r = GeometricRecursion::new(c, b, alpha)?;
            let threshold = ynb_threshold(&r);
            let seq = ynb_iterate(&r, y0, n)?;
            print(&mut w, format!("threshold {}", num(threshold)))?;
            print(&mut w, format!("below_threshold {}", y0 <= threshold))?;
            for (k, y) in seq.values.iter().enumerate() {
                print(&mut w, format!("{k} {} {}", num(*y), num(r.envelope(y0, k))))?;
            }
            if seq.overflow {
                print(&mut w, "overflow true".into())?;
            }
            write_lemma(out, "y_n", &seq.values)?;
        }
        Lemma::Small { b0, lambda, alpha, k } => {
            let r = PerturbedRecursion::new(b0, lambda, alpha)?;
            let check = small_check(&r);
            let seq = r.iterate(k);
            print(&mut w, format!("applies {}", check.applies))?;
            print(&mut w, format!("bound {}", num(check.bound)))?;
            let max = seq.iter().cloned().fold(0.0, f64::max);
            print(&mut w, format!("max_b {}", num(max)))?;
            write_lemma(out, "b_k", &seq)?;
        }
    }
    Ok(0)
}

fn dispatch(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Run(c) => {
            let cfg = load_config(&c.config)?;
            match cfg.mode {
                Mode::Run => cmd_run(&cfg, &c.out),
                Mode::Picard => cmd_picard(&cfg, &c.out),
                Mode::Sweep => cmd_sweep(&cfg, &c.out, None),
            }
        }
        Command::Picard(c) => cmd_picard(&load_config(&c.config)?, &c.out),
        Command::Diagnose { common, traj } => cmd_diagnose(&load_config(&common.config)?, traj, &common.out),
        Command::Sweep { common, workers } => cmd_sweep(&load_config(&common.config)?, &common.out, *workers),
        Command::LemmaCheck { lemma, out, .. } => cmd_lemma(lemma, out.as_deref()),
    }
}

/// Run a parsed command line and return the process exit code. Errors are
/// reported on standard error.
pub fn execute(cli: &Cli) -> i32 {
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Parse `args` (program name first) and run; usage errors exit with 2.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(&cli),
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            code
        }
    }
}
