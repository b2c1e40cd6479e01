use netform_cli::config::{DataSpec, Mode};
use netform_cli::{parse_config, CliError};

#[test]
fn minimal_config_gets_defaults() {
    let cfg = parse_config("[grid]\ndim = 1\nn = 65\n").unwrap();
    assert_eq!(cfg.grid.n(), &[65]);
    assert_eq!(cfg.grid.extent(), &[1.0]);
    assert_eq!(cfg.mode, Mode::Run);
    assert_eq!(cfg.seed, 0);
    let p = &cfg.params;
    assert_eq!((p.d, p.e, p.gamma, p.scale), (1.0, 1.0, 1.0, 1.0));
    assert_eq!((p.source.clone(), p.m0.clone()), (DataSpec::Zero, DataSpec::Zero));
    let s = cfg.stepping;
    assert_eq!((s.dt, s.t_end, s.store_every), (1e-3, 1.0, 1));
    assert_eq!((s.cg_tol, s.eps_reg, s.blowup_threshold), (1e-10, 1e-12, 1e6));
    assert!(cfg.diagnostics.probes.is_empty());
    assert_eq!(cfg.sweep.t_target, 1.0);
}

#[test]
fn full_config() {
    let text = r#"
mode = "sweep"
seed = 11

[grid]
dim = 2
n = [17, 9]
extent = [2.0, 1.0]

[params]
D = 0.5
E = 2
gamma = 1.5
source = "gaussian(1.0, 0.5, 0.1, 3.0)"
m0 = "bump_vector(0.2, -0.1)"
scale = 0.5

[stepping]
dt = 0.01
t_end = 0.5
store_every = 5

[sweep]
scales = [0.5, 2.0, 1.0]
workers = 2

[diagnostics]
probes = [[1.0, 0.5, 0.25]]
radii = [0.1, 0.2, 0.4]
beta = 0.25
"#;
    let cfg = parse_config(text).unwrap();
    assert_eq!(cfg.mode, Mode::Sweep);
    assert_eq!(cfg.seed, 11);
    assert_eq!(cfg.grid.n(), &[17, 9]);
    assert_eq!(cfg.sweep.scales, vec![2.0, 1.0, 0.5]);
    assert_eq!(cfg.diagnostics.probes[0].y, [1.0, 0.5]);
    assert_eq!(cfg.diagnostics.probes[0].tau, 0.25);
    let params = cfg.phys_params().unwrap();
    assert_eq!(params.gamma(), 1.5);
    assert!(params.m0().vanishes_on_boundary());
    // scale multiplies both data
    let peak = params.source().max();
    assert!((peak - 1.5).abs() < 1e-12, "{peak}");
    assert_eq!(cfg.run_config().store_every, 5);
    assert_eq!(cfg.sweep_config().workers, 2);
}

#[test]
fn gamma_at_or_below_half_is_rejected() {
    for g in ["0.4", "0.5"] {
        let err = parse_config(&format!("[grid]\ndim = 1\nn = 65\n[params]\ngamma = {g}\n")).unwrap_err();
        match err {
            CliError::Validation { key, reason } => {
                assert_eq!(key, "params.gamma");
                assert!(reason.contains("gamma > 1/2"), "{reason}");
            }
            other => panic!("{other:?}"),
        }
    }
}

#[test]
fn duplicate_key_reports_line() {
    let err = parse_config("[grid]\ndim = 1\nn = 65\n\n[params]\nD = 1\nD = 2\n").unwrap_err();
    assert!(matches!(err, CliError::Parse { line: 7, .. }), "{err:?}");
}

#[test]
fn unknown_keys_are_rejected() {
    assert!(matches!(parse_config("[grid]\ndim = 1\nn = 65\nwidth = 3\n"), Err(CliError::Parse { line: 4, .. })));
    assert!(matches!(parse_config("[grid]\ndim = 1\nn = 65\n[extras]\na = 1\n"), Err(CliError::Parse { .. })));
}

fn key_of(text: &str) -> String {
    match parse_config(text) {
        Err(CliError::Validation { key, .. }) => key,
        other => panic!("expected a validation error, got {other:?}"),
    }
}

#[test]
fn validation_names_the_key() {
    let base = "[grid]\ndim = 1\nn = 65\n";
    assert_eq!(key_of("[grid]\nn = 65\n"), "grid.dim");
    assert_eq!(key_of("[grid]\ndim = 3\nn = 65\n"), "grid.dim");
    assert_eq!(key_of("[grid]\ndim = 2\nn = [3]\n"), "grid.n");
    assert_eq!(key_of("[grid]\ndim = 1\nn = 2\n"), "grid");
    assert_eq!(key_of(&format!("{base}[params]\nD = 0\n")), "params.D");
    assert_eq!(key_of(&format!("{base}[params]\nE = -1\n")), "params.E");
    assert_eq!(key_of(&format!("{base}[params]\nsource = \"sine(3)\"\n")), "params.source");
    assert_eq!(key_of(&format!("{base}[params]\nm0 = \"gaussian(0.5, 0.1, 1)\"\n")), "params.m0");
    assert_eq!(key_of(&format!("{base}[stepping]\ndt = -1\n")), "stepping.dt");
    assert_eq!(key_of(&format!("{base}[stepping]\nstore_every = 0\n")), "stepping.store_every");
    assert_eq!(key_of(&format!("{base}[sweep]\nscales = [1, -1]\n")), "sweep.scales");
    assert_eq!(key_of(&format!("{base}[diagnostics]\nprobes = [[0.5, 0.5, 0.1]]\n")), "diagnostics.probes");
    assert_eq!(key_of(&format!("{base}[diagnostics]\nradii = [0.0]\n")), "diagnostics.radii");
}

#[test]
fn malformed_text_is_a_parse_error() {
    assert!(matches!(parse_config("[grid\ndim = 1\n"), Err(CliError::Parse { line: 1, .. })));
    assert!(matches!(parse_config("[grid]\ndim = \n"), Err(CliError::Parse { line: 2, .. })));
}
