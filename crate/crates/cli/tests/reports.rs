use std::path::Path;

use netform::coupling::{PicardIterate, PicardTrace, RunStatus, SweepRow};
use netform_cli::report::{emit_reports, write_picard, write_sweep, Reports, REPORT_FILES};

fn read(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn empty_reports_are_header_only() {
    let dir = tempfile::tempdir().unwrap();
    emit_reports(dir.path(), &Reports::default()).unwrap();
    for name in REPORT_FILES {
        let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
        assert_eq!(text.lines().count(), 1, "{name}");
        let (header, rows) = read(&dir.path().join(name));
        assert!(!header.is_empty() && rows.is_empty());
    }
}

#[test]
fn picard_schema() {
    let iterates: Vec<PicardIterate> = (0..6)
        .map(|k| PicardIterate {
            k,
            a: 1.0,
            b: 0.5,
            d: 1.5,
            eta: if k == 0 { 0.0 } else { 0.5f64.powi(k as i32) },
        })
        .collect();
    let trace = PicardTrace {
        iterates,
        c0: 1.5,
        non_contracting: false,
        converged: false,
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("picard_trace.csv");
    write_picard(&path, Some(&trace)).unwrap();
    let (header, rows) = read(&path);
    assert_eq!(header, ["k", "a_k", "b_k", "d_k", "eta_k", "ratio"]);
    assert_eq!(rows.len(), 6);
    assert_eq!(rows[0][5], "");
    assert_eq!(rows[1][5], "");
    for row in &rows[2..] {
        assert_eq!(row[5].parse::<f64>().unwrap(), 0.5);
    }
    assert!(rows.iter().enumerate().all(|(k, r)| r[0] == k.to_string() && r.len() == 6));
}

#[test]
fn sweep_rows_sorted_descending() {
    let rows: Vec<SweepRow> = [0.5, 4.0, 1.0, 2.0, 0.25]
        .iter()
        .map(|&scale| SweepRow {
            scale,
            smallness: scale * 3.0,
            survival_time: (1.0 / scale).min(2.0),
            status: if scale > 1.0 { RunStatus::BlewUp { time: 1.0 / scale } } else { RunStatus::Completed },
        })
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    write_sweep(&path, &rows).unwrap();
    let (_, out) = read(&path);
    assert_eq!(out.len(), 5);
    let scales: Vec<f64> = out.iter().map(|r| r[0].parse().unwrap()).collect();
    assert_eq!(scales, [4.0, 2.0, 1.0, 0.5, 0.25]);
    assert_eq!(out[0][3], "blew_up");
    assert_eq!(out[4][4], "");
}
