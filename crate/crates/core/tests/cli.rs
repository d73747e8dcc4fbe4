//! End-to-end checks of the scenario runner and the `gvf` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use gvf_core::scenario::{
    basin_sweep, degenerate_neighborhoods, run_compare, run_field, run_scenario, BasinConfig, Scenario,
};
use gvf_core::{make_path, ControllerConfig, ErrorMap, GvfParams, PathSpec, Region, StopPolicy, TerminationKind};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn gvf() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gvf"))
}

#[test]
fn bundled_configs_round_trip() {
    for name in ["ellipse_paper.cfg", "cassini_paper.cfg", "compare_paper.cfg"] {
        let s = Scenario::load(&config(name)).unwrap();
        let text = s.to_toml().unwrap();
        assert_eq!(Scenario::from_toml(&text).unwrap(), s, "{name}");
    }
}

#[test]
fn ellipse_scenario_writes_one_csv_per_pose() {
    let dir = tempfile::tempdir().unwrap();
    let s = Scenario::load(&config("ellipse_paper.cfg")).unwrap();
    let rows = run_scenario(&s, dir.path()).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.termination == TerminationKind::ConvergedToPath));
    for label in ["a", "b", "c", "d"] {
        let text = fs::read_to_string(dir.path().join(format!("ellipse_paper_{label}.csv"))).unwrap();
        let header = text.lines().next().unwrap();
        assert_eq!(header, "t,x,y,alpha,e,delta,omega_d,omega,dist_path");
        // timestamps strictly increase
        let ts: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
        assert!(ts.windows(2).all(|w| w[1] > w[0]));
    }
    assert!(dir.path().join("ellipse_paper_summary.csv").exists());
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let s = Scenario::load(&config("cassini_paper.cfg")).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_scenario(&s, a.path()).unwrap();
    run_scenario(&s, b.path()).unwrap();
    for entry in fs::read_dir(a.path()).unwrap() {
        let name = entry.unwrap().file_name();
        assert_eq!(fs::read(a.path().join(&name)).unwrap(), fs::read(b.path().join(&name)).unwrap(), "{name:?}");
    }
}

#[test]
fn field_export_degenerate_neighborhoods() {
    let dir = tempfile::tempdir().unwrap();
    let s = Scenario::load(&config("ellipse_paper.cfg")).unwrap();
    let (rows, n) = run_field(&s, dir.path()).unwrap();
    assert_eq!(rows.len(), 1600);
    assert_eq!(degenerate_neighborhoods(&rows, n), 1);
    let s = Scenario::load(&config("cassini_paper.cfg")).unwrap();
    let (rows, n) = run_field(&s, dir.path()).unwrap();
    assert_eq!(rows.len(), 10_000);
    assert_eq!(degenerate_neighborhoods(&rows, n), 3);
}

#[test]
fn basin_inside_critical_ball_is_all_critical() {
    let path = make_path(PathSpec::reference_ellipse()).unwrap();
    let cfg = BasinConfig { region: Region::new(599.7, 600.3, 349.7, 350.3), nx: 3, ny: 3, headings: 2, t_max: 10.0 };
    let (cells, summary) = basin_sweep(
        &path,
        &ErrorMap::Identity,
        &ControllerConfig::Gvf(GvfParams::reference()),
        &StopPolicy::default(),
        0.005,
        &cfg,
    )
    .unwrap();
    assert_eq!(cells.len(), 18);
    assert_eq!(summary.critical, 18);
    assert_eq!(summary.critical_fraction, 1.0);
}

#[test]
fn ellipse_basin_has_no_critical_outcomes_outside_the_center_cell() {
    let path = make_path(PathSpec::reference_ellipse()).unwrap();
    let cfg = BasinConfig { region: Region::workspace(), nx: 40, ny: 40, headings: 4, t_max: 600.0 };
    let (cells, summary) = basin_sweep(
        &path,
        &ErrorMap::Identity,
        &ControllerConfig::Gvf(GvfParams::reference()),
        &StopPolicy::default(),
        0.005,
        &cfg,
    )
    .unwrap();
    assert_eq!(summary.timeout, 0);
    assert_eq!(summary.critical_fraction_excluding_critical_cells, 0.0);
    assert!(cells.iter().filter(|c| c.kind == TerminationKind::ReachedCriticalSet).all(|c| c.starts_critical));
}

#[test]
fn duplicated_controller_gives_identical_rows() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = Scenario::load(&config("compare_paper.cfg")).unwrap();
    let cfg = s.compare.as_mut().unwrap();
    let first = cfg.controllers[1];
    cfg.controllers = vec![first, first];
    cfg.t_max = 30.0;
    let rows = run_compare(&s, dir.path()).unwrap();
    assert_eq!(rows[0], rows[1]);
    let a = fs::read(dir.path().join("compare_paper_compare_0_los.csv")).unwrap();
    let b = fs::read(dir.path().join("compare_paper_compare_1_los.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn cli_simulate_and_critical_succeed() {
    let dir = tempfile::tempdir().unwrap();
    let out = gvf().arg("simulate").arg(config("ellipse_paper.cfg")).arg("--out").arg(dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("ellipse_paper_d.csv").exists());
    let out = gvf().arg("critical").arg(config("cassini_paper.cfg")).arg("--out").arg(dir.path()).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.matches("[[critical_points]]").count(), 3);
    assert!(text.contains("saddle_zero_measure"));
}

#[test]
fn cli_check_passes() {
    let out = gvf().arg("check").output().unwrap();
    assert!(out.status.success());
    assert!(!String::from_utf8(out.stdout).unwrap().contains("FAIL"));
}

#[test]
fn cli_rejects_bad_configs() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(config("ellipse_paper.cfg")).unwrap();
    let no_poses: String = text.split("[[initial_poses]]").next().unwrap().to_string();
    let file = dir.path().join("bad.cfg");
    fs::write(&file, &no_poses).unwrap();
    let out = gvf().arg("simulate").arg(&file).arg("--out").arg(dir.path()).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("initial_poses"));

    fs::write(&file, text.replace("k_delta = 2.0", "k_delta = -2.0")).unwrap();
    let out = gvf().arg("simulate").arg(&file).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("controller") && err.contains("line"), "{err}");

    let out = gvf().arg("simulate").arg(dir.path().join("missing.cfg")).output().unwrap();
    assert!(!out.status.success());
}
