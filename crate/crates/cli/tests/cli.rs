use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pvsize::commands::{first_difference, parse_formulations, SizingReport, EXIT_FAILURE, EXIT_OK, OPTIMIZE_OUTPUTS};
use pvsize::ScenarioConfig;
use pvsize_core::Profile;
use pvsize_core::profiles::ProfileKind;
use tempfile::TempDir;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn pvsize(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pvsize")).args(args).output().unwrap()
}

/// Two synthetic spring days, hourly, weighted 900 times.
fn small_config(dir: &Path) -> PathBuf {
    let path = dir.join("small.toml");
    fs::write(
        &path,
        r#"
output_dir = "out"

[profiles.synth]
steps = 48
dt_hours = 1.0
load_kwh = 2774.0
pv_wh_per_wp = 1020.0
seed = 3
start_day = 80.0

[costs]
c_pv = 750.0
c_battery = 250.0
c_dcdc = 130.0
c_inv = 200.0
c_grid_withdraw = 0.26
c_grid_inject = 0.1
horizon_years = 900.0
"#,
    )
    .unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn shipped_configs_load() {
    for name in ["week.toml", "year.toml"] {
        let cfg = ScenarioConfig::load(&configs().join(name)).unwrap();
        assert_eq!(cfg.costs.c_pv, 750.0);
        assert_eq!(cfg.costs.c_grid_withdraw, 0.26);
    }
    let week = ScenarioConfig::load(&configs().join("week.toml")).unwrap().scenario().unwrap();
    assert_eq!((week.steps(), week.dt_hours()), (672, 0.25));
}

#[test]
fn missing_profile_is_named() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "[profiles]\nload_csv = \"nowhere/load.csv\"\npv_csv = \"nowhere/pv.csv\"\ndt_hours = 1.0\n").unwrap();
    let out = pvsize(&["optimize", s(&cfg)]);
    assert_eq!(out.status.code(), Some(EXIT_FAILURE));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("nowhere/load.csv"), "{err}");
}

#[test]
fn optimize_writes_five_files_and_verifies() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(tmp.path());
    let out = pvsize(&["optimize", s(&cfg)]);
    assert_eq!(out.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("out");
    for f in OPTIMIZE_OUTPUTS {
        assert!(dir.join(f).is_file(), "{f}");
    }
    let header = fs::read_to_string(dir.join("schedule.csv")).unwrap().lines().next().unwrap().to_string();
    assert!(header.starts_with(
        "t_index,pc_kw,pd_kw,ppv_kw,ppvi_kw,p_alpha_kw,p_beta_kw,p_gamma_kw,p_inv_kw,p_gi_kw,p_gw_kw,eb_kwh,loss_pv_dcdc_kw"
    ));
    assert_eq!(pvsize(&["verify", s(&cfg)]).status.code(), Some(EXIT_OK));

    // a tampered report no longer matches the schedule
    let path = dir.join("slack_report.json");
    let mut report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    let field = find_number(&mut report, "max_abs_slack_kw").expect("slack field");
    *field = serde_json::json!(field.as_f64().unwrap() + 1.0);
    fs::write(&path, serde_json::to_string_pretty(&report).unwrap()).unwrap();
    assert_eq!(pvsize(&["verify", s(&cfg)]).status.code(), Some(EXIT_FAILURE));
}

fn find_number<'a>(v: &'a mut serde_json::Value, key: &str) -> Option<&'a mut serde_json::Value> {
    match v {
        serde_json::Value::Object(map) => {
            if map.get(key).is_some_and(|x| x.is_number()) {
                return map.get_mut(key);
            }
            map.values_mut().find_map(|x| find_number(x, key))
        }
        serde_json::Value::Array(items) => items.iter_mut().find_map(|x| find_number(x, key)),
        _ => None,
    }
}

#[test]
fn resample_override_shortens_the_program() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(tmp.path());
    let out = pvsize(&["optimize", s(&cfg), "--resample", "4", "--output-dir", s(&tmp.path().join("r4"))]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let report: SizingReport =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("r4/sizing.json")).unwrap()).unwrap();
    assert_eq!((report.steps, report.dt_hours), (12, 4.0));
}

#[test]
fn compare_without_losses_gives_identical_rows() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(tmp.path());
    let out = pvsize(&["compare", s(&cfg), "--lossless"]);
    assert_eq!(out.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(tmp.path().join("out/comparison.csv")).unwrap();
    let objectives: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(objectives.len(), 4);
    for o in &objectives {
        assert!((o - objectives[0]).abs() <= 1e-6 * objectives[0]);
    }
    assert!(tmp.path().join("out/comparison.json").is_file());
}

#[test]
fn unknown_formulation_filter_fails() {
    let tmp = TempDir::new().unwrap();
    let cfg = small_config(tmp.path());
    let out = pvsize(&["compare", s(&cfg), "--formulations", "CC-CB,XX-YY"]);
    assert_eq!(out.status.code(), Some(EXIT_FAILURE));
    assert!(parse_formulations("cc-cb, LC-LB").is_ok());
}

#[test]
fn synth_matches_annual_targets() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("year");
    let out = pvsize(&["synth", "--load-kwh", "2774", "--pv-wh-per-wp", "1020", "--output-dir", s(&dir)]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let load = Profile::parse_csv(&fs::read_to_string(dir.join("load.csv")).unwrap(), ProfileKind::Load, 0.25).unwrap();
    let pv =
        Profile::parse_csv(&fs::read_to_string(dir.join("pv.csv")).unwrap(), ProfileKind::PvNormalized, 0.25).unwrap();
    assert!((load.annual_energy() / 1e3 / 2774.0 - 1.0).abs() < 1e-3);
    assert!((pv.annual_energy() / 1020.0 - 1.0).abs() < 1e-3);
}

#[test]
fn synth_week_and_invalid_targets() {
    let tmp = TempDir::new().unwrap();
    let out = pvsize(&["synth", "--steps", "672", "--dt", "0.25", "--output-dir", s(tmp.path())]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let rows = fs::read_to_string(tmp.path().join("load.csv")).unwrap().lines().count();
    assert_eq!(rows, 673);
    assert_eq!(pvsize(&["synth", "--load-kwh", "0", "--output-dir", s(tmp.path())]).status.code(), Some(EXIT_FAILURE));
}

#[test]
fn json_difference_locates_mismatch() {
    let a = serde_json::json!({ "x": [1.0, 2.0], "y": { "z": null } });
    let b = serde_json::json!({ "x": [1.0, 2.5], "y": { "z": null } });
    assert_eq!(first_difference(&a, &a, ""), None);
    assert_eq!(first_difference(&a, &b, "").as_deref(), Some(".x[1]"));
}
