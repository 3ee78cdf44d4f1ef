use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use corridor_cli::commands::{resolve_scenario, run_command};
use corridor_cli::output::emit_plot_data;
use corridor_cli::scenario_file::{from_preset, parse_scenario, save_scenario, RunMode};
use corridor_core::metrics::FuelModelCoefficients;
use corridor_core::sim::{run_baseline, Mode, Scenario, SimResult, Spawn};
use corridor_core::model::{CorridorGeometry, RouteId};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_corridor"))
}

fn walk(dir: &Path, out: &mut Vec<PathBuf>) {
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            walk(&path, out);
        } else {
            out.push(path);
        }
    }
}

#[test]
fn preset_resolves_with_expected_shape() {
    let loaded = resolve_scenario("mcity14").unwrap();
    assert_eq!(loaded.scenario.spawns.len(), 14);
    assert_eq!(loaded.scenario.routes.len(), 6);
    assert_eq!(loaded.mode, RunMode::Compare);
    assert!(resolve_scenario("not-a-preset").is_err());
}

#[test]
fn compare_writes_reports_and_exits_clean() {
    let dir = tempfile::tempdir().unwrap();
    let loaded = resolve_scenario("mcity14").unwrap();
    let code = run_command(RunMode::Compare, &loaded, &dir.path().to_path_buf(), false).unwrap();
    assert_eq!(code, 0);
    for file in [
        "comparison.csv",
        "comparison.txt",
        "optimized/trajectories.csv",
        "optimized/schedule.csv",
        "optimized/audit.txt",
        "optimized/metrics.csv",
        "baseline/audit.txt",
        "baseline/metrics.csv",
    ] {
        assert!(dir.path().join(file).exists(), "missing {file}");
    }
    let audit = fs::read_to_string(dir.path().join("optimized/audit.txt")).unwrap();
    assert!(audit.contains("verdict: clean"));
}

#[test]
fn injected_fault_flips_the_exit_status() {
    let dir = tempfile::tempdir().unwrap();
    let loaded = resolve_scenario("mcity14").unwrap();
    let code = run_command(RunMode::Optimized, &loaded, &dir.path().to_path_buf(), true).unwrap();
    assert_eq!(code, 1);
    let audit = fs::read_to_string(dir.path().join("audit.txt")).unwrap();
    assert!(audit.contains("verdict: unsafe"));
}

#[test]
fn reruns_are_byte_identical() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let loaded = resolve_scenario("mcity14").unwrap();
    run_command(RunMode::Compare, &loaded, &dir_a.path().to_path_buf(), false).unwrap();
    run_command(RunMode::Compare, &loaded, &dir_b.path().to_path_buf(), false).unwrap();

    let mut files_a = Vec::new();
    walk(dir_a.path(), &mut files_a);
    files_a.sort();
    assert!(!files_a.is_empty());
    for a in files_a {
        let rel = a.strip_prefix(dir_a.path()).unwrap();
        let b = dir_b.path().join(rel);
        assert_eq!(
            fs::read(&a).unwrap(),
            fs::read(&b).unwrap(),
            "differs: {}",
            rel.display()
        );
    }
}

#[test]
fn baseline_red_arrival_reports_idling_in_metrics_file() {
    let geometry = CorridorGeometry::new(100.0, 150.0, [18.0, 34.0]).unwrap();
    let scenario = Scenario::with_standard_routes(
        geometry,
        vec![Spawn {
            time: 4.0,
            route: RouteId(0),
            speed: 12.0,
        }],
    );
    let loaded = corridor_cli::scenario_file::LoadedScenario {
        scenario,
        mode: RunMode::Baseline,
        fuel: FuelModelCoefficients::default(),
        stop_speed: corridor_core::metrics::DEFAULT_STOP_SPEED,
    };
    let dir = tempfile::tempdir().unwrap();
    let code = run_command(RunMode::Baseline, &loaded, &dir.path().to_path_buf(), false).unwrap();
    assert_eq!(code, 0);
    let metrics = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    let row = metrics.lines().nth(1).unwrap();
    let stop_factor: f64 = row.split(',').nth(3).unwrap().parse().unwrap();
    assert!(stop_factor > 0.0, "expected idling, metrics row: {row}");
}

#[test]
fn plot_series_cover_the_merge_points_and_accumulate_fuel() {
    let loaded = resolve_scenario("mcity14").unwrap();
    let result = corridor_core::sim::run_optimized(&loaded.scenario).unwrap();
    let dir = tempfile::tempdir().unwrap();
    emit_plot_data(&result, &loaded.fuel, dir.path()).unwrap();

    // Cumulative fuel never decreases.
    let fuel = fs::read_to_string(dir.path().join("fuel_cumulative.csv")).unwrap();
    let mut last: Option<(String, f64)> = None;
    for line in fuel.lines().skip(1) {
        let mut parts = line.split(',');
        let id = parts.next().unwrap().to_string();
        let _t = parts.next().unwrap();
        let burned: f64 = parts.next().unwrap().parse().unwrap();
        if let Some((prev_id, prev)) = &last {
            if *prev_id == id {
                assert!(burned >= *prev - 1e-12);
            }
        }
        last = Some((id, burned));
    }

    // A two-zone vehicle's position series crosses both zone entries at its
    // scheduled merge times.
    let sc = &loaded.scenario;
    let two_zone = result
        .vehicles
        .iter()
        .find(|v| sc.route(v.vehicle.route).unwrap().zones().len() == 2)
        .expect("preset has two-zone routes");
    let position = fs::read_to_string(dir.path().join("position.csv")).unwrap();
    let route = sc.route(two_zone.vehicle.route).unwrap();
    for row in &result.schedule {
        if row.vehicle != two_zone.vehicle.id {
            continue;
        }
        let target = route.distance_to_zone(row.zone).unwrap();
        let mut best = f64::INFINITY;
        for line in position.lines().skip(1) {
            let mut parts = line.split(',');
            if parts.next().unwrap() != two_zone.vehicle.id.to_string() {
                continue;
            }
            let t: f64 = parts.next().unwrap().parse().unwrap();
            let p: f64 = parts.next().unwrap().parse().unwrap();
            if (t - row.merge_time).abs() < best {
                best = (t - row.merge_time).abs();
                if best < result.dt {
                    assert!(
                        (p - target).abs() < 2.0,
                        "position {p} far from zone entry {target} near the merge time"
                    );
                }
            }
        }
    }
}

#[test]
fn empty_spawn_list_yields_headers_only() {
    let geometry = CorridorGeometry::new(100.0, 150.0, [18.0, 34.0]).unwrap();
    let scenario = Scenario::with_standard_routes(geometry, Vec::new());
    let result: SimResult = run_baseline(&scenario).unwrap();
    assert!(result.vehicles.is_empty());
    assert!(result.audit.is_clean(Mode::Baseline));
    let dir = tempfile::tempdir().unwrap();
    emit_plot_data(&result, &FuelModelCoefficients::default(), dir.path()).unwrap();
    let fuel = fs::read_to_string(dir.path().join("fuel_cumulative.csv")).unwrap();
    assert_eq!(fuel, "vehicle_id,t,fuel_ml\n");
}

#[test]
fn binary_round_trips_presets_and_validates() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("scenario.toml");
    let status = bin()
        .args(["emit-preset", "--name", "mcity14", "--out"])
        .arg(&file)
        .status()
        .unwrap();
    assert!(status.success());

    let text = fs::read_to_string(&file).unwrap();
    let loaded = parse_scenario(&text).unwrap();
    assert_eq!(save_scenario(&loaded).unwrap(), text);
    assert_eq!(loaded, from_preset("mcity14").unwrap());

    let out = bin().args(["validate", "--scenario"]).arg(&file).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("14 spawns"));

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, text.replace("speed = 10.0", "speed = 99.0")).unwrap();
    let out = bin().args(["validate", "--scenario"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("spawn"));
}
