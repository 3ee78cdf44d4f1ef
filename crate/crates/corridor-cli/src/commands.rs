//! Command orchestration: resolve a scenario (file path or built-in
//! preset), run the requested modes, write the report tree, and encode the
//! audit verdict in the exit status.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use corridor_core::metrics;
use corridor_core::model::Zone;
use corridor_core::sim::{collision_audit, run_baseline, run_optimized, SimResult};

use crate::output;
use crate::scenario_file::{from_preset, load_scenario, LoadedScenario, RunMode};

/// Exit status used when a run finishes but the collision audit found
/// blocking violations.
pub const EXIT_AUDIT: i32 = 1;

/// Resolves a `--scenario` argument: an existing file wins, otherwise the
/// name is looked up among the built-in presets.
pub fn resolve_scenario(spec: &str) -> Result<LoadedScenario> {
    let path = Path::new(spec);
    if path.exists() {
        return load_scenario(path);
    }
    if let Some(loaded) = from_preset(spec) {
        return Ok(loaded);
    }
    bail!("'{spec}' is neither a scenario file nor a built-in preset (try 'mcity14')")
}

/// Forces the zone transit of one vehicle of a conflicting pair onto the
/// other's, so the audit must flag the run; testing hook behind a hidden
/// flag.
fn inject_audit_fault(result: &mut SimResult, scenario: &corridor_core::sim::Scenario) {
    use corridor_core::model::{relation_of, Relation};
    for zone in Zone::ALL {
        for i in 0..result.vehicles.len() {
            for j in 0..result.vehicles.len() {
                if i == j {
                    continue;
                }
                let (Ok(ra), Ok(rb)) = (
                    scenario.route(result.vehicles[i].vehicle.route),
                    scenario.route(result.vehicles[j].vehicle.route),
                ) else {
                    continue;
                };
                if relation_of(ra.direction, ra.lane, rb.direction, rb.lane)
                    != Relation::Conflicting
                {
                    continue;
                }
                let Some(donor) = result.vehicles[i]
                    .zone_events
                    .iter()
                    .find(|e| e.zone == zone)
                    .copied()
                else {
                    continue;
                };
                if let Some(target) = result.vehicles[j]
                    .zone_events
                    .iter_mut()
                    .find(|e| e.zone == zone)
                {
                    target.entry_time = donor.entry_time;
                    target.exit_time = donor.exit_time;
                    return;
                }
            }
        }
    }
}

fn finish_run(
    result: &mut SimResult,
    loaded: &LoadedScenario,
    dir: &Path,
    fault: bool,
) -> Result<bool> {
    if fault {
        inject_audit_fault(result, &loaded.scenario);
        result.audit = collision_audit(&result.vehicles, &loaded.scenario);
    }
    output::write_run(dir, result, &loaded.scenario, &loaded.fuel, loaded.stop_speed)?;
    Ok(result.audit.is_clean(result.mode))
}

/// Runs one mode (or both plus the comparison) into `out_dir`. Returns the
/// process exit status: zero only when every audit is clean.
pub fn run_command(
    mode: RunMode,
    loaded: &LoadedScenario,
    out_dir: &Path,
    fault: bool,
) -> Result<i32> {
    let clean = match mode {
        RunMode::Optimized => {
            let mut result = run_optimized(&loaded.scenario)?;
            finish_run(&mut result, loaded, out_dir, fault)?
        }
        RunMode::Baseline => {
            let mut result = run_baseline(&loaded.scenario)?;
            finish_run(&mut result, loaded, out_dir, fault)?
        }
        RunMode::Compare => {
            let mut optimized = run_optimized(&loaded.scenario)?;
            let mut baseline = run_baseline(&loaded.scenario)?;
            let clean_opt =
                finish_run(&mut optimized, loaded, &out_dir.join("optimized"), fault)?;
            let clean_base =
                finish_run(&mut baseline, loaded, &out_dir.join("baseline"), false)?;
            let report = metrics::compare(
                &optimized,
                &baseline,
                &loaded.fuel,
                &loaded.scenario.constraints,
                loaded.stop_speed,
            )
            .context("comparing runs")?;
            output::write_comparison(out_dir, &report)?;
            clean_opt && clean_base
        }
    };
    Ok(if clean { 0 } else { EXIT_AUDIT })
}

/// Parses and validates a scenario, reporting a short summary.
pub fn validate_command(spec: &str) -> Result<String> {
    let loaded = resolve_scenario(spec)?;
    Ok(format!(
        "ok: {} spawns over {} routes, dt {} s, default mode {}",
        loaded.scenario.spawns.len(),
        loaded.scenario.routes.len(),
        loaded.scenario.dt,
        loaded.mode
    ))
}

/// Writes a built-in preset as a scenario file.
pub fn emit_preset(name: &str, out: Option<&Path>) -> Result<String> {
    let loaded =
        from_preset(name).with_context(|| format!("unknown preset '{name}' (try 'mcity14')"))?;
    let text = crate::scenario_file::save_scenario(&loaded)?;
    if let Some(path) = out {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).ok();
        }
        std::fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(text)
}

/// Default output directory: the `CORRIDOR_OUT` environment variable when
/// set, else `out`.
pub fn default_out_dir() -> PathBuf {
    std::env::var_os("CORRIDOR_OUT")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("out"))
}
