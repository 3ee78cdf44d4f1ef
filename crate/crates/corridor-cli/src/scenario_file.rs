//! Scenario files: one TOML document with geometry, constraints, spawn
//! list, baseline and run sections, plus optional fuel-model and metrics
//! overrides. Unknown keys are rejected; parse errors carry line numbers.

use std::path::Path;

use anyhow::{bail, Context, Result};
use corridor_core::metrics::FuelModelCoefficients;
use corridor_core::model::{ConstraintConfig, CorridorGeometry};
use corridor_core::sim::{standard_routes, GippsParams, Scenario, Spawn};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunMode {
    Optimized,
    Baseline,
    Compare,
}

impl std::fmt::Display for RunMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunMode::Optimized => write!(f, "optimized"),
            RunMode::Baseline => write!(f, "baseline"),
            RunMode::Compare => write!(f, "compare"),
        }
    }
}

/// A parsed and validated scenario together with the evaluation settings
/// that ride along in the file.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub mode: RunMode,
    pub fuel: FuelModelCoefficients,
    pub stop_speed: f64,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    geometry: GeometryDoc,
    constraints: ConstraintsDoc,
    run: RunDoc,
    baseline: BaselineDoc,
    #[serde(rename = "spawn", default)]
    spawns: Vec<SpawnDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fuel: Option<FuelDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metrics: Option<MetricsDoc>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct GeometryDoc {
    control_zone_length: f64,
    inter_zone_gap: f64,
    zone_lengths: [f64; 2],
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct ConstraintsDoc {
    accel_min: f64,
    accel_max: f64,
    speed_min: f64,
    speed_max: f64,
    headway_offset: f64,
    headway_gain: f64,
    conflict_time_headway: f64,
    contact_gap: f64,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct RunDoc {
    dt: f64,
    mode: RunMode,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct BaselineDoc {
    signal_half_cycle: f64,
    gipps: GippsDoc,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct GippsDoc {
    desired_speed: f64,
    accel_max: f64,
    brake: f64,
    reaction_time: f64,
    leader_brake_estimate: f64,
    jam_spacing: f64,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct SpawnDoc {
    time: f64,
    route: String,
    speed: f64,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct FuelDoc {
    cruise: [f64; 4],
    accel: [f64; 3],
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct MetricsDoc {
    stop_speed: f64,
}

pub fn load_scenario(path: &Path) -> Result<LoadedScenario> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading scenario file {}", path.display()))?;
    parse_scenario(&text).with_context(|| format!("in scenario file {}", path.display()))
}

pub fn parse_scenario(text: &str) -> Result<LoadedScenario> {
    let doc: ScenarioDoc = toml::from_str(text)?;
    let geometry = CorridorGeometry::new(
        doc.geometry.control_zone_length,
        doc.geometry.inter_zone_gap,
        doc.geometry.zone_lengths,
    )?;
    let routes = standard_routes(&geometry);
    let mut spawns = Vec::with_capacity(doc.spawns.len());
    for (idx, s) in doc.spawns.iter().enumerate() {
        let route = routes
            .iter()
            .find(|r| r.name == s.route)
            .with_context(|| {
                format!(
                    "spawn {idx}: unknown route '{}' (expected one of {})",
                    s.route,
                    routes
                        .iter()
                        .map(|r| r.name.as_str())
                        .collect::<Vec<_>>()
                        .join(", ")
                )
            })?;
        spawns.push(Spawn {
            time: s.time,
            route: route.id,
            speed: s.speed,
        });
    }
    let scenario = Scenario {
        geometry,
        constraints: ConstraintConfig {
            accel_min: doc.constraints.accel_min,
            accel_max: doc.constraints.accel_max,
            speed_min: doc.constraints.speed_min,
            speed_max: doc.constraints.speed_max,
            headway_offset: doc.constraints.headway_offset,
            headway_gain: doc.constraints.headway_gain,
            conflict_time_headway: doc.constraints.conflict_time_headway,
            contact_gap: doc.constraints.contact_gap,
        },
        routes,
        spawns,
        dt: doc.run.dt,
        signal_half_cycle: doc.baseline.signal_half_cycle,
        gipps: GippsParams {
            desired_speed: doc.baseline.gipps.desired_speed,
            accel_max: doc.baseline.gipps.accel_max,
            brake: doc.baseline.gipps.brake,
            reaction_time: doc.baseline.gipps.reaction_time,
            leader_brake_estimate: doc.baseline.gipps.leader_brake_estimate,
            jam_spacing: doc.baseline.gipps.jam_spacing,
        },
    };
    scenario.validate().map_err(|e| anyhow::anyhow!("{e}"))?;
    let fuel = doc
        .fuel
        .map(|f| FuelModelCoefficients {
            cruise: f.cruise,
            accel: f.accel,
        })
        .unwrap_or_default();
    fuel.validate(&scenario.constraints)
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    let stop_speed = doc
        .metrics
        .map(|m| m.stop_speed)
        .unwrap_or(corridor_core::metrics::DEFAULT_STOP_SPEED);
    if !(stop_speed >= 0.0) {
        bail!("metrics.stop_speed must be nonnegative");
    }
    Ok(LoadedScenario {
        scenario,
        mode: doc.run.mode,
        fuel,
        stop_speed,
    })
}

pub fn save_scenario(loaded: &LoadedScenario) -> Result<String> {
    let sc = &loaded.scenario;
    let doc = ScenarioDoc {
        geometry: GeometryDoc {
            control_zone_length: sc.geometry.control_zone_length,
            inter_zone_gap: sc.geometry.inter_zone_gap,
            zone_lengths: sc.geometry.zone_lengths,
        },
        constraints: ConstraintsDoc {
            accel_min: sc.constraints.accel_min,
            accel_max: sc.constraints.accel_max,
            speed_min: sc.constraints.speed_min,
            speed_max: sc.constraints.speed_max,
            headway_offset: sc.constraints.headway_offset,
            headway_gain: sc.constraints.headway_gain,
            conflict_time_headway: sc.constraints.conflict_time_headway,
            contact_gap: sc.constraints.contact_gap,
        },
        run: RunDoc {
            dt: sc.dt,
            mode: loaded.mode,
        },
        baseline: BaselineDoc {
            signal_half_cycle: sc.signal_half_cycle,
            gipps: GippsDoc {
                desired_speed: sc.gipps.desired_speed,
                accel_max: sc.gipps.accel_max,
                brake: sc.gipps.brake,
                reaction_time: sc.gipps.reaction_time,
                leader_brake_estimate: sc.gipps.leader_brake_estimate,
                jam_spacing: sc.gipps.jam_spacing,
            },
        },
        spawns: sc
            .spawns
            .iter()
            .map(|s| {
                let route = sc.route(s.route).expect("spawn routes validated");
                SpawnDoc {
                    time: s.time,
                    route: route.name.clone(),
                    speed: s.speed,
                }
            })
            .collect(),
        fuel: Some(FuelDoc {
            cruise: loaded.fuel.cruise,
            accel: loaded.fuel.accel,
        }),
        metrics: Some(MetricsDoc {
            stop_speed: loaded.stop_speed,
        }),
    };
    Ok(toml::to_string(&doc)?)
}

/// Wraps a built-in preset with default run settings.
pub fn from_preset(name: &str) -> Option<LoadedScenario> {
    corridor_core::sim::preset(name).map(|scenario| LoadedScenario {
        scenario,
        mode: RunMode::Compare,
        fuel: FuelModelCoefficients::default(),
        stop_speed: corridor_core::metrics::DEFAULT_STOP_SPEED,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_round_trips_exactly() {
        let loaded = from_preset("mcity14").unwrap();
        let text = save_scenario(&loaded).unwrap();
        let back = parse_scenario(&text).unwrap();
        assert_eq!(loaded, back);
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let loaded = from_preset("mcity14").unwrap();
        let mut text = save_scenario(&loaded).unwrap();
        text.push_str("\n[geometry2]\nx = 1\n");
        let err = format!("{:#}", parse_scenario(&text).unwrap_err());
        assert!(err.contains("geometry2"), "error was: {err}");
    }

    #[test]
    fn overspeed_spawn_names_the_offender() {
        let loaded = from_preset("mcity14").unwrap();
        let text = save_scenario(&loaded)
            .unwrap()
            .replacen("speed = 10.0", "speed = 99.0", 1);
        let err = format!("{:#}", parse_scenario(&text).unwrap_err());
        assert!(err.contains("spawn 0"), "error was: {err}");
        assert!(err.contains("99"), "error was: {err}");
    }

    #[test]
    fn empty_spawn_list_is_valid() {
        let loaded = from_preset("mcity14").unwrap();
        let mut text = String::new();
        for line in save_scenario(&loaded).unwrap().lines() {
            text.push_str(line);
            text.push('\n');
            if line.starts_with("[[spawn]]") {
                break;
            }
        }
        let text = text.replace("[[spawn]]", "");
        let back = parse_scenario(&text).unwrap();
        assert!(back.scenario.spawns.is_empty());
    }
}
