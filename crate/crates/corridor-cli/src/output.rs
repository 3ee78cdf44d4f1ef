//! Report emission: delimited tables with fixed nine-digit decimals so
//! reruns are byte-identical and diffable.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use corridor_core::metrics::{self, ComparisonReport, FuelModelCoefficients};
use corridor_core::sim::{Scenario, SimResult};

fn num(x: f64) -> String {
    format!("{x:.9}")
}

fn write(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .with_context(|| format!("creating directory {}", parent.display()))?;
    }
    fs::write(path, content).with_context(|| format!("writing {}", path.display()))
}

/// Writes the full report set for one run: trajectory table, schedule
/// table, audit report, per-vehicle metrics and the plot series.
pub fn write_run(
    dir: &Path,
    result: &SimResult,
    scenario: &Scenario,
    fuel: &FuelModelCoefficients,
    stop_speed: f64,
) -> Result<()> {
    write(&dir.join("trajectories.csv"), &trajectory_table(result, scenario))?;
    write(&dir.join("schedule.csv"), &schedule_table(result))?;
    write(&dir.join("audit.txt"), &audit_report(result))?;
    write(
        &dir.join("metrics.csv"),
        &metrics_table(result, scenario, fuel, stop_speed),
    )?;
    emit_plot_data(result, fuel, &dir.join("plot"))?;
    Ok(())
}

fn trajectory_table(result: &SimResult, scenario: &Scenario) -> String {
    let mut out = String::from("vehicle_id,t,p,v,u,zone_flag\n");
    let mut vehicles: Vec<_> = result.vehicles.iter().collect();
    vehicles.sort_by_key(|v| v.vehicle.id);
    for vr in vehicles {
        let route = scenario.route(vr.vehicle.route).expect("route resolved");
        for s in &vr.samples {
            let mut flag = 0usize;
            for &zone in route.zones() {
                let entry = route.distance_to_zone(zone).expect("zone on route");
                let exit = entry + scenario.geometry.zone_length(zone);
                if s.position >= entry && s.position < exit {
                    flag = zone.index() + 1;
                }
            }
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                vr.vehicle.id,
                num(s.time),
                num(s.position),
                num(s.speed),
                num(s.control),
                flag
            ));
        }
    }
    out
}

fn schedule_table(result: &SimResult) -> String {
    let mut out = String::from("vehicle_id,zone,case,merge_time,merge_speed\n");
    for row in &result.schedule {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.vehicle,
            row.zone,
            row.case,
            num(row.merge_time),
            num(row.merge_speed)
        ));
    }
    out
}

fn audit_report(result: &SimResult) -> String {
    let mut out = format!("mode: {}\n", result.mode);
    let blocking = result.audit.blocking(result.mode).count();
    out.push_str(&format!(
        "violations: {} total, {} blocking\n",
        result.audit.violations.len(),
        blocking
    ));
    out.push_str(if blocking == 0 { "verdict: clean\n" } else { "verdict: unsafe\n" });
    for v in &result.audit.violations {
        out.push_str(&format!("{v}\n"));
    }
    if !result.events.is_empty() {
        out.push_str("events:\n");
        for e in &result.events {
            out.push_str(&format!("  {e}\n"));
        }
    }
    out
}

fn metrics_table(
    result: &SimResult,
    scenario: &Scenario,
    fuel: &FuelModelCoefficients,
    stop_speed: f64,
) -> String {
    let mut out =
        String::from("vehicle_id,fuel_ml,travel_time_s,stop_factor,power_coefficient,energy\n");
    let mut vehicles: Vec<_> = result.vehicles.iter().collect();
    vehicles.sort_by_key(|v| v.vehicle.id);
    let mut fleet_fuel = 0.0;
    let mut fleet_tt = 0.0;
    for vr in &vehicles {
        let m = metrics::evaluate(&vr.samples, fuel, &scenario.constraints, stop_speed);
        fleet_fuel += m.fuel;
        fleet_tt += m.travel_time;
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            vr.vehicle.id,
            num(m.fuel),
            num(m.travel_time),
            num(m.stop_factor),
            num(m.power_coefficient),
            num(vr.energy)
        ));
    }
    out.push_str(&format!("fleet,{},{},,,\n", num(fleet_fuel), num(fleet_tt)));
    if let Some(obj) = result.throughput_objective {
        out.push_str(&format!("throughput_objective,{},,,,\n", num(obj)));
    }
    out
}

/// Per-vehicle time series for plotting: position, speed, acceleration and
/// cumulative fuel, one file each.
pub fn emit_plot_data(
    result: &SimResult,
    fuel: &FuelModelCoefficients,
    dir: &Path,
) -> Result<()> {
    let mut vehicles: Vec<_> = result.vehicles.iter().collect();
    vehicles.sort_by_key(|v| v.vehicle.id);

    let mut position = String::from("vehicle_id,t,p\n");
    let mut speed = String::from("vehicle_id,t,v\n");
    let mut accel = String::from("vehicle_id,t,u\n");
    let mut fuel_cum = String::from("vehicle_id,t,fuel_ml\n");
    for vr in &vehicles {
        let mut burned = 0.0;
        let mut prev: Option<&corridor_core::sim::Sample> = None;
        for s in &vr.samples {
            position.push_str(&format!("{},{},{}\n", vr.vehicle.id, num(s.time), num(s.position)));
            speed.push_str(&format!("{},{},{}\n", vr.vehicle.id, num(s.time), num(s.speed)));
            accel.push_str(&format!("{},{},{}\n", vr.vehicle.id, num(s.time), num(s.control)));
            if let Some(p) = prev {
                let rate_a = fuel.rate(p.speed, p.control);
                let rate_b = fuel.rate(s.speed, s.control);
                burned += 0.5 * (rate_a + rate_b) * (s.time - p.time);
            }
            fuel_cum.push_str(&format!("{},{},{}\n", vr.vehicle.id, num(s.time), num(burned)));
            prev = Some(s);
        }
    }
    write(&dir.join("position.csv"), &position)?;
    write(&dir.join("speed.csv"), &speed)?;
    write(&dir.join("accel.csv"), &accel)?;
    write(&dir.join("fuel_cumulative.csv"), &fuel_cum)?;
    Ok(())
}

pub fn write_comparison(dir: &Path, report: &ComparisonReport) -> Result<()> {
    let mut csv = String::from(
        "vehicle_id,fuel_opt,fuel_base,travel_time_opt,travel_time_base,\
         stop_factor_opt,stop_factor_base,power_opt,power_base\n",
    );
    for c in &report.per_vehicle {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            c.vehicle,
            num(c.optimized.fuel),
            num(c.baseline.fuel),
            num(c.optimized.travel_time),
            num(c.baseline.travel_time),
            num(c.optimized.stop_factor),
            num(c.baseline.stop_factor),
            num(c.optimized.power_coefficient),
            num(c.baseline.power_coefficient),
        ));
    }
    write(&dir.join("comparison.csv"), &csv)?;

    let i = &report.improvement;
    let text = format!(
        "fleet comparison (improvement = (baseline - optimized) / baseline)\n\
         fuel:              {} mL -> {} mL ({:.1}%)\n\
         travel time:       {} s -> {} s ({:.1}%)\n\
         stop factor:       {} -> {} ({:.1}%)\n\
         power coefficient: {} -> {} ({:.1}%)\n",
        num(report.fleet_baseline.fuel),
        num(report.fleet_optimized.fuel),
        i.fuel_pct,
        num(report.fleet_baseline.travel_time),
        num(report.fleet_optimized.travel_time),
        i.travel_time_pct,
        num(report.fleet_baseline.stop_factor),
        num(report.fleet_optimized.stop_factor),
        i.stop_factor_pct,
        num(report.fleet_baseline.power_coefficient),
        num(report.fleet_optimized.power_coefficient),
        i.power_coefficient_pct,
    );
    write(&dir.join("comparison.txt"), &text)?;
    Ok(())
}

