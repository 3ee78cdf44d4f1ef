//! Drive-cycle evaluation: polynomial fuel metamodel, travel time, stop
//! factor and the coefficient of power demanded, plus fleet comparison.

use crate::model::ConstraintConfig;
use crate::sim::{Sample, SimResult};
use crate::model::VehicleId;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("fuel model produces a negative rate at v={speed:.2} m/s, u={accel:.2} m/s²")]
    NegativeFuelRate { speed: f64, accel: f64 },
    #[error("vehicle sets differ between the two results")]
    VehicleSetMismatch,
}

/// Polynomial fuel-rate metamodel: a cruise cubic in speed plus a
/// positive-acceleration coupling quadratic in speed. Rates are in
/// milliliters per second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FuelModelCoefficients {
    pub cruise: [f64; 4],
    pub accel: [f64; 3],
}

impl Default for FuelModelCoefficients {
    /// Fitted mid-size-sedan coefficients of the cruise/acceleration
    /// polynomial metamodel, mL/s.
    fn default() -> Self {
        Self {
            cruise: [0.1569, 2.450e-2, -7.415e-4, 5.975e-5],
            accel: [0.07224, 0.09681, 1.075e-3],
        }
    }
}

impl FuelModelCoefficients {
    pub fn rate(&self, speed: f64, accel: f64) -> f64 {
        let v = speed.max(0.0);
        let cruise = self.cruise[0] + self.cruise[1] * v + self.cruise[2] * v * v
            + self.cruise[3] * v * v * v;
        let coupling = self.accel[0] + self.accel[1] * v + self.accel[2] * v * v;
        cruise + accel.max(0.0) * coupling
    }

    /// Checks nonnegativity of the rate over the admissible envelope.
    pub fn validate(&self, cfg: &ConstraintConfig) -> Result<(), MetricsError> {
        let steps = 200;
        for i in 0..=steps {
            let v = cfg.speed_max * i as f64 / steps as f64;
            for u in [0.0, cfg.accel_max] {
                let r = self.rate(v, u);
                if r < 0.0 {
                    return Err(MetricsError::NegativeFuelRate { speed: v, accel: u });
                }
            }
        }
        Ok(())
    }
}

/// Summary of one drive cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveCycleMetrics {
    /// Integrated fuel (mL with the default coefficients).
    pub fuel: f64,
    pub travel_time: f64,
    /// Fraction of the cycle spent below the stop speed.
    pub stop_factor: f64,
    /// Normalized mean of v·u over samples with positive speed and
    /// positive acceleration.
    pub power_coefficient: f64,
}

/// Default threshold below which the vehicle counts as stopped (m/s).
pub const DEFAULT_STOP_SPEED: f64 = 0.1;

/// Trapezoid integral of the fuel rate over a sampled cycle.
pub fn fuel(samples: &[Sample], coeffs: &FuelModelCoefficients) -> f64 {
    integrate(samples, |s| coeffs.rate(s.speed, s.control))
}

/// Fraction of cycle duration spent below `stop_speed`.
pub fn stop_factor(samples: &[Sample], stop_speed: f64) -> f64 {
    let duration = cycle_duration(samples);
    if duration <= 0.0 {
        return 0.0;
    }
    let stopped = integrate(samples, |s| if s.speed < stop_speed { 1.0 } else { 0.0 });
    stopped / duration
}

/// Mean of v·u over samples with v > 0 and u > 0, normalized by the speed
/// and acceleration caps so the value is scenario-comparable.
pub fn coeff_power_demanded(samples: &[Sample], cfg: &ConstraintConfig) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for s in samples {
        if s.speed > 0.0 && s.control > 0.0 {
            sum += s.speed * s.control;
            count += 1;
        }
    }
    if count == 0 {
        return 0.0;
    }
    sum / count as f64 / (cfg.speed_max * cfg.accel_max)
}

pub fn evaluate(
    samples: &[Sample],
    coeffs: &FuelModelCoefficients,
    cfg: &ConstraintConfig,
    stop_speed: f64,
) -> DriveCycleMetrics {
    DriveCycleMetrics {
        fuel: fuel(samples, coeffs),
        travel_time: cycle_duration(samples),
        stop_factor: stop_factor(samples, stop_speed),
        power_coefficient: coeff_power_demanded(samples, cfg),
    }
}

fn cycle_duration(samples: &[Sample]) -> f64 {
    match (samples.first(), samples.last()) {
        (Some(a), Some(b)) => b.time - a.time,
        _ => 0.0,
    }
}

fn integrate(samples: &[Sample], f: impl Fn(&Sample) -> f64) -> f64 {
    samples
        .windows(2)
        .map(|w| 0.5 * (f(&w[0]) + f(&w[1])) * (w[1].time - w[0].time))
        .sum()
}

/// Per-vehicle metrics of both runs plus fleet aggregates and percentage
/// improvements, computed as (baseline − optimized) / baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub per_vehicle: Vec<VehicleComparison>,
    pub fleet_optimized: FleetMetrics,
    pub fleet_baseline: FleetMetrics,
    pub improvement: Improvement,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleComparison {
    pub vehicle: VehicleId,
    pub optimized: DriveCycleMetrics,
    pub baseline: DriveCycleMetrics,
}

/// Fleet aggregates: fuel and travel time are totals, the two dimensionless
/// indicators are fleet means.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FleetMetrics {
    pub fuel: f64,
    pub travel_time: f64,
    pub stop_factor: f64,
    pub power_coefficient: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Improvement {
    pub fuel_pct: f64,
    pub travel_time_pct: f64,
    pub stop_factor_pct: f64,
    pub power_coefficient_pct: f64,
}

pub fn improvement_pct(baseline: f64, optimized: f64) -> f64 {
    if baseline.abs() < 1e-12 {
        0.0
    } else {
        (baseline - optimized) / baseline * 100.0
    }
}

fn fleet(metrics: &[DriveCycleMetrics]) -> FleetMetrics {
    let n = metrics.len().max(1) as f64;
    FleetMetrics {
        fuel: metrics.iter().map(|m| m.fuel).sum(),
        travel_time: metrics.iter().map(|m| m.travel_time).sum(),
        stop_factor: metrics.iter().map(|m| m.stop_factor).sum::<f64>() / n,
        power_coefficient: metrics.iter().map(|m| m.power_coefficient).sum::<f64>() / n,
    }
}

pub fn compare(
    optimized: &SimResult,
    baseline: &SimResult,
    coeffs: &FuelModelCoefficients,
    cfg: &ConstraintConfig,
    stop_speed: f64,
) -> Result<ComparisonReport, MetricsError> {
    coeffs.validate(cfg)?;
    let mut per_vehicle = Vec::with_capacity(optimized.vehicles.len());
    if optimized.vehicles.len() != baseline.vehicles.len() {
        return Err(MetricsError::VehicleSetMismatch);
    }
    let mut base_by_id: Vec<(&VehicleId, &crate::sim::VehicleResult)> = baseline
        .vehicles
        .iter()
        .map(|v| (&v.vehicle.id, v))
        .collect();
    base_by_id.sort_by_key(|(id, _)| **id);
    for opt in &optimized.vehicles {
        let found = base_by_id
            .binary_search_by_key(&opt.vehicle.id, |(id, _)| **id)
            .map_err(|_| MetricsError::VehicleSetMismatch)?;
        let base = base_by_id[found].1;
        per_vehicle.push(VehicleComparison {
            vehicle: opt.vehicle.id,
            optimized: evaluate(&opt.samples, coeffs, cfg, stop_speed),
            baseline: evaluate(&base.samples, coeffs, cfg, stop_speed),
        });
    }
    per_vehicle.sort_by_key(|c| c.vehicle);
    let fleet_optimized = fleet(&per_vehicle.iter().map(|c| c.optimized).collect::<Vec<_>>());
    let fleet_baseline = fleet(&per_vehicle.iter().map(|c| c.baseline).collect::<Vec<_>>());
    let improvement = Improvement {
        fuel_pct: improvement_pct(fleet_baseline.fuel, fleet_optimized.fuel),
        travel_time_pct: improvement_pct(fleet_baseline.travel_time, fleet_optimized.travel_time),
        stop_factor_pct: improvement_pct(fleet_baseline.stop_factor, fleet_optimized.stop_factor),
        power_coefficient_pct: improvement_pct(
            fleet_baseline.power_coefficient,
            fleet_optimized.power_coefficient,
        ),
    };
    Ok(ComparisonReport {
        per_vehicle,
        fleet_optimized,
        fleet_baseline,
        improvement,
    })
}
