//! Scenario description: geometry, constraints, the fixed route catalogue,
//! spawn list and run parameters for both simulation modes.

use crate::model::{
    headway, ConstraintConfig, CorridorGeometry, Direction, LaneId, Route, RouteId, Zone,
};

use super::SimError;

/// Car-following parameters for the signalized baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GippsParams {
    /// Free-flow target speed (m/s).
    pub desired_speed: f64,
    /// Maximum acceleration (m/s², positive).
    pub accel_max: f64,
    /// Maximum braking (m/s², negative).
    pub brake: f64,
    /// Driver reaction time (s).
    pub reaction_time: f64,
    /// Assumed braking capability of the leader (m/s², negative).
    pub leader_brake_estimate: f64,
    /// Standstill spacing (m).
    pub jam_spacing: f64,
}

impl Default for GippsParams {
    fn default() -> Self {
        Self {
            desired_speed: 13.0,
            accel_max: 1.7,
            brake: -3.0,
            reaction_time: 0.7,
            leader_brake_estimate: -3.5,
            jam_spacing: 6.5,
        }
    }
}

impl GippsParams {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.brake < 0.0 && 0.0 < self.accel_max) {
            return Err(SimError::InvalidScenario(
                "Gipps braking must be negative and acceleration positive".into(),
            ));
        }
        if !(self.reaction_time > 0.0) {
            return Err(SimError::InvalidScenario(
                "Gipps reaction time must be positive".into(),
            ));
        }
        if !(self.leader_brake_estimate < 0.0) {
            return Err(SimError::InvalidScenario(
                "Gipps leader braking estimate must be negative".into(),
            ));
        }
        if !(self.jam_spacing > 0.0 && self.desired_speed > 0.0) {
            return Err(SimError::InvalidScenario(
                "Gipps jam spacing and desired speed must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One vehicle entering the corridor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spawn {
    pub time: f64,
    pub route: RouteId,
    pub speed: f64,
}

/// Complete run description shared by both modes.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub geometry: CorridorGeometry,
    pub constraints: ConstraintConfig,
    pub routes: Vec<Route>,
    pub spawns: Vec<Spawn>,
    /// Sampling and baseline integration step (s).
    pub dt: f64,
    /// Fixed-time signal phase length: each axis holds green this long (s).
    pub signal_half_cycle: f64,
    pub gipps: GippsParams,
}

/// The six-route catalogue of the two-intersection corridor: east/west
/// approaches cross one intersection each, the north/south corridor street
/// crosses both.
pub fn standard_routes(geometry: &CorridorGeometry) -> Vec<Route> {
    let mk = |id: u8, name: &str, direction: Direction, zones: &[Zone]| {
        Route::through(geometry, RouteId(id), name, direction, LaneId(id), zones)
            .expect("catalogue route")
    };
    vec![
        mk(0, "east1", Direction::East, &[Zone::One]),
        mk(1, "east2", Direction::East, &[Zone::Two]),
        mk(2, "west1", Direction::West, &[Zone::One]),
        mk(3, "west2", Direction::West, &[Zone::Two]),
        mk(4, "north", Direction::North, &[Zone::One, Zone::Two]),
        mk(5, "south", Direction::South, &[Zone::Two, Zone::One]),
    ]
}

impl Scenario {
    /// A scenario over the standard route catalogue with default
    /// constraints and baseline parameters.
    pub fn with_standard_routes(geometry: CorridorGeometry, spawns: Vec<Spawn>) -> Self {
        Self {
            routes: standard_routes(&geometry),
            geometry,
            constraints: ConstraintConfig::default(),
            spawns,
            dt: 0.05,
            signal_half_cycle: 10.0,
            gipps: GippsParams::default(),
        }
    }

    pub fn route(&self, id: RouteId) -> Result<&Route, SimError> {
        self.routes
            .iter()
            .find(|r| r.id == id)
            .ok_or_else(|| SimError::InvalidScenario(format!("unknown route id {id}")))
    }

    pub fn route_by_name(&self, name: &str) -> Option<&Route> {
        self.routes.iter().find(|r| r.name == name)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.constraints.validate()?;
        self.gipps.validate()?;
        if !(self.dt > 0.0 && self.dt <= 1.0) {
            return Err(SimError::InvalidScenario(format!(
                "time step must be in (0, 1], got {}",
                self.dt
            )));
        }
        if !(self.signal_half_cycle > 0.0) {
            return Err(SimError::InvalidScenario(
                "signal switching time must be positive".into(),
            ));
        }
        let mut last_time = f64::NEG_INFINITY;
        let mut last_on_route: Vec<Option<&Spawn>> = vec![None; self.routes.len()];
        for (idx, spawn) in self.spawns.iter().enumerate() {
            if spawn.time < 0.0 {
                return Err(SimError::InvalidScenario(format!(
                    "spawn {idx}: negative time {}",
                    spawn.time
                )));
            }
            if spawn.time < last_time {
                return Err(SimError::InvalidScenario(format!(
                    "spawn {idx}: times must be nondecreasing"
                )));
            }
            last_time = spawn.time;
            if spawn.speed < self.constraints.speed_min
                || spawn.speed > self.constraints.speed_max
            {
                return Err(SimError::InvalidScenario(format!(
                    "spawn {idx}: entry speed {} outside [{}, {}]",
                    spawn.speed, self.constraints.speed_min, self.constraints.speed_max
                )));
            }
            let route = self.route(spawn.route)?;
            let slot = self
                .routes
                .iter()
                .position(|r| r.id == route.id)
                .expect("route resolved above");
            if let Some(prev) = last_on_route[slot] {
                // Entry gap at the follower's spawn instant, with the
                // leader still at its entry speed.
                let gap = prev.speed * (spawn.time - prev.time);
                let needed = headway(spawn.speed, &self.constraints)
                    .map_err(|e| SimError::InvalidScenario(e.to_string()))?;
                if gap < needed {
                    return Err(SimError::InvalidScenario(format!(
                        "spawn {idx}: entry gap {gap:.2} m behind the previous spawn on route \
                         '{}' is below the required headway {needed:.2} m",
                        route.name
                    )));
                }
            }
            last_on_route[slot] = Some(spawn);
        }
        Ok(())
    }
}
