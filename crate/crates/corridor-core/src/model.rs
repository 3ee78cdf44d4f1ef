//! Corridor geometry, routes, vehicles, constraint parameters and the
//! pairwise relation classification that all scheduling builds on.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("zone {zone} is not on route {route}")]
    ZoneNotOnRoute { route: RouteId, zone: Zone },
    #[error("speed must be nonnegative, got {0}")]
    NegativeSpeed(f64),
    #[error("zone occupancy undefined for merge-entry speed {0}")]
    InfeasibleOccupancy(f64),
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid constraint configuration: {0}")]
    InvalidConstraints(String),
    #[error("invalid route: {0}")]
    InvalidRoute(String),
}

/// Merging zone of one of the two intersections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Zone {
    One,
    Two,
}

impl Zone {
    pub const ALL: [Zone; 2] = [Zone::One, Zone::Two];

    pub fn index(self) -> usize {
        match self {
            Zone::One => 0,
            Zone::Two => 1,
        }
    }
}

impl std::fmt::Display for Zone {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.index() + 1)
    }
}

/// Approach direction. One lane each way on every approach.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    East,
    West,
    North,
    South,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    EastWest,
    NorthSouth,
}

impl Direction {
    pub fn axis(self) -> Axis {
        match self {
            Direction::East | Direction::West => Axis::EastWest,
            Direction::North | Direction::South => Axis::NorthSouth,
        }
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Direction::East => "east",
            Direction::West => "west",
            Direction::North => "north",
            Direction::South => "south",
        };
        write!(f, "{s}")
    }
}

/// Physical lane a route runs on. Routes sharing a lane carry rear-end risk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LaneId(pub u8);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RouteId(pub u8);

impl std::fmt::Display for RouteId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Vehicle identifier, assigned in order of control-zone entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VehicleId(pub u32);

impl std::fmt::Display for VehicleId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Corridor layout: control zone of length `L`, two merging zones of
/// lengths `S_1`, `S_2` separated by a gap `D`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorridorGeometry {
    /// Distance from the control-zone entry to the nearest merging-zone entry (m).
    pub control_zone_length: f64,
    /// Gap between the exit of one merging zone and the entry of the next (m).
    pub inter_zone_gap: f64,
    /// Length of each merging zone along the travel direction (m).
    pub zone_lengths: [f64; 2],
}

impl CorridorGeometry {
    pub fn new(
        control_zone_length: f64,
        inter_zone_gap: f64,
        zone_lengths: [f64; 2],
    ) -> Result<Self, ModelError> {
        if !(control_zone_length > 0.0) {
            return Err(ModelError::InvalidGeometry(format!(
                "control zone length must be positive, got {control_zone_length}"
            )));
        }
        if !(inter_zone_gap >= 0.0) {
            return Err(ModelError::InvalidGeometry(format!(
                "inter-zone gap must be nonnegative, got {inter_zone_gap}"
            )));
        }
        for (i, s) in zone_lengths.iter().enumerate() {
            if !(*s > 0.0) {
                return Err(ModelError::InvalidGeometry(format!(
                    "zone {} length must be positive, got {s}",
                    i + 1
                )));
            }
        }
        Ok(Self {
            control_zone_length,
            inter_zone_gap,
            zone_lengths,
        })
    }

    pub fn zone_length(&self, zone: Zone) -> f64 {
        self.zone_lengths[zone.index()]
    }
}

/// A fixed path through the corridor: an approach direction, the merging
/// zones it crosses in order, and the distances to reach them.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub id: RouteId,
    pub name: String,
    pub direction: Direction,
    pub lane: LaneId,
    zones: Vec<Zone>,
    zone_entry_distances: Vec<f64>,
    /// Distance from the control-zone entry to the exit of the last zone (m).
    pub exit_distance: f64,
}

impl Route {
    /// Builds a route through the given zones. The first zone entry sits at
    /// the control-zone length; a second zone sits a full zone plus the
    /// inter-zone gap farther.
    pub fn through(
        geometry: &CorridorGeometry,
        id: RouteId,
        name: impl Into<String>,
        direction: Direction,
        lane: LaneId,
        zones: &[Zone],
    ) -> Result<Self, ModelError> {
        if zones.is_empty() || zones.len() > 2 {
            return Err(ModelError::InvalidRoute(format!(
                "route must traverse one or two zones, got {}",
                zones.len()
            )));
        }
        if zones.len() == 2 && zones[0] == zones[1] {
            return Err(ModelError::InvalidRoute("duplicate zone on route".into()));
        }
        let l = geometry.control_zone_length;
        let mut distances = vec![l];
        if zones.len() == 2 {
            distances.push(l + geometry.zone_length(zones[0]) + geometry.inter_zone_gap);
        }
        let last = *zones.last().unwrap();
        let exit_distance = *distances.last().unwrap() + geometry.zone_length(last);
        Ok(Self {
            id,
            name: name.into(),
            direction,
            lane,
            zones: zones.to_vec(),
            zone_entry_distances: distances,
            exit_distance,
        })
    }

    pub fn zones(&self) -> &[Zone] {
        &self.zones
    }

    pub fn first_zone(&self) -> Zone {
        self.zones[0]
    }

    pub fn last_zone(&self) -> Zone {
        *self.zones.last().unwrap()
    }

    /// Distance from the control-zone entry to the entry of `zone` (m).
    pub fn distance_to_zone(&self, zone: Zone) -> Result<f64, ModelError> {
        self.zones
            .iter()
            .position(|z| *z == zone)
            .map(|i| self.zone_entry_distances[i])
            .ok_or(ModelError::ZoneNotOnRoute {
                route: self.id,
                zone,
            })
    }

    pub fn crosses(&self, zone: Zone) -> bool {
        self.zones.contains(&zone)
    }
}

/// A vehicle as admitted at the control-zone entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vehicle {
    pub id: VehicleId,
    pub route: RouteId,
    /// Control-zone entry time (s).
    pub entry_time: f64,
    /// Speed at control-zone entry (m/s).
    pub entry_speed: f64,
}

/// Control, speed and headway limits shared by every vehicle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintConfig {
    pub accel_min: f64,
    pub accel_max: f64,
    pub speed_min: f64,
    pub speed_max: f64,
    /// Zero-speed rear-end gap δ0 (m).
    pub headway_offset: f64,
    /// Speed gain h of the rear-end gap δ(v) = δ0 + h·v (s).
    pub headway_gain: f64,
    /// Safe time headway ρ between conflicting merge times (s).
    pub conflict_time_headway: f64,
    /// Gap below which a rear-end pair counts as physical contact (m).
    pub contact_gap: f64,
}

impl Default for ConstraintConfig {
    fn default() -> Self {
        Self {
            accel_min: -3.0,
            accel_max: 3.0,
            speed_min: 0.5,
            speed_max: 18.0,
            headway_offset: 10.0,
            headway_gain: 0.5,
            conflict_time_headway: 2.0,
            contact_gap: 2.0,
        }
    }
}

impl ConstraintConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.accel_min < 0.0 && 0.0 < self.accel_max) {
            return Err(ModelError::InvalidConstraints(format!(
                "acceleration bounds must straddle zero, got [{}, {}]",
                self.accel_min, self.accel_max
            )));
        }
        if !(0.0 <= self.speed_min && self.speed_min < self.speed_max) {
            return Err(ModelError::InvalidConstraints(format!(
                "speed bounds must satisfy 0 <= v_min < v_max, got [{}, {}]",
                self.speed_min, self.speed_max
            )));
        }
        if !(self.headway_offset > 0.0) {
            return Err(ModelError::InvalidConstraints(
                "headway offset must be positive".into(),
            ));
        }
        if !(self.headway_gain >= 0.0) {
            return Err(ModelError::InvalidConstraints(
                "headway gain must be nonnegative".into(),
            ));
        }
        if !(self.conflict_time_headway > 0.0) {
            return Err(ModelError::InvalidConstraints(
                "conflict time headway must be positive".into(),
            ));
        }
        if !(self.contact_gap >= 0.0) {
            return Err(ModelError::InvalidConstraints(
                "contact gap must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// How two vehicles sharing a merging zone relate to one another.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    /// Same direction, same lane: rear-end risk.
    SameLane,
    /// Antiparallel directions: no conflict.
    Opposite,
    /// Perpendicular paths through the zone: lateral risk.
    Conflicting,
}

/// Classifies the relation between two routes inside a shared zone.
pub fn classify(a: &Route, b: &Route, zone: Zone) -> Result<Relation, ModelError> {
    if !a.crosses(zone) {
        return Err(ModelError::ZoneNotOnRoute { route: a.id, zone });
    }
    if !b.crosses(zone) {
        return Err(ModelError::ZoneNotOnRoute { route: b.id, zone });
    }
    Ok(relation_of(a.direction, a.lane, b.direction, b.lane))
}

/// Relation from directions and lanes alone; callers must already know the
/// pair shares a zone.
pub fn relation_of(dir_a: Direction, lane_a: LaneId, dir_b: Direction, lane_b: LaneId) -> Relation {
    if dir_a == dir_b && lane_a == lane_b {
        Relation::SameLane
    } else if dir_a.axis() == dir_b.axis() {
        Relation::Opposite
    } else {
        Relation::Conflicting
    }
}

/// Speed-dependent rear-end gap δ(v) = δ0 + h·v.
pub fn headway(speed: f64, cfg: &ConstraintConfig) -> Result<f64, ModelError> {
    if speed < 0.0 {
        return Err(ModelError::NegativeSpeed(speed));
    }
    Ok(cfg.headway_offset + cfg.headway_gain * speed)
}

/// Closed time interval used for zone occupancies. Endpoint contact does
/// not count as overlap: a vehicle may enter a zone exactly as the previous
/// one exits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeInterval {
    pub start: f64,
    pub end: f64,
}

impl TimeInterval {
    pub fn new(start: f64, end: f64) -> Self {
        Self { start, end }
    }

    pub fn width(&self) -> f64 {
        self.end - self.start
    }

    /// True when the interiors of the two intervals intersect by more than `tol`.
    pub fn overlaps_interior(&self, other: &TimeInterval, tol: f64) -> bool {
        self.start.max(other.start) + tol < self.end.min(other.end)
    }
}

/// Time window a vehicle occupies a merging zone, assuming it holds its
/// merge-entry speed across the zone.
pub fn zone_occupancy(
    merge_time: f64,
    merge_speed: f64,
    zone_length: f64,
) -> Result<TimeInterval, ModelError> {
    if merge_speed <= 0.0 {
        return Err(ModelError::InfeasibleOccupancy(merge_speed));
    }
    Ok(TimeInterval::new(
        merge_time,
        merge_time + zone_length / merge_speed,
    ))
}
