//! Upper-level vehicle coordination: per-zone merge queues and the
//! recursive assignment of merge times.
//!
//! Arrivals are processed strictly in control-zone entry order. Each new
//! vehicle's constant-speed arrival time is compared against the tail of
//! the zone queue; depending on whether the queue predecessor is same-lane,
//! opposite or conflicting, the scheduled time is pushed just far enough to
//! clear the rear-end gap and the zone occupancy of everything already
//! committed. A vehicle that would arrive earlier than the current tail may
//! be reinserted ahead of it when no same-lane leader exists and every
//! conflicting vehicle is clear of it both in merge time and in zone
//! occupancy.

use crate::model::{
    headway, relation_of, zone_occupancy, ConstraintConfig, CorridorGeometry, Direction, LaneId,
    ModelError, Relation, Route, RouteId, Vehicle, VehicleId, Zone,
};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CoordinationError {
    #[error("queue is empty; the first vehicle takes its constant-speed arrival")]
    EmptyQueue,
    #[error("merge-entry speed missing for vehicle {0}")]
    MissingMergeSpeed(VehicleId),
    #[error("vehicle {0} has nonpositive entry speed")]
    ZeroEntrySpeed(VehicleId),
    #[error("unknown route {0}")]
    UnknownRoute(RouteId),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Entry of a per-zone merge queue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueueEntry {
    pub vehicle: VehicleId,
    pub lane: LaneId,
    pub direction: Direction,
    pub merge_time: f64,
    /// Speed at the merge point; filled at commit time (from the solved
    /// trajectory when the solver is in the loop, else from an estimate).
    pub merge_speed: Option<f64>,
}

/// Ordered sequence of vehicles scheduled into one merging zone. Merge
/// times are nondecreasing along the queue.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeQueue {
    pub zone: Zone,
    entries: Vec<QueueEntry>,
}

impl MergeQueue {
    pub fn new(zone: Zone) -> Self {
        Self {
            zone,
            entries: Vec::new(),
        }
    }

    pub fn entries(&self) -> &[QueueEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Appends an entry, which must not break the time ordering.
    pub fn push(&mut self, entry: QueueEntry) {
        assert!(
            self.entries
                .last()
                .is_none_or(|last| entry.merge_time >= last.merge_time),
            "queue times must be nondecreasing"
        );
        self.entries.push(entry);
    }

    fn insert(&mut self, position: usize, entry: QueueEntry) {
        self.entries.insert(position, entry);
    }

    pub fn is_time_ordered(&self) -> bool {
        self.entries
            .windows(2)
            .all(|w| w[0].merge_time <= w[1].merge_time)
    }
}

/// Which branch produced a scheduled merge time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleCase {
    /// Empty queue: constant-speed arrival.
    FirstInQueue,
    /// Queue predecessor shares the lane: rear-end gap behind it.
    SameLaneLead,
    /// Queue predecessor runs the opposite way: simultaneous entry allowed.
    OppositeLead,
    /// Queue predecessor conflicts laterally: wait out its zone occupancy.
    ConflictingLead,
    /// Arrival reinserted ahead of the tail with its constant-speed time.
    Reordered,
    /// Arrival slotted into a mid-queue gap left by vehicles scheduled far
    /// ahead of their own arrivals (a long second-zone leg, typically).
    SlotInserted,
}

impl std::fmt::Display for ScheduleCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ScheduleCase::FirstInQueue => "first",
            ScheduleCase::SameLaneLead => "same-lane",
            ScheduleCase::OppositeLead => "opposite",
            ScheduleCase::ConflictingLead => "conflicting",
            ScheduleCase::Reordered => "reordered",
            ScheduleCase::SlotInserted => "slot-inserted",
        };
        write!(f, "{s}")
    }
}

/// Planned merge into one zone, not yet committed to the queue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZonePlan {
    pub zone: Zone,
    pub merge_time: f64,
    pub est_merge_speed: f64,
    pub case: ScheduleCase,
    pub insert_position: usize,
    /// Scheduled later than the slowest admissible constant-speed run; the
    /// speed floor cannot be honored and the time is kept for safety.
    pub relaxed_slow: bool,
    /// The occupancy of an earlier conflicting vehicle, not the queue
    /// predecessor, set the time.
    pub lateral_floor: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub vehicle: VehicleId,
    pub zones: Vec<ZonePlan>,
}

/// Committed merge times of one vehicle.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoneSchedule {
    pub zone: Zone,
    pub merge_time: f64,
    pub merge_speed: f64,
    pub case: ScheduleCase,
    pub relaxed_slow: bool,
    pub lateral_floor: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub vehicle: VehicleId,
    pub route: RouteId,
    pub zones: Vec<ZoneSchedule>,
    /// Exit time of the last merging zone on the route.
    pub exit_time: f64,
}

impl Schedule {
    pub fn merge_time(&self, zone: Zone) -> Option<f64> {
        self.zones
            .iter()
            .find(|z| z.zone == zone)
            .map(|z| z.merge_time)
    }
}

/// Per-zone lower bounds a caller may impose on the next proposal (used to
/// push a plan later when the solved trajectory turns out unsafe).
#[derive(Debug, Clone, Copy, Default)]
pub struct ZoneFloors([f64; 2]);

impl ZoneFloors {
    pub fn none() -> Self {
        Self([f64::NEG_INFINITY; 2])
    }

    pub fn raise(&mut self, zone: Zone, time: f64) {
        let slot = &mut self.0[zone.index()];
        *slot = slot.max(time);
    }

    fn get(&self, zone: Zone) -> f64 {
        self.0[zone.index()]
    }
}

/// Constant-speed arrival time at a zone: entry time plus distance over
/// entry speed. Exact for the first vehicle; the comparison value for
/// everyone else.
pub fn unconstrained_merge_time(
    vehicle: &Vehicle,
    route: &Route,
    zone: Zone,
) -> Result<f64, CoordinationError> {
    if vehicle.entry_speed <= 0.0 {
        return Err(CoordinationError::ZeroEntrySpeed(vehicle.id));
    }
    let distance = route.distance_to_zone(zone)?;
    Ok(vehicle.entry_time + distance / vehicle.entry_speed)
}

/// The recursive merge-time rule relative to a nonempty queue: the queue
/// predecessor dictates the case, and the rear-end term of the latest
/// same-lane vehicle (when one exists) joins the max. The rear-end gap is
/// evaluated at the leader's merge speed, matching the division by it.
pub fn theorem1_merge_time(
    queue: &MergeQueue,
    direction: Direction,
    lane: LaneId,
    zone_length: f64,
    cfg: &ConstraintConfig,
) -> Result<(f64, ScheduleCase), CoordinationError> {
    let pred = queue.entries.last().ok_or(CoordinationError::EmptyQueue)?;

    let rear_end_term = queue
        .entries
        .iter()
        .filter(|e| e.lane == lane)
        .max_by_key(|e| e.vehicle)
        .map(|k| {
            let speed = k
                .merge_speed
                .ok_or(CoordinationError::MissingMergeSpeed(k.vehicle))?;
            Ok::<f64, CoordinationError>(k.merge_time + headway(speed, cfg)? / speed)
        })
        .transpose()?;

    let relation = relation_of(pred.direction, pred.lane, direction, lane);
    let (time, case) = match relation {
        Relation::SameLane => {
            let term = rear_end_term.expect("same-lane predecessor implies a rear-end term");
            (term, ScheduleCase::SameLaneLead)
        }
        Relation::Opposite => {
            let t = rear_end_term.map_or(pred.merge_time, |g| pred.merge_time.max(g));
            (t, ScheduleCase::OppositeLead)
        }
        Relation::Conflicting => {
            let speed = pred
                .merge_speed
                .ok_or(CoordinationError::MissingMergeSpeed(pred.vehicle))?;
            let clear = pred.merge_time + zone_length / speed;
            let t = rear_end_term.map_or(clear, |g| clear.max(g));
            (t, ScheduleCase::ConflictingLead)
        }
    };
    Ok((time, case))
}

/// Sequential coordinator over both zone queues. Arrivals are scheduled in
/// entry order; all state is plain data, so replaying the same arrival
/// stream reproduces the same schedules bit for bit.
#[derive(Debug, Clone)]
pub struct Coordinator {
    geometry: CorridorGeometry,
    cfg: ConstraintConfig,
    routes: Vec<Route>,
    queues: [MergeQueue; 2],
    schedules: Vec<Schedule>,
    events: Vec<String>,
}

impl Coordinator {
    pub fn new(geometry: CorridorGeometry, cfg: ConstraintConfig, routes: Vec<Route>) -> Self {
        Self {
            geometry,
            cfg,
            routes,
            queues: [MergeQueue::new(Zone::One), MergeQueue::new(Zone::Two)],
            schedules: Vec::new(),
            events: Vec::new(),
        }
    }

    pub fn route(&self, id: RouteId) -> Result<&Route, CoordinationError> {
        self.routes
            .iter()
            .find(|r| r.id == id)
            .ok_or(CoordinationError::UnknownRoute(id))
    }

    pub fn queue(&self, zone: Zone) -> &MergeQueue {
        &self.queues[zone.index()]
    }

    pub fn schedules(&self) -> &[Schedule] {
        &self.schedules
    }

    pub fn take_events(&mut self) -> Vec<String> {
        std::mem::take(&mut self.events)
    }

    pub fn config(&self) -> &ConstraintConfig {
        &self.cfg
    }

    /// Plans merge times for a fresh arrival without touching the queues.
    pub fn propose(
        &self,
        vehicle: &Vehicle,
        floors: &ZoneFloors,
    ) -> Result<Proposal, CoordinationError> {
        if vehicle.entry_speed <= 0.0 {
            return Err(CoordinationError::ZeroEntrySpeed(vehicle.id));
        }
        let route = self.route(vehicle.route)?;
        let mut plans = Vec::with_capacity(route.zones().len());
        let mut seg_start_time = vehicle.entry_time;
        let mut seg_start_speed = vehicle.entry_speed;
        let mut prev_distance = 0.0;

        for &zone in route.zones() {
            let distance = route.distance_to_zone(zone)?;
            let zone_length = self.geometry.zone_length(zone);
            let seg_distance = distance - prev_distance;
            let arrival = vehicle.entry_time + distance / vehicle.entry_speed;
            // Earliest reachable time given the previous commitment and the
            // speed cap; also honor any caller-imposed floor.
            let kinematic_floor = seg_start_time + seg_distance / self.cfg.speed_max;
            let candidate = arrival.max(kinematic_floor).max(floors.get(zone));

            let queue = &self.queues[zone.index()];
            let plan = if queue.is_empty() {
                ZonePlan {
                    zone,
                    merge_time: candidate,
                    est_merge_speed: 0.0,
                    case: ScheduleCase::FirstInQueue,
                    insert_position: 0,
                    relaxed_slow: false,
                    lateral_floor: false,
                }
            } else {
                let tail_time = queue.entries.last().unwrap().merge_time;
                if candidate >= tail_time {
                    self.append_plan(queue, route, zone, zone_length, candidate)?
                } else {
                    // The arrival beats the queue tail. Reinsert it ahead
                    // only when no same-lane leader exists and every
                    // conflicting vehicle is clear in both time headway and
                    // zone occupancy. Failing that, look for the earliest
                    // mid-queue slot that clears every occupancy; only then
                    // conserve the order and append.
                    let est_speed = leg_speed_estimate(
                        seg_distance,
                        candidate - seg_start_time,
                        seg_start_speed,
                    );
                    if self.reorder_allowed(queue, route, zone_length, candidate, est_speed)? {
                        let position = queue
                            .entries
                            .partition_point(|e| e.merge_time <= candidate);
                        ZonePlan {
                            zone,
                            merge_time: candidate,
                            est_merge_speed: 0.0,
                            case: ScheduleCase::Reordered,
                            insert_position: position,
                            relaxed_slow: false,
                            lateral_floor: false,
                        }
                    } else if let Some(plan) = self.slot_scan(
                        queue,
                        route,
                        zone,
                        zone_length,
                        candidate,
                        seg_start_time,
                        seg_start_speed,
                        seg_distance,
                    )? {
                        plan
                    } else {
                        self.append_plan(queue, route, zone, zone_length, candidate)?
                    }
                }
            };

            let mut plan = plan;
            // Slow-side feasibility: a time past the v_min constant-speed
            // run cannot be met within the speed band; keep it (safety
            // wins) but flag it.
            if self.cfg.speed_min > 0.0 {
                let slow_cap = seg_start_time + seg_distance / self.cfg.speed_min;
                plan.relaxed_slow = plan.merge_time > slow_cap + 1e-9;
            }
            plan.est_merge_speed = leg_speed_estimate(
                seg_distance,
                plan.merge_time - seg_start_time,
                seg_start_speed,
            );
            seg_start_time = plan.merge_time;
            seg_start_speed = plan.est_merge_speed;
            prev_distance = distance;
            plans.push(plan);
        }
        Ok(Proposal {
            vehicle: vehicle.id,
            zones: plans,
        })
    }

    fn append_plan(
        &self,
        queue: &MergeQueue,
        route: &Route,
        zone: Zone,
        zone_length: f64,
        candidate: f64,
    ) -> Result<ZonePlan, CoordinationError> {
        let (value, case) =
            theorem1_merge_time(queue, route.direction, route.lane, zone_length, &self.cfg)?;
        let mut merge_time = value.max(candidate);
        // Occupancies of conflicting vehicles deeper in the queue than the
        // predecessor must also be clear.
        let mut lateral_floor = false;
        for entry in &queue.entries {
            if relation_of(entry.direction, entry.lane, route.direction, route.lane)
                != Relation::Conflicting
            {
                continue;
            }
            let speed = entry
                .merge_speed
                .ok_or(CoordinationError::MissingMergeSpeed(entry.vehicle))?;
            let clear = entry.merge_time + zone_length / speed.max(MIN_BOOKKEEPING_SPEED);
            if clear > merge_time {
                merge_time = clear;
                lateral_floor = true;
            }
        }
        Ok(ZonePlan {
            zone,
            merge_time,
            est_merge_speed: 0.0,
            case,
            insert_position: queue.len(),
            relaxed_slow: false,
            lateral_floor,
        })
    }

    /// Earliest queue position where the arrival fits without disturbing
    /// anyone already committed: behind every same-lane vehicle, past the
    /// zone occupancy of every earlier conflicting vehicle, and clear of
    /// every conflicting follower by both its own occupancy and the
    /// conflict time headway. Returns `None` when no interior slot works.
    #[allow(clippy::too_many_arguments)]
    fn slot_scan(
        &self,
        queue: &MergeQueue,
        route: &Route,
        zone: Zone,
        zone_length: f64,
        candidate: f64,
        seg_start_time: f64,
        seg_start_speed: f64,
        seg_distance: f64,
    ) -> Result<Option<ZonePlan>, CoordinationError> {
        let entries = queue.entries();
        let first_p = entries
            .iter()
            .rposition(|e| e.lane == route.lane)
            .map_or(0, |i| i + 1);

        let mut rear_term: Option<f64> = None;
        for k in entries.iter().filter(|e| e.lane == route.lane) {
            let speed = k
                .merge_speed
                .ok_or(CoordinationError::MissingMergeSpeed(k.vehicle))?;
            let term = k.merge_time + headway(speed, &self.cfg)? / speed;
            rear_term = Some(rear_term.map_or(term, |r: f64| r.max(term)));
        }

        for p in first_p..entries.len() {
            let mut t = candidate;
            if let Some(r) = rear_term {
                t = t.max(r);
            }
            if p > 0 {
                t = t.max(entries[p - 1].merge_time);
            }
            for e in &entries[..p] {
                if relation_of(e.direction, e.lane, route.direction, route.lane)
                    == Relation::Conflicting
                {
                    let speed = e
                        .merge_speed
                        .ok_or(CoordinationError::MissingMergeSpeed(e.vehicle))?;
                    t = t.max(e.merge_time + zone_length / speed.max(MIN_BOOKKEEPING_SPEED));
                }
            }
            if t > entries[p].merge_time {
                continue;
            }
            let est_speed = leg_speed_estimate(seg_distance, t - seg_start_time, seg_start_speed);
            let occupancy_end = t + zone_length / est_speed;
            let clear_of_followers = entries[p..].iter().all(|f| {
                relation_of(f.direction, f.lane, route.direction, route.lane)
                    != Relation::Conflicting
                    || (f.merge_time >= occupancy_end - 1e-9
                        && f.merge_time >= t + self.cfg.conflict_time_headway - 1e-9)
            });
            if clear_of_followers {
                return Ok(Some(ZonePlan {
                    zone,
                    merge_time: t,
                    est_merge_speed: 0.0,
                    case: ScheduleCase::SlotInserted,
                    insert_position: p,
                    relaxed_slow: false,
                    lateral_floor: false,
                }));
            }
        }
        Ok(None)
    }

    fn reorder_allowed(
        &self,
        queue: &MergeQueue,
        route: &Route,
        zone_length: f64,
        candidate: f64,
        est_speed: f64,
    ) -> Result<bool, CoordinationError> {
        let own_occupancy = zone_occupancy(candidate, est_speed, zone_length)?;
        for entry in &queue.entries {
            let relation = relation_of(entry.direction, entry.lane, route.direction, route.lane);
            if relation == Relation::SameLane {
                return Ok(false);
            }
            if relation != Relation::Conflicting {
                continue;
            }
            if (candidate - entry.merge_time).abs() < self.cfg.conflict_time_headway {
                return Ok(false);
            }
            let speed = entry
                .merge_speed
                .ok_or(CoordinationError::MissingMergeSpeed(entry.vehicle))?;
            let other = zone_occupancy(entry.merge_time, speed.max(MIN_BOOKKEEPING_SPEED), zone_length)?;
            if own_occupancy.overlaps_interior(&other, 1e-9) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Commits a proposal to the queues. `merge_speeds`, when given, are
    /// the realized speeds from the solved trajectory, aligned with the
    /// proposal's zones; otherwise the leg estimates are recorded.
    pub fn commit(
        &mut self,
        vehicle: &Vehicle,
        proposal: &Proposal,
        merge_speeds: Option<&[f64]>,
    ) -> Result<Schedule, CoordinationError> {
        let route = self.route(vehicle.route)?.clone();
        let mut zones = Vec::with_capacity(proposal.zones.len());
        for (idx, plan) in proposal.zones.iter().enumerate() {
            let mut speed = merge_speeds
                .map(|s| s[idx])
                .unwrap_or(plan.est_merge_speed);
            if speed < MIN_BOOKKEEPING_SPEED {
                self.events.push(format!(
                    "vehicle {} zone {}: merge speed {speed:.3} floored for occupancy bookkeeping",
                    vehicle.id, plan.zone
                ));
                speed = MIN_BOOKKEEPING_SPEED;
            }
            self.queues[plan.zone.index()].insert(
                plan.insert_position,
                QueueEntry {
                    vehicle: vehicle.id,
                    lane: route.lane,
                    direction: route.direction,
                    merge_time: plan.merge_time,
                    merge_speed: Some(speed),
                },
            );
            match plan.case {
                ScheduleCase::Reordered => self.events.push(format!(
                    "vehicle {} reordered ahead in zone {} queue at position {}",
                    vehicle.id, plan.zone, plan.insert_position
                )),
                ScheduleCase::SlotInserted => self.events.push(format!(
                    "vehicle {} slotted into zone {} queue at position {}",
                    vehicle.id, plan.zone, plan.insert_position
                )),
                _ => {}
            }
            if plan.relaxed_slow {
                self.events.push(format!(
                    "vehicle {} zone {}: merge time {:.3} beyond the minimum-speed run; kept for safety",
                    vehicle.id, plan.zone, plan.merge_time
                ));
            }
            if plan.lateral_floor {
                self.events.push(format!(
                    "vehicle {} zone {}: occupancy of an earlier conflicting vehicle set the merge time",
                    vehicle.id, plan.zone
                ));
            }
            zones.push(ZoneSchedule {
                zone: plan.zone,
                merge_time: plan.merge_time,
                merge_speed: speed,
                case: plan.case,
                relaxed_slow: plan.relaxed_slow,
                lateral_floor: plan.lateral_floor,
            });
        }
        for queue in &self.queues {
            debug_assert!(queue.is_time_ordered());
        }
        let last = zones.last().expect("route has at least one zone");
        let exit_time =
            last.merge_time + self.geometry.zone_length(last.zone) / last.merge_speed;
        let schedule = Schedule {
            vehicle: vehicle.id,
            route: route.id,
            zones,
            exit_time,
        };
        self.schedules.push(schedule.clone());
        Ok(schedule)
    }

    /// Plans and immediately commits an arrival, recording estimated merge
    /// speeds. Callers that solve the lower-level problem use
    /// [`Coordinator::propose`]/[`Coordinator::commit`] instead so realized
    /// speeds enter the queues.
    pub fn schedule_arrival(&mut self, vehicle: &Vehicle) -> Result<Schedule, CoordinationError> {
        let proposal = self.propose(vehicle, &ZoneFloors::none())?;
        self.commit(vehicle, &proposal, None)
    }

    /// Telescoped inter-vehicle-gap objective: per zone, last scheduled
    /// merge time minus first.
    pub fn throughput_objective(&self) -> f64 {
        self.queues
            .iter()
            .map(|q| match (q.entries.first(), q.entries.last()) {
                (Some(first), Some(last)) => last.merge_time - first.merge_time,
                _ => 0.0,
            })
            .sum()
    }
}

/// Speed floor for occupancy bookkeeping; a committed merge at a lower
/// speed is flagged rather than allowed to blow up transit times.
const MIN_BOOKKEEPING_SPEED: f64 = 0.1;

/// Merge-point speed of the effort-minimal arc over one leg: for a single
/// arc of duration T covering distance s from speed v0, the terminal speed
/// is 1.5·s/T − 0.5·v0. Used for bookkeeping before a trajectory is solved.
fn leg_speed_estimate(distance: f64, duration: f64, start_speed: f64) -> f64 {
    if duration <= 0.0 {
        return MIN_BOOKKEEPING_SPEED;
    }
    (1.5 * distance / duration - 0.5 * start_speed).max(MIN_BOOKKEEPING_SPEED)
}
