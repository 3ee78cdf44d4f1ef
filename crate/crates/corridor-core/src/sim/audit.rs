//! Collision audit over completed runs. The audit only reads the result:
//! rear-end gaps come from the sampled trajectories, lateral exposure from
//! the recorded zone transits, so doctored results are flagged rather than
//! trusted.

use super::{Mode, Scenario, VehicleResult};
use crate::model::{headway, relation_of, Relation, VehicleId, Zone};

/// Audit sample tolerance on the rear-end gap (m).
const GAP_TOLERANCE: f64 = 1e-6;
/// Interior-overlap tolerance on zone occupancies (s).
const OVERLAP_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// Same-lane gap under the speed-dependent headway policy.
    RearEndPolicy,
    /// Same-lane gap under the physical contact threshold.
    RearEndContact,
    /// Conflicting pair simultaneously inside a merging zone.
    LateralOverlap,
}

impl std::fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ViolationKind::RearEndPolicy => "rear-end-policy",
            ViolationKind::RearEndContact => "rear-end-contact",
            ViolationKind::LateralOverlap => "lateral-overlap",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub first: VehicleId,
    pub second: VehicleId,
    pub zone: Option<Zone>,
    pub time: f64,
    /// Gap shortfall in meters, or overlap duration in seconds.
    pub magnitude: f64,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.zone {
            Some(zone) => write!(
                f,
                "{} vehicles {} and {} zone {} at t={:.3}s by {:.6}",
                self.kind, self.first, self.second, zone, self.time, self.magnitude
            ),
            None => write!(
                f,
                "{} vehicles {} and {} at t={:.3}s by {:.6}",
                self.kind, self.first, self.second, self.time, self.magnitude
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AuditReport {
    pub violations: Vec<Violation>,
}

impl AuditReport {
    /// Violations that fail the mode's contract: coordinated runs must hold
    /// the full headway policy; the human-driver baseline is audited for
    /// physical contact and lateral exposure only.
    pub fn blocking(&self, mode: Mode) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(move |v| match mode {
            Mode::Optimized => true,
            Mode::Baseline => v.kind != ViolationKind::RearEndPolicy,
        })
    }

    pub fn is_clean(&self, mode: Mode) -> bool {
        self.blocking(mode).next().is_none()
    }
}

/// Linear interpolation of a sampled trajectory; `None` outside its span.
fn position_at(samples: &[super::Sample], t: f64) -> Option<f64> {
    let first = samples.first()?;
    let last = samples.last()?;
    if t < first.time - 1e-9 || t > last.time + 1e-9 {
        return None;
    }
    let idx = samples.partition_point(|s| s.time <= t);
    if idx == 0 {
        return Some(first.position);
    }
    if idx >= samples.len() {
        return Some(last.position);
    }
    let (a, b) = (&samples[idx - 1], &samples[idx]);
    let span = b.time - a.time;
    if span <= 0.0 {
        return Some(b.position);
    }
    let frac = (t - a.time) / span;
    Some(a.position + frac * (b.position - a.position))
}

/// Audits every same-lane pair against the rear-end headway and every
/// conflicting pair against zone-occupancy disjointness. One violation per
/// pair and kind is reported, carrying the worst excursion.
pub fn collision_audit(vehicles: &[VehicleResult], scenario: &Scenario) -> AuditReport {
    let cfg = &scenario.constraints;
    let mut violations = Vec::new();

    for i in 0..vehicles.len() {
        for j in (i + 1)..vehicles.len() {
            let (a, b) = (&vehicles[i], &vehicles[j]);
            let route_a = match scenario.route(a.vehicle.route) {
                Ok(r) => r,
                Err(_) => continue,
            };
            let route_b = match scenario.route(b.vehicle.route) {
                Ok(r) => r,
                Err(_) => continue,
            };
            let relation =
                relation_of(route_a.direction, route_a.lane, route_b.direction, route_b.lane);
            match relation {
                Relation::SameLane => {
                    // Earlier entrant leads; positions share the lane origin.
                    let (lead, follow) = if a.vehicle.entry_time <= b.vehicle.entry_time {
                        (a, b)
                    } else {
                        (b, a)
                    };
                    let mut worst_policy: Option<(f64, f64)> = None;
                    let mut worst_contact: Option<(f64, f64)> = None;
                    for s in &follow.samples {
                        let Some(lead_pos) = position_at(&lead.samples, s.time) else {
                            continue;
                        };
                        let gap = lead_pos - s.position;
                        let needed = headway(s.speed.max(0.0), cfg).unwrap_or(cfg.headway_offset);
                        if gap < needed - GAP_TOLERANCE {
                            let deficit = needed - gap;
                            if worst_policy.is_none_or(|(m, _)| deficit > m) {
                                worst_policy = Some((deficit, s.time));
                            }
                        }
                        if gap < cfg.contact_gap - GAP_TOLERANCE {
                            let deficit = cfg.contact_gap - gap;
                            if worst_contact.is_none_or(|(m, _)| deficit > m) {
                                worst_contact = Some((deficit, s.time));
                            }
                        }
                    }
                    if let Some((magnitude, time)) = worst_policy {
                        violations.push(Violation {
                            kind: ViolationKind::RearEndPolicy,
                            first: lead.vehicle.id,
                            second: follow.vehicle.id,
                            zone: None,
                            time,
                            magnitude,
                        });
                    }
                    if let Some((magnitude, time)) = worst_contact {
                        violations.push(Violation {
                            kind: ViolationKind::RearEndContact,
                            first: lead.vehicle.id,
                            second: follow.vehicle.id,
                            zone: None,
                            time,
                            magnitude,
                        });
                    }
                }
                Relation::Conflicting => {
                    for ev_a in &a.zone_events {
                        for ev_b in &b.zone_events {
                            if ev_a.zone != ev_b.zone {
                                continue;
                            }
                            let ia = ev_a.interval();
                            let ib = ev_b.interval();
                            if ia.overlaps_interior(&ib, OVERLAP_TOLERANCE) {
                                let overlap =
                                    ia.end.min(ib.end) - ia.start.max(ib.start);
                                violations.push(Violation {
                                    kind: ViolationKind::LateralOverlap,
                                    first: a.vehicle.id,
                                    second: b.vehicle.id,
                                    zone: Some(ev_a.zone),
                                    time: ia.start.max(ib.start),
                                    magnitude: overlap,
                                });
                            }
                        }
                    }
                }
                Relation::Opposite => {}
            }
        }
    }

    violations.sort_by(|x, y| {
        x.time
            .partial_cmp(&y.time)
            .unwrap()
            .then(x.first.cmp(&y.first))
            .then(x.second.cmp(&y.second))
    });
    AuditReport { violations }
}
