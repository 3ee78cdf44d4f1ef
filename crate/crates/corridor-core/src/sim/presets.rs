//! Built-in scenarios.

use super::{Scenario, Spawn};
use crate::model::{CorridorGeometry, RouteId};

/// Looks up a built-in scenario by name.
pub fn preset(name: &str) -> Option<Scenario> {
    match name {
        "mcity14" => Some(mcity14()),
        _ => None,
    }
}

/// Two-intersection corridor study: 100 m control zones, 18 m and 34 m
/// merging zones, and 14 vehicles over six routes (five eastbound, four
/// westbound, two southbound, three northbound) packed tightly enough that
/// every zone sees crossing traffic.
pub fn mcity14() -> Scenario {
    let geometry = CorridorGeometry::new(100.0, 150.0, [18.0, 34.0]).expect("preset geometry");
    let spawn = |time: f64, route: u8, speed: f64| Spawn {
        time,
        route: RouteId(route),
        speed,
    };
    // Route ids: 0 east1, 1 east2, 2 west1, 3 west2, 4 north, 5 south.
    let spawns = vec![
        spawn(0.0, 4, 10.0),
        spawn(0.5, 0, 11.0),
        spawn(1.0, 5, 12.0),
        spawn(1.5, 2, 10.0),
        spawn(3.5, 4, 11.0),
        spawn(4.0, 1, 12.0),
        spawn(4.5, 3, 12.0),
        spawn(5.5, 5, 12.0),
        spawn(6.0, 2, 11.0),
        spawn(6.5, 0, 12.0),
        spawn(9.0, 1, 12.0),
        spawn(9.5, 3, 11.0),
        spawn(10.0, 4, 11.0),
        spawn(10.5, 0, 10.0),
    ];
    Scenario::with_standard_routes(geometry, spawns)
}
