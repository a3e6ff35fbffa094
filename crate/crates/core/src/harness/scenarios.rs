//! Scripted traffic used by the evaluation suites. Lanes are the two
//! halves of the 4 m road; cars run at ±1 m, trucks at ±0.7 m.

use crate::sim::{RadarConfig, ScenarioConfig, VehicleKind, VehicleScript};
use crate::tunnel::TunnelConfig;

/// Centerline of the curved suite: about 26 m of lateral drift over 400 m.
pub const CURVED_CENTERLINE: [f64; 4] = [0.0, 0.0, 4e-4, -6e-7];

const RIGHT: f64 = 1.0;
const LEFT: f64 = -1.0;

fn base(name: &str, tunnel: TunnelConfig, vehicles: Vec<VehicleScript>, duration: f64, seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        name: name.into(),
        tunnel,
        radar: RadarConfig::default(),
        vehicles,
        duration,
        seed,
    }
}

fn two_way_traffic() -> Vec<VehicleScript> {
    use VehicleKind::Car;
    vec![
        VehicleScript::lane(1, Car, RIGHT, 30.0, 380.0, 20.0),
        VehicleScript::lane(2, Car, LEFT, 380.0, 30.0, 16.0).starting_at(1.0),
        VehicleScript::lane(3, Car, RIGHT, 30.0, 380.0, 22.0).starting_at(6.0),
        VehicleScript::lane(4, Car, LEFT, 380.0, 30.0, 18.0).starting_at(7.0),
    ]
}

fn straight_tunnel() -> TunnelConfig {
    TunnelConfig::default()
}

fn curved_tunnel() -> TunnelConfig {
    TunnelConfig::default().with_centerline(CURVED_CENTERLINE.to_vec())
}

fn mixed_vehicles() -> Vec<VehicleScript> {
    use VehicleKind::{Car, Truck};
    vec![
        VehicleScript::lane(1, Truck, 0.7, 30.0, 380.0, 15.0),
        VehicleScript::lane(2, Car, LEFT, 380.0, 30.0, 20.0),
        VehicleScript::lane(3, Car, RIGHT, 30.0, 380.0, 25.0).starting_at(8.0),
        VehicleScript::lane(4, Truck, -0.7, 380.0, 30.0, 14.0).starting_at(4.0),
        VehicleScript::lane(5, Car, LEFT, 380.0, 30.0, 22.0).starting_at(10.0),
    ]
}

/// Two slow cars 1.5 m apart at 2.5 m/s, plus one in the other direction.
fn queue_vehicles() -> Vec<VehicleScript> {
    use VehicleKind::Car;
    vec![
        VehicleScript::lane(1, Car, RIGHT, 100.0, 150.0, 2.5),
        VehicleScript::lane(2, Car, RIGHT, 94.0, 144.0, 2.5),
        VehicleScript::lane(3, Car, LEFT, 200.0, 160.0, 2.0),
    ]
}

pub fn straight(seed: u64) -> ScenarioConfig {
    base("straight", straight_tunnel(), two_way_traffic(), 20.0, seed)
}

pub fn curved(seed: u64) -> ScenarioConfig {
    base("curved", curved_tunnel(), two_way_traffic(), 20.0, seed)
}

pub fn mixed_traffic(seed: u64) -> ScenarioConfig {
    base("mixed", straight_tunnel(), mixed_vehicles(), 22.0, seed)
}

pub fn curved_mixed_traffic(seed: u64) -> ScenarioConfig {
    base("curved-mixed", curved_tunnel(), mixed_vehicles(), 22.0, seed)
}

/// Id of the hidden car in [`occlusion`].
pub const OCCLUDED_ID: u32 = 2;

/// A truck leads a car in the same lane. The car keeps 1.8 times the
/// truck's distance from the radar, so the truck always hides it from the
/// direct path while the roof bounce clears the truck.
pub fn occlusion(seed: u64) -> ScenarioConfig {
    use VehicleKind::{Car, Truck};
    let vehicles = vec![
        VehicleScript::lane(1, Truck, 0.7, 45.0, 195.0, 10.0),
        VehicleScript::lane(OCCLUDED_ID, Car, RIGHT, 81.0, 351.0, 18.0),
    ];
    base("occlusion", straight_tunnel(), vehicles, 15.0, seed)
}

pub fn congestion(seed: u64) -> ScenarioConfig {
    base("congestion", straight_tunnel(), queue_vehicles(), 15.0, seed)
}

pub fn curved_congestion(seed: u64) -> ScenarioConfig {
    base("curved-congestion", curved_tunnel(), queue_vehicles(), 15.0, seed)
}

/// Every scenario once, each with its own seed derived from `seed`.
pub fn suite(seed: u64) -> Vec<ScenarioConfig> {
    NAMES
        .iter()
        .enumerate()
        .map(|(k, n)| by_name(n, seed.wrapping_mul(31).wrapping_add(k as u64)).unwrap())
        .collect()
}

pub const NAMES: [&str; 7] = [
    "straight",
    "curved",
    "mixed",
    "curved-mixed",
    "occlusion",
    "congestion",
    "curved-congestion",
];

pub fn by_name(name: &str, seed: u64) -> Option<ScenarioConfig> {
    Some(match name {
        "straight" => straight(seed),
        "curved" => curved(seed),
        "mixed" => mixed_traffic(seed),
        "curved-mixed" => curved_mixed_traffic(seed),
        "occlusion" => occlusion(seed),
        "congestion" => congestion(seed),
        "curved-congestion" => curved_congestion(seed),
        _ => return None,
    })
}
