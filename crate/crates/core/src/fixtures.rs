//! Bundled example networks.

use crate::dsl::parse_network;
use crate::network::Network;

/// Convex polygons, rhombuses and squares with the fuzzy figures Rb1 and Sq1.
pub const POLYGONS: &str = include_str!("../fixtures/polygons.foodn");

/// Two classes with nothing in common.
pub const DISJOINT: &str = include_str!("../fixtures/disjoint.foodn");

fn load(src: &str) -> Network {
    parse_network(src).expect("bundled fixture parses").0
}

pub fn polygons() -> Network {
    load(POLYGONS)
}

pub fn disjoint() -> Network {
    load(DISJOINT)
}
