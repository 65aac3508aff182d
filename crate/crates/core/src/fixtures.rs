//! Shipped topology and catalog fixtures.

use crate::network::PhysicalNetwork;

/// Ten-node, fifteen-link backbone; every node has 16 cores.
pub const TOPOLOGY_TOML: &str = include_str!("../data/internet2.toml");

pub const CATALOG_TOML: &str = include_str!("../data/catalog.toml");

pub fn internet2() -> PhysicalNetwork {
    PhysicalNetwork::from_toml(TOPOLOGY_TOML).expect("shipped topology is valid")
}
