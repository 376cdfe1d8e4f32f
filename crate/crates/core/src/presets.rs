//! Built-in reference instances used by the regression and acceptance
//! suites, loaded from the golden files under `data/` in the repository.

use crate::error::Result;
use crate::game::{parse_game_toml, AllocationInstance};
use crate::wireless::Topology;

/// A 2x2 game whose payoffs already are repercussion utilities.
pub fn two_by_two_game() -> AllocationInstance {
    parse_game_toml(include_str!("../../../data/games/two_by_two.toml"))
        .expect("bundled game parses")
        .0
}

/// Two players over three resources; the companion game has two pure Nash
/// equilibria while the base game has one.
pub fn two_by_three_game() -> AllocationInstance {
    parse_game_toml(include_str!("../../../data/games/two_by_three.toml"))
        .expect("bundled game parses")
        .0
}

/// Three players over two resources; the base game has no pure Nash
/// equilibrium.
pub fn three_player_game() -> AllocationInstance {
    parse_game_toml(include_str!("../../../data/games/three_player.toml"))
        .expect("bundled game parses")
        .0
}

/// The 20-user reference topology (one WiMAX cell, nine WiFi cells).
pub fn fairness_topology() -> Result<Topology> {
    Topology::from_toml_str(include_str!("../../../data/topologies/fairness20.toml"))
}

/// Known locally optimal assignments for [`fairness_topology`]:
/// `efficient` maximizes total throughput (alpha = 0), `fair` the
/// alpha = 2 objective. Entries are indices into each user's choice set
/// (0 = WiMAX, then the listed WiFi cells).
pub struct ReferenceAllocations {
    pub efficient: Vec<usize>,
    pub fair: Vec<usize>,
}

pub fn reference_allocations() -> ReferenceAllocations {
    ReferenceAllocations {
        efficient: vec![2, 1, 2, 1, 1, 1, 1, 2, 2, 2, 1, 1, 2, 2, 2, 0, 2, 1, 1, 1],
        fair: vec![0, 1, 0, 1, 0, 2, 1, 2, 1, 1, 2, 1, 1, 2, 2, 2, 1, 2, 0, 1],
    }
}
