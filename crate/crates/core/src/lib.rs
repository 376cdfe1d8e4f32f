//! Allocation games with repercussion utilities, replicator dynamics, a
//! distributed strategy-learning algorithm, wireless throughput models, and
//! a scenario simulator for user-network association.

pub mod dynamics;
pub mod error;
pub mod fairness;
pub mod game;
pub mod learning;
pub mod sim;
pub mod presets;
pub mod rng;
pub mod wireless;

pub use error::{Error, Result};
pub use game::{
    is_repercussion_game, load_vector, recover_base_payoffs, repercussion_transform,
    AllocationInstance, CompanionGame, LoadVector, MixedProfile, Player, PureProfile, ResourceId,
    SymmetryCheck,
};
pub use wireless::{CellModels, Topology, WifiModel, WimaxModel};
