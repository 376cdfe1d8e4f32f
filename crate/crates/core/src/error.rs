//! Error type shared across the crate.

use crate::game::{Player, ResourceId};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("player {0} has an empty action set")]
    EmptyActionSet(Player),

    #[error("player {player} has duplicate resource {resource} in her action set")]
    DuplicateAction { player: Player, resource: ResourceId },

    #[error("resource {resource} is not in player {player}'s action set")]
    ActionNotAvailable { player: Player, resource: ResourceId },

    #[error("player {player} is not part of the queried load on resource {resource}")]
    PlayerNotInLoad { player: Player, resource: ResourceId },

    #[error("payoff undefined for player {player} on resource {resource}, load mask {mask:#b}")]
    UndefinedPayoff {
        player: Player,
        resource: ResourceId,
        mask: u64,
    },

    #[error(
        "payoff tensor violates the allocation-game property: player {player} on resource \
         {resource} gets {a} in one profile and {b} in another with the same load"
    )]
    NotAllocationGame {
        player: Player,
        resource: ResourceId,
        a: f64,
        b: f64,
    },

    #[error(
        "game is not a repercussion-utility game: symmetry violated on resource {resource} \
         (load mask {mask:#b}) for players {a} and {b}, gap {gap}"
    )]
    NotRepercussionGame {
        resource: ResourceId,
        mask: u64,
        a: Player,
        b: Player,
        gap: f64,
    },

    #[error("operation requires a table-backed game (got an oracle-backed one)")]
    RequiresTable,

    #[error("enumeration space has {size} outcomes, above the limit of {limit}")]
    EnumerationTooLarge { size: u128, limit: u128 },

    #[error("invalid mixed profile: {0}")]
    InvalidProfile(String),

    #[error("invalid pure profile: {0}")]
    InvalidPureProfile(String),

    #[error("simplex drift {drift} exceeded tolerance {tol} during integration at t={t}")]
    IntegrationDrift { drift: f64, tol: f64, t: f64 },

    #[error("negative reward {0} passed to the strategy update")]
    NegativeReward(f64),

    #[error(
        "step size times reward is {0} > 1, which would push probabilities out of [0,1]; \
         scale rewards down (divide by an upper bound on the reward)"
    )]
    StepOverflow(f64),

    #[error("learning did not converge within {max_iters} iterations")]
    NonConvergence { max_iters: u64 },

    #[error("alpha-fair utility undefined: throughput {x} must be positive for alpha = {alpha}")]
    NonPositiveThroughput { x: f64, alpha: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid topology: {0}")]
    Topology(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
