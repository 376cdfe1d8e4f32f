//! Matrix-form games: building table-backed allocation games from payoff
//! tensors, and the on-disk format.
//!
//! The file format is TOML:
//!
//! ```toml
//! players = 2
//! resources = ["A", "B", "C"]
//! actions = [[0, 1], [0, 1, 2]]        # per-player indices into `resources`
//! payoffs = [
//!     [6, -3, -3, 0, -1, 0],           # player 0, row-major profile order
//!     [3, 11, 10, 2, 1, 10],           # player 1
//! ]
//! ```
//!
//! Profiles are enumerated in row-major order: player 0's action varies
//! slowest, the last player's fastest.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{
    AllocationInstance, PayoffTable, ProfileIter, PureProfile, ResourceId,
};

/// Serialized matrix game.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixGameFile {
    pub players: usize,
    pub resources: Vec<String>,
    pub actions: Vec<Vec<usize>>,
    pub payoffs: Vec<Vec<f64>>,
}

/// Build a table-backed allocation game from per-profile payoffs.
///
/// `payoffs[n]` lists player `n`'s payoff for every profile in row-major
/// order. The builder validates the allocation-game property: profiles
/// inducing the same load on a player's resource must give her the same
/// payoff (within `tol`; pass `0.0` for integer games).
pub fn from_profile_payoffs(
    action_sets: Vec<Vec<ResourceId>>,
    payoffs: &[Vec<f64>],
    tol: f64,
) -> Result<AllocationInstance> {
    let n_players = action_sets.len();
    if payoffs.len() != n_players {
        return Err(Error::Parse(format!(
            "expected {} payoff rows, got {}",
            n_players,
            payoffs.len()
        )));
    }
    if n_players > 20 {
        return Err(Error::EnumerationTooLarge {
            size: 1u128 << n_players,
            limit: 1 << 20,
        });
    }
    let space: usize = action_sets.iter().map(|s| s.len()).product();
    for (n, row) in payoffs.iter().enumerate() {
        if row.len() != space {
            return Err(Error::Parse(format!(
                "player {n}: expected {space} payoffs (one per profile), got {}",
                row.len()
            )));
        }
    }

    // A throwaway instance to reuse profile/load plumbing during the build.
    let probe = AllocationInstance::from_oracle(action_sets.clone(), |_, _| 0.0)?;
    let mut table = PayoffTable::default();
    for (k, idx) in ProfileIter::new(action_sets.iter().map(|s| s.len()).collect()).enumerate() {
        let profile = PureProfile::from_indices(&probe, &idx)?;
        let loads = probe.loads(&profile);
        for n in 0..n_players {
            let load = &loads[profile.choice(n)];
            let value = payoffs[n][k];
            match table.get(load.resource(), load.mask(), n) {
                Some(existing) if !existing.is_nan() => {
                    if (existing - value).abs() > tol {
                        return Err(Error::NotAllocationGame {
                            player: n,
                            resource: load.resource(),
                            a: existing,
                            b: value,
                        });
                    }
                }
                _ => table.set(load.resource(), load.mask(), n, value),
            }
        }
    }
    AllocationInstance::from_table(action_sets, table)
}

/// Parse a matrix game from its TOML form.
pub fn parse_game_toml(text: &str) -> Result<(AllocationInstance, MatrixGameFile)> {
    let file: MatrixGameFile =
        toml::from_str(text).map_err(|e| Error::Parse(format!("matrix game: {e}")))?;
    if file.actions.len() != file.players {
        return Err(Error::Parse(format!(
            "`actions` lists {} players but `players` = {}",
            file.actions.len(),
            file.players
        )));
    }
    for (n, set) in file.actions.iter().enumerate() {
        for &r in set {
            if r >= file.resources.len() {
                return Err(Error::Parse(format!(
                    "player {n}: action index {r} out of range ({} resources)",
                    file.resources.len()
                )));
            }
        }
    }
    // Integer tensors are compared exactly.
    let integral = file
        .payoffs
        .iter()
        .flatten()
        .all(|v| v.fract() == 0.0);
    let tol = if integral { 0.0 } else { 1e-9 };
    let game = from_profile_payoffs(file.actions.clone(), &file.payoffs, tol)?;
    Ok((game, file))
}

/// Serialize a matrix game description to TOML.
pub fn game_to_toml(file: &MatrixGameFile) -> Result<String> {
    toml::to_string(file).map_err(|e| Error::Parse(format!("serialize: {e}")))
}
