//! Random allocation-game instances for property tests and experiments.

use rand::Rng;

use crate::error::Result;
use crate::game::{AllocationInstance, PayoffTable, ResourceId};

/// Shape of a random table-backed allocation game.
#[derive(Clone, Debug)]
pub struct RandomGameConfig {
    pub n_players: usize,
    pub n_resources: usize,
    /// Action-set size bounds per player (inclusive).
    pub min_actions: usize,
    pub max_actions: usize,
    /// Integer payoff range (inclusive).
    pub payoff_lo: i64,
    pub payoff_hi: i64,
}

impl Default for RandomGameConfig {
    fn default() -> Self {
        Self {
            n_players: 3,
            n_resources: 3,
            min_actions: 2,
            max_actions: 3,
            payoff_lo: -9,
            payoff_hi: 9,
        }
    }
}

/// Sample a random allocation game with integer payoffs.
///
/// The payoff table is filled for every `(resource, subset-of-eligible-
/// players)` pair, so repercussion utilities are defined even for loads not
/// reachable from any profile.
pub fn random_allocation_game<R: Rng>(cfg: &RandomGameConfig, rng: &mut R) -> Result<AllocationInstance> {
    assert!(cfg.min_actions >= 1 && cfg.min_actions <= cfg.max_actions);
    assert!(cfg.max_actions <= cfg.n_resources);
    assert!(cfg.n_players <= 16, "random games are table-backed");

    let mut action_sets: Vec<Vec<ResourceId>> = Vec::with_capacity(cfg.n_players);
    for _ in 0..cfg.n_players {
        let k = rng.random_range(cfg.min_actions..=cfg.max_actions);
        // Partial Fisher-Yates for k distinct resources.
        let mut pool: Vec<ResourceId> = (0..cfg.n_resources).collect();
        for i in 0..k {
            let j = rng.random_range(i..pool.len());
            pool.swap(i, j);
        }
        let mut set: Vec<ResourceId> = pool[..k].to_vec();
        set.sort_unstable();
        action_sets.push(set);
    }

    let mut table = PayoffTable::default();
    for r in 0..cfg.n_resources {
        let eligible: Vec<usize> = (0..cfg.n_players)
            .filter(|&n| action_sets[n].contains(&r))
            .collect();
        for subset in 1u64..(1 << eligible.len()) {
            let mut mask = 0u64;
            for (pos, &n) in eligible.iter().enumerate() {
                if subset & (1 << pos) != 0 {
                    mask |= 1 << n;
                }
            }
            for &n in &eligible {
                if mask & (1 << n) != 0 {
                    let v = rng.random_range(cfg.payoff_lo..=cfg.payoff_hi) as f64;
                    table.set(r, mask, n, v);
                }
            }
        }
    }
    AllocationInstance::from_table(action_sets, table)
}
