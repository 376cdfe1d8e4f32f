//! Allocation games and their repercussion-utility companion games.
//!
//! An *allocation game* is a finite game in which a player's payoff depends
//! only on the set of players sharing her chosen resource (the *load* of
//! that resource). The *companion game* replaces each payoff with a
//! repercussion utility: the player's own payoff minus the total payoff
//! increase her departure would grant the players she is co-located with.
//! Companion games are exact potential games whose potential is the sum of
//! the original payoffs, which is what the learning and dynamics modules
//! build on.

mod matrix;
mod mixed;
pub mod random;

pub use matrix::{from_profile_payoffs, game_to_toml, parse_game_toml, MatrixGameFile};
pub use mixed::MixedProfile;

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};

pub type Player = usize;
pub type ResourceId = usize;

/// Enumeration guard for exact expectations and exhaustive scans.
pub const MAX_ENUM: u128 = 1_000_000;

/// The set of players connected to one resource, as a 0/1 vector over all
/// players of the game.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoadVector {
    resource: ResourceId,
    bits: Vec<bool>,
}

impl LoadVector {
    pub fn new(resource: ResourceId, bits: Vec<bool>) -> Self {
        Self { resource, bits }
    }

    /// Load with the given players present.
    pub fn from_players(resource: ResourceId, n_players: usize, players: &[Player]) -> Self {
        let mut bits = vec![false; n_players];
        for &p in players {
            bits[p] = true;
        }
        Self { resource, bits }
    }

    pub fn from_mask(resource: ResourceId, n_players: usize, mask: u64) -> Self {
        let bits = (0..n_players).map(|n| mask & (1 << n) != 0).collect();
        Self { resource, bits }
    }

    pub fn resource(&self) -> ResourceId {
        self.resource
    }

    pub fn n_players(&self) -> usize {
        self.bits.len()
    }

    pub fn contains(&self, n: Player) -> bool {
        self.bits.get(n).copied().unwrap_or(false)
    }

    /// Number of connected players.
    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn players(&self) -> impl Iterator<Item = Player> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(n, &b)| b.then_some(n))
    }

    /// The load with player `n` removed (`l - e_n`); `n` must be present.
    pub fn without(&self, n: Player) -> Result<LoadVector> {
        if !self.contains(n) {
            return Err(Error::PlayerNotInLoad {
                player: n,
                resource: self.resource,
            });
        }
        let mut bits = self.bits.clone();
        bits[n] = false;
        Ok(LoadVector {
            resource: self.resource,
            bits,
        })
    }

    /// Bitmask form, usable as a table key. Only defined for games small
    /// enough to be table-backed.
    pub fn mask(&self) -> u64 {
        debug_assert!(self.bits.len() <= 64);
        self.bits
            .iter()
            .enumerate()
            .fold(0u64, |m, (n, &b)| if b { m | (1 << n) } else { m })
    }
}

/// A deterministic assignment of every player to one of her resources.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PureProfile {
    choices: Vec<ResourceId>,
}

impl PureProfile {
    /// Build from per-player resource choices, validated against the game.
    pub fn new(game: &AllocationInstance, choices: Vec<ResourceId>) -> Result<Self> {
        if choices.len() != game.n_players() {
            return Err(Error::InvalidPureProfile(format!(
                "expected {} choices, got {}",
                game.n_players(),
                choices.len()
            )));
        }
        for (n, &r) in choices.iter().enumerate() {
            if !game.action_set(n).contains(&r) {
                return Err(Error::ActionNotAvailable {
                    player: n,
                    resource: r,
                });
            }
        }
        Ok(Self { choices })
    }

    /// Build from per-player indices into each action set.
    pub fn from_indices(game: &AllocationInstance, indices: &[usize]) -> Result<Self> {
        let choices = indices
            .iter()
            .enumerate()
            .map(|(n, &i)| {
                game.action_set(n)
                    .get(i)
                    .copied()
                    .ok_or(Error::InvalidPureProfile(format!(
                        "action index {i} out of range for player {n}"
                    )))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { choices })
    }

    pub fn choices(&self) -> &[ResourceId] {
        &self.choices
    }

    pub fn choice(&self, n: Player) -> ResourceId {
        self.choices[n]
    }

    /// Per-player indices into the action sets.
    pub fn indices(&self, game: &AllocationInstance) -> Vec<usize> {
        self.choices
            .iter()
            .enumerate()
            .map(|(n, &r)| game.action_index(n, r).expect("validated profile"))
            .collect()
    }
}

/// Load of `resource` under `profile`: bit `n` set iff player `n` picked it.
pub fn load_vector(profile: &PureProfile, resource: ResourceId) -> LoadVector {
    let bits = profile.choices.iter().map(|&c| c == resource).collect();
    LoadVector { resource, bits }
}

/// Dense payoff storage keyed by `(resource, load mask)`; the value holds
/// one payoff per connected player, in ascending player order.
#[derive(Clone, Debug, Default)]
pub struct PayoffTable {
    entries: HashMap<(ResourceId, u64), Vec<f64>>,
}

impl PayoffTable {
    fn slot(mask: u64, n: Player) -> usize {
        // Rank of player n among the set bits.
        (mask & ((1u64 << n) - 1)).count_ones() as usize
    }

    pub fn get(&self, resource: ResourceId, mask: u64, n: Player) -> Option<f64> {
        self.entries
            .get(&(resource, mask))
            .map(|v| v[Self::slot(mask, n)])
    }

    pub fn set(&mut self, resource: ResourceId, mask: u64, n: Player, value: f64) {
        let v = self
            .entries
            .entry((resource, mask))
            .or_insert_with(|| vec![f64::NAN; mask.count_ones() as usize]);
        v[Self::slot(mask, n)] = value;
    }

    pub fn iter(&self) -> impl Iterator<Item = (ResourceId, u64, Player, f64)> + '_ {
        self.entries.iter().flat_map(|(&(r, mask), vals)| {
            (0..64)
                .filter(move |n| mask & (1 << n) != 0)
                .zip(vals.iter())
                .map(move |(n, &v)| (r, mask, n as Player, v))
        })
    }

    /// (min, max) over all defined entries.
    pub fn bounds(&self) -> Option<(f64, f64)> {
        let mut it = self.entries.values().flatten().filter(|v| !v.is_nan());
        let first = *it.next()?;
        let (mut lo, mut hi) = (first, first);
        for &v in it {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        Some((lo, hi))
    }
}

#[derive(Clone)]
enum PayoffOracle {
    Table(Arc<PayoffTable>),
    Fn(Arc<dyn Fn(Player, &LoadVector) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for PayoffOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PayoffOracle::Table(t) => write!(f, "Table({} entries)", t.entries.len()),
            PayoffOracle::Fn(_) => write!(f, "Fn(..)"),
        }
    }
}

/// A finite allocation game: per-player action sets over a common pool of
/// resources, plus a payoff oracle that only sees the load of the queried
/// resource.
#[derive(Clone, Debug)]
pub struct AllocationInstance {
    action_sets: Vec<Vec<ResourceId>>,
    n_resources: usize,
    oracle: PayoffOracle,
}

impl AllocationInstance {
    fn validate_action_sets(action_sets: &[Vec<ResourceId>]) -> Result<usize> {
        let mut n_resources = 0;
        for (n, set) in action_sets.iter().enumerate() {
            if set.is_empty() {
                return Err(Error::EmptyActionSet(n));
            }
            let mut seen = std::collections::HashSet::new();
            for &r in set {
                if !seen.insert(r) {
                    return Err(Error::DuplicateAction {
                        player: n,
                        resource: r,
                    });
                }
                n_resources = n_resources.max(r + 1);
            }
        }
        Ok(n_resources)
    }

    /// Game backed by a payoff callback (used for model-built games where
    /// payoffs are computed on demand).
    pub fn from_oracle<F>(action_sets: Vec<Vec<ResourceId>>, payoff: F) -> Result<Self>
    where
        F: Fn(Player, &LoadVector) -> f64 + Send + Sync + 'static,
    {
        let n_resources = Self::validate_action_sets(&action_sets)?;
        Ok(Self {
            action_sets,
            n_resources,
            oracle: PayoffOracle::Fn(Arc::new(payoff)),
        })
    }

    /// Game backed by a dense payoff table.
    pub fn from_table(action_sets: Vec<Vec<ResourceId>>, table: PayoffTable) -> Result<Self> {
        let n_resources = Self::validate_action_sets(&action_sets)?;
        Ok(Self {
            action_sets,
            n_resources,
            oracle: PayoffOracle::Table(Arc::new(table)),
        })
    }

    pub fn n_players(&self) -> usize {
        self.action_sets.len()
    }

    pub fn n_resources(&self) -> usize {
        self.n_resources
    }

    pub fn action_sets(&self) -> &[Vec<ResourceId>] {
        &self.action_sets
    }

    pub fn action_set(&self, n: Player) -> &[ResourceId] {
        &self.action_sets[n]
    }

    pub fn action_index(&self, n: Player, resource: ResourceId) -> Option<usize> {
        self.action_sets[n].iter().position(|&r| r == resource)
    }

    pub fn is_table(&self) -> bool {
        matches!(self.oracle, PayoffOracle::Table(_))
    }

    pub(crate) fn table(&self) -> Option<&PayoffTable> {
        match &self.oracle {
            PayoffOracle::Table(t) => Some(t),
            PayoffOracle::Fn(_) => None,
        }
    }

    /// (min, max) payoff for table-backed games.
    pub fn payoff_bounds(&self) -> Option<(f64, f64)> {
        self.table().and_then(|t| t.bounds())
    }

    /// Payoff of player `n` under the given load. The player must be part
    /// of the load (`l_n = 1`).
    pub fn payoff(&self, n: Player, load: &LoadVector) -> Result<f64> {
        if !load.contains(n) {
            return Err(Error::PlayerNotInLoad {
                player: n,
                resource: load.resource,
            });
        }
        match &self.oracle {
            PayoffOracle::Table(t) => {
                t.get(load.resource, load.mask(), n)
                    .filter(|v| !v.is_nan())
                    .ok_or(Error::UndefinedPayoff {
                        player: n,
                        resource: load.resource,
                        mask: load.mask(),
                    })
            }
            PayoffOracle::Fn(f) => Ok(f(n, load)),
        }
    }

    /// Payoff lookup from raw membership bits, avoiding a `LoadVector`
    /// allocation for table-backed games (hot path of the expectation and
    /// field evaluations).
    pub(crate) fn payoff_from_bits(
        &self,
        n: Player,
        resource: ResourceId,
        bits: &[bool],
    ) -> Result<f64> {
        if !bits[n] {
            return Err(Error::PlayerNotInLoad {
                player: n,
                resource,
            });
        }
        match &self.oracle {
            PayoffOracle::Table(t) => {
                let mut mask = 0u64;
                for (k, &b) in bits.iter().enumerate() {
                    if b {
                        mask |= 1 << k;
                    }
                }
                t.get(resource, mask, n)
                    .filter(|v| !v.is_nan())
                    .ok_or(Error::UndefinedPayoff {
                        player: n,
                        resource,
                        mask,
                    })
            }
            PayoffOracle::Fn(f) => Ok(f(n, &LoadVector::new(resource, bits.to_vec()))),
        }
    }

    /// Same game with every payoff increased by `c`. Unilateral preferences
    /// and hence pure Nash sets are unchanged.
    pub fn shift_payoffs(&self, c: f64) -> AllocationInstance {
        let oracle = match &self.oracle {
            PayoffOracle::Table(t) => {
                let mut shifted = PayoffTable::default();
                for (r, mask, n, v) in t.iter() {
                    shifted.set(r, mask, n, v + c);
                }
                PayoffOracle::Table(Arc::new(shifted))
            }
            PayoffOracle::Fn(f) => {
                let f = Arc::clone(f);
                PayoffOracle::Fn(Arc::new(move |n, l| f(n, l) + c))
            }
        };
        AllocationInstance {
            action_sets: self.action_sets.clone(),
            n_resources: self.n_resources,
            oracle,
        }
    }

    /// Number of pure profiles.
    pub fn profile_space(&self) -> u128 {
        self.action_sets
            .iter()
            .map(|s| s.len() as u128)
            .product()
    }

    /// Iterate all pure profiles as per-player action indices, in
    /// lexicographic order (player 0 varies slowest).
    pub fn profile_indices(&self) -> ProfileIter {
        ProfileIter::new(self.action_sets.iter().map(|s| s.len()).collect())
    }

    /// Loads of every resource under a profile, indexed by resource id.
    pub fn loads(&self, profile: &PureProfile) -> Vec<LoadVector> {
        (0..self.n_resources)
            .map(|r| load_vector(profile, r))
            .collect()
    }

    /// Sum of all players' payoffs at a pure profile. For a game used as
    /// the base of a companion game, this is the exact potential.
    pub fn potential_pure(&self, profile: &PureProfile) -> Result<f64> {
        let loads = self.loads(profile);
        let mut total = 0.0;
        for n in 0..self.n_players() {
            total += self.payoff(n, &loads[profile.choice(n)])?;
        }
        Ok(total)
    }

    /// True iff no player has a strictly improving unilateral deviation.
    pub fn is_pure_nash(&self, profile: &PureProfile) -> Result<bool> {
        Ok(self.improving_deviation(profile)?.is_none())
    }

    /// First strictly improving unilateral deviation, if any:
    /// `(player, new resource, gain)`.
    pub fn improving_deviation(
        &self,
        profile: &PureProfile,
    ) -> Result<Option<(Player, ResourceId, f64)>> {
        let loads = self.loads(profile);
        for n in 0..self.n_players() {
            let current = self.payoff(n, &loads[profile.choice(n)])?;
            for &alt in self.action_set(n) {
                if alt == profile.choice(n) {
                    continue;
                }
                let mut dev = loads[alt].clone();
                dev.bits[n] = true;
                let v = self.payoff(n, &dev)?;
                if v > current {
                    return Ok(Some((n, alt, v - current)));
                }
            }
        }
        Ok(None)
    }

    /// All pure Nash equilibria, in lexicographic profile order.
    pub fn pure_nash_set(&self) -> Result<Vec<PureProfile>> {
        if self.profile_space() > MAX_ENUM {
            return Err(Error::EnumerationTooLarge {
                size: self.profile_space(),
                limit: MAX_ENUM,
            });
        }
        let mut out = Vec::new();
        for idx in self.profile_indices() {
            let p = PureProfile::from_indices(self, &idx)?;
            if self.is_pure_nash(&p)? {
                out.push(p);
            }
        }
        Ok(out)
    }

    /// Materialize an oracle-backed game into a table (small games only);
    /// table-backed games are returned as-is.
    pub fn tabulated(&self) -> Result<AllocationInstance> {
        if self.is_table() {
            return Ok(self.clone());
        }
        if self.profile_space() > MAX_ENUM {
            return Err(Error::EnumerationTooLarge {
                size: self.profile_space(),
                limit: MAX_ENUM,
            });
        }
        let mut table = PayoffTable::default();
        for idx in self.profile_indices() {
            let p = PureProfile::from_indices(self, &idx)?;
            let loads = self.loads(&p);
            for n in 0..self.n_players() {
                let load = &loads[p.choice(n)];
                table.set(load.resource(), load.mask(), n, self.payoff(n, load)?);
            }
        }
        AllocationInstance::from_table(self.action_sets.clone(), table)
    }
}

/// Mixed-radix counter over action-set sizes.
pub struct ProfileIter {
    sizes: Vec<usize>,
    current: Vec<usize>,
    done: bool,
}

impl ProfileIter {
    fn new(sizes: Vec<usize>) -> Self {
        let done = sizes.iter().any(|&s| s == 0);
        let current = vec![0; sizes.len()];
        Self {
            sizes,
            current,
            done,
        }
    }
}

impl Iterator for ProfileIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        // Increment with player 0 as the slowest digit.
        let mut i = self.sizes.len();
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            self.current[i] += 1;
            if self.current[i] < self.sizes[i] {
                break;
            }
            self.current[i] = 0;
        }
        Some(out)
    }
}

/// Repercussion utility of player `n` under `load`, given the base payoffs:
/// her own payoff minus the total payoff gain her departure would grant the
/// co-located players.
pub fn repercussion_utility(
    base: &AllocationInstance,
    n: Player,
    load: &LoadVector,
) -> Result<f64> {
    let own = base.payoff(n, load)?;
    let removed = load.without(n)?;
    let mut externality = 0.0;
    for m in load.players() {
        if m == n {
            continue;
        }
        externality += base.payoff(m, &removed)? - base.payoff(m, load)?;
    }
    Ok(own - externality)
}

/// The companion game of an allocation game: same action sets, payoffs
/// replaced by repercussion utilities (plus an optional positive shift).
#[derive(Clone, Debug)]
pub struct CompanionGame {
    base: AllocationInstance,
    rewards: AllocationInstance,
    shift: f64,
}

impl CompanionGame {
    /// Assemble from parts; the caller guarantees that `rewards` really are
    /// the repercussion utilities of `base` plus `shift`.
    pub(crate) fn from_parts(
        base: AllocationInstance,
        rewards: AllocationInstance,
        shift: f64,
    ) -> Self {
        Self {
            base,
            rewards,
            shift,
        }
    }

    /// Original game (payoffs `u`); the sum of its payoffs at a profile is
    /// the potential of the companion game.
    pub fn base(&self) -> &AllocationInstance {
        &self.base
    }

    /// The reward game (payoffs `r + shift`).
    pub fn rewards(&self) -> &AllocationInstance {
        &self.rewards
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Reward of player `n` under `load`, including the shift.
    pub fn reward(&self, n: Player, load: &LoadVector) -> Result<f64> {
        self.rewards.payoff(n, load)
    }

    /// Potential at a pure profile (sum of base payoffs).
    pub fn potential_pure(&self, profile: &PureProfile) -> Result<f64> {
        self.base.potential_pure(profile)
    }

    /// Sum of rewards at a pure profile (distinct from the potential).
    pub fn reward_sum(&self, profile: &PureProfile) -> Result<f64> {
        self.rewards.potential_pure(profile)
    }

    /// Companion with rewards shifted so every reward is `>= margin`.
    /// Requires a table-backed reward game. Shifts are cumulative.
    pub fn with_positive_rewards(self, margin: f64) -> Result<CompanionGame> {
        let (lo, _) = self.rewards.payoff_bounds().ok_or(Error::RequiresTable)?;
        let extra = (margin - lo).max(0.0);
        Ok(self.with_extra_shift(extra))
    }

    /// Companion with `extra >= 0` added to every reward.
    pub fn with_extra_shift(self, extra: f64) -> CompanionGame {
        assert!(extra >= 0.0, "shift must be non-negative");
        if extra == 0.0 {
            return self;
        }
        CompanionGame {
            rewards: self.rewards.shift_payoffs(extra),
            shift: self.shift + extra,
            base: self.base,
        }
    }
}

/// Build the companion game of an allocation game.
///
/// Table-backed games get a fully materialized reward table; oracle-backed
/// games get a lazy reward oracle evaluated per query.
pub fn repercussion_transform(game: &AllocationInstance) -> Result<CompanionGame> {
    let rewards = match &game.oracle {
        PayoffOracle::Table(table) => {
            let mut rt = PayoffTable::default();
            for &(resource, mask) in table.entries.keys() {
                let load = LoadVector::from_mask(resource, game.n_players(), mask);
                for n in load.players() {
                    rt.set(resource, mask, n, repercussion_utility(game, n, &load)?);
                }
            }
            AllocationInstance::from_table(game.action_sets.clone(), rt)?
        }
        PayoffOracle::Fn(_) => {
            let base = game.clone();
            AllocationInstance::from_oracle(game.action_sets.clone(), move |n, load| {
                repercussion_utility(&base, n, load)
                    .expect("payoff oracle must be defined on all queried loads")
            })?
        }
    };
    Ok(CompanionGame {
        base: game.clone(),
        rewards,
        shift: 0.0,
    })
}

/// Outcome of the repercussion-game symmetry check.
#[derive(Clone, Debug)]
pub enum SymmetryCheck {
    Holds,
    Violated {
        resource: ResourceId,
        mask: u64,
        a: Player,
        b: Player,
        gap: f64,
    },
}

impl SymmetryCheck {
    pub fn holds(&self) -> bool {
        matches!(self, SymmetryCheck::Holds)
    }
}

/// Check whether a table-backed game is a repercussion-utility game:
/// for every load and every co-located pair `(a, b)`,
/// `r_a(l) - r_a(l - e_b) == r_b(l) - r_b(l - e_a)` within `tol`.
///
/// Returns the first violating `(load, a, b)` otherwise.
pub fn is_repercussion_game(game: &AllocationInstance, tol: f64) -> Result<SymmetryCheck> {
    let table = game.table().ok_or(Error::RequiresTable)?;
    // Deterministic scan order for a reproducible witness.
    let mut keys: Vec<(ResourceId, u64)> = table.entries.keys().copied().collect();
    keys.sort_unstable();
    for (resource, mask) in keys {
        let load = LoadVector::from_mask(resource, game.n_players(), mask);
        let players: Vec<Player> = load.players().collect();
        for (i, &a) in players.iter().enumerate() {
            for &b in &players[i + 1..] {
                let la = load.without(a)?;
                let lb = load.without(b)?;
                let lhs = game.payoff(a, &load)? - game.payoff(a, &lb)?;
                let rhs = game.payoff(b, &load)? - game.payoff(b, &la)?;
                if (lhs - rhs).abs() > tol {
                    return Ok(SymmetryCheck::Violated {
                        resource,
                        mask,
                        a,
                        b,
                        gap: lhs - rhs,
                    });
                }
            }
        }
    }
    Ok(SymmetryCheck::Holds)
}

/// Telescoping sum over one enumeration order of the load's players:
/// `sum_k r_{order[k]}(l - e_{order[0]} - .. - e_{order[k-1]})`.
/// For repercussion games this sum is independent of the order.
pub(crate) fn peeling_sum(
    game: &AllocationInstance,
    load: &LoadVector,
    order: &[Player],
) -> Result<f64> {
    let mut current = load.clone();
    let mut sum = 0.0;
    for &p in order {
        sum += game.payoff(p, &current)?;
        current = current.without(p)?;
    }
    Ok(sum)
}

/// Recover base payoffs from a repercussion-utility game.
///
/// The returned game gives every player in a load the average of the
/// telescoping sum, so `repercussion_transform(recover_base_payoffs(g))`
/// reproduces `g` (up to floating-point rounding of the `1/K` factors).
/// Fails when the symmetry characterization does not hold within `tol`.
pub fn recover_base_payoffs(game: &AllocationInstance, tol: f64) -> Result<AllocationInstance> {
    match is_repercussion_game(game, tol)? {
        SymmetryCheck::Holds => {}
        SymmetryCheck::Violated {
            resource,
            mask,
            a,
            b,
            gap,
        } => {
            return Err(Error::NotRepercussionGame {
                resource,
                mask,
                a,
                b,
                gap,
            })
        }
    }
    let table = game.table().ok_or(Error::RequiresTable)?;
    let mut recovered = PayoffTable::default();
    for &(resource, mask) in table.entries.keys() {
        let load = LoadVector::from_mask(resource, game.n_players(), mask);
        let order: Vec<Player> = load.players().collect();
        let value = peeling_sum(game, &load, &order)? / order.len() as f64;
        for &n in &order {
            recovered.set(resource, mask, n, value);
        }
    }
    AllocationInstance::from_table(game.action_sets().to_vec(), recovered)
}

#[cfg(test)]
pub(crate) mod tests;

#[cfg(test)]
pub(crate) mod tests_support {
    use super::{AllocationInstance, MixedProfile};
    use rand::Rng;

    /// A strictly interior random strategy profile.
    pub(crate) fn random_interior<R: Rng>(
        game: &AllocationInstance,
        rng: &mut R,
    ) -> MixedProfile {
        let rows = game
            .action_sets()
            .iter()
            .map(|s| {
                let mut row: Vec<f64> =
                    (0..s.len()).map(|_| rng.random_range(0.05..1.0)).collect();
                let sum: f64 = row.iter().sum();
                row.iter_mut().for_each(|p| *p /= sum);
                row
            })
            .collect();
        MixedProfile::from_rows_unchecked(rows)
    }
}
