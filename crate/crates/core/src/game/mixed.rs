//! Mixed strategies, expected payoffs, and the potential function.

use crate::error::{Error, Result};
use crate::game::{AllocationInstance, Player, ProfileIter, PureProfile, MAX_ENUM};

/// Row-stochastic strategy profile: one probability row per player over her
/// action set.
#[derive(Clone, Debug, PartialEq)]
pub struct MixedProfile {
    rows: Vec<Vec<f64>>,
}

pub(crate) const ROW_SUM_TOL: f64 = 1e-9;

impl MixedProfile {
    /// Validated constructor; each row must be non-negative and sum to 1
    /// within `1e-9`.
    pub fn new(game: &AllocationInstance, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != game.n_players() {
            return Err(Error::InvalidProfile(format!(
                "expected {} rows, got {}",
                game.n_players(),
                rows.len()
            )));
        }
        for (n, row) in rows.iter().enumerate() {
            if row.len() != game.action_set(n).len() {
                return Err(Error::InvalidProfile(format!(
                    "player {n}: expected {} entries, got {}",
                    game.action_set(n).len(),
                    row.len()
                )));
            }
            if row.iter().any(|&p| p < 0.0 || !p.is_finite()) {
                return Err(Error::InvalidProfile(format!(
                    "player {n}: negative or non-finite probability"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidProfile(format!(
                    "player {n}: row sums to {sum}, not 1"
                )));
            }
        }
        Ok(Self { rows })
    }

    /// Unvalidated constructor for internal callers that guarantee shape.
    pub(crate) fn from_rows_unchecked(rows: Vec<Vec<f64>>) -> Self {
        Self { rows }
    }

    /// Constructor for rows that need not sum to 1, used to query the
    /// multilinear extension of the potential (finite-difference gradient
    /// checks). Entries must still be non-negative and finite.
    pub fn unnormalized(game: &AllocationInstance, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != game.n_players() {
            return Err(Error::InvalidProfile(format!(
                "expected {} rows, got {}",
                game.n_players(),
                rows.len()
            )));
        }
        for (n, row) in rows.iter().enumerate() {
            if row.len() != game.action_set(n).len() {
                return Err(Error::InvalidProfile(format!(
                    "player {n}: expected {} entries, got {}",
                    game.action_set(n).len(),
                    row.len()
                )));
            }
            if row.iter().any(|&p| p < 0.0 || !p.is_finite()) {
                return Err(Error::InvalidProfile(format!(
                    "player {n}: negative or non-finite weight"
                )));
            }
        }
        Ok(Self { rows })
    }

    /// Uniform strategy over every action set.
    pub fn uniform(game: &AllocationInstance) -> Self {
        let rows = game
            .action_sets()
            .iter()
            .map(|s| vec![1.0 / s.len() as f64; s.len()])
            .collect();
        Self { rows }
    }

    /// Degenerate strategy playing a pure profile.
    pub fn pure(game: &AllocationInstance, profile: &PureProfile) -> Self {
        let rows = profile
            .indices(game)
            .into_iter()
            .enumerate()
            .map(|(n, i)| {
                let mut row = vec![0.0; game.action_set(n).len()];
                row[i] = 1.0;
                row
            })
            .collect();
        Self { rows }
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, n: Player) -> &[f64] {
        &self.rows[n]
    }

    #[cfg(test)]
    pub(crate) fn rows_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.rows
    }

    /// Every row has one entry exactly equal to 1.
    pub fn is_pure(&self) -> bool {
        self.rows
            .iter()
            .all(|row| row.iter().filter(|&&p| p == 1.0).count() == 1)
    }

    /// The pure profile this strategy plays, if `is_pure`.
    pub fn as_pure(&self, game: &AllocationInstance) -> Option<PureProfile> {
        let mut indices = Vec::with_capacity(self.rows.len());
        for row in &self.rows {
            indices.push(row.iter().position(|&p| p == 1.0)?);
        }
        PureProfile::from_indices(game, &indices).ok()
    }

    /// Max distance of row `n` to its nearest simplex corner.
    pub fn corner_distance(&self, n: Player) -> f64 {
        let row = &self.rows[n];
        let mut best = f64::INFINITY;
        for i in 0..row.len() {
            let mut d: f64 = (1.0 - row[i]).abs();
            for (j, &p) in row.iter().enumerate() {
                if j != i {
                    d = d.max(p.abs());
                }
            }
            best = best.min(d);
        }
        best
    }

    /// Index of the nearest corner of row `n`.
    pub fn nearest_corner(&self, n: Player) -> usize {
        let row = &self.rows[n];
        row.iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i)
            .unwrap()
    }
}

/// Per-resource membership bits for one assignment of action indices.
fn fill_loads(
    game: &AllocationInstance,
    indices: &[usize],
    bits: &mut [Vec<bool>],
) {
    for row in bits.iter_mut() {
        row.iter_mut().for_each(|b| *b = false);
    }
    for (n, &i) in indices.iter().enumerate() {
        bits[game.action_set(n)[i]][n] = true;
    }
}

impl AllocationInstance {
    /// Expected payoff `f_{n,i}(q)` of player `n` on her `i`-th action
    /// (index into her action set), the expectation running over the other
    /// players' strategies. Does not depend on row `n` of `q`; computed by
    /// exact enumeration, and accepts unnormalized rows (the multilinear
    /// extension), which is what the gradient identity needs.
    pub fn expected_payoff(&self, q: &MixedProfile, n: Player, i: usize) -> Result<f64> {
        let others: Vec<Player> = (0..self.n_players()).filter(|&m| m != n).collect();
        let space: u128 = others
            .iter()
            .map(|&m| self.action_set(m).len() as u128)
            .product();
        if space > MAX_ENUM {
            return Err(Error::EnumerationTooLarge {
                size: space,
                limit: MAX_ENUM,
            });
        }
        let resource = self.action_set(n)[i];
        let mut total = 0.0;
        let sizes: Vec<usize> = others.iter().map(|&m| self.action_set(m).len()).collect();
        let mut bits = vec![false; self.n_players()];
        for combo in ProfileIter::new(sizes) {
            let mut w = 1.0;
            for (k, &m) in others.iter().enumerate() {
                w *= q.row(m)[combo[k]];
            }
            if w == 0.0 {
                continue;
            }
            bits.iter_mut().for_each(|b| *b = false);
            bits[n] = true;
            for (k, &m) in others.iter().enumerate() {
                if self.action_set(m)[combo[k]] == resource {
                    bits[m] = true;
                }
            }
            total += w * self.payoff_from_bits(n, resource, &bits)?;
        }
        Ok(total)
    }

    /// Mean payoff of player `n`: `sum_i q_{n,i} f_{n,i}(q)`.
    pub fn mean_payoff(&self, q: &MixedProfile, n: Player) -> Result<f64> {
        let mut total = 0.0;
        for i in 0..self.action_set(n).len() {
            let p = q.row(n)[i];
            if p != 0.0 {
                total += p * self.expected_payoff(q, n, i)?;
            }
        }
        Ok(total)
    }

    /// The potential `F(q) = sum_n sum_i q_{n,i} E[u_n(l^i(S)) | S_n = i]`,
    /// evaluated by exact enumeration of the whole profile space. Refuses
    /// spaces larger than `MAX_ENUM`.
    ///
    /// Rows need not sum to 1: off the simplex this evaluates the unique
    /// extension whose coordinate partials equal the companion game's
    /// expected payoffs. The plain multilinear extension's partial along
    /// `q_{n,i}` is `f_{n,i}` plus the expected total payoff of the others
    /// in the game with `n` removed; subtracting `(row_sum_n - 1)` times
    /// that constant cancels it without changing any on-simplex value, so
    /// symmetric finite differences recover `f_{n,i}` exactly.
    pub fn potential_mixed(&self, q: &MixedProfile) -> Result<f64> {
        let space = self.profile_space();
        if space > MAX_ENUM {
            return Err(Error::EnumerationTooLarge {
                size: space,
                limit: MAX_ENUM,
            });
        }
        let mut bits: Vec<Vec<bool>> = vec![vec![false; self.n_players()]; self.n_resources()];
        let mut total = 0.0;
        for indices in self.profile_indices() {
            let mut w = 1.0;
            for (n, &i) in indices.iter().enumerate() {
                w *= q.row(n)[i];
            }
            if w == 0.0 {
                continue;
            }
            fill_loads(self, &indices, &mut bits);
            let mut sum = 0.0;
            for (n, &i) in indices.iter().enumerate() {
                let r = self.action_set(n)[i];
                sum += self.payoff_from_bits(n, r, &bits[r])?;
            }
            total += w * sum;
        }
        for n in 0..self.n_players() {
            let excess: f64 = q.row(n).iter().sum::<f64>() - 1.0;
            if excess != 0.0 {
                total -= excess * self.absent_player_total(q, n)?;
            }
        }
        Ok(total)
    }

    /// Expected total payoff of all players other than `n` in the game
    /// where `n` is removed, under the rows of `q` (independent of row `n`).
    fn absent_player_total(&self, q: &MixedProfile, n: Player) -> Result<f64> {
        let others: Vec<Player> = (0..self.n_players()).filter(|&m| m != n).collect();
        if others.is_empty() {
            return Ok(0.0);
        }
        let sizes: Vec<usize> = others.iter().map(|&m| self.action_set(m).len()).collect();
        let mut bits: Vec<Vec<bool>> = vec![vec![false; self.n_players()]; self.n_resources()];
        let mut total = 0.0;
        for combo in ProfileIter::new(sizes) {
            let mut w = 1.0;
            for (k, &m) in others.iter().enumerate() {
                w *= q.row(m)[combo[k]];
            }
            if w == 0.0 {
                continue;
            }
            for row in bits.iter_mut() {
                row.iter_mut().for_each(|b| *b = false);
            }
            for (k, &m) in others.iter().enumerate() {
                bits[self.action_set(m)[combo[k]]][m] = true;
            }
            let mut sum = 0.0;
            for (k, &m) in others.iter().enumerate() {
                let r = self.action_set(m)[combo[k]];
                sum += self.payoff_from_bits(m, r, &bits[r])?;
            }
            total += w * sum;
        }
        Ok(total)
    }
}
