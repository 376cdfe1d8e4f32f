//! Replicator dynamics on companion games: field evaluation, fixed-step
//! integration, limit classification, and the 2x2 basin check.

use std::io::Write;

use crate::error::{Error, Result};
use crate::game::{AllocationInstance, CompanionGame, MixedProfile, PureProfile};

/// Default integrator step.
pub const DEFAULT_STEP: f64 = 0.01;
/// A trajectory is considered converged when every row stays within this
/// distance of a corner...
pub const CORNER_EPS: f64 = 1e-4;
/// ...for this many consecutive steps.
pub const CORNER_WINDOW: usize = 100;
/// Allowed simplex drift per step before projection.
const DRIFT_TOL: f64 = 1e-6;

/// Evaluate the replicator field `dq_{n,i}/dt = q_{n,i} (f_{n,i} - fbar_n)`
/// for the given game's payoffs (pass the reward game of a companion to
/// follow its dynamics).
pub fn replicator_field(game: &AllocationInstance, q: &MixedProfile) -> Result<Vec<Vec<f64>>> {
    let mut field = Vec::with_capacity(game.n_players());
    for n in 0..game.n_players() {
        let row = q.row(n);
        let mut payoffs = vec![0.0; row.len()];
        for (i, p) in payoffs.iter_mut().enumerate() {
            // Coordinates at zero stay zero regardless of payoff.
            if row[i] != 0.0 {
                *p = game.expected_payoff(q, n, i)?;
            }
        }
        let mean: f64 = row.iter().zip(&payoffs).map(|(&q, &f)| q * f).sum();
        field.push(
            row.iter()
                .zip(&payoffs)
                .map(|(&q, &f)| q * (f - mean))
                .collect(),
        );
    }
    Ok(field)
}

/// An integrated trajectory with the potential recorded along it.
#[derive(Clone, Debug)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<MixedProfile>,
    potential: Vec<f64>,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[MixedProfile] {
        &self.states
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_state(&self) -> &MixedProfile {
        self.states.last().expect("trajectory has an initial state")
    }

    /// True when the potential never drops by more than `tol` per unit time
    /// between consecutive samples.
    pub fn potential_nondecreasing(&self, tol_per_unit_time: f64) -> bool {
        self.times
            .windows(2)
            .zip(self.potential.windows(2))
            .all(|(t, f)| f[1] >= f[0] - tol_per_unit_time * (t[1] - t[0]))
    }

    /// Movement of the state per unit time over the last recorded step.
    pub fn final_speed(&self) -> f64 {
        if self.len() < 2 {
            return 0.0;
        }
        let a = &self.states[self.len() - 2];
        let b = &self.states[self.len() - 1];
        let dt = self.times[self.len() - 1] - self.times[self.len() - 2];
        let mut dist: f64 = 0.0;
        for (ra, rb) in a.rows().iter().zip(b.rows()) {
            for (&x, &y) in ra.iter().zip(rb) {
                dist = dist.max((x - y).abs());
            }
        }
        dist / dt
    }

    /// CSV export: `time, q_<n>_<i>..., potential`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        if let Some(first) = self.states.first() {
            write!(w, "time")?;
            for (n, row) in first.rows().iter().enumerate() {
                for i in 0..row.len() {
                    write!(w, ",q_{n}_{i}")?;
                }
            }
            writeln!(w, ",potential")?;
        }
        for (k, t) in self.times.iter().enumerate() {
            write!(w, "{t}")?;
            for row in self.states[k].rows() {
                for &p in row {
                    write!(w, ",{p}")?;
                }
            }
            writeln!(w, ",{}", self.potential[k])?;
        }
        Ok(())
    }
}

/// Options for [`integrate_with`].
#[derive(Clone, Debug)]
pub struct IntegrateOptions {
    pub step: f64,
    pub horizon: f64,
    /// Record every k-th step (the initial and final states are always kept).
    pub record_every: usize,
    /// Stop early once every row has stayed within `CORNER_EPS` of a corner
    /// for `CORNER_WINDOW` consecutive steps.
    pub stop_at_corner: bool,
}

impl IntegrateOptions {
    pub fn new(horizon: f64, step: f64) -> Self {
        Self {
            step,
            horizon,
            record_every: 1,
            stop_at_corner: false,
        }
    }
}

/// Integrate the replicator dynamics of a companion game with fixed-step
/// fourth-order Runge-Kutta, renormalizing rows after each step. The field
/// follows the rewards; the recorded potential is the sum of base payoffs.
pub fn integrate(
    companion: &CompanionGame,
    q0: &MixedProfile,
    horizon: f64,
    step: f64,
) -> Result<Trajectory> {
    integrate_with(companion, q0, &IntegrateOptions::new(horizon, step))
}

/// Integrate the replicator dynamics of a raw game (the field follows its
/// own payoffs; the recorded "potential" is then simply the payoff sum,
/// which is only a Lyapunov function when the game is a repercussion
/// game). Mainly for exploring base games next to their companions.
pub fn integrate_raw_until_converged(
    game: &crate::game::AllocationInstance,
    q0: &MixedProfile,
    max_time: f64,
    step: f64,
) -> Result<(Trajectory, bool)> {
    let identity = CompanionGame::from_parts(game.clone(), game.clone(), 0.0);
    integrate_until_converged(&identity, q0, max_time, step)
}

/// Integrate until corner convergence (or `max_time`); returns the
/// trajectory and whether it converged.
pub fn integrate_until_converged(
    companion: &CompanionGame,
    q0: &MixedProfile,
    max_time: f64,
    step: f64,
) -> Result<(Trajectory, bool)> {
    let mut opts = IntegrateOptions::new(max_time, step);
    opts.stop_at_corner = true;
    opts.record_every = 10;
    let traj = integrate_with(companion, q0, &opts)?;
    let converged = traj
        .last_state()
        .rows()
        .iter()
        .enumerate()
        .all(|(n, _)| traj.last_state().corner_distance(n) < CORNER_EPS);
    Ok((traj, converged))
}

pub fn integrate_with(
    companion: &CompanionGame,
    q0: &MixedProfile,
    opts: &IntegrateOptions,
) -> Result<Trajectory> {
    assert!(opts.step > 0.0, "step must be positive");
    let field_game = companion.rewards();
    let base = companion.base();
    let n_steps = (opts.horizon / opts.step).ceil() as usize;

    let mut q = q0.clone();
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![q.clone()],
        potential: vec![base.potential_mixed(&q)?],
    };
    let mut corner_streak = 0usize;
    for k in 1..=n_steps {
        q = rk4_step(field_game, &q, opts.step)?;
        let t = k as f64 * opts.step;
        if k % opts.record_every.max(1) == 0 || k == n_steps {
            traj.times.push(t);
            traj.states.push(q.clone());
            traj.potential.push(base.potential_mixed(&q)?);
        }
        if opts.stop_at_corner {
            let near = (0..q.rows().len()).all(|n| q.corner_distance(n) < CORNER_EPS);
            corner_streak = if near { corner_streak + 1 } else { 0 };
            if corner_streak >= CORNER_WINDOW {
                if *traj.times.last().unwrap() < t {
                    traj.times.push(t);
                    traj.states.push(q.clone());
                    traj.potential.push(base.potential_mixed(&q)?);
                }
                break;
            }
        }
    }
    Ok(traj)
}

fn rk4_step(game: &AllocationInstance, q: &MixedProfile, h: f64) -> Result<MixedProfile> {
    let k1 = replicator_field(game, q)?;
    let q2 = offset(q, &k1, h / 2.0);
    let k2 = replicator_field(game, &q2)?;
    let q3 = offset(q, &k2, h / 2.0);
    let k3 = replicator_field(game, &q3)?;
    let q4 = offset(q, &k3, h);
    let k4 = replicator_field(game, &q4)?;

    let mut rows = q.rows().to_vec();
    for (n, row) in rows.iter_mut().enumerate() {
        for (i, p) in row.iter_mut().enumerate() {
            *p += h / 6.0 * (k1[n][i] + 2.0 * k2[n][i] + 2.0 * k3[n][i] + k4[n][i]);
        }
    }
    project_rows(&mut rows, 0.0)?;
    Ok(MixedProfile::from_rows_unchecked(rows))
}

fn offset(q: &MixedProfile, field: &[Vec<f64>], h: f64) -> MixedProfile {
    let rows = q
        .rows()
        .iter()
        .zip(field)
        .map(|(row, f)| row.iter().zip(f).map(|(&p, &d)| p + h * d).collect())
        .collect();
    MixedProfile::from_rows_unchecked(rows)
}

/// Clamp tiny negative overshoots and renormalize each row; errors out if
/// the drift before projection exceeds the tolerance.
fn project_rows(rows: &mut [Vec<f64>], t: f64) -> Result<()> {
    for row in rows.iter_mut() {
        let mut sum = 0.0;
        for p in row.iter_mut() {
            if *p < 0.0 {
                if *p < -DRIFT_TOL {
                    return Err(Error::IntegrationDrift {
                        drift: -*p,
                        tol: DRIFT_TOL,
                        t,
                    });
                }
                *p = 0.0;
            }
            sum += *p;
        }
        if (sum - 1.0).abs() > DRIFT_TOL {
            return Err(Error::IntegrationDrift {
                drift: (sum - 1.0).abs(),
                tol: DRIFT_TOL,
                t,
            });
        }
        if sum != 1.0 {
            row.iter_mut().for_each(|p| *p /= sum);
        }
    }
    Ok(())
}

/// Classification of a trajectory's tail.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LimitClass {
    /// Every row is within eps of a corner; the nearest pure profile.
    Pure(PureProfile),
    /// Settled (slow movement) but not at a corner; per-player supports of
    /// the stationary face.
    MixedStationary { support: Vec<Vec<usize>> },
    /// Still moving faster than eps per unit time.
    Undecided,
}

/// Classify the limit of a trajectory: a pure profile when all rows are
/// within `eps` of a corner, a stationary face when the motion has stalled
/// in the interior, `Undecided` when still moving.
pub fn classify_limit(
    game: &AllocationInstance,
    traj: &Trajectory,
    eps: f64,
) -> Result<LimitClass> {
    if traj.final_speed() >= eps {
        return Ok(LimitClass::Undecided);
    }
    let last = traj.last_state();
    let all_corner = (0..game.n_players()).all(|n| last.corner_distance(n) < eps);
    if all_corner {
        let indices: Vec<usize> = (0..game.n_players())
            .map(|n| last.nearest_corner(n))
            .collect();
        return Ok(LimitClass::Pure(PureProfile::from_indices(game, &indices)?));
    }
    let support = last
        .rows()
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .filter_map(|(i, &p)| (p > eps).then_some(i))
                .collect()
        })
        .collect();
    Ok(LimitClass::MixedStationary { support })
}

/// Corner potentials of a two-player, two-action game.
///
/// With `x` the probability that player 0 plays her second action and `y`
/// the probability that player 1 plays hers, `k[i][j]` is the potential at
/// the pure profile where player 0 takes action `j` and player 1 action `i`
/// (so `k[0][1]` is the corner `x = 1, y = 0`).
#[derive(Clone, Copy, Debug)]
pub struct TwoByTwoPotential {
    pub k: [[f64; 2]; 2],
}

impl TwoByTwoPotential {
    pub fn from_game(companion: &CompanionGame) -> Result<Self> {
        let base = companion.base();
        if base.n_players() != 2 || base.action_sets().iter().any(|s| s.len() != 2) {
            return Err(Error::Config(
                "two-by-two reduction needs 2 players with 2 actions each".into(),
            ));
        }
        let mut k = [[0.0; 2]; 2];
        for (i, row) in k.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                let p = PureProfile::from_indices(base, &[j, i])?;
                *v = base.potential_pure(&p)?;
            }
        }
        Ok(Self { k })
    }

    /// `K = k11 + k00 - k01 - k10`.
    pub fn coupling(&self) -> f64 {
        self.k[1][1] + self.k[0][0] - self.k[0][1] - self.k[1][0]
    }

    /// The reduced field `(dx/dt, dy/dt)`:
    /// `dx/dt = x(1-x)(k01 - k00 + K y)` and
    /// `dy/dt = y(1-y)(k10 - k00 + K x)`.
    pub fn reduced_field(&self, x: f64, y: f64) -> (f64, f64) {
        let kk = self.coupling();
        let dx = x * (1.0 - x) * (self.k[0][1] - self.k[0][0] + kk * y);
        let dy = y * (1.0 - y) * (self.k[1][0] - self.k[0][0] + kk * x);
        (dx, dy)
    }
}

/// Integrate a 2x2 companion game from the uniform point and check that it
/// reaches the pure profile with maximal potential.
pub fn two_by_two_basin_check(companion: &CompanionGame) -> Result<bool> {
    let pot = TwoByTwoPotential::from_game(companion)?;
    let base = companion.base();
    let q0 = MixedProfile::uniform(base);
    let (traj, converged) = integrate_until_converged(companion, &q0, 5_000.0, DEFAULT_STEP)?;
    if !converged {
        return Ok(false);
    }
    let limit = match classify_limit(base, &traj, CORNER_EPS)? {
        LimitClass::Pure(p) => p,
        _ => return Ok(false),
    };
    let best = pot
        .k
        .iter()
        .flatten()
        .fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let reached = base.potential_pure(&limit)?;
    Ok((reached - best).abs() <= 1e-9)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::random::{random_allocation_game, RandomGameConfig};
    use crate::game::tests::{three_player, two_by_three};
    use crate::game::repercussion_transform;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn field_vanishes_at_pure_points() {
        let game = two_by_three();
        for idx in game.profile_indices() {
            let p = PureProfile::from_indices(&game, &idx).unwrap();
            let q = MixedProfile::pure(&game, &p);
            let f = replicator_field(&game, &q).unwrap();
            assert!(f.iter().flatten().all(|&d| d == 0.0));
        }
    }

    #[test]
    fn field_is_tangent_to_the_simplex() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cfg = RandomGameConfig::default();
        for _ in 0..20 {
            let game = random_allocation_game(&cfg, &mut rng).unwrap();
            let q = crate::game::tests_support::random_interior(&game, &mut rng);
            let f = replicator_field(&game, &q).unwrap();
            for row in f {
                let sum: f64 = row.iter().sum();
                assert!(sum.abs() < 1e-12, "row sum {sum}");
            }
        }
    }

    #[test]
    fn field_vanishes_at_the_reference_mixed_equilibrium() {
        // The base three-player game has a unique mixed equilibrium at
        // (1/3, 5/6, 0); the field of the *base* game vanishes there.
        let game = three_player();
        let q = MixedProfile::new(
            &game,
            vec![
                vec![1.0 / 3.0, 2.0 / 3.0],
                vec![5.0 / 6.0, 1.0 / 6.0],
                vec![0.0, 1.0],
            ],
        )
        .unwrap();
        let f = replicator_field(&game, &q).unwrap();
        for row in &f {
            for &d in row {
                assert!(d.abs() < 1e-12, "field component {d}");
            }
        }
    }

    #[test]
    fn reduced_two_by_two_field_matches_generic() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let cfg = RandomGameConfig {
            n_players: 2,
            n_resources: 2,
            min_actions: 2,
            max_actions: 2,
            ..RandomGameConfig::default()
        };
        for _ in 0..5 {
            let base = random_allocation_game(&cfg, &mut rng).unwrap();
            let companion = repercussion_transform(&base).unwrap();
            let pot = TwoByTwoPotential::from_game(&companion).unwrap();
            for _ in 0..5 {
                use rand::Rng;
                let x: f64 = rng.random_range(0.01..0.99);
                let y: f64 = rng.random_range(0.01..0.99);
                let q = MixedProfile::new(
                    companion.base(),
                    vec![vec![1.0 - x, x], vec![1.0 - y, y]],
                )
                .unwrap();
                let f = replicator_field(companion.rewards(), &q).unwrap();
                let (dx, dy) = pot.reduced_field(x, y);
                assert!((f[0][1] - dx).abs() <= 1e-12, "{} vs {dx}", f[0][1]);
                assert!((f[1][1] - dy).abs() <= 1e-12, "{} vs {dy}", f[1][1]);
            }
        }
    }

    #[test]
    fn pure_start_stays_constant() {
        let game = two_by_three();
        let companion = repercussion_transform(&game).unwrap();
        let p = PureProfile::new(&game, vec![0, 2]).unwrap();
        let q0 = MixedProfile::pure(&game, &p);
        let traj = integrate(&companion, &q0, 5.0, 0.01).unwrap();
        assert_eq!(traj.last_state(), &q0);
    }

    #[test]
    fn faces_are_invariant() {
        // A coordinate starting at exactly zero stays at zero.
        let game = three_player();
        let companion = repercussion_transform(&game).unwrap();
        let q0 = MixedProfile::new(
            &game,
            vec![vec![0.5, 0.5], vec![0.3, 0.7], vec![0.0, 1.0]],
        )
        .unwrap();
        let traj = integrate(&companion, &q0, 50.0, 0.01).unwrap();
        for state in traj.states() {
            assert_eq!(state.row(2)[0], 0.0);
            assert_eq!(state.row(2)[1], 1.0);
        }
    }

    #[test]
    fn three_player_interior_start_reaches_all_first_actions() {
        let game = three_player();
        let companion = repercussion_transform(&game).unwrap();
        let q0 = MixedProfile::uniform(&game);
        let (traj, converged) =
            integrate_until_converged(&companion, &q0, 2_000.0, 0.01).unwrap();
        assert!(converged);
        assert!(traj.potential_nondecreasing(1e-6));
        match classify_limit(&game, &traj, CORNER_EPS).unwrap() {
            LimitClass::Pure(p) => assert_eq!(p.choices(), &[0, 0, 0]),
            other => panic!("expected pure limit, got {other:?}"),
        }
        // The reached corner is a local, not the global, potential maximum.
        let reached = game
            .potential_pure(&PureProfile::new(&game, vec![0, 0, 0]).unwrap())
            .unwrap();
        let global = game
            .potential_pure(&PureProfile::new(&game, vec![1, 1, 1]).unwrap())
            .unwrap();
        assert!(reached < global);
    }

    #[test]
    fn two_by_three_interior_start_reaches_shared_first_resource() {
        let game = two_by_three();
        let companion = repercussion_transform(&game).unwrap();
        let q0 = MixedProfile::new(
            &game,
            vec![vec![0.5, 0.5], vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]],
        )
        .unwrap();
        let (traj, converged) =
            integrate_until_converged(&companion, &q0, 2_000.0, 0.01).unwrap();
        assert!(converged);
        assert!(traj.potential_nondecreasing(1e-6));
        match classify_limit(&game, &traj, CORNER_EPS).unwrap() {
            LimitClass::Pure(p) => assert_eq!(p.choices(), &[0, 0]),
            other => panic!("expected pure limit, got {other:?}"),
        }
    }

    #[test]
    fn classify_reports_undecided_while_moving() {
        let game = two_by_three();
        let companion = repercussion_transform(&game).unwrap();
        let q0 = MixedProfile::uniform(&game);
        // Two coarse samples straddling fast motion.
        let traj = integrate(&companion, &q0, 0.2, 0.1).unwrap();
        assert_eq!(
            classify_limit(&game, &traj, 1e-4).unwrap(),
            LimitClass::Undecided
        );
    }

    #[test]
    fn classify_constant_pure_trajectory() {
        let game = two_by_three();
        let companion = repercussion_transform(&game).unwrap();
        let p = PureProfile::new(&game, vec![1, 2]).unwrap();
        let traj = integrate(&companion, &MixedProfile::pure(&game, &p), 2.0, 0.01).unwrap();
        assert_eq!(
            classify_limit(&game, &traj, 1e-4).unwrap(),
            LimitClass::Pure(p)
        );
    }

    #[test]
    fn lyapunov_monotonicity_on_random_companions() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cfg = RandomGameConfig::default();
        for _ in 0..10 {
            let base = random_allocation_game(&cfg, &mut rng).unwrap();
            let companion = repercussion_transform(&base).unwrap();
            let q0 = crate::game::tests_support::random_interior(&base, &mut rng);
            let traj = integrate(&companion, &q0, 100.0, 0.01).unwrap();
            assert!(traj.potential_nondecreasing(1e-6));
        }
    }

    #[test]
    fn interior_limits_are_pure_nash_of_the_companion() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let mut checked = 0;
        let cfg = RandomGameConfig {
            n_players: 2,
            n_resources: 2,
            min_actions: 2,
            max_actions: 2,
            ..RandomGameConfig::default()
        };
        for _ in 0..200 {
            let base = random_allocation_game(&cfg, &mut rng).unwrap();
            let companion = repercussion_transform(&base).unwrap();
            let q0 = MixedProfile::uniform(&base);
            let (traj, converged) =
                integrate_until_converged(&companion, &q0, 400.0, 0.01).unwrap();
            if !converged {
                continue; // stalled near a saddle: classified elsewhere
            }
            if let LimitClass::Pure(p) = classify_limit(&base, &traj, CORNER_EPS).unwrap() {
                assert!(
                    companion.rewards().is_pure_nash(&p).unwrap(),
                    "limit {:?} is not Nash",
                    p.choices()
                );
                checked += 1;
            }
        }
        assert!(checked >= 150, "only {checked} runs converged");
    }

    #[test]
    fn basin_check_on_random_two_by_two_games() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let cfg = RandomGameConfig {
            n_players: 2,
            n_resources: 2,
            min_actions: 2,
            max_actions: 2,
            ..RandomGameConfig::default()
        };
        let mut with_two_maxima = 0;
        let mut singles = 0;
        let mut attempts = 0;
        while with_two_maxima < 25 && attempts < 2_000 {
            attempts += 1;
            let base = random_allocation_game(&cfg, &mut rng).unwrap();
            let companion = repercussion_transform(&base).unwrap();
            let k = TwoByTwoPotential::from_game(&companion).unwrap().k;
            let diag = k[0][0] > k[0][1] && k[0][0] > k[1][0] && k[1][1] > k[0][1] && k[1][1] > k[1][0];
            let anti = k[0][1] > k[0][0] && k[0][1] > k[1][1] && k[1][0] > k[0][0] && k[1][0] > k[1][1];
            let distinct_global = {
                let mut v: Vec<f64> = k.iter().flatten().copied().collect();
                v.sort_by(|a, b| b.partial_cmp(a).unwrap());
                v[0] > v[1]
            };
            if (diag || anti) && distinct_global {
                assert!(two_by_two_basin_check(&companion).unwrap());
                with_two_maxima += 1;
            } else if distinct_global {
                // Single strict maximum: the check must also pass.
                if singles < 10 {
                    assert!(two_by_two_basin_check(&companion).unwrap());
                    singles += 1;
                }
            }
        }
        assert!(with_two_maxima >= 25, "not enough two-maxima games generated");
    }
}
