use super::*;
use crate::game::random::{random_allocation_game, RandomGameConfig};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) fn two_by_three() -> AllocationInstance {
    parse_game_toml(include_str!("../../../../data/games/two_by_three.toml"))
        .unwrap()
        .0
}

pub(crate) fn three_player() -> AllocationInstance {
    parse_game_toml(include_str!("../../../../data/games/three_player.toml"))
        .unwrap()
        .0
}

pub(crate) fn two_by_two() -> AllocationInstance {
    parse_game_toml(include_str!("../../../../data/games/two_by_two.toml"))
        .unwrap()
        .0
}

const A: usize = 0;
const B: usize = 1;
const C: usize = 2;

fn profile(game: &AllocationInstance, choices: &[ResourceId]) -> PureProfile {
    PureProfile::new(game, choices.to_vec()).unwrap()
}

#[test]
fn load_vector_examples() {
    let g3 = three_player();
    let p = profile(&g3, &[A, A, B]);
    let l = load_vector(&p, A);
    assert_eq!(l.players().collect::<Vec<_>>(), vec![0, 1]);
    let p = profile(&g3, &[A, A, A]);
    assert_eq!(load_vector(&p, B).count(), 0);

    let g23 = two_by_three();
    let p = profile(&g23, &[A, C]);
    let l = load_vector(&p, C);
    assert!(!l.contains(0) && l.contains(1));
}

#[test]
fn load_subtraction_requires_membership() {
    let l = LoadVector::from_players(A, 3, &[0, 2]);
    assert!(l.without(1).is_err());
    assert_eq!(l.without(0).unwrap().players().collect::<Vec<_>>(), vec![2]);
}

/// Expected reward tensors for the three-player game, in row-major profile
/// order. The lone-profile entry where the third player's reward would be 7
/// is 6: only 6 satisfies both the defining formula and the symmetry
/// identity of the companion game.
const R3_EXPECTED: [[f64; 8]; 3] = [
    [10.0, 6.0, 6.0, 5.0, 5.0, 1.0, 1.0, 9.0],
    [9.0, 4.0, 5.0, 3.0, 5.0, 3.0, 1.0, 11.0],
    [10.0, 8.0, 5.0, 6.0, 6.0, 4.0, 4.0, 14.0],
];

#[test]
fn transform_three_player_golden() {
    let game = three_player();
    let companion = repercussion_transform(&game).unwrap();
    for (k, idx) in game.profile_indices().enumerate() {
        let p = PureProfile::from_indices(&game, &idx).unwrap();
        let loads = game.loads(&p);
        for n in 0..3 {
            let r = companion.reward(n, &loads[p.choice(n)]).unwrap();
            assert_eq!(r, R3_EXPECTED[n][k], "player {n}, profile {idx:?}");
        }
    }
}

const R23_EXPECTED: [[f64; 6]; 2] = [
    [7.0, -3.0, -3.0, 0.0, -11.0, 0.0],
    [12.0, 11.0, 10.0, 2.0, 0.0, 10.0],
];

#[test]
fn transform_two_by_three_golden() {
    let game = two_by_three();
    let companion = repercussion_transform(&game).unwrap();
    for (k, idx) in game.profile_indices().enumerate() {
        let p = PureProfile::from_indices(&game, &idx).unwrap();
        let loads = game.loads(&p);
        for n in 0..2 {
            let r = companion.reward(n, &loads[p.choice(n)]).unwrap();
            assert_eq!(r, R23_EXPECTED[n][k], "player {n}, profile {idx:?}");
        }
    }
}

#[test]
fn reward_equals_payoff_when_alone() {
    let game = two_by_three();
    let companion = repercussion_transform(&game).unwrap();
    // (B, C): both players alone on their resources.
    let p = profile(&game, &[B, C]);
    let loads = game.loads(&p);
    for n in 0..2 {
        let load = &loads[p.choice(n)];
        assert_eq!(
            companion.reward(n, load).unwrap(),
            game.payoff(n, load).unwrap()
        );
    }
}

#[test]
fn reward_rejects_absent_player() {
    let game = two_by_three();
    let companion = repercussion_transform(&game).unwrap();
    let l = LoadVector::from_players(A, 2, &[1]);
    assert!(matches!(
        companion.reward(0, &l),
        Err(Error::PlayerNotInLoad { .. })
    ));
}

#[test]
fn symmetry_accepts_two_by_two_family() {
    // ((a,A),(b,B);(c,C),(d,D)) with a = A + b - C and d = D + c - B.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let cap_a = rng.random_range(-9..=9) as f64;
        let b = rng.random_range(-9..=9) as f64;
        let cap_b = rng.random_range(-9..=9) as f64;
        let c = rng.random_range(-9..=9) as f64;
        let cap_c = rng.random_range(-9..=9) as f64;
        let cap_d = rng.random_range(-9..=9) as f64;
        let a = cap_a + b - cap_c;
        let d = cap_d + c - cap_b;
        let game = from_profile_payoffs(
            vec![vec![A, B], vec![A, B]],
            &[vec![a, b, c, d], vec![cap_a, cap_b, cap_c, cap_d]],
            0.0,
        )
        .unwrap();
        assert!(is_repercussion_game(&game, 1e-9).unwrap().holds());
    }
    assert!(is_repercussion_game(&two_by_two(), 1e-9).unwrap().holds());
}

#[test]
fn symmetry_accepts_companion_exhaustively() {
    let companion = repercussion_transform(&three_player()).unwrap();
    assert!(is_repercussion_game(companion.rewards(), 1e-9)
        .unwrap()
        .holds());
    let companion = repercussion_transform(&two_by_three()).unwrap();
    assert!(is_repercussion_game(companion.rewards(), 1e-9)
        .unwrap()
        .holds());
}

#[test]
fn symmetry_rejects_raw_two_by_three_with_witness() {
    let game = two_by_three();
    match is_repercussion_game(&game, 1e-9).unwrap() {
        SymmetryCheck::Holds => panic!("raw game should not satisfy the identity"),
        SymmetryCheck::Violated { mask, a, b, gap, .. } => {
            assert_eq!(mask.count_ones(), 2);
            assert_ne!(a, b);
            assert!(gap.abs() > 1e-9);
        }
    }
}

#[test]
fn recover_round_trips_three_player_companion() {
    let companion = repercussion_transform(&three_player()).unwrap();
    let recovered = recover_base_payoffs(companion.rewards(), 1e-9).unwrap();
    let again = repercussion_transform(&recovered).unwrap();
    let game = three_player();
    for idx in game.profile_indices() {
        let p = PureProfile::from_indices(&game, &idx).unwrap();
        let loads = game.loads(&p);
        for n in 0..3 {
            let load = &loads[p.choice(n)];
            let orig = companion.reward(n, load).unwrap();
            let rt = again.reward(n, load).unwrap();
            assert!(
                (orig - rt).abs() <= 1e-9,
                "round trip drifted: {orig} vs {rt}"
            );
            // Integer rewards must be recovered exactly after rounding.
            assert_eq!(rt.round(), orig);
        }
    }
}

#[test]
fn recover_single_player_load_is_identity() {
    let game = two_by_two();
    let recovered = recover_base_payoffs(&game, 1e-9).unwrap();
    let l0 = LoadVector::from_players(A, 2, &[0]);
    assert_eq!(
        recovered.payoff(0, &l0).unwrap(),
        game.payoff(0, &l0).unwrap()
    );
}

#[test]
fn recover_rejects_non_repercussion_games() {
    assert!(matches!(
        recover_base_payoffs(&two_by_three(), 1e-9),
        Err(Error::NotRepercussionGame { .. })
    ));
}

#[test]
fn peeling_sum_is_enumeration_order_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cfg = RandomGameConfig {
        n_players: 3,
        n_resources: 2,
        min_actions: 2,
        max_actions: 2,
        ..RandomGameConfig::default()
    };
    for _ in 0..50 {
        let base = random_allocation_game(&cfg, &mut rng).unwrap();
        let companion = repercussion_transform(&base).unwrap();
        let rewards = companion.rewards();
        let load = LoadVector::from_players(A, 3, &[0, 1, 2]);
        let orders: [[Player; 3]; 6] = [
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ];
        let reference = peeling_sum(rewards, &load, &orders[0]).unwrap();
        for order in &orders[1..] {
            let s = peeling_sum(rewards, &load, order).unwrap();
            assert!((s - reference).abs() <= 1e-9, "{s} vs {reference}");
        }
    }
}

#[test]
fn potential_pure_golden_values() {
    let g23 = two_by_three();
    assert_eq!(g23.potential_pure(&profile(&g23, &[B, C])).unwrap(), 10.0);
    assert_eq!(g23.potential_pure(&profile(&g23, &[A, A])).unwrap(), 9.0);

    let g3 = three_player();
    let companion = repercussion_transform(&g3).unwrap();
    let all_a = profile(&g3, &[A, A, A]);
    let all_b = profile(&g3, &[B, B, B]);
    // Potential (sum of base payoffs) vs sum of rewards: distinct numbers.
    assert_eq!(companion.potential_pure(&all_a).unwrap(), 19.0);
    assert_eq!(companion.potential_pure(&all_b).unwrap(), 20.0);
    assert_eq!(companion.reward_sum(&all_a).unwrap(), 29.0);
    assert_eq!(companion.reward_sum(&all_b).unwrap(), 34.0);
}

/// Independent brute-force expectation of the summed payoffs.
fn brute_force_potential(game: &AllocationInstance, q: &MixedProfile) -> f64 {
    let mut total = 0.0;
    for idx in game.profile_indices() {
        let p = PureProfile::from_indices(game, &idx).unwrap();
        let w: f64 = idx
            .iter()
            .enumerate()
            .map(|(n, &i)| q.row(n)[i])
            .product();
        total += w * game.potential_pure(&p).unwrap();
    }
    total
}

#[test]
fn potential_mixed_matches_pure_and_brute_force() {
    let g23 = two_by_three();
    let pure = MixedProfile::pure(&g23, &profile(&g23, &[B, C]));
    assert!((g23.potential_mixed(&pure).unwrap() - 10.0).abs() < 1e-12);

    let uniform = MixedProfile::uniform(&g23);
    let v = g23.potential_mixed(&uniform).unwrap();
    assert!((v - brute_force_potential(&g23, &uniform)).abs() < 1e-12);
    assert!((v - 6.0).abs() < 1e-12);
}

#[test]
fn potential_mixed_at_reference_mixed_point() {
    // (x, y, z) = (1/3, 5/6, 0) with x, y, z the probabilities of the first
    // resource; the potential there is 87/6 = 14.5.
    let g3 = three_player();
    let q = MixedProfile::new(
        &g3,
        vec![
            vec![1.0 / 3.0, 2.0 / 3.0],
            vec![5.0 / 6.0, 1.0 / 6.0],
            vec![0.0, 1.0],
        ],
    )
    .unwrap();
    let v = g3.potential_mixed(&q).unwrap();
    assert!((v - brute_force_potential(&g3, &q)).abs() < 1e-12);
    assert!((v - 14.5).abs() < 1e-12, "potential at mixed point: {v}");
}

#[test]
fn expected_payoff_pure_opponents_and_uniform() {
    let game = two_by_two();
    // Pure opponent on A: player 0's expected payoff on A is the shared value.
    let q = MixedProfile::new(&game, vec![vec![0.5, 0.5], vec![1.0, 0.0]]).unwrap();
    let both = LoadVector::from_players(A, 2, &[0, 1]);
    assert_eq!(
        game.expected_payoff(&q, 0, 0).unwrap(),
        game.payoff(0, &both).unwrap()
    );
    // Uniform opponent: arithmetic mean of shared and alone payoffs.
    let q = MixedProfile::uniform(&game);
    let alone = LoadVector::from_players(A, 2, &[0]);
    let expect = 0.5 * (game.payoff(0, &both).unwrap() + game.payoff(0, &alone).unwrap());
    assert!((game.expected_payoff(&q, 0, 0).unwrap() - expect).abs() < 1e-12);
    assert!((game.expected_payoff(&q, 0, 0).unwrap() - 2.5).abs() < 1e-12);
}

#[test]
fn expected_payoff_ignores_own_row() {
    let game = two_by_three();
    let q1 = MixedProfile::new(&game, vec![vec![0.9, 0.1], vec![0.2, 0.3, 0.5]]).unwrap();
    let q2 = MixedProfile::new(&game, vec![vec![0.1, 0.9], vec![0.2, 0.3, 0.5]]).unwrap();
    for i in 0..2 {
        let a = game.expected_payoff(&q1, 0, i).unwrap();
        let b = game.expected_payoff(&q2, 0, i).unwrap();
        assert_eq!(a, b);
    }
}

use crate::game::tests_support::random_interior as random_interior_profile;

#[test]
fn gradient_identity_finite_differences() {
    // Symmetric finite difference of the potential along one unnormalized
    // coordinate equals the expected reward in the companion game.
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let cfg = RandomGameConfig::default();
    for _ in 0..20 {
        let base = random_allocation_game(&cfg, &mut rng).unwrap();
        let companion = repercussion_transform(&base).unwrap();
        let q = random_interior_profile(&base, &mut rng);
        let h = 1e-3;
        for n in 0..base.n_players() {
            for i in 0..base.action_set(n).len() {
                let mut up = q.clone();
                up.rows_mut()[n][i] += h;
                let mut down = q.clone();
                down.rows_mut()[n][i] -= h;
                let fd = (base.potential_mixed(&up).unwrap()
                    - base.potential_mixed(&down).unwrap())
                    / (2.0 * h);
                let f = companion.rewards().expected_payoff(&q, n, i).unwrap();
                assert!(
                    (fd - f).abs() <= 1e-9,
                    "gradient mismatch at ({n},{i}): fd={fd}, f={f}"
                );
            }
        }
    }
}

#[test]
fn pure_nash_sets_golden() {
    let g23 = two_by_three();
    let companion = repercussion_transform(&g23).unwrap();
    let nash: Vec<Vec<ResourceId>> = companion
        .rewards()
        .pure_nash_set()
        .unwrap()
        .into_iter()
        .map(|p| p.choices().to_vec())
        .collect();
    assert_eq!(nash, vec![vec![A, A], vec![B, C]]);

    let base_nash: Vec<Vec<ResourceId>> = g23
        .pure_nash_set()
        .unwrap()
        .into_iter()
        .map(|p| p.choices().to_vec())
        .collect();
    assert_eq!(base_nash, vec![vec![B, C]]);

    let g3 = three_player();
    assert!(g3.pure_nash_set().unwrap().is_empty());
}

#[test]
fn companion_games_always_have_a_pure_nash() {
    let mut rng = ChaCha8Rng::seed_from_u64(1234);
    for round in 0..200 {
        let cfg = RandomGameConfig {
            n_players: 2 + (round % 3),
            n_resources: 3,
            ..RandomGameConfig::default()
        };
        let base = random_allocation_game(&cfg, &mut rng).unwrap();
        let companion = repercussion_transform(&base).unwrap();
        assert!(
            !companion.rewards().pure_nash_set().unwrap().is_empty(),
            "companion game without a pure Nash equilibrium (round {round})"
        );
    }
}

#[test]
fn shift_preserves_nash_set_and_bounds() {
    let g23 = two_by_three();
    let companion = repercussion_transform(&g23).unwrap();

    // c = 0 is the identity.
    let same = companion.rewards().shift_payoffs(0.0);
    for idx in g23.profile_indices() {
        let p = PureProfile::from_indices(&g23, &idx).unwrap();
        let loads = g23.loads(&p);
        for n in 0..2 {
            let l = &loads[p.choice(n)];
            assert_eq!(
                same.payoff(n, l).unwrap(),
                companion.reward(n, l).unwrap()
            );
        }
    }

    // Shift to make every reward at least 1.
    let (lo, _) = companion.rewards().payoff_bounds().unwrap();
    assert_eq!(lo, -11.0);
    let positive = companion.clone().with_positive_rewards(1.0).unwrap();
    let (lo2, _) = positive.rewards().payoff_bounds().unwrap();
    assert!(lo2 >= 1.0);
    assert_eq!(positive.shift(), 12.0);

    let nash: Vec<Vec<ResourceId>> = positive
        .rewards()
        .pure_nash_set()
        .unwrap()
        .into_iter()
        .map(|p| p.choices().to_vec())
        .collect();
    assert_eq!(nash, vec![vec![A, A], vec![B, C]]);
}

#[test]
fn matrix_builder_rejects_non_allocation_tensors() {
    // Player 0 alone on A gets -3 in (A,B) but -4 in (A,C): same load,
    // different payoff.
    let result = from_profile_payoffs(
        vec![vec![A, B], vec![A, B, C]],
        &[
            vec![6.0, -3.0, -4.0, 0.0, -1.0, 0.0],
            vec![3.0, 11.0, 10.0, 2.0, 1.0, 10.0],
        ],
        0.0,
    );
    assert!(matches!(result, Err(Error::NotAllocationGame { .. })));
}

#[test]
fn matrix_file_round_trip() {
    let text = include_str!("../../../../data/games/two_by_three.toml");
    let (game, file) = parse_game_toml(text).unwrap();
    let serialized = game_to_toml(&file).unwrap();
    let (game2, _) = parse_game_toml(&serialized).unwrap();
    for idx in game.profile_indices() {
        let p = PureProfile::from_indices(&game, &idx).unwrap();
        let loads = game.loads(&p);
        for n in 0..2 {
            let l = &loads[p.choice(n)];
            assert_eq!(game.payoff(n, l).unwrap(), game2.payoff(n, l).unwrap());
        }
    }
}

#[test]
fn tabulated_matches_oracle() {
    let base = two_by_three();
    let copy = base.clone();
    let oracle = AllocationInstance::from_oracle(base.action_sets().to_vec(), move |n, l| {
        copy.payoff(n, l).unwrap()
    })
    .unwrap();
    let table = oracle.tabulated().unwrap();
    assert!(table.is_table());
    for idx in base.profile_indices() {
        let p = PureProfile::from_indices(&base, &idx).unwrap();
        let loads = base.loads(&p);
        for n in 0..2 {
            let l = &loads[p.choice(n)];
            assert_eq!(base.payoff(n, l).unwrap(), table.payoff(n, l).unwrap());
        }
    }
}

mod properties {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        /// Forward direction of the characterization: every transformed
        /// game satisfies the symmetry identity.
        #[test]
        fn transform_yields_repercussion_game(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cfg = RandomGameConfig {
                n_players: 2 + (seed % 3) as usize,
                ..RandomGameConfig::default()
            };
            let base = random_allocation_game(&cfg, &mut rng).unwrap();
            let companion = repercussion_transform(&base).unwrap();
            prop_assert!(is_repercussion_game(companion.rewards(), 1e-9).unwrap().holds());
        }

        /// The pure-Nash set is invariant under payoff shifts.
        #[test]
        fn nash_set_invariant_under_shift(seed in any::<u64>(), c in -100.0f64..100.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let base = random_allocation_game(&RandomGameConfig::default(), &mut rng).unwrap();
            let before = base.pure_nash_set().unwrap();
            let after = base.shift_payoffs(c).pure_nash_set().unwrap();
            prop_assert_eq!(before, after);
        }
    }
}
