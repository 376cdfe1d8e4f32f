use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use netassoc::dynamics::{integrate, replicator_field};
use netassoc::fairness::{exhaustive_optimum, multistart_local_search};
use netassoc::game::{repercussion_transform, MixedProfile};
use netassoc::learning::{run_learning_scaled, RewardScale, StepPolicy, ThresholdRule};
use netassoc::sim::{run_scenario, ScenarioConfig, TopologyConfig};
use netassoc::wireless::{CellMember, CellState, CellModels};
use netassoc::{presets, Topology};

fn bench_replicator(c: &mut Criterion) {
    let game = presets::two_by_three_game();
    let companion = repercussion_transform(&game).unwrap();
    let q = MixedProfile::uniform(&game);
    c.bench_function("replicator_field_2x3", |b| {
        b.iter(|| replicator_field(companion.rewards(), black_box(&q)).unwrap())
    });
    c.bench_function("integrate_2x3_t10", |b| {
        b.iter(|| integrate(&companion, black_box(&q), 10.0, 0.01).unwrap())
    });
}

fn bench_learning(c: &mut Criterion) {
    let game = presets::two_by_three_game();
    let companion = repercussion_transform(&game)
        .unwrap()
        .with_positive_rewards(0.0)
        .unwrap();
    let policy = StepPolicy::css_medium();
    let scale = RewardScale::for_game(&companion, &policy).unwrap();
    let rule = ThresholdRule::default();
    c.bench_function("run_learning_2x3_css_m", |b| {
        b.iter(|| {
            run_learning_scaled(&companion, policy, &rule, scale, black_box(7), 5_000).unwrap()
        })
    });
}

fn bench_wireless(c: &mut Criterion) {
    let models = CellModels::default();
    let members: Vec<CellMember> = (0..20)
        .map(|u| CellMember {
            user: u,
            zone: u % 8,
        })
        .collect();
    let state = CellState {
        cell: 0,
        members,
    };
    c.bench_function("station_rewards_wimax_p20", |b| {
        b.iter(|| black_box(&state).rewards(&models))
    });

    let mut cfg = ScenarioConfig {
        topology: TopologyConfig {
            users: 20,
            wifi_cells: 10,
            choices_per_user: 3,
            file: None,
        },
        ..ScenarioConfig::default()
    };
    cfg.max_iters = 2_000;
    c.bench_function("run_scenario_20u_cus", |b| {
        b.iter(|| run_scenario(black_box(&cfg)).unwrap())
    });
}

fn bench_fairness(c: &mut Criterion) {
    let models = CellModels::default();
    let full = presets::fairness_topology().unwrap();
    let small = Topology {
        n_wifi: full.n_wifi,
        users: full.users[..10].to_vec(),
    };
    c.bench_function("exhaustive_optimum_10u", |b| {
        b.iter(|| exhaustive_optimum(black_box(&small), &models, 0.0, 100_000).unwrap())
    });
    c.bench_function("local_search_20u_10starts", |b| {
        b.iter(|| multistart_local_search(black_box(&full), &models, 0.0, 10, 1).unwrap())
    });
}

criterion_group!(
    benches,
    bench_replicator,
    bench_learning,
    bench_wireless,
    bench_fairness
);
criterion_main!(benches);
