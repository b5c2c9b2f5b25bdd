use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use v2m_core::coloring::{ApexWeighting, ColoringSolver};
use v2m_core::experiments::{brute_force_maxcut, random_weighted_graph};
use v2m_core::machine::{euler_step, Direction, RelaxedSpinState, SolverParams};
use v2m_core::puzzles::rook_graph;

fn step(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let g = random_weighted_graph(200, 0.1, &mut rng);
    let state = RelaxedSpinState::random(200, &mut rng);
    c.bench_function("euler_step n=200", |b| {
        b.iter_batched_ref(
            || state.clone(),
            |s| euler_step(&g, s, 0.01, Direction::Ascent).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

fn latin(c: &mut Criterion) {
    let g = rook_graph(5).unwrap();
    c.bench_function("latin 5x5", |b| {
        b.iter(|| {
            ColoringSolver::new(&g, 5, 1.0)
                .unwrap()
                .apex(ApexWeighting::Degree)
                .unwrap()
                .params(SolverParams::solving())
                .solve()
                .unwrap()
        })
    });
}

fn brute_force(c: &mut Criterion) {
    let g = random_weighted_graph(16, 0.5, &mut ChaCha8Rng::seed_from_u64(2));
    c.bench_function("brute force n=16", |b| b.iter(|| brute_force_maxcut(&g).unwrap()));
}

criterion_group!(benches, step, latin, brute_force);
criterion_main!(benches);
