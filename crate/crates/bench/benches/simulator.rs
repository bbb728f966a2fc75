use cenizk::quantum::{Basis, Bb84Descriptor, EprNetwork, Role, SparseState};
use cenizk::rng::stream;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn bb84(c: &mut Criterion) {
    let mut g = c.benchmark_group("bb84");
    for width in [4usize, 8, 12] {
        let mut rng = stream(1, "bench/bb84");
        let desc = Bb84Descriptor::random(width, &mut rng);
        g.bench_with_input(BenchmarkId::new("prep", width), &desc, |b, d| b.iter(|| SparseState::prep_bb84(black_box(d))));
        g.bench_with_input(BenchmarkId::new("measure_x", width), &desc, |b, d| {
            let idx: Vec<usize> = (0..width).collect();
            let bases = vec![Basis::X; width];
            b.iter(|| {
                let mut s = SparseState::prep_bb84(d);
                s.measure(&idx, &bases, &mut rng).unwrap()
            })
        });
    }
    g.finish();
}

fn epr_network(c: &mut Criterion) {
    let mut rng = stream(2, "bench/epr");
    c.bench_function("epr/measure_block_k6_x1000", |b| {
        b.iter(|| {
            let mut net = EprNetwork::new(1000, 6).unwrap();
            for i in 0..1000 {
                black_box(net.measure_block(Role::Prover, i, 0b101010, &mut rng).unwrap());
                black_box(net.measure_block(Role::Verifier, i, 0b101010, &mut rng).unwrap());
            }
        })
    });
}

criterion_group!(benches, bb84, epr_network);
criterion_main!(benches);
