use cenizk::attacks::strawman::{split_attack, StrawmanParams};
use cenizk::crs_nizk::{CrsNizkCrs, CrsScheme};
use cenizk::epr_nizk::{epr_cert, epr_del, epr_prove, epr_setup, epr_verify};
use cenizk::harness::{run_session, ProtocolId};
use cenizk::nizk::{toy_encode, ToyNizk};
use cenizk::rng::stream;
use cenizk::BitString;
use cenizk_bench::{acceptance_session, small_epr, triangle};
use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

fn epr(c: &mut Criterion) {
    let (x, w) = triangle();
    let p = small_epr(4);
    let mut rng = stream(3, "bench/epr-session");
    c.bench_function("epr/honest_session_small", |b| {
        b.iter(|| {
            let (crs, mut net) = epr_setup(p, &mut rng).unwrap();
            let (proof, st) = epr_prove(&crs, &mut net, &x, &w, &mut rng).unwrap();
            let (ok, res) = epr_verify(&crs, &mut net, &x, &proof, &mut rng).unwrap();
            let cert = epr_del(&mut net, &res, &mut rng).unwrap();
            black_box(ok && epr_cert(&cert, &st))
        })
    });
    let mut g = c.benchmark_group("epr/acceptance_scale");
    g.sample_size(10);
    let params = acceptance_session(ProtocolId::Epr);
    g.bench_function("session", |b| b.iter(|| run_session(&params, 1).unwrap()));
    g.finish();
}

fn crs(c: &mut Criterion) {
    let scheme = CrsScheme::new(ToyNizk, 2);
    let crs = CrsNizkCrs { crs_in: (), crs_out: () };
    let w = BitString::from_u64(0b0110, 4);
    let x = toy_encode(&w).unwrap();
    let mut rng = stream(4, "bench/crs");
    c.bench_function("crs/prove_verify_cert", |b| {
        b.iter(|| {
            let (sigma, key) = scheme.prove(&crs, &x, &w, &mut rng).unwrap();
            let (ok, back) = scheme.verify(&crs, &x, sigma, &mut rng).unwrap();
            black_box(ok && scheme.cert(&key, back, &mut rng).unwrap())
        })
    });
}

fn strawman(c: &mut Criterion) {
    let (x, w) = triangle();
    let sp = StrawmanParams::new(16, 4).unwrap();
    let mut rng = stream(5, "bench/strawman");
    c.bench_function("strawman/split_attack", |b| b.iter(|| split_attack(sp, &x, &w, &mut rng).unwrap()));
}

criterion_group!(benches, epr, crs, strawman);
criterion_main!(benches);
