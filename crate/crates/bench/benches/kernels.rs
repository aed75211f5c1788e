// SPDX-License-Identifier: Apache-2.0

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rdslab::entropy::{random_entropy, EntropyOptions, Partition, StartDistribution};
use rdslab::flows::{em_integrate, NoisePath};
use rdslab::lyapunov::{qr_lyapunov, MatrixCocycle};
use rdslab::measures::{build_ulam, stationary_vector};
use rdslab::{NoiseSequence, SkewState, StateSpace};
use rdslab_bench::{additive, ou};

fn ulam(c: &mut Criterion) {
    let mut g = c.benchmark_group("ulam");
    let k = additive("doubling", 0.05);
    for n in [500usize, 2000] {
        g.bench_with_input(BenchmarkId::new("assemble", n), &n, |b, &n| b.iter(|| build_ulam(&k, n).unwrap()));
        let op = build_ulam(&k, n).unwrap();
        g.bench_with_input(BenchmarkId::new("stationary", n), &op, |b, op| b.iter(|| stationary_vector(op).unwrap()));
    }
    g.finish();
}

fn lyapunov(c: &mut Criterion) {
    let k = additive("cat_map", 0.01);
    let cocycle = MatrixCocycle::derivative(k.clone());
    let start = SkewState::new(NoiseSequence::new(1, 0, k.symbol_width()), vec![0.3, 0.6]);
    c.bench_function("qr_lyapunov/cat_map/1e4", |b| {
        b.iter(|| qr_lyapunov(&cocycle, black_box(&start), 10_000, 1).unwrap())
    });
}

fn euler_maruyama(c: &mut Criterion) {
    let s = ou(0.2, 1e-3, 20.0);
    let path = NoisePath::generate(3, 0, 1, 1e-3, s.steps());
    c.bench_function("em_integrate/ou/2e4", |b| b.iter(|| em_integrate(&s, black_box(&[0.0]), &path).unwrap()));
    c.bench_function("noise_path/2e4", |b| b.iter(|| NoisePath::generate(3, black_box(1), 1, 1e-3, 20_000)));
}

fn entropy(c: &mut Criterion) {
    let k = additive("doubling", 0.05);
    let xi = Partition::dyadic(&StateSpace::circle(), 1);
    let opts = EntropyOptions { n_max: 10, omega_samples: 1, samples: 100_000, seed: 0 };
    c.bench_function("random_entropy/doubling/1e5", |b| {
        b.iter(|| random_entropy(k.as_ref(), &StartDistribution::Lebesgue, &xi, &opts).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = ulam, lyapunov, euler_maruyama, entropy
}
criterion_main!(benches);
