use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use srlw_bench::{smooth_state, two_mode_target};
use srlw_core::{
    biorthogonal, moving_frequencies, nonlinearity_g, penalty_sweep, semigroup_apply, spectral_controllability_probe,
    ApproxControlOptions, BoundedState, BumpProfile, MovingSystem, TorusState, XsNorm,
};

fn semigroup(c: &mut Criterion) {
    let mut group = c.benchmark_group("semigroup_apply");
    for cutoff in [16, 64, 256] {
        let st = smooth_state(cutoff);
        group.bench_with_input(BenchmarkId::from_parameter(cutoff), &st, |b, st| {
            b.iter(|| semigroup_apply(black_box(st), black_box(3.7)))
        });
    }
    group.finish();
}

fn nonlinearity(c: &mut Criterion) {
    let mut group = c.benchmark_group("nonlinearity_g");
    for cutoff in [16, 64, 256] {
        let st = smooth_state(cutoff);
        group.bench_with_input(BenchmarkId::from_parameter(cutoff), &st, |b, st| {
            b.iter(|| nonlinearity_g(black_box(st), 2).unwrap())
        });
    }
    group.finish();
}

fn synthesis(c: &mut Criterion) {
    let family = moving_frequencies(3.0, 8, 7.0).unwrap();
    c.bench_function("biorthogonal_N8", |b| b.iter(|| biorthogonal(black_box(&family), 0.0).unwrap()));

    let sys = MovingSystem::new(3.0, 7.0, 8).unwrap();
    let bump = BumpProfile::one_plus_cos();
    let norm = XsNorm::default();
    let u0 = TorusState::zeros(8);
    let ut = smooth_state(8);
    c.bench_function("moving_control_N8", |b| {
        b.iter(|| sys.synthesize(black_box(&u0), black_box(&ut), &bump, &norm).unwrap())
    });
}

fn high_precision(c: &mut Criterion) {
    let mut group = c.benchmark_group("high_precision");
    group.sample_size(10);
    group.bench_function("probe_M8_512bit", |b| b.iter(|| spectral_controllability_probe(1, 8, 10.0, 512).unwrap()));
    let opts = ApproxControlOptions { state_modes: 8, precision_bits: 256, ..ApproxControlOptions::default() };
    let a0 = BoundedState::zeros(8);
    let target = two_mode_target();
    group.bench_function("approx_control_D20_256bit", |b| {
        b.iter(|| penalty_sweep(&a0, &target, 10.0, 20, &[1e-6], &opts).unwrap())
    });
    group.finish();
}

criterion_group!(benches, semigroup, nonlinearity, synthesis, high_precision);
criterion_main!(benches);
