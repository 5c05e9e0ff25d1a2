use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use mslp_bench::random_lp;
use mslp_core::fixtures::desk3;
use mslp_core::lp::{solve_lp, solve_qp, QpProblem};
use mslp_core::oracle::solve_instance;
use mslp_core::process::SupportSampler;
use mslp_core::sddp::{sddp_run, SddpConfig};
use mslp_core::sdlp::{sdlp_iterate, SdlpConfig, SdlpRunState};
use std::hint::black_box;

fn lp_core(c: &mut Criterion) {
    let small = random_lp(1, 6, 8);
    let large = random_lp(2, 30, 40);
    c.bench_function("lp 6x9", |b| b.iter(|| solve_lp(black_box(&small)).unwrap()));
    c.bench_function("lp 30x41", |b| b.iter(|| solve_lp(black_box(&large)).unwrap()));
    let qp = QpProblem {
        lp: small.clone(),
        center: vec![0.5; 6],
        sigma: 1.0,
    };
    c.bench_function("qp 6x9", |b| b.iter(|| solve_qp(black_box(&qp)).unwrap()));
}

fn methods(c: &mut Criterion) {
    let inst = desk3();
    c.bench_function("desk3 extensive form", |b| b.iter(|| solve_instance(black_box(&inst)).unwrap()));
    c.bench_function("desk3 sddp to convergence", |b| {
        b.iter(|| sddp_run(black_box(&inst), &SddpConfig::default()).unwrap())
    });
    // One SDLP iteration on a run that has already grown its pools.
    let mut warm = SdlpRunState::new(&inst, SdlpConfig::default()).unwrap();
    let mut src = SupportSampler::new(&inst, 0);
    for _ in 0..500 {
        sdlp_iterate(&inst, &mut warm, &mut src).unwrap();
    }
    c.bench_function("desk3 sdlp iteration at k=500", |b| {
        b.iter_batched(
            || (warm.clone(), src.clone()),
            |(mut run, mut s)| sdlp_iterate(&inst, &mut run, &mut s).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, lp_core, methods);
criterion_main!(benches);
