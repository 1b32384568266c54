use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use splda::solver::step;
use splda::{
    derive_parameters, solve_subproblem, CompositeMinimaxProblem, InnerMethod, InnerSolverConfig, KlInstance, NormKind, Regime,
    SubproblemSpec, ToyId, ToyProblem2D,
};
use splda_bench::{linreg_fixture, planar_state};

fn subproblem_toy(c: &mut Criterion) {
    let toy = ToyProblem2D::new(ToyId::SineBilinear);
    let params = derive_parameters(toy.constants(), Regime::General, 100).unwrap();
    let s = planar_state(&toy).unwrap();
    let spec = SubproblemSpec::new(&toy, &s.x, &s.y, &s.z, params.lambda, params.r).unwrap();
    let inner = InnerSolverConfig::default();
    c.bench_function("subproblem/sine_bilinear", |b| b.iter(|| solve_subproblem(&toy, black_box(&spec), &inner).unwrap()));
}

fn plda_step_kl(c: &mut Criterion) {
    let kl = KlInstance::planar();
    let params = derive_parameters(kl.constants(), Regime::General, 1000).unwrap();
    let s = planar_state(&kl).unwrap();
    let inner = InnerSolverConfig::default();
    c.bench_function("step/kl_planar", |b| b.iter(|| step(&kl, black_box(&s), &params, &inner).unwrap()));
}

fn subproblem_linreg(c: &mut Criterion) {
    let mut group = c.benchmark_group("subproblem/linreg_n100_d10");
    group.sample_size(20);
    for (label, method) in [("admm", InnerMethod::Admm), ("dual", InnerMethod::AcceleratedDual)] {
        let (p, params, s) = linreg_fixture(100, 10, NormKind::L2).unwrap();
        let spec = SubproblemSpec::new(&p, &s.x, &s.y, &s.z, params.lambda, params.r).unwrap();
        let inner = InnerSolverConfig {
            method,
            target: Some(1e-6),
            strict: false,
            ..InnerSolverConfig::default()
        };
        group.bench_function(label, |b| b.iter(|| solve_subproblem(&p, black_box(&spec), &inner).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, subproblem_toy, plda_step_kl, subproblem_linreg);
criterion_main!(benches);
