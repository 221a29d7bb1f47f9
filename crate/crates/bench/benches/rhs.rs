use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use wavekin::dynamics::{Nonlinear, StepWorkspace, Workspace};
use wavekin::{Backend, Integrator, IntegratorConfig};
use wavekin_bench::{grid, invariant_field};

fn rhs(c: &mut Criterion) {
    let mut group = c.benchmark_group("nonlinear_rhs");
    for n in [8u32, 16] {
        let g = grid(n);
        let field = invariant_field(&g, 1);
        for backend in [Backend::Direct, Backend::Fft] {
            let nl = Nonlinear::new(&g, 0.2, backend);
            let mut out = vec![Default::default(); g.len()];
            let mut ws = Workspace::default();
            group.bench_with_input(BenchmarkId::new(format!("{backend:?}"), n), &n, |b, _| {
                b.iter(|| nl.rhs_into(&field.values, &mut out, &mut ws))
            });
        }
    }
    group.finish();
}

fn step(c: &mut Criterion) {
    let mut group = c.benchmark_group("integrator_step");
    for n in [8u32, 16] {
        let g = grid(n);
        let integ = Integrator::new(&g, IntegratorConfig { eps: 0.2, delta: 0.3, ..Default::default() })
            .expect("valid config");
        let mut values = invariant_field(&g, 2).values;
        let mut noise = wavekin::rng::noise_stream(2, 0);
        let mut ws = StepWorkspace::default();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| integ.step(&mut values, &mut noise, &mut ws))
        });
    }
    group.finish();
}

criterion_group!(benches, rhs, step);
criterion_main!(benches);
