use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use wavekin::census::{enumerate_resonant_modulus, scan_small_denominators, ScanOrder};
use wavekin::EtaValue;
use wavekin_bench::grid;

fn census(c: &mut Criterion) {
    let eta = EtaValue::sqrt(2).expect("2 is not a square");
    let mut group = c.benchmark_group("census");
    group.sample_size(10);
    for n in [8u32, 16] {
        let g = grid(n);
        group.bench_with_input(BenchmarkId::new("three_wave", n), &n, |b, _| {
            b.iter(|| scan_small_denominators(&g, &eta, ScanOrder::ThreeWave).expect("scan"))
        });
    }
    let g = grid(8);
    group.bench_function("modulus_8", |b| {
        b.iter(|| enumerate_resonant_modulus(&g, (12, 4), &eta).expect("m is on the lattice"))
    });
    group.finish();
}

criterion_group!(benches, census);
criterion_main!(benches);
