use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use tailcop::empirical::empirical_tail_matrix;
use tailcop::fit::{fit, FitConfig};
use tailcop::{Family, PseudoObservations, RotatedMixture, UnitPair};

fn mixture() -> RotatedMixture {
    RotatedMixture::new(Family::Gumbel, [0.4, 0.1, 0.3, 0.2], [3.0, 1.5, 2.5, 2.0]).unwrap()
}

fn log_density(c: &mut Criterion) {
    let mix = mixture();
    let points: Vec<UnitPair> = mix.sample(1000, 1);
    c.bench_function("mixture log density x1000", |b| {
        b.iter(|| {
            points
                .iter()
                .map(|&p| mix.log_density(black_box(p)).unwrap())
                .sum::<f64>()
        })
    });
}

fn fitting(c: &mut Criterion) {
    let data = PseudoObservations::new(mixture().sample(2000, 2));
    let config = FitConfig::default();
    let mut group = c.benchmark_group("fit");
    group.sample_size(10);
    group.bench_function("gumbel mixture n=2000", |b| {
        b.iter(|| fit(black_box(&data), &config).unwrap())
    });
    group.finish();
}

fn empirical(c: &mut Criterion) {
    let data = PseudoObservations::new(mixture().sample(20_000, 3));
    c.bench_function("empirical tail matrix n=20000", |b| {
        b.iter(|| empirical_tail_matrix(black_box(&data), 0.95).unwrap())
    });
}

criterion_group!(benches, log_density, fitting, empirical);
criterion_main!(benches);
